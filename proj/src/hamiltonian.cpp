#include "releq/hamiltonian.hpp"

#include <cmath>

#include "releq/errors.hpp"

namespace releq {

namespace {

double grad_step(double fd_step, const Vec& z) {
  const double h = fd_step * (1.0 + z.norm());
  if (z.norm() + h == z.norm())
    throw FdStepDegenerate("finite-difference step underflows at this point");
  return h;
}

// Second differences are most accurate near eps^(1/4).
double hess_step(const Vec& z) {
  return std::pow(2.2e-16, 0.25) * (1.0 + z.norm());
}

} // namespace

Vec HamiltonianModel::fd_gradient(const Vec& z) const {
  const double h = grad_step(fd_step, z);
  Vec g(z.size());
  Vec zp = z, zm = z;
  for (int i = 0; i < z.size(); ++i) {
    zp(i) += h;
    zm(i) -= h;
    g(i) = (value(zp) - value(zm)) / (2.0 * h);
    zp(i) = z(i);
    zm(i) = z(i);
  }
  return g;
}

Mat HamiltonianModel::fd_hessian(const Vec& z) const {
  const double h = hess_step(z);
  if (z.norm() + h == z.norm())
    throw FdStepDegenerate("finite-difference step underflows at this point");
  const int n = static_cast<int>(z.size());
  Mat hm(n, n);
  const double f0 = value(z);
  Vec w = z;
  for (int i = 0; i < n; ++i) {
    w(i) = z(i) + h;
    const double fp = value(w);
    w(i) = z(i) - h;
    const double fm = value(w);
    w(i) = z(i);
    hm(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      w(i) = z(i) + h; w(j) = z(j) + h;
      const double fpp = value(w);
      w(j) = z(j) - h;
      const double fpm = value(w);
      w(i) = z(i) - h; w(j) = z(j) + h;
      const double fmp = value(w);
      w(j) = z(j) - h;
      const double fmm = value(w);
      w(i) = z(i); w(j) = z(j);
      hm(i, j) = hm(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
    }
  return hm;
}

Vec HamiltonianModel::grad(const Vec& z) const {
  return gradient ? gradient(z) : fd_gradient(z);
}

Mat HamiltonianModel::hess(const Vec& z) const {
  Mat h = hessian ? hessian(z) : fd_hessian(z);
  return 0.5 * (h + h.transpose());
}

double Polynomial::value(const Vec& x) const {
  double s = 0.0;
  for (const Term& t : terms) {
    double m = t.coeff;
    for (int i = 0; i < nvars; ++i)
      for (int e = 0; e < t.expo[i]; ++e) m *= x(i);
    s += m;
  }
  return s;
}

Vec Polynomial::gradient(const Vec& x) const {
  Vec g = Vec::Zero(nvars);
  for (const Term& t : terms)
    for (int i = 0; i < nvars; ++i) {
      if (t.expo[i] == 0) continue;
      double m = t.coeff * t.expo[i];
      for (int j = 0; j < nvars; ++j) {
        const int e = t.expo[j] - (j == i ? 1 : 0);
        for (int r = 0; r < e; ++r) m *= x(j);
      }
      g(i) += m;
    }
  return g;
}

Mat Polynomial::hessian(const Vec& x) const {
  Mat h = Mat::Zero(nvars, nvars);
  for (const Term& t : terms)
    for (int i = 0; i < nvars; ++i) {
      if (t.expo[i] == 0) continue;
      for (int j = 0; j < nvars; ++j) {
        const int ej = t.expo[j] - (j == i ? 1 : 0);
        if (ej <= 0 && j == i && t.expo[i] < 2) continue;
        double factor = t.coeff * t.expo[i] * (j == i ? t.expo[i] - 1 : t.expo[j]);
        if (factor == 0.0) continue;
        double m = factor;
        for (int l = 0; l < nvars; ++l) {
          int e = t.expo[l];
          if (l == i) --e;
          if (l == j) --e;
          for (int r = 0; r < e; ++r) m *= x(l);
        }
        h(i, j) += m;
      }
    }
  return 0.5 * (h + h.transpose());
}

HamiltonianModel Polynomial::to_hamiltonian() const {
  HamiltonianModel hm;
  Polynomial p = *this;
  hm.value = [p](const Vec& z) { return p.value(z); };
  hm.gradient = [p](const Vec& z) { return p.gradient(z); };
  hm.hessian = [p](const Vec& z) { return p.hessian(z); };
  return hm;
}

} // namespace releq
