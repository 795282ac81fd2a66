#pragma once

#include <functional>
#include <vector>

#include "releq/types.hpp"

namespace releq {

/// Energy function with optional analytic derivatives. When a derivative
/// callback is absent the corresponding central finite difference is used.
struct HamiltonianModel {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;  // may be empty
  std::function<Mat(const Vec&)> hessian;   // may be empty
  double fd_step = kDefaultFdStep;

  double operator()(const Vec& z) const { return value(z); }

  Vec grad(const Vec& z) const;
  Mat hess(const Vec& z) const;

  /// Central differences of `value`; also used to cross-check analytic backends.
  Vec fd_gradient(const Vec& z) const;
  Mat fd_hessian(const Vec& z) const;
};

/// Sparse polynomial in the phase-space coordinates with exact derivatives.
struct Polynomial {
  struct Term {
    double coeff = 0.0;
    std::vector<int> expo;  // one exponent per coordinate
  };
  int nvars = 0;
  std::vector<Term> terms;

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;

  HamiltonianModel to_hamiltonian() const;
};

} // namespace releq
