#pragma once

#include <vector>

#include "remrate/linalg.hpp"

namespace remrate::model {

using linalg::SymMatrix;

// Nonnegative auxiliary rates r_i, one per encoder, in nats per symbol.
struct RateAllocation {
  std::vector<double> r;

  RateAllocation() = default;
  explicit RateAllocation(std::vector<double> rates);
  static RateAllocation zero(int L) { return RateAllocation(std::vector<double>(L, 0.0)); }
  static RateAllocation uniform(int L, double value) {
    return RateAllocation(std::vector<double>(L, value));
  }
  int size() const { return static_cast<int>(r.size()); }
};

// Source covariance plus independent per-encoder observation noise.
// Immutable after construction; the precision matrix of the source is
// computed once up front (closed form for the builders, eigendecomposition
// for loaded models).
class SourceSpec {
 public:
  SourceSpec(SymMatrix cov_x, std::vector<double> noise_var);

  int dim() const { return cov_x_.dim(); }
  const SymMatrix& cov_x() const { return cov_x_; }
  const SymMatrix& precision_x() const { return precision_x_; }
  const std::vector<double>& noise_var() const { return noise_var_; }
  const std::vector<double>& cov_eigenvalues() const { return cov_eig_; }

  double c(int i) const { return 1.0 / noise_var_[i]; }
  double a_diag(int i) const { return precision_x_(i, i); }
  double trace_cov() const { return cov_x_.trace(); }

  bool identical_noise(double rel_tol = 1e-12) const;

 private:
  friend SourceSpec build_equicorrelated(int, double, const std::vector<double>&);
  friend SourceSpec build_circulant4(double, const std::vector<double>&);
  SourceSpec(SymMatrix cov_x, SymMatrix precision_x, std::vector<double> noise_var);
  void validate();

  SymMatrix cov_x_;
  SymMatrix precision_x_;
  std::vector<double> noise_var_;
  std::vector<double> cov_eig_;
};

// Sum mean-squared distortion budget; the nontrivial range is
// 0 < d < tr(cov_x), larger budgets make the region the full orthant.
struct DistortionBudget {
  double d;
  DistortionBudget(double d, const SourceSpec& spec);
};

// Closed-form coefficients of the equicorrelated inverse: the inverse has
// diagonal a and off-diagonal -b.
struct EquicorrCoeffs {
  double a;
  double b;
};
EquicorrCoeffs equicorr_inverse_coeffs(int L, double rho);

// Unit-variance source with correlation rho between every pair.
// Requires -1/(L-1) < rho < 1.
SourceSpec build_equicorrelated(int L, double rho, const std::vector<double>& noise_var);

// The 4x4 cyclic source with first row (1, rho, 0, rho); requires |rho| < 1/2.
SourceSpec build_circulant4(double rho, const std::vector<double>& noise_var);

// Diagonal precision added by the sharpened observation noise:
// entry i is (1 - e^{-2 r_i}) / noise_var_i, exactly 0 at r_i = 0.
SymMatrix noise_precision(const SourceSpec& spec, const RateAllocation& r);

// precision_x + noise_precision; positive definite.
SymMatrix info_matrix(const SourceSpec& spec, const RateAllocation& r);

// tr[(precision_x + noise_precision)^{-1}] = sum_i 1/alpha_i, the best
// achievable sum MSE at allocation r; nonincreasing in every r_i.
double mmse_trace(const SourceSpec& spec, const RateAllocation& r);

bool in_B(const SourceSpec& spec, const RateAllocation& r, double D);
bool on_boundary_B(const SourceSpec& spec, const RateAllocation& r, double D, double tol);

// Entrywise invariance of cov_x under the cyclic index shift, plus
// identical noise variances.
bool cyclic_shift_invariant(const SourceSpec& spec, double rel_tol = 1e-12);

// The unique common rate with phi(r) = sum_i 1/beta_i(r) = D, for cyclic
// shift invariant specs with identical noise. Bisection; residual
// |phi(r) - D| <= 1e-10 * D.
double r_star(const SourceSpec& spec, double D);

// Common-rate boundary point for a general spec: solves
// mmse_trace(r * ones) = D on the diagonal ray.
double symmetric_boundary_r(const SourceSpec& spec, double D);

// Scales r along its ray until mmse_trace = D. Requires r != 0 and a
// reachable budget along the ray.
RateAllocation project_to_boundary(const SourceSpec& spec, const RateAllocation& r, double D);

}  // namespace remrate::model
