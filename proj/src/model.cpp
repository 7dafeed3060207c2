#include "remrate/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "remrate/common.hpp"

namespace remrate::model {

RateAllocation::RateAllocation(std::vector<double> rates) : r(std::move(rates)) {
  if (r.empty()) throw InvalidInput("RateAllocation: empty rate vector");
  for (double x : r)
    if (!std::isfinite(x) || x < 0.0)
      throw InvalidInput("RateAllocation: rates must be finite and >= 0");
}

SourceSpec::SourceSpec(SymMatrix cov_x, std::vector<double> noise_var)
    : cov_x_(std::move(cov_x)), noise_var_(std::move(noise_var)) {
  validate();
  precision_x_ = linalg::inverse_from_eig(linalg::eig_sym(cov_x_));
}

SourceSpec::SourceSpec(SymMatrix cov_x, SymMatrix precision_x, std::vector<double> noise_var)
    : cov_x_(std::move(cov_x)),
      precision_x_(std::move(precision_x)),
      noise_var_(std::move(noise_var)) {
  validate();
}

void SourceSpec::validate() {
  if (static_cast<int>(noise_var_.size()) != cov_x_.dim())
    throw InvalidInput("SourceSpec: noise_var length must equal the source dimension");
  for (double v : noise_var_)
    if (!std::isfinite(v) || v <= 0.0)
      throw InvalidInput("SourceSpec: noise variances must be finite and > 0");
  const linalg::SpectralDecomp d = linalg::eig_sym(cov_x_);
  if (d.eigenvalues.front() <= 1e-12 * d.eigenvalues.back())
    throw InvalidInput("SourceSpec: cov_x is not positive definite");
  cov_eig_ = d.eigenvalues;
}

bool SourceSpec::identical_noise(double rel_tol) const {
  const double v0 = noise_var_[0];
  for (double v : noise_var_)
    if (std::abs(v - v0) > rel_tol * std::abs(v0)) return false;
  return true;
}

DistortionBudget::DistortionBudget(double d_, const SourceSpec& spec) : d(d_) {
  if (!std::isfinite(d) || d <= 0.0) throw InvalidInput("DistortionBudget: D must be > 0");
  if (d >= spec.trace_cov())
    throw InvalidInput("DistortionBudget: D >= tr(cov_x) makes the region the full orthant");
}

EquicorrCoeffs equicorr_inverse_coeffs(int L, double rho) {
  if (L < 1) throw InvalidInput("equicorr_inverse_coeffs: L must be >= 1");
  if (L >= 2 && (rho <= -1.0 / (L - 1) || rho >= 1.0))
    throw InvalidInput("equicorr_inverse_coeffs: need -1/(L-1) < rho < 1");
  if (L == 1) return {1.0, 0.0};
  const double den = (1.0 - rho) * (1.0 + (L - 1) * rho);
  return {(1.0 + (L - 2) * rho) / den, rho / den};
}

SourceSpec build_equicorrelated(int L, double rho, const std::vector<double>& noise_var) {
  const EquicorrCoeffs co = equicorr_inverse_coeffs(L, rho);
  SymMatrix cov(L), prec(L);
  for (int i = 0; i < L; ++i)
    for (int j = i; j < L; ++j) {
      cov.set(i, j, i == j ? 1.0 : rho);
      prec.set(i, j, i == j ? co.a : -co.b);
    }
  return SourceSpec(std::move(cov), std::move(prec), noise_var);
}

SourceSpec build_circulant4(double rho, const std::vector<double>& noise_var) {
  if (std::abs(rho) >= 0.5) throw InvalidInput("build_circulant4: need |rho| < 1/2");
  SymMatrix cov(4);
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      const int d = (j - i) % 4;
      cov.set(i, j, d == 0 ? 1.0 : (d == 2 ? 0.0 : rho));
    }
  // Inverse of a circulant is circulant; first row via the DFT eigenvalues
  // (1 +- 2 rho, 1, 1).
  const double det = 1.0 - 4.0 * rho * rho;
  const double m0 = (1.0 - 2.0 * rho * rho) / det;
  const double m1 = -rho / det;
  const double m2 = 2.0 * rho * rho / det;
  SymMatrix prec(4);
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      const int d = (j - i) % 4;
      prec.set(i, j, d == 0 ? m0 : (d == 2 ? m2 : m1));
    }
  return SourceSpec(std::move(cov), std::move(prec), noise_var);
}

SymMatrix noise_precision(const SourceSpec& spec, const RateAllocation& r) {
  const int L = spec.dim();
  if (r.size() != L) throw InvalidInput("noise_precision: rate vector length mismatch");
  SymMatrix m(L);
  for (int i = 0; i < L; ++i)
    m.set(i, i, -std::expm1(-2.0 * r.r[i]) * spec.c(i) + 0.0);
  return m;
}

SymMatrix info_matrix(const SourceSpec& spec, const RateAllocation& r) {
  const int L = spec.dim();
  if (r.size() != L) throw InvalidInput("info_matrix: rate vector length mismatch");
  SymMatrix m = spec.precision_x();
  for (int i = 0; i < L; ++i)
    m.set(i, i, m(i, i) - std::expm1(-2.0 * r.r[i]) * spec.c(i));
  return m;
}

double mmse_trace(const SourceSpec& spec, const RateAllocation& r) {
  return linalg::trace_inverse_pivoted(info_matrix(spec, r));
}

bool in_B(const SourceSpec& spec, const RateAllocation& r, double D) {
  return mmse_trace(spec, r) <= D;
}

bool on_boundary_B(const SourceSpec& spec, const RateAllocation& r, double D, double tol) {
  return std::abs(mmse_trace(spec, r) - D) <= tol * D;
}

bool cyclic_shift_invariant(const SourceSpec& spec, double rel_tol) {
  const int L = spec.dim();
  if (!spec.identical_noise(rel_tol)) return false;
  const SymMatrix& s = spec.cov_x();
  const double tol = rel_tol * std::max(1.0, s.max_abs());
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j)
      if (std::abs(s((i + 1) % L, (j + 1) % L) - s(i, j)) > tol) return false;
  return true;
}

namespace {

// phi(r) = sum_i 1/beta_i(r) on the common-rate ray of a cyclic spec.
double phi_cyclic(const SourceSpec& spec, double r) {
  const double cinv = spec.c(0);
  double s = 0.0;
  for (double lam : spec.cov_eigenvalues()) s += 1.0 / (1.0 / lam - std::expm1(-2.0 * r) * cinv);
  return s;
}

double bisect_decreasing(const std::function<double(double)>& g, double target, double lo,
                         double hi, double rel_residual) {
  // g decreasing, g(lo) > target > g(hi); bisect until the residual bound.
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 500; ++it) {
    mid = 0.5 * (lo + hi);
    const double v = g(mid);
    if (std::abs(v - target) <= rel_residual * std::abs(target)) return mid;
    if (v > target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-17 * (1.0 + hi)) break;
  }
  return mid;
}

}  // namespace

double r_star(const SourceSpec& spec, double D) {
  if (!cyclic_shift_invariant(spec))
    throw InvalidInput("r_star: spec is not cyclic shift invariant with identical noise");
  const double phi0 = phi_cyclic(spec, 0.0);
  double phi_inf = 0.0;
  for (double lam : spec.cov_eigenvalues()) phi_inf += 1.0 / (1.0 / lam + spec.c(0));
  if (!(phi_inf < D && D < phi0))
    throw Infeasible("r_star: D outside (phi(inf), phi(0))");
  double hi = 1.0;
  while (phi_cyclic(spec, hi) > D) hi *= 2.0;
  return bisect_decreasing([&](double r) { return phi_cyclic(spec, r); }, D, 0.0, hi, 1e-12);
}

double symmetric_boundary_r(const SourceSpec& spec, double D) {
  auto g = [&](double r) { return mmse_trace(spec, RateAllocation::uniform(spec.dim(), r)); };
  const double g0 = g(0.0);
  if (D >= g0) return 0.0;
  double hi = 1.0;
  while (g(hi) > D) {
    hi *= 2.0;
    if (hi > 64.0) throw Infeasible("symmetric_boundary_r: budget unreachable on the diagonal ray");
  }
  return bisect_decreasing(g, D, 0.0, hi, 1e-13);
}

RateAllocation project_to_boundary(const SourceSpec& spec, const RateAllocation& r, double D) {
  double norm = 0.0;
  for (double x : r.r) norm = std::max(norm, x);
  if (norm == 0.0) throw InvalidInput("project_to_boundary: r must be nonzero");

  auto scaled = [&](double s) {
    std::vector<double> v(r.r.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = s * r.r[i];
    return RateAllocation(std::move(v));
  };
  auto g = [&](double s) { return mmse_trace(spec, scaled(s)); };
  if (D >= g(0.0)) throw InvalidInput("project_to_boundary: D >= tr(cov_x), ray starts inside");
  double hi = 1.0;
  while (g(hi) > D) {
    hi *= 2.0;
    if (hi * norm > 256.0)
      throw Infeasible("project_to_boundary: budget unreachable along this ray");
  }
  const double s = bisect_decreasing(g, D, 0.0, hi, 1e-13);
  return scaled(s);
}

}  // namespace remrate::model
