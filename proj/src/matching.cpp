#include "remrate/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "remrate/waterfill.hpp"

namespace remrate::matching {

const char* to_string(ConditionId id) {
  switch (id) {
    case ConditionId::MD_sampled: return "MD_sampled";
    case ConditionId::Lemma3: return "Lemma3";
    case ConditionId::Theorem4: return "Theorem4";
    case ConditionId::Corollary4: return "Corollary4";
    case ConditionId::Theorem6: return "Theorem6";
    case ConditionId::Theorem7: return "Theorem7";
    case ConditionId::Theorem8_window: return "Theorem8_window";
    case ConditionId::Theorem9: return "Theorem9";
  }
  return "?";
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    case Verdict::not_applicable: return "not_applicable";
  }
  return "?";
}

std::vector<model::RateAllocation> sample_B(const model::SourceSpec& spec, double D, int n,
                                            SplitMix64& rng, double cap) {
  const int L = spec.dim();
  std::vector<model::RateAllocation> out;
  out.reserve(n);
  long attempts = 0;
  const long max_attempts = 2000L * std::max(n, 1);
  while (static_cast<int>(out.size()) < n) {
    if (++attempts > max_attempts)
      throw Infeasible("sample_B: acceptance region too small inside the sample box");
    std::vector<double> r(L);
    for (int i = 0; i < L; ++i) r[i] = rng.uniform(0.0, cap);
    model::RateAllocation ra(std::move(r));
    if (model::mmse_trace(spec, ra) <= D) out.push_back(std::move(ra));
  }
  return out;
}

namespace {

// Parameters of the saturated matrix precision_x + diag(c).
linalg::SymMatrix saturated_info(const model::SourceSpec& spec) {
  linalg::SymMatrix m = spec.precision_x();
  for (int i = 0; i < spec.dim(); ++i) m.set(i, i, m(i, i) + spec.c(i));
  return m;
}

}  // namespace

MatchingReport check_md_sampled(const model::SourceSpec& spec, double D, int n_samples,
                                std::uint64_t seed) {
  const int L = spec.dim();
  SplitMix64 rng(seed);
  const std::vector<model::RateAllocation> samples = sample_B(spec, D, n_samples, rng);

  constexpr double step = 1e-4;
  constexpr double md_tol = 1e-8;

  MatchingReport rep{ConditionId::MD_sampled, Verdict::holds, 0.0, {}, n_samples, ""};
  double worst = std::numeric_limits<double>::infinity();  // min of md_tol - diff
  std::vector<double> worst_point;
  for (const model::RateAllocation& r : samples) {
    const double theta0 = waterfill::theta(spec, r, D);
    for (int i = 0; i < L; ++i) {
      model::RateAllocation bumped = r;
      bumped.r[i] += step;  // increasing r_i stays inside B_L(D)
      const double h0 = std::exp(-2.0 * r.r[i]) * theta0;
      const double h1 = std::exp(-2.0 * bumped.r[i]) * waterfill::theta(spec, bumped, D);
      const double diff = (h1 - h0) / step;
      const double margin = md_tol - diff;
      if (margin < worst) {
        worst = margin;
        worst_point = r.r;
      }
    }
  }
  rep.slack = worst;
  rep.verdict = worst >= 0.0 ? Verdict::holds : Verdict::fails;
  if (!worst_point.empty()) rep.witnesses.push_back(worst_point);
  return rep;
}

double lemma3_margin(const model::SourceSpec& spec, const model::RateAllocation& r) {
  const linalg::SpectralDecomp d = linalg::eig_sym(model::info_matrix(spec, r));
  const double lhs = 1.0 / d.eigenvalues.front() - 1.0 / d.eigenvalues.back();
  double margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < spec.dim(); ++i)
    margin = std::min(margin, 1.0 / (spec.a_diag(i) + spec.c(i)) - lhs);
  return margin;
}

MatchingReport check_lemma3(const model::SourceSpec& spec, double D, int n_samples,
                            std::uint64_t seed) {
  SplitMix64 rng(seed);
  const std::vector<model::RateAllocation> samples = sample_B(spec, D, n_samples, rng);

  MatchingReport rep{ConditionId::Lemma3, Verdict::holds, 0.0, {}, n_samples, ""};
  double worst = std::numeric_limits<double>::infinity();
  std::vector<double> worst_point;
  for (const model::RateAllocation& r : samples) {
    const double m = lemma3_margin(spec, r);
    if (m < worst) {
      worst = m;
      worst_point = r.r;
    }
  }
  rep.slack = worst;
  rep.verdict = worst >= 0.0 ? Verdict::holds : Verdict::fails;
  if (!worst_point.empty()) rep.witnesses.push_back(worst_point);
  return rep;
}

MatchingReport check_theorem4(const model::SourceSpec& spec, double D) {
  const linalg::SymMatrix sat = saturated_info(spec);
  const double lower = linalg::trace_inverse_pivoted(sat);
  const double alpha_star = linalg::eig_sym(sat).eigenvalues.back();
  const double upper = (spec.dim() + 1) / alpha_star;

  MatchingReport rep{ConditionId::Theorem4, Verdict::holds, 0.0, {}, 0, ""};
  rep.slack = std::min(D - lower, upper - D);
  const double tol = 1e-12 * std::max(1.0, std::abs(D));
  rep.verdict = (D - lower > 0.0 && upper - D >= -tol) ? Verdict::holds : Verdict::fails;
  return rep;
}

MatchingReport check_corollary4(int L, double rho, const std::vector<double>& c, double D) {
  if (static_cast<int>(c.size()) != L) throw InvalidInput("check_corollary4: c length mismatch");
  const model::EquicorrCoeffs co = model::equicorr_inverse_coeffs(L, rho);

  // lower = [sum_i v_i - b sum_{i != j} v_i v_j] / [1 - b sum_i v_i],
  // v_i = 1/(a + b + c_i): the saturated sum MSE in closed form.
  double sv = 0.0, sv2 = 0.0;
  for (double ci : c) {
    const double v = 1.0 / (co.a + co.b + ci);
    sv += v;
    sv2 += v * v;
  }
  const double pair_sum = sv * sv - sv2;  // ordered pairs i != j
  const double lower = (sv - co.b * pair_sum) / (1.0 - co.b * sv);

  std::vector<double> noise(L);
  for (int i = 0; i < L; ++i) noise[i] = 1.0 / c[i];
  const model::SourceSpec spec = model::build_equicorrelated(L, rho, noise);
  const double alpha_star = linalg::eig_sym(saturated_info(spec)).eigenvalues.back();
  const double upper = (L + 1) / alpha_star;

  MatchingReport rep{ConditionId::Corollary4, Verdict::holds, 0.0, {}, 0, ""};
  if (lower > upper) {
    rep.verdict = Verdict::not_applicable;
    rep.slack = upper - lower;
    rep.note = "empty window";
    return rep;
  }
  rep.slack = std::min(D - lower, upper - D);
  const double tol = 1e-12 * std::max(1.0, std::abs(D));
  rep.verdict = rep.slack >= -tol ? Verdict::holds : Verdict::fails;
  return rep;
}

MatchingReport check_theorem6(double a, double b, double c_min, double c_max, int L, double D) {
  MatchingReport rep{ConditionId::Theorem6, Verdict::holds, 0.0, {}, 0, ""};
  const double den = a + b + c_min - L * b;
  if (den <= 0.0) {
    rep.verdict = Verdict::not_applicable;
    rep.slack = den;
    rep.note = "a + b + c_min - L b <= 0";
    return rep;
  }
  const double lower = L / (a + b + c_min) * (1.0 + b / den);
  const double upper = (L + 1) / (a + b + c_max);
  rep.slack = std::min(D - lower, upper - D);
  const double tol = 1e-12 * std::max(1.0, std::abs(D));
  rep.verdict = rep.slack >= -tol ? Verdict::holds : Verdict::fails;
  return rep;
}

MatchingReport check_theorem7(const model::SourceSpec& spec) {
  if (!model::cyclic_shift_invariant(spec))
    throw InvalidInput("check_theorem7: spec is not cyclic shift invariant");
  const int L = spec.dim();
  const double lam_min = spec.cov_eigenvalues().front();
  const double lam_max = spec.cov_eigenvalues().back();
  const double rhs = (L - 1.0) / L * (lam_max / lam_min) * (lam_max - lam_min);
  const double sigma2 = spec.noise_var()[0];

  MatchingReport rep{ConditionId::Theorem7, Verdict::holds, sigma2 - rhs, {}, 0, ""};
  rep.verdict = rep.slack >= 0.0 ? Verdict::holds : Verdict::fails;
  return rep;
}

Theorem8Result theorem8_closed_form(double a, double b, double c, int L, double D, double rho) {
  Theorem8Result out;
  const double g = a + b + c;
  const double den = g - L * b;
  out.window_lo = den > 0.0 ? L / g * (1.0 + b / den) : std::numeric_limits<double>::infinity();
  out.window_hi = (L + 1) / g;
  // The symmetric closed form is derived for nonnegative pair correlation.
  if (rho < 0.0 || b < 0.0 || den <= 0.0) return out;
  const double tol = 1e-12 * std::max(1.0, std::abs(D));
  if (!(D >= out.window_lo - tol && D <= out.window_hi + tol)) return out;

  const double db = D * b;
  const double l1 = 0.5 * L * (1.0 + db + std::sqrt((1.0 - db) * (1.0 - db) + 4.0 * db / L));
  const double rem = D * g - l1;
  if (rem <= 0.0) return out;

  out.applicable = true;
  out.r_sum = 0.5 * L * std::log((1.0 - rho) * l1 * c / rem) +
              0.5 * std::log((1.0 + (L - 1) * rho) / (1.0 - rho) * (1.0 - L * db / l1));
  out.r_opt = 0.5 * std::log(D * c / rem);
  return out;
}

Theorem9Curve theorem9_curve(double rho, double sigma2, const std::vector<double>& r_grid) {
  if (std::abs(rho) >= 0.5) throw InvalidInput("theorem9_curve: need |rho| < 1/2");
  if (!(sigma2 > 0.0)) throw InvalidInput("theorem9_curve: need sigma2 > 0");
  Theorem9Curve out;
  out.threshold = 3.0 * std::abs(rho) * (1.0 + 2.0 * std::abs(rho)) / (1.0 - 2.0 * std::abs(rho));
  if (sigma2 < out.threshold) return out;

  out.applicable = true;
  const double lam[4] = {1.0 - 2.0 * rho, 1.0, 1.0, 1.0 + 2.0 * rho};
  const double log_det = std::log(1.0 - 4.0 * rho * rho);
  out.points.reserve(r_grid.size());
  for (double r : r_grid) {
    if (!(std::isfinite(r) && r >= 0.0)) throw InvalidInput("theorem9_curve: r must be >= 0");
    double dsum = 0.0, log_prod = 0.0;
    for (double l : lam) {
      const double beta = 1.0 / l - std::expm1(-2.0 * r) / sigma2;
      dsum += 1.0 / beta;
      log_prod += std::log(beta);
    }
    out.points.push_back({r, dsum, 0.5 * (log_det + 8.0 * r + log_prod)});
  }
  return out;
}

}  // namespace remrate::matching
