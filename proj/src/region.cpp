#include "remrate/region.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "remrate/common.hpp"
#include "remrate/waterfill.hpp"

namespace remrate::region {

namespace {

// Zeroes the rates of S; K(r_{S^c}) in the bound formulas.
model::RateAllocation zero_on(const model::RateAllocation& r, Mask S) {
  std::vector<double> v = r.r;
  for (int i = 0; i < static_cast<int>(v.size()); ++i)
    if (S & (Mask{1} << i)) v[i] = 0.0;
  return model::RateAllocation(std::move(v));
}

double log_det_info(const model::SourceSpec& spec, const model::RateAllocation& r) {
  const linalg::LogDet d = linalg::log_det_pivoted(model::info_matrix(spec, r));
  if (d.sign <= 0) throw InvalidInput("info matrix is not positive definite");
  return d.log_abs;
}

double sum_rates(const model::RateAllocation& r, Mask S) {
  double s = 0.0;
  for (int i = 0; i < r.size(); ++i)
    if (S & (Mask{1} << i)) s += r.r[i];
  return s;
}

}  // namespace

double j_inner(const model::SourceSpec& spec, const model::RateAllocation& r, Mask S) {
  if (S == 0) return 0.0;
  const double ld_full = log_det_info(spec, r);
  const double ld_cond = log_det_info(spec, zero_on(r, S));
  return 0.5 * (ld_full + 2.0 * sum_rates(r, S) - ld_cond);
}

double j_outer(const model::SourceSpec& spec, const model::RateAllocation& r, double D, Mask S) {
  if (S == 0) return 0.0;
  const waterfill::WaterfillResult wf = waterfill::theta_waterfill(spec, r, D);
  const double ld_cond = log_det_info(spec, zero_on(r, S));
  // log-domain argument, clamped at zero after full evaluation
  const double v = 0.5 * (2.0 * sum_rates(r, S) - wf.log_theta - ld_cond);
  return std::max(0.0, v);
}

RegionBound inner_bound(const model::SourceSpec& spec, const model::RateAllocation& r) {
  const int L = spec.dim();
  if (L > 20) throw InvalidInput("inner_bound: subset enumeration limited to L <= 20");
  RegionBound b;
  b.L = L;
  b.kind = BoundKind::inner;
  b.r = r.r;
  b.lower.assign(std::size_t{1} << L, 0.0);

  const double ld_full = log_det_info(spec, r);
  for (Mask S = 1; S < (Mask{1} << L); ++S) {
    const double ld_cond = log_det_info(spec, zero_on(r, S));
    b.lower[S] = 0.5 * (ld_full + 2.0 * sum_rates(r, S) - ld_cond);
  }
  return b;
}

RegionBound outer_bound(const model::SourceSpec& spec, double D, const model::RateAllocation& r) {
  const int L = spec.dim();
  if (L > 20) throw InvalidInput("outer_bound: subset enumeration limited to L <= 20");
  const waterfill::WaterfillResult wf = waterfill::theta_waterfill(spec, r, D);

  RegionBound b;
  b.L = L;
  b.kind = BoundKind::outer;
  b.D = D;
  b.r = r.r;
  b.lower.assign(std::size_t{1} << L, 0.0);
  for (Mask S = 1; S < (Mask{1} << L); ++S) {
    const double ld_cond = log_det_info(spec, zero_on(r, S));
    b.lower[S] = std::max(0.0, 0.5 * (2.0 * sum_rates(r, S) - wf.log_theta - ld_cond));
  }
  return b;
}

bool is_copolymatroid(const RegionBound& bound, double tol) {
  const Mask full = (Mask{1} << bound.L) - 1;
  if (std::abs(bound.lower[0]) > tol) return false;
  for (Mask S = 0; S <= full; ++S) {
    if (bound.lower[S] < -tol) return false;
    // Monotonicity over single-element steps.
    for (int i = 0; i < bound.L; ++i) {
      const Mask bit = Mask{1} << i;
      if (S & bit) continue;
      if (bound.lower[S] > bound.lower[S | bit] + tol) return false;
    }
    // Local supermodularity: f(S+i) + f(S+j) <= f(S) + f(S+i+j).
    for (int i = 0; i < bound.L; ++i) {
      const Mask bi = Mask{1} << i;
      if (S & bi) continue;
      for (int j = i + 1; j < bound.L; ++j) {
        const Mask bj = Mask{1} << j;
        if (S & bj) continue;
        if (bound.lower[S | bi] + bound.lower[S | bj] >
            bound.lower[S] + bound.lower[S | bi | bj] + tol)
          return false;
      }
    }
  }
  return true;
}

RatePoint endpoint(const RegionBound& bound, const std::vector<int>& perm) {
  const int L = bound.L;
  if (static_cast<int>(perm.size()) != L) throw InvalidInput("endpoint: permutation size mismatch");
  RatePoint p;
  p.rates.assign(L, 0.0);
  Mask suffix = 0;  // {perm[i+1], ..., perm[L-1]}
  for (int i = L - 1; i >= 0; --i) {
    const Mask with = suffix | (Mask{1} << perm[i]);
    p.rates[perm[i]] = bound.at(with) - bound.at(suffix);
    suffix = with;
  }
  return p;
}

std::vector<RatePoint> all_endpoints(const RegionBound& bound) {
  if (bound.L > 8) throw InvalidInput("all_endpoints: L! enumeration limited to L <= 8");
  if (!is_copolymatroid(bound, 1e-10))
    throw InvalidInput("all_endpoints: bound is not a co-polymatroid");

  std::vector<int> perm(bound.L);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<RatePoint> out;
  do {
    RatePoint p = endpoint(bound, perm);
    bool dup = false;
    for (const RatePoint& q : out) {
      double diff = 0.0;
      for (int i = 0; i < bound.L; ++i) diff = std::max(diff, std::abs(p.rates[i] - q.rates[i]));
      if (diff <= 1e-10) {
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(std::move(p));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

bool point_in_bound(const RegionBound& bound, const RatePoint& p, double tol) {
  if (static_cast<int>(p.rates.size()) != bound.L)
    throw InvalidInput("point_in_bound: dimension mismatch");
  for (Mask S = 1; S < (Mask{1} << bound.L); ++S) {
    double s = 0.0;
    for (int i = 0; i < bound.L; ++i)
      if (S & (Mask{1} << i)) s += p.rates[i];
    if (s < bound.at(S) - tol) return false;
  }
  return true;
}

double sum_rate_objective(const model::SourceSpec& spec, const model::RateAllocation& r) {
  double s = 0.0;
  for (double x : r.r) s += x;
  const linalg::LogDet prior = linalg::log_det_pivoted(spec.precision_x());
  return s + 0.5 * (log_det_info(spec, r) - prior.log_abs);
}

namespace {

constexpr double kRateCap = 30.0;  // e^{-60} below double noise; saturated

// Golden-section minimization on [lo, hi]; assumes unimodality. Both
// endpoints are probed too, so a monotone objective returns its boundary
// minimum exactly.
template <typename F>
double golden_min(F f, double lo, double hi, double tol) {
  const double gr = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    }
  }
  double xbest = 0.5 * (a + b), fbest = f(xbest);
  if (f(lo) < fbest) {
    xbest = lo;
    fbest = f(lo);
  }
  if (f(hi) < fbest) xbest = hi;
  return xbest;
}

// mmse trace and its derivative in coordinate j at one point:
// d tr(K^{-1}) / d r_j = -2 c_j e^{-2 r_j} * sum_a (K^{-1})_{aj}^2.
struct MmseProbe {
  double value;
  double deriv_j;
};

MmseProbe mmse_probe(const model::SourceSpec& spec, const std::vector<double>& r, int j) {
  const linalg::SymMatrix inv =
      linalg::inverse_pivoted(model::info_matrix(spec, model::RateAllocation(r)));
  double col_sq = 0.0;
  for (int a = 0; a < spec.dim(); ++a) col_sq += inv(a, j) * inv(a, j);
  return {inv.trace(), -2.0 * spec.c(j) * std::exp(-2.0 * r[j]) * col_sq};
}

// Root of mmse_trace = D in coordinate j with the rest of r fixed:
// 0 when the budget already holds at r_j = 0, -1 when unreachable below
// the cap. Safeguarded Newton inside a shrinking bracket.
double boundary_root(const model::SourceSpec& spec, std::vector<double> r, int j, double D,
                     double init) {
  r[j] = 0.0;
  if (model::mmse_trace(spec, model::RateAllocation(r)) <= D) return 0.0;
  r[j] = kRateCap;
  if (model::mmse_trace(spec, model::RateAllocation(r)) > D) return -1.0;

  double lo = 0.0, hi = kRateCap;
  double x = std::min(std::max(init, 1e-3), kRateCap - 1e-3);
  for (int it = 0; it < 100; ++it) {
    r[j] = x;
    const MmseProbe p = mmse_probe(spec, r, j);
    const double h = p.value - D;
    if (std::abs(h) <= 1e-13 * std::max(1.0, D)) return x;
    if (h > 0.0)
      lo = x;
    else
      hi = x;
    double xn = p.deriv_j != 0.0 ? x - h / p.deriv_j : 0.5 * (lo + hi);
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    x = xn;
    if (hi - lo <= 1e-15 * (1.0 + hi)) break;
  }
  return std::min(hi, kRateCap);  // feasible side of the bracket
}

// Smallest feasible value of coordinate i holding the others fixed.
double coordinate_floor(const model::SourceSpec& spec, const std::vector<double>& r, int i,
                        double D) {
  return boundary_root(spec, r, i, D, r[i]);
}

// Halton low-discrepancy point, bases = first L primes.
std::vector<double> halton_point(int index, int L) {
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  std::vector<double> p(L);
  for (int d = 0; d < L; ++d) {
    const int base = primes[d % 16];
    double f = 1.0, x = 0.0;
    int i = index + 1;
    while (i > 0) {
      f /= base;
      x += f * (i % base);
      i /= base;
    }
    p[d] = x;
  }
  return p;
}

}  // namespace

SumRateResult sum_rate_min(const model::SourceSpec& spec, double D) {
  const int L = spec.dim();
  const double mmse_sat = model::mmse_trace(spec, model::RateAllocation::uniform(L, kRateCap));
  if (!(D > mmse_sat)) throw Infeasible("sum_rate_min: D below the attainable sum MSE");

  if (D >= spec.trace_cov()) {
    // r = 0 is feasible and the objective is nonnegative with f(0) = 0.
    SumRateResult out{0.0, model::RateAllocation::zero(L),
                      std::abs(model::mmse_trace(spec, model::RateAllocation::zero(L)) - D) / D};
    return out;
  }

  auto objective = [&](const std::vector<double>& r) {
    return sum_rate_objective(spec, model::RateAllocation(r));
  };

  // Single-coordinate sweeps: each coordinate drops to its feasible floor
  // (the objective increases in every coordinate). Lands on the boundary.
  auto descend_floors = [&](std::vector<double> r) {
    double fr = objective(r);
    for (int sweep = 0; sweep < 200; ++sweep) {
      const double f_before = fr;
      for (int i = 0; i < L; ++i) {
        const double floor_i = coordinate_floor(spec, r, i, D);
        if (floor_i < 0.0) continue;  // cannot move this coordinate alone
        const double hi = std::max(r[i], floor_i + 1.0);
        auto line = [&](double x) {
          std::vector<double> t = r;
          t[i] = x;
          return objective(t);
        };
        double x = golden_min(line, floor_i, hi, 1e-13 * (1.0 + hi));
        if (line(floor_i) <= line(x)) x = floor_i;
        r[i] = x;
      }
      fr = objective(r);
      if (f_before - fr < 1e-12) break;
    }
    return std::make_pair(fr, r);
  };

  // On the boundary no single coordinate can improve, so refine with
  // pair exchanges: coordinate i runs a golden-section line while
  // coordinate j compensates along the active constraint.
  auto descend_pairs = [&](std::vector<double> r, double fr) {
    for (int sweep = 0; sweep < 80 && L >= 2; ++sweep) {
      const double f_before = fr;
      for (int i = 0; i < L; ++i) {
        for (int j = 0; j < L; ++j) {
          if (i == j) continue;
          auto compensated = [&](double x) {
            std::vector<double> t = r;
            t[i] = x;
            const double rj = boundary_root(spec, t, j, D, t[j]);
            if (rj < 0.0) return std::make_pair(std::numeric_limits<double>::infinity(), t);
            t[j] = rj;
            return std::make_pair(objective(t), t);
          };
          // smallest x coordinate j can still compensate for
          double x_lo = 0.0;
          if (!std::isfinite(compensated(0.0).first)) {
            double bad = 0.0, good = r[i];
            for (int it = 0; it < 60; ++it) {
              const double mid = 0.5 * (bad + good);
              (std::isfinite(compensated(mid).first) ? good : bad) = mid;
            }
            x_lo = good;
          }
          const double x_hi = std::max(r[i], x_lo) + 2.0;
          auto g = [&](double x) { return compensated(x).first; };
          double x = golden_min(g, x_lo, x_hi, 1e-12 * (1.0 + x_hi));
          if (g(x_lo) <= g(x)) x = x_lo;
          const auto [val, moved] = compensated(x);
          if (val < fr - 1e-14) {
            fr = val;
            r = moved;
          }
        }
      }
      if (f_before - fr < 1e-12) break;
    }
    return std::make_pair(fr, r);
  };

  // Starts: the symmetric boundary point plus boundary-projected
  // low-discrepancy points.
  std::vector<std::vector<double>> starts;
  starts.push_back(std::vector<double>(L, model::symmetric_boundary_r(spec, D)));
  for (int s = 0; static_cast<int>(starts.size()) < 32 && s < 96; ++s) {
    std::vector<double> p = halton_point(s, L);
    for (double& x : p) x = 0.05 + 10.0 * x;  // direction in the rate box
    try {
      starts.push_back(model::project_to_boundary(spec, model::RateAllocation(p), D).r);
    } catch (const Infeasible&) {
      // ray saturates above D, skip this direction
    }
  }

  std::vector<std::pair<double, std::vector<double>>> landed;
  for (const std::vector<double>& s : starts) {
    auto cand = descend_floors(s);
    if (std::isfinite(cand.first)) landed.push_back(std::move(cand));
  }
  if (landed.empty()) throw Infeasible("sum_rate_min: no feasible start found");
  std::sort(landed.begin(), landed.end());

  // pair-exchange refinement on the most promising landings
  const int refine = std::min<std::size_t>(8, landed.size());
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_r(L, 0.0);
  bool have_best = false;
  for (int k = 0; k < refine; ++k) {
    auto [val, r] = descend_pairs(landed[k].second, landed[k].first);
    if (!std::isfinite(val)) continue;
    const double tie = 1e-12 * (1.0 + std::abs(val));
    if (!have_best || val < best - tie) {
      best = val;
      best_r = r;
      have_best = true;
    } else if (std::abs(val - best) <= tie &&
               std::lexicographical_compare(r.begin(), r.end(), best_r.begin(), best_r.end())) {
      best_r = r;
    }
  }
  if (!have_best) throw Infeasible("sum_rate_min: no feasible start found");

  model::RateAllocation argmin(best_r);
  SumRateResult out{best, argmin, std::abs(model::mmse_trace(spec, argmin) - D) / D};
  return out;
}

namespace {

// 0.5 log[ e^{2Lr} |cov_x| / theta(D, r) ] on the common-rate ray.
double cyclic_lower_objective(const model::SourceSpec& spec, double D, double r) {
  const int L = spec.dim();
  const double c = spec.c(0);
  std::vector<double> floors(L);
  double mmse = 0.0;
  for (int i = 0; i < L; ++i) {
    floors[i] = 1.0 / (1.0 / spec.cov_eigenvalues()[i] - std::expm1(-2.0 * r) * c);
    mmse += floors[i];
  }
  if (mmse > D * (1.0 + 1e-9)) throw Infeasible("cyclic lower bound: r below r_star(D)");
  const waterfill::WaterfillResult wf = waterfill::waterfill(floors, std::max(D, mmse));
  double log_det_cov = 0.0;
  for (double lam : spec.cov_eigenvalues()) log_det_cov += std::log(lam);
  return 0.5 * (2.0 * L * r + log_det_cov - wf.log_theta);
}

}  // namespace

ScalarMinResult sum_rate_lower_cyclic(const model::SourceSpec& spec, double D) {
  if (!model::cyclic_shift_invariant(spec))
    throw InvalidInput("sum_rate_lower_cyclic: spec is not cyclic shift invariant");
  const double r0 = model::r_star(spec, D);

  auto f = [&](double r) { return cyclic_lower_objective(spec, D, r); };

  // Dense grid locates the basin, golden-section refines inside it.
  const int grid_n = 2000;
  const double r_hi = std::max(r0 + 1.0, 12.0);
  double best_r = r0, best_f = f(r0);
  for (int k = 1; k <= grid_n; ++k) {
    const double r = r0 + (r_hi - r0) * k / grid_n;
    const double v = f(r);
    if (v < best_f) {
      best_f = v;
      best_r = r;
    }
  }
  const double cell = (r_hi - r0) / grid_n;
  const double lo = std::max(r0, best_r - cell);
  const double hi = std::min(r_hi, best_r + cell);
  const double r_ref = golden_min(f, lo, hi, 1e-12);
  const double f_ref = f(r_ref);
  if (f_ref < best_f) {
    best_f = f_ref;
    best_r = r_ref;
  }
  return {best_f, best_r};
}

std::vector<CurvePoint> parametric_curve(const model::SourceSpec& spec,
                                         const std::vector<double>& r_grid) {
  if (!model::cyclic_shift_invariant(spec))
    throw InvalidInput("parametric_curve: spec is not cyclic shift invariant");
  const int L = spec.dim();
  const double c = spec.c(0);
  double log_det_cov = 0.0;
  for (double lam : spec.cov_eigenvalues()) log_det_cov += std::log(lam);

  std::vector<CurvePoint> out;
  out.reserve(r_grid.size());
  for (double r : r_grid) {
    if (!(std::isfinite(r) && r >= 0.0)) throw InvalidInput("parametric_curve: r must be >= 0");
    double dsum = 0.0, log_prod = 0.0;
    for (double lam : spec.cov_eigenvalues()) {
      const double beta = 1.0 / lam - std::expm1(-2.0 * r) * c;
      dsum += 1.0 / beta;
      log_prod += std::log(beta);
    }
    out.push_back({r, dsum, 0.5 * (log_det_cov + 2.0 * L * r + log_prod)});
  }
  return out;
}

}  // namespace remrate::region
