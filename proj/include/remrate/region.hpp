#pragma once

#include <cstdint>
#include <vector>

#include "remrate/model.hpp"

namespace remrate::region {

// Subset of encoders {0..L-1}; bit i set means i is in S.
using Mask = std::uint32_t;

// Achievable-side rate function J_S: the conditional rate cost of the
// subset S given the complementary descriptions,
//   0.5 log[ |K(r)| prod_{i in S} e^{2 r_i} / |K(r with r_S = 0)| ].
double j_inner(const model::SourceSpec& spec, const model::RateAllocation& r, Mask S);

// Converse-side rate function with the water-filling product theta(D, r),
//   0.5 log+ [ prod_{i in S} e^{2 r_i} / (theta |K(r with r_S = 0)|) ].
// Requires r in B_L(D).
double j_outer(const model::SourceSpec& spec, const model::RateAllocation& r, double D, Mask S);

enum class BoundKind { outer, inner };

// Lower bounds on sum_{i in S} R_i for every subset S: a co-polymatroid
// (f_empty = 0, monotone, supermodular).
struct RegionBound {
  int L = 0;
  BoundKind kind = BoundKind::inner;
  std::vector<double> lower;  // size 1 << L, indexed by mask; lower[0] == 0
  double D = 0.0;             // outer bounds only
  std::vector<double> r;

  double at(Mask S) const { return lower[S]; }
};

RegionBound outer_bound(const model::SourceSpec& spec, double D, const model::RateAllocation& r);
RegionBound inner_bound(const model::SourceSpec& spec, const model::RateAllocation& r);

struct RatePoint {
  std::vector<double> rates;
};

bool is_copolymatroid(const RegionBound& bound, double tol = 1e-10);

// Vertex of the dominant polytope along the nested chain of a permutation:
// R_{perm[i]} = f({perm[i..L-1]}) - f({perm[i+1..L-1]}).
RatePoint endpoint(const RegionBound& bound, const std::vector<int>& perm);

// All <= L! endpoints, deduplicated at max-norm tolerance 1e-10, in
// lexicographic permutation order. Throws InvalidInput when the bound
// fails the co-polymatroid checks or L > 8.
std::vector<RatePoint> all_endpoints(const RegionBound& bound);

bool point_in_bound(const RegionBound& bound, const RatePoint& p, double tol = 1e-9);

// The sum-rate objective f(r) = sum_i r_i + 0.5 log(|K(r)| / |K(0)|);
// identical to j_inner over the full set.
double sum_rate_objective(const model::SourceSpec& spec, const model::RateAllocation& r);

struct SumRateResult {
  double value;
  model::RateAllocation argmin;
  double boundary_residual;  // |mmse_trace(argmin) - D| / D
};

// Minimizes the sum-rate objective over B_L(D) by multi-start projected
// coordinate descent (32 deterministic low-discrepancy starts projected to
// the boundary, plus the symmetric boundary point). The returned value is a
// certified upper bound on the true minimum. Requires
// D > tr[(precision_x + diag(c))^{-1}].
SumRateResult sum_rate_min(const model::SourceSpec& spec, double D);

struct ScalarMinResult {
  double value;
  double argmin_r;
};

// min over r >= r_star(D) of 0.5 log[ e^{2 L r} |cov_x| / theta(D, r) ] for
// cyclic shift invariant specs: dense grid scan refined by golden-section.
ScalarMinResult sum_rate_lower_cyclic(const model::SourceSpec& spec, double D);

struct CurvePoint {
  double r;
  double D;
  double R;
};

// Parametric distortion-rate curve of a cyclic shift invariant spec:
// D(r) = sum_i 1/beta_i(r), R(r) = 0.5 log[|cov_x| e^{2Lr} prod_i beta_i(r)].
std::vector<CurvePoint> parametric_curve(const model::SourceSpec& spec,
                                         const std::vector<double>& r_grid);

}  // namespace remrate::region
