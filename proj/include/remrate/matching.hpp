#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "remrate/common.hpp"
#include "remrate/model.hpp"
#include "remrate/region.hpp"

namespace remrate::matching {

enum class ConditionId {
  MD_sampled,
  Lemma3,
  Theorem4,
  Corollary4,
  Theorem6,
  Theorem7,
  Theorem8_window,
  Theorem9,
};

enum class Verdict { holds, fails, not_applicable };

const char* to_string(ConditionId id);
const char* to_string(Verdict v);

struct MatchingReport {
  ConditionId id;
  Verdict verdict;
  double slack;  // minimal margin of the governing inequality; > 0 when it holds
  std::vector<std::vector<double>> witnesses;  // sample points at the minimal margin
  int samples = 0;
  std::string note;
};

inline constexpr std::uint64_t kDefaultSeed = 0x5EED;
inline constexpr double kSampleBoxCap = 10.0;

// Rejection-samples n points of B_L(D) from the box [0, cap]^L.
std::vector<model::RateAllocation> sample_B(const model::SourceSpec& spec, double D, int n,
                                            SplitMix64& rng, double cap = kSampleBoxCap);

// Forward finite differences of e^{-2 r_i} theta(D, r) along every
// coordinate at sampled points of B_L(D); the monotone-decrease condition
// holds when every difference quotient stays below 1e-8.
MatchingReport check_md_sampled(const model::SourceSpec& spec, double D, int n_samples,
                                std::uint64_t seed = kDefaultSeed);

// min_i [ 1/(a_ii + c_i) - (1/alpha_min(r) - 1/alpha_max(r)) ] at one point.
double lemma3_margin(const model::SourceSpec& spec, const model::RateAllocation& r);

// Eigenvalue-spread condition sampled over B_L(D).
MatchingReport check_lemma3(const model::SourceSpec& spec, double D, int n_samples,
                            std::uint64_t seed = kDefaultSeed);

// Window tr[(precision_x + diag(c))^{-1}] < D <= (L+1)/alpha*_max.
MatchingReport check_theorem4(const model::SourceSpec& spec, double D);

// Equicorrelated window with the explicit lower bound in (a, b, c_i) and
// upper bound (L+1)/alpha*_max.
MatchingReport check_corollary4(int L, double rho, const std::vector<double>& c, double D);

// Window L/(a+b+c_min) (1 + b/(a+b+c_min - L b)) <= D <= (L+1)/(a+b+c_max);
// not applicable when the denominator a+b+c_min - L b is nonpositive.
MatchingReport check_theorem6(double a, double b, double c_min, double c_max, int L, double D);

// Cyclic-invariant threshold sigma^2 >= ((L-1)/L)(lambda_max/lambda_min)
// (lambda_max - lambda_min).
MatchingReport check_theorem7(const model::SourceSpec& spec);

struct Theorem8Result {
  bool applicable = false;
  double window_lo = 0.0;
  double window_hi = 0.0;
  double r_sum = 0.0;
  double r_opt = 0.0;
};

// Closed-form symmetric sum rate for the equicorrelated source with equal
// noise; applicable inside the window
//   L/(a+b+c) (1 + b/(a+b+c-Lb)) <= D <= (L+1)/(a+b+c)  with rho >= 0.
Theorem8Result theorem8_closed_form(double a, double b, double c, int L, double D, double rho);

struct Theorem9Curve {
  bool applicable = false;
  double threshold = 0.0;  // required noise variance
  std::vector<region::CurvePoint> points;
};

// Parametric curve of the 4-source cyclic example; applicable when
// sigma^2 >= 3|rho|(1+2|rho|)/(1-2|rho|).
Theorem9Curve theorem9_curve(double rho, double sigma2, const std::vector<double>& r_grid);

}  // namespace remrate::matching
