#pragma once

#include <vector>

#include "remrate/model.hpp"

namespace remrate::waterfill {

struct WaterfillResult {
  double level;                    // water level xi
  std::vector<double> components;  // max(xi, floor_i), in input floor order
  double theta;                    // product of components
  double log_theta;                // sum of log(components)
};

// Maximizes prod_i xi_i subject to sum_i xi_i <= D and xi_i >= floors_i.
// Exact sort-and-scan of the piecewise linear level function, no iteration.
// When D equals the floor sum the level is canonicalized to the minimum
// floor. Throws Infeasible when D < sum(floors).
WaterfillResult waterfill(const std::vector<double>& floors, double D);

// theta(D, r): water-filling over floors 1/alpha_i of the info matrix
// eigenvalues. Requires r in B_L(D) (floors summing to <= D), else
// Infeasible.
WaterfillResult theta_waterfill(const model::SourceSpec& spec, const model::RateAllocation& r,
                                double D);
double theta(const model::SourceSpec& spec, const model::RateAllocation& r, double D);

// r_i = 0.5 log(c_i / (a_ii + c_i - u_i)), the inverse of
// u_i = a_ii + c_i (1 - e^{-2 r_i}); requires u_i in [a_ii, a_ii + c_i).
model::RateAllocation rates_from_u(const model::SourceSpec& spec, const std::vector<double>& u);

// theta evaluated in the transformed coordinates.
double theta_in_u(const model::SourceSpec& spec, const std::vector<double>& u, double D);

}  // namespace remrate::waterfill
