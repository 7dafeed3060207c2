#include "remrate/waterfill.hpp"

#include <algorithm>
#include <cmath>

#include "remrate/common.hpp"

namespace remrate::waterfill {

WaterfillResult waterfill(const std::vector<double>& floors, double D) {
  const int L = static_cast<int>(floors.size());
  if (L < 1) throw InvalidInput("waterfill: empty floor vector");
  double floor_sum = 0.0;
  for (double a : floors) {
    if (!std::isfinite(a) || a <= 0.0) throw InvalidInput("waterfill: floors must be > 0");
    floor_sum += a;
  }
  if (!std::isfinite(D) || D < floor_sum)
    throw Infeasible("waterfill: D < sum(floors), no feasible allocation");

  std::vector<double> sorted = floors;
  std::sort(sorted.begin(), sorted.end());

  // Level candidates xi_k = (D - sum of floors above k)/k, scanned from
  // k = L down; the first candidate at or above its own floor is the level.
  double level = sorted[0];
  double tail = 0.0;  // sum of sorted[k..L-1]
  for (int k = L; k >= 1; --k) {
    const double xi = (D - tail) / k;
    if (xi >= sorted[k - 1]) {
      level = xi;
      break;
    }
    tail += sorted[k - 1];
  }

  WaterfillResult out;
  out.level = level;
  out.components.resize(L);
  out.theta = 1.0;
  out.log_theta = 0.0;
  for (int i = 0; i < L; ++i) {
    out.components[i] = std::max(level, floors[i]);
    out.theta *= out.components[i];
    out.log_theta += std::log(out.components[i]);
  }
  return out;
}

WaterfillResult theta_waterfill(const model::SourceSpec& spec, const model::RateAllocation& r,
                                double D) {
  const linalg::SpectralDecomp d = linalg::eig_sym(model::info_matrix(spec, r));
  std::vector<double> floors(d.eigenvalues.size());
  double mmse = 0.0;
  for (std::size_t i = 0; i < floors.size(); ++i) {
    floors[i] = 1.0 / d.eigenvalues[i];
    mmse += floors[i];
  }
  // Boundary points land a rounding error to either side of D; within that
  // slack the budget is clamped to the floor sum, which is the boundary
  // limit of theta.
  if (mmse > D * (1.0 + 1e-9)) throw Infeasible("theta: r is outside B_L(D)");
  return waterfill(floors, std::max(D, mmse));
}

double theta(const model::SourceSpec& spec, const model::RateAllocation& r, double D) {
  return theta_waterfill(spec, r, D).theta;
}

model::RateAllocation rates_from_u(const model::SourceSpec& spec, const std::vector<double>& u) {
  const int L = spec.dim();
  if (static_cast<int>(u.size()) != L) throw InvalidInput("rates_from_u: length mismatch");
  std::vector<double> r(L);
  for (int i = 0; i < L; ++i) {
    const double lo = spec.a_diag(i);
    const double hi = lo + spec.c(i);
    if (!(u[i] >= lo && u[i] < hi))
      throw InvalidInput("rates_from_u: u_i outside [a_ii, a_ii + c_i)");
    r[i] = 0.5 * std::log(spec.c(i) / (hi - u[i]));
  }
  return model::RateAllocation(std::move(r));
}

double theta_in_u(const model::SourceSpec& spec, const std::vector<double>& u, double D) {
  return theta(spec, rates_from_u(spec, u), D);
}

}  // namespace remrate::waterfill
