#pragma once

#include <string>
#include <vector>

#include "remrate/common.hpp"
#include "remrate/model.hpp"
#include "remrate/region.hpp"

// Independent oracles for the identities the library computes in closed
// form, plus the suites behind the CLI selftest. Each oracle deliberately
// recomputes its target from first principles (exhaustive grids, finite
// differences, raw elimination, joint Gaussian covariances) rather than
// calling the code path it checks.
namespace remrate::selfcheck {

// Best product over the constraint grid {floors_i + k * D/grid}, with the
// last coordinate taking the continuous leftover budget.
double grid_max_product(const std::vector<double>& floors, double D, int grid_per_axis);

// Determinant by Gaussian elimination with partial pivoting on raw rows.
double det_elimination(std::vector<std::vector<double>> m);

// I(U_S; Y_S | U_{S^c}) from the joint covariance of (Y, U) with
// U_i = Y_i + V_i and var(V_i) = noise_var_i / (e^{2 r_i} - 1).
// Coordinates with r_i = 0 carry a constant U_i and drop out.
double gaussian_mi_oracle(const model::SourceSpec& spec, const model::RateAllocation& r,
                          region::Mask S);

// Central finite differences of the eigenvalues with respect to m_ii.
std::vector<double> fd_eig_sensitivity(const linalg::SymMatrix& m, int i, double step = 1e-6);

// Random well-conditioned source spec for property sweeps.
model::SourceSpec random_spec(SplitMix64& rng, int L);

struct SuiteResult {
  std::string name;
  bool pass;
  double worst;  // worst error or margin observed
  int cases;
};

SuiteResult run_waterfill_suite(int n_instances, std::uint64_t seed);
SuiteResult run_sensitivity_suite(int n_instances, std::uint64_t seed);
SuiteResult run_det_identity_suite(int n_instances, std::uint64_t seed);
SuiteResult run_mi_oracle_suite(int n_instances, std::uint64_t seed);

}  // namespace remrate::selfcheck
