#include <doctest.h>

#include <cmath>

#include "remrate/common.hpp"
#include "remrate/selfcheck.hpp"
#include "remrate/waterfill.hpp"

using namespace remrate;
using model::RateAllocation;
using model::SourceSpec;

TEST_CASE("waterfill examples") {
  const waterfill::WaterfillResult a = waterfill::waterfill({1, 3}, 6.0);
  CHECK(a.level == doctest::Approx(3.0));
  CHECK(a.components[0] == doctest::Approx(3.0));
  CHECK(a.components[1] == doctest::Approx(3.0));
  CHECK(a.theta == doctest::Approx(9.0));

  const waterfill::WaterfillResult b = waterfill::waterfill({1, 1}, 4.0);
  CHECK(b.level == doctest::Approx(2.0));
  CHECK(b.theta == doctest::Approx(4.0));

  CHECK_THROWS_AS(waterfill::waterfill({1, 3}, 3.5), Infeasible);

  // exact budget: everything sits at its floor, level canonicalized to min
  const waterfill::WaterfillResult c = waterfill::waterfill({1, 3}, 4.0);
  CHECK(c.level == doctest::Approx(1.0));
  CHECK(c.theta == doctest::Approx(3.0));
}

TEST_CASE("waterfill result invariants on random instances") {
  SplitMix64 rng(101);
  for (int t = 0; t < 500; ++t) {
    const int L = rng.uniform_int(1, 6);
    std::vector<double> floors(L);
    double fsum = 0.0;
    for (double& f : floors) {
      f = rng.uniform(0.05, 2.0);
      fsum += f;
    }
    const double D = fsum * (1.0 + rng.uniform(0.0, 3.0));
    const waterfill::WaterfillResult wf = waterfill::waterfill(floors, D);

    double csum = 0.0, prod = 1.0;
    for (int i = 0; i < L; ++i) {
      CHECK(wf.components[i] >= floors[i]);
      csum += wf.components[i];
      prod *= wf.components[i];
    }
    CHECK(std::abs(csum - D) <= 1e-10 * D);
    CHECK(wf.theta == doctest::Approx(prod).epsilon(1e-14));
    CHECK(wf.log_theta == doctest::Approx(std::log(prod)).epsilon(1e-12));
  }
}

TEST_CASE("waterfill matches the dense grid maximizer") {
  SplitMix64 rng(102);
  for (int t = 0; t < 40; ++t) {
    const int L = rng.uniform_int(2, 3);
    std::vector<double> floors(L);
    double fsum = 0.0;
    for (double& f : floors) {
      f = rng.uniform(0.1, 2.0);
      fsum += f;
    }
    const double D = fsum * (1.0 + rng.uniform(0.1, 2.0));
    const int grid = 400;
    const double gmax = selfcheck::grid_max_product(floors, D, grid);
    const waterfill::WaterfillResult wf = waterfill::waterfill(floors, D);

    CHECK(gmax <= wf.theta * (1.0 + 1e-12));
    double min_comp = wf.components[0];
    for (double c : wf.components) min_comp = std::min(min_comp, c);
    CHECK(wf.theta - gmax <= wf.theta * L * (D / grid) / min_comp);
  }
}

TEST_CASE("theta at r = 0 with the full-trace budget is the source determinant") {
  const SourceSpec s = model::build_equicorrelated(3, 0.3, {1, 1, 1});
  const double det = (1.0 - 0.3) * (1.0 - 0.3) * (1.0 + 2 * 0.3);
  CHECK(waterfill::theta(s, RateAllocation::zero(3), s.trace_cov()) ==
        doctest::Approx(det).epsilon(1e-12));
}

TEST_CASE("theta on the symmetric boundary of the white source") {
  const SourceSpec s = model::build_equicorrelated(2, 0.0, {1, 1});
  const double rbar = 0.5;
  const double D = model::mmse_trace(s, RateAllocation::uniform(2, rbar));
  CHECK(waterfill::theta(s, RateAllocation::uniform(2, rbar), D) ==
        doctest::Approx((D / 2) * (D / 2)).epsilon(1e-12));
}

TEST_CASE("theta requires membership in B") {
  const SourceSpec s = model::build_equicorrelated(2, 0.0, {1, 1});
  CHECK_THROWS_AS(waterfill::theta(s, RateAllocation::zero(2), 1.5), Infeasible);
}

TEST_CASE("theta against the Lagrangian grid oracle on a random L = 3 instance") {
  SplitMix64 rng(103);
  for (int t = 0; t < 10; ++t) {
    const SourceSpec s = selfcheck::random_spec(rng, 3);
    std::vector<double> rr(3);
    for (double& x : rr) x = rng.uniform(0.3, 2.0);
    const RateAllocation r(rr);
    const double mmse = model::mmse_trace(s, r);
    const double D = mmse * rng.uniform(1.05, 1.8);

    std::vector<double> floors;
    for (double a : linalg::eig_sym(model::info_matrix(s, r)).eigenvalues)
      floors.push_back(1.0 / a);
    const double gmax = selfcheck::grid_max_product(floors, D, 400);
    CHECK(waterfill::theta(s, r, D) == doctest::Approx(gmax).epsilon(1e-4));
  }
}

TEST_CASE("boundary equality: theta * |K| = 1 on the boundary") {
  SplitMix64 rng(104);
  for (int t = 0; t < 50; ++t) {
    const int L = rng.uniform_int(2, 4);
    const SourceSpec s = selfcheck::random_spec(rng, L);
    std::vector<double> rr(L);
    for (double& x : rr) x = rng.uniform(0.2, 3.0);
    const double sat = model::mmse_trace(s, RateAllocation::uniform(L, 30.0));
    const double D = rng.uniform(1.02, 1.6) * sat;
    if (D >= s.trace_cov()) continue;
    const RateAllocation rb = model::project_to_boundary(s, RateAllocation(rr), D);
    const double theta = waterfill::theta(s, rb, D);
    const double det = linalg::det_pivoted(model::info_matrix(s, rb));
    CHECK(std::abs(theta * det - 1.0) <= 1e-8);
  }
}

TEST_CASE("theta is monotone in D") {
  SplitMix64 rng(105);
  const SourceSpec s = selfcheck::random_spec(rng, 3);
  const RateAllocation r({0.5, 0.8, 0.2});
  const double base = model::mmse_trace(s, r);
  double prev = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double D = base * (1.0 + 0.2 * k);
    const double th = waterfill::theta(s, r, D);
    CHECK(th >= prev - 1e-14);
    prev = th;
  }
}

TEST_CASE("u transformation") {
  const SourceSpec s = model::build_equicorrelated(3, 0.1, {1.0, 0.5, 2.0});
  SplitMix64 rng(106);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> u(3), rr(3);
    for (int i = 0; i < 3; ++i) {
      rr[i] = rng.uniform(0.0, 3.0);
      u[i] = s.a_diag(i) + s.c(i) * (1.0 - std::exp(-2.0 * rr[i]));
    }
    // round trip u -> r -> u
    const RateAllocation r2 = waterfill::rates_from_u(s, u);
    for (int i = 0; i < 3; ++i) {
      const double u2 = s.a_diag(i) + s.c(i) * (1.0 - std::exp(-2.0 * r2.r[i]));
      CHECK(std::abs(u2 - u[i]) <= 1e-12 * std::max(1.0, std::abs(u[i])));
    }
    const double D = model::mmse_trace(s, RateAllocation(rr)) * 1.3;
    CHECK(waterfill::theta_in_u(s, u, D) ==
          doctest::Approx(waterfill::theta(s, RateAllocation(rr), D)).epsilon(1e-12));
  }

  // endpoint u_i = a_ii means r = 0
  std::vector<double> u0(3);
  for (int i = 0; i < 3; ++i) u0[i] = s.a_diag(i);
  const RateAllocation r0 = waterfill::rates_from_u(s, u0);
  for (double x : r0.r) CHECK(x == doctest::Approx(0.0));

  std::vector<double> bad(3);
  for (int i = 0; i < 3; ++i) bad[i] = s.a_diag(i) + s.c(i);  // r = inf, out of range
  CHECK_THROWS_AS(waterfill::rates_from_u(s, bad), InvalidInput);
}
