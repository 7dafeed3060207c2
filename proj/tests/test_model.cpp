#include <doctest.h>

#include <cmath>

#include "remrate/common.hpp"
#include "remrate/model.hpp"
#include "remrate/model_io.hpp"
#include "remrate/selfcheck.hpp"

using namespace remrate;
using model::RateAllocation;
using model::SourceSpec;

TEST_CASE("equicorrelated builder and closed-form inverse") {
  const model::EquicorrCoeffs co = model::equicorr_inverse_coeffs(3, 0.5);
  CHECK(co.a == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(co.b == doctest::Approx(0.5).epsilon(1e-14));

  const model::EquicorrCoeffs id = model::equicorr_inverse_coeffs(4, 0.0);
  CHECK(id.a == doctest::Approx(1.0));
  CHECK(id.b == doctest::Approx(0.0));

  // |cov| = 1 - rho^2 for L = 2
  const SourceSpec s2 = model::build_equicorrelated(2, 0.9, {1.0, 1.0});
  CHECK(linalg::det_pivoted(s2.cov_x()) == doctest::Approx(0.19).epsilon(1e-12));

  // cov * cov^{-1} = I to 1e-12 in max norm, for several L and rho
  for (const double rho : {-0.2, 0.0, 0.3, 0.7}) {
    const SourceSpec s = model::build_equicorrelated(4, rho, {1, 1, 1, 1});
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double v = 0.0;
        for (int k = 0; k < 4; ++k) v += s.cov_x()(i, k) * s.precision_x()(k, j);
        CHECK(std::abs(v - (i == j ? 1.0 : 0.0)) <= 1e-12);
      }
  }

  CHECK_THROWS_AS(model::build_equicorrelated(3, -0.5, {1, 1, 1}), InvalidInput);
  CHECK_THROWS_AS(model::build_equicorrelated(3, 1.0, {1, 1, 1}), InvalidInput);
}

TEST_CASE("circulant4 builder") {
  const SourceSpec s = model::build_circulant4(0.2, {1, 1, 1, 1});
  const std::vector<double>& ev = s.cov_eigenvalues();
  CHECK(ev[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(ev[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ev[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ev[3] == doctest::Approx(1.4).epsilon(1e-12));
  CHECK(linalg::det_pivoted(s.cov_x()) == doctest::Approx(0.84).epsilon(1e-12));

  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double v = 0.0;
      for (int k = 0; k < 4; ++k) v += s.cov_x()(i, k) * s.precision_x()(k, j);
      CHECK(std::abs(v - (i == j ? 1.0 : 0.0)) <= 1e-12);
    }

  const SourceSpec id = model::build_circulant4(0.0, {1, 1, 1, 1});
  CHECK(id.cov_x()(0, 1) == 0.0);
  CHECK(id.cov_x()(0, 0) == 1.0);

  CHECK_THROWS_AS(model::build_circulant4(0.5, {1, 1, 1, 1}), InvalidInput);
}

TEST_CASE("noise_precision") {
  const SourceSpec s = model::build_equicorrelated(2, 0.0, {1.0, 1.0});

  const linalg::SymMatrix z = model::noise_precision(s, RateAllocation::zero(2));
  CHECK(z(0, 0) == 0.0);  // exact at r = 0
  CHECK(z(1, 1) == 0.0);

  const linalg::SymMatrix big = model::noise_precision(s, RateAllocation::uniform(2, 40.0));
  CHECK(big(0, 0) == doctest::Approx(1.0).epsilon(1e-14));

  // sigma^2 = 1, r = ln 2: 1 - 1/4 = 0.75
  const linalg::SymMatrix m =
      model::noise_precision(s, RateAllocation({std::log(2.0), std::log(2.0)}));
  CHECK(m(0, 0) == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("info_matrix") {
  const SourceSpec eq = model::build_equicorrelated(3, 0.5, {1, 1, 1});
  const linalg::SymMatrix k0 = model::info_matrix(eq, RateAllocation::zero(3));
  CHECK(k0(0, 0) == doctest::Approx(1.5).epsilon(1e-13));
  CHECK(k0(0, 1) == doctest::Approx(-0.5).epsilon(1e-13));

  const SourceSpec id = model::build_equicorrelated(2, 0.0, {1, 1});
  const double r = 0.37;
  const linalg::SymMatrix k = model::info_matrix(id, RateAllocation::uniform(2, r));
  CHECK(k(0, 0) == doctest::Approx(2.0 - std::exp(-2.0 * r)).epsilon(1e-14));
  CHECK(k(0, 1) == 0.0);
}

TEST_CASE("mmse_trace") {
  const SourceSpec eq = model::build_equicorrelated(3, 0.4, {1, 1, 1});
  CHECK(model::mmse_trace(eq, RateAllocation::zero(3)) ==
        doctest::Approx(eq.trace_cov()).epsilon(1e-12));

  const SourceSpec id = model::build_equicorrelated(2, 0.0, {1, 1});
  CHECK(model::mmse_trace(id, RateAllocation::uniform(2, 40.0)) ==
        doctest::Approx(1.0).epsilon(1e-12));

  // circulant at common r: sum_i 1/beta_i with beta_i = 1/lambda_i + (1-e^{-2r})/sigma^2
  const SourceSpec c4 = model::build_circulant4(0.2, {2, 2, 2, 2});
  const double r = 0.8;
  double want = 0.0;
  for (double lam : c4.cov_eigenvalues())
    want += 1.0 / (1.0 / lam + (1.0 - std::exp(-2.0 * r)) / 2.0);
  CHECK(model::mmse_trace(c4, RateAllocation::uniform(4, r)) ==
        doctest::Approx(want).epsilon(1e-12));

  // equals sum_i 1/alpha_i on random specs
  SplitMix64 rng(7);
  for (int t = 0; t < 30; ++t) {
    const int L = rng.uniform_int(2, 5);
    const SourceSpec s = selfcheck::random_spec(rng, L);
    std::vector<double> rr(L);
    for (double& x : rr) x = rng.uniform(0.0, 3.0);
    const RateAllocation ra(rr);
    double inv_sum = 0.0;
    for (double a : linalg::eig_sym(model::info_matrix(s, ra)).eigenvalues) inv_sum += 1.0 / a;
    CHECK(model::mmse_trace(s, ra) == doctest::Approx(inv_sum).epsilon(1e-11));
  }
}

TEST_CASE("mmse_trace is nonincreasing in each coordinate") {
  SplitMix64 rng(8);
  for (int t = 0; t < 200; ++t) {
    const int L = rng.uniform_int(2, 4);
    const SourceSpec s = selfcheck::random_spec(rng, L);
    std::vector<double> rr(L);
    for (double& x : rr) x = rng.uniform(0.0, 3.0);
    const double base = model::mmse_trace(s, RateAllocation(rr));
    const int i = rng.uniform_int(0, L - 1);
    std::vector<double> up = rr;
    up[i] += 1e-3;
    CHECK(model::mmse_trace(s, RateAllocation(up)) <= base + 1e-12);
  }
}

TEST_CASE("in_B and boundary") {
  const SourceSpec s = model::build_equicorrelated(3, 0.3, {1, 1, 1});
  const double D = 2.0;  // trace_cov = 3
  CHECK_FALSE(model::in_B(s, RateAllocation::zero(3), D));
  CHECK(model::in_B(s, RateAllocation::uniform(3, 30.0), D));

  const double rb = model::symmetric_boundary_r(s, D);
  CHECK(model::on_boundary_B(s, RateAllocation::uniform(3, rb), D, 1e-9));
}

TEST_CASE("r_star") {
  // 2/(2 - e^{-2r}) = 1.5  =>  r = 0.5 ln 1.5
  const SourceSpec id = model::build_equicorrelated(2, 0.0, {1, 1});
  CHECK(model::r_star(id, 1.5) == doctest::Approx(0.5 * std::log(1.5)).epsilon(1e-9));

  // D near phi(0) = tr cov pushes r* to 0
  CHECK(model::r_star(id, 2.0 - 1e-9) < 2e-9 / 1.0 + 1e-6);

  // phi(inf) = 2.618... for this noise level, so D must exceed it
  const SourceSpec c4 = model::build_circulant4(0.2, {2, 2, 2, 2});
  CHECK_THROWS_AS(model::r_star(c4, 2.0), Infeasible);
  const double r = model::r_star(c4, 3.0);
  double phi = 0.0;
  for (double lam : c4.cov_eigenvalues())
    phi += 1.0 / (1.0 / lam + (1.0 - std::exp(-2.0 * r)) / 2.0);
  CHECK(std::abs(phi - 3.0) <= 1e-10 * 3.0);

  CHECK_THROWS_AS(model::r_star(id, 5.0), Infeasible);
  CHECK_THROWS_AS(model::r_star(id, 0.5), Infeasible);
  const SourceSpec lop = SourceSpec(linalg::SymMatrix::identity(2), {1.0, 2.0});
  CHECK_THROWS_AS(model::r_star(lop, 1.5), InvalidInput);  // unequal noise
}

TEST_CASE("cyclic shift invariance") {
  CHECK(model::cyclic_shift_invariant(model::build_circulant4(0.2, {2, 2, 2, 2})));
  CHECK(model::cyclic_shift_invariant(model::build_equicorrelated(3, 0.4, {1, 1, 1})));
  CHECK_FALSE(model::cyclic_shift_invariant(model::build_equicorrelated(3, 0.4, {1, 1, 2})));

  const SourceSpec nonsym = SourceSpec(
      linalg::SymMatrix::from_rows({{1.0, 0.4, 0.0}, {0.4, 1.0, 0.1}, {0.0, 0.1, 1.0}}),
      {1, 1, 1});
  CHECK_FALSE(model::cyclic_shift_invariant(nonsym));
}

TEST_CASE("project_to_boundary lands on the boundary") {
  SplitMix64 rng(9);
  for (int t = 0; t < 50; ++t) {
    const int L = rng.uniform_int(2, 4);
    const SourceSpec s = selfcheck::random_spec(rng, L);
    std::vector<double> rr(L);
    for (double& x : rr) x = rng.uniform(0.2, 4.0);
    const double D = rng.uniform(1.001, 1.8) *
                     model::mmse_trace(s, RateAllocation::uniform(L, 30.0));
    if (D >= s.trace_cov()) continue;
    const RateAllocation proj = model::project_to_boundary(s, RateAllocation(rr), D);
    CHECK(model::on_boundary_B(s, proj, D, 1e-10));
  }
}

TEST_CASE("model JSON loading") {
  const std::string good = R"({
    "cov_x": [[1.0, 0.25], [0.25, 1.0]],
    "noise_var": [0.5, 2.0]
  })";
  const SourceSpec s = model::load_model_json(good);
  CHECK(s.dim() == 2);
  CHECK(s.cov_x()(0, 1) == doctest::Approx(0.25));
  CHECK(s.noise_var()[1] == doctest::Approx(2.0));

  CHECK_THROWS_AS(model::load_model_json("{"), InvalidInput);
  CHECK_THROWS_AS(model::load_model_json(R"({"cov_x": [[1,0],[0,1]]})"), InvalidInput);
  CHECK_THROWS_AS(
      model::load_model_json(R"({"cov_x": [[1, 0.3],[0.2, 1]], "noise_var": [1, 1]})"),
      InvalidInput);
  CHECK_THROWS_AS(
      model::load_model_json(R"({"cov_x": [[1, 0],[0, 1]], "noise_var": [1, -1]})"),
      InvalidInput);
  // not positive definite
  CHECK_THROWS_AS(
      model::load_model_json(R"({"cov_x": [[1, 1],[1, 1]], "noise_var": [1, 1]})"),
      InvalidInput);
}

TEST_CASE("DistortionBudget range") {
  const SourceSpec s = model::build_equicorrelated(2, 0.0, {1, 1});
  CHECK_THROWS_AS(model::DistortionBudget(0.0, s), InvalidInput);
  CHECK_THROWS_AS(model::DistortionBudget(2.0, s), InvalidInput);
  CHECK(model::DistortionBudget(1.5, s).d == doctest::Approx(1.5));
}
