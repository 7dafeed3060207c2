#include <doctest.h>

#include <cmath>

#include "remrate/common.hpp"
#include "remrate/matching.hpp"
#include "remrate/region.hpp"
#include "remrate/selfcheck.hpp"

using namespace remrate;
using model::RateAllocation;
using model::SourceSpec;

TEST_CASE("check_theorem4 window") {
  const SourceSpec s = model::build_equicorrelated(2, 0.0, {1, 1});
  // saturated matrix 2 I: lower = 1, upper = 3/2

  const matching::MatchingReport ok = matching::check_theorem4(s, 1.2);
  CHECK(ok.verdict == matching::Verdict::holds);
  CHECK(ok.slack == doctest::Approx(0.2).epsilon(1e-12));

  const matching::MatchingReport edge = matching::check_theorem4(s, 1.5);
  CHECK(edge.verdict == matching::Verdict::holds);  // upper bound inclusive
  CHECK(edge.slack == doctest::Approx(0.0));

  CHECK(matching::check_theorem4(s, 1.6).verdict == matching::Verdict::fails);
  CHECK(matching::check_theorem4(s, 1.0).verdict == matching::Verdict::fails);
}

TEST_CASE("lemma3 margin at an alpha-equal point") {
  // white source, identical noise, symmetric point: LHS = 0, margin 1/(1+c)
  const SourceSpec s = model::build_equicorrelated(3, 0.0, {1, 1, 1});
  const double m = matching::lemma3_margin(s, RateAllocation::uniform(3, 0.7));
  CHECK(m == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("check_lemma3 verdicts") {
  const SourceSpec mild = model::build_equicorrelated(3, 0.05, {1, 1, 1});
  CHECK(matching::check_lemma3(mild, 1.6, 400).verdict == matching::Verdict::holds);

  const SourceSpec harsh = model::build_equicorrelated(3, 0.9, {0.01, 0.01, 0.01});
  const matching::MatchingReport rep = matching::check_lemma3(harsh, 0.3, 1000);
  CHECK(rep.verdict == matching::Verdict::fails);
  CHECK(rep.slack < 0.0);
  CHECK_FALSE(rep.witnesses.empty());
}

TEST_CASE("check_md_sampled") {
  // L = 1: theta(D, r) is constant, e^{-2r} theta strictly decreasing
  const SourceSpec s1 = SourceSpec(linalg::SymMatrix::identity(1), {1.0});
  CHECK(matching::check_md_sampled(s1, 0.7, 200).verdict == matching::Verdict::holds);

  // inside the Theorem 4 window the condition is implied
  const SourceSpec s = model::build_equicorrelated(3, 0.1, {1, 1, 1});
  const matching::MatchingReport t4 = matching::check_theorem4(s, 1.55);
  REQUIRE(t4.verdict == matching::Verdict::holds);
  CHECK(matching::check_md_sampled(s, 1.55, 300).verdict == matching::Verdict::holds);
}

TEST_CASE("check_md_sampled finds counterexamples on hostile instances") {
  // strongly correlated pair observed once nearly clean and once very
  // noisy: raising the noisy description near r = 0 grows theta faster
  // than e^{2r}
  const SourceSpec s = SourceSpec(
      linalg::SymMatrix::from_rows({{1.0, 0.9}, {0.9, 1.0}}), {10.0, 0.01});
  const matching::MatchingReport rep = matching::check_md_sampled(s, 1.1, 2000);
  CHECK(rep.verdict == matching::Verdict::fails);
  CHECK(rep.slack < 0.0);
  REQUIRE(rep.witnesses.size() == 1);
  CHECK(rep.witnesses[0].size() == 2);
}

TEST_CASE("check_md_sampled is deterministic for a fixed seed") {
  const SourceSpec s = model::build_equicorrelated(2, 0.2, {1, 1});
  const matching::MatchingReport a = matching::check_md_sampled(s, 1.4, 100, 42);
  const matching::MatchingReport b = matching::check_md_sampled(s, 1.4, 100, 42);
  CHECK(a.slack == b.slack);
  REQUIRE(a.witnesses.size() == b.witnesses.size());
  for (std::size_t i = 0; i < a.witnesses.front().size(); ++i)
    CHECK(a.witnesses.front()[i] == b.witnesses.front()[i]);
}

TEST_CASE("check_corollary4") {
  // rho = 0 reduces to the Theorem 4 window: lower = sum_i 1/(1+c_i),
  // upper = (L+1)/max(1+c_i); slacks coincide on a nonempty window
  const std::vector<double> c = {0.5, 0.5, 0.5};
  const matching::MatchingReport rep = matching::check_corollary4(3, 0.0, c, 2.2);
  std::vector<double> noise;
  for (double ci : c) noise.push_back(1.0 / ci);
  const SourceSpec s = model::build_equicorrelated(3, 0.0, noise);
  const matching::MatchingReport t4 = matching::check_theorem4(s, 2.2);
  CHECK(rep.slack == doctest::Approx(t4.slack).epsilon(1e-10));
  CHECK(rep.verdict == matching::Verdict::holds);

  // an asymmetric-noise instance with an empty window
  const matching::MatchingReport empty = matching::check_corollary4(3, 0.0, {1.0, 2.0, 0.5}, 1.4);
  CHECK(empty.verdict == matching::Verdict::not_applicable);
  CHECK(empty.slack < 0.0);

  // identical noise: window coincides with Theorem 6 at c_min = c_max
  const double rho = 0.1, cc = 1.0;
  const model::EquicorrCoeffs co = model::equicorr_inverse_coeffs(3, rho);
  const matching::MatchingReport co4 =
      matching::check_corollary4(3, rho, {cc, cc, cc}, 1.6);
  const matching::MatchingReport t6 = matching::check_theorem6(co.a, co.b, cc, cc, 3, 1.6);
  CHECK(co4.slack == doctest::Approx(t6.slack).epsilon(1e-9));

  CHECK_THROWS_AS(matching::check_corollary4(3, 0.0, {1.0}, 1.0), InvalidInput);
}

TEST_CASE("check_theorem6") {
  // b = 0: window [L/(a+c_min), (L+1)/(a+c_max)]
  const matching::MatchingReport rep = matching::check_theorem6(1.0, 0.0, 1.0, 2.0, 3, 1.6);
  CHECK(rep.slack == doctest::Approx(std::min(1.6 - 1.5, 4.0 / 3.0 - 1.6)).epsilon(1e-12));
  CHECK(rep.verdict == matching::Verdict::fails);  // 1.6 > 4/3

  const matching::MatchingReport ok = matching::check_theorem6(1.0, 0.0, 1.0, 2.0, 3, 1.45);
  // window [1.5, 4/3] is empty in D: 1.45 < 1.5 fails on the lower side too
  CHECK(ok.verdict == matching::Verdict::fails);

  const matching::MatchingReport good = matching::check_theorem6(1.0, 0.0, 1.0, 1.0, 3, 1.7);
  CHECK(good.verdict == matching::Verdict::holds);  // window [1.5, 2]

  // L b >= a + b + c_min is out of scope
  CHECK(matching::check_theorem6(1.0, 2.0, 1.0, 1.0, 3, 1.5).verdict ==
        matching::Verdict::not_applicable);
}

TEST_CASE("check_theorem7") {
  // white source: threshold 0, always holds
  const SourceSpec id = model::build_equicorrelated(3, 0.0, {1, 1, 1});
  CHECK(matching::check_theorem7(id).verdict == matching::Verdict::holds);

  // circulant4: threshold 3|rho|(1+2|rho|)/(1-2|rho|)
  const SourceSpec c4 = model::build_circulant4(0.2, {2, 2, 2, 2});
  const matching::MatchingReport rep = matching::check_theorem7(c4);
  CHECK(rep.verdict == matching::Verdict::holds);
  CHECK(rep.slack == doctest::Approx(2.0 - 1.4).epsilon(1e-12));

  // exactly at the threshold: slack 0
  const SourceSpec edge = model::build_circulant4(0.2, {1.4, 1.4, 1.4, 1.4});
  CHECK(matching::check_theorem7(edge).slack == doctest::Approx(0.0).epsilon(1e-12));

  const SourceSpec below = model::build_circulant4(0.2, {1.0, 1.0, 1.0, 1.0});
  CHECK(matching::check_theorem7(below).verdict == matching::Verdict::fails);

  CHECK_THROWS_AS(
      matching::check_theorem7(SourceSpec(linalg::SymMatrix::identity(2), {1.0, 2.0})),
      InvalidInput);
}

TEST_CASE("theorem8_closed_form") {
  // b = 0: L1 = L and R_sum = (L/2) log(L c / (D(a+c) - L))
  {
    const int L = 3;
    const double a = 1.0, c = 1.0, D = 1.8;
    const matching::Theorem8Result got = matching::theorem8_closed_form(a, 0.0, c, L, D, 0.0);
    REQUIRE(got.applicable);
    CHECK(got.r_sum ==
          doctest::Approx(0.5 * L * std::log(L * c / (D * (a + c) - L))).epsilon(1e-12));
  }

  // window violated
  CHECK_FALSE(matching::theorem8_closed_form(1.0, 0.0, 1.0, 3, 0.9, 0.0).applicable);
  CHECK_FALSE(matching::theorem8_closed_form(1.0, 0.0, 1.0, 3, 2.5, 0.0).applicable);

  // approaching the lower window edge the optimal rate saturates and the
  // sum rate blows up
  {
    const int L = 3;
    const double rho = 0.15, c = 1.0;
    const model::EquicorrCoeffs co = model::equicorr_inverse_coeffs(L, rho);
    const double g = co.a + co.b + c;
    const double lo = L / g * (1.0 + co.b / (g - L * co.b));
    const matching::Theorem8Result near_edge =
        matching::theorem8_closed_form(co.a, co.b, c, L, lo * (1.0 + 1e-10), rho);
    REQUIRE(near_edge.applicable);
    CHECK(near_edge.r_sum > 10.0);
    CHECK(near_edge.r_opt > 5.0);
  }

  // closed form agrees with the numeric minimizer and with J at its argmin
  const int L = 3;
  const double rho = 0.1, c = 1.0;
  const model::EquicorrCoeffs co = model::equicorr_inverse_coeffs(L, rho);
  const double g = co.a + co.b + c;
  const double D = 0.5 * (L / g * (1.0 + co.b / (g - L * co.b)) + (L + 1) / g);
  const matching::Theorem8Result th8 = matching::theorem8_closed_form(co.a, co.b, c, L, D, rho);
  REQUIRE(th8.applicable);

  const SourceSpec spec = model::build_equicorrelated(L, rho, std::vector<double>(L, 1.0 / c));
  const RateAllocation r_opt = RateAllocation::uniform(L, th8.r_opt);
  CHECK(std::abs(model::mmse_trace(spec, r_opt) - D) <= 1e-10);  // argmin on the boundary
  const region::Mask full = (region::Mask{1} << L) - 1;
  CHECK(region::j_inner(spec, r_opt, full) == doctest::Approx(th8.r_sum).epsilon(1e-10));

  const region::SumRateResult num = region::sum_rate_min(spec, D);
  CHECK(std::abs(num.value - th8.r_sum) <= 1e-6);
}

TEST_CASE("theorem9_curve") {
  // rho = 0: four independent unit sources
  const std::vector<double> grid = {0.2, 0.5, 1.0, 2.0};
  const matching::Theorem9Curve indep = matching::theorem9_curve(0.0, 1.0, grid);
  REQUIRE(indep.applicable);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double beta = 1.0 + (1.0 - std::exp(-2.0 * grid[i]));
    CHECK(indep.points[i].D == doctest::Approx(4.0 / beta).epsilon(1e-12));
    CHECK(indep.points[i].R ==
          doctest::Approx(0.5 * (8.0 * grid[i] + 4.0 * std::log(beta))).epsilon(1e-12));
  }

  // matches parametric_curve on the built circulant model
  const matching::Theorem9Curve th9 = matching::theorem9_curve(0.2, 2.0, grid);
  REQUIRE(th9.applicable);
  CHECK(th9.threshold == doctest::Approx(1.4).epsilon(1e-12));
  const SourceSpec c4 = model::build_circulant4(0.2, {2, 2, 2, 2});
  const std::vector<region::CurvePoint> ref = region::parametric_curve(c4, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(th9.points[i].D == doctest::Approx(ref[i].D).epsilon(1e-12));
    CHECK(th9.points[i].R == doctest::Approx(ref[i].R).epsilon(1e-12));
  }

  // below the threshold: not applicable
  CHECK_FALSE(matching::theorem9_curve(0.2, 1.0, grid).applicable);
  CHECK_THROWS_AS(matching::theorem9_curve(0.6, 2.0, grid), InvalidInput);
}

TEST_CASE("white source inside the window: every applicable condition holds") {
  const int L = 2;
  const SourceSpec s = model::build_equicorrelated(L, 0.0, {1.0, 1.0});
  const double D = 1.2;  // window is (1, 1.5]

  CHECK(matching::check_theorem4(s, D).verdict == matching::Verdict::holds);
  CHECK(matching::check_lemma3(s, D, 300).verdict == matching::Verdict::holds);
  CHECK(matching::check_md_sampled(s, D, 300).verdict == matching::Verdict::holds);
  CHECK(matching::check_corollary4(L, 0.0, {1.0, 1.0}, D).verdict == matching::Verdict::holds);
  CHECK(matching::check_theorem6(1.0, 0.0, 1.0, 1.0, L, D).verdict ==
        matching::Verdict::holds);
  CHECK(matching::check_theorem7(s).verdict == matching::Verdict::holds);
  CHECK(matching::theorem8_closed_form(1.0, 0.0, 1.0, L, D, 0.0).applicable);
}

TEST_CASE("implication chain: Theorem 4 => Lemma 3 => MD, sampled") {
  SplitMix64 rng(301);
  int done = 0;
  while (done < 12) {
    const int L = rng.uniform_int(2, 3);
    const SourceSpec sp = selfcheck::random_spec(rng, L);
    const matching::MatchingReport lo = matching::check_theorem4(sp, 0.0);
    (void)lo;
    // locate the window explicitly
    linalg::SymMatrix sat = sp.precision_x();
    for (int i = 0; i < L; ++i) sat.set(i, i, sat(i, i) + sp.c(i));
    const double lower = linalg::trace_inverse_pivoted(sat);
    const double upper = (L + 1) / linalg::eig_sym(sat).eigenvalues.back();
    if (upper <= lower * 1.02) continue;
    const double D = lower + rng.uniform(0.1, 0.9) * (upper - lower);
    REQUIRE(matching::check_theorem4(sp, D).verdict == matching::Verdict::holds);
    CHECK(matching::check_lemma3(sp, D, 150, rng.next_u64()).verdict ==
          matching::Verdict::holds);
    CHECK(matching::check_md_sampled(sp, D, 150, rng.next_u64()).verdict ==
          matching::Verdict::holds);
    ++done;
  }
}
