#include "remrate/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "remrate/waterfill.hpp"

namespace remrate::selfcheck {

namespace {

// Product maximization over the grid by depth-first enumeration of the
// first L-1 coordinates; the last coordinate absorbs the leftover budget.
void grid_scan(const std::vector<double>& floors, double D, double step, int depth,
               double partial_sum, double partial_prod, double& best) {
  const int L = static_cast<int>(floors.size());
  if (depth == L - 1) {
    const double last = D - partial_sum;
    if (last >= floors[depth]) best = std::max(best, partial_prod * last);
    return;
  }
  double tail_floor = 0.0;
  for (int i = depth + 1; i < L; ++i) tail_floor += floors[i];
  for (double x = floors[depth]; partial_sum + x + tail_floor <= D; x += step)
    grid_scan(floors, D, step, depth + 1, partial_sum + x, partial_prod * x, best);
}

}  // namespace

double grid_max_product(const std::vector<double>& floors, double D, int grid_per_axis) {
  const double step = D / grid_per_axis;
  double best = 0.0;
  grid_scan(floors, D, step, 0, 0.0, 1.0, best);
  return best;
}

double det_elimination(std::vector<std::vector<double>> m) {
  const int n = static_cast<int>(m.size());
  double det = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int i = col + 1; i < n; ++i)
      if (std::abs(m[i][col]) > std::abs(m[piv][col])) piv = i;
    if (m[piv][col] == 0.0) return 0.0;
    if (piv != col) {
      std::swap(m[piv], m[col]);
      det = -det;
    }
    det *= m[col][col];
    for (int i = col + 1; i < n; ++i) {
      const double f = m[i][col] / m[col][col];
      for (int j = col; j < n; ++j) m[i][j] -= f * m[col][j];
    }
  }
  return det;
}

namespace {

using Rows = std::vector<std::vector<double>>;

// Solves A X = B in place by Gauss-Jordan; A square, B is n x k.
Rows solve_rows(Rows a, Rows b) {
  const int n = static_cast<int>(a.size());
  const int k = static_cast<int>(b[0].size());
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int i = col + 1; i < n; ++i)
      if (std::abs(a[i][col]) > std::abs(a[piv][col])) piv = i;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    const double p = a[col][col];
    for (int j = 0; j < n; ++j) a[col][j] /= p;
    for (int j = 0; j < k; ++j) b[col][j] /= p;
    for (int i = 0; i < n; ++i) {
      if (i == col) continue;
      const double f = a[i][col];
      if (f == 0.0) continue;
      for (int j = 0; j < n; ++j) a[i][j] -= f * a[col][j];
      for (int j = 0; j < k; ++j) b[i][j] -= f * b[col][j];
    }
  }
  return b;
}

// log det of Cov(Y_S | U_A) from the joint blocks.
double log_det_conditional(const Rows& cov_yy, const Rows& cov_yu, const Rows& cov_uu,
                           const std::vector<int>& sel_y, const std::vector<int>& sel_u) {
  const int ns = static_cast<int>(sel_y.size());
  const int na = static_cast<int>(sel_u.size());
  Rows s(ns, std::vector<double>(ns));
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < ns; ++j) s[i][j] = cov_yy[sel_y[i]][sel_y[j]];
  if (na > 0) {
    Rows a(na, std::vector<double>(na));
    Rows bt(na, std::vector<double>(ns));  // Cov(U_A, Y_S)
    for (int i = 0; i < na; ++i) {
      for (int j = 0; j < na; ++j) a[i][j] = cov_uu[sel_u[i]][sel_u[j]];
      for (int j = 0; j < ns; ++j) bt[i][j] = cov_yu[sel_y[j]][sel_u[i]];
    }
    const Rows x = solve_rows(a, bt);  // A^{-1} Cov(U_A, Y_S)
    for (int i = 0; i < ns; ++i)
      for (int j = 0; j < ns; ++j) {
        double dot = 0.0;
        for (int t = 0; t < na; ++t) dot += cov_yu[sel_y[i]][sel_u[t]] * x[t][j];
        s[i][j] -= dot;
      }
  }
  return std::log(det_elimination(s));
}

}  // namespace

double gaussian_mi_oracle(const model::SourceSpec& spec, const model::RateAllocation& r,
                          region::Mask S) {
  const int L = spec.dim();
  Rows cov_yy(L, std::vector<double>(L));
  Rows cov_yu(L, std::vector<double>(L));
  Rows cov_uu(L, std::vector<double>(L));
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j) {
      double v = spec.cov_x()(i, j);
      if (i == j) v += spec.noise_var()[i];
      cov_yy[i][j] = v;
      cov_yu[i][j] = v;
      cov_uu[i][j] = v;
    }
  for (int i = 0; i < L; ++i) {
    if (r.r[i] > 0.0)
      cov_uu[i][i] += spec.noise_var()[i] / std::expm1(2.0 * r.r[i]);
    else
      cov_uu[i][i] = std::numeric_limits<double>::quiet_NaN();  // constant U_i, must be dropped
  }

  std::vector<int> sel_s, sel_c, sel_all;
  for (int i = 0; i < L; ++i) {
    if (r.r[i] <= 0.0) continue;  // constant description carries nothing
    if (S & (region::Mask{1} << i))
      sel_s.push_back(i);
    else
      sel_c.push_back(i);
  }
  if (sel_s.empty()) return 0.0;
  sel_all = sel_c;
  sel_all.insert(sel_all.end(), sel_s.begin(), sel_s.end());
  std::sort(sel_all.begin(), sel_all.end());

  // I(U_S; Y_S | U_C) = h(Y_S | U_C) - h(Y_S | U_{S u C})
  const double ld_given_c = log_det_conditional(cov_yy, cov_yu, cov_uu, sel_s, sel_c);
  const double ld_given_all = log_det_conditional(cov_yy, cov_yu, cov_uu, sel_s, sel_all);
  return 0.5 * (ld_given_c - ld_given_all);
}

std::vector<double> fd_eig_sensitivity(const linalg::SymMatrix& m, int i, double step) {
  linalg::SymMatrix plus = m, minus = m;
  plus.set(i, i, m(i, i) + step);
  minus.set(i, i, m(i, i) - step);
  const std::vector<double> ep = linalg::eig_sym(plus).eigenvalues;
  const std::vector<double> em = linalg::eig_sym(minus).eigenvalues;
  std::vector<double> out(ep.size());
  for (std::size_t k = 0; k < ep.size(); ++k) out[k] = (ep[k] - em[k]) / (2.0 * step);
  return out;
}

model::SourceSpec random_spec(SplitMix64& rng, int L) {
  // A^T A / L plus a random diagonal shift keeps the spectrum well away
  // from zero without flattening the correlations.
  std::vector<std::vector<double>> a(L, std::vector<double>(L));
  for (auto& row : a)
    for (double& x : row) x = rng.uniform(-1.0, 1.0);
  linalg::SymMatrix cov(L);
  for (int i = 0; i < L; ++i)
    for (int j = i; j < L; ++j) {
      double s = 0.0;
      for (int k = 0; k < L; ++k) s += a[k][i] * a[k][j];
      cov.set(i, j, s / L + (i == j ? rng.uniform(0.4, 1.2) : 0.0));
    }
  std::vector<double> noise(L);
  for (double& v : noise) v = rng.uniform(0.3, 3.0);
  return model::SourceSpec(std::move(cov), std::move(noise));
}

SuiteResult run_waterfill_suite(int n_instances, std::uint64_t seed) {
  SplitMix64 rng(seed);
  constexpr int grid = 200;
  double worst = 0.0;
  bool pass = true;
  for (int t = 0; t < n_instances; ++t) {
    const int L = rng.uniform_int(2, 4);
    std::vector<double> floors(L);
    double fsum = 0.0;
    for (double& f : floors) {
      f = rng.uniform(0.1, 2.0);
      fsum += f;
    }
    const double D = fsum * (1.0 + rng.uniform(0.0, 2.0));
    const waterfill::WaterfillResult wf = waterfill::waterfill(floors, D);
    const double gmax = grid_max_product(floors, D, grid);

    // The analytic optimum dominates every grid point; rounding the true
    // maximizer down one grid step bounds the gap from the other side.
    double min_comp = wf.components[0];
    for (double c : wf.components) min_comp = std::min(min_comp, c);
    const double cell_bound = wf.theta * L * (D / grid) / min_comp;
    const double err = std::max(gmax - wf.theta, wf.theta - gmax - cell_bound) / wf.theta;
    worst = std::max(worst, err);
    if (err > 1e-12) pass = false;

    // KKT residuals: budget met, free components at the level, clamped
    // components above it.
    double ssum = 0.0;
    double kkt = 0.0;
    for (int i = 0; i < L; ++i) {
      ssum += wf.components[i];
      if (wf.components[i] > floors[i])
        kkt = std::max(kkt, std::abs(wf.components[i] - wf.level));
      else
        kkt = std::max(kkt, std::max(0.0, wf.level - floors[i]));
    }
    kkt = std::max(kkt, std::abs(ssum - D) / D);
    worst = std::max(worst, kkt);
    if (kkt > 1e-10) pass = false;
  }
  return {"waterfill_grid", pass, worst, n_instances};
}

SuiteResult run_sensitivity_suite(int n_instances, std::uint64_t seed) {
  SplitMix64 rng(seed);
  double worst = 0.0;
  bool pass = true;
  int done = 0;
  while (done < n_instances) {
    const int L = rng.uniform_int(2, 4);
    linalg::SymMatrix m(L);
    for (int i = 0; i < L; ++i)
      for (int j = i; j < L; ++j)
        m.set(i, j, i == j ? rng.uniform(1.0, 2.0) + 0.9 * i : rng.uniform(-0.4, 0.4));
    std::vector<double> sens;
    try {
      sens = linalg::eig_sensitivity(m, 0);
    } catch (const DegenerateSpectrum&) {
      continue;
    }
    const std::vector<double> fd = fd_eig_sensitivity(m, 0);
    double sum = 0.0, fd_err = 0.0;
    for (int k = 0; k < L; ++k) {
      sum += sens[k];
      fd_err = std::max(fd_err, std::abs(sens[k] - fd[k]));
    }
    const double sum_err = std::abs(sum - 1.0);
    if (fd_err > 1e-5 || sum_err > 1e-10) pass = false;
    worst = std::max({worst, fd_err, sum_err});
    ++done;
  }
  return {"eig_sensitivity_fd", pass, worst, n_instances};
}

SuiteResult run_det_identity_suite(int n_instances, std::uint64_t seed) {
  SplitMix64 rng(seed);
  double worst = 0.0;
  bool pass = true;
  for (int t = 0; t < n_instances; ++t) {
    const int L = rng.uniform_int(2, 6);
    const double delta = rng.uniform(-1.0, 1.0);
    std::vector<double> z(L);
    for (double& zi : z) {
      do {
        zi = rng.uniform(-3.0, 3.0);
      } while (std::abs(zi - delta) < 1e-3);
    }
    std::vector<std::vector<double>> rows(L, std::vector<double>(L, delta));
    for (int i = 0; i < L; ++i) rows[i][i] = z[i];
    const double ref = det_elimination(rows);
    const double got = linalg::det_uniform_offdiag(z, delta);
    const double err = std::abs(got - ref) / std::max(1e-30, std::abs(ref));
    worst = std::max(worst, err);
    if (err > 1e-10) pass = false;
  }
  return {"det_uniform_offdiag", pass, worst, n_instances};
}

SuiteResult run_mi_oracle_suite(int n_instances, std::uint64_t seed) {
  SplitMix64 rng(seed);
  double worst = 0.0;
  bool pass = true;
  for (int t = 0; t < n_instances; ++t) {
    const int L = rng.uniform_int(2, 4);
    const model::SourceSpec spec = random_spec(rng, L);
    std::vector<double> r(L);
    for (double& x : r) x = rng.next_double() < 0.15 ? 0.0 : rng.uniform(0.05, 2.0);
    const model::RateAllocation ra(r);
    const region::Mask S =
        static_cast<region::Mask>(rng.uniform_int(1, (1 << L) - 1));
    const double lhs = region::j_inner(spec, ra, S);
    const double rhs = gaussian_mi_oracle(spec, ra, S);
    const double err = std::abs(lhs - rhs);
    worst = std::max(worst, err);
    if (err > 1e-8) pass = false;
  }
  return {"gaussian_mi_oracle", pass, worst, n_instances};
}

}  // namespace remrate::selfcheck
