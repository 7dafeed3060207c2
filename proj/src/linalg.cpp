#include "remrate/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "remrate/common.hpp"

namespace remrate::linalg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_finite(const SymMatrix& m, const char* who) {
  if (!m.all_finite()) throw InvalidInput(std::string(who) + ": non-finite matrix entry");
}

}  // namespace

SymMatrix::SymMatrix(int dim) : dim_(dim) {
  if (dim < 1) throw InvalidInput("SymMatrix: dim must be >= 1");
  a_.assign(static_cast<std::size_t>(dim) * dim, 0.0);
}

SymMatrix SymMatrix::identity(int dim) {
  SymMatrix m(dim);
  for (int i = 0; i < dim; ++i) m.set(i, i, 1.0);
  return m;
}

SymMatrix SymMatrix::from_rows(const std::vector<std::vector<double>>& rows, double sym_tol) {
  const int n = static_cast<int>(rows.size());
  if (n < 1) throw InvalidInput("SymMatrix::from_rows: empty matrix");
  SymMatrix m(n);
  double scale = 0.0;
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n)
      throw InvalidInput("SymMatrix::from_rows: matrix is not square");
    for (int j = 0; j < n; ++j) {
      if (!std::isfinite(rows[i][j]))
        throw InvalidInput("SymMatrix::from_rows: non-finite entry");
      scale = std::max(scale, std::abs(rows[i][j]));
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      if (std::abs(rows[i][j] - rows[j][i]) > sym_tol * std::max(1.0, scale))
        throw InvalidInput("SymMatrix::from_rows: matrix is not symmetric");
      m.set(i, j, 0.5 * (rows[i][j] + rows[j][i]));
    }
  return m;
}

double SymMatrix::max_abs() const {
  double v = 0.0;
  for (double x : a_) v = std::max(v, std::abs(x));
  return v;
}

bool SymMatrix::all_finite() const {
  for (double x : a_)
    if (!std::isfinite(x)) return false;
  return true;
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
  return t;
}

SpectralDecomp eig_sym(const SymMatrix& m) {
  require_finite(m, "eig_sym");
  const int n = m.dim();

  std::vector<double> a = m.data();
  std::vector<double> q(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) q[static_cast<std::size_t>(i) * n + i] = 1.0;

  auto A = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
  auto Q = [&](int i, int j) -> double& { return q[static_cast<std::size_t>(i) * n + j]; };

  const double scale = std::max(m.max_abs(), 1e-300);
  const double tol = 1e-15 * scale;

  for (int sweep = 0; sweep < 64 && n > 1; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int r = p + 1; r < n; ++r) off = std::max(off, std::abs(A(p, r)));
    if (off <= tol) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int r = p + 1; r < n; ++r) {
        const double apq = A(p, r);
        if (std::abs(apq) <= tol * 1e-2) continue;
        const double app = A(p, p);
        const double aqq = A(r, r);
        const double theta = 0.5 * (aqq - app) / apq;
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        A(p, p) = app - t * apq;
        A(r, r) = aqq + t * apq;
        A(p, r) = 0.0;
        A(r, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          if (k == p || k == r) continue;
          const double akp = A(k, p);
          const double akq = A(k, r);
          A(k, p) = akp - s * (akq + tau * akp);
          A(p, k) = A(k, p);
          A(k, r) = akq + s * (akp - tau * akq);
          A(r, k) = A(k, r);
        }
        for (int k = 0; k < n; ++k) {
          const double qkp = Q(k, p);
          const double qkq = Q(k, r);
          Q(k, p) = qkp - s * (qkq + tau * qkp);
          Q(k, r) = qkq + s * (qkp - tau * qkq);
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return A(i, i) < A(j, j); });

  SpectralDecomp d;
  d.dim = n;
  d.eigenvalues.resize(n);
  d.basis.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int k = 0; k < n; ++k) {
    const int src = order[k];
    d.eigenvalues[k] = A(src, src);
    // Sign convention: the largest-magnitude component is positive.
    int imax = 0;
    for (int i = 1; i < n; ++i)
      if (std::abs(Q(i, src)) > std::abs(Q(imax, src))) imax = i;
    const double flip = Q(imax, src) < 0.0 ? -1.0 : 1.0;
    for (int i = 0; i < n; ++i)
      d.basis[static_cast<std::size_t>(i) * n + k] = flip * Q(i, src);
  }
  return d;
}

namespace {

// Elimination on a scratch copy; returns pivots merged into log|det| + sign.
LogDet eliminate(std::vector<double> a, int n) {
  double log_abs = 0.0;
  int sign = 1;
  auto A = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int i = col + 1; i < n; ++i)
      if (std::abs(A(i, col)) > std::abs(A(piv, col))) piv = i;
    if (A(piv, col) == 0.0) return {-kInf, 0};
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(A(piv, j), A(col, j));
      sign = -sign;
    }
    const double p = A(col, col);
    log_abs += std::log(std::abs(p));
    if (p < 0.0) sign = -sign;
    for (int i = col + 1; i < n; ++i) {
      const double f = A(i, col) / p;
      if (f == 0.0) continue;
      for (int j = col; j < n; ++j) A(i, j) -= f * A(col, j);
    }
  }
  return {log_abs, sign};
}

}  // namespace

LogDet log_det_pivoted(const SymMatrix& m) {
  require_finite(m, "log_det_pivoted");
  return eliminate(m.data(), m.dim());
}

double det_pivoted(const SymMatrix& m) {
  const LogDet d = log_det_pivoted(m);
  if (d.sign == 0) return 0.0;
  return d.sign * std::exp(d.log_abs);
}

SymMatrix inverse_pivoted(const SymMatrix& m) {
  require_finite(m, "inverse_pivoted");
  const int n = m.dim();
  std::vector<double> a = m.data();
  std::vector<double> inv(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) inv[static_cast<std::size_t>(i) * n + i] = 1.0;
  auto A = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
  auto B = [&](int i, int j) -> double& { return inv[static_cast<std::size_t>(i) * n + j]; };

  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int i = col + 1; i < n; ++i)
      if (std::abs(A(i, col)) > std::abs(A(piv, col))) piv = i;
    if (A(piv, col) == 0.0) throw InvalidInput("inverse_pivoted: singular matrix");
    if (piv != col)
      for (int j = 0; j < n; ++j) {
        std::swap(A(piv, j), A(col, j));
        std::swap(B(piv, j), B(col, j));
      }
    const double p = A(col, col);
    for (int j = 0; j < n; ++j) {
      A(col, j) /= p;
      B(col, j) /= p;
    }
    for (int i = 0; i < n; ++i) {
      if (i == col) continue;
      const double f = A(i, col);
      if (f == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        A(i, j) -= f * A(col, j);
        B(i, j) -= f * B(col, j);
      }
    }
  }
  SymMatrix out(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) out.set(i, j, 0.5 * (B(i, j) + B(j, i)));
  return out;
}

double trace_inverse_pivoted(const SymMatrix& m) {
  const SymMatrix inv = inverse_pivoted(m);
  return inv.trace();
}

SymMatrix inverse_from_eig(const SpectralDecomp& d) {
  const int n = d.dim;
  SymMatrix out(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += d.basis_at(i, k) * d.basis_at(j, k) / d.eigenvalues[k];
      out.set(i, j, s);
    }
  return out;
}

double det_uniform_offdiag(const std::vector<double>& z, double delta) {
  const int n = static_cast<int>(z.size());
  if (n < 1) throw InvalidInput("det_uniform_offdiag: empty diagonal");
  double scale = std::abs(delta);
  for (double zi : z) {
    if (!std::isfinite(zi)) throw InvalidInput("det_uniform_offdiag: non-finite entry");
    scale = std::max(scale, std::abs(zi));
  }
  if (!std::isfinite(delta)) throw InvalidInput("det_uniform_offdiag: non-finite delta");

  bool degenerate = false;
  for (double zi : z)
    if (std::abs(zi - delta) <= 1e-14 * std::max(1.0, scale)) degenerate = true;
  if (degenerate) {
    // The closed form divides by z_i - delta; assemble and eliminate instead.
    SymMatrix m(n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) m.set(i, j, i == j ? z[i] : delta);
    return det_pivoted(m);
  }

  double prod = 1.0;
  double sum = 0.0;
  for (double zi : z) {
    prod *= zi - delta;
    sum += 1.0 / (zi - delta);
  }
  return prod * (1.0 + delta * sum);
}

namespace {

struct ValueGroup {
  double rep;  // group mean
  int count;
};

// Groups sorted values whose spread stays within a relative tolerance.
std::vector<ValueGroup> group_values(std::vector<double> v, double rel_tol) {
  std::sort(v.begin(), v.end());
  double scale = 1.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  const double tol = rel_tol * scale;

  std::vector<ValueGroup> groups;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i + 1;
    double sum = v[i];
    while (j < v.size() && v[j] - v[i] <= tol) sum += v[j++];
    groups.push_back({sum / static_cast<double>(j - i), static_cast<int>(j - i)});
    i = j;
  }
  return groups;
}

// Bisection for a root in the open interval (lo, hi) where f carries the
// analytically known signs sign_lo / sign_hi at the endpoints. Endpoints are
// never evaluated (f may blow up there).
template <typename F>
double bisect_open(F f, double lo, double hi, int sign_lo) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // interval exhausted at double precision
    const double fm = f(mid);
    const int sm = fm > 0.0 ? 1 : (fm < 0.0 ? -1 : 0);
    if (sm == 0) return mid;
    if (sm == sign_lo)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-14 * (1.0 + std::max(std::abs(lo), std::abs(hi)))) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<double> secular_eig_equicorr(const std::vector<double>& u, double b) {
  const int n = static_cast<int>(u.size());
  if (n < 1) throw InvalidInput("secular_eig_equicorr: empty diagonal");
  for (double x : u)
    if (!std::isfinite(x)) throw InvalidInput("secular_eig_equicorr: non-finite entry");
  if (!std::isfinite(b)) throw InvalidInput("secular_eig_equicorr: non-finite off-diagonal");

  std::vector<double> eig;
  if (n == 1 || b == 0.0) {
    eig = u;
    std::sort(eig.begin(), eig.end());
  } else {
    const std::vector<ValueGroup> groups = group_values(u, 1e-9);
    const int m = static_cast<int>(groups.size());

    // Deflated values q_j = u_j - b carry multiplicity l_j - 1; the m free
    // roots solve 1 + b * sum_j l_j / (q_j - alpha) = 0 and interlace with
    // the q_j (below them for b < 0, above them for b > 0).
    std::vector<double> q(m);
    for (int j = 0; j < m; ++j) {
      q[j] = groups[j].rep - b;
      for (int k = 0; k < groups[j].count - 1; ++k) eig.push_back(q[j]);
    }

    double gersh_lo = kInf, gersh_hi = -kInf;
    for (double ui : u) {
      gersh_lo = std::min(gersh_lo, ui - (n - 1) * std::abs(b));
      gersh_hi = std::max(gersh_hi, ui + (n - 1) * std::abs(b));
    }

    auto f = [&](double alpha) {
      double s = 0.0;
      for (int j = 0; j < m; ++j) s += groups[j].count / (q[j] - alpha);
      return 1.0 + b * s;
    };

    if (b < 0.0) {
      // f decreases on each interval: f(-inf)=1, f(q_j-)=-inf, f(q_j+)=+inf.
      eig.push_back(bisect_open(f, gersh_lo - 1.0, q[0], +1));
      for (int j = 0; j + 1 < m; ++j) eig.push_back(bisect_open(f, q[j], q[j + 1], +1));
    } else {
      // f increases on each interval: f(q_j+)=-inf, f(q_j-)=+inf, f(+inf)=1.
      for (int j = 0; j + 1 < m; ++j) eig.push_back(bisect_open(f, q[j], q[j + 1], -1));
      eig.push_back(bisect_open(f, q[m - 1], gersh_hi + 1.0, -1));
    }
    std::sort(eig.begin(), eig.end());
  }

  if (eig.front() <= 0.0)
    throw InvalidInput("secular_eig_equicorr: matrix is not positive definite");
  return eig;
}

std::vector<double> secular_eig_bordered(double u1, const std::vector<double>& etas,
                                         const std::vector<double>& btilde) {
  const int k = static_cast<int>(etas.size());
  if (static_cast<int>(btilde.size()) != k)
    throw InvalidInput("secular_eig_bordered: etas/btilde size mismatch");
  if (!std::isfinite(u1)) throw InvalidInput("secular_eig_bordered: non-finite u1");
  for (int i = 0; i < k; ++i)
    if (!std::isfinite(etas[i]) || !std::isfinite(btilde[i]))
      throw InvalidInput("secular_eig_bordered: non-finite entry");

  // Group eta values and accumulate the squared coupling per group.
  struct Entry {
    double eta, b2;
  };
  std::vector<Entry> ord(k);
  for (int i = 0; i < k; ++i) ord[i] = {etas[i], btilde[i] * btilde[i]};
  std::sort(ord.begin(), ord.end(), [](const Entry& a, const Entry& b) { return a.eta < b.eta; });

  double scale = std::abs(u1);
  for (const Entry& e : ord) scale = std::max(scale, std::abs(e.eta));
  const double tol = 1e-9 * std::max(1.0, scale);

  struct Group {
    double rep;
    int count;
    double eps;
  };
  std::vector<Group> groups;
  {
    int i = 0;
    while (i < k) {
      int j = i + 1;
      double sum = ord[i].eta, eps = ord[i].b2;
      while (j < k && ord[j].eta - ord[i].eta <= tol) {
        sum += ord[j].eta;
        eps += ord[j].b2;
        ++j;
      }
      groups.push_back({sum / (j - i), j - i, eps});
      i = j;
    }
  }

  std::vector<double> eig;
  std::vector<double> coupled;  // reps with eps > 0, ascending
  std::vector<double> eps;
  for (const Group& g : groups) {
    if (g.eps > 0.0) {
      coupled.push_back(g.rep);
      eps.push_back(g.eps);
      for (int c = 0; c < g.count - 1; ++c) eig.push_back(g.rep);
    } else {
      for (int c = 0; c < g.count; ++c) eig.push_back(g.rep);
    }
  }
  const int w = static_cast<int>(coupled.size());

  if (w == 0) {
    eig.push_back(u1);  // decoupled border row
  } else {
    // F(alpha) = alpha - u1 - sum_j eps_j/(alpha - eta_j), increasing on each
    // interval, -inf at the left end and +inf at the right end of each.
    auto F = [&](double alpha) {
      double s = alpha - u1;
      for (int j = 0; j < w; ++j) s -= eps[j] / (alpha - coupled[j]);
      return s;
    };
    double abs_b_sum = 0.0;
    for (double bi : btilde) abs_b_sum += std::abs(bi);
    double gersh_lo = u1 - abs_b_sum, gersh_hi = u1 + abs_b_sum;
    for (int i = 0; i < k; ++i) {
      gersh_lo = std::min(gersh_lo, etas[i] - std::abs(btilde[i]));
      gersh_hi = std::max(gersh_hi, etas[i] + std::abs(btilde[i]));
    }

    eig.push_back(bisect_open(F, gersh_lo - 1.0, coupled[0], -1));
    for (int j = 0; j + 1 < w; ++j) eig.push_back(bisect_open(F, coupled[j], coupled[j + 1], -1));
    eig.push_back(bisect_open(F, coupled[w - 1], gersh_hi + 1.0, -1));
  }

  std::sort(eig.begin(), eig.end());
  if (eig.front() <= 0.0)
    throw InvalidInput("secular_eig_bordered: matrix is not positive definite");
  return eig;
}

std::vector<double> eig_sensitivity(const SymMatrix& m, int i) {
  const int n = m.dim();
  if (i < 0 || i >= n) throw InvalidInput("eig_sensitivity: index out of range");
  const SpectralDecomp d = eig_sym(m);
  if (d.eigenvalues.front() <= 0.0)
    throw InvalidInput("eig_sensitivity: matrix is not positive definite");
  const double sep = 1e-8 * std::max(1.0, std::abs(d.eigenvalues.back()));
  for (int k = 0; k + 1 < n; ++k)
    if (d.eigenvalues[k + 1] - d.eigenvalues[k] < sep)
      throw DegenerateSpectrum("eig_sensitivity: repeated eigenvalues");

  std::vector<double> s(n);
  for (int k = 0; k < n; ++k) {
    const double v = d.basis_at(i, k);
    s[k] = v * v;
  }
  return s;
}

}  // namespace remrate::linalg
