#pragma once

#include <vector>

namespace remrate::linalg {

// Dense symmetric matrix with full row-major storage. Symmetry is kept
// exact by construction: set() writes both (i,j) and (j,i).
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int dim);

  static SymMatrix identity(int dim);

  // Validates max|m[i][j] - m[j][i]| <= sym_tol * max|entry|, then
  // symmetrizes exactly as (M + M^T)/2.
  static SymMatrix from_rows(const std::vector<std::vector<double>>& rows,
                             double sym_tol = 1e-12);

  int dim() const { return dim_; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * dim_ + j]; }

  void set(int i, int j, double v) {
    a_[static_cast<std::size_t>(i) * dim_ + j] = v;
    a_[static_cast<std::size_t>(j) * dim_ + i] = v;
  }

  double max_abs() const;
  bool all_finite() const;
  double trace() const;

  const std::vector<double>& data() const { return a_; }

 private:
  int dim_ = 0;
  std::vector<double> a_;
};

// Eigenvalues ascending; basis column k (row-major storage) is the unit
// eigenvector of eigenvalues[k]. Q^T Q = I to ~1e-15, reconstruction
// Q diag Q^T = M to ~1e-15 * |M|.
struct SpectralDecomp {
  int dim = 0;
  std::vector<double> eigenvalues;
  std::vector<double> basis;  // row-major dim x dim

  double basis_at(int i, int k) const { return basis[static_cast<std::size_t>(i) * dim + k]; }
};

// Cyclic Jacobi rotations to machine precision. Deterministic for a fixed
// input: fixed sweep order, sign-canonicalized eigenvectors.
SpectralDecomp eig_sym(const SymMatrix& m);

// Gaussian elimination with partial pivoting.
double det_pivoted(const SymMatrix& m);

struct LogDet {
  double log_abs;  // -inf for a singular matrix
  int sign;        // -1, 0, +1
};
LogDet log_det_pivoted(const SymMatrix& m);

// Inverse by pivoted elimination; result symmetrized.
SymMatrix inverse_pivoted(const SymMatrix& m);

// trace(M^{-1}) without forming the full inverse.
double trace_inverse_pivoted(const SymMatrix& m);

// Q diag(1/lambda) Q^T from a decomposition of a positive definite matrix.
SymMatrix inverse_from_eig(const SpectralDecomp& d);

// det of the matrix with diagonal z_i and every off-diagonal entry delta:
//   {prod_i (z_i - delta)} * {1 + delta * sum_i 1/(z_i - delta)}.
// Entries with z_i == delta (within 1e-14 of the data scale) make the
// closed form divide by zero; those inputs fall through to det_pivoted.
double det_uniform_offdiag(const std::vector<double>& z, double delta);

// All L eigenvalues, ascending, of the matrix with diagonal u_i and every
// off-diagonal entry b (either sign; b = 0 returns sorted u). Diagonal
// values are grouped at relative tolerance 1e-9: each group of size l
// contributes the deflated value u - b with multiplicity l-1, and the
// remaining roots of the secular equation are found by bisection inside
// the interlacing brackets. Throws InvalidInput if the matrix is not
// positive definite.
std::vector<double> secular_eig_equicorr(const std::vector<double>& u, double b);

// All L eigenvalues, ascending, of the bordered matrix
//   [ u1      btilde ]
//   [ btilde' diag(etas) ].
// Eta values are grouped at relative tolerance 1e-9; groups with coupling
// eps_j = sum of squared btilde entries equal to zero keep their full
// multiplicity, groups with eps_j > 0 lose one copy to the secular roots
// of u1 = alpha - sum_j eps_j / (alpha - eta_j). Throws InvalidInput if
// the matrix is not positive definite.
std::vector<double> secular_eig_bordered(double u1, const std::vector<double>& etas,
                                         const std::vector<double>& btilde);

// d alpha_k / d m_ii for k = 1..L: the squared i-th component of each unit
// eigenvector. Requires a positive definite matrix whose eigenvalues are
// separated by more than 1e-8 * max(1, |alpha_max|); otherwise throws
// DegenerateSpectrum and the caller must fall back to finite differences.
std::vector<double> eig_sensitivity(const SymMatrix& m, int i);

}  // namespace remrate::linalg
