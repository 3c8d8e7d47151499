#pragma once

#include <Eigen/Dense>
#include <string>

#include "tlreg/errors.hpp"
#include "tlreg/rng.hpp"

namespace tlreg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Relative cutoff below which singular values count as zero:
/// sigma_k < tol * sigma_max  =>  rank-deficient direction.
inline double pinv_rank_tolerance(Index rows, Index cols) {
  return 1e-12 * static_cast<double>(std::max(rows, cols));
}

/// Row covariance of a Gaussian ensemble: either the exact identity (no
/// factorization ever happens on this path) or an explicit SPD matrix with
/// its Cholesky factor cached at construction.
class Covariance {
 public:
  static Covariance identity() { return Covariance(); }
  /// Throws SymmetryError / NotSpdError.
  static Covariance dense(Matrix spd);
  static Covariance diagonal(const Vector& diag);

  bool is_identity() const { return identity_; }
  /// 0 for the identity flag (dimension-free), matrix size otherwise.
  Index dim() const { return identity_ ? 0 : matrix_.rows(); }
  void require_dim(Index d) const;

  const Matrix& matrix() const;          // dense form; invalid for identity
  const Matrix& cholesky_lower() const;  // invalid for identity
  Matrix materialize(Index d) const;     // I_d for identity, copy otherwise

  double quadratic_form(const Vector& v) const;  // v' S v

 private:
  Covariance() : identity_(true) {}
  bool identity_;
  Matrix matrix_;
  Matrix chol_lower_;
};

/// Rows are i.i.d. N(0, row_covariance) draws; entries consumed from `rng`
/// in row-major order so the sequence is schedule-independent.
Matrix sample_gaussian_matrix(Index rows, Index cols, const Covariance& row_covariance, Rng& rng);

/// Minimum-l2-norm least-squares solution A+ b via rank-revealing SVD.
Vector pseudoinverse_apply(const Matrix& A, const Vector& b);

/// Full Moore-Penrose pseudoinverse (mostly for oracle checks).
Matrix pseudoinverse(const Matrix& A);

struct SymEig {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // orthonormal columns, matching order
  bool negative_flagged;
};

/// Throws SymmetryError when ||S - S'||_max > 1e-10 * ||S||_max.
SymEig sym_eigendecomposition(const Matrix& S);

struct SpdSolve {
  Matrix solution;
  bool jitter_applied;
};

/// Cholesky solve of A X = B with a one-shot jitter retry
/// (A += 1e-12 * trace(A)/d * I) when the factorization fails.
SpdSolve solve_spd(Matrix A, const Matrix& rhs);

/// Text matrix format: first line "rows cols", then row-major values.
Matrix load_matrix(const std::string& path);
void save_matrix(const std::string& path, const Matrix& m);

}  // namespace tlreg
