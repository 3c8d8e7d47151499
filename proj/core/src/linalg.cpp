#include "tlreg/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <fstream>
#include <sstream>

namespace tlreg {

Covariance Covariance::dense(Matrix spd) {
  if (spd.rows() != spd.cols() || spd.rows() == 0)
    throw ShapeError("covariance must be square and nonempty");
  const double scale = spd.cwiseAbs().maxCoeff();
  if ((spd - spd.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1e-300))
    throw SymmetryError("covariance is not symmetric");
  Covariance c;
  c.identity_ = false;
  Eigen::LLT<Matrix> llt(spd);
  if (llt.info() != Eigen::Success)
    throw NotSpdError("covariance is not positive definite (Cholesky failed)");
  c.chol_lower_ = llt.matrixL();
  c.matrix_ = std::move(spd);
  return c;
}

Covariance Covariance::diagonal(const Vector& diag) {
  if (diag.size() == 0) throw ShapeError("empty diagonal covariance");
  if (diag.minCoeff() <= 0.0) throw NotSpdError("diagonal covariance has a non-positive entry");
  Covariance c;
  c.identity_ = false;
  c.matrix_ = diag.asDiagonal();
  c.chol_lower_ = diag.cwiseSqrt().asDiagonal();
  return c;
}

void Covariance::require_dim(Index d) const {
  if (!identity_ && matrix_.rows() != d)
    throw ShapeError("covariance dimension " + std::to_string(matrix_.rows()) +
                     " does not match requested dimension " + std::to_string(d));
}

const Matrix& Covariance::matrix() const {
  if (identity_) throw ShapeError("identity covariance has no stored matrix");
  return matrix_;
}

const Matrix& Covariance::cholesky_lower() const {
  if (identity_) throw ShapeError("identity covariance has no Cholesky factor");
  return chol_lower_;
}

Matrix Covariance::materialize(Index d) const {
  if (identity_) return Matrix::Identity(d, d);
  require_dim(d);
  return matrix_;
}

double Covariance::quadratic_form(const Vector& v) const {
  if (identity_) return v.squaredNorm();
  require_dim(v.size());
  return v.dot(matrix_ * v);
}

Matrix sample_gaussian_matrix(Index rows, Index cols, const Covariance& row_covariance, Rng& rng) {
  if (rows < 1 || cols < 1) throw ShapeError("sample_gaussian_matrix: empty shape");
  row_covariance.require_dim(cols);
  Matrix g(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) g(i, j) = rng.gaussian();
  if (row_covariance.is_identity()) return g;
  // row x = L g  =>  X = G L'
  return g * row_covariance.cholesky_lower().transpose();
}

namespace {

Eigen::BDCSVD<Matrix> thin_svd(const Matrix& A) {
  Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(pinv_rank_tolerance(A.rows(), A.cols()));
  return svd;
}

}  // namespace

Vector pseudoinverse_apply(const Matrix& A, const Vector& b) {
  if (A.rows() != b.size())
    throw ShapeError("pseudoinverse_apply: A has " + std::to_string(A.rows()) +
                     " rows but b has length " + std::to_string(b.size()));
  return thin_svd(A).solve(b);
}

Matrix pseudoinverse(const Matrix& A) {
  auto svd = thin_svd(A);
  const auto& sv = svd.singularValues();
  const double cutoff = svd.threshold() * (sv.size() > 0 ? sv(0) : 0.0);
  Vector inv = Vector::Zero(sv.size());
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

SymEig sym_eigendecomposition(const Matrix& S) {
  if (S.rows() != S.cols() || S.rows() == 0) throw ShapeError("sym_eigendecomposition: not square");
  const double scale = S.cwiseAbs().maxCoeff();
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1e-300))
    throw SymmetryError("sym_eigendecomposition: input is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  if (es.info() != Eigen::Success)
    throw NotSpdError("sym_eigendecomposition: eigensolver failed to converge");
  const Index d = S.rows();
  SymEig out;
  out.eigenvalues = es.eigenvalues().reverse();
  out.eigenvectors = es.eigenvectors().rowwise().reverse();
  const double norm = out.eigenvalues.cwiseAbs().maxCoeff();
  out.negative_flagged = out.eigenvalues(d - 1) < -1e-10 * norm;
  return out;
}

SpdSolve solve_spd(Matrix A, const Matrix& rhs) {
  if (A.rows() != A.cols()) throw ShapeError("solve_spd: not square");
  if (A.rows() != rhs.rows()) throw ShapeError("solve_spd: rhs rows mismatch");
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() == Eigen::Success)
    return {llt.solve(rhs), false};
  const double jitter = 1e-12 * A.trace() / static_cast<double>(A.rows());
  A.diagonal().array() += jitter;
  llt.compute(A);
  if (llt.info() == Eigen::Success)
    return {llt.solve(rhs), true};
  Eigen::LDLT<Matrix> ldlt(A);
  if (ldlt.info() != Eigen::Success)
    throw NotSpdError("solve_spd: factorization failed even after jitter");
  return {ldlt.solve(rhs), true};
}

Matrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open matrix file: " + path);
  Index rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 1 || cols < 1)
    throw IoError("bad matrix header in " + path);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      if (!(in >> m(i, j))) throw IoError("truncated matrix data in " + path);
  return m;
}

void save_matrix(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write matrix file: " + path);
  out << m.rows() << ' ' << m.cols() << '\n';
  out.precision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace tlreg
