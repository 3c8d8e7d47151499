#include "tlreg/operators.hpp"

#include <Eigen/SVD>
#include <charconv>
#include <cmath>
#include <numbers>

namespace tlreg {

std::string OperatorSpec::to_string() const {
  switch (kind) {
    case OperatorKind::identity:
      return "identity";
    case OperatorKind::dct_transpose:
      return "dct";
    case OperatorKind::circulant_kernel:
      return "circ:w=" + std::to_string(kernel_width);
  }
  return "?";
}

OperatorSpec parse_operator_spec(std::string_view text, Index d) {
  OperatorSpec spec;
  spec.d = d;
  if (text == "identity") {
    spec.kind = OperatorKind::identity;
  } else if (text == "dct") {
    spec.kind = OperatorKind::dct_transpose;
  } else if (text.starts_with("circ:w=")) {
    spec.kind = OperatorKind::circulant_kernel;
    const auto num = text.substr(7);
    double w = 0.0;
    const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), w);
    if (ec != std::errc{} || ptr != num.data() + num.size() || w <= 0.0)
      throw ConfigError("bad circulant kernel width in operator spec: " + std::string(text));
    spec.kernel_width = w;
  } else {
    throw ConfigError("unknown operator spec: " + std::string(text));
  }
  return spec;
}

namespace {

Matrix orthonormal_dct(Index d) {
  // Type-II DCT, rows indexed by frequency; Psi Psi' = I.
  Matrix psi(d, d);
  const double c0 = std::sqrt(1.0 / static_cast<double>(d));
  const double ck = std::sqrt(2.0 / static_cast<double>(d));
  for (Index k = 0; k < d; ++k) {
    const double scale = (k == 0) ? c0 : ck;
    for (Index j = 0; j < d; ++j)
      psi(k, j) = scale * std::cos(std::numbers::pi * (2.0 * j + 1.0) * k / (2.0 * d));
  }
  return psi;
}

}  // namespace

Vector circulant_kernel_samples(Index d, double kernel_width) {
  if (d < 1) throw ShapeError("circulant kernel: empty dimension");
  if (kernel_width <= 0.0) throw InvalidParameterError("circulant kernel: width must be > 0");
  Vector g(d);
  for (Index j = 0; j < d; ++j) {
    const double tau = static_cast<double>(j) / static_cast<double>(d);
    g(j) = std::exp(-std::abs(tau - 0.5) / kernel_width);
  }
  Index peak = 0;
  g.maxCoeff(&peak);
  Vector k(d);
  for (Index j = 0; j < d; ++j) k(j) = g((j + peak) % d);  // peak to index 0
  k(0) += 1.0;                                             // delta sample
  return k;
}

OperatorMatrix circulant_from_kernel(Vector kernel) {
  const Index d = kernel.size();
  if (d < 1) throw ShapeError("circulant_from_kernel: empty kernel");
  const double norm = kernel.norm();
  if (norm == 0.0) throw InvalidParameterError("circulant_from_kernel: zero kernel");
  kernel /= norm;  // (1/d)||H||_F^2 = ||k||^2
  Matrix h(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) h(i, j) = kernel(((i - j) % d + d) % d);

  OperatorMatrix op;
  op.kind = OperatorKind::circulant_kernel;
  op.kappa_h = h.squaredNorm() / static_cast<double>(d);
  Eigen::BDCSVD<Matrix> svd(h);
  op.min_singular_value = svd.singularValues().minCoeff();
  if (op.min_singular_value <= pinv_rank_tolerance(d, d) * svd.singularValues().maxCoeff())
    throw NotSpdError("circulant operator is numerically rank-deficient");
  op.H = std::move(h);
  return op;
}

OperatorMatrix build_operator(const OperatorSpec& spec) {
  if (spec.d < 1) throw ShapeError("build_operator: empty dimension");
  OperatorMatrix op;
  op.kind = spec.kind;
  switch (spec.kind) {
    case OperatorKind::identity:
      op.H = Matrix::Identity(spec.d, spec.d);
      op.kappa_h = 1.0;
      op.min_singular_value = 1.0;
      return op;
    case OperatorKind::dct_transpose:
      op.H = orthonormal_dct(spec.d).transpose();
      op.kappa_h = op.H.squaredNorm() / static_cast<double>(spec.d);
      op.min_singular_value = 1.0;  // orthonormal by construction
      return op;
    case OperatorKind::circulant_kernel:
      return circulant_from_kernel(circulant_kernel_samples(spec.d, spec.kernel_width));
  }
  throw ConfigError("build_operator: unknown kind");
}

ResolutionReport resolution_consistency_check(const OperatorSpec& spec, std::span<const Index> d_list) {
  if (d_list.empty()) throw InvalidParameterError("resolution check: empty dimension list");
  ResolutionReport report;
  report.pass = true;
  for (const Index d : d_list) {
    OperatorSpec at_d = spec;
    at_d.d = d;
    const auto op = build_operator(at_d);
    report.dims.push_back(d);
    report.kappa.push_back(op.kappa_h);
    if (std::abs(op.kappa_h - 1.0) > 1e-12) report.pass = false;
  }
  return report;
}

}  // namespace tlreg
