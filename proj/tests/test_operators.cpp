#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>

#include "tlreg/operators.hpp"

using namespace tlreg;

TEST_CASE("identity operator") {
  const auto op = build_operator({OperatorKind::identity, 0.0, 4});
  CHECK((op.H - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(op.kappa_h == 1.0);
  CHECK(op.min_singular_value == 1.0);
  CHECK(op.orthonormal());
}

TEST_CASE("dct operator is orthonormal") {
  const auto op = build_operator({OperatorKind::dct_transpose, 0.0, 8});
  const Matrix gram = op.H.transpose() * op.H;
  CHECK((gram - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(std::abs(op.kappa_h - 1.0) <= 1e-12);
}

TEST_CASE("circulant operator: unit kappa and cyclic-shift rows") {
  const auto op = build_operator({OperatorKind::circulant_kernel, 2.0 / 75.0, 64});
  CHECK(std::abs(op.kappa_h - 1.0) <= 1e-12);
  CHECK(op.min_singular_value > 0.0);
  // each row is the previous row shifted one step to the right
  for (Index i = 1; i < 64; ++i)
    for (Index j = 0; j < 64; ++j)
      CHECK(op.H(i, j) == doctest::Approx(op.H(i - 1, (j + 63) % 64)).epsilon(1e-14));
}

TEST_CASE("circulant operator commutes with the cyclic shift") {
  const Index d = 32;
  const auto op = build_operator({OperatorKind::circulant_kernel, 2.0 / 25.0, d});
  Matrix shift = Matrix::Zero(d, d);
  for (Index i = 0; i < d; ++i) shift(i, (i + d - 1) % d) = 1.0;
  CHECK((op.H * shift - shift * op.H).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("delta-only kernel builds the exact identity") {
  Vector delta = Vector::Zero(16);
  delta(0) = 1.0;
  const auto op = circulant_from_kernel(delta);
  CHECK((op.H - Matrix::Identity(16, 16)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(op.kappa_h == 1.0);
}

TEST_CASE("kernel peak sits at index 0") {
  const Vector k = circulant_kernel_samples(64, 2.0 / 75.0);
  Index peak = 0;
  k.maxCoeff(&peak);
  CHECK(peak == 0);
  CHECK(k(0) == doctest::Approx(2.0));  // delta + exp(0)
}

TEST_CASE("resolution consistency across dimensions") {
  const std::array<Index, 3> ident_dims{4, 16, 64};
  auto rep = resolution_consistency_check({OperatorKind::identity, 0.0, 0}, ident_dims);
  CHECK(rep.pass);

  const std::array<Index, 2> dct_dims{8, 32};
  rep = resolution_consistency_check({OperatorKind::dct_transpose, 0.0, 0}, dct_dims);
  CHECK(rep.pass);

  const std::array<Index, 2> circ_dims{32, 128};
  rep = resolution_consistency_check({OperatorKind::circulant_kernel, 2.0 / 25.0, 0}, circ_dims);
  CHECK(rep.pass);
  for (const double k : rep.kappa) CHECK(std::abs(k - 1.0) <= 1e-12);
}

TEST_CASE("prior energy bookkeeping is resolution independent") {
  // trace of (b/d) I_d is b for every d
  const double b = 2.5;
  for (const Index d : {3, 17, 128}) {
    const double trace = (b / static_cast<double>(d)) * static_cast<double>(d);
    CHECK(trace == doctest::Approx(b).epsilon(1e-15));
  }
}

TEST_CASE("empty dimension is rejected") {
  CHECK_THROWS_AS(build_operator({OperatorKind::identity, 0.0, 0}), ShapeError);
  CHECK_THROWS_AS(circulant_kernel_samples(0, 0.1), ShapeError);
}

TEST_CASE("operator spec parsing") {
  auto spec = parse_operator_spec("identity", 8);
  CHECK(spec.kind == OperatorKind::identity);
  spec = parse_operator_spec("dct", 8);
  CHECK(spec.kind == OperatorKind::dct_transpose);
  spec = parse_operator_spec("circ:w=0.08", 8);
  CHECK(spec.kind == OperatorKind::circulant_kernel);
  CHECK(spec.kernel_width == doctest::Approx(0.08));
  CHECK_THROWS_AS(parse_operator_spec("circ:w=-1", 8), ConfigError);
  CHECK_THROWS_AS(parse_operator_spec("fourier", 8), ConfigError);
}
