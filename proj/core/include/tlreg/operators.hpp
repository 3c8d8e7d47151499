#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tlreg/linalg.hpp"

namespace tlreg {

enum class OperatorKind { identity, dct_transpose, circulant_kernel };

/// Task-relation operator family at resolution d.
struct OperatorSpec {
  OperatorKind kind = OperatorKind::identity;
  double kernel_width = 0.0;  // circulant only, > 0
  Index d = 0;

  std::string to_string() const;
};

/// CLI spellings: "identity", "dct", "circ:w=<float>".
OperatorSpec parse_operator_spec(std::string_view text, Index d);

struct OperatorMatrix {
  Matrix H;
  double kappa_h = 0.0;  // (1/d) ||H||_F^2, == 1 after normalization
  double min_singular_value = 0.0;
  OperatorKind kind = OperatorKind::identity;

  Index dim() const { return H.rows(); }
  bool orthonormal() const { return kind != OperatorKind::circulant_kernel; }
};

OperatorMatrix build_operator(const OperatorSpec& spec);

/// Discrete kernel h(j/d) = delta + exp(-|j/d - 0.5| / w), rotated so the
/// exp peak and the delta share index 0. Unnormalized; the delta contributes
/// amplitude 1.
Vector circulant_kernel_samples(Index d, double kernel_width);

/// Build H[i][j] = k[(i - j) mod d] from arbitrary kernel samples, scaled so
/// (1/d)||H||_F^2 = 1. Test hook for substitute kernels.
OperatorMatrix circulant_from_kernel(Vector kernel);

struct ResolutionReport {
  std::vector<Index> dims;
  std::vector<double> kappa;
  bool pass = false;  // all kappa within 1e-12 of 1
};

ResolutionReport resolution_consistency_check(const OperatorSpec& spec, std::span<const Index> d_list);

}  // namespace tlreg
