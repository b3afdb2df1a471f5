// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "adasg/engine/tensor.hpp"

namespace adasg::quant {

/// n-bit linear quantization of weights (per tensor) and activations
/// (dynamic per batch). Ties round half away from zero.
struct QuantConfig {
  int bits = 3;
  /// Also fake-quantize the network input, not only hidden activations.
  bool quantize_input = false;

  void validate() const;
};

/// Integer codes in [-2^(n-1), 2^(n-1) - 1] plus the range needed to decode.
struct QuantizedTensor {
  engine::Shape shape;
  std::vector<std::int32_t> codes;
  double min = 0.0;
  double max = 0.0;
  int bits = 0;

  std::int32_t lowest_code() const { return -(1 << (bits - 1)); }
  std::int32_t highest_code() const { return (1 << (bits - 1)) - 1; }
  /// Distance between adjacent reconstruction levels.
  double step() const;
};

/// code = round((2^n - 1) * (x - min) / (max - min) - 2^(n-1)), min/max taken
/// over the tensor. A constant tensor maps to all-zero codes; non-finite
/// entries raise NumericalError.
QuantizedTensor quantize(const engine::Tensor& x, int bits);

/// x = min + (code + 2^(n-1)) * (max - min) / (2^n - 1); endpoints are exact.
/// A constant-range tensor decodes to min everywhere.
engine::Tensor dequantize(const QuantizedTensor& q);

/// dequantize(quantize(x)) forward, identity (straight-through) backward.
engine::Tensor fake_quantize(const engine::Tensor& x, int bits);

}  // namespace adasg::quant
