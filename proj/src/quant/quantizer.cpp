// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#include "adasg/quant/quantizer.hpp"

#include <algorithm>
#include <cmath>

#include "adasg/engine/ops.hpp"
#include "adasg/error.hpp"

namespace adasg::quant {

void QuantConfig::validate() const {
  if (bits < 2 || bits > 8) {
    throw ConfigError("quantizer bits must lie in [2, 8], got " + std::to_string(bits));
  }
}

double QuantizedTensor::step() const {
  return (max - min) / static_cast<double>((1 << bits) - 1);
}

QuantizedTensor quantize(const engine::Tensor& x, int bits) {
  QuantConfig{bits}.validate();
  const auto values = x.values();
  if (values.empty()) throw ShapeError("quantize: empty tensor");
  if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
    throw NumericalError("quantize: non-finite input");
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  QuantizedTensor q;
  q.shape = x.shape();
  q.bits = bits;
  q.min = *lo;
  q.max = *hi;
  q.codes.assign(values.size(), 0);
  if (q.max == q.min) return q;

  const double levels = static_cast<double>((1 << bits) - 1);
  const double offset = static_cast<double>(1 << (bits - 1));
  const double range = q.max - q.min;
  const std::int32_t lowest = q.lowest_code();
  const std::int32_t highest = q.highest_code();
  for (std::size_t i = 0; i < values.size(); ++i) {
    // std::round rounds halfway cases away from zero.
    const double code = std::round(levels * ((values[i] - q.min) / range) - offset);
    q.codes[i] = std::clamp(static_cast<std::int32_t>(code), lowest, highest);
  }
  return q;
}

engine::Tensor dequantize(const QuantizedTensor& q) {
  std::vector<double> values(q.codes.size(), q.min);
  if (q.max != q.min) {
    const double levels = static_cast<double>((1 << q.bits) - 1);
    const std::int32_t offset = 1 << (q.bits - 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double t = static_cast<double>(q.codes[i] + offset) / levels;
      values[i] = std::lerp(q.min, q.max, t);
    }
  }
  return engine::Tensor(q.shape, std::move(values));
}

engine::Tensor fake_quantize(const engine::Tensor& x, int bits) {
  return engine::straight_through(x, dequantize(quantize(x, bits)));
}

}  // namespace adasg::quant
