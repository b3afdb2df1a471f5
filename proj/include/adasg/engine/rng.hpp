// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

#include "adasg/engine/tensor.hpp"

namespace adasg::engine {

/// Deterministic random stream. Distinct (seed, stream) pairs give unrelated
/// sequences; the same pair reproduces the same sequence bit-exactly on a build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  double normal();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

Rng seeded_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Standard-normal tensor of the given shape.
Tensor gaussian(Rng& rng, Shape shape, bool requires_grad = false);

}  // namespace adasg::engine
