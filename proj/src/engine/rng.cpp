// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#include "adasg/engine/rng.hpp"

#include <vector>

namespace adasg::engine {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : engine_(make_engine(seed, stream)) {}

double Rng::normal() { return normal_(engine_); }

double Rng::uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

std::size_t Rng::index(std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

Rng seeded_rng(std::uint64_t seed, std::uint64_t stream) { return Rng(seed, stream); }

Tensor gaussian(Rng& rng, Shape shape, bool requires_grad) {
  std::vector<double> values(numel(shape));
  for (double& v : values) v = rng.normal();
  return Tensor(std::move(shape), std::move(values), requires_grad);
}

}  // namespace adasg::engine
