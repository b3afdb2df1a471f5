// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#include "adasg/xp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adasg/engine/rng.hpp"
#include "adasg/error.hpp"

namespace adasg::xp {

namespace {

constexpr std::uint64_t kDataStream = 11;
constexpr double kMinScale = 0.25;
constexpr double kMaxScale = 1.75;

struct Sample {
  std::vector<double> x;
  int label;
};

nets::Dataset pack(std::vector<Sample> samples, std::size_t dim, std::size_t classes, engine::Rng& rng) {
  std::shuffle(samples.begin(), samples.end(), rng.engine());
  std::vector<double> flat;
  flat.reserve(samples.size() * dim);
  std::vector<int> labels;
  labels.reserve(samples.size());
  for (const Sample& s : samples) {
    flat.insert(flat.end(), s.x.begin(), s.x.end());
    labels.push_back(s.label);
  }
  return {engine::Tensor({samples.size(), dim}, std::move(flat)), std::move(labels), classes};
}

}  // namespace

void DatasetSpec::validate() const {
  if (classes < 2) throw ConfigError("dataset needs at least 2 classes");
  if (input_dim == 0) throw ConfigError("dataset input_dim must be positive");
  if (samples_per_class < 20) throw ConfigError("dataset needs at least 20 samples per class");
  if (!(spread > 0.0) || !std::isfinite(spread)) throw ConfigError("dataset spread must be positive and finite");
  if (!(center_scale > 0.0) || !std::isfinite(center_scale)) {
    throw ConfigError("dataset center_scale must be positive and finite");
  }
  if (intrinsic_dim > input_dim) throw ConfigError("dataset intrinsic_dim exceeds input_dim");
  if (!(ambient_noise >= 0.0) || !std::isfinite(ambient_noise)) {
    throw ConfigError("dataset ambient_noise must be non-negative and finite");
  }
}

// Gram-Schmidt on Gaussian columns; row-major d x k.
std::vector<double> random_basis(std::size_t d, std::size_t k, engine::Rng& rng) {
  std::vector<double> u(d * k);
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> col(d);
    for (double& v : col) v = rng.normal();
    for (std::size_t p = 0; p < c; ++p) {
      double dot = 0.0;
      for (std::size_t i = 0; i < d; ++i) dot += col[i] * u[i * k + p];
      for (std::size_t i = 0; i < d; ++i) col[i] -= dot * u[i * k + p];
    }
    double norm = 0.0;
    for (double v : col) norm += v * v;
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < d; ++i) u[i * k + c] = col[i] / norm;
  }
  return u;
}

DatasetSplit synth_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  spec.validate();
  engine::Rng rng(seed, kDataStream);
  const std::size_t d = spec.input_dim;
  const std::size_t k = spec.intrinsic_dim == 0 ? d : spec.intrinsic_dim;
  const std::size_t n_train = spec.samples_per_class * 4 / 5;
  const std::vector<double> basis = random_basis(d, k, rng);
  std::vector<Sample> train;
  std::vector<Sample> test;

  for (std::size_t c = 0; c < spec.classes; ++c) {
    std::vector<double> centre(k);
    for (double& v : centre) v = spec.center_scale * rng.normal();
    std::vector<double> mix(k * k);
    for (std::size_t i = 0; i < k; ++i) {
      const double axis = spec.spread * rng.uniform(kMinScale, kMaxScale) / std::sqrt(static_cast<double>(k));
      for (std::size_t j = 0; j < k; ++j) mix[i * k + j] = axis * rng.normal();
    }
    std::vector<double> e(k);
    std::vector<double> local(k);
    for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
      for (double& v : e) v = rng.normal();
      for (std::size_t i = 0; i < k; ++i) {
        local[i] = centre[i] + std::inner_product(e.begin(), e.end(), mix.begin() + static_cast<std::ptrdiff_t>(i * k), 0.0);
      }
      Sample sample{std::vector<double>(d), static_cast<int>(c)};
      for (std::size_t i = 0; i < d; ++i) {
        sample.x[i] = std::inner_product(local.begin(), local.end(), basis.begin() + static_cast<std::ptrdiff_t>(i * k), 0.0);
        if (spec.ambient_noise > 0.0) sample.x[i] += spec.ambient_noise * rng.normal();
      }
      (s < n_train ? train : test).push_back(std::move(sample));
    }
  }
  DatasetSplit out;
  out.train = pack(std::move(train), d, spec.classes, rng);
  out.test = pack(std::move(test), d, spec.classes, rng);
  return out;
}

}  // namespace adasg::xp
