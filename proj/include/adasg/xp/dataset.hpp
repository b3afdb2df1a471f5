// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>

#include "adasg/nets/training.hpp"

namespace adasg::xp {

/// Gaussian clusters in input space, one per class.
struct DatasetSpec {
  std::size_t classes = 10;
  std::size_t input_dim = 20;
  std::size_t samples_per_class = 400;
  /// Scale of each cluster's random covariance factor.
  double spread = 1.0;
  /// Standard deviation of the class centres.
  double center_scale = 0.5;
  /// Dimension of the shared subspace holding centres and cluster spread;
  /// 0 means the full input space.
  std::size_t intrinsic_dim = 0;
  /// Isotropic noise added in every input direction.
  double ambient_noise = 0.0;

  void validate() const;
  bool operator==(const DatasetSpec&) const = default;
};

struct DatasetSplit {
  nets::Dataset train;
  nets::Dataset test;
};

/// A random orthonormal basis U (d x k) is shared by all classes. Each class
/// gets centre U m_c with m_c ~ N(0, center_scale^2 I_k) and a mixing matrix
/// A_c = spread * D_c * M_c (M_c Gaussian / sqrt(k), D_c per-axis scales in
/// [0.25, 1.75]); samples are U (m_c + A_c e) + ambient_noise * n. Per class, the first 80% of the
/// samples (rounded down) go to train and the rest to test; both splits are
/// then shuffled. Deterministic in (spec, seed).
DatasetSplit synth_dataset(const DatasetSpec& spec, std::uint64_t seed);

}  // namespace adasg::xp
