// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "adasg/engine/tensor.hpp"

namespace adasg::engine {

// Binary elementwise ops accept either equal shapes, or `b` broadcast along the
// batch dimension of `a` (b.numel() == a.cols(), e.g. a bias row).

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
/// Throws DomainError if any divisor entry is exactly zero.
Tensor div(const Tensor& a, const Tensor& b);

/// [n,k] x [k,m] -> [n,m]; [n,k] x [k] -> [n].
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);
Tensor neg(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor square(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor exp(const Tensor& a);
/// ln(max(a, floor)); the gradient is zero where the floor is active.
Tensor log(const Tensor& a, double floor = 0.0);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// [n,d] -> [n]
Tensor row_sum(const Tensor& a);
/// [n,d] -> [d]
Tensor col_mean(const Tensor& a);

/// softmax(z / temperature) along `axis` of a rank-1 or rank-2 tensor.
/// Max-subtracted; throws DomainError for temperature <= 0.
Tensor softmax(const Tensor& z, std::size_t axis, double temperature = 1.0);

/// Per-row -sum p ln p of a [n,C] tensor with 0 ln 0 = 0; returns [n].
Tensor entropy_rows(const Tensor& p);

/// Forward `forward_value`, backward identity into `x`: x + stop_gradient(forward_value - x).
Tensor straight_through(const Tensor& x, const Tensor& forward_value);

}  // namespace adasg::engine
