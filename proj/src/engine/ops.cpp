// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#include "adasg/engine/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "adasg/error.hpp"

namespace adasg::engine {

namespace {

enum class BinaryKind { kAdd, kSub, kMul, kDiv };

const char* kind_name(BinaryKind kind) {
  switch (kind) {
    case BinaryKind::kAdd: return "add";
    case BinaryKind::kSub: return "sub";
    case BinaryKind::kMul: return "mul";
    case BinaryKind::kDiv: return "div";
  }
  return "?";
}

// Grad accumulation target, or nullptr when the parent does not need one.
double* grad_slot(Node& self, std::size_t parent) {
  Node& p = *self.parents[parent];
  return p.requires_grad ? p.ensure_grad().data() : nullptr;
}

Tensor binary(const Tensor& a, const Tensor& b, BinaryKind kind) {
  const bool same = a.shape() == b.shape();
  const bool row_broadcast = !same && a.rank() >= 1 && b.numel() == a.cols() &&
                             (b.rank() == 1 || (b.rank() == 2 && b.rows() == 1));
  if (!same && !row_broadcast) {
    throw ShapeError(std::string(kind_name(kind)) + ": shape mismatch " + to_string(a.shape()) +
                     " vs " + to_string(b.shape()));
  }
  const std::size_t n = a.numel();
  const std::size_t width = same ? n : b.numel();
  const auto av = a.values();
  const auto bv = b.values();
  if (kind == BinaryKind::kDiv) {
    for (double d : bv) {
      if (d == 0.0) throw DomainError("div: divisor contains zero");
    }
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = av[i];
    const double y = bv[same ? i : i % width];
    switch (kind) {
      case BinaryKind::kAdd: out[i] = x + y; break;
      case BinaryKind::kSub: out[i] = x - y; break;
      case BinaryKind::kMul: out[i] = x * y; break;
      case BinaryKind::kDiv: out[i] = x / y; break;
    }
  }
  return make_result(a.shape(), std::move(out), {a, b}, [kind, same, width](Node& self) {
    const Node& na = *self.parents[0];
    const Node& nb = *self.parents[1];
    double* ga = grad_slot(self, 0);
    double* gb = grad_slot(self, 1);
    const std::size_t n = self.value.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double g = self.grad[i];
      const std::size_t j = same ? i : i % width;
      switch (kind) {
        case BinaryKind::kAdd:
          if (ga) ga[i] += g;
          if (gb) gb[j] += g;
          break;
        case BinaryKind::kSub:
          if (ga) ga[i] += g;
          if (gb) gb[j] -= g;
          break;
        case BinaryKind::kMul:
          if (ga) ga[i] += g * nb.value[j];
          if (gb) gb[j] += g * na.value[i];
          break;
        case BinaryKind::kDiv: {
          const double y = nb.value[j];
          if (ga) ga[i] += g / y;
          if (gb) gb[j] -= g * na.value[i] / (y * y);
          break;
        }
      }
    }
  });
}

template <typename F, typename D>
Tensor unary(const Tensor& a, F forward, D derivative) {
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = forward(av[i]);
  return make_result(a.shape(), std::move(out), {a}, [derivative](Node& self) {
    double* ga = grad_slot(self, 0);
    if (!ga) return;
    const Node& na = *self.parents[0];
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      ga[i] += self.grad[i] * derivative(na.value[i], self.value[i]);
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::kAdd); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::kSub); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::kMul); }
Tensor div(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::kDiv); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || (b.rank() != 1 && b.rank() != 2) || a.shape()[1] != b.shape()[0]) {
    throw ShapeError("matmul: shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  const std::size_t n = a.shape()[0];
  const std::size_t k = a.shape()[1];
  const std::size_t m = b.rank() == 2 ? b.shape()[1] : 1;
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = out.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double x = av[i * k + p];
      const double* brow = bv.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) row[j] += x * brow[j];
    }
  }
  Shape shape = b.rank() == 2 ? Shape{n, m} : Shape{n};
  return make_result(std::move(shape), std::move(out), {a, b}, [n, k, m](Node& self) {
    const Node& na = *self.parents[0];
    const Node& nb = *self.parents[1];
    double* ga = grad_slot(self, 0);
    double* gb = grad_slot(self, 1);
    const double* g = self.grad.data();
    if (ga) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = nb.value.data() + p * m;
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) acc += g[i * m + j] * brow[j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (gb) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double x = na.value[i * k + p];
          double* gbrow = gb + p * m;
          for (std::size_t j = 0; j < m; ++j) gbrow[j] += x * g[i * m + j];
        }
      }
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor relu(const Tensor& a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor square(const Tensor& a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor sqrt(const Tensor& a) {
  for (double x : a.values()) {
    if (x < 0.0) throw DomainError("sqrt: negative input");
  }
  return unary(a, [](double x) { return std::sqrt(x); },
               [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Tensor exp(const Tensor& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a, double floor) {
  for (double x : a.values()) {
    if (x <= 0.0 && floor <= 0.0) throw DomainError("log: non-positive input without a floor");
  }
  return unary(a, [floor](double x) { return std::log(std::max(x, floor)); },
               [floor](double x, double) { return x >= floor ? 1.0 / x : 0.0; });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double x : a.values()) total += x;
  return make_result(Shape{}, {total}, {a}, [](Node& self) {
    double* ga = grad_slot(self, 0);
    if (!ga) return;
    const std::size_t n = self.parents[0]->value.size();
    for (std::size_t i = 0; i < n; ++i) ga[i] += self.grad[0];
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor row_sum(const Tensor& a) {
  const std::size_t n = a.rows();
  const std::size_t d = a.cols();
  const auto av = a.values();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) out[i] += av[i * d + j];
  }
  return make_result(Shape{n}, std::move(out), {a}, [n, d](Node& self) {
    double* ga = grad_slot(self, 0);
    if (!ga) return;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) ga[i * d + j] += self.grad[i];
    }
  });
}

Tensor col_mean(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("col_mean: expected rank 2, got " + to_string(a.shape()));
  const std::size_t n = a.rows();
  const std::size_t d = a.cols();
  const auto av = a.values();
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) out[j] += av[i * d + j];
  }
  for (double& v : out) v /= static_cast<double>(n);
  return make_result(Shape{d}, std::move(out), {a}, [n, d](Node& self) {
    double* ga = grad_slot(self, 0);
    if (!ga) return;
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) ga[i * d + j] += self.grad[j] * inv;
    }
  });
}

Tensor softmax(const Tensor& z, std::size_t axis, double temperature) {
  if (!(temperature > 0.0)) throw DomainError("softmax: temperature must be positive");
  if (z.rank() > 2 || axis >= std::max<std::size_t>(z.rank(), 1)) {
    throw ShapeError("softmax: axis " + std::to_string(axis) + " invalid for shape " + to_string(z.shape()));
  }
  // A line is the set of entries normalised together: offset + k * stride.
  std::size_t lines, length, line_step, stride;
  if (z.rank() <= 1) {
    lines = 1, length = z.numel(), line_step = 0, stride = 1;
  } else if (axis == 1) {
    lines = z.rows(), length = z.cols(), line_step = z.cols(), stride = 1;
  } else {
    lines = z.cols(), length = z.rows(), line_step = 1, stride = z.cols();
  }
  const auto zv = z.values();
  std::vector<double> out(zv.size());
  for (std::size_t l = 0; l < lines; ++l) {
    const std::size_t base = l * line_step;
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < length; ++k) peak = std::max(peak, zv[base + k * stride]);
    double total = 0.0;
    for (std::size_t k = 0; k < length; ++k) {
      const double e = std::exp((zv[base + k * stride] - peak) / temperature);
      out[base + k * stride] = e;
      total += e;
    }
    for (std::size_t k = 0; k < length; ++k) out[base + k * stride] /= total;
  }
  return make_result(z.shape(), std::move(out), {z},
                     [lines, length, line_step, stride, temperature](Node& self) {
    double* gz = grad_slot(self, 0);
    if (!gz) return;
    for (std::size_t l = 0; l < lines; ++l) {
      const std::size_t base = l * line_step;
      double dot = 0.0;
      for (std::size_t k = 0; k < length; ++k) {
        const std::size_t i = base + k * stride;
        dot += self.grad[i] * self.value[i];
      }
      for (std::size_t k = 0; k < length; ++k) {
        const std::size_t i = base + k * stride;
        gz[i] += self.value[i] * (self.grad[i] - dot) / temperature;
      }
    }
  });
}

Tensor entropy_rows(const Tensor& p) {
  const std::size_t n = p.rows();
  const std::size_t c = p.cols();
  const auto pv = p.values();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double h = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double x = pv[i * c + j];
      if (x > 0.0) h -= x * std::log(x);
    }
    out[i] = h;
  }
  return make_result(Shape{n}, std::move(out), {p}, [n, c](Node& self) {
    double* gp = grad_slot(self, 0);
    if (!gp) return;
    const Node& np = *self.parents[0];
    constexpr double kTiny = std::numeric_limits<double>::min();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        const double x = np.value[i * c + j];
        gp[i * c + j] -= self.grad[i] * (std::log(std::max(x, kTiny)) + 1.0);
      }
    }
  });
}

Tensor straight_through(const Tensor& x, const Tensor& forward_value) {
  if (x.shape() != forward_value.shape()) {
    throw ShapeError("straight_through: shape mismatch " + to_string(x.shape()) + " vs " +
                     to_string(forward_value.shape()));
  }
  const auto xv = x.values();
  const auto fv = forward_value.values();
  std::vector<double> residual(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) residual[i] = fv[i] - xv[i];
  const Tensor frozen = stop_gradient(Tensor(x.shape(), std::move(residual)));
  // Outside replay the forward value is reproduced exactly, not as x + (f - x).
  std::vector<double> out(xv.size());
  if (constant_replay_active()) {
    const auto rv = frozen.values();
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] + rv[i];
  } else {
    std::copy(fv.begin(), fv.end(), out.begin());
  }
  return make_result(x.shape(), std::move(out), {x}, [](Node& self) {
    double* gx = grad_slot(self, 0);
    if (!gx) return;
    for (std::size_t i = 0; i < self.value.size(); ++i) gx[i] += self.grad[i];
  });
}

}  // namespace adasg::engine
