#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "cfm/random.hpp"
#include "cfm/tape.hpp"
#include "cfm/tensor.hpp"

namespace cfm {

namespace detail {

// Binary ops accept equal shapes or a scalar (numel == 1) on either side.
template <typename T>
inline void check_binary(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() == b.shape()) return;
  if (a.numel() == 1 || b.numel() == 1) return;
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                   " vs " + shape_str(b.shape()));
}

template <typename T>
inline const Shape& broadcast_shape(const Tensor<T>& a, const Tensor<T>& b) {
  return a.numel() == 1 && b.numel() > 1 ? b.shape() : a.shape();
}

// Accumulates g into the grad buffer of `impl`, reducing when the operand was
// a broadcast scalar.
template <typename T>
inline void accumulate(const std::shared_ptr<TensorImpl<T>>& impl,
                       const std::vector<T>& g, T scale = T(1)) {
  if (!impl->requires_grad) return;
  if (impl->grad.size() == g.size()) {
    for (size_t i = 0; i < g.size(); ++i) impl->grad[i] += scale * g[i];
  } else {  // broadcast scalar operand
    T s = T(0);
    for (T v : g) s += v;
    impl->grad[0] += scale * s;
  }
}

template <typename T>
inline T read(const std::vector<T>& v, size_t i) {
  return v.size() == 1 ? v[0] : v[i];
}

}  // namespace detail

enum class OpKind {
  kAdd,
  kSubtract,
  kMultiply,
  kDivide,
  kSqrt,
  kExp,
  kRelu,
  kScalarMultiply,
  kClampMin,
};

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_binary(a, b, "add");
  Tensor<T> out(detail::broadcast_shape(a, b));
  const auto &av = a.data(), &bv = b.data();
  auto& ov = out.data();
  for (size_t i = 0; i < ov.size(); ++i)
    ov[i] = detail::read(av, i) + detail::read(bv, i);
  if (tracing<T>({&a, &b})) {
    record_op(out, [ai = a.impl(), bi = b.impl(), oi = out.impl()] {
      detail::accumulate(ai, oi->grad);
      detail::accumulate(bi, oi->grad);
    });
  }
  return out;
}

template <typename T>
Tensor<T> subtract(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_binary(a, b, "subtract");
  Tensor<T> out(detail::broadcast_shape(a, b));
  const auto &av = a.data(), &bv = b.data();
  auto& ov = out.data();
  for (size_t i = 0; i < ov.size(); ++i)
    ov[i] = detail::read(av, i) - detail::read(bv, i);
  if (tracing<T>({&a, &b})) {
    record_op(out, [ai = a.impl(), bi = b.impl(), oi = out.impl()] {
      detail::accumulate(ai, oi->grad);
      detail::accumulate(bi, oi->grad, T(-1));
    });
  }
  return out;
}

template <typename T>
Tensor<T> multiply(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_binary(a, b, "multiply");
  Tensor<T> out(detail::broadcast_shape(a, b));
  const auto &av = a.data(), &bv = b.data();
  auto& ov = out.data();
  for (size_t i = 0; i < ov.size(); ++i)
    ov[i] = detail::read(av, i) * detail::read(bv, i);
  if (tracing<T>({&a, &b})) {
    record_op(out, [ai = a.impl(), bi = b.impl(), oi = out.impl()] {
      const auto& g = oi->grad;
      if (ai->requires_grad) {
        std::vector<T> ga(g.size());
        for (size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * detail::read(bi->data, i);
        detail::accumulate(ai, ga);
      }
      if (bi->requires_grad) {
        std::vector<T> gb(g.size());
        for (size_t i = 0; i < g.size(); ++i) gb[i] = g[i] * detail::read(ai->data, i);
        detail::accumulate(bi, gb);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> divide(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_binary(a, b, "divide");
  Tensor<T> out(detail::broadcast_shape(a, b));
  const auto &av = a.data(), &bv = b.data();
  auto& ov = out.data();
  for (size_t i = 0; i < ov.size(); ++i)
    ov[i] = detail::read(av, i) / detail::read(bv, i);
  if (tracing<T>({&a, &b})) {
    record_op(out, [ai = a.impl(), bi = b.impl(), oi = out.impl()] {
      const auto& g = oi->grad;
      if (ai->requires_grad) {
        std::vector<T> ga(g.size());
        for (size_t i = 0; i < g.size(); ++i) ga[i] = g[i] / detail::read(bi->data, i);
        detail::accumulate(ai, ga);
      }
      if (bi->requires_grad) {
        std::vector<T> gb(g.size());
        for (size_t i = 0; i < g.size(); ++i) {
          const T bvv = detail::read(bi->data, i);
          gb[i] = -g[i] * detail::read(ai->data, i) / (bvv * bvv);
        }
        detail::accumulate(bi, gb);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  Tensor<T> out(a.shape());
  const auto& av = a.data();
  auto& ov = out.data();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * s;
  if (tracing<T>({&a})) {
    record_op(out, [ai = a.impl(), oi = out.impl(), s] {
      detail::accumulate(ai, oi->grad, s);
    });
  }
  return out;
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T s) {
  Tensor<T> out(a.shape());
  const auto& av = a.data();
  auto& ov = out.data();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + s;
  if (tracing<T>({&a})) {
    record_op(out, [ai = a.impl(), oi = out.impl()] {
      detail::accumulate(ai, oi->grad);
    });
  }
  return out;
}

template <typename T>
Tensor<T> sqrt_elem(const Tensor<T>& a) {
  const auto& av = a.data();
  for (T v : av)
    if (v < T(0)) throw ValueError("sqrt: negative input; clamp first");
  Tensor<T> out(a.shape());
  auto& ov = out.data();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = std::sqrt(av[i]);
  if (tracing<T>({&a})) {
    record_op(out, [ai = a.impl(), oi = out.impl()] {
      if (!ai->requires_grad) return;
      std::vector<T> ga(oi->grad.size());
      for (size_t i = 0; i < ga.size(); ++i)
        ga[i] = oi->data[i] > T(0) ? oi->grad[i] / (T(2) * oi->data[i]) : T(0);
      detail::accumulate(ai, ga);
    });
  }
  return out;
}

template <typename T>
Tensor<T> exp_elem(const Tensor<T>& a) {
  Tensor<T> out(a.shape());
  const auto& av = a.data();
  auto& ov = out.data();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = std::exp(av[i]);
  if (tracing<T>({&a})) {
    record_op(out, [ai = a.impl(), oi = out.impl()] {
      if (!ai->requires_grad) return;
      std::vector<T> ga(oi->grad.size());
      for (size_t i = 0; i < ga.size(); ++i) ga[i] = oi->grad[i] * oi->data[i];
      detail::accumulate(ai, ga);
    });
  }
  return out;
}

template <typename T>
Tensor<T> log_elem(const Tensor<T>& a) {
  const auto& av = a.data();
  for (T v : av)
    if (v <= T(0)) throw ValueError("log: non-positive input");
  Tensor<T> out(a.shape());
  auto& ov = out.data();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = std::log(av[i]);
  if (tracing<T>({&a})) {
    record_op(out, [ai = a.impl(), oi = out.impl()] {
      if (!ai->requires_grad) return;
      std::vector<T> ga(oi->grad.size());
      for (size_t i = 0; i < ga.size(); ++i) ga[i] = oi->grad[i] / ai->data[i];
      detail::accumulate(ai, ga);
    });
  }
  return out;
}

// ReLU backward uses subgradient 0 at 0.
template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  Tensor<T> out(a.shape());
  const auto& av = a.data();
  auto& ov = out.data();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] > T(0) ? av[i] : T(0);
  if (tracing<T>({&a})) {
    record_op(out, [ai = a.impl(), oi = out.impl()] {
      if (!ai->requires_grad) return;
      std::vector<T> ga(oi->grad.size());
      for (size_t i = 0; i < ga.size(); ++i)
        ga[i] = ai->data[i] > T(0) ? oi->grad[i] : T(0);
      detail::accumulate(ai, ga);
    });
  }
  return out;
}

template <typename T>
Tensor<T> clamp_min(const Tensor<T>& a, T lo) {
  Tensor<T> out(a.shape());
  const auto& av = a.data();
  auto& ov = out.data();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] < lo ? lo : av[i];
  if (tracing<T>({&a})) {
    record_op(out, [ai = a.impl(), oi = out.impl(), lo] {
      if (!ai->requires_grad) return;
      std::vector<T> ga(oi->grad.size());
      for (size_t i = 0; i < ga.size(); ++i)
        ga[i] = ai->data[i] >= lo ? oi->grad[i] : T(0);
      detail::accumulate(ai, ga);
    });
  }
  return out;
}

template <typename T>
Tensor<T> neg(const Tensor<T>& a) {
  return scale(a, T(-1));
}

template <typename T>
Tensor<T> abs_elem(const Tensor<T>& a) {
  Tensor<T> out(a.shape());
  const auto& av = a.data();
  auto& ov = out.data();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = std::abs(av[i]);
  if (tracing<T>({&a})) {
    record_op(out, [ai = a.impl(), oi = out.impl()] {
      if (!ai->requires_grad) return;
      std::vector<T> ga(oi->grad.size());
      for (size_t i = 0; i < ga.size(); ++i) {
        const T x = ai->data[i];
        ga[i] = x > T(0) ? oi->grad[i] : (x < T(0) ? -oi->grad[i] : T(0));
      }
      detail::accumulate(ai, ga);
    });
  }
  return out;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T s = T(0);
  for (T v : a.data()) s += v;
  Tensor<T> out = Tensor<T>::scalar(s);
  if (tracing<T>({&a})) {
    record_op(out, [ai = a.impl(), oi = out.impl()] {
      if (!ai->requires_grad) return;
      const T g = oi->grad[0];
      for (auto& gv : ai->grad) gv += g;
    });
  }
  return out;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  T s = T(0);
  for (T v : a.data()) s += v;
  const T n = static_cast<T>(a.numel());
  Tensor<T> out = Tensor<T>::scalar(s / n);
  if (tracing<T>({&a})) {
    record_op(out, [ai = a.impl(), oi = out.impl(), n] {
      if (!ai->requires_grad) return;
      const T g = oi->grad[0] / n;
      for (auto& gv : ai->grad) gv += g;
    });
  }
  return out;
}

// Sigmoid with slope hyper-parameter m: 1 / (1 + exp(-m x)).
template <typename T>
Tensor<T> custom_sigmoid(double m, const Tensor<T>& x) {
  if (!(m > 0.0)) throw ValueError("custom_sigmoid: m must be positive");
  Tensor<T> out(x.shape());
  const auto& xv = x.data();
  auto& ov = out.data();
  const T mm = static_cast<T>(m);
  for (size_t i = 0; i < ov.size(); ++i)
    ov[i] = T(1) / (T(1) + std::exp(-mm * xv[i]));
  if (tracing<T>({&x})) {
    record_op(out, [xi = x.impl(), oi = out.impl(), mm] {
      if (!xi->requires_grad) return;
      std::vector<T> gx(oi->grad.size());
      for (size_t i = 0; i < gx.size(); ++i) {
        const T s = oi->data[i];
        gx[i] = oi->grad[i] * mm * s * (T(1) - s);
      }
      detail::accumulate(xi, gx);
    });
  }
  return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return custom_sigmoid(1.0, x);
}

// mean + std * z with z drawn once and held constant for differentiation
// (the reparameterization trick). Gradients flow through mean and std only.
template <typename T>
Tensor<T> reparam_normal(const Tensor<T>& mean, const Tensor<T>& stddev,
                         const Tensor<T>& z) {
  detail::check_binary(mean, stddev, "reparam_normal");
  if (z.shape() != detail::broadcast_shape(mean, stddev))
    throw ShapeError("reparam_normal: z shape mismatch");
  for (T v : stddev.data())
    if (v < T(0)) throw ValueError("reparam_normal: negative std");
  Tensor<T> out(z.shape());
  const auto &mv = mean.data(), &sv = stddev.data(), &zv = z.data();
  auto& ov = out.data();
  for (size_t i = 0; i < ov.size(); ++i)
    ov[i] = detail::read(mv, i) + detail::read(sv, i) * zv[i];
  if (tracing<T>({&mean, &stddev})) {
    record_op(out, [mi = mean.impl(), si = stddev.impl(), zi = z.impl(),
                    oi = out.impl()] {
      detail::accumulate(mi, oi->grad);
      if (si->requires_grad) {
        std::vector<T> gs(oi->grad.size());
        for (size_t i = 0; i < gs.size(); ++i) gs[i] = oi->grad[i] * zi->data[i];
        detail::accumulate(si, gs);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> reparam_normal(const Tensor<T>& mean, const Tensor<T>& stddev,
                         RandomStream& rng) {
  Tensor<T> z(detail::broadcast_shape(mean, stddev));
  rng.fill_normal(z.data());
  return reparam_normal(mean, stddev, z);
}

// Generic dispatcher mirroring the elementwise contract; `b` is ignored for
// unary kinds and `s` only applies to scalar-multiply / clamp-min.
template <typename T>
Tensor<T> elementwise(OpKind kind, const Tensor<T>& a,
                      const Tensor<T>* b = nullptr, T s = T(0)) {
  switch (kind) {
    case OpKind::kAdd: return add(a, *b);
    case OpKind::kSubtract: return subtract(a, *b);
    case OpKind::kMultiply: return multiply(a, *b);
    case OpKind::kDivide: return divide(a, *b);
    case OpKind::kSqrt: return sqrt_elem(a);
    case OpKind::kExp: return exp_elem(a);
    case OpKind::kRelu: return relu(a);
    case OpKind::kScalarMultiply: return scale(a, s);
    case OpKind::kClampMin: return clamp_min(a, s);
  }
  throw ValueError("elementwise: unknown op kind");
}

}  // namespace cfm
