// Copyright 2026 The deeplas Authors.
// SPDX-License-Identifier: Apache-2.0

#include "deeplas/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "deeplas/kernels.hpp"

namespace deeplas {
namespace {

template <typename T>
using ImplPtr = std::shared_ptr<detail::TensorImpl<T>>;

template <typename T>
Tape<T>* tape_for(std::initializer_list<const Tensor<T>*> inputs) {
  Tape<T>* tape = Tape<T>::active();
  if (tape == nullptr) return nullptr;
  for (const auto* t : inputs) {
    if (t->requires_grad()) return tape;
  }
  return nullptr;
}

template <typename T>
Tensor<T> make_out(Shape shape, std::vector<T> data, bool requires_grad) {
  auto impl = std::make_shared<detail::TensorImpl<T>>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return Tensor<T>(std::move(impl));
}

[[noreturn]] void shape_fail(const std::string& op, const Shape& a,
                             const Shape& b, const std::string& why = "") {
  throw ShapeError(op + ": incompatible shapes " + shape_str(a) + " and " +
                   shape_str(b) + (why.empty() ? "" : " (" + why + ")"));
}

void check_defined(const char* op, bool defined) {
  if (!defined) throw ShapeError(std::string(op) + ": undefined tensor");
}

// Broadcasting plan: strides of each operand expressed per output axis, zero
// along broadcast axes.
struct Broadcast {
  Shape out;
  std::vector<std::int64_t> stride_a;
  std::vector<std::int64_t> stride_b;
};

std::vector<std::int64_t> contiguous_strides(const Shape& s) {
  std::vector<std::int64_t> st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

Broadcast plan_broadcast(const char* op, const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Broadcast p;
  p.out.assign(r, 1);
  p.stride_a.assign(r, 0);
  p.stride_b.assign(r, 0);
  const auto sa = contiguous_strides(a);
  const auto sb = contiguous_strides(b);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t ia = i + a.size(), ib = i + b.size();
    const std::int64_t da = ia >= r ? a[ia - r] : 1;
    const std::int64_t db = ib >= r ? b[ib - r] : 1;
    if (da != db && da != 1 && db != 1) shape_fail(op, a, b, "broadcast");
    p.out[i] = std::max(da, db);
    if (ia >= r && da != 1) p.stride_a[i] = sa[ia - r];
    if (ib >= r && db != 1) p.stride_b[i] = sb[ib - r];
  }
  return p;
}

// Calls f(out_index, a_index, b_index) for every output element in order.
template <typename F>
void for_each_broadcast(const Broadcast& p, F&& f) {
  const std::size_t r = p.out.size();
  if (r == 0) {
    f(0, 0, 0);
    return;
  }
  const std::int64_t inner = p.out[r - 1];
  const std::int64_t ia_step = p.stride_a[r - 1], ib_step = p.stride_b[r - 1];
  std::vector<std::int64_t> idx(r, 0);
  std::int64_t o = 0, ia = 0, ib = 0;
  const std::int64_t total = shape_numel(p.out);
  while (o < total) {
    for (std::int64_t j = 0; j < inner; ++j) {
      f(o++, ia + j * ia_step, ib + j * ib_step);
    }
    // Carry into the outer axes.
    std::size_t ax = r - 1;
    while (ax-- > 0) {
      ++idx[ax];
      ia += p.stride_a[ax];
      ib += p.stride_b[ax];
      if (idx[ax] < p.out[ax]) break;
      ia -= p.stride_a[ax] * idx[ax];
      ib -= p.stride_b[ax] * idx[ax];
      idx[ax] = 0;
    }
  }
}

enum class BinOp { kAdd, kSub, kMul };

template <typename T>
Tensor<T> binary(const char* name, BinOp kind, const Tensor<T>& a,
                 const Tensor<T>& b) {
  check_defined(name, a.defined() && b.defined());
  Tape<T>* tape = tape_for<T>({&a, &b});
  const bool same = a.shape() == b.shape();
  Broadcast plan;
  if (!same) plan = plan_broadcast(name, a.shape(), b.shape());
  const Shape out_shape = same ? a.shape() : plan.out;
  std::vector<T> out(static_cast<std::size_t>(shape_numel(out_shape)));
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  auto apply = [kind](T x, T y) {
    switch (kind) {
      case BinOp::kAdd: return x + y;
      case BinOp::kSub: return x - y;
      default: return x * y;
    }
  };
  if (same) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = apply(pa[i], pb[i]);
  } else {
    for_each_broadcast(plan, [&](std::int64_t o, std::int64_t ia,
                                 std::int64_t ib) {
      out[o] = apply(pa[ia], pb[ib]);
    });
  }
  Tensor<T> result = make_out<T>(out_shape, std::move(out), tape != nullptr);
  if (tape) {
    ImplPtr<T> ai = a.impl(), bi = b.impl();
    detail::TensorImpl<T>* oi = result.impl().get();
    tape->push(name, {ai.get(), bi.get()}, result.impl(),
               [ai, bi, oi, kind, same, plan]() {
                 const T* g = oi->grad.data();
                 T* ga = ai->requires_grad ? ai->grad_buffer().data() : nullptr;
                 T* gb = bi->requires_grad ? bi->grad_buffer().data() : nullptr;
                 const T* va = ai->data.data();
                 const T* vb = bi->data.data();
                 auto step = [&](std::int64_t o, std::int64_t ia,
                                 std::int64_t ib) {
                   switch (kind) {
                     case BinOp::kAdd:
                       if (ga) ga[ia] += g[o];
                       if (gb) gb[ib] += g[o];
                       break;
                     case BinOp::kSub:
                       if (ga) ga[ia] += g[o];
                       if (gb) gb[ib] -= g[o];
                       break;
                     case BinOp::kMul:
                       if (ga) ga[ia] += g[o] * vb[ib];
                       if (gb) gb[ib] += g[o] * va[ia];
                       break;
                   }
                 };
                 if (same) {
                   const auto n = static_cast<std::int64_t>(oi->data.size());
                   for (std::int64_t i = 0; i < n; ++i) step(i, i, i);
                 } else {
                   for_each_broadcast(plan, step);
                 }
               });
  }
  return result;
}

// y = f(x) with dy/dx expressed through (x, y).
template <typename T, typename Fwd, typename Deriv>
Tensor<T> unary(const char* name, const Tensor<T>& x, Fwd fwd, Deriv deriv) {
  check_defined(name, x.defined());
  Tape<T>* tape = tape_for<T>({&x});
  const auto xs = x.data();
  std::vector<T> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = fwd(xs[i]);
  Tensor<T> result = make_out<T>(x.shape(), std::move(out), tape != nullptr);
  if (tape) {
    ImplPtr<T> xi = x.impl();
    detail::TensorImpl<T>* oi = result.impl().get();
    tape->push(name, {xi.get()}, result.impl(), [xi, oi, deriv]() {
      auto gx = xi->grad_buffer();
      const auto& g = oi->grad;
      for (std::size_t i = 0; i < g.size(); ++i) {
        gx[i] += g[i] * deriv(xi->data[i], oi->data[i]);
      }
    });
  }
  return result;
}

template <typename T>
T sigmoid_scalar(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

std::size_t checked_axis(const char* op, std::size_t axis, const Shape& s) {
  if (axis >= s.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                     " out of range for shape " + shape_str(s));
  }
  return axis;
}

std::int64_t prod(const Shape& s, std::size_t begin, std::size_t end) {
  std::int64_t n = 1;
  for (std::size_t i = begin; i < end; ++i) n *= s[i];
  return n;
}

template <typename T>
Tensor<T> reduce_sum_to(const char* name, const Tensor<T>& x, Shape dst) {
  Tape<T>* tape = tape_for<T>({&x});
  const Broadcast plan = plan_broadcast(name, x.shape(), dst);
  std::vector<T> out(static_cast<std::size_t>(shape_numel(dst)), T(0));
  const T* px = x.data().data();
  for_each_broadcast(plan, [&](std::int64_t o, std::int64_t, std::int64_t ib) {
    out[ib] += px[o];
  });
  Tensor<T> result = make_out<T>(std::move(dst), std::move(out), tape != nullptr);
  if (tape) {
    ImplPtr<T> xi = x.impl();
    detail::TensorImpl<T>* oi = result.impl().get();
    tape->push(name, {xi.get()}, result.impl(), [xi, oi, plan]() {
      T* gx = xi->grad_buffer().data();
      const T* g = oi->grad.data();
      for_each_broadcast(plan,
                         [&](std::int64_t o, std::int64_t, std::int64_t ib) {
                           gx[o] += g[ib];
                         });
    });
  }
  return result;
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary("add", BinOp::kAdd, a, b);
}
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary("sub", BinOp::kSub, a, b);
}
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary("mul", BinOp::kMul, a, b);
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  return unary(
      "scale", x, [factor](T v) { return v * factor; },
      [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T value) {
  return unary(
      "add_scalar", x, [value](T v) { return v + value; },
      [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary(
      "sigmoid", x, [](T v) { return sigmoid_scalar(v); },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  return unary(
      "tanh", x, [](T v) { return std::tanh(v); },
      [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return unary(
      "relu", x, [](T v) { return v > T(0) ? v : T(0); },
      [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& x) {
  return unary(
      "exp", x, [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& x) {
  return unary(
      "log", x, [](T v) { return std::log(v); },
      [](T v, T) { return T(1) / v; });
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  check_defined("matmul", a.defined() && b.defined());
  if (a.rank() < 1 || b.rank() != 2 || a.shape().back() != b.dim(0)) {
    shape_fail("matmul", a.shape(), b.shape());
  }
  Tape<T>* tape = tape_for<T>({&a, &b});
  const std::int64_t k = b.dim(0), n = b.dim(1);
  const std::int64_t rows = a.numel() / k;
  Shape out_shape = a.shape();
  out_shape.back() = n;
  std::vector<T> out(static_cast<std::size_t>(rows * n), T(0));
  kernels::gemm<T>(kernels::Trans::kNo, kernels::Trans::kNo, rows, n, k,
                   a.data().data(), k, b.data().data(), n, out.data(), n);
  Tensor<T> result = make_out<T>(std::move(out_shape), std::move(out),
                                 tape != nullptr);
  if (tape) {
    ImplPtr<T> ai = a.impl(), bi = b.impl();
    detail::TensorImpl<T>* oi = result.impl().get();
    tape->push("matmul", {ai.get(), bi.get()}, result.impl(),
               [ai, bi, oi, rows, n, k]() {
                 const T* g = oi->grad.data();
                 if (ai->requires_grad) {
                   kernels::gemm<T>(kernels::Trans::kNo, kernels::Trans::kYes,
                                    rows, k, n, g, n, bi->data.data(), n,
                                    ai->grad_buffer().data(), k);
                 }
                 if (bi->requires_grad) {
                   kernels::gemm<T>(kernels::Trans::kYes, kernels::Trans::kNo,
                                    k, n, rows, ai->data.data(), k, g, n,
                                    bi->grad_buffer().data(), n);
                 }
               });
  }
  return result;
}

std::int64_t conv_out_extent(std::int64_t in, std::int64_t kernel,
                             std::int64_t stride, Padding padding) {
  if (padding == Padding::kSame) return (in + stride - 1) / stride;
  if (in < kernel) return 0;
  return (in - kernel) / stride + 1;
}

namespace {

struct ConvGeometry {
  std::int64_t batch, in_ch, freq, time;
  std::int64_t out_ch, kf, kt;
  std::int64_t sf, st;
  std::int64_t out_f, out_t;
  std::int64_t pad_f, pad_t;
  std::int64_t col_rows() const { return in_ch * kf * kt; }
  std::int64_t col_cols() const { return out_f * out_t; }
};

template <typename T>
void im2col(const ConvGeometry& g, const T* in, T* cols) {
  const std::int64_t ncols = g.col_cols();
  for (std::int64_t c = 0; c < g.in_ch; ++c) {
    for (std::int64_t i = 0; i < g.kf; ++i) {
      for (std::int64_t j = 0; j < g.kt; ++j) {
        T* row = cols + ((c * g.kf + i) * g.kt + j) * ncols;
        for (std::int64_t of = 0; of < g.out_f; ++of) {
          const std::int64_t f = of * g.sf + i - g.pad_f;
          T* dst = row + of * g.out_t;
          if (f < 0 || f >= g.freq) {
            std::fill(dst, dst + g.out_t, T(0));
            continue;
          }
          const T* src = in + (c * g.freq + f) * g.time;
          for (std::int64_t ot = 0; ot < g.out_t; ++ot) {
            const std::int64_t t = ot * g.st + j - g.pad_t;
            dst[ot] = (t < 0 || t >= g.time) ? T(0) : src[t];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const ConvGeometry& g, const T* cols, T* in) {
  const std::int64_t ncols = g.col_cols();
  for (std::int64_t c = 0; c < g.in_ch; ++c) {
    for (std::int64_t i = 0; i < g.kf; ++i) {
      for (std::int64_t j = 0; j < g.kt; ++j) {
        const T* row = cols + ((c * g.kf + i) * g.kt + j) * ncols;
        for (std::int64_t of = 0; of < g.out_f; ++of) {
          const std::int64_t f = of * g.sf + i - g.pad_f;
          if (f < 0 || f >= g.freq) continue;
          T* dst = in + (c * g.freq + f) * g.time;
          const T* src = row + of * g.out_t;
          for (std::int64_t ot = 0; ot < g.out_t; ++ot) {
            const std::int64_t t = ot * g.st + j - g.pad_t;
            if (t >= 0 && t < g.time) dst[t] += src[ot];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& filters,
                 std::int64_t stride_f, std::int64_t stride_t,
                 Padding padding) {
  check_defined("conv2d", input.defined() && filters.defined());
  if (input.rank() != 4 || filters.rank() != 4 ||
      input.dim(1) != filters.dim(1)) {
    shape_fail("conv2d", input.shape(), filters.shape());
  }
  if (stride_f < 1 || stride_t < 1) {
    throw ShapeError("conv2d: strides must be >= 1");
  }
  ConvGeometry g{};
  g.batch = input.dim(0);
  g.in_ch = input.dim(1);
  g.freq = input.dim(2);
  g.time = input.dim(3);
  g.out_ch = filters.dim(0);
  g.kf = filters.dim(2);
  g.kt = filters.dim(3);
  g.sf = stride_f;
  g.st = stride_t;
  g.out_f = conv_out_extent(g.freq, g.kf, g.sf, padding);
  g.out_t = conv_out_extent(g.time, g.kt, g.st, padding);
  if (g.out_f < 1 || g.out_t < 1) {
    shape_fail("conv2d", input.shape(), filters.shape(),
               "filter larger than input");
  }
  g.pad_f = padding == Padding::kSame ? (g.kf - 1) / 2 : 0;
  g.pad_t = padding == Padding::kSame ? (g.kt - 1) / 2 : 0;

  Tape<T>* tape = tape_for<T>({&input, &filters});
  const std::int64_t in_per = g.in_ch * g.freq * g.time;
  const std::int64_t out_per = g.out_ch * g.col_cols();
  std::vector<T> out(static_cast<std::size_t>(g.batch * out_per), T(0));
  std::vector<T> cols(static_cast<std::size_t>(g.col_rows() * g.col_cols()));
  for (std::int64_t n = 0; n < g.batch; ++n) {
    im2col(g, input.data().data() + n * in_per, cols.data());
    kernels::gemm<T>(kernels::Trans::kNo, kernels::Trans::kNo, g.out_ch,
                     g.col_cols(), g.col_rows(), filters.data().data(),
                     g.col_rows(), cols.data(), g.col_cols(),
                     out.data() + n * out_per, g.col_cols());
  }
  Tensor<T> result = make_out<T>(Shape{g.batch, g.out_ch, g.out_f, g.out_t},
                                 std::move(out), tape != nullptr);
  if (tape) {
    ImplPtr<T> xi = input.impl(), wi = filters.impl();
    detail::TensorImpl<T>* oi = result.impl().get();
    tape->push("conv2d", {xi.get(), wi.get()}, result.impl(),
               [xi, wi, oi, g, in_per, out_per]() {
                 std::vector<T> buf(
                     static_cast<std::size_t>(g.col_rows() * g.col_cols()));
                 T* gw = wi->requires_grad ? wi->grad_buffer().data() : nullptr;
                 T* gx = xi->requires_grad ? xi->grad_buffer().data() : nullptr;
                 for (std::int64_t n = 0; n < g.batch; ++n) {
                   const T* gout = oi->grad.data() + n * out_per;
                   if (gw) {
                     im2col(g, xi->data.data() + n * in_per, buf.data());
                     kernels::gemm<T>(kernels::Trans::kNo, kernels::Trans::kYes,
                                      g.out_ch, g.col_rows(), g.col_cols(),
                                      gout, g.col_cols(), buf.data(),
                                      g.col_cols(), gw, g.col_rows());
                   }
                   if (gx) {
                     std::fill(buf.begin(), buf.end(), T(0));
                     kernels::gemm<T>(kernels::Trans::kYes, kernels::Trans::kNo,
                                      g.col_rows(), g.col_cols(), g.out_ch,
                                      wi->data.data(), g.col_rows(), gout,
                                      g.col_cols(), buf.data(), g.col_cols());
                     col2im_add(g, buf.data(), gx + n * in_per);
                   }
                 }
               });
  }
  return result;
}

namespace {

// Shared body of concat and stack: part p contributes extents[p] slices of
// `inner` contiguous values per outer index.
template <typename T>
Tensor<T> join(const char* name, const std::vector<Tensor<T>>& parts,
               Shape out_shape, std::int64_t outer, std::int64_t inner,
               std::vector<std::int64_t> extents) {
  Tape<T>* tape = nullptr;
  if (Tape<T>::active()) {
    for (const auto& p : parts) {
      if (p.requires_grad()) tape = Tape<T>::active();
    }
  }
  std::int64_t total_extent = 0;
  for (auto e : extents) total_extent += e;
  std::vector<T> out(static_cast<std::size_t>(outer * total_extent * inner));
  for (std::int64_t o = 0; o < outer; ++o) {
    T* dst = out.data() + o * total_extent * inner;
    for (std::size_t p = 0; p < parts.size(); ++p) {
      const std::int64_t len = extents[p] * inner;
      const T* src = parts[p].data().data() + o * len;
      std::copy(src, src + len, dst);
      dst += len;
    }
  }
  Tensor<T> result = make_out<T>(std::move(out_shape), std::move(out),
                                 tape != nullptr);
  if (tape) {
    std::vector<ImplPtr<T>> impls;
    std::vector<const void*> ids;
    for (const auto& p : parts) {
      impls.push_back(p.impl());
      ids.push_back(p.impl().get());
    }
    detail::TensorImpl<T>* oi = result.impl().get();
    tape->push(name, std::move(ids), result.impl(),
               [impls, oi, outer, inner, extents, total_extent]() {
                 for (std::size_t p = 0; p < impls.size(); ++p) {
                   if (!impls[p]->requires_grad) continue;
                   T* gp = impls[p]->grad_buffer().data();
                   std::int64_t offset = 0;
                   for (std::size_t q = 0; q < p; ++q) offset += extents[q];
                   const std::int64_t len = extents[p] * inner;
                   for (std::int64_t o = 0; o < outer; ++o) {
                     const T* src = oi->grad.data() +
                                    (o * total_extent + offset) * inner;
                     T* dst = gp + o * len;
                     for (std::int64_t i = 0; i < len; ++i) dst[i] += src[i];
                   }
                 }
               });
  }
  return result;
}

}  // namespace

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts[0].shape();
  checked_axis("concat", axis, first);
  std::vector<std::int64_t> extents;
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    check_defined("concat", p.defined());
    if (p.rank() != first.size()) shape_fail("concat", first, p.shape());
    for (std::size_t i = 0; i < first.size(); ++i) {
      if (i != axis && p.dim(i) != first[i]) {
        shape_fail("concat", first, p.shape());
      }
    }
    extents.push_back(p.dim(axis));
    out_shape[axis] += p.dim(axis);
  }
  return join("concat", parts, std::move(out_shape), prod(first, 0, axis),
              prod(first, axis + 1, first.size()), std::move(extents));
}

template <typename T>
Tensor<T> stack(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("stack: no inputs");
  const Shape& first = parts[0].shape();
  if (axis > first.size()) checked_axis("stack", axis, first);
  for (const auto& p : parts) {
    check_defined("stack", p.defined());
    if (p.shape() != first) shape_fail("stack", first, p.shape());
  }
  Shape out_shape = first;
  out_shape.insert(out_shape.begin() + static_cast<std::ptrdiff_t>(axis),
                   static_cast<std::int64_t>(parts.size()));
  return join("stack", parts, std::move(out_shape), prod(first, 0, axis),
              prod(first, axis, first.size()),
              std::vector<std::int64_t>(parts.size(), 1));
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::int64_t start,
                std::int64_t length) {
  check_defined("slice", x.defined());
  checked_axis("slice", axis, x.shape());
  if (start < 0 || length < 1 || start + length > x.dim(axis)) {
    throw ShapeError("slice: range [" + std::to_string(start) + ", " +
                     std::to_string(start + length) + ") outside axis " +
                     std::to_string(axis) + " of " + shape_str(x.shape()));
  }
  Tape<T>* tape = tape_for<T>({&x});
  const std::int64_t outer = prod(x.shape(), 0, axis);
  const std::int64_t inner = prod(x.shape(), axis + 1, x.rank());
  const std::int64_t extent = x.dim(axis);
  std::vector<T> out(static_cast<std::size_t>(outer * length * inner));
  for (std::int64_t o = 0; o < outer; ++o) {
    const T* src = x.data().data() + (o * extent + start) * inner;
    std::copy(src, src + length * inner, out.data() + o * length * inner);
  }
  Shape out_shape = x.shape();
  out_shape[axis] = length;
  Tensor<T> result = make_out<T>(std::move(out_shape), std::move(out),
                                 tape != nullptr);
  if (tape) {
    ImplPtr<T> xi = x.impl();
    detail::TensorImpl<T>* oi = result.impl().get();
    tape->push("slice", {xi.get()}, result.impl(),
               [xi, oi, outer, inner, extent, start, length]() {
                 T* gx = xi->grad_buffer().data();
                 for (std::int64_t o = 0; o < outer; ++o) {
                   const T* src = oi->grad.data() + o * length * inner;
                   T* dst = gx + (o * extent + start) * inner;
                   for (std::int64_t i = 0; i < length * inner; ++i) {
                     dst[i] += src[i];
                   }
                 }
               });
  }
  return result;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  check_defined("reshape", x.defined());
  if (shape_numel(shape) != x.numel()) shape_fail("reshape", x.shape(), shape);
  Tensor<T> out = unary(
      "reshape", x, [](T v) { return v; }, [](T, T) { return T(1); });
  out.impl()->shape = std::move(shape);
  return out;
}

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& order) {
  check_defined("permute", x.defined());
  const std::size_t r = x.rank();
  std::vector<bool> seen(r, false);
  if (order.size() != r) {
    throw ShapeError("permute: order size does not match " +
                     shape_str(x.shape()));
  }
  for (auto o : order) {
    if (o >= r || seen[o]) {
      throw ShapeError("permute: invalid axis order for " +
                       shape_str(x.shape()));
    }
    seen[o] = true;
  }
  Tape<T>* tape = tape_for<T>({&x});
  Shape out_shape(r);
  const auto in_strides = contiguous_strides(x.shape());
  Broadcast plan;  // reuse the strided walker: a = output, b = source
  plan.out.resize(r);
  plan.stride_a.resize(r);
  plan.stride_b.resize(r);
  for (std::size_t i = 0; i < r; ++i) {
    out_shape[i] = x.dim(order[i]);
    plan.out[i] = out_shape[i];
    plan.stride_b[i] = in_strides[order[i]];
  }
  plan.stride_a = contiguous_strides(out_shape);
  std::vector<T> out(static_cast<std::size_t>(x.numel()));
  const T* src = x.data().data();
  for_each_broadcast(plan, [&](std::int64_t o, std::int64_t, std::int64_t ib) {
    out[o] = src[ib];
  });
  Tensor<T> result = make_out<T>(std::move(out_shape), std::move(out),
                                 tape != nullptr);
  if (tape) {
    ImplPtr<T> xi = x.impl();
    detail::TensorImpl<T>* oi = result.impl().get();
    tape->push("permute", {xi.get()}, result.impl(), [xi, oi, plan]() {
      T* gx = xi->grad_buffer().data();
      const T* g = oi->grad.data();
      for_each_broadcast(plan,
                         [&](std::int64_t o, std::int64_t, std::int64_t ib) {
                           gx[ib] += g[o];
                         });
    });
  }
  return result;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis,
                  std::span<const std::uint8_t> valid) {
  check_defined("softmax", x.defined());
  checked_axis("softmax", axis, x.shape());
  if (!valid.empty() && static_cast<std::int64_t>(valid.size()) != x.numel()) {
    throw ShapeError("softmax: mask size " + std::to_string(valid.size()) +
                     " does not match " + shape_str(x.shape()));
  }
  Tape<T>* tape = tape_for<T>({&x});
  const std::int64_t outer = prod(x.shape(), 0, axis);
  const std::int64_t inner = prod(x.shape(), axis + 1, x.rank());
  const std::int64_t extent = x.dim(axis);
  const T* px = x.data().data();
  std::vector<T> out(static_cast<std::size_t>(x.numel()), T(0));
  auto ok = [&](std::int64_t idx) { return valid.empty() || valid[idx] != 0; };
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t in = 0; in < inner; ++in) {
      const std::int64_t base = o * extent * inner + in;
      T mx = -std::numeric_limits<T>::infinity();
      bool any = false;
      for (std::int64_t a = 0; a < extent; ++a) {
        const std::int64_t idx = base + a * inner;
        if (!ok(idx)) continue;
        any = true;
        mx = std::max(mx, px[idx]);
      }
      if (!any) {
        throw ShapeError("softmax: every entry of a slice is masked in " +
                         shape_str(x.shape()));
      }
      T denom = 0;
      for (std::int64_t a = 0; a < extent; ++a) {
        const std::int64_t idx = base + a * inner;
        if (!ok(idx)) continue;
        out[idx] = std::exp(px[idx] - mx);
        denom += out[idx];
      }
      for (std::int64_t a = 0; a < extent; ++a) out[base + a * inner] /= denom;
    }
  }
  Tensor<T> result = make_out<T>(x.shape(), std::move(out), tape != nullptr);
  if (tape) {
    ImplPtr<T> xi = x.impl();
    detail::TensorImpl<T>* oi = result.impl().get();
    tape->push("softmax", {xi.get()}, result.impl(),
               [xi, oi, outer, inner, extent]() {
                 T* gx = xi->grad_buffer().data();
                 const T* y = oi->data.data();
                 const T* g = oi->grad.data();
                 for (std::int64_t o = 0; o < outer; ++o) {
                   for (std::int64_t in = 0; in < inner; ++in) {
                     const std::int64_t base = o * extent * inner + in;
                     T dotp = 0;
                     for (std::int64_t a = 0; a < extent; ++a) {
                       dotp += y[base + a * inner] * g[base + a * inner];
                     }
                     for (std::int64_t a = 0; a < extent; ++a) {
                       const std::int64_t idx = base + a * inner;
                       gx[idx] += y[idx] * (g[idx] - dotp);
                     }
                   }
                 }
               });
  }
  return result;
}

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& x) {
  check_defined("log_softmax", x.defined());
  if (x.rank() < 1) throw ShapeError("log_softmax: scalar input");
  Tape<T>* tape = tape_for<T>({&x});
  const std::int64_t v = x.shape().back();
  const std::int64_t rows = x.numel() / v;
  const T* px = x.data().data();
  std::vector<T> out(static_cast<std::size_t>(x.numel()));
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* row = px + r * v;
    const T mx = *std::max_element(row, row + v);
    T denom = 0;
    for (std::int64_t j = 0; j < v; ++j) denom += std::exp(row[j] - mx);
    const T lse = mx + std::log(denom);
    for (std::int64_t j = 0; j < v; ++j) out[r * v + j] = row[j] - lse;
  }
  Tensor<T> result = make_out<T>(x.shape(), std::move(out), tape != nullptr);
  if (tape) {
    ImplPtr<T> xi = x.impl();
    detail::TensorImpl<T>* oi = result.impl().get();
    tape->push("log_softmax", {xi.get()}, result.impl(), [xi, oi, rows, v]() {
      T* gx = xi->grad_buffer().data();
      const T* y = oi->data.data();
      const T* g = oi->grad.data();
      for (std::int64_t r = 0; r < rows; ++r) {
        T gsum = 0;
        for (std::int64_t j = 0; j < v; ++j) gsum += g[r * v + j];
        for (std::int64_t j = 0; j < v; ++j) {
          gx[r * v + j] += g[r * v + j] - std::exp(y[r * v + j]) * gsum;
        }
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  check_defined("sum", x.defined());
  return reduce_sum_to("sum", x, Shape{});
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x, const std::vector<std::size_t>& axes) {
  check_defined("sum", x.defined());
  Shape dst = x.shape();
  for (auto a : axes) dst[checked_axis("sum", a, x.shape())] = 1;
  return reduce_sum_to("sum", x, std::move(dst));
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x, const std::vector<std::size_t>& axes) {
  std::int64_t count = 1;
  Shape dst = x.shape();
  for (auto a : axes) {
    count *= x.dim(checked_axis("mean", a, x.shape()));
    dst[a] = 1;
  }
  return scale(reduce_sum_to("mean", x, std::move(dst)),
               T(1) / static_cast<T>(count));
}

template <typename T>
Tensor<T> variance(const Tensor<T>& x, const std::vector<std::size_t>& axes) {
  const Tensor<T> centered = sub(x, mean(x, axes));
  return mean(mul(centered, centered), axes);
}

template <typename T>
Tensor<T> where(const Tensor<T>& mask, const Tensor<T>& a, const Tensor<T>& b) {
  check_defined("where", mask.defined() && a.defined() && b.defined());
  if (a.shape() != b.shape()) shape_fail("where", a.shape(), b.shape());
  const Broadcast plan = plan_broadcast("where", a.shape(), mask.shape());
  if (plan.out != a.shape()) shape_fail("where", a.shape(), mask.shape());
  Tape<T>* tape = tape_for<T>({&a, &b});
  std::vector<T> out(static_cast<std::size_t>(a.numel()));
  const T* pm = mask.data().data();
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  for_each_broadcast(plan, [&](std::int64_t o, std::int64_t, std::int64_t im) {
    out[o] = pm[im] != T(0) ? pa[o] : pb[o];
  });
  Tensor<T> result = make_out<T>(a.shape(), std::move(out), tape != nullptr);
  if (tape) {
    ImplPtr<T> mi = mask.impl(), ai = a.impl(), bi = b.impl();
    detail::TensorImpl<T>* oi = result.impl().get();
    tape->push("where", {ai.get(), bi.get()}, result.impl(),
               [mi, ai, bi, oi, plan]() {
                 T* ga = ai->requires_grad ? ai->grad_buffer().data() : nullptr;
                 T* gb = bi->requires_grad ? bi->grad_buffer().data() : nullptr;
                 const T* g = oi->grad.data();
                 const T* m = mi->data.data();
                 for_each_broadcast(plan, [&](std::int64_t o, std::int64_t,
                                              std::int64_t im) {
                   if (m[im] != T(0)) {
                     if (ga) ga[o] += g[o];
                   } else if (gb) {
                     gb[o] += g[o];
                   }
                 });
               });
  }
  return result;
}

template <typename T>
Tensor<T> pick(const Tensor<T>& x, std::span<const std::int64_t> ids) {
  check_defined("pick", x.defined());
  if (x.rank() != 2 || static_cast<std::int64_t>(ids.size()) != x.dim(0)) {
    shape_fail("pick", x.shape(),
               Shape{static_cast<std::int64_t>(ids.size())});
  }
  const std::int64_t v = x.dim(1);
  for (auto id : ids) {
    if (id < 0 || id >= v) {
      throw ShapeError("pick: index " + std::to_string(id) +
                       " out of range for " + shape_str(x.shape()));
    }
  }
  Tape<T>* tape = tape_for<T>({&x});
  std::vector<T> out(ids.size());
  for (std::size_t n = 0; n < ids.size(); ++n) {
    out[n] = x.data()[n * v + ids[n]];
  }
  Tensor<T> result = make_out<T>(Shape{static_cast<std::int64_t>(ids.size())},
                                 std::move(out), tape != nullptr);
  if (tape) {
    ImplPtr<T> xi = x.impl();
    detail::TensorImpl<T>* oi = result.impl().get();
    std::vector<std::int64_t> idv(ids.begin(), ids.end());
    tape->push("pick", {xi.get()}, result.impl(), [xi, oi, idv, v]() {
      T* gx = xi->grad_buffer().data();
      for (std::size_t n = 0; n < idv.size(); ++n) {
        gx[n * v + idv[n]] += oi->grad[n];
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& table,
                      std::span<const std::int64_t> ids) {
  check_defined("gather_rows", table.defined());
  if (table.rank() != 2 || ids.empty()) {
    shape_fail("gather_rows", table.shape(),
               Shape{static_cast<std::int64_t>(ids.size())});
  }
  const std::int64_t rows = table.dim(0), d = table.dim(1);
  for (auto id : ids) {
    if (id < 0 || id >= rows) {
      throw ShapeError("gather_rows: index " + std::to_string(id) +
                       " out of range for " + shape_str(table.shape()));
    }
  }
  Tape<T>* tape = tape_for<T>({&table});
  std::vector<T> out(ids.size() * static_cast<std::size_t>(d));
  for (std::size_t n = 0; n < ids.size(); ++n) {
    const T* src = table.data().data() + ids[n] * d;
    std::copy(src, src + d, out.data() + n * d);
  }
  Tensor<T> result =
      make_out<T>(Shape{static_cast<std::int64_t>(ids.size()), d},
                  std::move(out), tape != nullptr);
  if (tape) {
    ImplPtr<T> ti = table.impl();
    detail::TensorImpl<T>* oi = result.impl().get();
    std::vector<std::int64_t> idv(ids.begin(), ids.end());
    tape->push("gather_rows", {ti.get()}, result.impl(), [ti, oi, idv, d]() {
      T* gt = ti->grad_buffer().data();
      for (std::size_t n = 0; n < idv.size(); ++n) {
        kernels::axpy<T>(d, T(1), oi->grad.data() + n * d, gt + idv[n] * d);
      }
    });
  }
  return result;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> lstm_cell(const Tensor<T>& gates,
                                          const Tensor<T>& c_prev) {
  check_defined("lstm_cell", gates.defined() && c_prev.defined());
  if (gates.rank() != 2 || c_prev.rank() != 2 ||
      gates.dim(0) != c_prev.dim(0) || gates.dim(1) != 4 * c_prev.dim(1)) {
    shape_fail("lstm_cell", gates.shape(), c_prev.shape());
  }
  const std::int64_t n = gates.dim(0), h = c_prev.dim(1);
  const T* pg = gates.data().data();
  const T* pc = c_prev.data().data();

  // Cell state.
  Tape<T>* tape = tape_for<T>({&gates, &c_prev});
  std::vector<T> c(static_cast<std::size_t>(n * h));
  for (std::int64_t r = 0; r < n; ++r) {
    const T* g = pg + r * 4 * h;
    for (std::int64_t j = 0; j < h; ++j) {
      const T i = sigmoid_scalar(g[j]);
      const T f = sigmoid_scalar(g[h + j]);
      const T cand = std::tanh(g[2 * h + j]);
      c[r * h + j] = f * pc[r * h + j] + i * cand;
    }
  }
  Tensor<T> c_out = make_out<T>(Shape{n, h}, std::move(c), tape != nullptr);
  if (tape) {
    ImplPtr<T> gi = gates.impl(), ci = c_prev.impl();
    detail::TensorImpl<T>* oi = c_out.impl().get();
    tape->push("lstm_cell_state", {gi.get(), ci.get()}, c_out.impl(),
               [gi, ci, oi, n, h]() {
                 T* gg = gi->requires_grad ? gi->grad_buffer().data() : nullptr;
                 T* gc = ci->requires_grad ? ci->grad_buffer().data() : nullptr;
                 for (std::int64_t r = 0; r < n; ++r) {
                   const T* g = gi->data.data() + r * 4 * h;
                   for (std::int64_t j = 0; j < h; ++j) {
                     const T dc = oi->grad[r * h + j];
                     const T i = sigmoid_scalar(g[j]);
                     const T f = sigmoid_scalar(g[h + j]);
                     const T cand = std::tanh(g[2 * h + j]);
                     const T cp = ci->data[r * h + j];
                     if (gg) {
                       T* row = gg + r * 4 * h;
                       row[j] += dc * cand * i * (T(1) - i);
                       row[h + j] += dc * cp * f * (T(1) - f);
                       row[2 * h + j] += dc * i * (T(1) - cand * cand);
                     }
                     if (gc) gc[r * h + j] += dc * f;
                   }
                 }
               });
  }

  // Hidden output.
  Tape<T>* tape_h = tape_for<T>({&gates, &c_out});
  std::vector<T> hv(static_cast<std::size_t>(n * h));
  const T* pcn = c_out.data().data();
  for (std::int64_t r = 0; r < n; ++r) {
    const T* g = pg + r * 4 * h;
    for (std::int64_t j = 0; j < h; ++j) {
      hv[r * h + j] = sigmoid_scalar(g[3 * h + j]) * std::tanh(pcn[r * h + j]);
    }
  }
  Tensor<T> h_out = make_out<T>(Shape{n, h}, std::move(hv), tape_h != nullptr);
  if (tape_h) {
    ImplPtr<T> gi = gates.impl(), ci = c_out.impl();
    detail::TensorImpl<T>* oi = h_out.impl().get();
    tape_h->push("lstm_cell_output", {gi.get(), ci.get()}, h_out.impl(),
                 [gi, ci, oi, n, h]() {
                   T* gg =
                       gi->requires_grad ? gi->grad_buffer().data() : nullptr;
                   T* gc =
                       ci->requires_grad ? ci->grad_buffer().data() : nullptr;
                   for (std::int64_t r = 0; r < n; ++r) {
                     const T* g = gi->data.data() + r * 4 * h;
                     for (std::int64_t j = 0; j < h; ++j) {
                       const T dh = oi->grad[r * h + j];
                       const T o = sigmoid_scalar(g[3 * h + j]);
                       const T tc = std::tanh(ci->data[r * h + j]);
                       if (gg) gg[r * 4 * h + 3 * h + j] += dh * tc * o * (T(1) - o);
                       if (gc) gc[r * h + j] += dh * o * (T(1) - tc * tc);
                     }
                   }
                 });
  }
  return {h_out, c_out};
}

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, std::size_t channel_axis,
                     double eps, std::span<const std::uint8_t> valid,
                     const BatchNormStats* stats,
                     BatchNormStats* batch_stats) {
  check_defined("batch_norm", x.defined() && gamma.defined() && beta.defined());
  checked_axis("batch_norm", channel_axis, x.shape());
  const std::int64_t ch = x.dim(channel_axis);
  if (gamma.numel() != ch || beta.numel() != ch) {
    shape_fail("batch_norm", x.shape(), gamma.shape(), "channel count");
  }
  if (!valid.empty() && static_cast<std::int64_t>(valid.size()) != x.numel()) {
    throw ShapeError("batch_norm: mask size " + std::to_string(valid.size()) +
                     " does not match " + shape_str(x.shape()));
  }
  if (!(eps > 0)) throw std::invalid_argument("batch_norm: eps must be > 0");
  const std::int64_t outer = prod(x.shape(), 0, channel_axis);
  const std::int64_t inner = prod(x.shape(), channel_axis + 1, x.rank());
  const T* px = x.data().data();
  auto ok = [&](std::int64_t idx) { return valid.empty() || valid[idx] != 0; };

  std::vector<double> mu(static_cast<std::size_t>(ch), 0.0);
  std::vector<double> var(static_cast<std::size_t>(ch), 0.0);
  std::vector<std::int64_t> count(static_cast<std::size_t>(ch), 0);
  if (stats == nullptr) {
    for (std::int64_t o = 0; o < outer; ++o) {
      for (std::int64_t c = 0; c < ch; ++c) {
        const std::int64_t base = (o * ch + c) * inner;
        for (std::int64_t i = 0; i < inner; ++i) {
          if (!ok(base + i)) continue;
          mu[c] += px[base + i];
          ++count[c];
        }
      }
    }
    for (std::int64_t c = 0; c < ch; ++c) {
      if (count[c] == 0) {
        throw std::invalid_argument("batch_norm: channel " + std::to_string(c) +
                                    " has no valid frames");
      }
      mu[c] /= static_cast<double>(count[c]);
    }
    for (std::int64_t o = 0; o < outer; ++o) {
      for (std::int64_t c = 0; c < ch; ++c) {
        const std::int64_t base = (o * ch + c) * inner;
        for (std::int64_t i = 0; i < inner; ++i) {
          if (!ok(base + i)) continue;
          const double d = px[base + i] - mu[c];
          var[c] += d * d;
        }
      }
    }
    for (std::int64_t c = 0; c < ch; ++c) var[c] /= static_cast<double>(count[c]);
    if (batch_stats) *batch_stats = BatchNormStats{mu, var};
  } else {
    if (static_cast<std::int64_t>(stats->mean.size()) != ch ||
        static_cast<std::int64_t>(stats->var.size()) != ch) {
      throw ShapeError("batch_norm: running statistics do not match " +
                       std::to_string(ch) + " channels");
    }
    mu = stats->mean;
    var = stats->var;
  }

  std::vector<T> inv_std(static_cast<std::size_t>(ch));
  for (std::int64_t c = 0; c < ch; ++c) {
    inv_std[c] = static_cast<T>(1.0 / std::sqrt(var[c] + eps));
  }
  std::vector<T> mean_t(mu.begin(), mu.end());
  Tape<T>* tape = tape_for<T>({&x, &gamma, &beta});
  const T* pgm = gamma.data().data();
  const T* pbt = beta.data().data();
  std::vector<T> out(static_cast<std::size_t>(x.numel()));
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t c = 0; c < ch; ++c) {
      const std::int64_t base = (o * ch + c) * inner;
      for (std::int64_t i = 0; i < inner; ++i) {
        out[base + i] =
            pgm[c] * (px[base + i] - mean_t[c]) * inv_std[c] + pbt[c];
      }
    }
  }
  Tensor<T> result = make_out<T>(x.shape(), std::move(out), tape != nullptr);
  if (tape) {
    ImplPtr<T> xi = x.impl(), gi = gamma.impl(), bi = beta.impl();
    detail::TensorImpl<T>* oi = result.impl().get();
    std::vector<std::uint8_t> mask(valid.begin(), valid.end());
    const bool train = stats == nullptr;
    tape->push(
        "batch_norm", {xi.get(), gi.get(), bi.get()}, result.impl(),
        [xi, gi, bi, oi, mask, train, mean_t, inv_std, count, outer, ch,
         inner]() {
          const T* g = oi->grad.data();
          const T* xv = xi->data.data();
          std::vector<T> sum_g(static_cast<std::size_t>(ch), T(0));
          std::vector<T> sum_gx(static_cast<std::size_t>(ch), T(0));
          for (std::int64_t o = 0; o < outer; ++o) {
            for (std::int64_t c = 0; c < ch; ++c) {
              const std::int64_t base = (o * ch + c) * inner;
              for (std::int64_t i = 0; i < inner; ++i) {
                const T xhat = (xv[base + i] - mean_t[c]) * inv_std[c];
                sum_g[c] += g[base + i];
                sum_gx[c] += g[base + i] * xhat;
              }
            }
          }
          if (gi->requires_grad) {
            T* gg = gi->grad_buffer().data();
            for (std::int64_t c = 0; c < ch; ++c) gg[c] += sum_gx[c];
          }
          if (bi->requires_grad) {
            T* gb = bi->grad_buffer().data();
            for (std::int64_t c = 0; c < ch; ++c) gb[c] += sum_g[c];
          }
          if (!xi->requires_grad) return;
          T* gx = xi->grad_buffer().data();
          const T* gm = gi->data.data();
          for (std::int64_t o = 0; o < outer; ++o) {
            for (std::int64_t c = 0; c < ch; ++c) {
              const std::int64_t base = (o * ch + c) * inner;
              const T k = gm[c] * inv_std[c];
              for (std::int64_t i = 0; i < inner; ++i) {
                const std::int64_t idx = base + i;
                T d = g[idx];
                if (train && (mask.empty() || mask[idx] != 0)) {
                  const T xhat = (xv[idx] - mean_t[c]) * inv_std[c];
                  const T nv = static_cast<T>(count[c]);
                  d -= (sum_g[c] + xhat * sum_gx[c]) / nv;
                }
                gx[idx] += k * d;
              }
            }
          }
        });
  }
  return result;
}

#define DEEPLAS_INSTANTIATE_OPS(T)                                            \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> scale(const Tensor<T>&, T);                              \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                         \
  template Tensor<T> sigmoid(const Tensor<T>&);                               \
  template Tensor<T> tanh(const Tensor<T>&);                                  \
  template Tensor<T> relu(const Tensor<T>&);                                  \
  template Tensor<T> exp(const Tensor<T>&);                                   \
  template Tensor<T> log(const Tensor<T>&);                                   \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, std::int64_t, \
                            std::int64_t, Padding);                           \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, std::size_t);      \
  template Tensor<T> stack(const std::vector<Tensor<T>>&, std::size_t);       \
  template Tensor<T> slice(const Tensor<T>&, std::size_t, std::int64_t,       \
                           std::int64_t);                                     \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                        \
  template Tensor<T> permute(const Tensor<T>&,                                \
                             const std::vector<std::size_t>&);                \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t,                   \
                             std::span<const std::uint8_t>);                  \
  template Tensor<T> log_softmax(const Tensor<T>&);                           \
  template Tensor<T> sum(const Tensor<T>&);                                   \
  template Tensor<T> sum(const Tensor<T>&, const std::vector<std::size_t>&);  \
  template Tensor<T> mean(const Tensor<T>&, const std::vector<std::size_t>&); \
  template Tensor<T> variance(const Tensor<T>&,                               \
                              const std::vector<std::size_t>&);               \
  template Tensor<T> where(const Tensor<T>&, const Tensor<T>&,                \
                           const Tensor<T>&);                                 \
  template Tensor<T> pick(const Tensor<T>&, std::span<const std::int64_t>);   \
  template Tensor<T> gather_rows(const Tensor<T>&,                            \
                                 std::span<const std::int64_t>);              \
  template std::pair<Tensor<T>, Tensor<T>> lstm_cell(const Tensor<T>&,        \
                                                     const Tensor<T>&);       \
  template Tensor<T> batch_norm(const Tensor<T>&, const Tensor<T>&,           \
                                const Tensor<T>&, std::size_t, double,        \
                                std::span<const std::uint8_t>,                \
                                const BatchNormStats*, BatchNormStats*);

DEEPLAS_INSTANTIATE_OPS(float)
DEEPLAS_INSTANTIATE_OPS(double)

}  // namespace deeplas
