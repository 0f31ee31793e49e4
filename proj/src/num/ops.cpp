#include "ssmamba/num/ops.hpp"

#include <cmath>

#include "ssmamba/errors.hpp"

namespace ssmamba::num {

namespace {

// Maps each output element of a broadcast to its source offsets in a and b.
struct BroadcastPlan {
  Shape out;
  std::vector<std::size_t> stride_a;
  std::vector<std::size_t> stride_b;

  BroadcastPlan(const Shape& a, const Shape& b) : out(broadcast_shape(a, b)) {
    stride_a = aligned_strides(a);
    stride_b = aligned_strides(b);
  }

  std::vector<std::size_t> aligned_strides(const Shape& s) const {
    std::vector<std::size_t> strides(out.size(), 0);
    std::size_t stride = 1;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::size_t src = s.size() - 1 - i;
      const std::size_t dst = out.size() - 1 - i;
      strides[dst] = s[src] == 1 ? 0 : stride;
      stride *= s[src];
    }
    return strides;
  }

  template <class F>
  void for_each(F&& f) const {
    const std::size_t total = numel(out);
    const std::size_t rank = out.size();
    std::vector<std::size_t> idx(rank, 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t i = 0; i < total; ++i) {
      f(i, ia, ib);
      for (std::size_t d = rank; d-- > 0;) {
        ++idx[d];
        ia += stride_a[d];
        ib += stride_b[d];
        if (idx[d] < out[d]) break;
        ia -= stride_a[d] * out[d];
        ib -= stride_b[d] * out[d];
        idx[d] = 0;
      }
    }
  }
};

template <class T>
void accumulate_into(Node<T>& parent, const Tensor<T>& g) {
  if (parent.requires_grad) parent.accumulate(g);
}

template <class T, class F, class DF>
Var<T> unary(const char* name, const Var<T>& a, F f, DF df) {
  Tensor<T> out(a.shape());
  const auto in = a.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(in[i]);
  return make_op<T>(name, std::move(out), {a}, [df](Node<T>& n) {
    Node<T>& p = *n.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    const auto x = p.value.data();
    const auto y = n.value.data();
    const auto gy = n.grad.data();
    for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i] * df(x[i], y[i]);
  });
}

enum class BinaryKind { add, sub, mul };

template <class T>
Var<T> binary(const char* name, BinaryKind kind, const Var<T>& a, const Var<T>& b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  auto apply = [kind](T x, T y) {
    switch (kind) {
      case BinaryKind::add: return x + y;
      case BinaryKind::sub: return x - y;
      case BinaryKind::mul: return x * y;
    }
    return T{0};
  };

  const bool same = av.shape() == bv.shape();
  Tensor<T> out(same ? av.shape() : broadcast_shape(av.shape(), bv.shape()));
  if (same) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = apply(av[i], bv[i]);
  } else {
    BroadcastPlan plan(av.shape(), bv.shape());
    plan.for_each([&](std::size_t i, std::size_t ia, std::size_t ib) { out[i] = apply(av[ia], bv[ib]); });
  }

  return make_op<T>(name, std::move(out), {a, b}, [kind, same](Node<T>& n) {
    Node<T>& pa = *n.parents[0];
    Node<T>& pb = *n.parents[1];
    const auto& g = n.grad;
    auto da = [&](std::size_t i, std::size_t ib) {
      return kind == BinaryKind::mul ? g[i] * pb.value[ib] : g[i];
    };
    auto db = [&](std::size_t i, std::size_t ia) {
      switch (kind) {
        case BinaryKind::add: return g[i];
        case BinaryKind::sub: return -g[i];
        case BinaryKind::mul: return g[i] * pa.value[ia];
      }
      return T{0};
    };
    if (same) {
      if (pa.requires_grad) {
        auto& ga = pa.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += da(i, i);
      }
      if (pb.requires_grad) {
        auto& gb = pb.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += db(i, i);
      }
      return;
    }
    BroadcastPlan plan(pa.value.shape(), pb.value.shape());
    if (pa.requires_grad) {
      auto& ga = pa.grad_buffer();
      plan.for_each([&](std::size_t i, std::size_t ia, std::size_t ib) { ga[ia] += da(i, ib); });
    }
    if (pb.requires_grad) {
      auto& gb = pb.grad_buffer();
      plan.for_each([&](std::size_t i, std::size_t ia, std::size_t ib) { gb[ib] += db(i, ia); });
    }
  });
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank, 1);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < a.size() ? a[a.size() - 1 - i] : 1;
    const std::size_t db = i < b.size() ? b[b.size() - 1 - i] : 1;
    if (da != db && da != 1 && db != 1) {
      throw ContractViolation("cannot broadcast " + shape_str(a) + " with " + shape_str(b));
    }
    out[rank - 1 - i] = da == 1 ? db : da;
  }
  return out;
}

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  return binary<T>("add", BinaryKind::add, a, b);
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  return binary<T>("sub", BinaryKind::sub, a, b);
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  return binary<T>("mul", BinaryKind::mul, a, b);
}

template <class T>
Var<T> scale(const Var<T>& a, T factor) {
  return unary<T>(
      "scale", a, [factor](T x) { return x * factor; }, [factor](T, T) { return factor; });
}

template <class T>
Var<T> exp(const Var<T>& a) {
  return unary<T>(
      "exp", a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <class T>
Var<T> tanh(const Var<T>& a) {
  return unary<T>(
      "tanh", a, [](T x) { return std::tanh(x); }, [](T, T y) { return T{1} - y * y; });
}

template <class T>
Var<T> sigmoid(const Var<T>& a) {
  return unary<T>(
      "sigmoid", a,
      [](T x) {
        if (x >= 0) return T{1} / (T{1} + std::exp(-x));
        const T e = std::exp(x);
        return e / (T{1} + e);
      },
      [](T, T y) { return y * (T{1} - y); });
}

template <class T>
Var<T> softplus(const Var<T>& a) {
  return unary<T>(
      "softplus", a,
      [](T x) { return x > T{0} ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
      [](T x, T) {
        if (x >= 0) return T{1} / (T{1} + std::exp(-x));
        const T e = std::exp(x);
        return e / (T{1} + e);
      });
}

template <class T>
Var<T> square(const Var<T>& a) {
  return unary<T>(
      "square", a, [](T x) { return x * x; }, [](T x, T) { return T{2} * x; });
}

template <class T>
Var<T> sum(const Var<T>& a) {
  T total{0};
  for (const T v : a.value().data()) total += v;
  return make_op<T>("sum", Tensor<T>::scalar(total), {a}, [](Node<T>& n) {
    Node<T>& p = *n.parents[0];
    if (!p.requires_grad) return;
    const T g = n.grad[0];
    for (auto& v : p.grad_buffer().data()) v += g;
  });
}

template <class T>
Var<T> mean(const Var<T>& a) {
  const std::size_t count = a.value().size();
  if (count == 0) throw ContractViolation("mean of empty tensor");
  return scale(sum(a), T{1} / static_cast<T>(count));
}

template <class T>
Var<T> sum_axis(const Var<T>& a, std::size_t axis) {
  const Shape& s = a.shape();
  if (axis >= s.size()) throw ContractViolation("sum_axis: axis out of range for " + shape_str(s));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t extent = s[axis];

  Shape out_shape;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i != axis) out_shape.push_back(s[i]);
  }
  Tensor<T> out(out_shape);
  const auto& in = a.value();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t k = 0; k < extent; ++k) {
      const std::size_t base = (o * extent + k) * inner;
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += in[base + i];
    }
  }
  return make_op<T>("sum_axis", std::move(out), {a}, [outer, inner, extent](Node<T>& n) {
    Node<T>& p = *n.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t k = 0; k < extent; ++k) {
        const std::size_t base = (o * extent + k) * inner;
        for (std::size_t i = 0; i < inner; ++i) g[base + i] += n.grad[o * inner + i];
      }
    }
  });
}

template <class T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.dim(1) != b.dim(0)) {
    throw ContractViolation("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                            shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor<T> out(Shape{m, n});
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const T x = av[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += x * bv[p * n + j];
    }
  }
  return make_op<T>("matmul", std::move(out), {a, b}, [m, k, n](Node<T>& node) {
    Node<T>& pa = *node.parents[0];
    Node<T>& pb = *node.parents[1];
    const auto& g = node.grad;
    if (pa.requires_grad) {
      auto& ga = pa.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          T acc{0};
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * pb.value[p * n + j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (pb.requires_grad) {
      auto& gb = pb.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const T x = pa.value[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += x * g[i * n + j];
        }
      }
    }
  });
}

template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& weight) {
  const Shape& xs = x.shape();
  if (weight.shape().size() != 2 || xs.empty() || xs.back() != weight.dim(1)) {
    throw ContractViolation("linear: input " + shape_str(xs) + " incompatible with weight " +
                            shape_str(weight.shape()));
  }
  const std::size_t k = weight.dim(1), m = weight.dim(0);
  const std::size_t rows = x.value().size() / k;
  Shape out_shape = xs;
  out_shape.back() = m;
  Tensor<T> out(out_shape);
  const auto& xv = x.value();
  const auto& wv = weight.value();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = &xv[r * k];
    for (std::size_t j = 0; j < m; ++j) {
      const T* wr = &wv[j * k];
      T acc{0};
      for (std::size_t p = 0; p < k; ++p) acc += xr[p] * wr[p];
      out[r * m + j] = acc;
    }
  }
  return make_op<T>("linear", std::move(out), {x, weight}, [rows, k, m](Node<T>& n) {
    Node<T>& px = *n.parents[0];
    Node<T>& pw = *n.parents[1];
    const auto& g = n.grad;
    if (px.requires_grad) {
      auto& gx = px.grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < m; ++j) {
          const T gr = g[r * m + j];
          if (gr == T{0}) continue;
          const T* wr = &pw.value[j * k];
          for (std::size_t p = 0; p < k; ++p) gx[r * k + p] += gr * wr[p];
        }
      }
    }
    if (pw.requires_grad) {
      auto& gw = pw.grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        const T* xr = &px.value[r * k];
        for (std::size_t j = 0; j < m; ++j) {
          const T gr = g[r * m + j];
          if (gr == T{0}) continue;
          T* wr = &gw[j * k];
          for (std::size_t p = 0; p < k; ++p) wr[p] += gr * xr[p];
        }
      }
    }
  });
}

template <class T>
Var<T> reshape(const Var<T>& a, Shape shape) {
  Tensor<T> out = a.value().reshaped(std::move(shape));
  return make_op<T>("reshape", std::move(out), {a}, [](Node<T>& n) {
    Node<T>& p = *n.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
  });
}

template <class T>
Var<T> broadcast_to(const Var<T>& a, const Shape& shape) {
  if (broadcast_shape(a.shape(), shape) != shape) {
    throw ContractViolation("broadcast_to: " + shape_str(a.shape()) + " does not expand to " +
                            shape_str(shape));
  }
  Tensor<T> out(shape);
  BroadcastPlan plan(a.shape(), shape);
  const auto& av = a.value();
  plan.for_each([&](std::size_t i, std::size_t ia, std::size_t) { out[i] = av[ia]; });
  return make_op<T>("broadcast_to", std::move(out), {a}, [](Node<T>& n) {
    Node<T>& p = *n.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    BroadcastPlan plan(p.value.shape(), n.value.shape());
    plan.for_each([&](std::size_t i, std::size_t ia, std::size_t) { g[ia] += n.grad[i]; });
  });
}

template <class T>
Var<T> slice(const Var<T>& a, std::size_t axis, std::size_t begin, std::size_t end) {
  const Shape& s = a.shape();
  if (axis >= s.size() || begin >= end || end > s[axis]) {
    throw ContractViolation("slice [" + std::to_string(begin) + "," + std::to_string(end) +
                            ") on axis " + std::to_string(axis) + " of " + shape_str(s));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t extent = s[axis];
  const std::size_t width = end - begin;
  Shape out_shape = s;
  out_shape[axis] = width;
  Tensor<T> out(out_shape);
  const auto& av = a.value();
  for (std::size_t o = 0; o < outer; ++o) {
    const std::size_t src = (o * extent + begin) * inner;
    std::copy_n(&av[src], width * inner, &out[o * width * inner]);
  }
  return make_op<T>("slice", std::move(out), {a}, [=](Node<T>& n) {
    Node<T>& p = *n.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t o = 0; o < outer; ++o) {
      const std::size_t dst = (o * extent + begin) * inner;
      for (std::size_t i = 0; i < width * inner; ++i) g[dst + i] += n.grad[o * width * inner + i];
    }
  });
}

template <class T>
Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ContractViolation("concat of zero tensors");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw ContractViolation("concat: axis out of range for " + shape_str(first));
  std::vector<std::size_t> extents;
  std::size_t total = 0;
  for (const auto& p : parts) {
    Shape s = p.shape();
    if (s.size() != first.size()) throw ContractViolation("concat: rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != axis && s[i] != first[i]) {
        throw ContractViolation("concat: " + shape_str(s) + " vs " + shape_str(first));
      }
    }
    extents.push_back(s[axis]);
    total += s[axis];
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
  for (std::size_t i = axis + 1; i < first.size(); ++i) inner *= first[i];
  Shape out_shape = first;
  out_shape[axis] = total;
  Tensor<T> out(out_shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& pv = parts[k].value();
    const std::size_t w = extents[k] * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(&pv[o * w], w, &out[o * total * inner + offset * inner]);
    }
    offset += extents[k];
  }
  return make_op<T>("concat", std::move(out), parts, [=](Node<T>& n) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < n.parents.size(); ++k) {
      Node<T>& p = *n.parents[k];
      const std::size_t w = extents[k] * inner;
      if (p.requires_grad) {
        auto& g = p.grad_buffer();
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t i = 0; i < w; ++i) g[o * w + i] += n.grad[o * total * inner + off * inner + i];
        }
      }
      off += extents[k];
    }
  });
}

#define SSMAMBA_INSTANTIATE_OPS(T)                                                  \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                             \
  template Var<T> sub<T>(const Var<T>&, const Var<T>&);                             \
  template Var<T> mul<T>(const Var<T>&, const Var<T>&);                             \
  template Var<T> scale<T>(const Var<T>&, T);                                       \
  template Var<T> exp<T>(const Var<T>&);                                            \
  template Var<T> tanh<T>(const Var<T>&);                                           \
  template Var<T> sigmoid<T>(const Var<T>&);                                        \
  template Var<T> softplus<T>(const Var<T>&);                                       \
  template Var<T> square<T>(const Var<T>&);                                         \
  template Var<T> sum<T>(const Var<T>&);                                            \
  template Var<T> mean<T>(const Var<T>&);                                           \
  template Var<T> sum_axis<T>(const Var<T>&, std::size_t);                          \
  template Var<T> matmul<T>(const Var<T>&, const Var<T>&);                          \
  template Var<T> linear<T>(const Var<T>&, const Var<T>&);                          \
  template Var<T> reshape<T>(const Var<T>&, Shape);                                 \
  template Var<T> broadcast_to<T>(const Var<T>&, const Shape&);                     \
  template Var<T> slice<T>(const Var<T>&, std::size_t, std::size_t, std::size_t);   \
  template Var<T> concat<T>(const std::vector<Var<T>>&, std::size_t);

SSMAMBA_INSTANTIATE_OPS(float)
SSMAMBA_INSTANTIATE_OPS(double)

}  // namespace ssmamba::num
