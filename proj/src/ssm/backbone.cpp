#include "ssmamba/ssm/backbone.hpp"

#include <cmath>

#include "ssmamba/errors.hpp"
#include "ssmamba/num/ops.hpp"
#include "ssmamba/num/rng.hpp"

namespace ssmamba::ssm {

using num::ParamLeaf;
using num::Shape;
using num::Tensor;
using num::Var;

void SsmConfig::validate() const {
  if (state_size == 0 || channels == 0 || layers == 0) {
    throw ConfigError("ssm.state_size, ssm.channels and ssm.layers must be positive");
  }
  if (window_hint == 0) throw ConfigError("window length must be positive");
  if (!std::isfinite(e_scale) || !std::isfinite(k_scale)) throw ConfigError("context scales must be finite");
}

template <class T>
void SsmParams<T>::collect(std::vector<ParamLeaf<T>*>& out) {
  out.push_back(&in_proj);
  out.push_back(&in_bias);
  for (auto& layer : layers) layer.collect(out);
  out.push_back(&out_proj);
  out.push_back(&out_bias);
}

template <class T>
SsmParams<T> make_ssm_params(const SsmConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t n = config.state_size, d = config.channels;
  const double fan_in_d = 1.0 / std::sqrt(static_cast<double>(d));
  auto normal = [&](const std::string& name, Shape shape, double stddev) {
    return ParamLeaf<T>(name, num::random_normal<T>(std::move(shape), stddev, num::derive_seed(seed, name)));
  };

  SsmParams<T> p{
      normal("ssm.in_proj", {d, 1}, 1.0),
      normal("ssm.in_bias", {d}, 1.0),
      {},
      ParamLeaf<T>("ssm.out_proj", Tensor<T>({1, d})),
      ParamLeaf<T>("ssm.out_bias", Tensor<T>({1})),
      static_cast<T>(config.e_scale),
      static_cast<T>(config.k_scale),
  };

  const double step = 1.0 / static_cast<double>(config.window_hint);
  const double delta_bias = std::log(std::expm1(step));
  for (std::size_t i = 0; i < config.layers; ++i) {
    const std::string prefix = i == 0 ? "ssm." : "ssm" + std::to_string(i) + ".";
    Tensor<T> a_log({n});
    for (std::size_t k = 0; k < n; ++k) a_log[k] = static_cast<T>(std::log(static_cast<double>(k + 1)));
    p.layers.push_back(SsmLayerParams<T>{
        ParamLeaf<T>(prefix + "A_log", std::move(a_log)),
        normal(prefix + "s_B", {n, d}, fan_in_d),
        normal(prefix + "s_C", {n, d}, fan_in_d),
        normal(prefix + "s_delta", {1, d}, fan_in_d),
        ParamLeaf<T>(prefix + "delta_bias", Tensor<T>({1}, static_cast<T>(delta_bias))),
        ParamLeaf<T>(prefix + "skip", Tensor<T>({d}, T{1})),
    });
  }
  return p;
}

template <class T>
Var<T> transition(const SsmLayerParams<T>& layer) {
  return num::scale(num::exp(layer.a_log.var()), T{-1});
}

template <class T>
Gates<T> compute_gates(const Var<T>& x, const SsmLayerParams<T>& layer) {
  if (x.shape().size() != 3) throw ContractViolation("compute_gates: x must be [B, L, D], got " + num::shape_str(x.shape()));
  const std::size_t batch = x.dim(0), length = x.dim(1);
  Gates<T> g;
  g.b = num::linear(x, layer.s_b.var());
  g.c = num::linear(x, layer.s_c.var());
  auto raw = num::add(num::linear(x, layer.s_delta.var()), layer.delta_bias.var());
  g.delta = num::reshape(num::softplus(raw), {batch, length});
  return g;
}

template <class T>
Discretized<T> discretize(const Var<T>& delta, const Var<T>& a, const Var<T>& b) {
  if (delta.shape().size() != 2 || a.shape().size() != 1 || b.shape().size() != 3 || b.dim(0) != delta.dim(0) ||
      b.dim(1) != delta.dim(1) || b.dim(2) != a.dim(0)) {
    throw ContractViolation("discretize: shapes delta " + num::shape_str(delta.shape()) + ", A " +
                            num::shape_str(a.shape()) + ", B " + num::shape_str(b.shape()));
  }
  if (num::checked_mode()) {
    for (const T v : delta.value().data()) {
      if (!(v > T{0})) throw ContractViolation("discretize: step size must be positive");
    }
  }
  auto d3 = num::reshape(delta, {delta.dim(0), delta.dim(1), 1});
  return {num::exp(num::mul(d3, a)), num::mul(d3, b)};
}

template <class T>
Var<T> inject_context(const Var<T>& b_bar, const Var<T>& e, const Var<T>& k, T e_scale, T k_scale) {
  const Shape& s = b_bar.shape();
  if (s.size() != 3) throw ContractViolation("inject_context: B_bar must be [B, L, N]");
  const std::size_t batch = s[0], length = s[1], n = s[2];
  const bool use_e = e.valid() && e_scale != T{0};
  const bool use_k = k.valid() && k_scale != T{0};
  if (e.valid() && e.shape() != Shape{batch, n}) {
    throw ContractViolation("inject_context: e is " + num::shape_str(e.shape()) + ", expected " +
                            num::shape_str({batch, n}));
  }
  if (k.valid() && k.shape() != s) {
    throw ContractViolation("inject_context: k is " + num::shape_str(k.shape()) + ", expected " + num::shape_str(s));
  }
  if (!use_e && !use_k) return b_bar;

  Tensor<T> out = b_bar.value();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t l = 0; l < length; ++l) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t at = (b * length + l) * n + i;
        T ctx{0};
        if (use_e) ctx += e_scale * e.value()[b * n + i];
        if (use_k) ctx += k_scale * k.value()[at];
        if (ctx != T{0}) out[at] += ctx;
      }
    }
  }

  std::vector<Var<T>> parents{b_bar};
  if (use_e) parents.push_back(e);
  if (use_k) parents.push_back(k);
  return num::make_op<T>("inject_context", std::move(out), parents,
                         [=](num::Node<T>& node) {
                           const auto& g = node.grad;
                           std::size_t next = 0;
                           num::Node<T>& pb = *node.parents[next++];
                           if (pb.requires_grad) pb.accumulate(g);
                           if (use_e) {
                             num::Node<T>& pe = *node.parents[next++];
                             if (pe.requires_grad) {
                               auto& ge = pe.grad_buffer();
                               for (std::size_t b = 0; b < batch; ++b)
                                 for (std::size_t l = 0; l < length; ++l)
                                   for (std::size_t i = 0; i < n; ++i) ge[b * n + i] += e_scale * g[(b * length + l) * n + i];
                             }
                           }
                           if (use_k) {
                             num::Node<T>& pk = *node.parents[next++];
                             if (pk.requires_grad) {
                               auto& gk = pk.grad_buffer();
                               for (std::size_t i = 0; i < g.size(); ++i) gk[i] += k_scale * g[i];
                             }
                           }
                         });
}

template <class T>
ScanResult<T> selective_scan(const Var<T>& a_bar, const Var<T>& b_bar, const Var<T>& c, const Var<T>& x,
                             const ScanState<T>* h0) {
  const Shape& s = a_bar.shape();
  if (s.size() != 3 || b_bar.shape() != s || c.shape() != s || x.shape().size() != 3 || x.dim(0) != s[0] ||
      x.dim(1) != s[1]) {
    throw ContractViolation("selective_scan: shapes A_bar " + num::shape_str(s) + ", B_bar " +
                            num::shape_str(b_bar.shape()) + ", C " + num::shape_str(c.shape()) + ", x " +
                            num::shape_str(x.shape()));
  }
  const std::size_t batch = s[0], length = s[1], n = s[2], d = x.dim(2);
  if (h0 && h0->h.shape() != Shape{batch, d, n}) {
    throw ContractViolation("selective_scan: initial state must be " + num::shape_str({batch, d, n}));
  }

  const auto& av = a_bar.value();
  const auto& bv = b_bar.value();
  const auto& cv = c.value();
  const auto& xv = x.value();
  const bool checked = num::checked_mode();

  // Every intermediate state is kept for the reverse pass: [B, L, D, N].
  const bool record = num::grad_enabled() &&
                      (a_bar.requires_grad() || b_bar.requires_grad() || c.requires_grad() || x.requires_grad());
  auto states = std::make_shared<Tensor<T>>(record ? Shape{batch, length, d, n} : Shape{0});
  Tensor<T> y({batch, length, d});
  Tensor<T> h({batch, d, n});
  if (h0) h = h0->h;

  for (std::size_t b = 0; b < batch; ++b) {
    T* hb = &h[b * d * n];
    for (std::size_t l = 0; l < length; ++l) {
      const std::size_t row = (b * length + l) * n;
      const T* a_row = &av[row];
      const T* b_row = &bv[row];
      const T* c_row = &cv[row];
      for (std::size_t ch = 0; ch < d; ++ch) {
        const T xt = xv[(b * length + l) * d + ch];
        T* hc = hb + ch * n;
        T acc{0};
        for (std::size_t i = 0; i < n; ++i) {
          hc[i] = a_row[i] * hc[i] + b_row[i] * xt;
          acc += c_row[i] * hc[i];
        }
        y[(b * length + l) * d + ch] = acc;
        if (record) std::copy_n(hc, n, &(*states)[((b * length + l) * d + ch) * n]);
      }
      if (checked) {
        for (std::size_t i = 0; i < d * n; ++i) {
          if (!std::isfinite(hb[i])) {
            throw NumericError("selective_scan: non-finite state at batch " + std::to_string(b) + ", position " +
                               std::to_string(l));
          }
        }
      }
    }
  }

  std::shared_ptr<Tensor<T>> initial;
  if (h0) initial = std::make_shared<Tensor<T>>(h0->h);

  ScanResult<T> result;
  result.final_state = ScanState<T>{std::move(h), length + (h0 ? h0->position : 0)};
  result.y = num::make_op<T>(
      "selective_scan", std::move(y), {a_bar, b_bar, c, x}, [=](num::Node<T>& node) {
        num::Node<T>& pa = *node.parents[0];
        num::Node<T>& pb = *node.parents[1];
        num::Node<T>& pc = *node.parents[2];
        num::Node<T>& px = *node.parents[3];
        const auto& gy = node.grad;
        Tensor<T> ga(pa.value.shape()), gb(pb.value.shape()), gc(pc.value.shape()), gx(px.value.shape());
        std::vector<T> dh(d * n);
        const auto& hs = *states;
        for (std::size_t b = 0; b < batch; ++b) {
          std::fill(dh.begin(), dh.end(), T{0});
          for (std::size_t l = length; l-- > 0;) {
            const std::size_t row = (b * length + l) * n;
            for (std::size_t ch = 0; ch < d; ++ch) {
              const std::size_t xi = (b * length + l) * d + ch;
              const T g = gy[xi];
              const T xt = px.value[xi];
              const T* h_cur = &hs[xi * n];
              const T* h_prev = l > 0 ? &hs[((b * length + l - 1) * d + ch) * n]
                                      : (initial ? &(*initial)[(b * d + ch) * n] : nullptr);
              T* dhc = &dh[ch * n];
              T dx{0};
              for (std::size_t i = 0; i < n; ++i) {
                gc[row + i] += g * h_cur[i];
                dhc[i] += g * pc.value[row + i];
                if (h_prev) ga[row + i] += dhc[i] * h_prev[i];
                gb[row + i] += dhc[i] * xt;
                dx += dhc[i] * pb.value[row + i];
                dhc[i] *= pa.value[row + i];
              }
              gx[xi] += dx;
            }
          }
        }
        if (pa.requires_grad) pa.accumulate(ga);
        if (pb.requires_grad) pb.accumulate(gb);
        if (pc.requires_grad) pc.accumulate(gc);
        if (px.requires_grad) px.accumulate(gx);
      });
  return result;
}

template <class T>
Var<T> forward(const Tensor<T>& values, const Var<T>& e, const Var<T>& tev, const SsmParams<T>& params) {
  if (values.rank() != 2) throw ContractViolation("forward: values must be [B, L], got " + num::shape_str(values.shape()));
  const std::size_t batch = values.dim(0), length = values.dim(1);
  Tensor<T> diff({batch, length, 1});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t l = 1; l < length; ++l) diff[b * length + l] = values[b * length + l] - values[b * length + l - 1];
  }
  auto x = num::constant(std::move(diff));
  auto u = num::add(num::linear(x, params.in_proj.var()), params.in_bias.var());
  for (const auto& layer : params.layers) {
    const auto gates = compute_gates(u, layer);
    const auto disc = discretize(gates.delta, transition(layer), gates.b);
    const auto b_ctx = inject_context(disc.b_bar, e, tev, params.e_scale, params.k_scale);
    const auto scan = selective_scan(disc.a_bar, b_ctx, gates.c, u);
    u = num::add(scan.y, num::mul(u, layer.skip.var()));
  }
  auto out = num::add(num::linear(u, params.out_proj.var()), params.out_bias.var());
  return num::add(num::reshape(out, {batch, length}), num::constant(values));
}

#define SSMAMBA_INSTANTIATE_SSM(T)                                                                       \
  template struct SsmParams<T>;                                                                          \
  template SsmParams<T> make_ssm_params<T>(const SsmConfig&, std::uint64_t);                              \
  template Var<T> transition<T>(const SsmLayerParams<T>&);                                               \
  template Gates<T> compute_gates<T>(const Var<T>&, const SsmLayerParams<T>&);                            \
  template Discretized<T> discretize<T>(const Var<T>&, const Var<T>&, const Var<T>&);                     \
  template Var<T> inject_context<T>(const Var<T>&, const Var<T>&, const Var<T>&, T, T);                   \
  template ScanResult<T> selective_scan<T>(const Var<T>&, const Var<T>&, const Var<T>&, const Var<T>&,    \
                                           const ScanState<T>*);                                         \
  template Var<T> forward<T>(const Tensor<T>&, const Var<T>&, const Var<T>&, const SsmParams<T>&);

SSMAMBA_INSTANTIATE_SSM(float)
SSMAMBA_INSTANTIATE_SSM(double)

}  // namespace ssmamba::ssm
