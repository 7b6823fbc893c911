#include "stgconvnet/stnet.hpp"

#include <algorithm>
#include <cmath>

#include "stgconvnet/error.hpp"
#include "stgconvnet/rng.hpp"

namespace stg {

std::string to_string(Connectivity c) {
  switch (c) {
    case Connectivity::convolutional:
      return "conv";
    case Connectivity::spatial_full:
      return "spatial_full";
    case Connectivity::full:
      return "full";
  }
  return "?";
}

Connectivity parse_connectivity(const std::string& s) {
  if (s == "conv" || s == "convolutional") return Connectivity::convolutional;
  if (s == "spatial_full") return Connectivity::spatial_full;
  if (s == "full") return Connectivity::full;
  throw ParameterError("unknown connectivity '" + s +
                       "' (expected conv, spatial_full or full)");
}

std::size_t same_padded_extent(std::size_t in, std::size_t stride) {
  return (in + stride - 1) / stride;
}

namespace {

AxisGeometry same_axis(std::size_t in, std::size_t kernel, std::size_t stride) {
  AxisGeometry a;
  a.in = in;
  a.kernel = kernel;
  a.stride = stride;
  a.out = same_padded_extent(in, stride);
  // Centred support; even kernels extend one more step forward.
  a.origin = -static_cast<std::ptrdiff_t>((kernel - 1) / 2);
  return a;
}

AxisGeometry full_axis(std::size_t in) {
  AxisGeometry a;
  a.in = in;
  a.kernel = in;
  a.stride = 1;
  a.out = 1;
  a.origin = 0;
  return a;
}

std::size_t resolve_full_extent(std::size_t given, std::size_t in,
                                std::size_t layer, const char* axis) {
  if (given != 0 && given != in) {
    throw ShapeError("layer " + std::to_string(layer + 1) + ": " + axis +
                     " kernel extent " + std::to_string(given) +
                     " must cover the whole input extent " +
                     std::to_string(in));
  }
  return in;
}

}  // namespace

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  require_valid(spec_.input);
  if (spec_.layers.empty()) {
    throw ShapeError("network needs at least one layer");
  }
  Dims in = spec_.input;
  for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
    LayerSpec& ls = spec_.layers[l];
    const std::string where = "layer " + std::to_string(l + 1);
    if (ls.num_filters == 0) throw ShapeError(where + ": num_filters must be >= 1");
    LayerGeometry g;
    g.in = in;
    switch (ls.connectivity) {
      case Connectivity::convolutional:
        if (ls.kernel.t == 0 || ls.kernel.h == 0 || ls.kernel.w == 0)
          throw ShapeError(where + ": kernel extents must be >= 1");
        if (ls.stride.t == 0 || ls.stride.h == 0 || ls.stride.w == 0)
          throw ShapeError(where + ": strides must be >= 1");
        g.t = same_axis(in.t, ls.kernel.t, ls.stride.t);
        g.h = same_axis(in.h, ls.kernel.h, ls.stride.h);
        g.w = same_axis(in.w, ls.kernel.w, ls.stride.w);
        break;
      case Connectivity::spatial_full:
        if (ls.kernel.t == 0) throw ShapeError(where + ": kernel extents must be >= 1");
        if (ls.stride.t == 0) throw ShapeError(where + ": strides must be >= 1");
        ls.kernel.h = resolve_full_extent(ls.kernel.h, in.h, l, "row");
        ls.kernel.w = resolve_full_extent(ls.kernel.w, in.w, l, "column");
        ls.stride.h = ls.stride.w = 1;
        g.t = same_axis(in.t, ls.kernel.t, ls.stride.t);
        g.h = full_axis(in.h);
        g.w = full_axis(in.w);
        break;
      case Connectivity::full:
        ls.kernel.t = resolve_full_extent(ls.kernel.t, in.t, l, "time");
        ls.kernel.h = resolve_full_extent(ls.kernel.h, in.h, l, "row");
        ls.kernel.w = resolve_full_extent(ls.kernel.w, in.w, l, "column");
        ls.stride = Extent3{1, 1, 1};
        g.t = full_axis(in.t);
        g.h = full_axis(in.h);
        g.w = full_axis(in.w);
        break;
    }
    g.out = Dims{g.t.out, g.h.out, g.w.out, ls.num_filters};
    layers_.push_back(g);
    in = g.out;
  }
}

Params Params::zeros(const Network& net) {
  Params p;
  p.layers.reserve(net.depth());
  for (const auto& g : net.layers()) {
    LayerParams lp;
    lp.weights.assign(g.weight_count(), 0.0);
    lp.biases.assign(g.filters(), 0.0);
    p.layers.push_back(std::move(lp));
  }
  return p;
}

std::size_t Params::count() const {
  std::size_t n = 0;
  for (const auto& lp : layers) n += lp.weights.size() + lp.biases.size();
  return n;
}

bool Params::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(layers.begin(), layers.end(), [&](const LayerParams& lp) {
    return std::all_of(lp.weights.begin(), lp.weights.end(), finite) &&
           std::all_of(lp.biases.begin(), lp.biases.end(), finite);
  });
}

Params init_params(const Network& net, std::uint64_t seed) {
  Params p = Params::zeros(net);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    Rng rng(seed, rng_domain::kParams, l, 0);
    for (double& w : p.layers[l].weights) w = 0.01 * rng.normal();
  }
  return p;
}

void require_compatible(const Network& net, const Params& p) {
  if (p.layers.size() != net.depth()) {
    throw ShapeError("parameter set has " + std::to_string(p.layers.size()) +
                     " layers, network has " + std::to_string(net.depth()));
  }
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const auto& g = net.layer(l);
    if (p.layers[l].weights.size() != g.weight_count() ||
        p.layers[l].biases.size() != g.filters()) {
      throw ShapeError("layer " + std::to_string(l + 1) +
                       ": parameter count does not match the architecture");
    }
  }
}

void require_same_shape(const Params& a, const Params& b, const char* what) {
  bool ok = a.layers.size() == b.layers.size();
  for (std::size_t l = 0; ok && l < a.layers.size(); ++l) {
    ok = a.layers[l].weights.size() == b.layers[l].weights.size() &&
         a.layers[l].biases.size() == b.layers[l].biases.size();
  }
  if (!ok) throw ShapeError(std::string(what) + ": parameter shapes differ");
}

void add_scaled_layer(Params& y, std::size_t l, double a, const Params& x) {
  auto& yl = y.layers[l];
  const auto& xl = x.layers[l];
  for (std::size_t i = 0; i < yl.weights.size(); ++i) yl.weights[i] += a * xl.weights[i];
  for (std::size_t i = 0; i < yl.biases.size(); ++i) yl.biases[i] += a * xl.biases[i];
}

void add_scaled(Params& y, double a, const Params& x) {
  require_same_shape(y, x, "add_scaled");
  for (std::size_t l = 0; l < y.layers.size(); ++l) add_scaled_layer(y, l, a, x);
}

double sq_norm(const Params& p) {
  double s = 0.0;
  for (const auto& lp : p.layers) {
    for (double v : lp.weights) s += v * v;
    for (double v : lp.biases) s += v * v;
  }
  return s;
}

double norm(const Params& p) { return std::sqrt(sq_norm(p)); }

namespace {

/// Range of kernel taps [lo, hi) that land inside the input for output o.
struct TapRange {
  std::size_t lo, hi;
  std::ptrdiff_t base;  // input index of tap 0
};

inline TapRange taps(const AxisGeometry& a, std::size_t o) {
  const std::ptrdiff_t base =
      static_cast<std::ptrdiff_t>(o * a.stride) + a.origin;
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -base);
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(
      static_cast<std::ptrdiff_t>(a.kernel),
      static_cast<std::ptrdiff_t>(a.in) - base);
  if (hi <= lo) return {0, 0, base};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi), base};
}

void check_layer_input(const Tensor& input, const LayerGeometry& g,
                       const LayerParams& p) {
  require_same_dims(input.dims(), g.in, "layer input");
  if (p.weights.size() != g.weight_count() || p.biases.size() != g.filters()) {
    throw ShapeError("layer parameters do not match the layer geometry");
  }
}

// Accumulates the reverse pass of one layer given dL/d(pre-activation).
void layer_backward(const Tensor& input, const LayerGeometry& g,
                    const LayerParams& p, const Tensor& d_pre,
                    Tensor* d_input, LayerParams* d_params) {
  const std::size_t C = g.in_channels();
  const std::size_t K = g.filters();
  const std::size_t tap_stride = C * K;
  const Dims& in = g.in;
  const Dims& out = g.out;
  const double* x_data = input.data().data();
  const double* w_data = p.weights.data();
  const double* d_data = d_pre.data().data();
  double* dx_data = d_input ? d_input->data().data() : nullptr;
  double* dw_data = d_params ? d_params->weights.data() : nullptr;

  for (std::size_t ot = 0; ot < out.t; ++ot) {
    const TapRange rt = taps(g.t, ot);
    for (std::size_t oh = 0; oh < out.h; ++oh) {
      const TapRange rh = taps(g.h, oh);
      for (std::size_t ow = 0; ow < out.w; ++ow) {
        const TapRange rw = taps(g.w, ow);
        const double* d = d_data + out.offset(ot, oh, ow);
        bool any = false;
        for (std::size_t k = 0; k < K; ++k) any |= (d[k] != 0.0);
        if (!any) continue;
        if (d_params) {
          for (std::size_t k = 0; k < K; ++k) d_params->biases[k] += d[k];
        }
        for (std::size_t a = rt.lo; a < rt.hi; ++a) {
          const std::size_t it = static_cast<std::size_t>(rt.base) + a;
          for (std::size_t b = rh.lo; b < rh.hi; ++b) {
            const std::size_t ih = static_cast<std::size_t>(rh.base) + b;
            const std::size_t tap_row = (a * g.h.kernel + b) * g.w.kernel;
            for (std::size_t c = rw.lo; c < rw.hi; ++c) {
              const std::size_t iw = static_cast<std::size_t>(rw.base) + c;
              const std::size_t in_off = in.offset(it, ih, iw);
              const std::size_t w_off = (tap_row + c) * tap_stride;
              if (dw_data) {
                const double* x = x_data + in_off;
                double* dw = dw_data + w_off;
                for (std::size_t i = 0; i < C; ++i) {
                  const double xi = x[i];
                  if (xi == 0.0) continue;
                  double* dwk = dw + i * K;
                  for (std::size_t k = 0; k < K; ++k) dwk[k] += xi * d[k];
                }
              }
              if (dx_data) {
                const double* w = w_data + w_off;
                double* dx = dx_data + in_off;
                for (std::size_t i = 0; i < C; ++i) {
                  const double* wk = w + i * K;
                  double s = 0.0;
                  for (std::size_t k = 0; k < K; ++k) s += wk[k] * d[k];
                  dx[i] += s;
                }
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

Tensor layer_preactivation(const Tensor& input, const LayerGeometry& g,
                           const LayerParams& p) {
  check_layer_input(input, g, p);
  const std::size_t C = g.in_channels();
  const std::size_t K = g.filters();
  const std::size_t tap_stride = C * K;
  const Dims& in = g.in;
  const Dims& out = g.out;
  Tensor pre(out);
  const double* x_data = input.data().data();
  const double* w_data = p.weights.data();
  double* o_data = pre.data().data();

  for (std::size_t ot = 0; ot < out.t; ++ot) {
    const TapRange rt = taps(g.t, ot);
    for (std::size_t oh = 0; oh < out.h; ++oh) {
      const TapRange rh = taps(g.h, oh);
      for (std::size_t ow = 0; ow < out.w; ++ow) {
        const TapRange rw = taps(g.w, ow);
        double* o = o_data + out.offset(ot, oh, ow);
        for (std::size_t k = 0; k < K; ++k) o[k] = p.biases[k];
        for (std::size_t a = rt.lo; a < rt.hi; ++a) {
          const std::size_t it = static_cast<std::size_t>(rt.base) + a;
          for (std::size_t b = rh.lo; b < rh.hi; ++b) {
            const std::size_t ih = static_cast<std::size_t>(rh.base) + b;
            const std::size_t tap_row = (a * g.h.kernel + b) * g.w.kernel;
            for (std::size_t c = rw.lo; c < rw.hi; ++c) {
              const std::size_t iw = static_cast<std::size_t>(rw.base) + c;
              const double* x = x_data + in.offset(it, ih, iw);
              const double* w = w_data + (tap_row + c) * tap_stride;
              for (std::size_t i = 0; i < C; ++i) {
                const double xi = x[i];
                if (xi == 0.0) continue;
                const double* wk = w + i * K;
                for (std::size_t k = 0; k < K; ++k) o[k] += xi * wk[k];
              }
            }
          }
        }
      }
    }
  }
  return pre;
}

Tensor layer_forward(const Tensor& input, const LayerGeometry& g,
                     const LayerParams& p) {
  Tensor out = layer_preactivation(input, g, p);
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

ActivationPattern ForwardPass::pattern() const {
  ActivationPattern ap;
  ap.bits.reserve(pre.size());
  for (const auto& layer : pre) {
    std::vector<std::uint8_t> bits(layer.size());
    auto v = layer.data();
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = v[i] > 0.0 ? 1 : 0;
    ap.bits.push_back(std::move(bits));
  }
  return ap;
}

double ForwardPass::min_abs_preactivation() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& layer : pre) {
    for (double v : layer.data()) m = std::min(m, std::abs(v));
  }
  return m;
}

ForwardPass forward(const Network& net, const Params& params,
                    const Tensor& input, std::size_t active_layers) {
  require_same_dims(input.dims(), net.input_dims(), "network input");
  require_compatible(net, params);
  const std::size_t n = std::min(active_layers, net.depth());
  if (n == 0) throw ParameterError("at least one layer must be active");
  ForwardPass pass;
  pass.activations.reserve(n + 1);
  pass.pre.reserve(n);
  pass.activations.push_back(input);
  for (std::size_t l = 0; l < n; ++l) {
    Tensor pre = layer_preactivation(pass.activations.back(), net.layer(l),
                                     params.layers[l]);
    Tensor act = pre;
    for (double& v : act.data()) v = v > 0.0 ? v : 0.0;
    pass.pre.push_back(std::move(pre));
    pass.activations.push_back(std::move(act));
  }
  double f = 0.0;
  for (double v : pass.activations.back().data()) f += v;
  pass.score = f;
  return pass;
}

double score(const Network& net, const Params& params, const Tensor& input,
             std::size_t active_layers) {
  return forward(net, params, input, active_layers).score;
}

void backward(const Network& net, const Params& params, const ForwardPass& pass,
              Tensor* d_input, Params* d_params) {
  const std::size_t n = pass.active_layers();
  if (d_params) *d_params = Params::zeros(net);
  if (d_input) *d_input = Tensor(net.input_dims());
  if (!d_input && !d_params) return;

  // d f / d(activation of the top active layer) is 1 at every unit.
  Tensor upstream(pass.pre[n - 1].dims());
  for (double& v : upstream.data()) v = 1.0;

  for (std::size_t l = n; l-- > 0;) {
    // Through the ReLU: h'(r) = 1(r > 0).
    Tensor d_pre = std::move(upstream);
    {
      auto d = d_pre.data();
      auto pre = pass.pre[l].data();
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (!(pre[i] > 0.0)) d[i] = 0.0;
      }
    }
    const bool need_below = l > 0 || d_input != nullptr;
    Tensor d_below;
    if (need_below) d_below = Tensor(net.layer(l).in);
    layer_backward(pass.activations[l], net.layer(l), params.layers[l], d_pre,
                   need_below ? &d_below : nullptr,
                   d_params ? &d_params->layers[l] : nullptr);
    if (l == 0) {
      if (d_input) *d_input = std::move(d_below);
    } else {
      upstream = std::move(d_below);
    }
  }
}

Tensor grad_input(const Network& net, const Params& params, const Tensor& input,
                  std::size_t active_layers) {
  const ForwardPass pass = forward(net, params, input, active_layers);
  Tensor g;
  backward(net, params, pass, &g, nullptr);
  return g;
}

Params grad_params(const Network& net, const Params& params,
                   const Tensor& input, std::size_t active_layers) {
  const ForwardPass pass = forward(net, params, input, active_layers);
  Params g;
  backward(net, params, pass, nullptr, &g);
  return g;
}

LinearPiece linear_coefficients(const Network& net, const Params& params,
                                const Tensor& input,
                                std::size_t active_layers) {
  const ForwardPass pass = forward(net, params, input, active_layers);
  LinearPiece piece;
  backward(net, params, pass, &piece.basis, nullptr);
  piece.offset = pass.score - dot(input, piece.basis);
  return piece;
}

}  // namespace stg
