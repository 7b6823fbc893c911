// Shared fixtures and independent oracles for the test binaries.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "stgconvnet/ebm.hpp"
#include "stgconvnet/stnet.hpp"
#include "stgconvnet/tensor.hpp"

namespace testing {

using namespace stg;

/// Raw-intensity translating sinusoid, two temporal cycles over 16 frames.
inline Tensor toy_video(std::size_t T = 16, std::size_t H = 32, std::size_t W = 32,
                        double cycles = 2.0) {
  Tensor v(Dims{T, H, W, 1});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) {
        const double phase = 2.0 * static_cast<double>(w) / static_cast<double>(W) +
                             static_cast<double>(h) / static_cast<double>(H) -
                             cycles * static_cast<double>(t) / static_cast<double>(T);
        v.at(t, h, w) = 128.0 + 80.0 * std::sin(2.0 * std::numbers::pi * phase);
      }
  return v;
}

/// Independent uniform/normal draws for fixtures (std::mt19937_64 directly).
struct Draws {
  explicit Draws(std::uint64_t seed) : gen(seed) {}
  double normal(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(gen); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen);
  }
  std::size_t integer(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(gen);
  }
  Tensor tensor(const Dims& d, double sd) {
    Tensor x(d);
    for (auto& v : x.data()) v = normal(sd);
    return x;
  }
  std::mt19937_64 gen;
};

inline Params random_params(const Network& net, Draws& r, double w_sd, double b_sd) {
  Params p = Params::zeros(net);
  for (auto& layer : p.layers) {
    for (auto& w : layer.weights) w = r.normal(w_sd);
    for (auto& b : layer.biases) b = r.normal(b_sd);
  }
  return p;
}

/// Literal per-position evaluation of one layer: zero-padded "same" geometry
/// on convolutional axes (taps centred, even kernels reaching forward), one
/// output covering the whole extent on fully connected axes.
inline Tensor oracle_layer(const Tensor& in, const LayerSpec& spec,
                           const LayerParams& p, bool relu = true) {
  const Dims& d = in.dims();
  const bool full_space = spec.connectivity != Connectivity::convolutional;
  const bool full_time = spec.connectivity == Connectivity::full;
  struct Axis {
    std::size_t k, s, out;
    long origin;
  };
  auto axis = [](std::size_t n, std::size_t k, std::size_t s, bool full) {
    if (full) return Axis{n, 1, 1, 0};
    return Axis{k, s, (n + s - 1) / s, -static_cast<long>((k - 1) / 2)};
  };
  const Axis at = axis(d.t, spec.kernel.t, spec.stride.t, full_time);
  const Axis ah = axis(d.h, spec.kernel.h, spec.stride.h, full_space);
  const Axis aw = axis(d.w, spec.kernel.w, spec.stride.w, full_space);
  const std::size_t K = spec.num_filters;
  Tensor out(Dims{at.out, ah.out, aw.out, K});
  for (std::size_t ot = 0; ot < at.out; ++ot)
    for (std::size_t oh = 0; oh < ah.out; ++oh)
      for (std::size_t ow = 0; ow < aw.out; ++ow)
        for (std::size_t k = 0; k < K; ++k) {
          double r = p.biases[k];
          for (std::size_t a = 0; a < at.k; ++a)
            for (std::size_t b = 0; b < ah.k; ++b)
              for (std::size_t c = 0; c < aw.k; ++c) {
                const long it = static_cast<long>(ot * at.s) + at.origin + static_cast<long>(a);
                const long ih = static_cast<long>(oh * ah.s) + ah.origin + static_cast<long>(b);
                const long iw = static_cast<long>(ow * aw.s) + aw.origin + static_cast<long>(c);
                if (it < 0 || ih < 0 || iw < 0 || it >= static_cast<long>(d.t) ||
                    ih >= static_cast<long>(d.h) || iw >= static_cast<long>(d.w)) {
                  continue;
                }
                for (std::size_t i = 0; i < d.c; ++i) {
                  const std::size_t widx = (((a * ah.k + b) * aw.k + c) * d.c + i) * K + k;
                  r += p.weights[widx] *
                       in.at(static_cast<std::size_t>(it), static_cast<std::size_t>(ih),
                             static_cast<std::size_t>(iw), i);
                }
              }
          out.at(ot, oh, ow, k) = relu ? std::max(0.0, r) : r;
        }
  return out;
}

inline double oracle_score(const Network& net, const Params& params, const Tensor& input) {
  Tensor x = input;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    x = oracle_layer(x, net.spec().layers[l], params.layers[l]);
  }
  double s = 0.0;
  for (double v : x.data()) s += v;
  return s;
}

/// Copy of the values, safe to iterate when `t` is a temporary.
inline std::vector<double> vals(const Tensor& t) { return t.values(); }

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("stgconvnet_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
