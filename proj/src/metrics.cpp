#include "stgconvnet/metrics.hpp"

#include <cmath>
#include <numbers>

#include "stgconvnet/error.hpp"
#include "stgconvnet/learner.hpp"

namespace stg {

SsimParams SsimParams::for_range(double range, std::size_t window) {
  SsimParams p;
  p.window = window;
  p.dynamic_range = range;
  p.c1 = (0.01 * range) * (0.01 * range);
  p.c2 = (0.03 * range) * (0.03 * range);
  return p;
}

void SsimParams::validate() const {
  if (window < 3 || window % 2 == 0) {
    throw ParameterError("ssim: window must be odd and >= 3");
  }
  if (!(c1 > 0.0) || !(c2 > 0.0)) {
    throw ParameterError("ssim: stabilisers C1 and C2 must be positive");
  }
}

Tensor to_grayscale(const Tensor& video) {
  const Dims& d = video.dims();
  if (d.c == 1) return video;
  if (d.c != 3) {
    throw ShapeError("grayscale conversion needs 1 or 3 channels, got " +
                     std::to_string(d.c));
  }
  Tensor out(Dims{d.t, d.h, d.w, 1});
  for (std::size_t s = 0; s < d.sites(); ++s) {
    out[s] = 0.299 * video[3 * s] + 0.587 * video[3 * s + 1] +
             0.114 * video[3 * s + 2];
  }
  return out;
}

double ssim_frame(std::span<const double> a, std::span<const double> b,
                  std::size_t rows, std::size_t cols, const SsimParams& p) {
  p.validate();
  if (a.size() != rows * cols || b.size() != rows * cols) {
    throw ShapeError("ssim_frame: buffer size does not match frame extents");
  }
  if (rows < p.window || cols < p.window) {
    throw ShapeError("ssim: frame " + std::to_string(rows) + "x" +
                     std::to_string(cols) + " is smaller than the " +
                     std::to_string(p.window) + "-pixel window");
  }
  const std::size_t win = p.window;
  const double n = static_cast<double>(win * win);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r0 = 0; r0 + win <= rows; ++r0) {
    for (std::size_t c0 = 0; c0 + win <= cols; ++c0) {
      double sa = 0, sb = 0;
      for (std::size_t r = r0; r < r0 + win; ++r) {
        for (std::size_t c = c0; c < c0 + win; ++c) {
          sa += a[r * cols + c];
          sb += b[r * cols + c];
        }
      }
      const double mu_a = sa / n;
      const double mu_b = sb / n;
      double vaa = 0, vbb = 0, vab = 0;
      for (std::size_t r = r0; r < r0 + win; ++r) {
        for (std::size_t c = c0; c < c0 + win; ++c) {
          const double da = a[r * cols + c] - mu_a;
          const double db = b[r * cols + c] - mu_b;
          vaa += da * da;
          vbb += db * db;
          vab += da * db;
        }
      }
      vaa /= n;
      vbb /= n;
      vab /= n;
      total += ((2 * mu_a * mu_b + p.c1) * (2 * vab + p.c2)) /
               ((mu_a * mu_a + mu_b * mu_b + p.c1) * (vaa + vbb + p.c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

double ssim(const Tensor& a, const Tensor& b, const SsimParams& p) {
  require_same_dims(a.dims(), b.dims(), "ssim");
  const Tensor ga = to_grayscale(a);
  const Tensor gb = to_grayscale(b);
  const Dims& d = ga.dims();
  const std::size_t frame = d.h * d.w;
  double total = 0.0;
  for (std::size_t t = 0; t < d.t; ++t) {
    total += ssim_frame(ga.data().subspan(t * frame, frame),
                        gb.data().subspan(t * frame, frame), d.h, d.w, p);
  }
  return total / static_cast<double>(d.t);
}

double recovery_error(const Tensor& original, const Tensor& recovered,
                      const OcclusionMask& mask) {
  require_same_dims(original.dims(), recovered.dims(), "recovery_error");
  mask.require_matches(original.dims());
  if (mask.none()) throw InputError("recovery_error: mask occludes no voxel");
  const std::size_t channels = original.dims().c;
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t site = 0; site < mask.size(); ++site) {
    if (!mask.occluded(site)) continue;
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const std::size_t i = site * channels + ch;
      sum += std::abs(original[i] - recovered[i]);
      ++n;
    }
  }
  return sum / static_cast<double>(n);
}

double stat_gap(std::span<const Tensor> observed,
                std::span<const Tensor> synthesized, const Network& net,
                const Params& params, std::size_t active_layers) {
  return norm(mc_gradient(observed, synthesized, net, params, active_layers));
}

std::vector<double> temporal_spectrum(const Tensor& video) {
  const Dims& d = video.dims();
  const std::size_t bins = d.t / 2 + 1;
  std::vector<double> spectrum(bins, 0.0);
  const std::size_t stride = d.h * d.w * d.c;
  for (std::size_t j = 0; j < bins; ++j) {
    for (std::size_t v = 0; v < stride; ++v) {
      double re = 0.0, im = 0.0;
      for (std::size_t t = 0; t < d.t; ++t) {
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(j * t) /
                             static_cast<double>(d.t);
        const double x = video[t * stride + v];
        re += x * std::cos(angle);
        im += x * std::sin(angle);
      }
      spectrum[j] += std::hypot(re, im);
    }
    spectrum[j] /= static_cast<double>(stride);
  }
  return spectrum;
}

std::size_t dominant_temporal_frequency(const Tensor& video) {
  const auto spectrum = temporal_spectrum(video);
  if (spectrum.size() < 2) {
    throw ShapeError("dominant_temporal_frequency needs at least 2 frames");
  }
  std::size_t best = 1;
  for (std::size_t j = 2; j < spectrum.size(); ++j) {
    if (spectrum[j] > spectrum[best]) best = j;
  }
  return best;
}

}  // namespace stg
