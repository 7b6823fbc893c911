#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stgconvnet/mask.hpp"
#include "stgconvnet/stnet.hpp"
#include "stgconvnet/tensor.hpp"

namespace stg {

struct SsimParams {
  /// Side of the square box window; odd and >= 3.
  std::size_t window = 11;
  double dynamic_range = 255.0;
  /// Stabilisers; (0.01 R)^2 and (0.03 R)^2 for R = 255.
  double c1 = 2.55 * 2.55;
  double c2 = 7.65 * 7.65;

  static SsimParams for_range(double range, std::size_t window = 11);
  void validate() const;
};

/// Luma of a 3-channel frame sequence (0.299 R + 0.587 G + 0.114 B);
/// single-channel input is returned unchanged.
Tensor to_grayscale(const Tensor& video);

/// Box-window SSIM of one grayscale frame pair: the mean of the local SSIM
/// over every window position lying fully inside the frame.
double ssim_frame(std::span<const double> a, std::span<const double> b,
                  std::size_t rows, std::size_t cols, const SsimParams& p);

/// Mean over frames of ssim_frame on the grayscale sequences.
double ssim(const Tensor& a, const Tensor& b, const SsimParams& p = {});

/// Mean |original - recovered| over occluded voxels and all channels.
double recovery_error(const Tensor& original, const Tensor& recovered,
                      const OcclusionMask& mask);

/// |H_obs - H_syn|, the flattened norm of the Monte Carlo gradient.
double stat_gap(std::span<const Tensor> observed,
                std::span<const Tensor> synthesized, const Network& net,
                const Params& params, std::size_t active_layers = kAllLayers);

/// Per-voxel temporal DFT magnitudes averaged over all (h, w, c); entry j is
/// frequency bin j for j in [0, T/2].
std::vector<double> temporal_spectrum(const Tensor& video);

/// Index of the largest non-DC bin of temporal_spectrum.
std::size_t dominant_temporal_frequency(const Tensor& video);

}  // namespace stg
