#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stgconvnet/ebm.hpp"
#include "stgconvnet/learner.hpp"
#include "stgconvnet/mask.hpp"
#include "stgconvnet/sampler.hpp"

namespace stg {

enum class MaskKind { salt_pepper, single_region, missing_frames };

std::string to_string(MaskKind k);
MaskKind parse_mask_kind(const std::string& s);

struct MaskSpec {
  MaskKind kind = MaskKind::salt_pepper;
  /// Target occluded fraction (salt_pepper: of each frame's pixels;
  /// missing_frames: of the frames).
  double fraction = 0.5;
  /// Side of each salt-and-pepper block.
  std::size_t block = 7;
  /// Side of the single square region.
  std::size_t region = 60;
};

/// salt_pepper: per frame, b x b blocks dropped at uniform random positions
///   until at least `fraction` of the frame is covered.
/// single_region: one r x r square at a random position, in every frame.
/// missing_frames: round(fraction * T) distinct frames fully occluded.
OcclusionMask make_mask(const MaskSpec& spec, const Dims& dims,
                        std::uint64_t seed);

struct RecoveryConfig {
  TrainConfig train;
  /// Recovery Langevin steps k per iteration; 0 means "same as l".
  std::size_t recovery_steps = 0;
  Temperature recovery_temperature = Temperature::unit;

  std::size_t steps() const {
    return recovery_steps == 0 ? train.langevin_steps : recovery_steps;
  }
};

/// k masked Langevin steps with noise Rng(seed, recovery, index, first_step + j).
/// Visible voxels come back bit-identical.
Tensor recover_step(const Tensor& sequence, const OcclusionMask& mask,
                    const ModelConfig& config, const Params& params,
                    double step_size, std::size_t steps,
                    Temperature temperature, std::uint64_t seed,
                    std::uint64_t index = 0, std::uint64_t first_step = 0);

/// Observed sequence with its occluded voxels reset to 0, the centred mean.
Tensor occlusion_start(const Tensor& observed, const OcclusionMask& mask);

/// Training state for learning from occluded data: the plain training state plus
/// the recovered sequences initialised from the observations.
TrainState init_recovery_state(std::span<const Tensor> observed,
                               std::span<const OcclusionMask> masks,
                               const ModelConfig& config,
                               const RecoveryConfig& cfg);

/// Continues a recovery run to `cfg.train.iterations`.
void continue_recovery(TrainState& state, std::span<const Tensor> observed,
                       std::span<const OcclusionMask> masks,
                       const ModelConfig& config, const RecoveryConfig& cfg,
                       const TrainHooks& hooks = {});

/// Simultaneous learning, synthesis and recovery. Returns the parameters,
/// the synthesized chains and the recovered sequences in one state.
TrainState train_with_recovery(std::span<const Tensor> observed,
                               std::span<const OcclusionMask> masks,
                               const ModelConfig& config,
                               const RecoveryConfig& cfg,
                               const TrainHooks& hooks = {});

/// Removes the masked object from a single video by learning from the
/// visible background and synthesizing the masked region.
Tensor inpaint_background(const Tensor& video, const OcclusionMask& mask,
                          const ModelConfig& config, const RecoveryConfig& cfg);

/// Occluded voxels replaced by the per-channel mean of the visible voxels.
Tensor mean_fill(const Tensor& video, const OcclusionMask& mask);

/// Occluded voxels copied from the temporally nearest frame where the same
/// pixel is visible (earlier frame on ties); pixels never visible fall back
/// to mean_fill.
Tensor temporal_nearest_fill(const Tensor& video, const OcclusionMask& mask);

}  // namespace stg
