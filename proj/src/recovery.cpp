#include "stgconvnet/recovery.hpp"

#include <cmath>
#include <numeric>

#include "stgconvnet/error.hpp"
#include "stgconvnet/rng.hpp"

namespace stg {

std::string to_string(MaskKind k) {
  switch (k) {
    case MaskKind::salt_pepper:
      return "salt_pepper";
    case MaskKind::single_region:
      return "single_region";
    case MaskKind::missing_frames:
      return "missing_frames";
  }
  return "?";
}

MaskKind parse_mask_kind(const std::string& s) {
  if (s == "salt_pepper") return MaskKind::salt_pepper;
  if (s == "single_region") return MaskKind::single_region;
  if (s == "missing_frames") return MaskKind::missing_frames;
  throw ParameterError("unknown mask kind '" + s +
                       "' (expected salt_pepper, single_region or missing_frames)");
}

OcclusionMask make_mask(const MaskSpec& spec, const Dims& dims,
                        std::uint64_t seed) {
  OcclusionMask mask(dims);
  const Dims& d = mask.dims();
  Rng rng(seed, rng_domain::kMask, 0, 0);

  switch (spec.kind) {
    case MaskKind::salt_pepper: {
      if (!(spec.fraction > 0.0 && spec.fraction <= 1.0)) {
        throw ParameterError("salt_pepper: fraction must be in (0, 1]");
      }
      if (spec.block == 0 || spec.block > d.h || spec.block > d.w) {
        throw ParameterError("salt_pepper: block " + std::to_string(spec.block) +
                             " does not fit a " + std::to_string(d.h) + "x" +
                             std::to_string(d.w) + " frame");
      }
      const std::size_t frame = d.h * d.w;
      const auto target = static_cast<std::size_t>(
          std::ceil(spec.fraction * static_cast<double>(frame) - 1e-9));
      const std::size_t rows = d.h - spec.block + 1;
      const std::size_t cols = d.w - spec.block + 1;
      // Generous bound; a full-coverage target needs every corner hit once.
      const std::size_t max_draws = 1000 * frame * rows * cols + 1000;
      for (std::size_t t = 0; t < d.t; ++t) {
        std::size_t covered = 0;
        std::size_t draws = 0;
        while (covered < target) {
          if (++draws > max_draws) {
            throw ParameterError("salt_pepper: coverage target not reachable");
          }
          const std::size_t r0 = rng.below(rows);
          const std::size_t c0 = rng.below(cols);
          for (std::size_t r = r0; r < r0 + spec.block; ++r) {
            for (std::size_t c = c0; c < c0 + spec.block; ++c) {
              if (!mask.occluded(t, r, c)) {
                mask.set(t, r, c);
                ++covered;
              }
            }
          }
        }
      }
      break;
    }
    case MaskKind::single_region: {
      if (spec.region == 0 || spec.region > d.h || spec.region > d.w) {
        throw ParameterError("single_region: region " +
                             std::to_string(spec.region) + " does not fit a " +
                             std::to_string(d.h) + "x" + std::to_string(d.w) +
                             " frame");
      }
      const std::size_t r0 = rng.below(d.h - spec.region + 1);
      const std::size_t c0 = rng.below(d.w - spec.region + 1);
      for (std::size_t t = 0; t < d.t; ++t) {
        for (std::size_t r = r0; r < r0 + spec.region; ++r) {
          for (std::size_t c = c0; c < c0 + spec.region; ++c) mask.set(t, r, c);
        }
      }
      break;
    }
    case MaskKind::missing_frames: {
      if (!(spec.fraction > 0.0 && spec.fraction <= 1.0)) {
        throw ParameterError("missing_frames: fraction must be in (0, 1]");
      }
      const auto count = static_cast<std::size_t>(
          std::llround(spec.fraction * static_cast<double>(d.t)));
      if (count == 0) {
        throw ParameterError("missing_frames: fraction rounds to zero frames");
      }
      std::vector<std::size_t> frames(d.t);
      std::iota(frames.begin(), frames.end(), std::size_t{0});
      // Partial Fisher-Yates shuffle.
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + rng.below(d.t - i);
        std::swap(frames[i], frames[j]);
      }
      for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t r = 0; r < d.h; ++r) {
          for (std::size_t c = 0; c < d.w; ++c) mask.set(frames[i], r, c);
        }
      }
      break;
    }
  }
  return mask;
}

Tensor recover_step(const Tensor& sequence, const OcclusionMask& mask,
                    const ModelConfig& config, const Params& params,
                    double step_size, std::size_t steps,
                    Temperature temperature, std::uint64_t seed,
                    std::uint64_t index, std::uint64_t first_step) {
  mask.require_matches(sequence.dims());
  SamplerConfig s;
  s.step_size = step_size;
  s.num_steps = steps;
  s.temperature = temperature;
  s.seed = seed;
  return advance(sequence, &mask, config, params, s, rng_domain::kRecovery,
                 index, first_step);
}

Tensor occlusion_start(const Tensor& observed, const OcclusionMask& mask) {
  mask.require_matches(observed.dims());
  Tensor out = observed;
  const std::size_t channels = observed.dims().c;
  for (std::size_t site = 0; site < mask.size(); ++site) {
    if (!mask.occluded(site)) continue;
    for (std::size_t ch = 0; ch < channels; ++ch) out[site * channels + ch] = 0.0;
  }
  return out;
}

namespace {

void require_masks(std::span<const Tensor> observed,
                   std::span<const OcclusionMask> masks) {
  if (masks.size() != observed.size()) {
    throw InputError("recovery needs one mask per training sequence (" +
                     std::to_string(observed.size()) + " sequences, " +
                     std::to_string(masks.size()) + " masks)");
  }
  for (std::size_t m = 0; m < masks.size(); ++m) {
    masks[m].require_matches(observed[m].dims());
    if (masks[m].visible_count() == 0) {
      throw InputError("mask " + std::to_string(m + 1) +
                       " occludes every voxel; nothing to learn from");
    }
  }
}

RecoveryPlan plan_for(std::span<const OcclusionMask> masks,
                      const RecoveryConfig& cfg) {
  RecoveryPlan plan;
  plan.masks = masks;
  plan.steps = cfg.steps();
  plan.step_size = cfg.train.step_size;
  plan.temperature = cfg.recovery_temperature;
  return plan;
}

}  // namespace

TrainState init_recovery_state(std::span<const Tensor> observed,
                               std::span<const OcclusionMask> masks,
                               const ModelConfig& config,
                               const RecoveryConfig& cfg) {
  require_masks(observed, masks);
  TrainState state = init_train_state(observed, config, cfg.train);
  state.recovered.reserve(observed.size());
  for (std::size_t m = 0; m < observed.size(); ++m) {
    state.recovered.push_back(occlusion_start(observed[m], masks[m]));
  }
  return state;
}

void continue_recovery(TrainState& state, std::span<const Tensor> observed,
                       std::span<const OcclusionMask> masks,
                       const ModelConfig& config, const RecoveryConfig& cfg,
                       const TrainHooks& hooks) {
  require_masks(observed, masks);
  const RecoveryPlan plan = plan_for(masks, cfg);
  continue_training(state, observed, config, cfg.train, &plan, hooks);
}

TrainState train_with_recovery(std::span<const Tensor> observed,
                               std::span<const OcclusionMask> masks,
                               const ModelConfig& config,
                               const RecoveryConfig& cfg,
                               const TrainHooks& hooks) {
  TrainState state = init_recovery_state(observed, masks, config, cfg);
  continue_recovery(state, observed, masks, config, cfg, hooks);
  return state;
}

Tensor inpaint_background(const Tensor& video, const OcclusionMask& mask,
                          const ModelConfig& config,
                          const RecoveryConfig& cfg) {
  const std::vector<Tensor> data{video};
  const std::vector<OcclusionMask> masks{mask};
  TrainState state = train_with_recovery(data, masks, config, cfg);
  return std::move(state.recovered.front());
}

Tensor mean_fill(const Tensor& video, const OcclusionMask& mask) {
  mask.require_matches(video.dims());
  const std::size_t channels = video.dims().c;
  std::vector<double> sum(channels, 0.0);
  std::size_t visible = 0;
  for (std::size_t site = 0; site < mask.size(); ++site) {
    if (mask.occluded(site)) continue;
    ++visible;
    for (std::size_t ch = 0; ch < channels; ++ch) sum[ch] += video[site * channels + ch];
  }
  if (visible == 0) throw InputError("mean_fill: no visible voxel");
  Tensor out = video;
  for (std::size_t site = 0; site < mask.size(); ++site) {
    if (!mask.occluded(site)) continue;
    for (std::size_t ch = 0; ch < channels; ++ch) {
      out[site * channels + ch] = sum[ch] / static_cast<double>(visible);
    }
  }
  return out;
}

Tensor temporal_nearest_fill(const Tensor& video, const OcclusionMask& mask) {
  mask.require_matches(video.dims());
  const Dims& d = video.dims();
  const Tensor fallback = mean_fill(video, mask);
  Tensor out = video;
  for (std::size_t t = 0; t < d.t; ++t) {
    for (std::size_t h = 0; h < d.h; ++h) {
      for (std::size_t w = 0; w < d.w; ++w) {
        if (!mask.occluded(t, h, w)) continue;
        const Tensor* src = &fallback;
        std::size_t src_t = t;
        for (std::size_t dt = 1; dt < d.t; ++dt) {
          if (dt <= t && !mask.occluded(t - dt, h, w)) {
            src = &video;
            src_t = t - dt;
            break;
          }
          if (t + dt < d.t && !mask.occluded(t + dt, h, w)) {
            src = &video;
            src_t = t + dt;
            break;
          }
        }
        for (std::size_t ch = 0; ch < d.c; ++ch) {
          out.at(t, h, w, ch) = src->at(src_t, h, w, ch);
        }
      }
    }
  }
  return out;
}

}  // namespace stg
