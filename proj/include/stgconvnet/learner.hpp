#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "stgconvnet/ebm.hpp"
#include "stgconvnet/mask.hpp"
#include "stgconvnet/sampler.hpp"
#include "stgconvnet/stnet.hpp"

namespace stg {

struct TrainConfig {
  /// Learning iterations T.
  std::size_t iterations = 1;
  /// Langevin steps l between parameter updates.
  std::size_t langevin_steps = 20;
  double step_size = 0.3;
  Temperature temperature = Temperature::unit;
  /// Synthesized chains M~ (per mini-batch when mini-batching).
  std::size_t num_chains = 1;
  /// Base learning rate; layer l (0-based) uses base * layer_rate_ratio^l
  /// unless `layer_learning_rates` is given.
  double learning_rate = 1e-4;
  double layer_rate_ratio = 0.1;
  std::vector<double> layer_learning_rates;
  /// Robbins-Monro style eta_t = eta / t.
  bool decay = false;
  /// Add one layer every this many iterations, starting from
  /// `initial_layers` active layers.
  std::optional<std::size_t> layer_schedule;
  std::size_t initial_layers = 1;
  /// Re-draw the chains from the reference whenever a layer is added.
  bool reset_chains_on_layer_add = false;
  /// Observed sequences per mini-batch; 0 uses all data as one batch.
  std::size_t minibatch_size = 0;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate(const Network& net) const;
  /// Per-layer learning rates, one per network layer.
  std::vector<double> rates(const Network& net) const;
  SamplerConfig sampler() const;
};

/// One row of the training monitor.
struct MonitorRecord {
  std::size_t iteration = 0;
  std::size_t active_layers = 0;
  double mean_f_obs = 0.0;
  double mean_f_syn = 0.0;
  double mean_energy_syn = 0.0;
  /// |H_obs - H_syn|, the norm of the Monte Carlo gradient.
  double grad_norm = 0.0;
  /// Mean synthesized energy minus mean observed energy.
  double value = 0.0;

  friend bool operator==(const MonitorRecord&, const MonitorRecord&) = default;
};

struct TrainState {
  Params params;
  ChainState chains;
  /// Completed iterations.
  std::size_t iteration = 0;
  std::size_t active_layers = 0;
  /// Recovered training sequences (only used when learning from masks).
  std::vector<Tensor> recovered;
  /// Recovery Langevin steps taken so far; addresses recovery noise.
  std::uint64_t recovery_step = 0;
  std::vector<MonitorRecord> log;

  friend bool operator==(const TrainState&, const TrainState&) = default;
};

/// Masked recovery performed at the start of every iteration.
struct RecoveryPlan {
  std::span<const OcclusionMask> masks;
  std::size_t steps = 20;
  double step_size = 0.3;
  Temperature temperature = Temperature::unit;
};

/// Called after an iteration completes; `every` of 0 disables it.
struct TrainHooks {
  std::size_t checkpoint_every = 0;
  std::function<void(const TrainState&)> checkpoint;
  std::function<void(const MonitorRecord&)> on_iteration;
};

/// (1/M) sum dF(I_m)/dtheta - (1/M~) sum dF(I~_m)/dtheta.
Params mc_gradient(std::span<const Tensor> observed,
                   std::span<const Tensor> synthesized, const Network& net,
                   const Params& params, std::size_t active_layers = kAllLayers,
                   std::size_t threads = 1);

/// theta_l += rate_l * g_l for every layer with a rate.
Params sgd_update(Params params, const Params& gradient,
                  std::span<const double> rates);

/// Mean synthesized energy minus mean observed energy.
double value_function(std::span<const Tensor> observed,
                      std::span<const Tensor> synthesized,
                      const ModelConfig& config, const Params& params);

/// Layers active at 0-based iteration `t`.
std::size_t active_layers_at(const TrainConfig& cfg, std::size_t depth,
                             std::size_t t);

/// Steps 1-2 of the learning algorithm: parameters and reference chains.
TrainState init_train_state(std::span<const Tensor> observed,
                            const ModelConfig& config, const TrainConfig& cfg);

/// Runs iterations until `state.iteration == cfg.iterations`. With a plan,
/// `state.recovered` is recovered each iteration and replaces `observed` in
/// the gradient.
void continue_training(TrainState& state, std::span<const Tensor> observed,
                       const ModelConfig& config, const TrainConfig& cfg,
                       const RecoveryPlan* plan = nullptr,
                       const TrainHooks& hooks = {});

/// Learning and sampling by analysis by synthesis.
TrainState train(std::span<const Tensor> observed, const ModelConfig& config,
                 const TrainConfig& cfg, const TrainHooks& hooks = {});

/// As train, growing the network one layer at a time per the schedule.
TrainState layerwise_train(std::span<const Tensor> observed,
                           const ModelConfig& config, const TrainConfig& cfg,
                           const TrainHooks& hooks = {});

}  // namespace stg
