#include "stgconvnet/learner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stgconvnet/error.hpp"
#include "stgconvnet/parallel.hpp"

namespace stg {

void TrainConfig::validate(const Network& net) const {
  if (iterations == 0) throw ParameterError("trainer: iterations must be >= 1");
  if (num_chains == 0) throw ParameterError("trainer: chains must be >= 1");
  if (!(step_size > 0.0)) throw ParameterError("sampler: step_size must be positive");
  if (!(learning_rate > 0.0)) {
    throw ParameterError("trainer: learning_rate must be positive");
  }
  if (!(layer_rate_ratio > 0.0)) {
    throw ParameterError("trainer: layer_rate_ratio must be positive");
  }
  if (!layer_learning_rates.empty()) {
    if (layer_learning_rates.size() != net.depth()) {
      throw ParameterError("trainer: learning_rates needs one value per layer (" +
                           std::to_string(net.depth()) + ")");
    }
    for (double r : layer_learning_rates) {
      if (!(r > 0.0)) throw ParameterError("trainer: learning_rates must be positive");
    }
  }
  if (layer_schedule && *layer_schedule == 0) {
    throw ParameterError("trainer: layer_schedule must be >= 1 iteration");
  }
  if (initial_layers == 0) {
    throw ParameterError("trainer: initial_layers must be >= 1");
  }
}

std::vector<double> TrainConfig::rates(const Network& net) const {
  if (!layer_learning_rates.empty()) return layer_learning_rates;
  std::vector<double> r(net.depth());
  double eta = learning_rate;
  for (auto& v : r) {
    v = eta;
    eta *= layer_rate_ratio;
  }
  return r;
}

SamplerConfig TrainConfig::sampler() const {
  SamplerConfig s;
  s.step_size = step_size;
  s.num_steps = langevin_steps;
  s.temperature = temperature;
  s.seed = seed;
  s.threads = threads;
  return s;
}

namespace {

struct Evaluation {
  double f = 0.0;
  Params grad;
};

std::vector<Evaluation> evaluate_all(std::span<const Tensor> inputs,
                                     const Network& net, const Params& params,
                                     std::size_t active_layers,
                                     std::size_t threads) {
  std::vector<Evaluation> out(inputs.size());
  parallel_for(inputs.size(), threads, [&](std::size_t i) {
    const ForwardPass pass = forward(net, params, inputs[i], active_layers);
    out[i].f = pass.score;
    backward(net, params, pass, nullptr, &out[i].grad);
  });
  return out;
}

// Mean of evals[first, last) gradients accumulated in index order.
Params mean_gradient(const Network& net, const std::vector<Evaluation>& evals,
                     std::size_t first, std::size_t last) {
  Params mean = Params::zeros(net);
  for (std::size_t i = first; i < last; ++i) add_scaled(mean, 1.0, evals[i].grad);
  const double inv = 1.0 / static_cast<double>(last - first);
  for (auto& lp : mean.layers) {
    for (double& v : lp.weights) v *= inv;
    for (double& v : lp.biases) v *= inv;
  }
  return mean;
}

std::size_t batch_count(const TrainConfig& cfg, std::size_t observed) {
  if (cfg.minibatch_size == 0 || cfg.minibatch_size >= observed) return 1;
  return (observed + cfg.minibatch_size - 1) / cfg.minibatch_size;
}

void require_observed(std::span<const Tensor> observed, const Network& net) {
  if (observed.empty()) throw InputError("training needs at least one observed sequence");
  for (const auto& o : observed) {
    require_same_dims(o.dims(), net.input_dims(), "observed sequence");
  }
}

}  // namespace

Params mc_gradient(std::span<const Tensor> observed,
                   std::span<const Tensor> synthesized, const Network& net,
                   const Params& params, std::size_t active_layers,
                   std::size_t threads) {
  if (observed.empty() || synthesized.empty()) {
    throw InputError("mc_gradient: observed and synthesized sets must be non-empty");
  }
  const auto obs = evaluate_all(observed, net, params, active_layers, threads);
  const auto syn = evaluate_all(synthesized, net, params, active_layers, threads);
  Params g = mean_gradient(net, obs, 0, obs.size());
  add_scaled(g, -1.0, mean_gradient(net, syn, 0, syn.size()));
  return g;
}

Params sgd_update(Params params, const Params& gradient,
                  std::span<const double> rates) {
  require_same_shape(params, gradient, "sgd_update");
  if (rates.size() > params.layers.size()) {
    throw ShapeError("sgd_update: more learning rates than layers");
  }
  for (std::size_t l = 0; l < rates.size(); ++l) {
    add_scaled_layer(params, l, rates[l], gradient);
  }
  return params;
}

double value_function(std::span<const Tensor> observed,
                      std::span<const Tensor> synthesized,
                      const ModelConfig& config, const Params& params) {
  if (observed.empty() || synthesized.empty()) {
    throw InputError("value_function: observed and synthesized sets must be non-empty");
  }
  double syn = 0.0;
  for (const auto& s : synthesized) syn += energy(s, config, params);
  double obs = 0.0;
  for (const auto& o : observed) obs += energy(o, config, params);
  return syn / static_cast<double>(synthesized.size()) -
         obs / static_cast<double>(observed.size());
}

std::size_t active_layers_at(const TrainConfig& cfg, std::size_t depth,
                             std::size_t t) {
  if (!cfg.layer_schedule) return depth;
  return std::min(depth, cfg.initial_layers + t / *cfg.layer_schedule);
}

TrainState init_train_state(std::span<const Tensor> observed,
                            const ModelConfig& config, const TrainConfig& cfg) {
  const Network& net = config.network;
  cfg.validate(net);
  require_observed(observed, net);
  TrainState state;
  state.params = init_params(net, cfg.seed);
  state.chains =
      init_chains(config, cfg.num_chains * batch_count(cfg, observed.size()),
                  cfg.seed);
  state.active_layers = active_layers_at(cfg, net.depth(), 0);
  return state;
}

void continue_training(TrainState& state, std::span<const Tensor> observed,
                       const ModelConfig& config, const TrainConfig& cfg,
                       const RecoveryPlan* plan, const TrainHooks& hooks) {
  const Network& net = config.network;
  cfg.validate(net);
  require_observed(observed, net);
  require_compatible(net, state.params);
  const std::size_t batches = batch_count(cfg, observed.size());
  if (state.chains.sequences.size() != batches * cfg.num_chains) {
    throw InputError("training state holds " +
                     std::to_string(state.chains.sequences.size()) +
                     " chains, configuration needs " +
                     std::to_string(batches * cfg.num_chains));
  }
  if (plan) {
    if (plan->masks.size() != observed.size()) {
      throw InputError("recovery needs one mask per training sequence");
    }
    for (std::size_t m = 0; m < observed.size(); ++m) {
      plan->masks[m].require_matches(observed[m].dims());
    }
    if (state.recovered.size() != observed.size()) {
      throw InputError("training state holds no recovered sequences");
    }
  }

  const std::vector<double> base_rates = cfg.rates(net);
  const SamplerConfig chain_sampler = cfg.sampler();
  SamplerConfig recovery_sampler = chain_sampler;
  if (plan) {
    recovery_sampler.num_steps = plan->steps;
    recovery_sampler.step_size = plan->step_size;
    recovery_sampler.temperature = plan->temperature;
  }

  while (state.iteration < cfg.iterations) {
    const std::size_t t = state.iteration;
    const std::size_t active = active_layers_at(cfg, net.depth(), t);
    if (active > state.active_layers && cfg.reset_chains_on_layer_add) {
      state.chains.sequences =
          init_chains(config, state.chains.sequences.size(), cfg.seed + t)
              .sequences;
    }
    state.active_layers = active;
    ModelConfig model = config;
    model.active_layers = active;

    // Recover the occluded voxels of every training sequence.
    if (plan) {
      parallel_for(state.recovered.size(), cfg.threads, [&](std::size_t m) {
        state.recovered[m] =
            advance(std::move(state.recovered[m]), &plan->masks[m], model,
                    state.params, recovery_sampler, rng_domain::kRecovery, m,
                    state.recovery_step);
      });
      state.recovery_step += plan->steps;
    }

    // Synthesis: l Langevin steps per persistent chain.
    try {
      state.chains = run_chain(std::move(state.chains), model, state.params,
                               chain_sampler);
    } catch (const DivergenceError& e) {
      throw DivergenceError("iteration " + std::to_string(t + 1) + ": " +
                            e.what());
    }

    std::span<const Tensor> obs_set =
        plan ? std::span<const Tensor>(state.recovered) : observed;
    const auto obs = evaluate_all(obs_set, net, state.params, active, cfg.threads);
    const auto syn = evaluate_all(state.chains.sequences, net, state.params,
                                  active, cfg.threads);

    // H_obs - H_syn, averaged over mini-batches.
    Params grad = Params::zeros(net);
    const std::size_t per_batch =
        batches == 1 ? obs_set.size() : cfg.minibatch_size;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t o_lo = b * per_batch;
      const std::size_t o_hi = std::min(obs_set.size(), o_lo + per_batch);
      const std::size_t s_lo = b * cfg.num_chains;
      Params g = mean_gradient(net, obs, o_lo, o_hi);
      add_scaled(g, -1.0, mean_gradient(net, syn, s_lo, s_lo + cfg.num_chains));
      add_scaled(grad, 1.0 / static_cast<double>(batches), g);
    }

    MonitorRecord rec;
    rec.iteration = t + 1;
    rec.active_layers = active;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      rec.mean_f_obs += obs[i].f;
      rec.value -= energy_from_score(obs[i].f, obs_set[i], model);
    }
    for (std::size_t i = 0; i < syn.size(); ++i) {
      rec.mean_f_syn += syn[i].f;
      rec.mean_energy_syn +=
          energy_from_score(syn[i].f, state.chains.sequences[i], model);
    }
    rec.mean_f_obs /= static_cast<double>(obs.size());
    rec.value /= static_cast<double>(obs.size());
    rec.mean_f_syn /= static_cast<double>(syn.size());
    rec.mean_energy_syn /= static_cast<double>(syn.size());
    rec.value += rec.mean_energy_syn;
    rec.grad_norm = norm(grad);
    if (!std::isfinite(rec.grad_norm)) {
      throw DivergenceError("iteration " + std::to_string(t + 1) +
                            ": gradient H_obs - H_syn is not finite");
    }

    std::vector<double> rates(base_rates.begin(), base_rates.begin() + active);
    if (cfg.decay) {
      for (double& r : rates) r /= static_cast<double>(t + 1);
    }
    state.params = sgd_update(std::move(state.params), grad, rates);
    if (!state.params.all_finite()) {
      throw DivergenceError("iteration " + std::to_string(t + 1) +
                            ": parameters became non-finite");
    }

    state.iteration = t + 1;
    state.log.push_back(rec);
    if (hooks.on_iteration) hooks.on_iteration(rec);
    if (hooks.checkpoint && hooks.checkpoint_every > 0 &&
        state.iteration % hooks.checkpoint_every == 0) {
      hooks.checkpoint(state);
    }
  }
}

TrainState train(std::span<const Tensor> observed, const ModelConfig& config,
                 const TrainConfig& cfg, const TrainHooks& hooks) {
  TrainState state = init_train_state(observed, config, cfg);
  continue_training(state, observed, config, cfg, nullptr, hooks);
  return state;
}

TrainState layerwise_train(std::span<const Tensor> observed,
                           const ModelConfig& config, const TrainConfig& cfg,
                           const TrainHooks& hooks) {
  if (!cfg.layer_schedule) {
    throw ParameterError("layerwise_train needs a layer schedule");
  }
  return train(observed, config, cfg, hooks);
}

}  // namespace stg
