#include "stgconvnet/sampler.hpp"

#include <cmath>
#include <sstream>

#include "stgconvnet/error.hpp"
#include "stgconvnet/parallel.hpp"

namespace stg {

void SamplerConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw ParameterError("sampler: step_size must be positive, got " +
                         std::to_string(step_size));
  }
}

namespace {

[[noreturn]] void diverged(double step_size) {
  std::ostringstream os;
  os << "Langevin step produced non-finite values (step size epsilon = "
     << step_size << ")";
  throw DivergenceError(os.str());
}

Tensor drift_and_noise(const Tensor& input, const ModelConfig& config,
                       const Params& params, double step_size,
                       Temperature temperature, Rng& rng) {
  if (!(step_size > 0.0)) {
    throw ParameterError("langevin_step: step size must be positive");
  }
  const Tensor grad = energy_grad(input, config, params);
  const double half_sq = 0.5 * step_size * step_size;
  Tensor out = input;
  auto o = out.data();
  auto g = grad.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= half_sq * g[i];
  if (temperature == Temperature::unit) {
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += step_size * rng.normal();
  }
  return out;
}

}  // namespace

Tensor langevin_step(const Tensor& input, const ModelConfig& config,
                     const Params& params, double step_size,
                     Temperature temperature, Rng& rng) {
  Tensor out =
      drift_and_noise(input, config, params, step_size, temperature, rng);
  if (!out.all_finite()) diverged(step_size);
  return out;
}

Tensor masked_langevin_step(const Tensor& input, const OcclusionMask& mask,
                            const ModelConfig& config, const Params& params,
                            double step_size, Temperature temperature,
                            Rng& rng) {
  mask.require_matches(input.dims());
  const Tensor full =
      drift_and_noise(input, config, params, step_size, temperature, rng);
  Tensor out = input;
  const std::size_t channels = input.dims().c;
  for (std::size_t site = 0; site < mask.size(); ++site) {
    if (!mask.occluded(site)) continue;
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const std::size_t i = site * channels + ch;
      out[i] = full[i];
    }
  }
  if (!out.all_finite()) diverged(step_size);
  return out;
}

Tensor advance(Tensor sequence, const OcclusionMask* mask,
               const ModelConfig& config, const Params& params,
               const SamplerConfig& sampler, std::uint64_t domain,
               std::uint64_t index, std::uint64_t first_step) {
  sampler.validate();
  if (mask && mask->none()) return sequence;
  for (std::size_t j = 0; j < sampler.num_steps; ++j) {
    Rng rng(sampler.seed, domain, index, first_step + j);
    sequence = mask ? masked_langevin_step(sequence, *mask, config, params,
                                           sampler.step_size,
                                           sampler.temperature, rng)
                    : langevin_step(sequence, config, params,
                                    sampler.step_size, sampler.temperature,
                                    rng);
  }
  return sequence;
}

ChainState run_chain(ChainState state, const ModelConfig& config,
                     const Params& params, const SamplerConfig& sampler) {
  sampler.validate();
  for (const auto& s : state.sequences) {
    require_same_dims(s.dims(), config.network.input_dims(), "chain sequence");
  }
  if (sampler.num_steps == 0) return state;
  parallel_for(state.sequences.size(), sampler.threads, [&](std::size_t m) {
    state.sequences[m] =
        advance(std::move(state.sequences[m]), nullptr, config, params,
                sampler, rng_domain::kChain, m, state.step);
  });
  state.step += sampler.num_steps;
  return state;
}

ChainState init_chains(const ModelConfig& config, std::size_t count,
                       std::uint64_t seed) {
  ChainState state;
  state.sequences.reserve(count);
  for (std::size_t m = 0; m < count; ++m) {
    // Distinct per-chain seeds derived from the master seed.
    Rng derive(seed, rng_domain::kReference, m, 0);
    const std::uint64_t chain_seed =
        static_cast<std::uint64_t>(derive.uniform() * 0x1.0p53);
    state.sequences.push_back(
        reference_sample(config, config.network.input_dims(), chain_seed));
  }
  return state;
}

}  // namespace stg
