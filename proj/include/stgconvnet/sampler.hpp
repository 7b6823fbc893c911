#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "stgconvnet/ebm.hpp"
#include "stgconvnet/mask.hpp"
#include "stgconvnet/rng.hpp"
#include "stgconvnet/tensor.hpp"

namespace stg {

/// Unit temperature is Langevin dynamics; zero drops the noise and leaves
/// plain gradient descent on the energy.
enum class Temperature { unit, zero };

struct SamplerConfig {
  double step_size = 0.3;
  std::size_t num_steps = 20;
  Temperature temperature = Temperature::unit;
  std::uint64_t seed = 0;
  /// Upper bound on chains stepped concurrently.
  std::size_t threads = 1;

  void validate() const;
};

/// Persistent synthesized sequences. `step` counts Langevin steps already
/// taken; together with the seed and the chain index it addresses the noise
/// of the next step, so it is the whole RNG state.
struct ChainState {
  std::vector<Tensor> sequences;
  std::uint64_t step = 0;

  friend bool operator==(const ChainState&, const ChainState&) = default;
};

/// I - (eps^2 / 2) dE/dI (+ eps Z at unit temperature).
/// Throws DivergenceError if the result is not finite.
Tensor langevin_step(const Tensor& input, const ModelConfig& config,
                     const Params& params, double step_size,
                     Temperature temperature, Rng& rng);

/// Same update restricted to occluded sites. The full noise field is drawn
/// either way so the RNG advances identically; visible voxels are copied
/// through untouched.
Tensor masked_langevin_step(const Tensor& input, const OcclusionMask& mask,
                            const ModelConfig& config, const Params& params,
                            double step_size, Temperature temperature,
                            Rng& rng);

/// Advances one sequence by `num_steps` steps drawing noise from
/// Rng(seed, domain, index, first_step + j). A null mask updates every voxel.
Tensor advance(Tensor sequence, const OcclusionMask* mask,
               const ModelConfig& config, const Params& params,
               const SamplerConfig& sampler, std::uint64_t domain,
               std::uint64_t index, std::uint64_t first_step);

/// Advances every chain `sampler.num_steps` steps; chains run concurrently.
ChainState run_chain(ChainState state, const ModelConfig& config,
                     const Params& params, const SamplerConfig& sampler);

/// M chains initialised from the reference distribution, one seed each.
ChainState init_chains(const ModelConfig& config, std::size_t count,
                       std::uint64_t seed);

}  // namespace stg
