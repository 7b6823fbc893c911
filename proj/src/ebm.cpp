#include "stgconvnet/ebm.hpp"

#include <cmath>

#include "stgconvnet/error.hpp"
#include "stgconvnet/rng.hpp"

namespace stg {

void ModelConfig::validate() const {
  if (reference.kind == ReferenceKind::gaussian &&
      !(reference.sigma > 0.0 && std::isfinite(reference.sigma))) {
    throw ParameterError("model: gaussian reference sigma must be positive");
  }
  if (reference.kind == ReferenceKind::uniform &&
      !(reference.uniform_low < reference.uniform_high)) {
    throw ParameterError("model: uniform reference needs low < high");
  }
}

double energy_from_score(double f, const Tensor& input,
                         const ModelConfig& config) {
  if (config.reference.kind == ReferenceKind::uniform) return -f;
  const double s2 = config.reference.sigma * config.reference.sigma;
  return -f + sq_norm(input) / (2.0 * s2);
}

double energy(const Tensor& input, const ModelConfig& config,
              const Params& params) {
  const double f =
      score(config.network, params, input, config.active_layers);
  return energy_from_score(f, input, config);
}

Tensor energy_grad(const Tensor& input, const ModelConfig& config,
                   const Params& params) {
  Tensor basis =
      grad_input(config.network, params, input, config.active_layers);
  if (config.reference.kind == ReferenceKind::uniform) {
    for (double& v : basis.data()) v = -v;
    return basis;
  }
  const double inv_s2 =
      1.0 / (config.reference.sigma * config.reference.sigma);
  Tensor out(input.dims());
  auto o = out.data();
  auto x = input.data();
  auto b = basis.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * inv_s2 - b[i];
  return out;
}

Tensor reference_sample(const ModelConfig& config, const Dims& dims,
                        std::uint64_t seed) {
  if (config.reference.kind == ReferenceKind::gaussian) {
    return randn(dims, config.reference.sigma, seed);
  }
  Tensor out(dims);
  Rng rng(seed, rng_domain::kReference, 0, 0);
  const double lo = config.reference.uniform_low;
  const double span = config.reference.uniform_high - lo;
  for (double& v : out.data()) v = lo + span * rng.uniform();
  return out;
}

}  // namespace stg
