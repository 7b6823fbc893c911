#pragma once

#include <cstdint>

#include "stgconvnet/stnet.hpp"
#include "stgconvnet/tensor.hpp"

namespace stg {

enum class ReferenceKind { gaussian, uniform };

/// Reference distribution q(I) that the scoring function tilts.
struct Reference {
  ReferenceKind kind = ReferenceKind::gaussian;
  /// Standard deviation of the Gaussian white-noise reference.
  double sigma = 1.0;
  /// Support of the uniform reference, in centred intensity units.
  double uniform_low = -128.0;
  double uniform_high = 127.0;
};

/// p(I; theta) = exp(f(I; theta)) q(I) / Z(theta).
struct ModelConfig {
  Reference reference;
  Network network;
  /// Number of bottom layers taking part in f; the layer-wise scheme grows it.
  std::size_t active_layers = kAllLayers;

  explicit ModelConfig(Network net, Reference ref = {})
      : reference(ref), network(std::move(net)) {
    validate();
  }

  void validate() const;
};

/// E(I) = -f(I) + |I|^2 / (2 sigma^2) for the Gaussian reference, -f(I) for
/// the uniform one.
double energy(const Tensor& input, const ModelConfig& config,
              const Params& params);

/// Energy assembled from an already computed score.
double energy_from_score(double f, const Tensor& input,
                         const ModelConfig& config);

/// dE/dI: I / sigma^2 - B (Gaussian) or -B (uniform).
Tensor energy_grad(const Tensor& input, const ModelConfig& config,
                   const Params& params);

/// One draw from q. Gaussian delegates to randn; uniform is i.i.d. over the
/// configured support.
Tensor reference_sample(const ModelConfig& config, const Dims& dims,
                        std::uint64_t seed);

}  // namespace stg
