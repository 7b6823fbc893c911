#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "stgconvnet/tensor.hpp"

namespace stg {

/// How a layer's filters cover their input.
enum class Connectivity {
  /// Local support in time and space, zero-padded "same" placement.
  convolutional,
  /// Convolutional in time, covering the whole spatial extent.
  spatial_full,
  /// One support covering the entire input volume; output is 1x1x1.
  full,
};

std::string to_string(Connectivity c);
Connectivity parse_connectivity(const std::string& s);

/// Extent along (time, rows, cols).
struct Extent3 {
  std::size_t t = 1;
  std::size_t h = 1;
  std::size_t w = 1;

  friend bool operator==(const Extent3&, const Extent3&) = default;
};

struct LayerSpec {
  std::size_t num_filters = 1;
  Extent3 kernel;
  Extent3 stride;
  Connectivity connectivity = Connectivity::convolutional;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct NetworkSpec {
  Dims input;
  std::vector<LayerSpec> layers;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Placement of a filter along one axis. Output index o reads input indices
/// o * stride + origin + [0, kernel).
struct AxisGeometry {
  std::size_t in = 1;
  std::size_t out = 1;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::ptrdiff_t origin = 0;
};

struct LayerGeometry {
  Dims in;   // c = N_{l-1}
  Dims out;  // c = N_l
  AxisGeometry t, h, w;

  std::size_t in_channels() const { return in.c; }
  std::size_t filters() const { return out.c; }
  std::size_t kernel_volume() const { return t.kernel * h.kernel * w.kernel; }
  std::size_t weight_count() const {
    return kernel_volume() * in_channels() * filters();
  }
};

/// Output length of a zero-padded strided axis: ceil(in / stride).
std::size_t same_padded_extent(std::size_t in, std::size_t stride);

/// A validated network: the spec with every layer's geometry resolved.
/// Spatial-full and full layers get their spatial (and, for full, temporal)
/// kernel extents filled in from the incoming feature map when given as 0.
class Network {
 public:
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }
  const Dims& input_dims() const { return spec_.input; }
  const std::vector<LayerGeometry>& layers() const { return layers_; }
  const LayerGeometry& layer(std::size_t l) const { return layers_[l]; }
  std::size_t depth() const { return layers_.size(); }

 private:
  NetworkSpec spec_;
  std::vector<LayerGeometry> layers_;
};

/// Weights and biases of one layer. Weights are stored as
/// [kt][kh][kw][input channel][filter] so the filter index is contiguous.
struct LayerParams {
  std::vector<double> weights;
  std::vector<double> biases;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// All weights and biases of the network. Also used for gradients.
struct Params {
  std::vector<LayerParams> layers;

  static Params zeros(const Network& net);

  std::size_t count() const;
  bool all_finite() const;

  friend bool operator==(const Params&, const Params&) = default;
};

inline std::size_t weight_index(const LayerGeometry& g, std::size_t a,
                                std::size_t b, std::size_t c, std::size_t i,
                                std::size_t k) {
  return (((a * g.h.kernel + b) * g.w.kernel + c) * g.in_channels() + i) *
             g.filters() +
         k;
}

/// Weights i.i.d. N(0, 0.01^2), biases 0. Deterministic in `seed`.
Params init_params(const Network& net, std::uint64_t seed);

/// Throws ShapeError unless `p` has the layout `net` expects.
void require_compatible(const Network& net, const Params& p);
void require_same_shape(const Params& a, const Params& b, const char* what);

/// y += a * x
void add_scaled(Params& y, double a, const Params& x);
/// y += a * x restricted to layer `l`.
void add_scaled_layer(Params& y, std::size_t l, double a, const Params& x);
double sq_norm(const Params& p);
double norm(const Params& p);

/// Zero-padded strided filtering plus bias, before the ReLU.
Tensor layer_preactivation(const Tensor& input, const LayerGeometry& g,
                           const LayerParams& p);
/// One layer of linear filtering, bias, ReLU and sub-sampling.
Tensor layer_forward(const Tensor& input, const LayerGeometry& g,
                     const LayerParams& p);

inline constexpr std::size_t kAllLayers = std::numeric_limits<std::size_t>::max();

/// On/off state of every ReLU unit, layer by layer.
struct ActivationPattern {
  std::vector<std::vector<std::uint8_t>> bits;

  friend bool operator==(const ActivationPattern&,
                         const ActivationPattern&) = default;
};

/// Cached bottom-up pass. `activations[0]` is the input and
/// `activations[l + 1]` the ReLU output of layer l; `pre[l]` the matching
/// pre-activations. Both reverse passes reuse this.
struct ForwardPass {
  std::vector<Tensor> activations;
  std::vector<Tensor> pre;
  double score = 0.0;

  std::size_t active_layers() const { return pre.size(); }
  ActivationPattern pattern() const;
  /// Smallest |pre-activation| over all units.
  double min_abs_preactivation() const;
};

/// Runs the first `active_layers` layers and sums the top responses.
ForwardPass forward(const Network& net, const Params& params,
                    const Tensor& input, std::size_t active_layers = kAllLayers);

/// Scoring function f(I; theta).
double score(const Network& net, const Params& params, const Tensor& input,
             std::size_t active_layers = kAllLayers);

/// Reverse pass through a cached forward pass. Either output may be null.
/// Layers above the active count receive zero parameter gradient.
void backward(const Network& net, const Params& params, const ForwardPass& pass,
              Tensor* d_input, Params* d_params);

/// df/dI, the reconstruction basis B of the current linear piece.
Tensor grad_input(const Network& net, const Params& params, const Tensor& input,
                  std::size_t active_layers = kAllLayers);

/// df/dtheta for every weight and bias.
Params grad_params(const Network& net, const Params& params,
                   const Tensor& input, std::size_t active_layers = kAllLayers);

/// f(I) = offset + <I, basis> on the linear piece containing I.
struct LinearPiece {
  double offset = 0.0;
  Tensor basis;
};
LinearPiece linear_coefficients(const Network& net, const Params& params,
                                const Tensor& input,
                                std::size_t active_layers = kAllLayers);

}  // namespace stg
