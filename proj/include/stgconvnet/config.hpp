#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stgconvnet/ebm.hpp"
#include "stgconvnet/learner.hpp"
#include "stgconvnet/recovery.hpp"
#include "stgconvnet/stnet.hpp"

namespace stg {

/// Everything a CLI run needs, parsed from a sectioned key = value file:
///
///   [network]   input = TxHxWxC (optional; taken from the data otherwise)
///               layer = conv <filters> kernel=TxHxW stride=TxHxW
///               layer = spatial_full <filters> kernel=T stride=T
///               layer = full <filters>
///   [model]     reference = gaussian|uniform, sigma
///   [sampler]   step_size, steps, temperature = unit|zero
///   [trainer]   iterations, chains, learning_rate, layer_rate_ratio,
///               learning_rates (comma list), decay, layer_schedule,
///               initial_layers, reset_chains_on_layer_add, minibatch,
///               checkpoint_every, threads
///   [recovery]  steps, temperature, mask = salt_pepper|single_region|
///               missing_frames, fraction, block, region
///   [sample]    steps, count
///   [paths]     data (comma list), mask (comma list), output, checkpoint
///   [run]       seed
///
/// Kernel and stride extents are written time first. A single number n means
/// n along every axis the layer type lets the user choose.
struct RunConfig {
  NetworkSpec network;
  bool input_given = false;
  Reference reference;
  TrainConfig train;
  std::size_t recovery_steps = 0;
  Temperature recovery_temperature = Temperature::unit;
  MaskSpec mask;
  bool mask_given = false;
  std::size_t sample_steps = 100;
  std::size_t sample_count = 1;
  std::size_t checkpoint_every = 0;
  std::vector<std::filesystem::path> data;
  std::vector<std::filesystem::path> mask_files;
  std::filesystem::path output = "out";
  std::filesystem::path checkpoint;

  RecoveryConfig recovery() const;
};

/// Parses config text. `source` names the file in error messages.
/// `overrides` are "section.key=value" strings applied after the file.
RunConfig parse_config(const std::string& text, const std::string& source,
                       const std::vector<std::string>& overrides = {});

RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::string>& overrides = {});

/// Parses one `layer = ...` value.
LayerSpec parse_layer(const std::string& value);

/// "AxBxCxD" -> Dims.
Dims parse_dims(const std::string& value);

}  // namespace stg
