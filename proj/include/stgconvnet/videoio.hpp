#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "stgconvnet/learner.hpp"
#include "stgconvnet/tensor.hpp"

namespace stg {

/// TensorFile layout (all little-endian):
///   "STGV" | u32 version | u32 rank (= 4) | rank x u32 dims (T, H, W, C)
///   | T*H*W*C x f64 payload, row-major [t][h][w][c].
inline constexpr char kTensorMagic[4] = {'S', 'T', 'G', 'V'};
inline constexpr std::uint32_t kTensorVersion = 1;
inline constexpr std::size_t kTensorHeaderBytes = 4 + 4 + 4 + 4 * 4;

/// Checkpoint layout: "STGC" | u32 version | body (see videoio.cpp).
inline constexpr char kCheckpointMagic[4] = {'S', 'T', 'G', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Per-channel means removed by preprocess; intensities live in [0, 255].
struct PreprocessInfo {
  std::vector<double> channel_means;

  friend bool operator==(const PreprocessInfo&, const PreprocessInfo&) = default;
};

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
/// Throws FormatError (with the byte offset) on bad magic, version, rank or
/// truncation.
Tensor decode_tensor(const std::vector<std::uint8_t>& bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

/// Reads frame_000001.{pgm,ppm}, frame_000002, ... as raw [0, 255] values.
/// Binary PGM (P5) gives one channel, binary PPM (P6) three.
Tensor read_frames(const std::filesystem::path& directory);

/// Adds the channel means back, clips to [0, 255], rounds and writes one
/// PGM/PPM per frame. Creates the directory if needed.
void write_frames(const Tensor& tensor, const std::filesystem::path& directory,
                  const PreprocessInfo& info);

/// Loads a .stgv file or a frame directory as raw intensities.
Tensor load_video(const std::filesystem::path& path);

/// Subtracts the per-channel mean over the whole sequence.
std::pair<Tensor, PreprocessInfo> preprocess(const Tensor& raw);
/// Inverse of preprocess (no clipping or rounding).
Tensor postprocess(const Tensor& centered, const PreprocessInfo& info);

/// Writes `bytes` to a sibling temporary file and renames it into place.
void atomic_write(const std::filesystem::path& path,
                  const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> encode_checkpoint(const TrainState& state);
TrainState decode_checkpoint(const std::vector<std::uint8_t>& bytes);
void checkpoint_save(const std::filesystem::path& path, const TrainState& state);
TrainState checkpoint_load(const std::filesystem::path& path);

}  // namespace stg
