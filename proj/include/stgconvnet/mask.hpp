#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "stgconvnet/tensor.hpp"

namespace stg {

/// Per-(t, h, w) occlusion bits applied to every channel; true = occluded.
class OcclusionMask {
 public:
  OcclusionMask() = default;
  /// All-visible mask over `sites` (the channel extent is ignored).
  explicit OcclusionMask(const Dims& sites);

  /// Site extents, always with c == 1.
  const Dims& dims() const { return dims_; }
  std::size_t size() const { return bits_.size(); }

  bool occluded(std::size_t site) const { return bits_[site] != 0; }
  bool occluded(std::size_t t, std::size_t h, std::size_t w) const {
    return bits_[dims_.offset(t, h, w)] != 0;
  }
  void set(std::size_t t, std::size_t h, std::size_t w, bool value = true) {
    bits_[dims_.offset(t, h, w)] = value ? 1 : 0;
  }
  void set(std::size_t site, bool value) { bits_[site] = value ? 1 : 0; }

  std::size_t occluded_count() const;
  std::size_t visible_count() const { return size() - occluded_count(); }
  bool none() const { return occluded_count() == 0; }

  /// Throws ShapeError unless the mask covers the (t, h, w) extents of `v`.
  void require_matches(const Dims& v) const;

  /// 1.0 / 0.0 tensor with one channel.
  Tensor to_tensor() const;
  /// Reads a one-channel {0, 1} tensor; any other value is a FormatError.
  static OcclusionMask from_tensor(const Tensor& t);

  friend bool operator==(const OcclusionMask&, const OcclusionMask&) = default;

 private:
  Dims dims_{0, 0, 0, 1};
  std::vector<std::uint8_t> bits_;
};

}  // namespace stg
