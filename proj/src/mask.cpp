#include "stgconvnet/mask.hpp"

#include <algorithm>

#include "stgconvnet/error.hpp"

namespace stg {

OcclusionMask::OcclusionMask(const Dims& sites)
    : dims_{sites.t, sites.h, sites.w, 1} {
  require_valid(dims_);
  bits_.assign(dims_.sites(), 0);
}

std::size_t OcclusionMask::occluded_count() const {
  return static_cast<std::size_t>(
      std::count_if(bits_.begin(), bits_.end(), [](auto b) { return b != 0; }));
}

void OcclusionMask::require_matches(const Dims& v) const {
  if (v.t != dims_.t || v.h != dims_.h || v.w != dims_.w) {
    throw ShapeError("mask " + to_string(dims_) +
                     " does not cover video " + to_string(v));
  }
}

Tensor OcclusionMask::to_tensor() const {
  Tensor t(dims_);
  for (std::size_t i = 0; i < bits_.size(); ++i) t[i] = bits_[i] ? 1.0 : 0.0;
  return t;
}

OcclusionMask OcclusionMask::from_tensor(const Tensor& t) {
  if (t.dims().c != 1) {
    throw FormatError("mask tensor must have exactly one channel, got " +
                      to_string(t.dims()));
  }
  OcclusionMask m(t.dims());
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == 1.0) {
      m.bits_[i] = 1;
    } else if (t[i] != 0.0) {
      throw FormatError("mask tensor value at element " + std::to_string(i) +
                        " is neither 0 nor 1");
    }
  }
  return m;
}

}  // namespace stg
