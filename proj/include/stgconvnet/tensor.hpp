#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace stg {

/// Extents of a rank-4 array laid out row-major as [t][h][w][c].
struct Dims {
  std::size_t t = 1;
  std::size_t h = 1;
  std::size_t w = 1;
  std::size_t c = 1;

  std::size_t size() const { return t * h * w * c; }
  /// Number of (t, h, w) sites, i.e. size() / c.
  std::size_t sites() const { return t * h * w; }
  std::size_t offset(std::size_t ti, std::size_t hi, std::size_t wi,
                     std::size_t ci = 0) const {
    return ((ti * h + hi) * w + wi) * c + ci;
  }

  friend bool operator==(const Dims&, const Dims&) = default;
};

std::string to_string(const Dims& d);

/// Dense real rank-4 tensor. Used both for image sequences (channels are
/// colours) and feature maps (channels are filters).
class Tensor {
 public:
  Tensor() = default;
  /// Zero-filled tensor. Throws ShapeError if any extent is 0.
  explicit Tensor(Dims dims);
  Tensor(Dims dims, std::vector<double> data);

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t t, std::size_t h, std::size_t w, std::size_t c = 0) {
    return data_[dims_.offset(t, h, w, c)];
  }
  double at(std::size_t t, std::size_t h, std::size_t w,
            std::size_t c = 0) const {
    return data_[dims_.offset(t, h, w, c)];
  }

  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Dims dims_{0, 0, 0, 0};
  std::vector<double> data_;
};

using VideoTensor = Tensor;
using FeatureTensor = Tensor;

/// Throws ShapeError unless every extent is at least 1.
void require_valid(const Dims& dims);
/// Throws ShapeError naming `what` if the dims differ.
void require_same_dims(const Dims& a, const Dims& b, const char* what);

Tensor zeros(const Dims& dims);
/// I.i.d. N(0, sigma^2) entries drawn from Rng(seed, tensor-domain, 0, 0).
Tensor randn(const Dims& dims, double sigma, std::uint64_t seed);
/// a * x + y
Tensor axpy(double a, const Tensor& x, const Tensor& y);
/// y += a * x in place.
void axpy_inplace(double a, const Tensor& x, Tensor& y);
Tensor scaled(const Tensor& x, double a);
Tensor subtract(const Tensor& x, const Tensor& y);
double dot(const Tensor& x, const Tensor& y);
double sq_norm(const Tensor& x);
double norm(const Tensor& x);

}  // namespace stg
