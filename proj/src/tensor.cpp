#include "stgconvnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stgconvnet/error.hpp"
#include "stgconvnet/rng.hpp"

namespace stg {

std::string to_string(const Dims& d) {
  std::ostringstream os;
  os << "(" << d.t << "," << d.h << "," << d.w << "," << d.c << ")";
  return os.str();
}

void require_valid(const Dims& dims) {
  if (dims.t == 0 || dims.h == 0 || dims.w == 0 || dims.c == 0) {
    throw ShapeError("invalid tensor shape " + to_string(dims) +
                     ": every extent must be at least 1");
  }
}

void require_same_dims(const Dims& a, const Dims& b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a) +
                     " vs " + to_string(b));
  }
}

Tensor::Tensor(Dims dims) : dims_(dims) {
  require_valid(dims);
  data_.assign(dims.size(), 0.0);
}

Tensor::Tensor(Dims dims, std::vector<double> data)
    : dims_(dims), data_(std::move(data)) {
  require_valid(dims);
  if (data_.size() != dims.size()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + to_string(dims));
  }
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor zeros(const Dims& dims) { return Tensor(dims); }

Tensor randn(const Dims& dims, double sigma, std::uint64_t seed) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("randn: sigma must be positive and finite, got " +
                         std::to_string(sigma));
  }
  Tensor out(dims);
  Rng rng(seed, rng_domain::kTensor, 0, 0);
  for (double& v : out.data()) v = sigma * rng.normal();
  return out;
}

Tensor axpy(double a, const Tensor& x, const Tensor& y) {
  Tensor out = y;
  axpy_inplace(a, x, out);
  return out;
}

void axpy_inplace(double a, const Tensor& x, Tensor& y) {
  require_same_dims(x.dims(), y.dims(), "axpy");
  auto xs = x.data();
  auto ys = y.data();
  for (std::size_t i = 0; i < ys.size(); ++i) ys[i] += a * xs[i];
}

Tensor scaled(const Tensor& x, double a) {
  Tensor out = x;
  for (double& v : out.data()) v *= a;
  return out;
}

Tensor subtract(const Tensor& x, const Tensor& y) { return axpy(-1.0, y, x); }

double dot(const Tensor& x, const Tensor& y) {
  require_same_dims(x.dims(), y.dims(), "dot");
  auto xs = x.data();
  auto ys = y.data();
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) s += xs[i] * ys[i];
  return s;
}

double sq_norm(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v * v;
  return s;
}

double norm(const Tensor& x) { return std::sqrt(sq_norm(x)); }

}  // namespace stg
