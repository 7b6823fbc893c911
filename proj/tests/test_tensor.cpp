#include <doctest.h>

#include "stgconvnet/error.hpp"
#include "stgconvnet/rng.hpp"
#include "stgconvnet/tensor.hpp"
#include "support.hpp"

using namespace stg;

TEST_CASE("zeros fills and sizes") {
  CHECK(zeros({1, 1, 1, 1}).values() == std::vector<double>{0.0});
  const Tensor z = zeros({2, 2, 2, 1});
  CHECK(z.size() == 8);
  for (double v : z.data()) CHECK(v == 0.0);
  CHECK(zeros({3, 4, 5, 3}).size() == 180);
  CHECK_THROWS_AS(zeros({0, 1, 1, 1}), ShapeError);
  CHECK_THROWS_AS(Tensor(Dims{1, 1, 1, 1}, {1.0, 2.0}), ShapeError);
}

TEST_CASE("row-major offsets") {
  const Dims d{2, 3, 4, 5};
  CHECK(d.offset(0, 0, 0, 1) == 1);
  CHECK(d.offset(0, 0, 1, 0) == 5);
  CHECK(d.offset(0, 1, 0, 0) == 20);
  CHECK(d.offset(1, 0, 0, 0) == 60);
  CHECK(d.offset(1, 2, 3, 4) == 119);
}

TEST_CASE("randn is deterministic and has unit moments") {
  const Dims d{8, 8, 8, 1};
  CHECK(randn(d, 1.0, 7) == randn(d, 1.0, 7));
  CHECK(randn(d, 1.0, 7) != randn(d, 1.0, 8));
  CHECK_THROWS_AS(randn(d, 0.0, 1), ParameterError);
  CHECK_THROWS_AS(randn(d, -1.0, 1), ParameterError);

  // ~10^6 pooled draws.
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (std::uint64_t seed = 0; seed < 1954; ++seed) {
    for (double v : testing::vals(randn(d, 1.0, seed))) {
      sum += v;
      sq += v * v;
      ++n;
    }
  }
  const double mean = sum / static_cast<double>(n);
  const double var = sq / static_cast<double>(n) - mean * mean;
  CHECK(n >= 1000000);
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("rng streams are addressed by their coordinates") {
  Rng a(1, 2, 3, 4), b(1, 2, 3, 4), c(1, 2, 3, 5);
  const double x = a.normal();
  CHECK(x == b.normal());
  CHECK(x != c.normal());
  Rng u(9);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform_open_low();
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
    CHECK(u.below(7) < 7);
  }
}

TEST_CASE("axpy") {
  const Tensor x(Dims{1, 1, 2, 1}, {1, 2});
  const Tensor y(Dims{1, 1, 2, 1}, {3, 4});
  CHECK(axpy(0.0, x, y) == y);
  CHECK(axpy(1.0, x, zeros(x.dims())) == x);
  CHECK(axpy(2.0, x, y).values() == std::vector<double>{5, 8});
  Tensor z = y;
  axpy_inplace(2.0, x, z);
  CHECK(z.values() == std::vector<double>{5, 8});
  CHECK_THROWS_AS(axpy(1.0, x, zeros({1, 2, 1, 1})), ShapeError);
}

TEST_CASE("dot and sq_norm") {
  const Tensor a(Dims{1, 1, 3, 1}, {1, 2, 3});
  const Tensor b(Dims{1, 1, 3, 1}, {4, 5, 6});
  CHECK(dot(a, b) == 32.0);
  CHECK(dot(a, zeros(a.dims())) == 0.0);
  CHECK(sq_norm(zeros(a.dims())) == 0.0);
  CHECK(sq_norm(Tensor(Dims{1, 1, 2, 1}, {3, 4})) == 25.0);
  CHECK(norm(Tensor(Dims{1, 1, 2, 1}, {3, 4})) == 5.0);

  testing::Draws r(3);
  const Tensor x = r.tensor({3, 4, 5, 2}, 2.0);
  double oracle = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) oracle += x[i] * x[i];
  CHECK(dot(x, x) == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(sq_norm(x) == dot(x, x));
}

TEST_CASE("scaled and subtract") {
  const Tensor a(Dims{1, 1, 2, 1}, {1, -2});
  CHECK(scaled(a, 3.0).values() == std::vector<double>{3, -6});
  CHECK(subtract(a, a) == zeros(a.dims()));
  CHECK(a.all_finite());
  Tensor bad = a;
  bad[0] = std::nan("");
  CHECK_FALSE(bad.all_finite());
}
