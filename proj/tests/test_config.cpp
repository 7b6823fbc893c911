#include <doctest.h>

#include <fstream>

#include "stgconvnet/config.hpp"
#include "stgconvnet/error.hpp"
#include "support.hpp"

using namespace stg;

namespace {

const char* const kBase = R"(# comment
[network]
input = 8x16x16x1
layer = conv 6 kernel=3x5x5 stride=1x2x2   ; trailing comment
layer = conv 3 kernel=3 stride=2

[model]
sigma = 20

[trainer]
iterations = 10
chains = 2
learning_rate = 1e-5

[paths]
data = a.stgv, b.stgv
output = out/x

[run]
seed = 7
)";

}  // namespace

TEST_CASE("parse_layer") {
  const LayerSpec conv = parse_layer("conv 120 kernel=15x15x15 stride=7x7x7");
  CHECK(conv.num_filters == 120);
  CHECK(conv.kernel == Extent3{15, 15, 15});
  CHECK(conv.stride == Extent3{7, 7, 7});
  CHECK(conv.connectivity == Connectivity::convolutional);

  const LayerSpec defaults = parse_layer("conv 4 kernel=2x3x3");
  CHECK(defaults.kernel == Extent3{2, 3, 3});
  CHECK(defaults.stride == Extent3{1, 1, 1});

  const LayerSpec sf = parse_layer("spatial_full 30 kernel=4 stride=2");
  CHECK(sf.connectivity == Connectivity::spatial_full);
  CHECK(sf.kernel.t == 4);
  CHECK(sf.stride.t == 2);

  const LayerSpec full = parse_layer("full 1");
  CHECK(full.connectivity == Connectivity::full);
  CHECK(full.num_filters == 1);

  CHECK_THROWS_AS(parse_layer("conv"), Error);
  CHECK_THROWS_AS(parse_layer("conv 0 kernel=3"), Error);
  CHECK_THROWS_AS(parse_layer("pool 3 kernel=3"), Error);
  CHECK_THROWS_AS(parse_layer("conv 3 kernel=3x3"), Error);
  CHECK_THROWS_AS(parse_layer("full 1 kernel=3"), Error);
  CHECK(parse_dims("70x224x224x3") == Dims{70, 224, 224, 3});
  CHECK_THROWS_AS(parse_dims("70x224"), Error);
}

TEST_CASE("the dynamic texture config") {
  const RunConfig c = load_config(STGCONVNET_SOURCE_DIR "/configs/exp1_dynamic_texture.ini");
  REQUIRE(c.network.layers.size() == 3);
  CHECK(c.network.input == Dims{70, 224, 224, 3});
  CHECK(c.network.layers[0].num_filters == 120);
  CHECK(c.network.layers[0].kernel == Extent3{15, 15, 15});
  CHECK(c.network.layers[1].stride == Extent3{3, 3, 3});
  CHECK(c.network.layers[2].kernel == Extent3{2, 3, 3});
  CHECK(c.network.layers[2].stride == Extent3{1, 2, 2});
  CHECK(c.train.layer_learning_rates == std::vector<double>{1e-3, 1e-4, 1e-5});
  CHECK(c.train.layer_schedule == std::optional<std::size_t>{400});
  CHECK(c.train.iterations == 1200);
  CHECK(c.train.num_chains == 3);
  CHECK(c.train.langevin_steps == 20);
  CHECK(c.reference.sigma == 1.0);
}

TEST_CASE("every shipped config parses") {
  for (const char* name : {"exp1_dynamic_texture", "exp2_temporal_stationary", "exp3_action",
                           "exp4_recovery", "toy"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_config(std::string(STGCONVNET_SOURCE_DIR "/configs/") + name + ".ini"));
  }
  const RunConfig a = load_config(STGCONVNET_SOURCE_DIR "/configs/exp3_action.ini");
  CHECK(a.data.size() == 5);
  CHECK(a.network.layers[1].connectivity == Connectivity::full);
  const RunConfig r = load_config(STGCONVNET_SOURCE_DIR "/configs/exp4_recovery.ini");
  CHECK(r.mask_given);
  CHECK(r.mask.kind == MaskKind::salt_pepper);
  CHECK(r.mask.block == 7);
}

TEST_CASE("values, lists and comments") {
  const RunConfig c = parse_config(kBase, "base.ini");
  CHECK(c.input_given);
  CHECK(c.network.layers[1].kernel == Extent3{3, 3, 3});
  CHECK(c.network.layers[1].stride == Extent3{2, 2, 2});
  CHECK(c.reference.kind == ReferenceKind::gaussian);
  CHECK(c.reference.sigma == 20.0);
  CHECK(c.train.learning_rate == 1e-5);
  CHECK(c.train.seed == 7);
  REQUIRE(c.data.size() == 2);
  CHECK(c.data[1] == "b.stgv");
  CHECK(c.output == "out/x");
  CHECK_FALSE(c.train.layer_schedule.has_value());
}

TEST_CASE("overrides replace file values") {
  const RunConfig c = parse_config(kBase, "base.ini",
                                   {"trainer.iterations=3", "model.sigma=5", "run.seed=11",
                                    "network.layer=conv 2 kernel=3"});
  CHECK(c.train.iterations == 3);
  CHECK(c.reference.sigma == 5.0);
  CHECK(c.train.seed == 11);
  // A layer override replaces the whole stack.
  REQUIRE(c.network.layers.size() == 1);
  CHECK(c.network.layers[0].num_filters == 2);
  CHECK_THROWS_AS(parse_config(kBase, "base.ini", {"trainer.iterations"}), ConfigError);
}

TEST_CASE("errors name the file, line and field") {
  const std::string bad = std::string(kBase) + "[sampler]\nstep_size = fast\n";
  CHECK_THROWS_WITH_AS(parse_config(bad, "bad.ini"),
                       doctest::Contains("bad.ini:22: field 'sampler.step_size'"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[trainer]\nchainz = 2\n", "x.ini"),
                       doctest::Contains("x.ini:2"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("iterations = 2\n", "x.ini"), doctest::Contains("x.ini:1"),
                       ConfigError);
  CHECK_THROWS_AS(parse_config("[trainer\n", "x.ini"), ConfigError);
  CHECK_THROWS_AS(parse_config("[trainer]\niterations = -1\n", "x.ini"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\nreference = laplace\n", "x.ini"), ConfigError);
  CHECK_THROWS_AS(parse_config("[network]\ninput=4x4x4x1\nlayer = conv 2 kernel=0\n", "x.ini"),
                  ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), IoError);
}
