#include <doctest.h>

#include <cstring>
#include <fstream>

#include "stgconvnet/error.hpp"
#include "stgconvnet/videoio.hpp"
#include "support.hpp"

using namespace stg;
namespace fs = std::filesystem;

namespace {

std::uint32_t le32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

Tensor integer_video(const Dims& d, std::uint64_t seed) {
  testing::Draws r(seed);
  Tensor v(d);
  for (auto& x : v.data()) x = static_cast<double>(r.integer(0, 255));
  return v;
}

ModelConfig small_model(const Dims& in) {
  return ModelConfig(Network(NetworkSpec{
      in, {{3, {3, 3, 3}, {1, 2, 2}, Connectivity::convolutional},
           {2, {2, 2, 2}, {2, 1, 1}, Connectivity::convolutional}}}));
}

}  // namespace

TEST_CASE("tensor container layout") {
  const Tensor t(Dims{3, 2, 2, 1}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11.5});
  const auto bytes = encode_tensor(t);
  CHECK(kTensorHeaderBytes == 28);
  REQUIRE(bytes.size() == 28 + 12 * 8);
  CHECK(std::memcmp(bytes.data(), "STGV", 4) == 0);
  CHECK(le32(bytes, 4) == 1);
  CHECK(le32(bytes, 8) == 4);
  CHECK(le32(bytes, 12) == 3);
  CHECK(le32(bytes, 16) == 2);
  CHECK(le32(bytes, 20) == 2);
  CHECK(le32(bytes, 24) == 1);
  double last = 0;
  std::memcpy(&last, bytes.data() + 28 + 11 * 8, 8);
  CHECK(last == 11.5);
}

TEST_CASE("tensor round trip is bit-exact") {
  testing::Draws r(1);
  Tensor t = r.tensor({4, 5, 3, 3}, 1e3);
  t[0] = -0.0;
  t[1] = 5e-324;
  CHECK(decode_tensor(encode_tensor(t)) == t);
  CHECK(std::signbit(decode_tensor(encode_tensor(t))[0]));
  const fs::path dir = testing::temp_dir("videoio_rt");
  write_tensor(dir / "a.stgv", t);
  CHECK(read_tensor(dir / "a.stgv") == t);
  CHECK_FALSE(fs::exists(dir / "a.stgv.tmp"));
}

TEST_CASE("tensor format errors") {
  const auto good = encode_tensor(Tensor(Dims{1, 1, 2, 1}, {1, 2}));
  auto bad = good;
  bad[0] = 'X';
  CHECK_THROWS_WITH_AS(decode_tensor(bad), doctest::Contains("byte 0"), FormatError);
  bad = good;
  bad[4] = 2;
  CHECK_THROWS_WITH_AS(decode_tensor(bad), doctest::Contains("version"), FormatError);
  bad = good;
  bad[8] = 3;
  CHECK_THROWS_AS(decode_tensor(bad), FormatError);
  bad = good;
  bad.pop_back();
  CHECK_THROWS_WITH_AS(decode_tensor(bad), doctest::Contains("truncated"), FormatError);
  bad = good;
  bad.push_back(0);
  CHECK_THROWS_AS(decode_tensor(bad), FormatError);
  CHECK_THROWS_AS(decode_tensor({}), FormatError);
  CHECK_THROWS_AS(read_tensor("/nonexistent/x.stgv"), IoError);
}

TEST_CASE("frame round trip") {
  const fs::path dir = testing::temp_dir("videoio_frames");
  for (std::size_t c : {1u, 3u}) {
    const Tensor v = integer_video({3, 5, 4, c}, c);
    write_frames(v, dir / std::to_string(c), {});
    CHECK(read_frames(dir / std::to_string(c)) == v);
    CHECK(load_video(dir / std::to_string(c)) == v);
  }
  CHECK(fs::exists(dir / "1" / "frame_000001.pgm"));
  CHECK(fs::exists(dir / "3" / "frame_000003.ppm"));

  const Tensor small = integer_video({3, 2, 2, 1}, 7);
  write_frames(small, dir / "small", {});
  CHECK(read_frames(dir / "small").dims() == Dims{3, 2, 2, 1});
}

TEST_CASE("write_frames un-centres, clips and rounds") {
  const fs::path dir = testing::temp_dir("videoio_clip");
  const Tensor v(Dims{1, 1, 4, 1}, {200, -105, 0.4, 27.5});
  write_frames(v, dir, PreprocessInfo{{100.0}});
  const Tensor back = read_frames(dir);
  CHECK(back.values() == std::vector<double>{255, 0, 100, 128});
}

TEST_CASE("frame directory errors") {
  const fs::path dir = testing::temp_dir("videoio_gap");
  write_frames(integer_video({3, 2, 2, 1}, 1), dir, {});
  fs::remove(dir / "frame_000002.pgm");
  CHECK_THROWS_WITH_AS(read_frames(dir), doctest::Contains("frame_000002"), IoError);

  const fs::path mixed = testing::temp_dir("videoio_mixed");
  write_frames(integer_video({1, 2, 2, 1}, 1), mixed, {});
  const fs::path other = testing::temp_dir("videoio_other");
  write_frames(integer_video({2, 3, 2, 1}, 1), other, {});
  fs::copy_file(other / "frame_000002.pgm", mixed / "frame_000002.pgm");
  CHECK_THROWS_WITH_AS(read_frames(mixed), doctest::Contains("frame_000002"), IoError);
  CHECK_THROWS_AS(read_frames(testing::temp_dir("videoio_empty")), IoError);
}

TEST_CASE("preprocess") {
  Tensor flat(Dims{2, 2, 2, 1});
  for (auto& v : flat.data()) v = 100;
  const auto [c, info] = preprocess(flat);
  for (double v : c.data()) CHECK(v == 0.0);
  CHECK(info.channel_means == std::vector<double>{100.0});

  const Tensor v = integer_video({4, 3, 5, 3}, 3);
  const auto [centred, means] = preprocess(v);
  CHECK(postprocess(centred, means) == v);
  for (std::size_t ch = 0; ch < 3; ++ch) {
    double s = 0;
    for (std::size_t i = ch; i < centred.size(); i += 3) s += centred[i];
    CHECK(std::abs(s / static_cast<double>(centred.size() / 3)) < 1e-9);
  }
}

TEST_CASE("checkpoint round trip and continuation") {
  const Dims d{4, 6, 6, 1};
  const ModelConfig cfg = small_model(d);
  testing::Draws r(4);
  const std::vector<Tensor> obs{r.tensor(d, 2.0)};
  TrainConfig tc;
  tc.iterations = 5;
  tc.langevin_steps = 3;
  tc.step_size = 0.2;
  tc.num_chains = 2;
  tc.learning_rate = 1e-3;
  tc.seed = 3;
  const TrainState full = train(obs, cfg, tc);

  TrainConfig part = tc;
  part.iterations = 2;
  const TrainState two = train(obs, cfg, part);
  const fs::path dir = testing::temp_dir("videoio_ckpt");
  checkpoint_save(dir / "c.stgc", two);
  TrainState resumed = checkpoint_load(dir / "c.stgc");
  CHECK(resumed == two);
  continue_training(resumed, obs, cfg, tc);
  CHECK(resumed == full);

  TrainState with_recovery = full;
  with_recovery.recovered = obs;
  with_recovery.recovery_step = 77;
  CHECK(decode_checkpoint(encode_checkpoint(with_recovery)) == with_recovery);

  TrainState empty;
  empty.params = Params::zeros(cfg.network);
  CHECK(decode_checkpoint(encode_checkpoint(empty)) == empty);
}

TEST_CASE("checkpoint errors") {
  TrainState s;
  s.params.layers.push_back({{1.0, 2.0}, {3.0}});
  s.chains.sequences.push_back(Tensor(Dims{1, 1, 2, 1}, {4, 5}));
  const auto bytes = encode_checkpoint(s);
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{10}, bytes.size() / 2,
                          bytes.size() - 1}) {
    CHECK_THROWS_AS(decode_checkpoint({bytes.begin(), bytes.begin() + static_cast<long>(cut)}),
                    FormatError);
  }
  auto bad = bytes;
  bad[4] = 9;
  CHECK_THROWS_WITH_AS(decode_checkpoint(bad), doctest::Contains("version"), FormatError);
  bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
  CHECK_THROWS_AS(checkpoint_load("/nonexistent/c.stgc"), IoError);
}
