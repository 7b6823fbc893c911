#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include "stgconvnet/cli.hpp"
#include "stgconvnet/mask.hpp"
#include "stgconvnet/videoio.hpp"
#include "support.hpp"

using namespace stg;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the installed binary with stdout captured to a file.
Result run(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  const fs::path capture =
      fs::temp_directory_path() / ("stgconvnet_cli_out_" + std::to_string(counter++));
  const std::string cmd =
      env + " " + STGCONVNET_BIN + " " + args + " > " + capture.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(capture);
  r.out.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  fs::remove(capture);
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Data, a small config and its path.
struct Workspace {
  fs::path dir;
  fs::path config;

  explicit Workspace(const std::string& name) : dir(testing::temp_dir(name)) {
    write_tensor(dir / "video.stgv", testing::toy_video(6, 12, 12));
    config = dir / "run.ini";
    std::ofstream(config) << "[network]\n"
                             "layer = conv 4 kernel=3 stride=1x2x2\n"
                             "layer = conv 2 kernel=2 stride=2\n"
                             "[model]\nsigma = 20\n"
                             "[sampler]\nstep_size = 4\nsteps = 5\n"
                             "[trainer]\niterations = 4\nchains = 2\n"
                             "learning_rate = 1e-5\nlayer_rate_ratio = 0.2\n"
                             "[recovery]\nsteps = 5\n"
                             "[paths]\ndata = "
                          << (dir / "video.stgv").string() << "\n[run]\nseed = 2\n";
  }
  std::string out(const std::string& name) const {
    return " --set paths.output=" + (dir / name).string();
  }
  std::string with(const std::string& cmd) const {
    return cmd + " -q -c " + config.string();
  }
};

}  // namespace

TEST_CASE("eval prints key=value lines") {
  const fs::path dir = testing::temp_dir("cli_eval");
  const Tensor v = testing::toy_video(3, 16, 16);
  write_tensor(dir / "a.stgv", v);
  const Result same = run("eval --ssim " + (dir / "a.stgv").string() + " " + (dir / "a.stgv").string());
  CHECK(same.code == 0);
  CHECK(same.out == "ssim=1.0\n");

  const Result spec = run("eval --spectrum " + (dir / "a.stgv").string() + " --csv " +
                          (dir / "m.csv").string());
  CHECK(spec.code == 0);
  CHECK(spec.out.find("dominant_frequency=") == 0);
  CHECK(slurp(dir / "m.csv").find("metric,value\n") == 0);
}

TEST_CASE("exit codes") {
  const Workspace w("cli_codes");
  CHECK(run("").code == 1);
  CHECK(run("train --no-such-flag").code == 1);
  CHECK(run("eval").code == 1);
  CHECK(run("eval --ssim /nonexistent/a.stgv /nonexistent/b.stgv").code == 2);
  CHECK(run("train -c /nonexistent/run.ini").code == 2);
  CHECK(run(w.with("train") + " --set trainer.chains=zero").code == 1);
  CHECK(run(w.with("train") + " --set paths.data=/nonexistent/video.stgv").code == 2);
  // A vanishing reference width makes the first Langevin step non-finite.
  CHECK(run(w.with("train") + w.out("div") + " --set model.sigma=1e-200").code == 3);

  std::ofstream(w.dir / "junk.stgv") << "not a tensor";
  CHECK(run("eval --spectrum " + (w.dir / "junk.stgv").string()).code == 2);
}

TEST_CASE("train writes its outputs") {
  const Workspace w("cli_train");
  REQUIRE(run(w.with("train") + w.out("o")).code == 0);
  const fs::path o = w.dir / "o";
  CHECK(fs::exists(o / "checkpoint.stgc"));
  CHECK(fs::exists(o / "checkpoint.stgc.means"));
  CHECK(fs::exists(o / "synth_001.stgv"));
  CHECK(fs::exists(o / "synth_000" / "frame_000001.pgm"));
  const std::string log = slurp(o / "monitor.csv");
  CHECK(log.find("iteration,active_layers,mean_f_obs,mean_f_syn,mean_energy_syn,grad_norm,value\n") == 0);
  CHECK(std::count(log.begin(), log.end(), '\n') == 5);

  REQUIRE(run(w.with("sample") + w.out("s") + " --checkpoint " + (o / "checkpoint.stgc").string() +
              " --steps 3 --count 2").code == 0);
  CHECK(read_tensor(w.dir / "s" / "sample_001.stgv").dims() == Dims{6, 12, 12, 1});
}

TEST_CASE("the config can come from the environment") {
  const Workspace w("cli_env");
  CHECK(run("train -q" + w.out("o"), std::string(kConfigEnv) + "=" + w.config.string()).code == 0);
  CHECK(fs::exists(w.dir / "o" / "checkpoint.stgc"));
}

TEST_CASE("thread count and resuming do not change results") {
  const Workspace w("cli_det");
  REQUIRE(run(w.with("train") + w.out("a") + " --threads 1").code == 0);
  REQUIRE(run(w.with("train") + w.out("b") + " --threads 4").code == 0);
  REQUIRE(run(w.with("train") + w.out("h") + " --set trainer.iterations=2").code == 0);
  REQUIRE(run(w.with("train") + w.out("r") + " --resume " + (w.dir / "h" / "checkpoint.stgc").string())
              .code == 0);
  const std::string a = slurp(w.dir / "a" / "checkpoint.stgc");
  CHECK(!a.empty());
  CHECK(a == slurp(w.dir / "b" / "checkpoint.stgc"));
  CHECK(a == slurp(w.dir / "r" / "checkpoint.stgc"));
  CHECK(slurp(w.dir / "a" / "synth_000.stgv") == slurp(w.dir / "b" / "synth_000.stgv"));
  CHECK(slurp(w.dir / "a" / "monitor.csv") == slurp(w.dir / "b" / "monitor.csv"));
}

TEST_CASE("recover with empty masks matches train") {
  const Workspace w("cli_recover");
  write_tensor(w.dir / "empty.stgv", OcclusionMask(Dims{6, 12, 12, 1}).to_tensor());
  REQUIRE(run(w.with("train") + w.out("t")).code == 0);
  REQUIRE(run(w.with("recover") + w.out("r") + " --set paths.mask=" +
              (w.dir / "empty.stgv").string()).code == 0);
  CHECK(slurp(w.dir / "t" / "monitor.csv") == slurp(w.dir / "r" / "monitor.csv"));
  CHECK(slurp(w.dir / "t" / "synth_000.stgv") == slurp(w.dir / "r" / "synth_000.stgv"));
  CHECK(slurp(w.dir / "t" / "synth_001.stgv") == slurp(w.dir / "r" / "synth_001.stgv"));
  CHECK(fs::exists(w.dir / "r" / "recovered_000.stgv"));
  CHECK(fs::exists(w.dir / "r" / "mask_000.stgv"));

  REQUIRE(run(w.with("recover") + w.out("sp") + " --set recovery.mask=salt_pepper" +
              " --set recovery.block=2").code == 0);
  const Result e = run("eval --recovery " + (w.dir / "video.stgv").string() + " " +
                       (w.dir / "sp" / "recovered_000.stgv").string() + " " +
                       (w.dir / "sp" / "mask_000.stgv").string());
  CHECK(e.code == 0);
  CHECK(e.out.find("recovery_error=") == 0);
  CHECK(e.out.find("mean_fill_error=") != std::string::npos);
  CHECK(e.out.find("nearest_frame_error=") != std::string::npos);
}
