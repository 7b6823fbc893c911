#include "stgconvnet/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stgconvnet/config.hpp"
#include "stgconvnet/error.hpp"
#include "stgconvnet/metrics.hpp"
#include "stgconvnet/recovery.hpp"
#include "stgconvnet/videoio.hpp"

namespace stg {
namespace {

namespace fs = std::filesystem;

/// Shortest round-trip text; integral values keep a trailing ".0".
std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, end);
  if (std::isfinite(v) && s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

std::string indexed(const std::string& stem, std::size_t i) {
  std::string n = std::to_string(i);
  if (n.size() < 3) n.insert(0, 3 - n.size(), '0');
  return stem + "_" + n;
}

void write_text(const fs::path& path, const std::string& text) {
  atomic_write(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string monitor_csv(const std::vector<MonitorRecord>& log) {
  std::ostringstream os;
  os << "iteration,active_layers,mean_f_obs,mean_f_syn,mean_energy_syn,"
        "grad_norm,value\n";
  char buf[512];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.iteration, r.active_layers, r.mean_f_obs, r.mean_f_syn,
                  r.mean_energy_syn, r.grad_norm, r.value);
    os << buf;
  }
  return os.str();
}

/// The channel means travel next to the checkpoint so `sample` can map
/// synthesized sequences back to intensities.
fs::path means_path(const fs::path& checkpoint) {
  return fs::path(checkpoint.string() + ".means");
}

void save_means(const fs::path& checkpoint, const PreprocessInfo& info) {
  std::ostringstream os;
  for (double m : info.channel_means) os << format_number(m) << '\n';
  write_text(means_path(checkpoint), os.str());
}

PreprocessInfo load_means(const fs::path& checkpoint, std::size_t channels) {
  PreprocessInfo info;
  std::ifstream in(means_path(checkpoint));
  if (!in) {
    info.channel_means.assign(channels, 0.0);
    return info;
  }
  double m = 0.0;
  while (in >> m) info.channel_means.push_back(m);
  if (info.channel_means.size() != channels) {
    throw FormatError(means_path(checkpoint).string() + ": expected " +
                      std::to_string(channels) + " channel means");
  }
  return info;
}

struct Dataset {
  std::vector<Tensor> centered;
  std::vector<PreprocessInfo> infos;
  /// Means used for outputs not tied to one observed sequence.
  PreprocessInfo pooled;
};

Dataset load_data(const std::vector<fs::path>& paths) {
  if (paths.empty()) throw ConfigError("field 'paths.data': no training data given");
  Dataset ds;
  for (const auto& p : paths) {
    if (!fs::exists(p)) throw IoError("load error: " + p.string() + " does not exist");
    auto [centered, info] = preprocess(load_video(p));
    if (!ds.centered.empty()) {
      require_same_dims(ds.centered.front().dims(), centered.dims(),
                        "training sequences");
    }
    ds.centered.push_back(std::move(centered));
    ds.infos.push_back(std::move(info));
  }
  const std::size_t channels = ds.infos.front().channel_means.size();
  ds.pooled.channel_means.assign(channels, 0.0);
  for (const auto& info : ds.infos) {
    for (std::size_t c = 0; c < channels; ++c) {
      ds.pooled.channel_means[c] += info.channel_means[c];
    }
  }
  for (double& m : ds.pooled.channel_means) m /= static_cast<double>(ds.infos.size());
  return ds;
}

ModelConfig model_for(RunConfig& cfg, const Dims& data_dims) {
  if (cfg.input_given) {
    require_same_dims(cfg.network.input, data_dims, "network input vs data");
  }
  cfg.network.input = data_dims;
  Network net(cfg.network);
  cfg.train.validate(net);
  return ModelConfig(std::move(net), cfg.reference);
}

Network network_for(const RunConfig& cfg) {
  if (!cfg.input_given) {
    throw ConfigError("field 'network.input': required when no data is given");
  }
  return Network(cfg.network);
}

std::vector<OcclusionMask> masks_for(const RunConfig& cfg, const Dataset& ds) {
  std::vector<OcclusionMask> masks;
  if (!cfg.mask_files.empty()) {
    if (cfg.mask_files.size() != ds.centered.size()) {
      throw ConfigError("field 'paths.mask': needs one mask per data sequence");
    }
    for (const auto& p : cfg.mask_files) {
      masks.push_back(OcclusionMask::from_tensor(read_tensor(p)));
    }
  } else if (cfg.mask_given) {
    for (std::size_t i = 0; i < ds.centered.size(); ++i) {
      masks.push_back(make_mask(cfg.mask, ds.centered[i].dims(), cfg.train.seed + i));
    }
  } else {
    throw ConfigError("field 'recovery.mask': give mask files or a mask kind");
  }
  for (std::size_t i = 0; i < masks.size(); ++i) {
    masks[i].require_matches(ds.centered[i].dims());
  }
  return masks;
}

fs::path checkpoint_for(const RunConfig& cfg) {
  return cfg.checkpoint.empty() ? cfg.output / "checkpoint.stgc" : cfg.checkpoint;
}

void write_sequence(const fs::path& dir, const std::string& name,
                    const Tensor& centered, const PreprocessInfo& info) {
  write_tensor(dir / (name + ".stgv"), postprocess(centered, info));
  write_frames(centered, dir / name, info);
}

void write_outputs(const RunConfig& cfg, const TrainState& state,
                   const Dataset& ds) {
  fs::create_directories(cfg.output);
  checkpoint_save(checkpoint_for(cfg), state);
  save_means(checkpoint_for(cfg), ds.pooled);
  write_text(cfg.output / "monitor.csv", monitor_csv(state.log));
  for (std::size_t m = 0; m < state.chains.sequences.size(); ++m) {
    write_sequence(cfg.output, indexed("synth", m), state.chains.sequences[m],
                   ds.pooled);
  }
  for (std::size_t i = 0; i < state.recovered.size(); ++i) {
    write_sequence(cfg.output, indexed("recovered", i), state.recovered[i],
                   ds.infos[i]);
  }
}

TrainHooks hooks_for(const RunConfig& cfg, const Dataset& ds, bool quiet) {
  TrainHooks hooks;
  hooks.checkpoint_every = cfg.checkpoint_every;
  const fs::path ckpt = checkpoint_for(cfg);
  const fs::path output = cfg.output;
  const PreprocessInfo pooled = ds.pooled;
  hooks.checkpoint = [ckpt, output, pooled](const TrainState& s) {
    fs::create_directories(output);
    checkpoint_save(ckpt, s);
    save_means(ckpt, pooled);
    write_text(output / "monitor.csv", monitor_csv(s.log));
  };
  if (!quiet) {
    hooks.on_iteration = [](const MonitorRecord& r) {
      std::cerr << "iteration " << r.iteration << " layers=" << r.active_layers
                << " f_obs=" << r.mean_f_obs << " f_syn=" << r.mean_f_syn
                << " grad_norm=" << r.grad_norm << '\n';
    };
  }
  return hooks;
}

struct CommonOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::size_t threads = 0;
  bool quiet = false;
};

RunConfig load_run_config(const CommonOptions& o) {
  std::string path = o.config;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnv)) path = env;
  }
  if (path.empty()) {
    throw ConfigError(std::string("no config file: pass --config or set ") + kConfigEnv);
  }
  RunConfig cfg = load_config(path, o.overrides);
  if (o.threads > 0) cfg.train.threads = o.threads;
  return cfg;
}

int run_train(const CommonOptions& o, const std::string& resume) {
  RunConfig cfg = load_run_config(o);
  const Dataset ds = load_data(cfg.data);
  const ModelConfig model = model_for(cfg, ds.centered.front().dims());
  const TrainHooks hooks = hooks_for(cfg, ds, o.quiet);
  TrainState state;
  if (!resume.empty()) {
    state = checkpoint_load(resume);
    require_same_shape(state.params, Params::zeros(model.network), "checkpoint");
    continue_training(state, ds.centered, model, cfg.train, nullptr, hooks);
  } else if (cfg.train.layer_schedule) {
    state = layerwise_train(ds.centered, model, cfg.train, hooks);
  } else {
    state = train(ds.centered, model, cfg.train, hooks);
  }
  write_outputs(cfg, state, ds);
  return 0;
}

int run_recover(const CommonOptions& o, const std::string& resume) {
  RunConfig cfg = load_run_config(o);
  const Dataset ds = load_data(cfg.data);
  const ModelConfig model = model_for(cfg, ds.centered.front().dims());
  const std::vector<OcclusionMask> masks = masks_for(cfg, ds);
  const TrainHooks hooks = hooks_for(cfg, ds, o.quiet);
  const RecoveryConfig rc = cfg.recovery();
  TrainState state;
  if (!resume.empty()) {
    state = checkpoint_load(resume);
    require_same_shape(state.params, Params::zeros(model.network), "checkpoint");
    continue_recovery(state, ds.centered, masks, model, rc, hooks);
  } else {
    state = train_with_recovery(ds.centered, masks, model, rc, hooks);
  }
  write_outputs(cfg, state, ds);
  fs::create_directories(cfg.output);
  for (std::size_t i = 0; i < masks.size(); ++i) {
    write_tensor(cfg.output / (indexed("mask", i) + ".stgv"), masks[i].to_tensor());
  }
  return 0;
}

int run_inpaint(const CommonOptions& o) {
  RunConfig cfg = load_run_config(o);
  const Dataset ds = load_data(cfg.data);
  if (ds.centered.size() != 1) {
    throw ConfigError("field 'paths.data': inpaint takes exactly one video");
  }
  const ModelConfig model = model_for(cfg, ds.centered.front().dims());
  const OcclusionMask mask = masks_for(cfg, ds).front();
  const Tensor result =
      inpaint_background(ds.centered.front(), mask, model, cfg.recovery());
  fs::create_directories(cfg.output);
  write_sequence(cfg.output, "inpainted", result, ds.infos.front());
  write_tensor(cfg.output / "mask.stgv", mask.to_tensor());
  return 0;
}

int run_sample(const CommonOptions& o, const std::string& checkpoint,
               std::optional<std::size_t> steps, std::optional<std::size_t> count) {
  RunConfig cfg = load_run_config(o);
  const fs::path ckpt = checkpoint.empty() ? checkpoint_for(cfg) : fs::path(checkpoint);
  const TrainState state = checkpoint_load(ckpt);
  if (!cfg.input_given && !state.chains.sequences.empty()) {
    cfg.network.input = state.chains.sequences.front().dims();
    cfg.input_given = true;
  }
  const ModelConfig model(network_for(cfg), cfg.reference);
  require_same_shape(state.params, Params::zeros(model.network), "checkpoint");
  const PreprocessInfo info = load_means(ckpt, model.network.input_dims().c);

  SamplerConfig sampler = cfg.train.sampler();
  sampler.num_steps = steps.value_or(cfg.sample_steps);
  const std::size_t n = count.value_or(cfg.sample_count);
  if (n == 0) throw ConfigError("--count must be >= 1");
  ChainState chains = init_chains(model, n, cfg.train.seed);
  if (sampler.num_steps > 0) chains = run_chain(std::move(chains), model, state.params, sampler);
  fs::create_directories(cfg.output);
  for (std::size_t m = 0; m < n; ++m) {
    write_sequence(cfg.output, indexed("sample", m), chains.sequences[m], info);
  }
  return 0;
}

struct EvalOptions {
  std::vector<std::string> ssim;
  std::vector<std::string> recovery;
  std::string spectrum;
  std::string csv;
  std::size_t window = 11;
};

int run_eval(const EvalOptions& e) {
  std::vector<std::pair<std::string, double>> rows;
  if (!e.ssim.empty()) {
    const Tensor a = read_tensor(e.ssim[0]);
    const Tensor b = read_tensor(e.ssim[1]);
    rows.emplace_back("ssim", ssim(a, b, SsimParams::for_range(255.0, e.window)));
  }
  if (!e.recovery.empty()) {
    const Tensor original = read_tensor(e.recovery[0]);
    const Tensor recovered = read_tensor(e.recovery[1]);
    const OcclusionMask mask = OcclusionMask::from_tensor(read_tensor(e.recovery[2]));
    rows.emplace_back("recovery_error", recovery_error(original, recovered, mask));
    rows.emplace_back("mean_fill_error",
                      recovery_error(original, mean_fill(original, mask), mask));
    rows.emplace_back("nearest_frame_error",
                      recovery_error(original, temporal_nearest_fill(original, mask), mask));
  }
  if (!e.spectrum.empty()) {
    const Tensor v = read_tensor(e.spectrum);
    rows.emplace_back("dominant_frequency",
                      static_cast<double>(dominant_temporal_frequency(v)));
  }
  if (rows.empty()) throw ConfigError("eval: pass --ssim, --recovery or --spectrum");
  for (const auto& [k, v] : rows) std::cout << k << '=' << format_number(v) << '\n';
  if (!e.csv.empty()) {
    std::ostringstream os;
    os << "metric,value\n";
    for (const auto& [k, v] : rows) os << k << ',' << format_number(v) << '\n';
    write_text(e.csv, os.str());
  }
  return 0;
}

}  // namespace

int dispatch(int argc, char** argv) {
  CLI::App app{"Spatial-temporal generative ConvNet: train, sample, recover, inpaint, eval"};
  app.require_subcommand(1);
  CommonOptions common;
  app.add_option("--threads", common.threads, "Cap on concurrently stepped chains")
      ->check(CLI::PositiveNumber);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config, "Config file")->envname(kConfigEnv);
    sub->add_option("--set", common.overrides, "Override: section.key=value");
    sub->add_option("--threads", common.threads, "Cap on concurrently stepped chains")
        ->check(CLI::PositiveNumber);
    sub->add_flag("-q,--quiet", common.quiet, "No per-iteration log");
  };

  std::string resume;
  auto* train_cmd = app.add_subcommand("train", "Learn a model and synthesize chains");
  add_common(train_cmd);
  train_cmd->add_option("--resume", resume, "Continue from a checkpoint");

  auto* recover_cmd = app.add_subcommand("recover", "Learn from occluded data and recover it");
  add_common(recover_cmd);
  recover_cmd->add_option("--resume", resume, "Continue from a checkpoint");

  auto* inpaint_cmd = app.add_subcommand("inpaint", "Remove a masked object from one video");
  add_common(inpaint_cmd);

  std::string checkpoint;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> count;
  auto* sample_cmd = app.add_subcommand("sample", "Draw sequences from a trained model");
  add_common(sample_cmd);
  sample_cmd->add_option("--checkpoint", checkpoint, "Checkpoint to sample from");
  sample_cmd->add_option("--steps", steps, "Langevin steps");
  sample_cmd->add_option("--count", count, "Number of sequences");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Report SSIM and recovery errors");
  eval_cmd->add_option("--ssim", eval.ssim, "Two .stgv files")->expected(2);
  eval_cmd->add_option("--recovery", eval.recovery, "Original, recovered and mask .stgv files")
      ->expected(3);
  eval_cmd->add_option("--spectrum", eval.spectrum, "Report the dominant temporal frequency");
  eval_cmd->add_option("--csv", eval.csv, "Also write a CSV table");
  eval_cmd->add_option("--window", eval.window, "SSIM window side");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) return run_train(common, resume);
    if (*recover_cmd) return run_recover(common, resume);
    if (*inpaint_cmd) return run_inpaint(common);
    if (*sample_cmd) return run_sample(common, checkpoint, steps, count);
    if (*eval_cmd) return run_eval(eval);
  } catch (const DivergenceError& e) {
    std::cerr << "divergence error: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace stg
