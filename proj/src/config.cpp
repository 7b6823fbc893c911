#include "stgconvnet/config.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "stgconvnet/error.hpp"

namespace stg {

RecoveryConfig RunConfig::recovery() const {
  RecoveryConfig r;
  r.train = train;
  r.recovery_steps = recovery_steps;
  r.recovery_temperature = recovery_temperature;
  return r;
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

std::size_t to_size(const std::string& s) {
  std::size_t v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty()) {
    throw ParameterError("expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

double to_double(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno != 0 || !std::isfinite(v)) {
    throw ParameterError("expected a finite number, got '" + s + "'");
  }
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ParameterError("expected true or false, got '" + s + "'");
}

Temperature to_temperature(const std::string& s) {
  if (s == "unit" || s == "1") return Temperature::unit;
  if (s == "zero" || s == "0") return Temperature::zero;
  throw ParameterError("expected unit or zero, got '" + s + "'");
}

/// "a", "axbxc": three extents. A single value repeats.
Extent3 to_extent(const std::string& s) {
  const auto parts = split(s, 'x');
  if (parts.size() == 1) {
    const std::size_t v = to_size(parts[0]);
    return {v, v, v};
  }
  if (parts.size() != 3) throw ParameterError("expected TxHxW, got '" + s + "'");
  return {to_size(parts[0]), to_size(parts[1]), to_size(parts[2])};
}

struct Entry {
  std::string section;
  std::string key;
  std::string value;
  std::string source;
  std::size_t line = 0;

  std::string where() const {
    std::string w = source;
    if (line > 0) w += ":" + std::to_string(line);
    return w + ": field '" + section + "." + key + "'";
  }
};

std::vector<Entry> tokenize(const std::string& text, const std::string& source) {
  std::vector<Entry> entries;
  std::istringstream is(text);
  std::string raw;
  std::string section;
  std::size_t line = 0;
  while (std::getline(is, raw)) {
    ++line;
    std::string s = raw;
    const auto comment = s.find_first_of("#;");
    if (comment != std::string::npos) s.erase(comment);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) {
        throw ConfigError(source + ":" + std::to_string(line) +
                          ": malformed section header '" + s + "'");
      }
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line) +
                        ": expected key = value, got '" + s + "'");
    }
    if (section.empty()) {
      throw ConfigError(source + ":" + std::to_string(line) +
                        ": key outside of any [section]");
    }
    entries.push_back({section, trim(s.substr(0, eq)), trim(s.substr(eq + 1)),
                       source, line});
  }
  return entries;
}

}  // namespace

Dims parse_dims(const std::string& value) {
  const auto parts = split(value, 'x');
  if (parts.size() != 4) throw ParameterError("expected TxHxWxC, got '" + value + "'");
  Dims d{to_size(parts[0]), to_size(parts[1]), to_size(parts[2]), to_size(parts[3])};
  require_valid(d);
  return d;
}

LayerSpec parse_layer(const std::string& value) {
  const auto w = words(value);
  if (w.size() < 2) {
    throw ParameterError("expected '<conv|spatial_full|full> <filters> [kernel=..] [stride=..]'");
  }
  LayerSpec ls;
  ls.connectivity = parse_connectivity(w[0]);
  ls.num_filters = to_size(w[1]);
  if (ls.num_filters == 0) throw ParameterError("filter count must be >= 1");
  bool have_kernel = false;
  switch (ls.connectivity) {
    case Connectivity::convolutional:
      ls.stride = {1, 1, 1};
      break;
    case Connectivity::spatial_full:
      ls.kernel = {1, 0, 0};
      ls.stride = {1, 1, 1};
      break;
    case Connectivity::full:
      ls.kernel = {0, 0, 0};
      ls.stride = {1, 1, 1};
      have_kernel = true;
      break;
  }
  for (std::size_t i = 2; i < w.size(); ++i) {
    const auto eq = w[i].find('=');
    if (eq == std::string::npos) throw ParameterError("unexpected token '" + w[i] + "'");
    const std::string k = w[i].substr(0, eq);
    const std::string v = w[i].substr(eq + 1);
    if (ls.connectivity == Connectivity::full) {
      throw ParameterError("full layers take no '" + k + "' (they cover the whole input)");
    }
    if (k == "kernel") {
      if (ls.connectivity == Connectivity::spatial_full) {
        ls.kernel.t = to_size(v);
      } else {
        ls.kernel = to_extent(v);
      }
      have_kernel = true;
    } else if (k == "stride") {
      if (ls.connectivity == Connectivity::spatial_full) {
        ls.stride.t = to_size(v);
      } else {
        ls.stride = to_extent(v);
      }
    } else {
      throw ParameterError("unknown layer attribute '" + k + "'");
    }
  }
  if (!have_kernel) throw ParameterError("layer needs kernel=...");
  if ((ls.connectivity != Connectivity::full && ls.kernel.t == 0) ||
      (ls.connectivity == Connectivity::convolutional &&
       (ls.kernel.h == 0 || ls.kernel.w == 0))) {
    throw ParameterError("kernel extents must be >= 1");
  }
  if (ls.stride.t == 0 || ls.stride.h == 0 || ls.stride.w == 0) {
    throw ParameterError("strides must be >= 1");
  }
  return ls;
}

RunConfig parse_config(const std::string& text, const std::string& source,
                       const std::vector<std::string>& overrides) {
  std::vector<Entry> entries = tokenize(text, source);
  for (const auto& o : overrides) {
    const auto dot = o.find('.');
    const auto eq = o.find('=');
    if (dot == std::string::npos || eq == std::string::npos || dot > eq) {
      throw ConfigError("<command line>: override '" + o +
                        "' is not of the form section.key=value");
    }
    Entry e{trim(o.substr(0, dot)), trim(o.substr(dot + 1, eq - dot - 1)),
            trim(o.substr(eq + 1)), "<command line>", 0};
    std::erase_if(entries, [&](const Entry& x) {
      return x.section == e.section && x.key == e.key;
    });
    entries.push_back(std::move(e));
  }

  RunConfig cfg;
  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"network.input",
       [&](const std::string& v) {
         cfg.network.input = parse_dims(v);
         cfg.input_given = true;
       }},
      {"network.layer",
       [&](const std::string& v) { cfg.network.layers.push_back(parse_layer(v)); }},
      {"model.reference",
       [&](const std::string& v) {
         if (v == "gaussian") {
           cfg.reference.kind = ReferenceKind::gaussian;
         } else if (v == "uniform") {
           cfg.reference.kind = ReferenceKind::uniform;
         } else {
           throw ParameterError("expected gaussian or uniform, got '" + v + "'");
         }
       }},
      {"model.sigma",
       [&](const std::string& v) {
         cfg.reference.sigma = to_double(v);
         if (!(cfg.reference.sigma > 0)) throw ParameterError("sigma must be positive");
       }},
      {"model.uniform_low", [&](const std::string& v) { cfg.reference.uniform_low = to_double(v); }},
      {"model.uniform_high", [&](const std::string& v) { cfg.reference.uniform_high = to_double(v); }},
      {"sampler.step_size",
       [&](const std::string& v) {
         cfg.train.step_size = to_double(v);
         if (!(cfg.train.step_size > 0)) throw ParameterError("step size must be positive");
       }},
      {"sampler.steps", [&](const std::string& v) { cfg.train.langevin_steps = to_size(v); }},
      {"sampler.temperature",
       [&](const std::string& v) { cfg.train.temperature = to_temperature(v); }},
      {"trainer.iterations",
       [&](const std::string& v) {
         cfg.train.iterations = to_size(v);
         if (cfg.train.iterations == 0) throw ParameterError("must be >= 1");
       }},
      {"trainer.chains",
       [&](const std::string& v) {
         cfg.train.num_chains = to_size(v);
         if (cfg.train.num_chains == 0) throw ParameterError("must be >= 1");
       }},
      {"trainer.learning_rate",
       [&](const std::string& v) {
         cfg.train.learning_rate = to_double(v);
         if (!(cfg.train.learning_rate > 0)) throw ParameterError("must be positive");
       }},
      {"trainer.layer_rate_ratio",
       [&](const std::string& v) {
         cfg.train.layer_rate_ratio = to_double(v);
         if (!(cfg.train.layer_rate_ratio > 0)) throw ParameterError("must be positive");
       }},
      {"trainer.learning_rates",
       [&](const std::string& v) {
         cfg.train.layer_learning_rates.clear();
         for (const auto& item : split(v, ',')) {
           const double r = to_double(item);
           if (!(r > 0)) throw ParameterError("learning rates must be positive");
           cfg.train.layer_learning_rates.push_back(r);
         }
       }},
      {"trainer.decay", [&](const std::string& v) { cfg.train.decay = to_bool(v); }},
      {"trainer.layer_schedule",
       [&](const std::string& v) {
         const std::size_t n = to_size(v);
         if (n == 0) {
           cfg.train.layer_schedule.reset();
         } else {
           cfg.train.layer_schedule = n;
         }
       }},
      {"trainer.initial_layers",
       [&](const std::string& v) {
         cfg.train.initial_layers = to_size(v);
         if (cfg.train.initial_layers == 0) throw ParameterError("must be >= 1");
       }},
      {"trainer.reset_chains_on_layer_add",
       [&](const std::string& v) { cfg.train.reset_chains_on_layer_add = to_bool(v); }},
      {"trainer.minibatch", [&](const std::string& v) { cfg.train.minibatch_size = to_size(v); }},
      {"trainer.checkpoint_every",
       [&](const std::string& v) { cfg.checkpoint_every = to_size(v); }},
      {"trainer.threads",
       [&](const std::string& v) {
         cfg.train.threads = to_size(v);
         if (cfg.train.threads == 0) throw ParameterError("must be >= 1");
       }},
      {"recovery.steps", [&](const std::string& v) { cfg.recovery_steps = to_size(v); }},
      {"recovery.temperature",
       [&](const std::string& v) { cfg.recovery_temperature = to_temperature(v); }},
      {"recovery.mask",
       [&](const std::string& v) {
         cfg.mask.kind = parse_mask_kind(v);
         cfg.mask_given = true;
       }},
      {"recovery.fraction",
       [&](const std::string& v) {
         cfg.mask.fraction = to_double(v);
         if (!(cfg.mask.fraction > 0 && cfg.mask.fraction <= 1)) {
           throw ParameterError("must be in (0, 1]");
         }
       }},
      {"recovery.block",
       [&](const std::string& v) {
         cfg.mask.block = to_size(v);
         if (cfg.mask.block == 0) throw ParameterError("must be >= 1");
       }},
      {"recovery.region",
       [&](const std::string& v) {
         cfg.mask.region = to_size(v);
         if (cfg.mask.region == 0) throw ParameterError("must be >= 1");
       }},
      {"sample.steps", [&](const std::string& v) { cfg.sample_steps = to_size(v); }},
      {"sample.count",
       [&](const std::string& v) {
         cfg.sample_count = to_size(v);
         if (cfg.sample_count == 0) throw ParameterError("must be >= 1");
       }},
      {"paths.data",
       [&](const std::string& v) {
         cfg.data.clear();
         for (const auto& p : split(v, ',')) cfg.data.emplace_back(p);
       }},
      {"paths.mask",
       [&](const std::string& v) {
         cfg.mask_files.clear();
         for (const auto& p : split(v, ',')) cfg.mask_files.emplace_back(p);
       }},
      {"paths.output", [&](const std::string& v) { cfg.output = v; }},
      {"paths.checkpoint", [&](const std::string& v) { cfg.checkpoint = v; }},
      {"run.seed",
       [&](const std::string& v) { cfg.train.seed = static_cast<std::uint64_t>(to_size(v)); }},
  };

  for (const auto& e : entries) {
    const auto it = setters.find(e.section + "." + e.key);
    if (it == setters.end()) throw ConfigError(e.where() + ": unknown field");
    try {
      it->second(e.value);
    } catch (const Error& err) {
      throw ConfigError(e.where() + ": " + err.what());
    }
  }

  if (cfg.network.layers.empty()) {
    throw ConfigError(source + ": field 'network.layer': at least one layer is required");
  }
  if (!cfg.train.layer_learning_rates.empty() &&
      cfg.train.layer_learning_rates.size() != cfg.network.layers.size()) {
    throw ConfigError(source + ": field 'trainer.learning_rates': needs " +
                      std::to_string(cfg.network.layers.size()) + " values");
  }
  if (cfg.input_given) {
    try {
      Network check(cfg.network);
      cfg.train.validate(check);
    } catch (const Error& err) {
      throw ConfigError(source + ": field 'network': " + err.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string(), overrides);
}

}  // namespace stg
