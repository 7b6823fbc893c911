#include "stgconvnet/videoio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cctype>
#include <cstring>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "stgconvnet/error.hpp"

namespace stg {

namespace fs = std::filesystem;

namespace {

class ByteWriter {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  void dims(const Dims& d) {
    for (std::size_t e : {d.t, d.h, d.w, d.c}) {
      if (e > UINT32_MAX) throw FormatError("tensor extent exceeds u32 range");
      u32(static_cast<std::uint32_t>(e));
    }
  }
  void doubles(std::span<const double> v) {
    for (double x : v) f64(x);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  template <typename U>
  void le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& bytes, const char* what)
      : bytes_(bytes), what_(what) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string(what_) + ": truncated at byte " +
                        std::to_string(pos_) + " (needed " + std::to_string(n) +
                        " more bytes, " + std::to_string(bytes_.size() - pos_) +
                        " available)");
    }
  }
  void magic(const char (&expected)[4]) {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, expected, 4) != 0) {
      throw FormatError(std::string(what_) + ": bad magic at byte " +
                        std::to_string(pos_));
    }
    pos_ += 4;
  }
  std::uint32_t u32() { return le<std::uint32_t>(); }
  std::uint64_t u64() { return le<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  Dims dims() {
    Dims d;
    d.t = u32();
    d.h = u32();
    d.w = u32();
    d.c = u32();
    return d;
  }
  std::vector<double> doubles(std::uint64_t n) {
    if (n > (bytes_.size() - pos_) / 8) {
      throw FormatError(std::string(what_) + ": truncated at byte " +
                        std::to_string(pos_) + " (payload of " +
                        std::to_string(n) + " values does not fit)");
    }
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }
  /// A count that must be satisfiable by the remaining bytes at `unit`
  /// bytes per element.
  std::uint64_t count(std::size_t unit) {
    const std::size_t at = pos_;
    const std::uint64_t n = u64();
    if (unit > 0 && n > (bytes_.size() - pos_) / unit) {
      throw FormatError(std::string(what_) + ": count " + std::to_string(n) +
                        " at byte " + std::to_string(at) +
                        " exceeds the remaining data");
    }
    return n;
  }

 private:
  template <typename U>
  U le() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(U);
    return v;
  }
  const std::vector<std::uint8_t>& bytes_;
  const char* what_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error while reading " + path.string());
  return bytes;
}

void put_tensor(ByteWriter& w, const Tensor& t) {
  w.dims(t.dims());
  w.doubles(t.data());
}

Tensor get_tensor(ByteReader& r, const char* what) {
  const std::size_t at = r.offset();
  const Dims d = r.dims();
  if (d.t == 0 || d.h == 0 || d.w == 0 || d.c == 0) {
    throw FormatError(std::string(what) + ": zero extent in dims at byte " +
                      std::to_string(at));
  }
  const std::uint64_t n = static_cast<std::uint64_t>(d.t) * d.h * d.w * d.c;
  return Tensor(d, r.doubles(n));
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  ByteWriter w;
  w.raw(kTensorMagic, 4);
  w.u32(kTensorVersion);
  w.u32(4);
  put_tensor(w, t);
  return w.take();
}

Tensor decode_tensor(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes, "tensor file");
  r.magic(kTensorMagic);
  const std::uint32_t version = r.u32();
  if (version != kTensorVersion) {
    throw FormatError("tensor file: unsupported version " +
                      std::to_string(version) + " at byte 4");
  }
  const std::uint32_t rank = r.u32();
  if (rank != 4) {
    throw FormatError("tensor file: rank " + std::to_string(rank) +
                      " at byte 8, expected 4");
  }
  Tensor t = get_tensor(r, "tensor file");
  if (!r.at_end()) {
    throw FormatError("tensor file: trailing bytes after payload at byte " +
                      std::to_string(r.offset()));
  }
  return t;
}

void atomic_write(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("error while writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

void write_tensor(const fs::path& path, const Tensor& t) {
  atomic_write(path, encode_tensor(t));
}

Tensor read_tensor(const fs::path& path) {
  try {
    return decode_tensor(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

namespace {

struct Raster {
  std::size_t rows = 0, cols = 0, channels = 0;
  std::vector<std::uint8_t> pixels;
};

Raster read_pnm(const fs::path& path) {
  const auto bytes = read_file(path);
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) -> FormatError {
    return FormatError(path.string() + ": " + why);
  };
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&]() -> std::size_t {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw fail("malformed header");
    }
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + static_cast<std::size_t>(bytes[pos++] - '0');
      if (v > 1u << 24) throw fail("header value out of range");
    }
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw fail("not a binary PGM (P5) or PPM (P6) file");
  }
  Raster r;
  r.channels = bytes[1] == '5' ? 1 : 3;
  pos = 2;
  r.cols = number();
  r.rows = number();
  const std::size_t maxval = number();
  if (maxval != 255) throw fail("only 8-bit rasters (maxval 255) are supported");
  if (r.rows == 0 || r.cols == 0) throw fail("empty raster");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw fail("malformed header");
  ++pos;
  const std::size_t n = r.rows * r.cols * r.channels;
  if (bytes.size() - pos < n) throw fail("truncated pixel data");
  r.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                  bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return r;
}

std::string frame_name(std::size_t index, std::size_t channels) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06zu.%s", index,
                channels == 1 ? "pgm" : "ppm");
  return buf;
}

}  // namespace

Tensor read_frames(const fs::path& directory) {
  if (!fs::is_directory(directory)) {
    throw IoError(directory.string() + " is not a directory");
  }
  static const std::regex pattern(R"(frame_(\d{6})\.(pgm|ppm))");
  std::map<std::size_t, fs::path> frames;
  for (const auto& entry : fs::directory_iterator(directory)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) {
      const std::size_t idx = std::stoul(m[1].str());
      if (!frames.emplace(idx, entry.path()).second) {
        throw IoError("load error: duplicate frame " + name);
      }
    }
  }
  if (frames.empty()) throw IoError("load error: no frame_%06d files in " + directory.string());
  std::size_t expected = 1;
  for (const auto& [idx, p] : frames) {
    if (idx != expected) {
      throw IoError("load error: missing frame " + frame_name(expected, 1).substr(0, 12) +
                    " before " + p.filename().string());
    }
    ++expected;
  }
  Tensor out;
  Dims dims;
  std::size_t t = 0;
  for (const auto& [idx, p] : frames) {
    const Raster r = read_pnm(p);
    if (t == 0) {
      dims = Dims{frames.size(), r.rows, r.cols, r.channels};
      out = Tensor(dims);
    } else if (r.rows != dims.h || r.cols != dims.w || r.channels != dims.c) {
      throw IoError("load error: frame " + p.filename().string() +
                    " has different dimensions than the first frame");
    }
    const std::size_t base = t * r.pixels.size();
    for (std::size_t i = 0; i < r.pixels.size(); ++i) out[base + i] = r.pixels[i];
    ++t;
  }
  return out;
}

void write_frames(const Tensor& tensor, const fs::path& directory,
                  const PreprocessInfo& info) {
  const Dims& d = tensor.dims();
  if (d.c != 1 && d.c != 3) {
    throw ShapeError("frames need 1 or 3 channels, got " + std::to_string(d.c));
  }
  if (!info.channel_means.empty() && info.channel_means.size() != d.c) {
    throw ShapeError("preprocess info has " +
                     std::to_string(info.channel_means.size()) +
                     " channel means for a " + std::to_string(d.c) +
                     "-channel tensor");
  }
  if (!tensor.all_finite()) throw InputError("write_frames: tensor has non-finite values");
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (!fs::is_directory(directory)) {
    throw IoError("cannot create directory " + directory.string());
  }
  const std::size_t frame = d.h * d.w * d.c;
  for (std::size_t t = 0; t < d.t; ++t) {
    std::ostringstream header;
    header << (d.c == 1 ? "P5" : "P6") << "\n" << d.w << " " << d.h << "\n255\n";
    const std::string h = header.str();
    std::vector<std::uint8_t> bytes(h.begin(), h.end());
    bytes.reserve(bytes.size() + frame);
    for (std::size_t i = 0; i < frame; ++i) {
      const std::size_t ch = i % d.c;
      double v = tensor[t * frame + i];
      if (!info.channel_means.empty()) v += info.channel_means[ch];
      v = std::clamp(std::round(v), 0.0, 255.0);
      bytes.push_back(static_cast<std::uint8_t>(v));
    }
    atomic_write(directory / frame_name(t + 1, d.c), bytes);
  }
}

Tensor load_video(const fs::path& path) {
  if (fs::is_directory(path)) return read_frames(path);
  if (!fs::exists(path)) throw IoError("input " + path.string() + " does not exist");
  return read_tensor(path);
}

std::pair<Tensor, PreprocessInfo> preprocess(const Tensor& raw) {
  const Dims& d = raw.dims();
  PreprocessInfo info;
  info.channel_means.assign(d.c, 0.0);
  for (std::size_t s = 0; s < d.sites(); ++s) {
    for (std::size_t ch = 0; ch < d.c; ++ch) info.channel_means[ch] += raw[s * d.c + ch];
  }
  for (double& m : info.channel_means) m /= static_cast<double>(d.sites());
  Tensor out = raw;
  for (std::size_t s = 0; s < d.sites(); ++s) {
    for (std::size_t ch = 0; ch < d.c; ++ch) out[s * d.c + ch] -= info.channel_means[ch];
  }
  return {std::move(out), std::move(info)};
}

Tensor postprocess(const Tensor& centered, const PreprocessInfo& info) {
  const Dims& d = centered.dims();
  if (info.channel_means.size() != d.c) {
    throw ShapeError("postprocess: channel count mismatch");
  }
  Tensor out = centered;
  for (std::size_t s = 0; s < d.sites(); ++s) {
    for (std::size_t ch = 0; ch < d.c; ++ch) out[s * d.c + ch] += info.channel_means[ch];
  }
  return out;
}

// Checkpoint body, after magic and version:
//   u64 iteration | u64 active_layers | u64 chain_step | u64 recovery_step
//   u64 layers, per layer: u64 n, n x f64 weights, u64 n, n x f64 biases
//   u64 chains, per chain: tensor (4 x u32 dims + payload)
//   u64 recovered, per sequence: tensor
//   u64 records, per record: u64 iteration, u64 active_layers, 5 x f64
std::vector<std::uint8_t> encode_checkpoint(const TrainState& state) {
  ByteWriter w;
  w.raw(kCheckpointMagic, 4);
  w.u32(kCheckpointVersion);
  w.u64(state.iteration);
  w.u64(state.active_layers);
  w.u64(state.chains.step);
  w.u64(state.recovery_step);
  w.u64(state.params.layers.size());
  for (const auto& lp : state.params.layers) {
    w.u64(lp.weights.size());
    w.doubles(lp.weights);
    w.u64(lp.biases.size());
    w.doubles(lp.biases);
  }
  w.u64(state.chains.sequences.size());
  for (const auto& s : state.chains.sequences) put_tensor(w, s);
  w.u64(state.recovered.size());
  for (const auto& s : state.recovered) put_tensor(w, s);
  w.u64(state.log.size());
  for (const auto& r : state.log) {
    w.u64(r.iteration);
    w.u64(r.active_layers);
    w.f64(r.mean_f_obs);
    w.f64(r.mean_f_syn);
    w.f64(r.mean_energy_syn);
    w.f64(r.grad_norm);
    w.f64(r.value);
  }
  return w.take();
}

TrainState decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes, "checkpoint");
  r.magic(kCheckpointMagic);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " +
                      std::to_string(version) + " at byte 4");
  }
  TrainState s;
  s.iteration = r.u64();
  s.active_layers = r.u64();
  s.chains.step = r.u64();
  s.recovery_step = r.u64();
  const std::uint64_t layers = r.count(16);
  s.params.layers.resize(layers);
  for (auto& lp : s.params.layers) {
    lp.weights = r.doubles(r.count(8));
    lp.biases = r.doubles(r.count(8));
  }
  const std::uint64_t chains = r.count(16);
  for (std::uint64_t i = 0; i < chains; ++i) {
    s.chains.sequences.push_back(get_tensor(r, "checkpoint"));
  }
  const std::uint64_t recovered = r.count(16);
  for (std::uint64_t i = 0; i < recovered; ++i) {
    s.recovered.push_back(get_tensor(r, "checkpoint"));
  }
  const std::uint64_t records = r.count(56);
  s.log.resize(records);
  for (auto& rec : s.log) {
    rec.iteration = r.u64();
    rec.active_layers = r.u64();
    rec.mean_f_obs = r.f64();
    rec.mean_f_syn = r.f64();
    rec.mean_energy_syn = r.f64();
    rec.grad_norm = r.f64();
    rec.value = r.f64();
  }
  if (!r.at_end()) {
    throw FormatError("checkpoint: trailing bytes at byte " +
                      std::to_string(r.offset()));
  }
  return s;
}

void checkpoint_save(const fs::path& path, const TrainState& state) {
  atomic_write(path, encode_checkpoint(state));
}

TrainState checkpoint_load(const fs::path& path) {
  try {
    return decode_checkpoint(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace stg
