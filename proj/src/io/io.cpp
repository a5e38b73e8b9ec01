#include "skydepth/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace skydepth::io {

namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    U out{};
    auto* src = reinterpret_cast<const unsigned char*>(&v);
    auto* dst = reinterpret_cast<unsigned char*>(&out);
    for (std::size_t i = 0; i < sizeof(U); ++i) dst[i] = src[sizeof(U) - 1 - i];
    return out;
  } else {
    return v;
  }
}

template <typename U>
void put(std::string& out, U v) {
  v = to_little(v);
  char buf[sizeof(U)];
  std::memcpy(buf, &v, sizeof(U));
  out.append(buf, sizeof(U));
}

void put_f32(std::string& out, float f) { put(out, std::bit_cast<std::uint32_t>(f)); }

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Cursor over an in-memory file; `context` names what is being read so
// truncation errors can say where they happened.
class Reader {
 public:
  Reader(const std::string& bytes, std::string file) : bytes_(bytes), file_(std::move(file)) {}

  void set_context(std::string ctx) { context_ = std::move(ctx); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  const char* take(std::size_t n) {
    if (remaining() < n) {
      throw IoError(file_ + ": truncated while reading " + context_ + " (need " +
                    std::to_string(n) + " bytes, " + std::to_string(remaining()) + " left)");
    }
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  template <typename U>
  U get() {
    U v;
    std::memcpy(&v, take(sizeof(U)), sizeof(U));
    return to_little(v);
  }

  float get_f32() { return std::bit_cast<float>(get<std::uint32_t>()); }

 private:
  const std::string& bytes_;
  std::string file_;
  std::string context_ = "header";
  std::size_t pos_ = 0;
};

// Portable anymap header: magic, then width, height and (optionally)
// maxval/scale tokens separated by whitespace and '#' comments, then one
// whitespace byte before the payload.
struct PnmHeader {
  std::string magic;
  std::vector<std::string> tokens;
  std::size_t payload_offset = 0;
};

PnmHeader parse_pnm_header(const std::string& bytes, std::size_t n_tokens,
                           const std::filesystem::path& path) {
  PnmHeader h;
  if (bytes.size() < 2) throw IoError(path.string() + ": malformed header (file too short)");
  h.magic = bytes.substr(0, 2);
  std::size_t pos = 2;
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  };
  while (h.tokens.size() < n_tokens) {
    while (pos < bytes.size() && (is_space(bytes[pos]) || bytes[pos] == '#')) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        ++pos;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !is_space(bytes[pos]) && bytes[pos] != '#') ++pos;
    if (start == pos) throw IoError(path.string() + ": malformed header (missing fields)");
    h.tokens.push_back(bytes.substr(start, pos - start));
  }
  if (pos >= bytes.size() || !is_space(bytes[pos])) {
    throw IoError(path.string() + ": malformed header (no separator before payload)");
  }
  h.payload_offset = pos + 1;
  return h;
}

int parse_dim(const std::string& tok, const std::filesystem::path& path, const char* what) {
  int v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || v <= 0) {
    throw IoError(path.string() + ": malformed header (bad " + what + " '" + tok + "')");
  }
  return v;
}

std::string pnm_bytes(const std::vector<unsigned char>& samples, const char* magic, int w, int h) {
  std::string out = std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) +
                    "\n255\n";
  out.append(reinterpret_cast<const char*>(samples.data()), samples.size());
  return out;
}

unsigned char quantize(float v) {
  const float c = std::clamp(std::isnan(v) ? 0.0f : v, 0.0f, 1.0f);
  return static_cast<unsigned char>(std::lround(c * 255.0f));
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

ImageTensor read_image(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const PnmHeader h = parse_pnm_header(bytes, 3, path);
  int channels = 0;
  if (h.magic == "P5") {
    channels = 1;
  } else if (h.magic == "P6") {
    channels = 3;
  } else {
    throw IoError(path.string() + ": malformed header (expected P5 or P6, got '" + h.magic + "')");
  }
  const int w = parse_dim(h.tokens[0], path, "width");
  const int ht = parse_dim(h.tokens[1], path, "height");
  const int maxval = parse_dim(h.tokens[2], path, "maxval");
  if (maxval != 255) {
    throw IoError(path.string() + ": unsupported maxval " + std::to_string(maxval) +
                  " (only 255)");
  }
  const std::size_t need = static_cast<std::size_t>(w) * ht * channels;
  if (bytes.size() - h.payload_offset < need) {
    throw IoError(path.string() + ": truncated payload (need " + std::to_string(need) +
                  " bytes, have " + std::to_string(bytes.size() - h.payload_offset) + ")");
  }
  ImageTensor img(channels, ht, w);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + h.payload_offset);
  for (int y = 0; y < ht; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        img.at(c, y, x) = static_cast<float>(p[(static_cast<std::size_t>(y) * w + x) * channels + c]) /
                          255.0f;
      }
    }
  }
  return img;
}

void write_image(const ImageTensor& image, const std::filesystem::path& path) {
  const int ch = image.channels();
  if (ch != 1 && ch != 3) {
    throw ShapeError("write_image: only 1- or 3-channel images, got " + std::to_string(ch));
  }
  std::vector<unsigned char> samples(image.data().size());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < ch; ++c) {
        samples[(static_cast<std::size_t>(y) * image.width() + x) * ch + c] =
            quantize(image.at(c, y, x));
      }
    }
  }
  write_file(path, pnm_bytes(samples, ch == 1 ? "P5" : "P6", image.width(), image.height()));
}

DepthMask read_float_map(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const PnmHeader h = parse_pnm_header(bytes, 3, path);
  if (h.magic == "PF") throw IoError(path.string() + ": colour float maps (PF) are not supported");
  if (h.magic != "Pf") {
    throw IoError(path.string() + ": malformed header (expected Pf, got '" + h.magic + "')");
  }
  const int w = parse_dim(h.tokens[0], path, "width");
  const int ht = parse_dim(h.tokens[1], path, "height");
  double scale = 0.0;
  const std::string& st = h.tokens[2];
  const auto res = std::from_chars(st.data(), st.data() + st.size(), scale);
  if (res.ec != std::errc() || res.ptr != st.data() + st.size() || scale == 0.0) {
    throw IoError(path.string() + ": malformed header (bad scale '" + st + "')");
  }
  if (scale > 0.0) {
    throw IoError(path.string() + ": big-endian float maps (positive scale) are not supported");
  }
  const std::size_t need = static_cast<std::size_t>(w) * ht * 4;
  if (bytes.size() - h.payload_offset < need) {
    throw IoError(path.string() + ": truncated payload (need " + std::to_string(need) +
                  " bytes, have " + std::to_string(bytes.size() - h.payload_offset) + ")");
  }
  DepthMask mask(ht, w);
  Reader r(bytes, path.string());
  r.take(h.payload_offset);
  r.set_context("float map payload");
  for (int row = 0; row < ht; ++row) {
    const int y = ht - 1 - row;
    for (int x = 0; x < w; ++x) mask.at(y, x) = r.get_f32();
  }
  return mask;
}

void write_float_map(const DepthMask& mask, const std::filesystem::path& path) {
  for (float v : mask.data()) {
    if (!std::isfinite(v)) throw ValueError("write_float_map: non-finite value in mask");
  }
  std::string out = "Pf\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) +
                    "\n-1.0\n";
  out.reserve(out.size() + mask.size() * 4);
  for (int y = mask.height() - 1; y >= 0; --y) {
    for (int x = 0; x < mask.width(); ++x) put_f32(out, mask.at(y, x));
  }
  write_file(path, out);
}

void write_class_mask(const DepthMask& mask, const std::filesystem::path& path) {
  std::vector<unsigned char> samples(mask.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const float v = mask.data()[i];
    if (!(v >= 0.0f && v <= 5.0f) || v != std::round(v)) {
      throw ValueError("write_class_mask: value " + std::to_string(v) +
                       " is not an integer class in [0, 5]");
    }
    samples[i] = static_cast<unsigned char>(v * 50.0f);
  }
  write_file(path, pnm_bytes(samples, "P5", mask.width(), mask.height()));
}

DepthMask read_class_mask(const std::filesystem::path& path) {
  const ImageTensor img = read_image(path);
  if (img.channels() != 1) throw IoError(path.string() + ": class masks must be P5");
  DepthMask mask(img.height(), img.width());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const long raw = std::lround(img.data()[i] * 255.0f);
    if (raw % 50 != 0) {
      throw IoError(path.string() + ": sample " + std::to_string(raw) +
                    " is not a multiple of 50");
    }
    mask.data()[i] = static_cast<float>(raw / 50);
  }
  return mask;
}

namespace {

void put_record(std::string& out, const std::string& name, const numcore::Shape& shape,
                std::span<const float> data) {
  put(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  put(out, static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) put(out, static_cast<std::uint32_t>(d));
  for (float v : data) put_f32(out, v);
}

struct Record {
  std::string name;
  numcore::Shape shape;
  std::vector<float> data;
};

Record get_record(Reader& r, std::size_t index) {
  Record rec;
  r.set_context("record #" + std::to_string(index) + " name");
  const auto len = r.get<std::uint32_t>();
  if (len > 4096) throw IoError("checkpoint: record #" + std::to_string(index) + " name too long");
  rec.name.assign(r.take(len), len);
  r.set_context("record '" + rec.name + "' shape");
  const auto rank = r.get<std::uint32_t>();
  if (rank > 8) throw IoError("checkpoint: record '" + rec.name + "' has rank " + std::to_string(rank));
  for (std::uint32_t i = 0; i < rank; ++i) rec.shape.push_back(r.get<std::uint32_t>());
  const auto n = static_cast<std::size_t>(numcore::numel_of(rec.shape));
  r.set_context("record '" + rec.name + "' data");
  if (r.remaining() < n * 4) r.take(n * 4);  // raises the truncation error
  rec.data.resize(n);
  for (auto& v : rec.data) v = r.get_f32();
  return rec;
}

}  // namespace

void save_checkpoint(const model::Model& model, const optim::AdamState* optimizer,
                     const std::filesystem::path& path) {
  const auto& cfg = model.config();
  std::string out = "ADCK";
  put(out, kCheckpointVersion);
  put(out, static_cast<std::uint32_t>(cfg.levels));
  put(out, static_cast<std::uint32_t>(cfg.base_channels));
  put(out, static_cast<std::uint32_t>(cfg.in_channels));
  put(out, static_cast<std::uint32_t>(cfg.out_channels));
  put(out, static_cast<std::uint64_t>(cfg.seed));
  const auto& params = model.params();
  put(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) put_record(out, p.name, p.tensor.shape(), p.tensor.data());

  if (optimizer && !optimizer->matches(params)) {
    throw ShapeError("save_checkpoint: optimizer state does not match the model");
  }
  put(out, static_cast<std::uint8_t>(optimizer ? 1 : 0));
  if (optimizer) {
    put(out, static_cast<std::uint64_t>(optimizer->step));
    for (std::size_t i = 0; i < params.size(); ++i) {
      put_record(out, "adam.m." + params[i].name, params[i].tensor.shape(), optimizer->m[i]);
      put_record(out, "adam.v." + params[i].name, params[i].tensor.shape(), optimizer->v[i]);
    }
  }
  write_file(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const std::string file = path.string();
  Reader r(bytes, file);
  r.set_context("magic");
  if (std::string(r.take(4), 4) != "ADCK") throw IoError(file + ": not a checkpoint (bad magic)");
  r.set_context("version");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw IoError(file + ": unsupported checkpoint version " + std::to_string(version));
  }
  r.set_context("model config");
  model::ModelConfig cfg;
  cfg.levels = static_cast<int>(r.get<std::uint32_t>());
  cfg.base_channels = static_cast<int>(r.get<std::uint32_t>());
  cfg.in_channels = static_cast<int>(r.get<std::uint32_t>());
  cfg.out_channels = static_cast<int>(r.get<std::uint32_t>());
  cfg.seed = r.get<std::uint64_t>();
  try {
    cfg.validate();
  } catch (const ValueError& e) {
    throw IoError(file + ": invalid embedded config: " + e.what());
  }
  const auto layout = model::unet_layout(cfg);

  r.set_context("tensor count");
  const auto count = r.get<std::uint32_t>();
  if (count != layout.size()) {
    throw IoError(file + ": " + std::to_string(count) + " tensors, config implies " +
                  std::to_string(layout.size()));
  }
  std::vector<model::NamedParam<float>> params;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    Record rec = get_record(r, i);
    if (rec.name != layout[i].first || rec.shape != layout[i].second) {
      throw IoError(file + ": record '" + rec.name + "' " + numcore::to_string(rec.shape) +
                    " inconsistent with embedded config (expected '" + layout[i].first + "' " +
                    numcore::to_string(layout[i].second) + ")");
    }
    params.push_back({rec.name, numcore::Tensor(rec.shape, std::move(rec.data))});
  }

  Checkpoint ck{model::Model(cfg, std::move(params)), std::nullopt};
  r.set_context("optimizer flag");
  const auto has_opt = r.get<std::uint8_t>();
  if (has_opt > 1) throw IoError(file + ": bad optimizer flag");
  if (has_opt) {
    optim::AdamState st;
    r.set_context("optimizer step");
    st.step = static_cast<std::int64_t>(r.get<std::uint64_t>());
    for (std::size_t i = 0; i < layout.size(); ++i) {
      for (const char* which : {"adam.m.", "adam.v."}) {
        Record rec = get_record(r, layout.size() + 2 * i);
        const std::string expect = which + layout[i].first;
        if (rec.name != expect || rec.shape != layout[i].second) {
          throw IoError(file + ": record '" + rec.name + "' inconsistent with embedded config");
        }
        (which[5] == 'm' ? st.m : st.v).push_back(std::move(rec.data));
      }
    }
    ck.optimizer = std::move(st);
  }
  if (r.remaining() != 0) {
    throw IoError(file + ": " + std::to_string(r.remaining()) + " trailing bytes after checkpoint");
  }
  return ck;
}

std::string format_metric_report(const metrics::MetricReport& m) {
  return "mae,rmse,sw_mean,sw_min,sw_max,thr_acc,n\n" + format_number(m.mae) + "," +
         format_number(m.rmse) + "," + format_number(m.sw_acc_mean) + "," +
         format_number(m.sw_acc_min) + "," + format_number(m.sw_acc_max) + "," +
         format_number(m.threshold_acc) + "," + std::to_string(m.n_samples) + "\n";
}

void write_metric_report(const metrics::MetricReport& report, const std::filesystem::path& path) {
  write_file(path, format_metric_report(report));
}

}  // namespace skydepth::io
