#include "resteer/serialize.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "resteer/errors.hpp"
#include "resteer/hashing.hpp"

namespace resteer {

namespace {

constexpr uint32_t kFormatVersion = 1;

class ByteWriter {
 public:
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    u64(bits);
  }
  void bytes(const void* data, size_t len) {
    buf_.append(static_cast<const char*>(data), len);
  }
  void str(const std::string& s) { buf_.append(s); }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string data, std::string origin)
      : data_(std::move(data)), origin_(std::move(origin)) {}

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  int64_t i64() { return static_cast<int64_t>(u64()); }
  double f64() {
    const uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
  std::string str(size_t len) {
    need(len);
    std::string s = data_.substr(pos_, len);
    pos_ += len;
    return s;
  }
  Digest digest() {
    need(32);
    Digest d;
    std::memcpy(d.data(), data_.data() + pos_, 32);
    pos_ += 32;
    return d;
  }
  std::string rest() const { return data_.substr(pos_); }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(size_t n) {
    if (pos_ + n > data_.size()) throw io_error(origin_ + ": truncated file");
  }
  std::string data_;
  std::string origin_;
  size_t pos_ = 0;
};

void write_named_tensors(ByteWriter& w, const std::vector<std::pair<std::string, Tensor>>& named) {
  for (const auto& [name, t] : named) {
    w.u32(static_cast<uint32_t>(name.size()));
    w.str(name);
    w.u32(static_cast<uint32_t>(t.rank()));
    for (int64_t e : t.shape()) w.i64(e);
    for (double v : t.values()) w.f64(v);
  }
}

std::vector<std::pair<std::string, Tensor>> read_named_tensors(ByteReader& r, uint64_t count) {
  std::vector<std::pair<std::string, Tensor>> named;
  named.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    const uint32_t name_len = r.u32();
    std::string name = r.str(name_len);
    const uint32_t rank = r.u32();
    Shape shape;
    for (uint32_t d = 0; d < rank; ++d) shape.push_back(r.i64());
    const int64_t n = numel(shape);
    std::vector<double> data(static_cast<size_t>(n));
    for (int64_t j = 0; j < n; ++j) data[static_cast<size_t>(j)] = r.f64();
    named.emplace_back(std::move(name), Tensor::from_data(std::move(shape), std::move(data)));
  }
  return named;
}

std::string read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error(path + ": cannot open for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_binary_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error(path + ": cannot open for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw io_error(path + ": write failed");
}

nlohmann::json config_to_json(const DenoiserConfig& c) {
  return nlohmann::json{{"image_size", c.image_size}, {"channels", c.channels}, {"patch", c.patch},
                        {"d_model", c.d_model},       {"heads", c.heads},       {"blocks", c.blocks},
                        {"d_ctx", c.d_ctx},           {"d_cross", c.d_cross},   {"d_ff", c.d_ff},
                        {"time_dim", c.time_dim},     {"l_max", c.l_max}};
}

DenoiserConfig config_from_json(const nlohmann::json& j) {
  DenoiserConfig c;
  c.image_size = j.at("image_size").get<int64_t>();
  c.channels = j.at("channels").get<int64_t>();
  c.patch = j.at("patch").get<int64_t>();
  c.d_model = j.at("d_model").get<int64_t>();
  c.heads = j.at("heads").get<int64_t>();
  c.blocks = j.at("blocks").get<int64_t>();
  c.d_ctx = j.at("d_ctx").get<int64_t>();
  c.d_cross = j.at("d_cross").get<int64_t>();
  c.d_ff = j.at("d_ff").get<int64_t>();
  c.time_dim = j.at("time_dim").get<int64_t>();
  c.l_max = j.at("l_max").get<int64_t>();
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model) {
  const std::string vocab_text = model.text.vocab.to_text();
  nlohmann::json header_json;
  header_json["model"] = config_to_json(model.cfg);
  header_json["vocabulary"] = vocab_text;
  const std::string json_text = header_json.dump();

  const std::vector<std::pair<std::string, Tensor>> named = model.all_params();
  ByteWriter payload;
  write_named_tensors(payload, named);
  const Digest payload_hash = sha256_string(payload.data());
  const Digest vocab_hash = sha256_string(vocab_text);

  ByteWriter w;
  w.str("RSTR");
  w.u32(kFormatVersion);
  w.u64(json_text.size());
  w.str(json_text);
  w.bytes(vocab_hash.data(), vocab_hash.size());
  w.bytes(payload_hash.data(), payload_hash.size());
  w.u64(named.size());
  w.str(payload.data());
  write_binary_file(path, w.data());
}

Model load_checkpoint(const std::string& path) {
  ByteReader r(read_binary_file(path), path);
  if (r.str(4) != "RSTR") throw io_error(path + ": not a checkpoint (bad magic)");
  const uint32_t version = r.u32();
  if (version != kFormatVersion) {
    throw io_error(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  const uint64_t json_len = r.u64();
  const std::string json_text = r.str(json_len);
  const Digest vocab_hash = r.digest();
  const Digest payload_hash = r.digest();
  const uint64_t count = r.u64();
  const std::string payload = r.rest();
  if (sha256_string(payload) != payload_hash) throw io_error(path + ": payload hash mismatch (corrupted)");

  nlohmann::json header_json;
  try {
    header_json = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw io_error(path + ": bad header JSON: " + e.what());
  }
  const std::string vocab_text = header_json.at("vocabulary").get<std::string>();
  if (sha256_string(vocab_text) != vocab_hash) throw io_error(path + ": vocabulary hash mismatch");

  Model model;
  model.cfg = config_from_json(header_json.at("model"));
  model.cfg.validate();
  Vocabulary vocab = Vocabulary::parse_text(vocab_text);

  ByteReader pr(payload, path);
  std::vector<std::pair<std::string, Tensor>> named = read_named_tensors(pr, count);
  if (!pr.at_end()) throw io_error(path + ": trailing bytes after tensor payload");

  // Rebuild the model and overwrite every parameter from the file.
  model = Model::init(model.cfg, std::move(vocab), 0);
  std::vector<std::pair<std::string, Tensor>> expected = model.all_params();
  if (expected.size() != named.size()) {
    throw io_error(path + ": tensor count mismatch for config (" + std::to_string(named.size()) +
                   " stored, " + std::to_string(expected.size()) + " expected)");
  }
  for (size_t i = 0; i < expected.size(); ++i) {
    if (expected[i].first != named[i].first) {
      throw io_error(path + ": unexpected tensor '" + named[i].first + "' (expected '" +
                     expected[i].first + "')");
    }
    if (expected[i].second.shape() != named[i].second.shape()) {
      throw io_error(path + ": shape mismatch for '" + named[i].first + "'");
    }
    expected[i].second.values() = named[i].second.values();
  }
  return model;
}

void save_patch(const std::string& path, const ModelPatch& patch) {
  ByteWriter payload;
  write_named_tensors(payload, patch.deltas);
  const Digest payload_hash = sha256_string(payload.data());

  ByteWriter w;
  w.str("RPCH");
  w.u32(kFormatVersion);
  w.bytes(patch.base_fingerprint.data(), patch.base_fingerprint.size());
  w.u64(patch.metadata_json.size());
  w.str(patch.metadata_json);
  w.bytes(payload_hash.data(), payload_hash.size());
  w.u64(patch.deltas.size());
  w.str(payload.data());
  write_binary_file(path, w.data());
}

ModelPatch load_patch(const std::string& path) {
  ByteReader r(read_binary_file(path), path);
  if (r.str(4) != "RPCH") throw io_error(path + ": not a patch (bad magic)");
  const uint32_t version = r.u32();
  if (version != kFormatVersion) {
    throw io_error(path + ": unsupported patch version " + std::to_string(version));
  }
  ModelPatch patch;
  patch.base_fingerprint = r.digest();
  const uint64_t json_len = r.u64();
  patch.metadata_json = r.str(json_len);
  const Digest payload_hash = r.digest();
  const uint64_t count = r.u64();
  const std::string payload = r.rest();
  if (sha256_string(payload) != payload_hash) throw io_error(path + ": payload hash mismatch (corrupted)");
  ByteReader pr(payload, path);
  patch.deltas = read_named_tensors(pr, count);
  if (!pr.at_end()) throw io_error(path + ": trailing bytes after tensor payload");
  return patch;
}

void save_embeddings(const std::string& path, const std::vector<std::pair<std::string, Tensor>>& named) {
  ByteWriter payload;
  write_named_tensors(payload, named);
  const Digest payload_hash = sha256_string(payload.data());
  ByteWriter w;
  w.str("REMB");
  w.u32(kFormatVersion);
  w.bytes(payload_hash.data(), payload_hash.size());
  w.u64(named.size());
  w.str(payload.data());
  write_binary_file(path, w.data());
}

std::vector<std::pair<std::string, Tensor>> load_embeddings(const std::string& path) {
  ByteReader r(read_binary_file(path), path);
  if (r.str(4) != "REMB") throw io_error(path + ": not an embeddings file (bad magic)");
  const uint32_t version = r.u32();
  if (version != kFormatVersion) {
    throw io_error(path + ": unsupported embeddings version " + std::to_string(version));
  }
  const Digest payload_hash = r.digest();
  const uint64_t count = r.u64();
  const std::string payload = r.rest();
  if (sha256_string(payload) != payload_hash) throw io_error(path + ": payload hash mismatch (corrupted)");
  ByteReader pr(payload, path);
  auto named = read_named_tensors(pr, count);
  if (!pr.at_end()) throw io_error(path + ": trailing bytes after tensor payload");
  return named;
}

void write_ppm(const std::string& path, const Tensor& image) {
  if (image.rank() != 3 || image.shape()[2] != 3) {
    throw std::invalid_argument("write_ppm: expects [H,W,3] image");
  }
  const int64_t h = image.shape()[0], w = image.shape()[1];
  std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  for (double v : image.values()) {
    const double clamped = std::clamp(v, -1.0, 1.0);
    out.push_back(static_cast<char>(static_cast<uint8_t>(std::lround((clamped + 1.0) * 0.5 * 255.0))));
  }
  write_binary_file(path, out);
}

Tensor read_ppm(const std::string& path) {
  const std::string data = read_binary_file(path);
  std::istringstream is(data);
  std::string magic;
  int64_t w = 0, h = 0, maxv = 0;
  is >> magic >> w >> h >> maxv;
  if (magic != "P6") throw io_error(path + ": not a P6 PPM");
  if (maxv != 255 || w <= 0 || h <= 0) throw io_error(path + ": unsupported PPM header");
  is.get();  // single whitespace after header
  const size_t offset = static_cast<size_t>(is.tellg());
  const size_t need = static_cast<size_t>(w * h * 3);
  if (data.size() < offset + need) throw io_error(path + ": truncated PPM payload");
  std::vector<double> values(need);
  for (size_t i = 0; i < need; ++i) {
    values[i] = static_cast<double>(static_cast<uint8_t>(data[offset + i])) / 255.0 * 2.0 - 1.0;
  }
  return Tensor::from_data({h, w, 3}, std::move(values));
}

Tensor mosaic(const std::vector<Tensor>& images, int64_t cols) {
  if (images.empty()) throw std::invalid_argument("mosaic: no images");
  const int64_t h = images[0].shape()[0], w = images[0].shape()[1];
  const int64_t n = static_cast<int64_t>(images.size());
  const int64_t rows = (n + cols - 1) / cols;
  Tensor grid = Tensor::full({rows * h, cols * w, 3}, -1.0);
  auto& gv = grid.values();
  for (int64_t i = 0; i < n; ++i) {
    const auto& iv = images[static_cast<size_t>(i)].values();
    const int64_t r0 = (i / cols) * h, c0 = (i % cols) * w;
    for (int64_t r = 0; r < h; ++r) {
      for (int64_t c = 0; c < w; ++c) {
        for (int64_t ch = 0; ch < 3; ++ch) {
          gv[static_cast<size_t>((((r0 + r) * cols * w) + c0 + c) * 3 + ch)] =
              iv[static_cast<size_t>((r * w + c) * 3 + ch)];
        }
      }
    }
  }
  return grid;
}

void write_text_file(const std::string& path, const std::string& content) {
  write_binary_file(path, content);
}

std::string read_text_file(const std::string& path) { return read_binary_file(path); }

}  // namespace resteer
