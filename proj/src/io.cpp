#include "voxpan/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace voxpan::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    bytes_.insert(bytes_.end(), raw, raw + sizeof(T));
  }
  template <typename T>
  void put_all(std::span<const T> values) {
    if constexpr (std::endian::native == std::endian::little) {
      const auto* p = reinterpret_cast<const std::uint8_t*>(values.data());
      bytes_.insert(bytes_.end(), p, p + values.size_bytes());
    } else {
      for (const T& v : values) put(v);
    }
  }
  void put_raw(const char* s, std::size_t n) { bytes_.insert(bytes_.end(), s, s + n); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& bytes, std::string origin) : bytes_(bytes), origin_(std::move(origin)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    std::memcpy(&value, raw, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  template <typename T>
  void get_all(std::span<T> out) {
    need(out.size_bytes());
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(out.data(), bytes_.data() + pos_, out.size_bytes());
      pos_ += out.size_bytes();
    } else {
      for (T& v : out) v = get<T>();
    }
  }
  std::string get_raw(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError(origin_ + ": truncated file");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

const char* element_name(ElementKind k) {
  switch (k) {
    case ElementKind::kU16: return "u16";
    case ElementKind::kU32: return "u32";
    case ElementKind::kU8: return "u8";
    case ElementKind::kF32: return "f32";
  }
  return "u16";
}

ElementKind element_from_name(const std::string& s, const fs::path& origin) {
  if (s == "u16") return ElementKind::kU16;
  if (s == "u32") return ElementKind::kU32;
  if (s == "u8") return ElementKind::kU8;
  if (s == "f32") return ElementKind::kF32;
  throw FormatError(origin.string() + ": unknown element kind '" + s + "'");
}

std::size_t element_width(ElementKind k) {
  switch (k) {
    case ElementKind::kU16: return 2;
    case ElementKind::kU32: return 4;
    case ElementKind::kU8: return 1;
    case ElementKind::kF32: return 4;
  }
  return 1;
}

template <typename T>
constexpr ElementKind kind_of();
template <>
constexpr ElementKind kind_of<std::uint16_t>() { return ElementKind::kU16; }
template <>
constexpr ElementKind kind_of<std::uint32_t>() { return ElementKind::kU32; }
template <>
constexpr ElementKind kind_of<std::uint8_t>() { return ElementKind::kU8; }
template <>
constexpr ElementKind kind_of<float>() { return ElementKind::kF32; }

std::string manifest_text(const GridManifest& m) {
  json j;
  j["format"] = "voxpan-grid";
  j["version"] = 1;
  j["dims"] = {m.dims.h, m.dims.w, m.dims.d};
  j["resolution_m"] = m.dims.resolution_m;
  j["element"] = element_name(m.element);
  j["taxonomy"] = m.taxonomy;
  return j.dump(2) + "\n";
}

template <typename T>
void save_grid(const fs::path& path, const Grid<T>& grid, const std::string& taxonomy) {
  ByteWriter w;
  w.put_all<T>(grid.values());
  write_bytes(path, w.bytes());
  write_text(manifest_path(path), manifest_text({grid.dims(), kind_of<T>(), taxonomy}));
}

template <typename T>
Grid<T> load_grid(const fs::path& path) {
  const GridManifest m = read_manifest(path);
  if (m.element != kind_of<T>()) {
    throw FormatError(path.string() + ": holds " + element_name(m.element) + " elements, expected " +
                      element_name(kind_of<T>()));
  }
  const std::vector<std::uint8_t> bytes = read_bytes(path);
  const std::size_t expected = m.dims.count() * sizeof(T);
  if (bytes.size() != expected) {
    throw FormatError(path.string() + ": payload is " + std::to_string(bytes.size()) + " bytes, dims " +
                      m.dims.str() + " need " + std::to_string(expected));
  }
  std::vector<T> values(m.dims.count());
  ByteReader r(bytes, path.string());
  r.get_all<T>(values);
  if constexpr (std::is_same_v<T, float>) {
    for (float v : values) {
      if (!std::isfinite(v)) throw FormatError(path.string() + ": non-finite value");
    }
  }
  if constexpr (std::is_same_v<T, std::uint8_t>) {
    for (std::uint8_t v : values) {
      if (v > 1) throw FormatError(path.string() + ": boolean grid holds value " + std::to_string(v));
    }
  }
  return Grid<T>(m.dims, std::move(values));
}

json matrix_entry(const std::string& name, Eigen::Index rows, Eigen::Index cols, std::size_t offset) {
  return {{"name", name}, {"shape", {rows, cols}}, {"offset", offset}};
}

json config_to_json(const DecoderConfig& c) {
  return {{"num_queries", c.num_queries},
          {"num_heads", c.num_heads},
          {"num_layers", c.num_layers},
          {"embed_dim", c.embed_dim},
          {"pe_dim", c.pe_dim},
          {"num_classes", c.num_classes},
          {"voxel_dims", {c.voxel_dims.h, c.voxel_dims.w, c.voxel_dims.d}},
          {"resolution_m", c.voxel_dims.resolution_m},
          {"seed", c.seed}};
}

DecoderConfig config_from_json(const json& j) {
  DecoderConfig c;
  c.num_queries = j.at("num_queries").get<std::size_t>();
  c.num_heads = j.at("num_heads").get<std::size_t>();
  c.num_layers = j.at("num_layers").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.pe_dim = j.at("pe_dim").get<std::size_t>();
  c.num_classes = j.at("num_classes").get<std::size_t>();
  const auto& d = j.at("voxel_dims");
  c.voxel_dims = {d.at(0).get<std::uint32_t>(), d.at(1).get<std::uint32_t>(), d.at(2).get<std::uint32_t>(),
                  j.at("resolution_m").get<double>()};
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

fs::path manifest_path(const fs::path& payload) {
  fs::path p = payload;
  p += ".json";
  return p;
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> bytes(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
    throw FormatError("cannot read " + path.string());
  }
  return bytes;
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("cannot write " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("cannot write " + path.string());
}

GridManifest read_manifest(const fs::path& payload) {
  const fs::path mpath = manifest_path(payload);
  if (!fs::exists(mpath)) {
    if (!fs::exists(payload)) throw FormatError("cannot open " + payload.string());
    // Headerless SemanticKITTI voxel file.
    const auto size = fs::file_size(payload);
    const GridDims kitti = GridDims::semantic_kitti();
    for (ElementKind k : {ElementKind::kU16, ElementKind::kU32, ElementKind::kU8}) {
      if (size == kitti.count() * element_width(k)) return {kitti, k, "semantic-kitti"};
    }
    throw FormatError(payload.string() + ": no manifest " + mpath.string() +
                      " and size does not match a 256x256x32 grid");
  }
  const auto bytes = read_bytes(mpath);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
    if (j.at("format").get<std::string>() != "voxpan-grid") throw FormatError(mpath.string() + ": not a grid manifest");
    if (j.at("version").get<int>() != 1) throw FormatError(mpath.string() + ": unsupported manifest version");
    GridManifest m;
    const auto& d = j.at("dims");
    if (!d.is_array() || d.size() != 3) throw FormatError(mpath.string() + ": dims must be [h, w, d]");
    m.dims = {d[0].get<std::uint32_t>(), d[1].get<std::uint32_t>(), d[2].get<std::uint32_t>(),
              j.value("resolution_m", 0.2)};
    m.dims.validate();
    m.element = element_from_name(j.at("element").get<std::string>(), mpath);
    m.taxonomy = j.value("taxonomy", std::string("semantic-kitti"));
    return m;
  } catch (const json::exception& e) {
    throw FormatError(mpath.string() + ": " + e.what());
  } catch (const InvalidInput& e) {
    throw FormatError(mpath.string() + ": " + e.what());
  }
}

void save_semantic(const fs::path& path, const SemanticGrid& grid, const std::string& taxonomy) {
  save_grid(path, grid, taxonomy);
}
void save_instances(const fs::path& path, const InstanceGrid& grid) { save_grid(path, grid, "semantic-kitti"); }
void save_mask(const fs::path& path, const BinaryMask3D& grid) { save_grid(path, grid, "semantic-kitti"); }
void save_logits(const fs::path& path, const MaskLogits3D& grid) { save_grid(path, grid, "semantic-kitti"); }

SemanticGrid load_semantic(const fs::path& path) { return load_grid<std::uint16_t>(path); }
InstanceGrid load_instances(const fs::path& path) { return load_grid<std::uint32_t>(path); }
BinaryMask3D load_mask(const fs::path& path) { return load_grid<std::uint8_t>(path); }
MaskLogits3D load_logits(const fs::path& path) { return load_grid<float>(path); }

void save_mask_set(const fs::path& path, const MaskSet& set) {
  set.dims.validate();
  ByteWriter w;
  w.put_raw("VPMS", 4);
  w.put<std::uint16_t>(kMaskSetVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(set.predictions.size()));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(set.num_classes));
  w.put<std::uint32_t>(set.dims.h);
  w.put<std::uint32_t>(set.dims.w);
  w.put<std::uint32_t>(set.dims.d);
  w.put<float>(static_cast<float>(set.dims.resolution_m));
  for (std::size_t i = 0; i < set.predictions.size(); ++i) {
    const auto& p = set.predictions[i];
    if (p.class_probs.size() != set.num_classes) {
      throw ShapeMismatch("mask set record " + std::to_string(i) + " has " + std::to_string(p.class_probs.size()) +
                          " class probabilities, header says " + std::to_string(set.num_classes));
    }
    require_same_shape(p.logits.dims(), set.dims, "mask set record logits");
    w.put<std::uint8_t>(p.score ? 1 : 0);
    w.put<float>(p.score ? static_cast<float>(*p.score) : 0.0f);
    for (double v : p.class_probs) w.put<float>(static_cast<float>(v));
    w.put_all<float>(p.logits.values());
  }
  write_bytes(path, w.bytes());
}

MaskSet load_mask_set(const fs::path& path) {
  const auto bytes = read_bytes(path);
  const std::string origin = path.string();
  ByteReader r(bytes, origin);
  if (r.get_raw(4) != "VPMS") throw FormatError(origin + ": bad magic, not a mask-set file");
  const auto version = r.get<std::uint16_t>();
  if (version != kMaskSetVersion) throw FormatError(origin + ": unsupported mask-set version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>();
  MaskSet set;
  set.num_classes = r.get<std::uint16_t>();
  set.dims.h = r.get<std::uint32_t>();
  set.dims.w = r.get<std::uint32_t>();
  set.dims.d = r.get<std::uint32_t>();
  const float res = r.get<float>();
  set.dims.resolution_m = static_cast<double>(res);
  try {
    set.dims.validate();
  } catch (const InvalidInput& e) {
    throw FormatError(origin + ": " + e.what());
  }
  const std::size_t voxels = set.dims.count();
  const std::size_t record = 1 + 4 + 4 * set.num_classes + 4 * voxels;
  if (r.remaining() != record * count) {
    throw FormatError(origin + ": header announces " + std::to_string(count) + " records of " +
                      std::to_string(record) + " bytes, payload has " + std::to_string(r.remaining()));
  }
  auto finite = [&](float v, std::size_t i) {
    if (!std::isfinite(v)) throw FormatError(origin + ": record " + std::to_string(i) + " holds a non-finite value");
    return v;
  };
  set.predictions.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    MaskPrediction p;
    const auto has_score = r.get<std::uint8_t>();
    if (has_score > 1) throw FormatError(origin + ": record " + std::to_string(i) + " has a bad score flag");
    const float score = finite(r.get<float>(), i);
    if (has_score) p.score = static_cast<double>(score);
    p.class_probs.resize(set.num_classes);
    for (double& v : p.class_probs) v = static_cast<double>(finite(r.get<float>(), i));
    std::vector<float> logits(voxels);
    r.get_all<float>(logits);
    for (float v : logits) finite(v, i);
    p.logits = MaskLogits3D(set.dims, std::move(logits));
    set.predictions.push_back(std::move(p));
  }
  return set;
}

void save_decoder_weights(const fs::path& path, const DecoderConfig& cfg, const DecoderWeights& weights) {
  weights.validate(cfg);
  ByteWriter w;
  json tensors = json::array();
  std::size_t offset = 0;
  auto put_matrix = [&](const std::string& name, const Matrix& m) {
    tensors.push_back(matrix_entry(name, m.rows(), m.cols(), offset));
    for (Eigen::Index i = 0; i < m.size(); ++i) w.put<float>(static_cast<float>(m.data()[i]));
    offset += static_cast<std::size_t>(m.size());
  };
  auto put_vector = [&](const std::string& name, const Vector& v) {
    tensors.push_back(matrix_entry(name, v.size(), 1, offset));
    for (Eigen::Index i = 0; i < v.size(); ++i) w.put<float>(static_cast<float>(v[i]));
    offset += static_cast<std::size_t>(v.size());
  };
  put_matrix("reference_points", weights.reference_points);
  put_matrix("mlp_w1", weights.mlp_w1);
  put_vector("mlp_b1", weights.mlp_b1);
  put_matrix("mlp_w2", weights.mlp_w2);
  put_vector("mlp_b2", weights.mlp_b2);
  for (std::size_t l = 0; l < weights.layers.size(); ++l) {
    const auto& lw = weights.layers[l];
    const std::string p = "layers." + std::to_string(l) + ".";
    put_matrix(p + "key_proj", lw.key_proj);
    put_matrix(p + "value_proj", lw.value_proj);
    put_vector(p + "fusion_w", lw.fusion_w);
    Vector b(1);
    b[0] = lw.fusion_b;
    put_vector(p + "fusion_b", b);
    put_matrix(p + "cls_w", lw.cls_w);
    put_vector(p + "cls_b", lw.cls_b);
  }
  json manifest{{"format", "voxpan-decoder-weights"},
                {"version", 1},
                {"dtype", "f32le"},
                {"config", config_to_json(cfg)},
                {"tensors", tensors}};
  write_bytes(path, w.bytes());
  write_text(manifest_path(path), manifest.dump(2) + "\n");
}

std::pair<DecoderConfig, DecoderWeights> load_decoder_weights(const fs::path& path) {
  const std::string origin = path.string();
  const auto mbytes = read_bytes(manifest_path(path));
  const auto payload = read_bytes(path);
  if (payload.size() % 4 != 0) throw FormatError(origin + ": payload is not a whole number of f32 values");
  std::vector<float> flat(payload.size() / 4);
  ByteReader r(payload, origin);
  r.get_all<float>(flat);
  for (float v : flat) {
    if (!std::isfinite(v)) throw FormatError(origin + ": non-finite weight");
  }
  try {
    const json j = json::parse(mbytes.begin(), mbytes.end());
    if (j.at("format").get<std::string>() != "voxpan-decoder-weights") {
      throw FormatError(origin + ": manifest is not a decoder weight manifest");
    }
    const DecoderConfig cfg = config_from_json(j.at("config"));
    cfg.validate();
    std::map<std::string, Matrix> table;
    for (const auto& t : j.at("tensors")) {
      const auto rows = t.at("shape").at(0).get<Eigen::Index>();
      const auto cols = t.at("shape").at(1).get<Eigen::Index>();
      const auto off = t.at("offset").get<std::size_t>();
      if (off + static_cast<std::size_t>(rows * cols) > flat.size()) {
        throw FormatError(origin + ": tensor " + t.at("name").get<std::string>() + " overruns the payload");
      }
      Matrix m(rows, cols);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(flat[off + i]);
      table[t.at("name").get<std::string>()] = std::move(m);
    }
    auto take = [&](const std::string& name) -> Matrix& {
      auto it = table.find(name);
      if (it == table.end()) throw FormatError(origin + ": missing tensor " + name);
      return it->second;
    };
    auto take_vec = [&](const std::string& name) -> Vector {
      const Matrix& m = take(name);
      return Eigen::Map<const Vector>(m.data(), m.size());
    };
    DecoderWeights w;
    w.reference_points = take("reference_points");
    w.mlp_w1 = take("mlp_w1");
    w.mlp_b1 = take_vec("mlp_b1");
    w.mlp_w2 = take("mlp_w2");
    w.mlp_b2 = take_vec("mlp_b2");
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
      const std::string p = "layers." + std::to_string(l) + ".";
      DecoderLayerWeights lw;
      lw.key_proj = take(p + "key_proj");
      lw.value_proj = take(p + "value_proj");
      lw.fusion_w = take_vec(p + "fusion_w");
      lw.fusion_b = take_vec(p + "fusion_b")[0];
      lw.cls_w = take(p + "cls_w");
      lw.cls_b = take_vec(p + "cls_b");
      w.layers.push_back(std::move(lw));
    }
    w.validate(cfg);
    return {cfg, std::move(w)};
  } catch (const json::exception& e) {
    throw FormatError(origin + ": " + e.what());
  }
}

}  // namespace voxpan::io
