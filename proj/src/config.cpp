#include "voxpan/config.hpp"

#include <fstream>
#include <set>

#include "voxpan/errors.hpp"

namespace voxpan {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& section) {
  if (!obj.is_object()) throw InvalidInput("config: '" + section + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw InvalidInput("config: unknown key '" + section + "." + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

ClassTaxonomy parse_taxonomy(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "semantic-kitti") {
      throw InvalidInput("config: unknown taxonomy '" + j.get<std::string>() + "'");
    }
    return ClassTaxonomy::semantic_kitti();
  }
  if (!j.is_array()) throw InvalidInput("config: taxonomy must be \"semantic-kitti\" or an array of classes");
  std::vector<ClassEntry> entries;
  for (const auto& e : j) {
    reject_unknown(e, {"id", "name", "kind"}, "taxonomy[]");
    entries.push_back({e.at("id").get<ClassId>(), e.at("name").get<std::string>(),
                       class_kind_from_string(e.at("kind").get<std::string>())});
  }
  return ClassTaxonomy(std::move(entries));
}

json taxonomy_json(const ClassTaxonomy& t) {
  json arr = json::array();
  for (const auto& e : t.entries()) {
    arr.push_back({{"id", e.id}, {"name", e.name}, {"kind", std::string(to_string(e.kind))}});
  }
  return arr;
}

}  // namespace

std::vector<ClassId> RunConfig::eval_classes() const {
  std::vector<ClassId> out;
  for (const auto& name : metrics.categories) out.push_back(taxonomy.id_of(name));
  return out;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  try {
    reject_unknown(j, {"taxonomy", "merge", "cluster", "loss", "metrics", "decoder"}, "root");
    if (j.contains("taxonomy")) c.taxonomy = parse_taxonomy(j.at("taxonomy"));
    c.cluster = ClusterParams::semantic_kitti(ClassTaxonomy::semantic_kitti());
    if (j.contains("taxonomy") && !j.at("taxonomy").is_string()) c.cluster = ClusterParams{};

    if (j.contains("merge")) {
      const auto& m = j.at("merge");
      reject_unknown(m, {"t_q", "t_overlap", "t_fov", "alpha", "beta", "mask_threshold", "apply_sigmoid"}, "merge");
      read(m, "t_q", c.merge.t_q);
      read(m, "t_overlap", c.merge.t_overlap);
      read(m, "t_fov", c.merge.t_fov);
      read(m, "alpha", c.merge.alpha);
      read(m, "beta", c.merge.beta);
      read(m, "mask_threshold", c.merge.mask_threshold);
      read(m, "apply_sigmoid", c.merge.apply_sigmoid);
    }
    c.merge.validate();

    if (j.contains("cluster")) {
      const auto& m = j.at("cluster");
      reject_unknown(m,
                     {"default_radius", "default_max_voxels", "min_cluster_voxels", "radius", "max_voxels",
                      "mark_dropped_unknown"},
                     "cluster");
      read(m, "default_radius", c.cluster.default_radius);
      read(m, "default_max_voxels", c.cluster.default_max_voxels);
      read(m, "min_cluster_voxels", c.cluster.min_cluster_voxels);
      read(m, "mark_dropped_unknown", c.mark_dropped_unknown);
      if (m.contains("radius")) {
        for (const auto& [name, v] : m.at("radius").items()) c.cluster.radius[c.taxonomy.id_of(name)] = v.get<double>();
      }
      if (m.contains("max_voxels")) {
        for (const auto& [name, v] : m.at("max_voxels").items()) {
          c.cluster.max_voxels[c.taxonomy.id_of(name)] = v.get<std::size_t>();
        }
      }
    }
    c.cluster.validate();

    if (j.contains("loss")) {
      const auto& m = j.at("loss");
      reject_unknown(m, {"lambda_cls", "lambda_mask", "num_decoder_layers", "focal_gamma", "focal_alpha"}, "loss");
      read(m, "lambda_cls", c.loss.lambda_cls);
      read(m, "lambda_mask", c.loss.lambda_mask);
      read(m, "num_decoder_layers", c.loss.num_decoder_layers);
      read(m, "focal_gamma", c.loss.focal.gamma);
      read(m, "focal_alpha", c.loss.focal.alpha);
    }
    c.loss.validate();

    if (j.contains("metrics")) {
      const auto& m = j.at("metrics");
      reject_unknown(m, {"iou_min", "categories", "skip_absent_classes"}, "metrics");
      read(m, "iou_min", c.metrics.iou_min);
      read(m, "categories", c.metrics.categories);
      read(m, "skip_absent_classes", c.metrics.skip_absent_classes);
    }
    if (!(c.metrics.iou_min >= 0.0 && c.metrics.iou_min <= 1.0)) throw InvalidInput("config: iou_min outside [0, 1]");
    for (ClassId id : c.eval_classes()) {
      const ClassKind k = c.taxonomy.kind(id);
      if (k != ClassKind::kThing && k != ClassKind::kStuff) {
        throw InvalidInput("config: evaluated category " + std::to_string(id) + " is neither thing nor stuff");
      }
    }

    if (j.contains("decoder")) {
      const auto& m = j.at("decoder");
      reject_unknown(m,
                     {"seed", "num_queries", "num_heads", "num_layers", "embed_dim", "pe_dim", "voxel_dims",
                      "resolution_m"},
                     "decoder");
      read(m, "seed", c.decoder.seed);
      read(m, "num_queries", c.decoder.num_queries);
      read(m, "num_heads", c.decoder.num_heads);
      read(m, "num_layers", c.decoder.num_layers);
      read(m, "embed_dim", c.decoder.embed_dim);
      read(m, "pe_dim", c.decoder.pe_dim);
      if (m.contains("voxel_dims")) {
        const auto d = m.at("voxel_dims").get<std::vector<std::uint32_t>>();
        if (d.size() != 3) throw InvalidInput("config: decoder.voxel_dims must be [h, w, d]");
        c.decoder.voxel_dims.h = d[0];
        c.decoder.voxel_dims.w = d[1];
        c.decoder.voxel_dims.d = d[2];
      }
      read(m, "resolution_m", c.decoder.voxel_dims.resolution_m);
    }
    c.decoder.num_classes = c.taxonomy.thing_ids().size();
    c.decoder.validate();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

json RunConfig::to_json() const {
  json radius = json::object(), caps = json::object();
  for (const auto& [id, r] : cluster.radius) radius[taxonomy.entry(id).name] = r;
  for (const auto& [id, n] : cluster.max_voxels) caps[taxonomy.entry(id).name] = n;
  return {
      {"taxonomy", taxonomy_json(taxonomy)},
      {"merge",
       {{"t_q", merge.t_q},
        {"t_overlap", merge.t_overlap},
        {"t_fov", merge.t_fov},
        {"alpha", merge.alpha},
        {"beta", merge.beta},
        {"mask_threshold", merge.mask_threshold},
        {"apply_sigmoid", merge.apply_sigmoid}}},
      {"cluster",
       {{"default_radius", cluster.default_radius},
        {"default_max_voxels", cluster.default_max_voxels},
        {"min_cluster_voxels", cluster.min_cluster_voxels},
        {"radius", radius},
        {"max_voxels", caps},
        {"mark_dropped_unknown", mark_dropped_unknown}}},
      {"loss",
       {{"lambda_cls", loss.lambda_cls},
        {"lambda_mask", loss.lambda_mask},
        {"num_decoder_layers", loss.num_decoder_layers},
        {"focal_gamma", loss.focal.gamma},
        {"focal_alpha", loss.focal.alpha}}},
      {"metrics",
       {{"iou_min", metrics.iou_min},
        {"categories", metrics.categories},
        {"skip_absent_classes", metrics.skip_absent_classes}}},
      {"decoder",
       {{"seed", decoder.seed},
        {"num_queries", decoder.num_queries},
        {"num_heads", decoder.num_heads},
        {"num_layers", decoder.num_layers},
        {"embed_dim", decoder.embed_dim},
        {"pe_dim", decoder.pe_dim},
        {"voxel_dims", {decoder.voxel_dims.h, decoder.voxel_dims.w, decoder.voxel_dims.d}},
        {"resolution_m", decoder.voxel_dims.resolution_m}}},
  };
}

}  // namespace voxpan
