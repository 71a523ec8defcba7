#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "voxpan/clustering.hpp"
#include "voxpan/decoder.hpp"
#include "voxpan/matching.hpp"
#include "voxpan/merging.hpp"
#include "voxpan/taxonomy.hpp"

namespace voxpan {

struct MetricSettings {
  double iou_min = 0.2;
  std::vector<std::string> categories{"car", "truck", "other-vehicle", "road"};
  bool skip_absent_classes = false;
};

// Every tunable of a run in one document. Sections and keys:
//
//   taxonomy: "semantic-kitti" | [{"id", "name", "kind"}, ...]
//   merge:    t_q, t_overlap, t_fov, alpha, beta, mask_threshold, apply_sigmoid
//   cluster:  default_radius, default_max_voxels, min_cluster_voxels,
//             radius {class name: r}, max_voxels {class name: n},
//             mark_dropped_unknown
//   loss:     lambda_cls, lambda_mask, num_decoder_layers, focal_gamma, focal_alpha
//   metrics:  iou_min, categories [names], skip_absent_classes
//   decoder:  seed, num_queries, num_heads, num_layers, embed_dim, pe_dim,
//             voxel_dims [h, w, d], resolution_m
//
// Unknown keys are rejected; absent keys keep their defaults.
struct RunConfig {
  ClassTaxonomy taxonomy = ClassTaxonomy::semantic_kitti();
  MergeConfig merge;
  ClusterParams cluster = ClusterParams::semantic_kitti(ClassTaxonomy::semantic_kitti());
  bool mark_dropped_unknown = false;
  LossWeights loss;
  MetricSettings metrics;
  DecoderConfig decoder;

  std::vector<ClassId> eval_classes() const;

  // Throws InvalidInput on unknown keys, wrong types or invalid values.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  // Fully resolved document, defaults included.
  nlohmann::json to_json() const;
};

}  // namespace voxpan
