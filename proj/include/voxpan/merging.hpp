#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "voxpan/grid.hpp"
#include "voxpan/taxonomy.hpp"

namespace voxpan {

// One foreground candidate from the mask decoder.
struct MaskPrediction {
  // Probabilities over the taxonomy's thing classes, in thing_ids() order.
  std::vector<double> class_probs;
  // Coarse (typically quarter-scale) mask logits.
  MaskLogits3D logits;
  // Precomputed confidence; merge() computes one when absent.
  std::optional<double> score;
};

struct MergeConfig {
  double t_q = 0.2;
  double t_overlap = 0.5;
  double t_fov = 0.5;
  double alpha = 1.0 / 3.0;
  double beta = 1.0;
  double mask_threshold = 0.25;
  // Pass coarse logits through a sigmoid before scoring and binarizing.
  bool apply_sigmoid = false;

  void validate() const;
};

// p^alpha * q^beta, with p the largest class probability and q the mean of
// the logits above cfg.mask_threshold (0 when none is above).
double confidence_score(const MaskPrediction& pred, const MergeConfig& cfg);

// Relabels every thing-class voxel to the free class.
SemanticGrid zero_foreground(const SemanticGrid& sem, const ClassTaxonomy& taxonomy);

enum class MergeOutcome { kKept, kLowScore, kOverlap, kOutsideFov };

const char* to_string(MergeOutcome outcome);

// What happened to one prediction during merging.
struct MergeDecision {
  std::size_t prediction = 0;  // index into the input list
  double score = 0.0;
  MergeOutcome outcome = MergeOutcome::kLowScore;
  InstanceId instance_id = 0;  // nonzero only when kept
  ClassId class_id = 0;        // argmax thing class
  std::size_t mask_voxels = 0;     // |binarized mask|
  std::size_t free_voxels = 0;     // |binarized mask & free|
  std::size_t free_in_fov = 0;     // |binarized mask & free & fov|
};

struct MergeResult {
  SemanticGrid semantic;
  InstanceGrid instances;
  // In processing order (descending score, ties by input index).
  std::vector<MergeDecision> decisions;

  std::size_t kept() const;
};

// Mask-wise merging of predictions into a background grid.
//
// Predictions are visited in descending score order (stable on ties). A
// prediction is considered only when its score exceeds t_q; its upsampled and
// binarized mask is intersected with the voxels that are still free, and the
// prediction is kept when both |free part| / |mask| > t_overlap and
// |free part & fov| / |mask| > t_fov. Kept masks write their argmax thing
// class and the next instance id (1, 2, ...) into the free part.
//
// `bg` is used as-is; callers pass the output of zero_foreground().
MergeResult merge(const SemanticGrid& bg, const FovMask& fov, const std::vector<MaskPrediction>& preds,
                  const ClassTaxonomy& taxonomy, const MergeConfig& cfg = {});

}  // namespace voxpan
