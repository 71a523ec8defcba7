#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "voxpan/grid.hpp"
#include "voxpan/taxonomy.hpp"

namespace voxpan {

// Voxel set of one instance (thing) or of a whole class (stuff).
struct Segment {
  ClassId class_id = 0;
  // Instance id for things, the class id for stuff.
  std::uint32_t key = 0;
  // Sorted flat voxel indices.
  std::vector<std::uint32_t> voxels;
};

// Segments for every class in `eval_classes`: one per distinct nonzero
// instance id for thing classes, one per present stuff class. Voxels labelled
// unknown never enter a segment. Output is ordered by (class, key).
std::vector<Segment> extract_segments(const SemanticGrid& sem, const InstanceGrid& ids,
                                      const ClassTaxonomy& taxonomy, const std::vector<ClassId>& eval_classes);

// IoU of two sorted voxel lists, skipping voxels set in `ignore`.
double segment_iou(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b,
                   const BinaryMask3D* ignore = nullptr);

struct MatchedPair {
  std::size_t pred = 0;  // index into the prediction segment list
  std::size_t gt = 0;    // index into the ground-truth segment list
  double iou = 0.0;
};

struct CategoryMatch {
  std::vector<MatchedPair> tp;
  std::vector<std::size_t> fp;  // unmatched prediction indices
  std::vector<std::size_t> fn;  // unmatched ground-truth indices
};

struct SegmentMatchReport {
  double iou_min = 0.2;
  std::map<ClassId, CategoryMatch> categories;
};

inline constexpr double kDefaultMatchIou = 0.2;

// Greedy maximum-IoU matching inside each category. Pairs are accepted in
// descending IoU order (ties: lower pred index, then lower gt index) while
// IoU >= iou_min and both sides are unmatched. Every class appearing in
// either list, plus every class in `categories`, gets an entry.
SegmentMatchReport greedy_match(const std::vector<Segment>& preds, const std::vector<Segment>& gts,
                                double iou_min = kDefaultMatchIou, const BinaryMask3D* ignore = nullptr,
                                const std::vector<ClassId>& categories = {});

struct CategoryScores {
  double prq = 0.0, rsq = 0.0, rrq = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0;
  // False when the category had no segment on either side.
  bool evaluated = false;
};

struct MeanScores {
  double prq = 0.0, rsq = 0.0, rrq = 0.0;
  std::size_t categories = 0;
};

struct PanopticScores {
  std::map<ClassId, CategoryScores> per_category;
  MeanScores all, things, stuff;
};

// PRQ = sum(IoU over TP) / (TP + FP/2 + FN/2), RSQ = sum(IoU) / TP,
// RRQ = TP / (TP + FP/2 + FN/2); zero denominators give 0. Means are
// unweighted over evaluated categories; the thing/stuff split needs a taxonomy.
PanopticScores panoptic_scores(const SegmentMatchReport& report, const ClassTaxonomy* taxonomy = nullptr);

// Convenience wrapper: extract, match with gt-unknown voxels ignored, score.
struct PanopticEvaluation {
  SegmentMatchReport report;
  PanopticScores scores;
  std::size_t pred_segments = 0;
  std::size_t gt_segments = 0;
};

PanopticEvaluation evaluate_panoptic(const SemanticGrid& pred_sem, const InstanceGrid& pred_ids,
                                     const SemanticGrid& gt_sem, const InstanceGrid& gt_ids,
                                     const ClassTaxonomy& taxonomy, const std::vector<ClassId>& eval_classes,
                                     double iou_min = kDefaultMatchIou);

// Mask of voxels labelled unknown.
BinaryMask3D unknown_mask(const SemanticGrid& sem, const ClassTaxonomy& taxonomy);

// Occupancy IoU (occupied = not free). Voxels labelled unknown in either grid
// are excluded, so the measure is symmetric. 0 for an empty union.
double ssc_iou(const SemanticGrid& pred, const SemanticGrid& gt, const ClassTaxonomy& taxonomy);

struct SscScores {
  std::size_t evaluable_voxels = 0;
  std::optional<double> iou;
  std::vector<ClassId> classes;
  // Per class in `classes`; nullopt for classes skipped as absent.
  std::vector<std::optional<double>> class_iou;
  std::optional<double> miou;
};

// Per semantic class IoU and their mean. Classes absent from both grids score
// 0 unless skip_absent, in which case they are left out of the mean.
SscScores ssc_scores(const SemanticGrid& pred, const SemanticGrid& gt, const ClassTaxonomy& taxonomy,
                     bool skip_absent = false);

struct MiouResult {
  std::vector<double> per_class;  // taxonomy.semantic_ids() order
  double mean = 0.0;
};

MiouResult ssc_miou(const SemanticGrid& pred, const SemanticGrid& gt, const ClassTaxonomy& taxonomy,
                    bool skip_absent = false);

}  // namespace voxpan
