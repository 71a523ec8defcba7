#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "voxpan/grid.hpp"
#include "voxpan/taxonomy.hpp"

namespace voxpan {

inline constexpr double kDiceSmoothing = 1.0;

// 1 - (2*sum(p*g) + eps) / (sum(p) + sum(g) + eps) on probabilities.
double dice_loss_probs(std::span<const double> probs, std::span<const std::uint8_t> target,
                       double eps = kDiceSmoothing);

// Soft dice on sigmoid(logits) against a binary target of the same dims.
double dice_loss(const MaskLogits3D& logits, const BinaryMask3D& target, double eps = kDiceSmoothing);

struct FocalParams {
  double gamma = 2.0;
  double alpha = 0.25;
};

// Sigmoid focal loss summed over classes. The target is one-hot at
// `gt_class`, all-zero when it is nullopt ("no object"). Probabilities must
// lie strictly inside (0, 1).
double focal_loss(std::span<const double> probs, std::optional<std::size_t> gt_class, const FocalParams& fp = {});

// Per-voxel class scores, voxel-major: values[v * num_classes + k] is the
// score of taxonomy.dense_ids()[k] at voxel v.
struct VoxelClassScores {
  std::size_t num_classes = 0;
  std::vector<double> values;
};

// Mean over voxels with known ground truth of w[gt] * -log softmax(scores)[gt].
// Weights are indexed like the score vectors. Returns 0 when no voxel counts.
double weighted_cross_entropy(const VoxelClassScores& scores, const SemanticGrid& gt, const ClassTaxonomy& taxonomy,
                              std::span<const double> class_weights);

}  // namespace voxpan
