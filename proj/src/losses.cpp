#include "voxpan/losses.hpp"

#include <cmath>
#include <string>

namespace voxpan {

double dice_loss_probs(std::span<const double> probs, std::span<const std::uint8_t> target, double eps) {
  if (probs.size() != target.size()) {
    throw ShapeMismatch("dice_loss: " + std::to_string(probs.size()) + " probabilities vs " +
                        std::to_string(target.size()) + " target voxels");
  }
  double inter = 0.0, psum = 0.0, gsum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double g = target[i] ? 1.0 : 0.0;
    inter += probs[i] * g;
    psum += probs[i];
    gsum += g;
  }
  return 1.0 - (2.0 * inter + eps) / (psum + gsum + eps);
}

double dice_loss(const MaskLogits3D& logits, const BinaryMask3D& target, double eps) {
  require_same_shape(logits.dims(), target.dims(), "dice_loss");
  std::vector<double> probs(logits.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    probs[i] = 1.0 / (1.0 + std::exp(-static_cast<double>(logits[i])));
  }
  return dice_loss_probs(probs, target.values(), eps);
}

double focal_loss(std::span<const double> probs, std::optional<std::size_t> gt_class, const FocalParams& fp) {
  if (gt_class && *gt_class >= probs.size()) {
    throw InvalidInput("focal_loss: target class " + std::to_string(*gt_class) + " out of range");
  }
  double loss = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    const double p = probs[j];
    if (!(p > 0.0 && p < 1.0)) {
      throw InvalidInput("focal_loss: probability " + std::to_string(p) + " outside (0, 1)");
    }
    if (gt_class && *gt_class == j) {
      loss -= fp.alpha * std::pow(1.0 - p, fp.gamma) * std::log(p);
    } else {
      loss -= (1.0 - fp.alpha) * std::pow(p, fp.gamma) * std::log1p(-p);
    }
  }
  return loss;
}

double weighted_cross_entropy(const VoxelClassScores& scores, const SemanticGrid& gt, const ClassTaxonomy& taxonomy,
                              std::span<const double> class_weights) {
  const std::size_t k = taxonomy.dense_ids().size();
  if (scores.num_classes != k) {
    throw ShapeMismatch("weighted_cross_entropy: score vectors have " + std::to_string(scores.num_classes) +
                        " entries, taxonomy has " + std::to_string(k) + " classes");
  }
  if (class_weights.size() != k) throw ShapeMismatch("weighted_cross_entropy: class weight count mismatch");
  if (scores.values.size() != gt.size() * k) throw ShapeMismatch("weighted_cross_entropy: voxel count mismatch");

  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t v = 0; v < gt.size(); ++v) {
    if (taxonomy.is_unknown(gt[v])) continue;
    const std::size_t target = taxonomy.dense_index(gt[v]);
    const double* s = scores.values.data() + v * k;
    double mx = s[0];
    for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, s[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < k; ++c) z += std::exp(s[c] - mx);
    const double log_prob = s[target] - mx - std::log(z);
    total += class_weights[target] * -log_prob;
    ++counted;
  }
  return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

}  // namespace voxpan
