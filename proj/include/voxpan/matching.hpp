#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "voxpan/grid.hpp"
#include "voxpan/losses.hpp"
#include "voxpan/merging.hpp"
#include "voxpan/taxonomy.hpp"

namespace voxpan {

// Row-major matrix of matching costs: rows are predictions, columns
// ground-truth instances.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> values_;
};

struct Assignment {
  // row_of_col[j] is the prediction matched to ground truth j.
  std::vector<std::size_t> row_of_col;
  // col_of_row[i] is the ground truth matched to prediction i, if any.
  std::vector<std::optional<std::size_t>> col_of_row;
  // Sum of the matched costs, accumulated in column order.
  double total_cost = 0.0;
};

// Minimum-cost assignment of every column to a distinct row (Kuhn-Munkres with
// potentials, O(cols^2 * rows)). Throws ShapeMismatch when cols > rows and
// InvalidInput on non-finite costs.
Assignment hungarian(const CostMatrix& costs);

struct LossWeights {
  double lambda_cls = 1.0;
  double lambda_mask = 2.0;
  std::size_t num_decoder_layers = 3;
  FocalParams focal{};

  void validate() const;
};

struct GtInstance {
  ClassId class_id = 0;
  InstanceId instance_id = 0;
  // Mask at the prediction (coarse) scale.
  BinaryMask3D mask;
};

// Majority pooling by integer factors; a block with at least half of its
// voxels set becomes set.
BinaryMask3D downsample_majority(const BinaryMask3D& fine, const GridDims& coarse);

// One GtInstance per nonzero instance id carrying a thing label, masks pooled
// to `coarse` dims. Ordered by instance id.
std::vector<GtInstance> gt_instances(const SemanticGrid& sem, const InstanceGrid& ids, const ClassTaxonomy& taxonomy,
                                     const GridDims& coarse);

// cost(i, j) = lambda_cls * focal(pred_i, class_j) + lambda_mask * dice(pred_i, mask_j).
CostMatrix matching_cost(const std::vector<MaskPrediction>& preds, const std::vector<GtInstance>& gts,
                         const ClassTaxonomy& taxonomy, const LossWeights& w = {});

// Loss terms of one decoder layer after matching.
struct LayerLossTerms {
  std::vector<double> matched_focal;    // matched predictions vs their gt class
  std::vector<double> matched_dice;     // matched predictions vs their gt mask
  std::vector<double> unmatched_focal;  // unmatched predictions vs "no object"
};

LayerLossTerms layer_loss_terms(const std::vector<MaskPrediction>& preds, const std::vector<GtInstance>& gts,
                                const Assignment& assignment, const ClassTaxonomy& taxonomy, const LossWeights& w = {});

// Sum over layers of lambda_cls * L_cls + lambda_mask * L_mask, where L_cls
// averages focal losses over all predictions and L_mask averages dice over
// matched pairs (0 without pairs).
double instance_loss(const std::vector<LayerLossTerms>& per_layer, const LossWeights& w = {});

}  // namespace voxpan
