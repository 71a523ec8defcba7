#include "voxpan/matching.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "voxpan/voxel_ops.hpp"

namespace voxpan {

Assignment hungarian(const CostMatrix& costs) {
  const std::size_t n = costs.cols();  // ground truths, all must be assigned
  const std::size_t m = costs.rows();  // predictions
  if (n > m) {
    throw ShapeMismatch("hungarian: " + std::to_string(n) + " ground-truth instances exceed " + std::to_string(m) +
                        " prediction slots");
  }
  for (double v : costs.values()) {
    if (!std::isfinite(v)) throw InvalidInput("hungarian: non-finite cost");
  }
  Assignment out;
  out.col_of_row.assign(m, std::nullopt);
  if (n == 0) return out;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based: gt i in 1..n, prediction j in 1..m, slot 0 is the virtual root.
  auto a = [&](std::size_t i, std::size_t j) { return costs(j - 1, i - 1); };
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<std::size_t> owner(m + 1, 0), way(m + 1, 0);
  std::vector<bool> used(m + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    owner[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const std::size_t i0 = owner[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  out.row_of_col.assign(n, 0);
  for (std::size_t j = 1; j <= m; ++j) {
    if (owner[j] != 0) {
      out.row_of_col[owner[j] - 1] = j - 1;
      out.col_of_row[j - 1] = owner[j] - 1;
    }
  }
  for (std::size_t c = 0; c < n; ++c) out.total_cost += costs(out.row_of_col[c], c);
  return out;
}

void LossWeights::validate() const {
  if (!(lambda_cls >= 0.0) || !(lambda_mask >= 0.0)) throw InvalidInput("loss weights must be >= 0");
  if (num_decoder_layers < 1) throw InvalidInput("num_decoder_layers must be >= 1");
  if (!(focal.gamma >= 0.0) || !(focal.alpha >= 0.0 && focal.alpha <= 1.0)) {
    throw InvalidInput("focal parameters need gamma >= 0 and alpha in [0, 1]");
  }
}

BinaryMask3D downsample_majority(const BinaryMask3D& fine, const GridDims& coarse) {
  const ScaleFactors f = scale_factors(coarse, fine.dims());
  const std::size_t block = static_cast<std::size_t>(f.fx) * f.fy * f.fz;
  std::vector<std::uint32_t> counts(coarse.count(), 0);
  const GridDims& fd = fine.dims();
  for (std::uint32_t x = 0; x < fd.h; ++x) {
    for (std::uint32_t y = 0; y < fd.w; ++y) {
      for (std::uint32_t z = 0; z < fd.d; ++z) {
        if (fine.at(x, y, z)) ++counts[coarse.index(x / f.fx, y / f.fy, z / f.fz)];
      }
    }
  }
  BinaryMask3D out(coarse);
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = 2 * counts[i] >= block ? 1 : 0;
  return out;
}

std::vector<GtInstance> gt_instances(const SemanticGrid& sem, const InstanceGrid& ids, const ClassTaxonomy& taxonomy,
                                     const GridDims& coarse) {
  require_same_shape(sem.dims(), ids.dims(), "gt_instances");
  scale_factors(coarse, sem.dims());
  std::map<InstanceId, std::pair<ClassId, std::vector<std::uint32_t>>> groups;
  for (std::size_t i = 0; i < sem.size(); ++i) {
    if (ids[i] == 0 || !taxonomy.is_thing(sem[i])) continue;
    auto& g = groups[ids[i]];
    g.first = sem[i];
    g.second.push_back(static_cast<std::uint32_t>(i));
  }
  std::vector<GtInstance> out;
  out.reserve(groups.size());
  for (auto& [id, g] : groups) {
    BinaryMask3D full(sem.dims(), 0);
    for (std::uint32_t v : g.second) full[v] = 1;
    out.push_back({g.first, id, downsample_majority(full, coarse)});
  }
  return out;
}

namespace {

std::vector<double> sigmoid_probs(const MaskLogits3D& logits) {
  std::vector<double> p(logits.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = 1.0 / (1.0 + std::exp(-static_cast<double>(logits[i])));
  return p;
}

}  // namespace

CostMatrix matching_cost(const std::vector<MaskPrediction>& preds, const std::vector<GtInstance>& gts,
                         const ClassTaxonomy& taxonomy, const LossWeights& w) {
  w.validate();
  std::vector<std::size_t> gt_class(gts.size());
  for (std::size_t j = 0; j < gts.size(); ++j) gt_class[j] = taxonomy.thing_index(gts[j].class_id);
  CostMatrix costs(preds.size(), gts.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& pred = preds[i];
    for (const auto& g : gts) require_same_shape(pred.logits.dims(), g.mask.dims(), "matching_cost: mask scale");
    const std::vector<double> probs = sigmoid_probs(pred.logits);
    for (std::size_t j = 0; j < gts.size(); ++j) {
      const double cls = focal_loss(pred.class_probs, gt_class[j], w.focal);
      const double mask = dice_loss_probs(probs, gts[j].mask.values());
      costs(i, j) = w.lambda_cls * cls + w.lambda_mask * mask;
    }
  }
  return costs;
}

LayerLossTerms layer_loss_terms(const std::vector<MaskPrediction>& preds, const std::vector<GtInstance>& gts,
                                const Assignment& assignment, const ClassTaxonomy& taxonomy, const LossWeights& w) {
  if (assignment.col_of_row.size() != preds.size()) {
    throw ShapeMismatch("layer_loss_terms: assignment does not cover the prediction list");
  }
  LayerLossTerms t;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& col = assignment.col_of_row[i];
    if (!col) {
      t.unmatched_focal.push_back(focal_loss(preds[i].class_probs, std::nullopt, w.focal));
      continue;
    }
    const GtInstance& g = gts.at(*col);
    t.matched_focal.push_back(focal_loss(preds[i].class_probs, taxonomy.thing_index(g.class_id), w.focal));
    t.matched_dice.push_back(dice_loss(preds[i].logits, g.mask));
  }
  return t;
}

double instance_loss(const std::vector<LayerLossTerms>& per_layer, const LossWeights& w) {
  w.validate();
  if (per_layer.size() != w.num_decoder_layers) {
    throw InvalidInput("instance_loss: expected " + std::to_string(w.num_decoder_layers) + " layers, got " +
                       std::to_string(per_layer.size()));
  }
  double total = 0.0;
  for (const auto& t : per_layer) {
    double cls = 0.0;
    for (double v : t.matched_focal) cls += v;
    for (double v : t.unmatched_focal) cls += v;
    const std::size_t n_cls = t.matched_focal.size() + t.unmatched_focal.size();
    double mask = 0.0;
    for (double v : t.matched_dice) mask += v;
    const double l_cls = n_cls == 0 ? 0.0 : cls / static_cast<double>(n_cls);
    const double l_mask = t.matched_dice.empty() ? 0.0 : mask / static_cast<double>(t.matched_dice.size());
    total += w.lambda_cls * l_cls + w.lambda_mask * l_mask;
  }
  return total;
}

}  // namespace voxpan
