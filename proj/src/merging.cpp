#include "voxpan/merging.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "voxpan/voxel_ops.hpp"

namespace voxpan {

namespace {

void check_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw InvalidInput(std::string("merge config: ") + name + " must lie in [0, 1]");
  }
}

MaskLogits3D sigmoid_of(const MaskLogits3D& logits) {
  MaskLogits3D out(logits.dims());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(logits[i]))));
  }
  return out;
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

void MergeConfig::validate() const {
  check_unit(t_q, "t_q");
  check_unit(t_overlap, "t_overlap");
  check_unit(t_fov, "t_fov");
  check_unit(mask_threshold, "mask_threshold");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw InvalidInput("merge config: alpha and beta must be >= 0");
}

const char* to_string(MergeOutcome outcome) {
  switch (outcome) {
    case MergeOutcome::kKept: return "kept";
    case MergeOutcome::kLowScore: return "score";
    case MergeOutcome::kOverlap: return "overlap";
    case MergeOutcome::kOutsideFov: return "fov";
  }
  return "score";
}

double confidence_score(const MaskPrediction& pred, const MergeConfig& cfg) {
  if (pred.class_probs.empty()) throw InvalidInput("confidence_score: empty class_probs");
  const double p = *std::max_element(pred.class_probs.begin(), pred.class_probs.end());
  double sum = 0.0;
  std::size_t n = 0;
  auto accumulate = [&](double v) {
    if (!std::isfinite(v)) throw InvalidInput("confidence_score: non-finite mask logit");
    if (v > cfg.mask_threshold) {
      sum += v;
      ++n;
    }
  };
  if (cfg.apply_sigmoid) {
    for (float v : pred.logits.values()) accumulate(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
  } else {
    for (float v : pred.logits.values()) accumulate(static_cast<double>(v));
  }
  const double q = n == 0 ? 0.0 : sum / static_cast<double>(n);
  return std::pow(p, cfg.alpha) * std::pow(q, cfg.beta);
}

SemanticGrid zero_foreground(const SemanticGrid& sem, const ClassTaxonomy& taxonomy) {
  SemanticGrid out = sem;
  const auto& lut = taxonomy.thing_lut();
  const ClassId free_id = taxonomy.free_id();
  for (ClassId& label : out.values()) {
    if (label < lut.size() && lut[label]) label = free_id;
  }
  return out;
}

std::size_t MergeResult::kept() const {
  return static_cast<std::size_t>(std::count_if(decisions.begin(), decisions.end(), [](const MergeDecision& d) {
    return d.outcome == MergeOutcome::kKept;
  }));
}

MergeResult merge(const SemanticGrid& bg, const FovMask& fov, const std::vector<MaskPrediction>& preds,
                  const ClassTaxonomy& taxonomy, const MergeConfig& cfg) {
  cfg.validate();
  const GridDims& dims = bg.dims();
  require_same_shape(dims, fov.dims(), "merge: fov vs background");
  const std::size_t thing_count = taxonomy.thing_ids().size();
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    if (p.class_probs.size() != thing_count) {
      throw InvalidInput("merge: prediction " + std::to_string(i) + " has " +
                         std::to_string(p.class_probs.size()) + " class probabilities, taxonomy has " +
                         std::to_string(thing_count) + " thing classes");
    }
    scale_factors(p.logits.dims(), dims);
  }

  std::vector<double> scores(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    scores[i] = preds[i].score ? *preds[i].score : confidence_score(preds[i], cfg);
  }
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  MergeResult result{bg, InstanceGrid(dims, 0), {}};
  result.decisions.reserve(preds.size());
  SemanticGrid& sem = result.semantic;
  InstanceGrid& ids = result.instances;
  const ClassId free_id = taxonomy.free_id();
  InstanceId next_id = 1;
  std::vector<std::uint32_t> free_part;

  for (std::size_t i : order) {
    const MaskPrediction& pred = preds[i];
    MergeDecision dec;
    dec.prediction = i;
    dec.score = scores[i];
    dec.class_id = taxonomy.thing_ids()[argmax(pred.class_probs)];
    if (!(scores[i] > cfg.t_q)) {
      dec.outcome = MergeOutcome::kLowScore;
      result.decisions.push_back(dec);
      continue;
    }
    const std::vector<std::uint32_t> mask =
        cfg.apply_sigmoid ? upsample_binarize_indices(sigmoid_of(pred.logits), dims, cfg.mask_threshold)
                          : upsample_binarize_indices(pred.logits, dims, cfg.mask_threshold);
    free_part.clear();
    std::size_t in_fov = 0;
    for (std::uint32_t v : mask) {
      if (sem[v] != free_id) continue;
      free_part.push_back(v);
      in_fov += fov[v] != 0;
    }
    dec.mask_voxels = mask.size();
    dec.free_voxels = free_part.size();
    dec.free_in_fov = in_fov;

    // An empty binarized mask has no defined ratio and is treated as a conflict.
    const double total = static_cast<double>(mask.size());
    const bool overlap_ok = !mask.empty() && static_cast<double>(free_part.size()) / total > cfg.t_overlap;
    const bool fov_ok = !mask.empty() && static_cast<double>(in_fov) / total > cfg.t_fov;
    if (!overlap_ok) {
      dec.outcome = MergeOutcome::kOverlap;
    } else if (!fov_ok) {
      dec.outcome = MergeOutcome::kOutsideFov;
    } else {
      dec.outcome = MergeOutcome::kKept;
      dec.instance_id = next_id;
      for (std::uint32_t v : free_part) {
        sem[v] = dec.class_id;
        ids[v] = next_id;
      }
      ++next_id;
    }
    result.decisions.push_back(dec);
  }
  return result;
}

}  // namespace voxpan
