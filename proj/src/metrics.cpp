#include "voxpan/metrics.hpp"

#include <algorithm>
#include <tuple>
#include <unordered_map>

namespace voxpan {

namespace {

std::vector<bool> class_filter(const std::vector<ClassId>& classes) {
  std::vector<bool> keep(65536, false);
  for (ClassId c : classes) keep[c] = true;
  return keep;
}

std::vector<std::uint32_t> without_ignored(const std::vector<std::uint32_t>& v, const BinaryMask3D* ignore) {
  if (!ignore) return v;
  std::vector<std::uint32_t> out;
  out.reserve(v.size());
  for (std::uint32_t i : v) {
    if (!(*ignore)[i]) out.push_back(i);
  }
  return out;
}

// IoU of two sorted, already-filtered voxel lists.
double sorted_iou(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0;
  if (!a.empty() && !b.empty() && a.front() <= b.back() && b.front() <= a.back()) {
    auto ia = a.begin(), ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
      if (*ia < *ib) {
        ++ia;
      } else if (*ib < *ia) {
        ++ib;
      } else {
        ++inter;
        ++ia;
        ++ib;
      }
    }
  }
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

std::vector<Segment> extract_segments(const SemanticGrid& sem, const InstanceGrid& ids,
                                      const ClassTaxonomy& taxonomy, const std::vector<ClassId>& eval_classes) {
  require_same_shape(sem.dims(), ids.dims(), "extract_segments");
  const std::vector<bool> wanted = class_filter(eval_classes);

  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> groups;
  std::uint64_t last_key = ~std::uint64_t{0};
  std::vector<std::uint32_t>* last = nullptr;
  for (std::size_t i = 0; i < sem.size(); ++i) {
    const ClassId c = sem[i];
    if (!wanted[c] || taxonomy.is_unknown(c)) continue;
    std::uint32_t key;
    if (taxonomy.is_thing(c)) {
      if (ids[i] == 0) continue;
      key = ids[i];
    } else if (taxonomy.is_stuff(c)) {
      key = c;
    } else {
      continue;
    }
    const std::uint64_t k = (static_cast<std::uint64_t>(c) << 32) | key;
    if (k != last_key) {
      last = &groups[k];
      last_key = k;
    }
    last->push_back(static_cast<std::uint32_t>(i));
  }

  std::vector<Segment> out;
  out.reserve(groups.size());
  for (auto& [k, voxels] : groups) {
    out.push_back({static_cast<ClassId>(k >> 32), static_cast<std::uint32_t>(k & 0xffffffffu), std::move(voxels)});
  }
  std::sort(out.begin(), out.end(), [](const Segment& a, const Segment& b) {
    return std::tie(a.class_id, a.key) < std::tie(b.class_id, b.key);
  });
  return out;
}

double segment_iou(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b,
                   const BinaryMask3D* ignore) {
  return sorted_iou(without_ignored(a, ignore), without_ignored(b, ignore));
}

SegmentMatchReport greedy_match(const std::vector<Segment>& preds, const std::vector<Segment>& gts, double iou_min,
                                const BinaryMask3D* ignore, const std::vector<ClassId>& categories) {
  SegmentMatchReport report;
  report.iou_min = iou_min;
  std::map<ClassId, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> by_class;
  for (ClassId c : categories) by_class[c];
  for (std::size_t i = 0; i < preds.size(); ++i) by_class[preds[i].class_id].first.push_back(i);
  for (std::size_t j = 0; j < gts.size(); ++j) by_class[gts[j].class_id].second.push_back(j);

  std::vector<std::vector<std::uint32_t>> pred_vox(preds.size()), gt_vox(gts.size());
  for (std::size_t i = 0; i < preds.size(); ++i) pred_vox[i] = without_ignored(preds[i].voxels, ignore);
  for (std::size_t j = 0; j < gts.size(); ++j) gt_vox[j] = without_ignored(gts[j].voxels, ignore);

  for (const auto& [cls, members] : by_class) {
    const auto& [pi, gi] = members;
    std::vector<MatchedPair> candidates;
    for (std::size_t p : pi) {
      for (std::size_t g : gi) {
        const double iou = sorted_iou(pred_vox[p], gt_vox[g]);
        if (iou >= iou_min) candidates.push_back({p, g, iou});
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const MatchedPair& a, const MatchedPair& b) {
      if (a.iou != b.iou) return a.iou > b.iou;
      return std::tie(a.pred, a.gt) < std::tie(b.pred, b.gt);
    });
    std::vector<bool> pred_used(preds.size(), false), gt_used(gts.size(), false);
    CategoryMatch& cm = report.categories[cls];
    for (const MatchedPair& m : candidates) {
      if (pred_used[m.pred] || gt_used[m.gt]) continue;
      pred_used[m.pred] = gt_used[m.gt] = true;
      cm.tp.push_back(m);
    }
    for (std::size_t p : pi) {
      if (!pred_used[p]) cm.fp.push_back(p);
    }
    for (std::size_t g : gi) {
      if (!gt_used[g]) cm.fn.push_back(g);
    }
  }
  return report;
}

PanopticScores panoptic_scores(const SegmentMatchReport& report, const ClassTaxonomy* taxonomy) {
  PanopticScores out;
  auto add = [](MeanScores& m, const CategoryScores& s) {
    m.prq += s.prq;
    m.rsq += s.rsq;
    m.rrq += s.rrq;
    ++m.categories;
  };
  for (const auto& [cls, cm] : report.categories) {
    CategoryScores s;
    s.tp = cm.tp.size();
    s.fp = cm.fp.size();
    s.fn = cm.fn.size();
    double iou_sum = 0.0;
    for (const auto& m : cm.tp) iou_sum += m.iou;
    const double den = static_cast<double>(s.tp) + 0.5 * static_cast<double>(s.fp) + 0.5 * static_cast<double>(s.fn);
    s.prq = safe_div(iou_sum, den);
    s.rsq = safe_div(iou_sum, static_cast<double>(s.tp));
    s.rrq = safe_div(static_cast<double>(s.tp), den);
    s.evaluated = s.tp + s.fp + s.fn > 0;
    out.per_category[cls] = s;
    if (!s.evaluated) continue;
    add(out.all, s);
    if (taxonomy && taxonomy->is_thing(cls)) add(out.things, s);
    if (taxonomy && taxonomy->is_stuff(cls)) add(out.stuff, s);
  }
  for (MeanScores* m : {&out.all, &out.things, &out.stuff}) {
    if (m->categories == 0) continue;
    const double n = static_cast<double>(m->categories);
    m->prq /= n;
    m->rsq /= n;
    m->rrq /= n;
  }
  return out;
}

BinaryMask3D unknown_mask(const SemanticGrid& sem, const ClassTaxonomy& taxonomy) {
  BinaryMask3D out(sem.dims(), 0);
  if (!taxonomy.unknown_id()) return out;
  const ClassId unknown = *taxonomy.unknown_id();
  for (std::size_t i = 0; i < sem.size(); ++i) out[i] = sem[i] == unknown ? 1 : 0;
  return out;
}

PanopticEvaluation evaluate_panoptic(const SemanticGrid& pred_sem, const InstanceGrid& pred_ids,
                                     const SemanticGrid& gt_sem, const InstanceGrid& gt_ids,
                                     const ClassTaxonomy& taxonomy, const std::vector<ClassId>& eval_classes,
                                     double iou_min) {
  require_same_shape(pred_sem.dims(), gt_sem.dims(), "evaluate_panoptic: prediction vs ground truth");
  require_same_shape(pred_sem.dims(), pred_ids.dims(), "evaluate_panoptic: prediction ids");
  require_same_shape(gt_sem.dims(), gt_ids.dims(), "evaluate_panoptic: ground-truth ids");
  const auto preds = extract_segments(pred_sem, pred_ids, taxonomy, eval_classes);
  const auto gts = extract_segments(gt_sem, gt_ids, taxonomy, eval_classes);
  const BinaryMask3D ignore = unknown_mask(gt_sem, taxonomy);
  PanopticEvaluation ev;
  ev.report = greedy_match(preds, gts, iou_min, &ignore, eval_classes);
  ev.scores = panoptic_scores(ev.report, &taxonomy);
  ev.pred_segments = preds.size();
  ev.gt_segments = gts.size();
  return ev;
}

double ssc_iou(const SemanticGrid& pred, const SemanticGrid& gt, const ClassTaxonomy& taxonomy) {
  require_same_shape(pred.dims(), gt.dims(), "ssc_iou");
  const ClassId free_id = taxonomy.free_id();
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    // Unknown on either side is excluded, which keeps the measure symmetric.
    if (taxonomy.is_unknown(gt[i]) || taxonomy.is_unknown(pred[i])) continue;
    const bool p = pred[i] != free_id;
    const bool g = gt[i] != free_id;
    inter += p && g;
    uni += p || g;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

SscScores ssc_scores(const SemanticGrid& pred, const SemanticGrid& gt, const ClassTaxonomy& taxonomy,
                     bool skip_absent) {
  require_same_shape(pred.dims(), gt.dims(), "ssc_scores");
  SscScores out;
  out.classes = taxonomy.semantic_ids();
  std::vector<std::size_t> tp(65536, 0), fp(65536, 0), fn(65536, 0);
  std::vector<bool> semantic(65536, false);
  for (ClassId c : out.classes) semantic[c] = true;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const ClassId g = gt[i];
    if (taxonomy.is_unknown(g)) continue;
    ++out.evaluable_voxels;
    const ClassId p = pred[i];
    if (p == g) {
      if (semantic[g]) ++tp[g];
      continue;
    }
    if (semantic[p]) ++fp[p];
    if (semantic[g]) ++fn[g];
  }
  out.class_iou.assign(out.classes.size(), std::nullopt);
  if (out.evaluable_voxels == 0) return out;

  out.iou = ssc_iou(pred, gt, taxonomy);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < out.classes.size(); ++k) {
    const ClassId c = out.classes[k];
    const std::size_t den = tp[c] + fp[c] + fn[c];
    if (den == 0 && skip_absent) continue;
    const double v = den == 0 ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(den);
    out.class_iou[k] = v;
    sum += v;
    ++n;
  }
  if (n > 0) out.miou = sum / static_cast<double>(n);
  return out;
}

MiouResult ssc_miou(const SemanticGrid& pred, const SemanticGrid& gt, const ClassTaxonomy& taxonomy,
                    bool skip_absent) {
  const SscScores s = ssc_scores(pred, gt, taxonomy, skip_absent);
  MiouResult r;
  r.per_class.reserve(s.class_iou.size());
  for (const auto& v : s.class_iou) r.per_class.push_back(v.value_or(0.0));
  r.mean = s.miou.value_or(0.0);
  return r;
}

}  // namespace voxpan
