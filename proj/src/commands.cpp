#include "voxpan/commands.hpp"

#include <ostream>

#include "voxpan/clustering.hpp"
#include "voxpan/io.hpp"
#include "voxpan/matching.hpp"
#include "voxpan/metrics.hpp"

namespace voxpan::cli {

using nlohmann::json;

namespace {

void emit(const json& report, const std::optional<Path>& path, std::ostream& out) {
  const std::string text = report.dump(2) + "\n";
  if (path) {
    io::write_text(*path, text);
  } else {
    out << text;
  }
}

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

SemanticGrid load_labels(const Path& path, const ClassTaxonomy& taxonomy) {
  SemanticGrid g = io::load_semantic(path);
  validate_labels(g, taxonomy);
  return g;
}

json ssc_json(const SscScores& s, const ClassTaxonomy& taxonomy) {
  json per_class = json::object();
  for (std::size_t k = 0; k < s.classes.size(); ++k) {
    per_class[taxonomy.entry(s.classes[k]).name] = nullable(s.class_iou[k]);
  }
  return {{"evaluable_voxels", s.evaluable_voxels},
          {"iou", nullable(s.iou)},
          {"miou", nullable(s.miou)},
          {"per_class_iou", per_class}};
}

json mean_json(const MeanScores& m) {
  if (m.categories == 0) {
    return {{"prq", nullptr}, {"rsq", nullptr}, {"rrq", nullptr}, {"categories", 0}};
  }
  return {{"prq", m.prq}, {"rsq", m.rsq}, {"rrq", m.rrq}, {"categories", m.categories}};
}

}  // namespace

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ShapeMismatch& e) {
    err << "error: " << e.what() << "\n";
    return kExitShape;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

RunConfig load_config(const std::optional<Path>& path) {
  return path ? RunConfig::load(*path) : RunConfig::from_json(json::object());
}

int run_merge(const MergeArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_config(args.config);
    const SemanticGrid bg = load_labels(args.bg_sem, cfg.taxonomy);
    const FovMask fov = io::load_mask(args.fov);
    io::MaskSet masks = io::load_mask_set(args.masks);

    const MergeResult r = merge(zero_foreground(bg, cfg.taxonomy), fov, masks.predictions, cfg.taxonomy, cfg.merge);
    io::save_semantic(args.out_sem, r.semantic);
    io::save_instances(args.out_id, r.instances);

    json decisions = json::array();
    std::size_t by_score = 0, by_overlap = 0, by_fov = 0;
    for (const MergeDecision& d : r.decisions) {
      by_score += d.outcome == MergeOutcome::kLowScore;
      by_overlap += d.outcome == MergeOutcome::kOverlap;
      by_fov += d.outcome == MergeOutcome::kOutsideFov;
      decisions.push_back({{"prediction", d.prediction},
                           {"score", d.score},
                           {"outcome", to_string(d.outcome)},
                           {"instance_id", d.instance_id},
                           {"class", cfg.taxonomy.entry(d.class_id).name},
                           {"mask_voxels", d.mask_voxels},
                           {"free_voxels", d.free_voxels},
                           {"free_in_fov", d.free_in_fov}});
    }
    json log{{"command", "merge"},
             {"config", cfg.to_json()},
             {"predictions", masks.predictions.size()},
             {"kept", r.kept()},
             {"discarded", {{"score", by_score}, {"overlap", by_overlap}, {"fov", by_fov}}},
             {"decisions", decisions}};
    emit(log, args.log, out);
    return kExitOk;
  });
}

int run_eval_panoptic(const EvalPanopticArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_config(args.config);
    const ClassTaxonomy& tax = cfg.taxonomy;
    const SemanticGrid pred_sem = load_labels(args.pred_sem, tax);
    const InstanceGrid pred_id = io::load_instances(args.pred_id);
    const SemanticGrid gt_sem = load_labels(args.gt_sem, tax);
    const InstanceGrid gt_id = io::load_instances(args.gt_id);

    const PanopticEvaluation ev =
        evaluate_panoptic(pred_sem, pred_id, gt_sem, gt_id, tax, cfg.eval_classes(), cfg.metrics.iou_min);
    json cats = json::object();
    for (const auto& [cls, s] : ev.scores.per_category) {
      json c{{"class_id", cls},
             {"kind", std::string(to_string(tax.kind(cls)))},
             {"evaluated", s.evaluated},
             {"tp", s.tp},
             {"fp", s.fp},
             {"fn", s.fn}};
      c["prq"] = s.evaluated ? json(s.prq) : json(nullptr);
      c["rsq"] = s.evaluated ? json(s.rsq) : json(nullptr);
      c["rrq"] = s.evaluated ? json(s.rrq) : json(nullptr);
      cats[tax.entry(cls).name] = c;
    }
    json report{{"command", "eval-panoptic"},
                {"config", cfg.to_json()},
                {"iou_min", cfg.metrics.iou_min},
                {"segments", {{"pred", ev.pred_segments}, {"gt", ev.gt_segments}}},
                {"categories", cats},
                {"mean",
                 {{"all", mean_json(ev.scores.all)},
                  {"things", mean_json(ev.scores.things)},
                  {"stuff", mean_json(ev.scores.stuff)}}},
                {"ssc", ssc_json(ssc_scores(pred_sem, gt_sem, tax, cfg.metrics.skip_absent_classes), tax)}};
    emit(report, args.out, out);
    return kExitOk;
  });
}

int run_eval_ssc(const EvalSscArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_config(args.config);
    const SemanticGrid pred = load_labels(args.pred_sem, cfg.taxonomy);
    const SemanticGrid gt = load_labels(args.gt_sem, cfg.taxonomy);
    const SscScores s = ssc_scores(pred, gt, cfg.taxonomy, cfg.metrics.skip_absent_classes);
    json report = ssc_json(s, cfg.taxonomy);
    report["command"] = "eval-ssc";
    report["config"] = cfg.to_json();
    if (s.evaluable_voxels == 0) report["warning"] = "no evaluable voxels: ground truth is entirely unknown";
    emit(report, args.out, out);
    return kExitOk;
  });
}

int run_cluster(const ClusterArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_config(args.config);
    const SemanticGrid sem = load_labels(args.gt_sem, cfg.taxonomy);
    const ClusterResult r = euclidean_cluster_detailed(sem, cfg.taxonomy, cfg.cluster);
    io::save_instances(args.out_id, r.ids);

    std::optional<Path> sem_out = args.out_sem;
    if (!sem_out && cfg.mark_dropped_unknown) {
      sem_out = args.out_id;
      sem_out->replace_extension(".traces_unknown.bin");
    }
    if (sem_out) io::save_semantic(*sem_out, mark_unclustered_unknown(sem, r.ids, cfg.taxonomy));

    json per_class = json::object();
    std::size_t kept = 0, dropped = 0;
    for (const auto& [cls, s] : r.per_class) {
      per_class[cfg.taxonomy.entry(cls).name] = {{"clusters", s.kept},
                                                  {"dropped_large", s.dropped_large},
                                                  {"dropped_small", s.dropped_small},
                                                  {"dropped_voxels", s.dropped_voxels}};
      kept += s.kept;
      dropped += s.dropped_large + s.dropped_small;
    }
    json log{{"command", "cluster"},
             {"config", cfg.to_json()},
             {"clusters", kept},
             {"dropped_clusters", dropped},
             {"per_class", per_class}};
    if (sem_out) log["relabelled_semantic"] = sem_out->string();
    emit(log, args.log, out);
    return kExitOk;
  });
}

int run_match(const MatchArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_config(args.config);
    const io::MaskSet masks = io::load_mask_set(args.masks);
    const SemanticGrid sem = load_labels(args.gt_sem, cfg.taxonomy);
    const InstanceGrid ids = io::load_instances(args.gt_id);
    if (masks.num_classes != cfg.taxonomy.thing_ids().size()) {
      throw ShapeMismatch("mask set carries " + std::to_string(masks.num_classes) + " classes, taxonomy has " +
                          std::to_string(cfg.taxonomy.thing_ids().size()) + " thing classes");
    }
    const std::vector<GtInstance> gts = gt_instances(sem, ids, cfg.taxonomy, masks.dims);
    if (gts.size() > masks.predictions.size()) {
      throw ShapeMismatch("matching needs at least as many predictions as ground-truth instances: " +
                          std::to_string(gts.size()) + " instances vs " + std::to_string(masks.predictions.size()) +
                          " predictions");
    }
    const CostMatrix costs = matching_cost(masks.predictions, gts, cfg.taxonomy, cfg.loss);
    const Assignment a = hungarian(costs);

    json pairs = json::array();
    for (std::size_t j = 0; j < gts.size(); ++j) {
      const std::size_t i = a.row_of_col[j];
      pairs.push_back({{"gt_index", j},
                       {"instance_id", gts[j].instance_id},
                       {"class", cfg.taxonomy.entry(gts[j].class_id).name},
                       {"prediction", i},
                       {"cost", costs(i, j)}});
    }
    LossWeights single = cfg.loss;
    single.num_decoder_layers = 1;
    const double loss =
        instance_loss({layer_loss_terms(masks.predictions, gts, a, cfg.taxonomy, cfg.loss)}, single);
    json report{{"command", "match"},
                {"config", cfg.to_json()},
                {"predictions", masks.predictions.size()},
                {"gt_instances", gts.size()},
                {"assignment", pairs},
                {"total_cost", a.total_cost},
                {"instance_loss", loss}};
    emit(report, args.out, out);
    return kExitOk;
  });
}

int run_decode_demo(const DecodeDemoArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_config(args.config);
    DecoderConfig dc = cfg.decoder;
    DecoderWeights weights;
    if (args.weights) {
      auto [loaded_cfg, loaded] = io::load_decoder_weights(*args.weights);
      dc = loaded_cfg;
      weights = std::move(loaded);
    } else {
      if (args.queries) dc.num_queries = *args.queries;
      if (args.heads) dc.num_heads = *args.heads;
      if (args.layers) dc.num_layers = *args.layers;
      if (args.embed) dc.embed_dim = *args.embed;
      dc.validate();
      weights = DecoderWeights::random(dc);
    }
    if (dc.num_classes != cfg.taxonomy.thing_ids().size()) {
      throw ShapeMismatch("decoder predicts " + std::to_string(dc.num_classes) + " classes, taxonomy has " +
                          std::to_string(cfg.taxonomy.thing_ids().size()) + " thing classes");
    }
    if (args.save_weights) io::save_decoder_weights(*args.save_weights, dc, weights);

    const Matrix features = random_voxel_features(dc, args.feature_seed);
    const std::vector<LayerOutput> layers = forward_stack(dc, weights, features);
    io::MaskSet set;
    set.dims = dc.voxel_dims;
    set.num_classes = dc.num_classes;
    set.predictions = to_predictions(layers.back());
    io::save_mask_set(args.out_masks, set);

    json report{{"command", "decode-demo"},
                {"config", cfg.to_json()},
                {"decoder",
                 {{"num_queries", dc.num_queries},
                  {"num_heads", dc.num_heads},
                  {"num_layers", dc.num_layers},
                  {"embed_dim", dc.embed_dim},
                  {"seed", dc.seed},
                  {"feature_seed", args.feature_seed}}},
                {"mask_dims", {dc.voxel_dims.h, dc.voxel_dims.w, dc.voxel_dims.d}},
                {"predictions", set.predictions.size()},
                {"out", args.out_masks.string()}};
    emit(report, std::nullopt, out);
    return kExitOk;
  });
}

}  // namespace voxpan::cli
