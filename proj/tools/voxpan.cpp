#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "voxpan/commands.hpp"

namespace {

using voxpan::cli::Path;

// CLI11 has no direct optional<path> binding; collect into a string and convert.
struct OptPath {
  std::string value;
  std::optional<Path> get() const { return value.empty() ? std::nullopt : std::optional<Path>(value); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"voxpan: voxel panoptic merging, clustering, matching and evaluation"};
  app.require_subcommand(1);
  int code = voxpan::cli::kExitOk;

  // merge
  voxpan::cli::MergeArgs merge;
  OptPath merge_cfg, merge_log;
  auto* m = app.add_subcommand("merge", "Merge instance masks onto a background semantic grid");
  m->add_option("--bg-sem", merge.bg_sem, "Background semantic grid")->required();
  m->add_option("--fov", merge.fov, "Field-of-view mask")->required();
  m->add_option("--masks", merge.masks, "Mask set file")->required();
  m->add_option("--config", merge_cfg.value, "Run configuration (JSON)");
  m->add_option("--out-sem", merge.out_sem, "Merged semantic grid")->required();
  m->add_option("--out-id", merge.out_id, "Merged instance grid")->required();
  m->add_option("--log", merge_log.value, "Decision log (JSON); stdout when omitted");
  m->callback([&] {
    merge.config = merge_cfg.get();
    merge.log = merge_log.get();
    code = voxpan::cli::run_merge(merge, std::cout, std::cerr);
  });

  // eval-panoptic
  voxpan::cli::EvalPanopticArgs pan;
  OptPath pan_cfg, pan_out;
  auto* p = app.add_subcommand("eval-panoptic", "Panoptic reconstruction scores of a prediction");
  p->add_option("--pred-sem", pan.pred_sem)->required();
  p->add_option("--pred-id", pan.pred_id)->required();
  p->add_option("--gt-sem", pan.gt_sem)->required();
  p->add_option("--gt-id", pan.gt_id)->required();
  p->add_option("--config", pan_cfg.value);
  p->add_option("--out", pan_out.value, "Report path; stdout when omitted");
  p->callback([&] {
    pan.config = pan_cfg.get();
    pan.out = pan_out.get();
    code = voxpan::cli::run_eval_panoptic(pan, std::cout, std::cerr);
  });

  // eval-ssc
  voxpan::cli::EvalSscArgs ssc;
  OptPath ssc_cfg, ssc_out;
  auto* s = app.add_subcommand("eval-ssc", "Scene completion IoU and mIoU");
  s->add_option("--pred-sem", ssc.pred_sem)->required();
  s->add_option("--gt-sem", ssc.gt_sem)->required();
  s->add_option("--config", ssc_cfg.value);
  s->add_option("--out", ssc_out.value);
  s->callback([&] {
    ssc.config = ssc_cfg.get();
    ssc.out = ssc_out.get();
    code = voxpan::cli::run_eval_ssc(ssc, std::cout, std::cerr);
  });

  // cluster
  voxpan::cli::ClusterArgs cl;
  OptPath cl_cfg, cl_sem, cl_log;
  auto* c = app.add_subcommand("cluster", "Derive instance ids from a semantic grid");
  c->add_option("--gt-sem", cl.gt_sem)->required();
  c->add_option("--config", cl_cfg.value);
  c->add_option("--out-id", cl.out_id)->required();
  c->add_option("--out-sem", cl_sem.value, "Semantic grid with dropped voxels marked unknown");
  c->add_option("--log", cl_log.value);
  c->callback([&] {
    cl.config = cl_cfg.get();
    cl.out_sem = cl_sem.get();
    cl.log = cl_log.get();
    code = voxpan::cli::run_cluster(cl, std::cout, std::cerr);
  });

  // match
  voxpan::cli::MatchArgs mt;
  OptPath mt_cfg, mt_out;
  auto* h = app.add_subcommand("match", "Optimal prediction to ground-truth assignment");
  h->add_option("--masks", mt.masks)->required();
  h->add_option("--gt-sem", mt.gt_sem)->required();
  h->add_option("--gt-id", mt.gt_id)->required();
  h->add_option("--config", mt_cfg.value);
  h->add_option("--out", mt_out.value);
  h->callback([&] {
    mt.config = mt_cfg.get();
    mt.out = mt_out.get();
    code = voxpan::cli::run_match(mt, std::cout, std::cerr);
  });

  // decode-demo
  voxpan::cli::DecodeDemoArgs dd;
  OptPath dd_cfg, dd_w, dd_save;
  std::size_t queries = 0, heads = 0, layers = 0, embed = 0;
  auto* d = app.add_subcommand("decode-demo", "Run the decoder on seeded features and write a mask set");
  d->add_option("--out-masks", dd.out_masks)->required();
  d->add_option("--config", dd_cfg.value);
  d->add_option("--weights", dd_w.value, "Load decoder weights");
  d->add_option("--save-weights", dd_save.value, "Write the weights used");
  d->add_option("--feature-seed", dd.feature_seed);
  d->add_option("--queries", queries);
  d->add_option("--heads", heads);
  d->add_option("--layers", layers);
  d->add_option("--embed", embed);
  d->callback([&] {
    dd.config = dd_cfg.get();
    dd.weights = dd_w.get();
    dd.save_weights = dd_save.get();
    if (queries) dd.queries = queries;
    if (heads) dd.heads = heads;
    if (layers) dd.layers = layers;
    if (embed) dd.embed = embed;
    code = voxpan::cli::run_decode_demo(dd, std::cout, std::cerr);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : voxpan::cli::kExitInput;
  }
  return code;
}
