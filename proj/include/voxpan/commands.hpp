#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>

#include "voxpan/config.hpp"

// Subcommand bodies of the voxpan tool. Each returns the process exit code:
// 0 success, 1 unreadable or invalid input, 2 shape mismatch or violated
// size precondition. Reports go to `out` unless an output path is given;
// diagnostics go to `err`.
namespace voxpan::cli {

using Path = std::filesystem::path;

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitShape = 2;

// Runs `body`, mapping exceptions to exit codes and printing diagnostics.
int guarded(std::ostream& err, const std::function<int()>& body);

// Config from `path`, or defaults when it is empty.
RunConfig load_config(const std::optional<Path>& path);

struct MergeArgs {
  Path bg_sem;
  Path fov;
  Path masks;
  std::optional<Path> config;
  Path out_sem;
  Path out_id;
  std::optional<Path> log;
};
int run_merge(const MergeArgs& args, std::ostream& out, std::ostream& err);

struct EvalPanopticArgs {
  Path pred_sem, pred_id, gt_sem, gt_id;
  std::optional<Path> config;
  std::optional<Path> out;
};
int run_eval_panoptic(const EvalPanopticArgs& args, std::ostream& out, std::ostream& err);

struct EvalSscArgs {
  Path pred_sem, gt_sem;
  std::optional<Path> config;
  std::optional<Path> out;
};
int run_eval_ssc(const EvalSscArgs& args, std::ostream& out, std::ostream& err);

struct ClusterArgs {
  Path gt_sem;
  std::optional<Path> config;
  Path out_id;
  // Semantic grid with dropped (trace) voxels relabelled unknown; written when
  // given or when the config sets cluster.mark_dropped_unknown (next to out_id).
  std::optional<Path> out_sem;
  std::optional<Path> log;
};
int run_cluster(const ClusterArgs& args, std::ostream& out, std::ostream& err);

struct MatchArgs {
  Path masks, gt_sem, gt_id;
  std::optional<Path> config;
  std::optional<Path> out;
};
int run_match(const MatchArgs& args, std::ostream& out, std::ostream& err);

struct DecodeDemoArgs {
  Path out_masks;
  std::optional<Path> config;
  std::optional<Path> weights;       // load instead of seeding
  std::optional<Path> save_weights;  // write the weights used
  std::uint64_t feature_seed = 1;
  std::optional<std::size_t> queries, heads, layers, embed;
};
int run_decode_demo(const DecodeDemoArgs& args, std::ostream& out, std::ostream& err);

}  // namespace voxpan::cli
