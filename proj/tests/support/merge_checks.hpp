#pragma once

// Post-merge invariants, phrased over the grids alone.

#include <map>
#include <set>
#include <string>

#include "voxpan/merging.hpp"

namespace merge_checks {

using namespace voxpan;

// Empty string when every invariant holds, otherwise the first violation.
inline std::string violations(const SemanticGrid& bg, const MergeResult& r, const ClassTaxonomy& tax,
                              std::size_t num_preds) {
  const SemanticGrid& sem = r.semantic;
  const InstanceGrid& ids = r.instances;
  std::map<InstanceId, ClassId> class_of;
  std::set<InstanceId> used;
  for (std::size_t i = 0; i < sem.size(); ++i) {
    const bool thing = tax.is_thing(sem[i]);
    if ((ids[i] != 0) != thing) return "partition: voxel " + std::to_string(i);
    if (tax.is_stuff(bg[i]) && sem[i] != bg[i]) return "stuff changed at voxel " + std::to_string(i);
    if (!thing && sem[i] != bg[i]) return "non-thing voxel relabelled at " + std::to_string(i);
    if (ids[i] == 0) continue;
    if (bg[i] != tax.free_id()) return "instance written over non-free voxel " + std::to_string(i);
    // Non-overlap: one id, one class; ids never share voxels by construction
    // of the grid, so a second class under the same id means two masks met.
    auto [it, fresh] = class_of.emplace(ids[i], sem[i]);
    if (!fresh && it->second != sem[i]) return "id " + std::to_string(ids[i]) + " spans two classes";
    used.insert(ids[i]);
  }
  const std::size_t k = used.size();
  if (k > num_preds) return "more ids than predictions";
  if (k != r.kept()) return "kept count differs from ids present";
  std::size_t expect = 1;
  for (InstanceId id : used)
    if (id != expect++) return "ids not compact";
  std::size_t total = 0;
  for (const MergeDecision& d : r.decisions) {
    if (d.outcome != MergeOutcome::kKept) continue;
    std::size_t n = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) n += ids[i] == d.instance_id;
    if (n != d.free_voxels) return "id " + std::to_string(d.instance_id) + " voxel count differs from its free part";
    total += n;
  }
  std::size_t labelled = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) labelled += ids[i] != 0;
  if (total != labelled) return "kept masks overlap";
  return {};
}

}  // namespace merge_checks
