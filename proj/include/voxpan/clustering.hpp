#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "voxpan/grid.hpp"
#include "voxpan/taxonomy.hpp"

namespace voxpan {

struct VoxelOffset {
  std::int32_t dx = 0, dy = 0, dz = 0;
};

// Integer offsets with Euclidean length <= radius, origin excluded, in
// lexicographic (dx, dy, dz) order. Radius 2 yields 32 offsets, radius 3 122.
std::vector<VoxelOffset> offset_ball(double radius);

inline constexpr std::size_t kNoClusterCap = std::numeric_limits<std::uint32_t>::max();

struct ClusterParams {
  double default_radius = 3.0;
  std::size_t default_max_voxels = kNoClusterCap;
  std::size_t min_cluster_voxels = 1;
  std::map<ClassId, double> radius;            // per-class override
  std::map<ClassId, std::size_t> max_voxels;   // per-class override

  // Radius 2 for vehicles (car, bicycle, motorcycle, truck, other-vehicle),
  // 3 otherwise; caps of 2000 for cars, 5000 for trucks and other vehicles,
  // 1000 for persons, bicyclists and motorcyclists.
  static ClusterParams semantic_kitti(const ClassTaxonomy& taxonomy);

  double radius_for(ClassId c) const;
  std::size_t max_for(ClassId c) const;
  void validate() const;
};

struct ClassClusterStats {
  std::size_t kept = 0;
  std::size_t dropped_large = 0;
  std::size_t dropped_small = 0;
  std::size_t dropped_voxels = 0;
};

struct ClusterResult {
  InstanceGrid ids;
  std::map<ClassId, ClassClusterStats> per_class;
};

// Instance ids from semantic labels. Each thing class is clustered on its
// own: voxels of the class whose centres are within the class radius are
// connected, and connected components become instances. Components with more
// than the class cap or fewer than min_cluster_voxels voxels are dropped and
// keep id 0. Ids 1..K go to surviving components by ascending class id, then
// by ascending flat index of the component's first voxel.
ClusterResult euclidean_cluster_detailed(const SemanticGrid& sem, const ClassTaxonomy& taxonomy,
                                         const ClusterParams& params);

InstanceGrid euclidean_cluster(const SemanticGrid& sem, const ClassTaxonomy& taxonomy, const ClusterParams& params);

// Copy of `sem` where thing voxels without an instance id become unknown.
SemanticGrid mark_unclustered_unknown(const SemanticGrid& sem, const InstanceGrid& ids,
                                      const ClassTaxonomy& taxonomy);

}  // namespace voxpan
