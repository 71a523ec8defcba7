#include "voxpan/clustering.hpp"

#include <cmath>

namespace voxpan {

std::vector<VoxelOffset> offset_ball(double radius) {
  if (!(radius >= 1.0)) throw InvalidInput("cluster radius must be >= 1 voxel");
  const auto r = static_cast<std::int32_t>(std::floor(radius));
  const double r2 = radius * radius;
  std::vector<VoxelOffset> out;
  for (std::int32_t dx = -r; dx <= r; ++dx) {
    for (std::int32_t dy = -r; dy <= r; ++dy) {
      for (std::int32_t dz = -r; dz <= r; ++dz) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        if (static_cast<double>(dx * dx + dy * dy + dz * dz) <= r2) out.push_back({dx, dy, dz});
      }
    }
  }
  return out;
}

ClusterParams ClusterParams::semantic_kitti(const ClassTaxonomy& taxonomy) {
  ClusterParams p;
  p.default_radius = 3.0;
  auto set = [&](const char* name, double radius, std::size_t cap) {
    const ClassId id = taxonomy.id_of(name);
    p.radius[id] = radius;
    if (cap != kNoClusterCap) p.max_voxels[id] = cap;
  };
  set("car", 2.0, 2000);
  set("bicycle", 2.0, kNoClusterCap);
  set("motorcycle", 2.0, kNoClusterCap);
  set("truck", 2.0, 5000);
  set("other-vehicle", 2.0, 5000);
  set("person", 3.0, 1000);
  set("bicyclist", 3.0, 1000);
  set("motorcyclist", 3.0, 1000);
  return p;
}

double ClusterParams::radius_for(ClassId c) const {
  auto it = radius.find(c);
  return it == radius.end() ? default_radius : it->second;
}

std::size_t ClusterParams::max_for(ClassId c) const {
  auto it = max_voxels.find(c);
  return it == max_voxels.end() ? default_max_voxels : it->second;
}

void ClusterParams::validate() const {
  if (min_cluster_voxels < 1) throw InvalidInput("min_cluster_voxels must be >= 1");
  if (!(default_radius >= 1.0)) throw InvalidInput("cluster radius must be >= 1 voxel");
  if (default_max_voxels < min_cluster_voxels) throw InvalidInput("cluster cap below min_cluster_voxels");
  for (const auto& [c, r] : radius) {
    if (!(r >= 1.0)) throw InvalidInput("cluster radius for class " + std::to_string(c) + " must be >= 1");
  }
  for (const auto& [c, m] : max_voxels) {
    if (m < min_cluster_voxels) {
      throw InvalidInput("cluster cap for class " + std::to_string(c) + " below min_cluster_voxels");
    }
  }
}

ClusterResult euclidean_cluster_detailed(const SemanticGrid& sem, const ClassTaxonomy& taxonomy,
                                         const ClusterParams& params) {
  params.validate();
  const GridDims& dims = sem.dims();
  ClusterResult result{InstanceGrid(dims, 0), {}};

  const auto& things = taxonomy.thing_ids();
  std::vector<std::vector<std::uint32_t>> members(things.size());
  {
    const auto& lut = taxonomy.thing_lut();
    for (std::size_t i = 0; i < sem.size(); ++i) {
      const ClassId c = sem[i];
      if (c < lut.size() && lut[c]) members[taxonomy.thing_index(c)].push_back(static_cast<std::uint32_t>(i));
    }
  }

  std::vector<std::uint8_t> visited(dims.count(), 0);
  std::vector<std::uint32_t> component;
  InstanceId next_id = 1;
  for (std::size_t k = 0; k < things.size(); ++k) {
    const ClassId cls = things[k];
    ClassClusterStats& stats = result.per_class[cls];
    if (members[k].empty()) continue;
    const auto ball = offset_ball(params.radius_for(cls));
    const std::size_t cap = params.max_for(cls);

    for (std::uint32_t seed : members[k]) {
      if (visited[seed]) continue;
      component.clear();
      component.push_back(seed);
      visited[seed] = 1;
      for (std::size_t head = 0; head < component.size(); ++head) {
        const VoxelCoord c = dims.coord(component[head]);
        for (const VoxelOffset& o : ball) {
          const std::int64_t x = static_cast<std::int64_t>(c.x) + o.dx;
          const std::int64_t y = static_cast<std::int64_t>(c.y) + o.dy;
          const std::int64_t z = static_cast<std::int64_t>(c.z) + o.dz;
          if (!dims.contains(x, y, z)) continue;
          const std::size_t n =
              dims.index(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y), static_cast<std::uint32_t>(z));
          if (visited[n] || sem[n] != cls) continue;
          visited[n] = 1;
          component.push_back(static_cast<std::uint32_t>(n));
        }
      }
      if (component.size() > cap) {
        ++stats.dropped_large;
        stats.dropped_voxels += component.size();
      } else if (component.size() < params.min_cluster_voxels) {
        ++stats.dropped_small;
        stats.dropped_voxels += component.size();
      } else {
        ++stats.kept;
        for (std::uint32_t v : component) result.ids[v] = next_id;
        ++next_id;
      }
    }
  }
  return result;
}

InstanceGrid euclidean_cluster(const SemanticGrid& sem, const ClassTaxonomy& taxonomy, const ClusterParams& params) {
  return euclidean_cluster_detailed(sem, taxonomy, params).ids;
}

SemanticGrid mark_unclustered_unknown(const SemanticGrid& sem, const InstanceGrid& ids,
                                      const ClassTaxonomy& taxonomy) {
  require_same_shape(sem.dims(), ids.dims(), "mark_unclustered_unknown");
  if (!taxonomy.unknown_id()) throw InvalidInput("taxonomy has no unknown class to relabel traces with");
  SemanticGrid out = sem;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (taxonomy.is_thing(out[i]) && ids[i] == 0) out[i] = *taxonomy.unknown_id();
  }
  return out;
}

}  // namespace voxpan
