#include "doctest.h"

#include <random>
#include <set>

#include "oracles.hpp"
#include "voxpan/clustering.hpp"
#include "voxpan/metrics.hpp"

using namespace voxpan;

namespace {

const ClassTaxonomy& kitti() {
  static const ClassTaxonomy t = ClassTaxonomy::semantic_kitti();
  return t;
}

std::size_t enumerate_ball(int r) {
  std::size_t n = 0;
  for (int dx = -r; dx <= r; ++dx)
    for (int dy = -r; dy <= r; ++dy)
      for (int dz = -r; dz <= r; ++dz)
        if ((dx || dy || dz) && dx * dx + dy * dy + dz * dz <= r * r) ++n;
  return n;
}

std::set<InstanceId> ids_in(const InstanceGrid& g) {
  std::set<InstanceId> s;
  for (InstanceId v : g.values())
    if (v) s.insert(v);
  return s;
}

}  // namespace

TEST_CASE("offset ball sizes") {
  CHECK(offset_ball(1).size() == 6);
  CHECK(offset_ball(2).size() == 32);
  CHECK(offset_ball(3).size() == 122);
  CHECK(enumerate_ball(2) == 32);
  CHECK(enumerate_ball(3) == 122);
  CHECK(offset_ball(std::sqrt(2.0)).size() == 18);
  for (const auto& o : offset_ball(3)) {
    CHECK(o.dx * o.dx + o.dy * o.dy + o.dz * o.dz <= 9);
    CHECK((o.dx || o.dy || o.dz));
  }
}

TEST_CASE("cluster params: SemanticKITTI defaults") {
  const auto p = ClusterParams::semantic_kitti(kitti());
  for (const char* v : {"car", "bicycle", "motorcycle", "truck", "other-vehicle"}) CHECK(p.radius_for(kitti().id_of(v)) == 2.0);
  for (const char* v : {"person", "bicyclist", "motorcyclist"}) {
    CHECK(p.radius_for(kitti().id_of(v)) == 3.0);
    CHECK(p.max_for(kitti().id_of(v)) == 1000);
  }
  CHECK(p.max_for(kitti().id_of("car")) == 2000);
  CHECK(p.max_for(kitti().id_of("truck")) == 5000);
  CHECK(p.max_for(kitti().id_of("other-vehicle")) == 5000);
  CHECK(p.max_for(kitti().id_of("bicycle")) == kNoClusterCap);
  CHECK(p.min_cluster_voxels == 1);
}

TEST_CASE("cluster params: validation") {
  ClusterParams p;
  p.default_radius = 0.5;
  CHECK_THROWS_AS(p.validate(), InvalidInput);
  p = ClusterParams{};
  p.min_cluster_voxels = 0;
  CHECK_THROWS_AS(p.validate(), InvalidInput);
  p = ClusterParams{};
  p.min_cluster_voxels = 10;
  p.max_voxels[1] = 5;
  CHECK_THROWS_AS(p.validate(), InvalidInput);
}

TEST_CASE("cluster: empty grid") {
  const GridDims g{6, 6, 3, 0.2};
  const auto r = euclidean_cluster_detailed(SemanticGrid(g, 0), kitti(), ClusterParams::semantic_kitti(kitti()));
  CHECK(r.ids == InstanceGrid(g, 0));
}

TEST_CASE("cluster: two car blobs five voxels apart") {
  const GridDims g{16, 4, 4, 0.2};
  SemanticGrid s(g, 0);
  oracle::fill_box(s, {0, 0, 0, 2, 2, 2}, [](auto, auto, auto) { return 1; });
  oracle::fill_box(s, {6, 0, 0, 8, 2, 2}, [](auto, auto, auto) { return 1; });  // x gap 1 -> 6 = 5 units
  const auto r = euclidean_cluster_detailed(s, kitti(), ClusterParams::semantic_kitti(kitti()));
  CHECK(r.ids.at(0, 0, 0) == 1);
  CHECK(r.ids.at(1, 1, 1) == 1);
  CHECK(r.ids.at(6, 0, 0) == 2);
  CHECK(r.per_class.at(1).kept == 2);
  // Within reach (gap of 2 units) they merge.
  oracle::fill_box(s, {6, 0, 0, 8, 2, 2}, [](auto, auto, auto) { return 0; });
  oracle::fill_box(s, {3, 0, 0, 5, 2, 2}, [](auto, auto, auto) { return 1; });
  CHECK(ids_in(euclidean_cluster(s, kitti(), ClusterParams::semantic_kitti(kitti()))).size() == 1);
}

TEST_CASE("cluster: oversized car blob is dropped as a trace") {
  const GridDims g{20, 20, 8, 0.2};
  SemanticGrid s(g, 0);
  oracle::fill_box(s, {0, 0, 0, 20, 20, 8}, [](auto, auto, auto) { return 1; });  // 3200 voxels
  const auto r = euclidean_cluster_detailed(s, kitti(), ClusterParams::semantic_kitti(kitti()));
  CHECK(ids_in(r.ids).empty());
  CHECK(r.per_class.at(1).dropped_large == 1);
  CHECK(r.per_class.at(1).dropped_voxels == 3200);
  const SemanticGrid marked = mark_unclustered_unknown(s, r.ids, kitti());
  CHECK(marked == SemanticGrid(g, 255));
}

TEST_CASE("cluster: adjacent classes are clustered independently, ids by class then seed") {
  const GridDims g{8, 4, 2, 0.2};
  SemanticGrid s(g, 0);
  oracle::fill_box(s, {0, 0, 0, 2, 2, 2}, [](auto, auto, auto) { return 4; });  // truck first in scan order
  oracle::fill_box(s, {2, 0, 0, 4, 2, 2}, [](auto, auto, auto) { return 1; });  // car touching it
  const auto ids = euclidean_cluster(s, kitti(), ClusterParams::semantic_kitti(kitti()));
  CHECK(ids.at(2, 0, 0) == 1);  // car has the lower class id
  CHECK(ids.at(0, 0, 0) == 2);
  CHECK(ids_in(ids).size() == 2);
}

TEST_CASE("cluster: small components below the minimum are dropped") {
  const GridDims g{10, 1, 1, 0.2};
  SemanticGrid s(g, 0);
  s[0] = 1;
  s[5] = 1;
  s[6] = 1;
  ClusterParams p = ClusterParams::semantic_kitti(kitti());
  p.min_cluster_voxels = 2;
  const auto r = euclidean_cluster_detailed(s, kitti(), p);
  CHECK(r.ids[0] == 0);
  CHECK(r.ids[5] == 1);
  CHECK(r.per_class.at(1).dropped_small == 1);
}

TEST_CASE("cluster: agrees with all-pairs union-find on random grids") {
  std::mt19937_64 rng(53);
  const std::vector<ClassId> labels{1, 2, 4, 6, 9, 13};
  for (int trial = 0; trial < 40; ++trial) {
    const GridDims g = oracle::random_dims(rng, 10);
    const SemanticGrid s = oracle::random_labels(rng, g, labels, 0.75);
    ClusterParams p = ClusterParams::semantic_kitti(kitti());
    std::uniform_int_distribution<std::size_t> cap(0, 20);
    p.min_cluster_voxels = 1 + trial % 3;
    p.max_voxels[1] = p.min_cluster_voxels + cap(rng);
    p.max_voxels[6] = p.min_cluster_voxels + cap(rng) * 3;
    const auto got = euclidean_cluster(s, kitti(), p);
    const auto expect = oracle::union_find_cluster(
        s, kitti(), [&](ClassId c) { return p.radius_for(c); }, [&](ClassId c) { return p.max_for(c); },
        p.min_cluster_voxels);
    REQUIRE(oracle::same_partition(got, expect));
    const auto used = ids_in(got);
    if (!used.empty()) REQUIRE(*used.rbegin() == used.size());
  }
}

TEST_CASE("cluster: translation only renumbers instances") {
  std::mt19937_64 rng(59);
  const GridDims g{10, 10, 6, 0.2}, big{13, 12, 7, 0.2};
  const SemanticGrid s = oracle::random_labels(rng, g, {1, 4, 6}, 0.8);
  SemanticGrid moved(big, 0);
  for (std::uint32_t x = 0; x < g.h; ++x)
    for (std::uint32_t y = 0; y < g.w; ++y)
      for (std::uint32_t z = 0; z < g.d; ++z) moved.at(x + 3, y + 2, z + 1) = s.at(x, y, z);
  const auto p = ClusterParams::semantic_kitti(kitti());
  const auto a = euclidean_cluster(s, kitti(), p);
  const auto b = euclidean_cluster(moved, kitti(), p);
  InstanceGrid back(g, 0);
  for (std::uint32_t x = 0; x < g.h; ++x)
    for (std::uint32_t y = 0; y < g.w; ++y)
      for (std::uint32_t z = 0; z < g.d; ++z) back.at(x, y, z) = b.at(x + 3, y + 2, z + 1);
  CHECK(oracle::same_partition(a, back));
  // The panoptic score of one against the other is perfect.
  const std::vector<ClassId> things{1, 4, 6};
  const auto ev = evaluate_panoptic(s, a, s, back, kitti(), things);
  for (const auto& [c, cs] : ev.scores.per_category)
    if (cs.evaluated) CHECK(cs.prq == 1.0);
}
