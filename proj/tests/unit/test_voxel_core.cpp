#include "doctest.h"

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "voxpan/grid.hpp"
#include "voxpan/taxonomy.hpp"
#include "voxpan/voxel_ops.hpp"

using namespace voxpan;

TEST_CASE("grid dims default to the SemanticKITTI volume") {
  GridDims g;
  CHECK(g.h == 256);
  CHECK(g.w == 256);
  CHECK(g.d == 32);
  CHECK(g.resolution_m == doctest::Approx(0.2));
  CHECK(g.count() == 256u * 256u * 32u);
}

TEST_CASE("grid dims reject empty axes and non-positive resolution") {
  CHECK_THROWS_AS((GridDims{0, 4, 4, 0.2}.validate()), InvalidInput);
  CHECK_THROWS_AS((GridDims{4, 4, 4, 0.0}.validate()), InvalidInput);
  CHECK_THROWS_AS((GridDims{4, 4, 4, -1.0}.validate()), InvalidInput);
  CHECK_NOTHROW((GridDims{1, 1, 1, 0.1}.validate()));
}

TEST_CASE("flat index and coordinate are mutual inverses") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const GridDims g = oracle::random_dims(rng, 9);
    for (std::uint32_t x = 0; x < g.h; ++x)
      for (std::uint32_t y = 0; y < g.w; ++y)
        for (std::uint32_t z = 0; z < g.d; ++z) {
          const std::size_t i = g.index(x, y, z);
          REQUIRE(i == std::size_t(x) * g.w * g.d + std::size_t(y) * g.d + z);
          REQUIRE(g.coord(i) == VoxelCoord{x, y, z});
        }
  }
}

TEST_CASE("grid construction checks payload length") {
  CHECK_THROWS_AS(SemanticGrid(GridDims{2, 2, 2, 0.2}, std::vector<ClassId>(7)), ShapeMismatch);
  CHECK_NOTHROW(SemanticGrid(GridDims{2, 2, 2, 0.2}, std::vector<ClassId>(8)));
}

TEST_CASE("taxonomy: SemanticKITTI table") {
  const ClassTaxonomy t = ClassTaxonomy::semantic_kitti();
  CHECK(t.free_id() == 0);
  REQUIRE(t.unknown_id().has_value());
  CHECK(*t.unknown_id() == 255);
  CHECK(t.thing_ids().size() == 8);
  CHECK(t.stuff_ids().size() == 11);
  CHECK(t.semantic_ids().size() == 19);
  CHECK(t.dense_ids().size() == 20);
  CHECK(t.id_of("car") == 1);
  CHECK(t.id_of("truck") == 4);
  CHECK(t.id_of("other-vehicle") == 5);
  CHECK(t.id_of("road") == 9);
  CHECK(t.is_thing(1));
  CHECK(t.is_stuff(9));
  CHECK_FALSE(t.is_thing(0));
  CHECK(t.thing_index(4) == 3);
  CHECK_THROWS_AS(t.thing_index(9), InvalidInput);
  CHECK_THROWS_AS(t.id_of("spaceship"), InvalidInput);
}

TEST_CASE("taxonomy: invariants are enforced") {
  using K = ClassKind;
  CHECK_THROWS_AS(ClassTaxonomy({{1, "a", K::kThing}}), InvalidInput);  // no free class
  CHECK_THROWS_AS(ClassTaxonomy({{0, "e", K::kFree}, {1, "f", K::kFree}}), InvalidInput);
  CHECK_THROWS_AS(ClassTaxonomy({{0, "e", K::kFree}, {1, "u", K::kUnknown}, {2, "v", K::kUnknown}}), InvalidInput);
  CHECK_THROWS_AS(ClassTaxonomy({{0, "e", K::kFree}, {1, "a", K::kThing}, {1, "b", K::kStuff}}), InvalidInput);
  const ClassTaxonomy t({{0, "e", K::kFree}, {3, "a", K::kThing}, {7, "b", K::kStuff}});
  CHECK_FALSE(t.unknown_id().has_value());
  CHECK(t.thing_ids() == std::vector<ClassId>{3});
}

TEST_CASE("taxonomy: label validation") {
  const ClassTaxonomy t = ClassTaxonomy::semantic_kitti();
  SemanticGrid g(GridDims{2, 2, 2, 0.2}, 0);
  CHECK_NOTHROW(validate_labels(g, t));
  g[3] = 255;
  CHECK_NOTHROW(validate_labels(g, t));
  g[5] = 42;
  CHECK_THROWS_AS(validate_labels(g, t), InvalidInput);
}

TEST_CASE("upsample: constant grid stays constant") {
  MaskLogits3D src(GridDims{3, 2, 2, 0.8}, 0.7f);
  const MaskLogits3D up = upsample_trilinear(src, GridDims{12, 8, 8, 0.2});
  CHECK(up.dims().same_shape(GridDims{12, 8, 8, 0.2}));
  for (float v : up.values()) REQUIRE(v == doctest::Approx(0.7).epsilon(1e-6));
}

TEST_CASE("upsample: corner impulse follows the hand-computed trilinear weights") {
  // One axis of a 2 -> 8 upscale with cell-centre sampling: weight of source
  // cell 0 at outputs 0..7.
  const double w[8] = {1.0, 1.0, 0.875, 0.625, 0.375, 0.125, 0.0, 0.0};
  MaskLogits3D src(GridDims{2, 2, 2, 0.8}, 0.0f);
  src.at(0, 0, 0) = 1.0f;
  const MaskLogits3D up = upsample_trilinear(src, GridDims{8, 8, 8, 0.2});
  for (std::uint32_t x = 0; x < 8; ++x)
    for (std::uint32_t y = 0; y < 8; ++y)
      for (std::uint32_t z = 0; z < 8; ++z) REQUIRE(up.at(x, y, z) == doctest::Approx(w[x] * w[y] * w[z]).epsilon(1e-7));
  CHECK(up.at(0, 0, 0) == 1.0f);
  for (std::uint32_t i = 1; i < 8; ++i) CHECK(up.at(i, i, i) <= up.at(i - 1, i - 1, i - 1));
}

TEST_CASE("upsample: matches the per-sample oracle and stays in the source range") {
  std::mt19937_64 rng(11);
  std::normal_distribution<float> n01(0.0f, 1.0f);
  for (int trial = 0; trial < 10; ++trial) {
    const GridDims c = oracle::random_dims(rng, 5);
    std::uniform_int_distribution<std::uint32_t> f(1, 4);
    const GridDims fine{c.h * f(rng), c.w * f(rng), c.d * f(rng), 0.2};
    MaskLogits3D src(c);
    for (float& v : src.values()) v = n01(rng);
    const auto [lo, hi] = std::minmax_element(src.values().begin(), src.values().end());
    const MaskLogits3D up = upsample_trilinear(src, fine);
    for (std::uint32_t x = 0; x < fine.h; ++x)
      for (std::uint32_t y = 0; y < fine.w; ++y)
        for (std::uint32_t z = 0; z < fine.d; ++z) {
          const float v = up.at(x, y, z);
          REQUIRE(v == doctest::Approx(oracle::trilinear_at(src, fine, x, y, z)).epsilon(1e-5));
          REQUIRE(v >= *lo - 1e-6f);
          REQUIRE(v <= *hi + 1e-6f);
        }
  }
}

TEST_CASE("upsample: 64x64x8 random grid to full scale is bounded by the source range") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(-3.0f, 2.0f);
  MaskLogits3D src(GridDims{64, 64, 8, 0.8});
  for (float& v : src.values()) v = u(rng);
  const auto [lo, hi] = std::minmax_element(src.values().begin(), src.values().end());
  const MaskLogits3D up = upsample_trilinear(src, GridDims{});
  const auto [olo, ohi] = std::minmax_element(up.values().begin(), up.values().end());
  CHECK(*olo >= *lo);
  CHECK(*ohi <= *hi);
}

TEST_CASE("upsample: non-integer ratios are rejected") {
  MaskLogits3D src(GridDims{3, 4, 4, 0.8});
  CHECK_THROWS_AS(upsample_trilinear(src, GridDims{8, 8, 8, 0.2}), ShapeMismatch);
  CHECK_THROWS_AS(upsample_trilinear(src, GridDims{3, 2, 4, 0.2}), ShapeMismatch);
  CHECK_THROWS_AS(upsample_binarize_indices(src, GridDims{8, 8, 8, 0.2}), ShapeMismatch);
}

TEST_CASE("binarize: strict threshold") {
  MaskLogits3D g(GridDims{4, 1, 1, 0.2});
  g[0] = 0.0f;
  g[1] = 0.3f;
  g[2] = 0.25f;
  g[3] = 1.0f;
  const BinaryMask3D b = binarize(g);
  CHECK(b[0] == 0);
  CHECK(b[1] == 1);
  CHECK(b[2] == 0);
  CHECK(b[3] == 1);

  MaskLogits3D all(GridDims{3, 3, 3, 0.2}, 0.25f);
  CHECK(popcount(binarize(all)) == 0);
}

TEST_CASE("binarize: popcount equals the scalar count") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  MaskLogits3D g(GridDims{9, 7, 5, 0.2});
  for (float& v : g.values()) v = u(rng);
  CHECK(popcount(binarize(g)) == oracle::count_above(g, 0.25));
  CHECK(popcount(binarize(g, -0.5)) == oracle::count_above(g, -0.5));
}

TEST_CASE("binarize after upsample on a constant grid") {
  const GridDims fine{8, 8, 4, 0.2};
  MaskLogits3D above(GridDims{2, 2, 1, 0.8}, 0.26f), at(GridDims{2, 2, 1, 0.8}, 0.25f);
  CHECK(popcount(binarize(upsample_trilinear(above, fine))) == fine.count());
  CHECK(popcount(binarize(upsample_trilinear(at, fine))) == 0);
}

TEST_CASE("sparse upsample-binarize equals the dense path bit for bit") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const GridDims c = oracle::random_dims(rng, 6);
    std::uniform_int_distribution<std::uint32_t> f(1, 4);
    const GridDims fine{c.h * f(rng), c.w * f(rng), c.d * f(rng), 0.2};
    MaskLogits3D src(c, -2.0f);
    // A few positive blobs plus values placed right around the threshold.
    std::uniform_real_distribution<float> u(-0.5f, 1.0f);
    std::bernoulli_distribution on(0.3);
    for (float& v : src.values())
      if (on(rng)) v = u(rng);
    if (trial % 5 == 0) src[0] = 0.25f;
    const BinaryMask3D dense = binarize(upsample_trilinear(src, fine));
    std::vector<std::uint32_t> sparse = upsample_binarize_indices(src, fine);
    std::sort(sparse.begin(), sparse.end());
    std::vector<std::uint32_t> expect;
    for (std::size_t i = 0; i < dense.size(); ++i)
      if (dense[i]) expect.push_back(static_cast<std::uint32_t>(i));
    REQUIRE(sparse == expect);
  }
}

TEST_CASE("mask_iou: identity, disjoint, shifted cube") {
  const GridDims g{4, 4, 4, 0.2};
  BinaryMask3D a(g, 0), b(g, 0);
  oracle::fill_box(a, {0, 0, 0, 2, 2, 2}, [](auto, auto, auto) { return 1; });
  CHECK(mask_iou(a, a) == 1.0);
  oracle::fill_box(b, {2, 2, 2, 4, 4, 4}, [](auto, auto, auto) { return 1; });
  CHECK(mask_iou(a, b) == 0.0);

  BinaryMask3D s(g, 0);
  oracle::fill_box(s, {1, 0, 0, 3, 2, 2}, [](auto, auto, auto) { return 1; });
  CHECK(mask_iou(a, s) == doctest::Approx(4.0 / 12.0));
  CHECK(mask_iou(s, a) == mask_iou(a, s));

  BinaryMask3D none(g, 0);
  CHECK(mask_iou(none, none) == 0.0);
  CHECK_THROWS_AS(mask_iou(a, BinaryMask3D(GridDims{4, 4, 3, 0.2})), ShapeMismatch);
}

TEST_CASE("mask_iou: ignore mask properties on random inputs") {
  std::mt19937_64 rng(17);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 50; ++trial) {
    const GridDims g = oracle::random_dims(rng, 6);
    BinaryMask3D a(g), b(g), ign(g, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = coin(rng);
      b[i] = coin(rng);
    }
    const double base = mask_iou(a, b);
    REQUIRE(base == doctest::Approx(oracle::mask_iou(a, b, nullptr)));
    REQUIRE(mask_iou(a, b) == mask_iou(b, a));
    // Ignoring voxels from the intersection only can never raise the IoU.
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] && b[i] && coin(rng)) ign[i] = 1;
    const double ignored = mask_iou(a, b, &ign);
    REQUIRE(ignored == doctest::Approx(oracle::mask_iou(a, b, &ign)));
    REQUIRE(ignored <= base + 1e-15);
    // Equality outside the ignore mask gives IoU 1.
    BinaryMask3D c = a, diff(g, 0);
    for (std::size_t i = 0; i < c.size(); ++i)
      if (coin(rng)) {
        c[i] = !c[i];
        diff[i] = 1;
      }
    if (popcount(a) > 0) {
      BinaryMask3D cover = diff;
      bool nonempty = false;
      for (std::size_t i = 0; i < a.size(); ++i) nonempty |= a[i] && !cover[i];
      if (nonempty) REQUIRE(mask_iou(a, c, &cover) == 1.0);
    }
  }
}

TEST_CASE("class_mask: counts match the label histogram") {
  const ClassTaxonomy t = ClassTaxonomy::semantic_kitti();
  SemanticGrid free_grid(GridDims{3, 3, 3, 0.2}, 0);
  CHECK(popcount(class_mask(free_grid, t, 0)) == 27);
  CHECK(popcount(class_mask(free_grid, t, 1)) == 0);
  CHECK_THROWS_AS(class_mask(free_grid, t, 77), InvalidInput);

  std::mt19937_64 rng(19);
  const SemanticGrid g = oracle::random_labels(rng, GridDims{8, 6, 4, 0.2}, t.semantic_ids(), 0.3);
  std::map<ClassId, std::size_t> hist;
  for (ClassId c : g.values()) ++hist[c];
  for (ClassId c : t.dense_ids()) CHECK(popcount(class_mask(g, t, c)) == hist[c]);
}
