#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "oracles.hpp"
#include "voxpan/io.hpp"

using namespace voxpan;
namespace fs = std::filesystem;

namespace {

// Saves, loads, saves again; both payload and manifest must be byte-identical.
template <class T, class Save, class Load>
void check_round_trip(const fs::path& dir, const T& value, Save save, Load load, bool manifest = true) {
  const fs::path a = dir / "a.bin", b = dir / "b.bin";
  save(a, value);
  save(b, load(a));
  REQUIRE(io::read_bytes(a) == io::read_bytes(b));
  if (manifest) {
    auto ja = io::read_bytes(io::manifest_path(a)), jb = io::read_bytes(io::manifest_path(b));
    REQUIRE(ja == jb);
  }
}

MaskPrediction random_prediction(std::mt19937_64& rng, const GridDims& g, std::size_t classes) {
  std::normal_distribution<float> n(0.0f, 4.0f);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MaskPrediction p;
  p.class_probs.resize(classes);
  for (double& v : p.class_probs) v = static_cast<float>(u(rng));
  std::vector<float> logits(g.count());
  for (float& v : logits) v = n(rng);
  p.logits = MaskLogits3D(g, std::move(logits));
  if (u(rng) < 0.5) p.score = static_cast<float>(u(rng));
  return p;
}

}  // namespace

TEST_CASE("grid files: bytewise round trips for every element kind") {
  oracle::TempDir dir("voxpan_io");
  std::mt19937_64 rng(83);
  for (int trial = 0; trial < 20; ++trial) {
    const GridDims g = oracle::random_dims(rng, 12);
    std::uniform_int_distribution<std::uint32_t> u32;
    std::normal_distribution<float> n(0.0f, 10.0f);
    std::bernoulli_distribution coin(0.3);

    SemanticGrid sem(g);
    for (auto& v : sem.values()) v = static_cast<ClassId>(u32(rng) % 20);
    sem[0] = 255;
    check_round_trip(
        dir.path(), sem, [&](const fs::path& p, const SemanticGrid& s) { io::save_semantic(p, s); },
        [](const fs::path& p) { return io::load_semantic(p); });
    io::save_semantic(dir / "s.bin", sem);
    REQUIRE(io::load_semantic(dir / "s.bin") == sem);

    InstanceGrid ids(g);
    for (auto& v : ids.values()) v = u32(rng);
    io::save_instances(dir / "i.bin", ids);
    REQUIRE(io::load_instances(dir / "i.bin") == ids);
    check_round_trip(
        dir.path(), ids, [&](const fs::path& p, const InstanceGrid& s) { io::save_instances(p, s); },
        [](const fs::path& p) { return io::load_instances(p); });

    BinaryMask3D mask(g);
    for (auto& v : mask.values()) v = coin(rng);
    io::save_mask(dir / "m.bin", mask);
    REQUIRE(io::load_mask(dir / "m.bin") == mask);
    check_round_trip(
        dir.path(), mask, [&](const fs::path& p, const BinaryMask3D& s) { io::save_mask(p, s); },
        [](const fs::path& p) { return io::load_mask(p); });

    MaskLogits3D logits(g);
    for (auto& v : logits.values()) v = n(rng);
    io::save_logits(dir / "l.bin", logits);
    REQUIRE(io::load_logits(dir / "l.bin") == logits);
    check_round_trip(
        dir.path(), logits, [&](const fs::path& p, const MaskLogits3D& s) { io::save_logits(p, s); },
        [](const fs::path& p) { return io::load_logits(p); });

    const auto m = io::read_manifest(dir / "l.bin");
    REQUIRE(m.dims.same_shape(g));
    REQUIRE(m.element == io::ElementKind::kF32);
  }
}

TEST_CASE("grid files: headerless SemanticKITTI payloads") {
  oracle::TempDir dir("voxpan_io");
  const GridDims kitti = GridDims::semantic_kitti();
  std::vector<std::uint8_t> raw(kitti.count() * 2, 0);
  raw[0] = 10;  // voxel (0,0,0) = car class id 10 in the raw label space
  raw[2 * 33] = 0x01;
  raw[2 * 33 + 1] = 0x01;  // little-endian 257
  io::write_bytes(dir / "000000.label", raw);
  const SemanticGrid s = io::load_semantic(dir / "000000.label");
  CHECK(s.dims().same_shape(kitti));
  CHECK(s[0] == 10);
  CHECK(s[33] == 257);

  io::write_bytes(dir / "000000.invalid", std::vector<std::uint8_t>(kitti.count(), 1));
  const BinaryMask3D inv = io::load_mask(dir / "000000.invalid");
  CHECK(static_cast<std::size_t>(std::count(inv.values().begin(), inv.values().end(), 1)) == kitti.count());

  io::write_bytes(dir / "odd.label", std::vector<std::uint8_t>(1000));
  CHECK_THROWS_AS(io::load_semantic(dir / "odd.label"), FormatError);
}

TEST_CASE("grid files: malformed inputs") {
  oracle::TempDir dir("voxpan_io");
  CHECK_THROWS_AS(io::load_semantic(dir / "missing.bin"), FormatError);
  try {
    io::load_semantic(dir / "missing.bin");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("missing.bin") != std::string::npos);
  }

  const GridDims g{2, 2, 2, 0.2};
  io::save_semantic(dir / "s.bin", SemanticGrid(g, 1));
  CHECK_THROWS_AS(io::load_instances(dir / "s.bin"), FormatError);  // element kind mismatch
  auto bytes = io::read_bytes(dir / "s.bin");
  bytes.pop_back();
  io::write_bytes(dir / "s.bin", bytes);
  CHECK_THROWS_AS(io::load_semantic(dir / "s.bin"), FormatError);

  io::save_logits(dir / "l.bin", MaskLogits3D(g, 0.0f));
  auto lb = io::read_bytes(dir / "l.bin");
  const float nan = std::nanf("");
  std::memcpy(lb.data() + 4, &nan, 4);
  io::write_bytes(dir / "l.bin", lb);
  CHECK_THROWS_AS(io::load_logits(dir / "l.bin"), FormatError);

  io::save_mask(dir / "m.bin", BinaryMask3D(g, 0));
  auto mb = io::read_bytes(dir / "m.bin");
  mb[3] = 7;
  io::write_bytes(dir / "m.bin", mb);
  CHECK_THROWS_AS(io::load_mask(dir / "m.bin"), FormatError);

  io::write_text(io::manifest_path(dir / "m.bin"), "{not json");
  CHECK_THROWS_AS(io::load_mask(dir / "m.bin"), FormatError);
  io::write_text(io::manifest_path(dir / "m.bin"),
                 R"({"format": "other", "version": 1, "dims": [2, 2, 2], "resolution_m": 0.2, "element": "u8"})");
  CHECK_THROWS_AS(io::load_mask(dir / "m.bin"), FormatError);
}

TEST_CASE("mask sets: bytewise round trips on random sets") {
  oracle::TempDir dir("voxpan_io");
  std::mt19937_64 rng(89);
  for (int trial = 0; trial < 20; ++trial) {
    io::MaskSet set;
    set.dims = oracle::random_dims(rng, 8);
    set.dims.resolution_m = 0.8;
    set.num_classes = 1 + trial % 8;
    for (int k = trial % 7; k > 0; --k) set.predictions.push_back(random_prediction(rng, set.dims, set.num_classes));
    io::save_mask_set(dir / "a.vpms", set);
    const io::MaskSet back = io::load_mask_set(dir / "a.vpms");
    REQUIRE(back.dims.same_shape(set.dims));
    REQUIRE(back.dims.resolution_m == doctest::Approx(0.8));
    REQUIRE(back.num_classes == set.num_classes);
    REQUIRE(back.predictions.size() == set.predictions.size());
    for (std::size_t i = 0; i < set.predictions.size(); ++i) {
      REQUIRE(back.predictions[i].class_probs == set.predictions[i].class_probs);
      REQUIRE(back.predictions[i].logits == set.predictions[i].logits);
      REQUIRE(back.predictions[i].score == set.predictions[i].score);
    }
    io::save_mask_set(dir / "b.vpms", back);
    REQUIRE(io::read_bytes(dir / "a.vpms") == io::read_bytes(dir / "b.vpms"));
  }
}

TEST_CASE("mask sets: malformed inputs") {
  oracle::TempDir dir("voxpan_io");
  std::mt19937_64 rng(97);
  io::MaskSet set;
  set.dims = GridDims{2, 2, 2, 0.8};
  set.num_classes = 3;
  set.predictions = {random_prediction(rng, set.dims, 3), random_prediction(rng, set.dims, 3)};
  io::save_mask_set(dir / "a.vpms", set);
  const auto good = io::read_bytes(dir / "a.vpms");

  auto bad = good;
  bad[0] = 'X';
  io::write_bytes(dir / "b.vpms", bad);
  CHECK_THROWS_AS(io::load_mask_set(dir / "b.vpms"), FormatError);

  bad = good;
  bad.pop_back();
  io::write_bytes(dir / "b.vpms", bad);
  CHECK_THROWS_AS(io::load_mask_set(dir / "b.vpms"), FormatError);

  bad = good;
  bad.push_back(0);
  io::write_bytes(dir / "b.vpms", bad);
  CHECK_THROWS_AS(io::load_mask_set(dir / "b.vpms"), FormatError);

  bad = good;
  const float inf = INFINITY;
  std::memcpy(bad.data() + bad.size() - 4, &inf, 4);
  io::write_bytes(dir / "b.vpms", bad);
  CHECK_THROWS_AS(io::load_mask_set(dir / "b.vpms"), FormatError);

  bad = good;
  bad[4] = 9;  // version
  io::write_bytes(dir / "b.vpms", bad);
  CHECK_THROWS_AS(io::load_mask_set(dir / "b.vpms"), FormatError);

  CHECK_THROWS_AS(io::load_mask_set(dir / "none.vpms"), FormatError);
}

TEST_CASE("decoder weights: bytewise round trip and validation") {
  oracle::TempDir dir("voxpan_io");
  DecoderConfig c;
  c.num_queries = 6;
  c.num_heads = 2;
  c.num_layers = 2;
  c.embed_dim = 8;
  c.pe_dim = 12;
  c.voxel_dims = GridDims{4, 4, 2, 0.8};
  c.seed = 101;
  const DecoderWeights w = DecoderWeights::random(c);
  io::save_decoder_weights(dir / "w.bin", c, w);
  const auto [c2, w2] = io::load_decoder_weights(dir / "w.bin");
  CHECK(c2.num_queries == 6);
  CHECK(c2.embed_dim == 8);
  CHECK(c2.voxel_dims.same_shape(c.voxel_dims));
  CHECK(c2.seed == 101);
  CHECK((w2.mlp_w1 - w.mlp_w1).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(w2.layers.size() == 2);
  io::save_decoder_weights(dir / "w2.bin", c2, w2);
  CHECK(io::read_bytes(dir / "w.bin") == io::read_bytes(dir / "w2.bin"));
  CHECK(io::read_bytes(io::manifest_path(dir / "w.bin")) == io::read_bytes(io::manifest_path(dir / "w2.bin")));

  auto payload = io::read_bytes(dir / "w.bin");
  payload.resize(payload.size() - 4);
  io::write_bytes(dir / "w.bin", payload);
  CHECK_THROWS_AS(io::load_decoder_weights(dir / "w.bin"), FormatError);
}
