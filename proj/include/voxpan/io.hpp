#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "voxpan/decoder.hpp"
#include "voxpan/grid.hpp"
#include "voxpan/merging.hpp"

namespace voxpan::io {

// Grid files are a headerless little-endian payload in x-major order plus a
// JSON sidecar at "<payload>.json":
//
//   {"format": "voxpan-grid", "version": 1, "dims": [h, w, d],
//    "resolution_m": 0.2, "element": "u16", "taxonomy": "semantic-kitti"}
//
// Element kinds: u16 semantic labels, u32 instance ids, u8 boolean masks,
// f32 logits. A payload without sidecar is accepted when its size matches
// the 256x256x32 SemanticKITTI shape, which covers raw .label voxel files.

enum class ElementKind { kU16, kU32, kU8, kF32 };

struct GridManifest {
  GridDims dims;
  ElementKind element = ElementKind::kU16;
  std::string taxonomy = "semantic-kitti";
};

std::filesystem::path manifest_path(const std::filesystem::path& payload);

void save_semantic(const std::filesystem::path& path, const SemanticGrid& grid,
                   const std::string& taxonomy = "semantic-kitti");
void save_instances(const std::filesystem::path& path, const InstanceGrid& grid);
void save_mask(const std::filesystem::path& path, const BinaryMask3D& grid);
void save_logits(const std::filesystem::path& path, const MaskLogits3D& grid);

// Loaders throw FormatError on missing, truncated or mislabelled files.
SemanticGrid load_semantic(const std::filesystem::path& path);
InstanceGrid load_instances(const std::filesystem::path& path);
BinaryMask3D load_mask(const std::filesystem::path& path);
MaskLogits3D load_logits(const std::filesystem::path& path);

GridManifest read_manifest(const std::filesystem::path& payload);

// Mask-set file, little-endian:
//
//   char[4] "VPMS"; u16 version (1); u32 count; u16 class count;
//   u32 h, w, d (coarse dims); f32 resolution_m
//   per record: u8 has_score; f32 score; f32 class_probs[classes];
//               f32 logits[h*w*d] (x-major)
//
// Reading rejects non-finite floats and size mismatches.
inline constexpr std::uint16_t kMaskSetVersion = 1;

struct MaskSet {
  GridDims dims{64, 64, 8, 0.8};
  std::size_t num_classes = 0;
  std::vector<MaskPrediction> predictions;
};

void save_mask_set(const std::filesystem::path& path, const MaskSet& set);
MaskSet load_mask_set(const std::filesystem::path& path);

// Decoder weights: flat little-endian f32 payload with a JSON manifest at
// "<payload>.json" holding the decoder config and an ordered tensor table
// ({"name", "shape", "offset"} with offsets in elements).
void save_decoder_weights(const std::filesystem::path& path, const DecoderConfig& cfg, const DecoderWeights& weights);
std::pair<DecoderConfig, DecoderWeights> load_decoder_weights(const std::filesystem::path& path);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace voxpan::io
