#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "voxpan/grid.hpp"
#include "voxpan/taxonomy.hpp"

namespace voxpan {

inline constexpr double kDefaultMaskThreshold = 0.25;

// Integer per-axis scale factors between a coarse and a fine grid.
struct ScaleFactors {
  std::uint32_t fx = 1, fy = 1, fz = 1;
};

// Throws ShapeMismatch unless every fine axis is a positive integer multiple
// of the matching coarse axis.
ScaleFactors scale_factors(const GridDims& coarse, const GridDims& fine);

// Trilinear resampling with cell-center (align_corners=false) sampling.
// Sample positions outside the hull of source cell centers are clamped to the
// nearest source cell. The output carries `target`'s dims and resolution.
MaskLogits3D upsample_trilinear(const MaskLogits3D& src, const GridDims& target);

// Set bit iff value > threshold.
BinaryMask3D binarize(const MaskLogits3D& mask, double threshold = kDefaultMaskThreshold);

// Flat indices (into `target`) of the voxels where upsample_trilinear(src,
// target) exceeds `threshold`, computed without materializing the dense
// upsampled grid. Produces exactly the bits of binarize(upsample_trilinear()).
// Order is unspecified.
std::vector<std::uint32_t> upsample_binarize_indices(const MaskLogits3D& src, const GridDims& target,
                                                     double threshold = kDefaultMaskThreshold);

// |a & b| / |a | b| over voxels outside `ignore`; 0 for an empty union.
double mask_iou(const BinaryMask3D& a, const BinaryMask3D& b,
                const BinaryMask3D* ignore = nullptr);

BinaryMask3D class_mask(const SemanticGrid& grid, const ClassTaxonomy& taxonomy, ClassId class_id);

}  // namespace voxpan
