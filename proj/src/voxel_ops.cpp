#include "voxpan/voxel_ops.hpp"

#include <algorithm>
#include <cmath>

namespace voxpan {

namespace {

// One output coordinate's interpolation stencil along one axis.
struct AxisTap {
  std::uint32_t i0;
  std::uint32_t i1;
  double t;
};

std::vector<AxisTap> axis_taps(std::uint32_t src_n, std::uint32_t factor) {
  std::vector<AxisTap> taps(static_cast<std::size_t>(src_n) * factor);
  const double hi = static_cast<double>(src_n - 1);
  for (std::size_t o = 0; o < taps.size(); ++o) {
    double s = (static_cast<double>(o) + 0.5) / factor - 0.5;
    s = std::clamp(s, 0.0, hi);
    const auto i0 = static_cast<std::uint32_t>(std::floor(s));
    taps[o] = {i0, std::min(i0 + 1, src_n - 1), s - i0};
  }
  return taps;
}

struct Stencil {
  std::vector<AxisTap> x, y, z;
};

Stencil make_stencil(const GridDims& src, const ScaleFactors& f) {
  return {axis_taps(src.h, f.fx), axis_taps(src.w, f.fy), axis_taps(src.d, f.fz)};
}

// Both the dense and the sparse path evaluate every voxel through this
// function so their results agree bit for bit.
inline float sample(const MaskLogits3D& src, const AxisTap& ax, const AxisTap& ay, const AxisTap& az) {
  const GridDims& sd = src.dims();
  auto v = [&](std::uint32_t x, std::uint32_t y, std::uint32_t z) {
    return static_cast<double>(src[sd.index(x, y, z)]);
  };
  const double c00 = v(ax.i0, ay.i0, az.i0) * (1.0 - az.t) + v(ax.i0, ay.i0, az.i1) * az.t;
  const double c01 = v(ax.i0, ay.i1, az.i0) * (1.0 - az.t) + v(ax.i0, ay.i1, az.i1) * az.t;
  const double c10 = v(ax.i1, ay.i0, az.i0) * (1.0 - az.t) + v(ax.i1, ay.i0, az.i1) * az.t;
  const double c11 = v(ax.i1, ay.i1, az.i0) * (1.0 - az.t) + v(ax.i1, ay.i1, az.i1) * az.t;
  const double c0 = c00 * (1.0 - ay.t) + c01 * ay.t;
  const double c1 = c10 * (1.0 - ay.t) + c11 * ay.t;
  return static_cast<float>(c0 * (1.0 - ax.t) + c1 * ax.t);
}

}  // namespace

ScaleFactors scale_factors(const GridDims& coarse, const GridDims& fine) {
  coarse.validate();
  fine.validate();
  if (fine.h % coarse.h != 0 || fine.w % coarse.w != 0 || fine.d % coarse.d != 0) {
    throw ShapeMismatch("target dims " + fine.str() + " are not an integer multiple of source dims " +
                        coarse.str());
  }
  return {fine.h / coarse.h, fine.w / coarse.w, fine.d / coarse.d};
}

MaskLogits3D upsample_trilinear(const MaskLogits3D& src, const GridDims& target) {
  const ScaleFactors f = scale_factors(src.dims(), target);
  const Stencil st = make_stencil(src.dims(), f);
  MaskLogits3D out(target);
  std::size_t i = 0;
  for (std::uint32_t x = 0; x < target.h; ++x) {
    for (std::uint32_t y = 0; y < target.w; ++y) {
      for (std::uint32_t z = 0; z < target.d; ++z) {
        out[i++] = sample(src, st.x[x], st.y[y], st.z[z]);
      }
    }
  }
  return out;
}

BinaryMask3D binarize(const MaskLogits3D& mask, double threshold) {
  BinaryMask3D out(mask.dims());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    out[i] = static_cast<double>(mask[i]) > threshold ? 1 : 0;
  }
  return out;
}

std::vector<std::uint32_t> upsample_binarize_indices(const MaskLogits3D& src, const GridDims& target,
                                                     double threshold) {
  const ScaleFactors f = scale_factors(src.dims(), target);
  const GridDims& sd = src.dims();

  // A fine voxel inside coarse cell c interpolates only cells in [c-1, c+1]
  // per axis, so a coarse block whose 27-neighbourhood sits below the
  // threshold (with margin for rounding) cannot produce set bits.
  double max_abs = 0.0;
  for (float v : src.values()) max_abs = std::max(max_abs, std::abs(static_cast<double>(v)));
  const double margin = 1e-6 * (1.0 + max_abs + std::abs(threshold));
  const double cutoff = threshold - margin;

  std::vector<std::uint8_t> active(sd.count(), 0);
  bool any = false;
  for (std::uint32_t x = 0; x < sd.h; ++x) {
    for (std::uint32_t y = 0; y < sd.w; ++y) {
      for (std::uint32_t z = 0; z < sd.d; ++z) {
        if (!(static_cast<double>(src[sd.index(x, y, z)]) > cutoff)) continue;
        any = true;
        const std::uint32_t x0 = x > 0 ? x - 1 : 0, x1 = std::min(x + 1, sd.h - 1);
        const std::uint32_t y0 = y > 0 ? y - 1 : 0, y1 = std::min(y + 1, sd.w - 1);
        const std::uint32_t z0 = z > 0 ? z - 1 : 0, z1 = std::min(z + 1, sd.d - 1);
        for (std::uint32_t a = x0; a <= x1; ++a)
          for (std::uint32_t b = y0; b <= y1; ++b)
            for (std::uint32_t c = z0; c <= z1; ++c) active[sd.index(a, b, c)] = 1;
      }
    }
  }
  std::vector<std::uint32_t> out;
  if (!any) return out;

  const Stencil st = make_stencil(sd, f);
  for (std::size_t cell = 0; cell < active.size(); ++cell) {
    if (!active[cell]) continue;
    const VoxelCoord c = sd.coord(cell);
    for (std::uint32_t x = c.x * f.fx; x < (c.x + 1) * f.fx; ++x) {
      for (std::uint32_t y = c.y * f.fy; y < (c.y + 1) * f.fy; ++y) {
        for (std::uint32_t z = c.z * f.fz; z < (c.z + 1) * f.fz; ++z) {
          if (static_cast<double>(sample(src, st.x[x], st.y[y], st.z[z])) > threshold) {
            out.push_back(static_cast<std::uint32_t>(target.index(x, y, z)));
          }
        }
      }
    }
  }
  return out;
}

double mask_iou(const BinaryMask3D& a, const BinaryMask3D& b, const BinaryMask3D* ignore) {
  require_same_shape(a.dims(), b.dims(), "mask_iou");
  if (ignore) require_same_shape(a.dims(), ignore->dims(), "mask_iou ignore mask");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (ignore && (*ignore)[i]) continue;
    const bool pa = a[i] != 0, pb = b[i] != 0;
    inter += pa && pb;
    uni += pa || pb;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

BinaryMask3D class_mask(const SemanticGrid& grid, const ClassTaxonomy& taxonomy, ClassId class_id) {
  if (!taxonomy.contains(class_id)) {
    throw InvalidInput("class id " + std::to_string(class_id) + " not in taxonomy");
  }
  BinaryMask3D out(grid.dims());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = grid[i] == class_id ? 1 : 0;
  return out;
}

}  // namespace voxpan
