#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "voxpan/errors.hpp"

namespace voxpan {

using ClassId = std::uint16_t;
using InstanceId = std::uint32_t;

struct VoxelCoord {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint32_t z = 0;
  bool operator==(const VoxelCoord&) const = default;
};

// Shape of a dense voxel grid. h runs forward, w lateral, d vertical.
// Flattening is x-major: index = x*w*d + y*d + z.
struct GridDims {
  std::uint32_t h = 256;
  std::uint32_t w = 256;
  std::uint32_t d = 32;
  double resolution_m = 0.2;

  static GridDims semantic_kitti() { return {}; }

  std::size_t count() const {
    return static_cast<std::size_t>(h) * w * d;
  }

  std::size_t index(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
    return (static_cast<std::size_t>(x) * w + y) * d + z;
  }

  VoxelCoord coord(std::size_t idx) const {
    VoxelCoord c;
    c.z = static_cast<std::uint32_t>(idx % d);
    idx /= d;
    c.y = static_cast<std::uint32_t>(idx % w);
    c.x = static_cast<std::uint32_t>(idx / w);
    return c;
  }

  bool contains(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < h && y < w && z < d;
  }

  // Shape equality; resolution is metadata and not compared.
  bool same_shape(const GridDims& o) const {
    return h == o.h && w == o.w && d == o.d;
  }

  // Throws InvalidInput unless h, w, d >= 1 and resolution_m > 0.
  void validate() const;

  std::string str() const;
};

// Throws ShapeMismatch naming `what` when the two shapes differ.
void require_same_shape(const GridDims& a, const GridDims& b, const char* what);

// Dense voxel grid with x-major storage.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  explicit Grid(const GridDims& dims, T fill = T{})
      : dims_(dims), data_((dims.validate(), dims.count()), fill) {}
  Grid(const GridDims& dims, std::vector<T> data) : dims_(dims), data_(std::move(data)) {
    dims_.validate();
    if (data_.size() != dims_.count()) {
      throw ShapeMismatch("grid payload has " + std::to_string(data_.size()) +
                          " elements, dims " + dims_.str() + " need " +
                          std::to_string(dims_.count()));
    }
  }

  const GridDims& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::uint32_t x, std::uint32_t y, std::uint32_t z) { return data_[dims_.index(x, y, z)]; }
  const T& at(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
    return data_[dims_.index(x, y, z)];
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  bool operator==(const Grid& o) const { return dims_.same_shape(o.dims_) && data_ == o.data_; }

 private:
  GridDims dims_{};
  std::vector<T> data_;
};

using SemanticGrid = Grid<ClassId>;
using InstanceGrid = Grid<InstanceId>;
// Boolean voxel grid stored one byte per voxel (0 or 1).
using BinaryMask3D = Grid<std::uint8_t>;
using FovMask = BinaryMask3D;
using MaskLogits3D = Grid<float>;

std::size_t popcount(const BinaryMask3D& mask);

}  // namespace voxpan
