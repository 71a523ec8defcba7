#include "voxpan/grid.hpp"

#include <algorithm>
#include <sstream>

namespace voxpan {

void GridDims::validate() const {
  if (h == 0 || w == 0 || d == 0) {
    throw InvalidInput("grid dims must be >= 1 on every axis, got " + str());
  }
  if (!(resolution_m > 0.0)) {
    throw InvalidInput("grid resolution must be positive");
  }
}

std::string GridDims::str() const {
  std::ostringstream os;
  os << h << "x" << w << "x" << d;
  return os.str();
}

void require_same_shape(const GridDims& a, const GridDims& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeMismatch(std::string(what) + ": dims " + a.str() + " vs " + b.str());
  }
}

std::size_t popcount(const BinaryMask3D& mask) {
  return static_cast<std::size_t>(
      std::count_if(mask.values().begin(), mask.values().end(), [](std::uint8_t b) { return b != 0; }));
}

}  // namespace voxpan
