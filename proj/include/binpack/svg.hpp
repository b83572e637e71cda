#pragma once
// SVG rendering of packed configurations: 2D as rectangles, 3D as a front
// view plus per-layer z slices. Colors are keyed by placement order.

#include <binpack/geometry.hpp>

#include <string>

namespace binpack {

std::string render_svg(const Configuration& cfg);

}  // namespace binpack
