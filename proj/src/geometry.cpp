#include "binpack/geometry.hpp"

#include <algorithm>

namespace binpack {

BoxDims canonicalize(const BoxDims& b, int dims) {
  if (b.l < 1 || b.w < 1 || b.h < 1) throw std::invalid_argument("canonicalize: non-positive edge");
  if (dims == 2) {
    if (b.h != 1) throw std::invalid_argument("canonicalize: 2D box must have h == 1");
    return {std::min(b.l, b.w), std::max(b.l, b.w), 1};
  }
  std::array<int, 3> e{b.l, b.w, b.h};
  std::sort(e.begin(), e.end());
  return {e[0], e[1], e[2]};
}

BoxDims orient(const BoxDims& b, int o, int dims) {
  if (dims == 2) {
    switch (o) {
      case 0: return b;
      case 1: return {b.w, b.l, b.h};
      default: throw std::domain_error("orient: 2D orientation out of range");
    }
  }
  switch (o) {
    case 0: return {b.l, b.w, b.h};
    case 1: return {b.w, b.l, b.h};
    case 2: return {b.h, b.w, b.l};
    case 3: return {b.l, b.h, b.w};
    case 4: return {b.w, b.h, b.l};
    case 5: return {b.h, b.l, b.w};
    default: throw std::domain_error("orient: 3D orientation out of range");
  }
}

long long ProblemInstance::total_volume() const {
  long long v = 0;
  for (const auto& b : boxes) v += b.volume();
  return v;
}

void ProblemInstance::validate() const {
  if (boxes.empty()) throw std::invalid_argument("instance: no boxes");
  if (bin.dims != 2 && bin.dims != 3) throw std::invalid_argument("instance: dims must be 2 or 3");
  if (bin.W < 1 || bin.H < 1 || bin.L < 1) throw std::invalid_argument("instance: non-positive bin");
  if (bin.dims == 2 && bin.H != 1) throw std::invalid_argument("instance: 2D bin must have H == 1");
  const int O = orientation_count(bin.dims);
  for (const auto& b : boxes) {
    if (b.l < 1 || b.w < 1 || b.h < 1) throw std::invalid_argument("instance: non-positive edge");
    if (bin.dims == 2 && b.h != 1) throw std::invalid_argument("instance: 2D box must have h == 1");
    bool fits = false;
    for (int o = 0; o < O && !fits; ++o) {
      BoxDims d = orient(b, o, bin.dims);
      fits = d.l <= bin.L && d.w <= bin.W && d.h <= bin.H;
    }
    if (!fits) throw std::invalid_argument("instance: box fits the bin in no orientation");
  }
}

BinSpec bin_for_boxes(const std::vector<BoxDims>& boxes, int W, int H, int dims) {
  long long L = 0;
  for (const auto& b : boxes) L += b.max_edge();
  return BinSpec{W, H, L, dims};
}

std::vector<std::array<double, 3>> normalize_features(const ProblemInstance& inst) {
  int max_edge = 1;
  for (const auto& b : inst.boxes) max_edge = std::max(max_edge, b.max_edge());
  std::vector<std::array<double, 3>> f;
  f.reserve(inst.boxes.size());
  for (const auto& b : inst.boxes)
    f.push_back({double(b.l) / max_edge, double(b.w) / max_edge, double(b.h) / max_edge});
  return f;
}

void Configuration::require_complete() const {
  const size_t n = instance.boxes.size();
  if (placements.size() != n) throw contract_error("configuration: wrong placement count");
  std::vector<char> seen(n, 0);
  for (const auto& p : placements) {
    if (p.s < 0 || (size_t)p.s >= n || seen[p.s]) throw contract_error("configuration: bad box index");
    seen[p.s] = 1;
  }
}

}  // namespace binpack
