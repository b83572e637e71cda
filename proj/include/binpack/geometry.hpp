#pragma once
// Core packing domain types: box dimensions, bin spec, instances, placements.
// 2D mode is 3D with H = 1 and h = 1 for every box; orientation indices then
// cover only the (l,w) swap.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace binpack {

// Violated precondition of an operation (caller bug, not bad input data).
struct contract_error : std::logic_error {
  using std::logic_error::logic_error;
};

struct BoxDims {
  int l = 0, w = 0, h = 0;

  long long volume() const { return 1ll * l * w * h; }
  int max_edge() const { return l > w ? (l > h ? l : h) : (w > h ? w : h); }
  bool operator==(const BoxDims&) const = default;
};

// Sorts edges so l <= w <= h; in 2D only (l, w) are sorted and h stays 1.
BoxDims canonicalize(const BoxDims& b, int dims = 3);

inline constexpr int kOrient3 = 6;
inline constexpr int kOrient2 = 2;
inline int orientation_count(int dims) { return dims == 2 ? kOrient2 : kOrient3; }

// Fixed orientation order, 3D: identity, swap l<->w, swap l<->h, swap w<->h,
// rotate-left, rotate-right. 2D: identity, swap l<->w.
BoxDims orient(const BoxDims& b, int o, int dims = 3);

struct BinSpec {
  int W = 0, H = 0;
  long long L = 0;
  int dims = 3;
};

struct ProblemInstance {
  std::string id;
  BinSpec bin;
  std::vector<BoxDims> boxes;

  int n() const { return (int)boxes.size(); }
  long long total_volume() const;
  // Throws std::invalid_argument when a box fits the cross-section in no
  // orientation, dims are inconsistent, or an edge is non-positive.
  void validate() const;
};

// Bin whose length is the sum of max edges, long enough for any sequence.
BinSpec bin_for_boxes(const std::vector<BoxDims>& boxes, int W, int H, int dims);

// Per-box features: canonical edges divided by the instance max edge.
std::vector<std::array<double, 3>> normalize_features(const ProblemInstance& inst);

struct Placement {
  int s = 0;  // box index
  int o = 0;  // orientation index
  int x = 0, y = 0, z = 0;
};

struct Configuration {
  ProblemInstance instance;
  std::vector<Placement> placements;  // in placement order

  // Throws contract_error unless every box index appears exactly once.
  void require_complete() const;
};

}  // namespace binpack
