#pragma once
// Deterministic packing environment. Placement rule: the caller picks the box,
// orientation and y; x is the first (rearmost) scan position whose drop height
// fits under the ceiling, z is the drop height over the footprint. States are
// single-owner and mutated in place only by apply().

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "binpack/geometry.hpp"

namespace binpack {

struct PlacedBox {
  BoxDims dims;  // oriented
  int s = 0, o = 0;
  int x = 0, y = 0, z = 0;
};

class PackState {
 public:
  explicit PackState(const ProblemInstance& inst);

  const ProblemInstance& instance() const { return *inst_; }
  const BinSpec& bin() const { return bin_; }
  const std::vector<PlacedBox>& placed() const { return placed_; }
  const std::vector<uint8_t>& packed_mask() const { return packed_; }
  bool is_packed(int s) const { return packed_[s] != 0; }
  int n_packed() const { return (int)placed_.size(); }
  bool complete() const { return placed_.size() == inst_->boxes.size(); }
  long long x_max() const { return x_max_; }

  int height_at(int x, int y) const { return heightmap_[(size_t)x * bin_.W + y]; }
  // Frontier matrices indexed [y * H + z]; cur reflects all placements so far,
  // prev reflects all but the latest. Both zero before the first placement.
  const std::vector<int>& frontier_cur() const { return frontier_cur_; }
  const std::vector<int>& frontier_prev() const { return frontier_prev_; }

  // First x (scanning 0, 1, ...) where the oriented box dropped at y fits
  // below the ceiling; pairs it with the drop height z.
  std::optional<std::pair<int, int>> locate(const BoxDims& oriented, int y) const;

  // O x W entries at [o * W + y]: true iff the oriented box stays inside the
  // cross-section and locate() succeeds.
  std::vector<uint8_t> placement_mask(int s) const;
  bool placement_feasible(const BoxDims& oriented, int y) const;

  // Places box s; throws contract_error when the mask is false at (o, y) or
  // the box is already packed.
  void apply(int s, int o, int y);

  Configuration configuration() const;  // requires a complete state

 private:
  const ProblemInstance* inst_;
  BinSpec bin_;
  std::vector<int> heightmap_;  // L x W, [x * W + y]
  std::vector<int> frontier_cur_, frontier_prev_;
  std::vector<uint8_t> packed_;
  std::vector<PlacedBox> placed_;
  long long x_max_ = 0;
};

// Recomputes every maintained structure from the placement list and checks the
// geometric invariants: in-bounds, pairwise disjoint, rearmost-x minimality,
// drop support, contact, heightmap and frontier oracles. Contact is the
// guaranteed form: rear wall, resting on a box (z > 0), or pressed against a
// blocking front face at the same x. Strict any-face adjacency can fail in
// reachable states (an elevated overhang can block the scan without sharing a
// face with the incoming box); such placements are counted separately.
struct StateCheck {
  bool ok = true;
  std::string detail;        // first failure
  int floor_only_contacts = 0;  // placements whose only strict contact is the floor
};
StateCheck check_state(const PackState& state);

// Replays (s, o, y) actions from scratch; throws on any infeasible action.
Configuration replay_actions(const ProblemInstance& inst,
                             const std::vector<std::array<int, 3>>& actions);

// ---- Terminal metrics -------------------------------------------------------

// r_u = sum of box volumes / (L_C * W * H), L_C = max over placed of x + l.
double utility(const Configuration& cfg);
// Exact integer test for r_u == 1.
bool utility_is_exact_one(const Configuration& cfg);
double cost(const Configuration& cfg);  // 1 - r_u

// 2D: 2 * sqrt(sum lw) / (L_pi + W_pi); 3D: 3 * (sum lwh)^(2/3) /
// (L W + W H + H L) over the bounding extents of the packed set.
double reward_rr(const Configuration& cfg);

// r_L = L_pi / (sum lw / W), 2D only; 1.0 for gap-free packs, larger is worse.
double reward_l(const Configuration& cfg);

struct TrimResult {
  int kept = 0;
  double trimmed_utility = 0.0;
};
// Drops every box at least partially outside the cube, returns the survivors
// and their volume over the cube volume.
TrimResult online_trim(const Configuration& cfg, const BinSpec& cube);

}  // namespace binpack
