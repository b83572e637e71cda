#include "binpack/packer.hpp"

#include <algorithm>
#include <cmath>

namespace binpack {

PackState::PackState(const ProblemInstance& inst) : inst_(&inst), bin_(inst.bin) {
  inst.validate();
  heightmap_.assign((size_t)bin_.L * bin_.W, 0);
  frontier_cur_.assign((size_t)bin_.W * bin_.H, 0);
  frontier_prev_.assign((size_t)bin_.W * bin_.H, 0);
  packed_.assign(inst.boxes.size(), 0);
}

std::optional<std::pair<int, int>> PackState::locate(const BoxDims& b, int y) const {
  if (y < 0 || y + b.w > bin_.W) throw contract_error("locate: y out of range");
  const long long x_end = bin_.L - b.l;
  for (long long x = 0; x <= x_end; ++x) {
    int z = 0;
    for (int dx = 0; dx < b.l; ++dx) {
      const int* col = &heightmap_[(size_t)(x + dx) * bin_.W + y];
      for (int dy = 0; dy < b.w; ++dy) z = std::max(z, col[dy]);
    }
    if (z + b.h <= bin_.H) return std::make_pair((int)x, z);
  }
  return std::nullopt;
}

bool PackState::placement_feasible(const BoxDims& b, int y) const {
  if (y < 0 || y + b.w > bin_.W || b.h > bin_.H) return false;
  // Behind x_max every column is empty, so a fit there is guaranteed; the scan
  // is only needed when the bin is too short to hold the box past x_max.
  if (x_max_ + b.l <= bin_.L) return true;
  return locate(b, y).has_value();
}

std::vector<uint8_t> PackState::placement_mask(int s) const {
  if (is_packed(s)) throw contract_error("placement_mask: box already packed");
  const int O = orientation_count(bin_.dims);
  std::vector<uint8_t> mask((size_t)O * bin_.W, 0);
  for (int o = 0; o < O; ++o) {
    BoxDims d = orient(inst_->boxes[s], o, bin_.dims);
    if (d.h > bin_.H || d.w > bin_.W) continue;
    for (int y = 0; y + d.w <= bin_.W; ++y)
      mask[(size_t)o * bin_.W + y] = placement_feasible(d, y) ? 1 : 0;
  }
  return mask;
}

void PackState::apply(int s, int o, int y) {
  if (s < 0 || (size_t)s >= packed_.size()) throw contract_error("apply: bad box index");
  if (is_packed(s)) throw contract_error("apply: box already packed");
  BoxDims d = orient(inst_->boxes[s], o, bin_.dims);
  if (y < 0 || y + d.w > bin_.W || d.h > bin_.H) throw contract_error("apply: infeasible (o, y)");
  auto loc = locate(d, y);
  if (!loc) throw contract_error("apply: no feasible x");
  const auto [x, z] = *loc;

  for (int dx = 0; dx < d.l; ++dx) {
    int* col = &heightmap_[(size_t)(x + dx) * bin_.W + y];
    for (int dy = 0; dy < d.w; ++dy) col[dy] = z + d.h;
  }
  frontier_prev_ = frontier_cur_;
  for (int dy = 0; dy < d.w; ++dy) {
    int* row = &frontier_cur_[(size_t)(y + dy) * bin_.H];
    for (int dz = 0; dz < d.h; ++dz) row[z + dz] = std::max(row[z + dz], x + d.l);
  }
  placed_.push_back(PlacedBox{d, s, o, x, y, z});
  packed_[s] = 1;
  x_max_ = std::max(x_max_, (long long)x + d.l);
}

Configuration PackState::configuration() const {
  if (!complete()) throw contract_error("configuration: incomplete state");
  Configuration cfg;
  cfg.instance = *inst_;
  for (const auto& p : placed_) cfg.placements.push_back(Placement{p.s, p.o, p.x, p.y, p.z});
  return cfg;
}

Configuration replay_actions(const ProblemInstance& inst,
                             const std::vector<std::array<int, 3>>& actions) {
  PackState state(inst);
  for (const auto& a : actions) state.apply(a[0], a[1], a[2]);
  return state.configuration();
}

namespace {

bool face_overlap(int a0, int a1, int b0, int b1) {  // positive-length interval overlap
  return std::min(a1, b1) > std::max(a0, b0);
}

bool boxes_touch(const PlacedBox& a, const PlacedBox& b) {
  const bool oy = face_overlap(a.y, a.y + a.dims.w, b.y, b.y + b.dims.w);
  const bool oz = face_overlap(a.z, a.z + a.dims.h, b.z, b.z + b.dims.h);
  const bool ox = face_overlap(a.x, a.x + a.dims.l, b.x, b.x + b.dims.l);
  if (oy && oz && (a.x + a.dims.l == b.x || b.x + b.dims.l == a.x)) return true;
  if (ox && oz && (a.y + a.dims.w == b.y || b.y + b.dims.w == a.y)) return true;
  if (ox && oy && (a.z + a.dims.h == b.z || b.z + b.dims.h == a.z)) return true;
  return false;
}

}  // namespace

StateCheck check_state(const PackState& state) {
  const BinSpec& bin = state.bin();
  const auto& placed = state.placed();
  StateCheck out;
  auto fail = [&out](std::string msg) {
    out.ok = false;
    out.detail = std::move(msg);
    return out;
  };

  for (const auto& p : placed) {
    if (p.x < 0 || p.y < 0 || p.z < 0 || p.x + p.dims.l > bin.L || p.y + p.dims.w > bin.W ||
        p.z + p.dims.h > bin.H)
      return fail("box out of bounds");
  }
  for (size_t i = 0; i < placed.size(); ++i)
    for (size_t j = i + 1; j < placed.size(); ++j) {
      const auto& a = placed[i];
      const auto& b = placed[j];
      if (face_overlap(a.x, a.x + a.dims.l, b.x, b.x + b.dims.l) &&
          face_overlap(a.y, a.y + a.dims.w, b.y, b.y + b.dims.w) &&
          face_overlap(a.z, a.z + a.dims.h, b.z, b.z + b.dims.h))
        return fail("boxes overlap");
    }

  // Rearmost-x and drop-z: replaying locate() over the earlier boxes must give
  // back exactly the recorded position.
  for (size_t i = 0; i < placed.size(); ++i) {
    const auto& p = placed[i];
    for (int x = 0; x <= p.x; ++x) {
      int z = 0;
      for (size_t j = 0; j < i; ++j) {
        const auto& q = placed[j];
        if (face_overlap(x, x + p.dims.l, q.x, q.x + q.dims.l) &&
            face_overlap(p.y, p.y + p.dims.w, q.y, q.y + q.dims.w))
          z = std::max(z, q.z + q.dims.h);
      }
      if (x < p.x) {
        if (z + p.dims.h <= bin.H) return fail("x not minimal (earlier drop position fits)");
      } else if (z != p.z) {
        return fail("support violated (z is not the drop height)");
      }
    }
  }

  // Contact in the guaranteed form; strict face adjacency tracked as a count.
  for (size_t i = 0; i < placed.size(); ++i) {
    const auto& p = placed[i];
    if (p.x == 0 || p.z > 0) continue;
    bool blocked = false;
    for (size_t j = 0; j < i && !blocked; ++j) {
      const auto& q = placed[j];
      blocked = q.x + q.dims.l == p.x && face_overlap(p.y, p.y + p.dims.w, q.y, q.y + q.dims.w);
    }
    if (!blocked) return fail("contact violated (no rear wall, support or blocking face)");
  }
  for (size_t i = 0; i < placed.size(); ++i) {
    const auto& p = placed[i];
    if (p.x == 0) continue;
    bool touch = false;
    for (size_t j = 0; j < i && !touch; ++j) touch = boxes_touch(p, placed[j]);
    if (!touch) ++out.floor_only_contacts;
  }

  // Heightmap and frontier oracles: recompute from scratch.
  std::vector<int> hm((size_t)bin.L * bin.W, 0);
  std::vector<int> fr((size_t)bin.W * bin.H, 0);
  std::vector<int> fr_prev((size_t)bin.W * bin.H, 0);
  for (size_t i = 0; i < placed.size(); ++i) {
    const auto& p = placed[i];
    if (i + 1 == placed.size()) fr_prev = fr;
    for (int dx = 0; dx < p.dims.l; ++dx)
      for (int dy = 0; dy < p.dims.w; ++dy) {
        int& c = hm[(size_t)(p.x + dx) * bin.W + (p.y + dy)];
        c = std::max(c, p.z + p.dims.h);
      }
    for (int dy = 0; dy < p.dims.w; ++dy)
      for (int dz = 0; dz < p.dims.h; ++dz) {
        int& c = fr[(size_t)(p.y + dy) * bin.H + (p.z + dz)];
        c = std::max(c, p.x + p.dims.l);
      }
  }
  if (placed.empty()) fr_prev = fr;
  for (long long x = 0; x < bin.L; ++x)
    for (int y = 0; y < bin.W; ++y)
      if (hm[(size_t)x * bin.W + y] != state.height_at((int)x, y)) return fail("heightmap mismatch");
  if (fr != state.frontier_cur()) return fail("frontier_cur mismatch");
  if (fr_prev != state.frontier_prev()) return fail("frontier_prev mismatch");

  long long xm = 0;
  for (const auto& p : placed) xm = std::max(xm, (long long)p.x + p.dims.l);
  if (xm != state.x_max()) return fail("x_max mismatch");
  return out;
}

namespace {

struct Extents {
  long long lc = 0;  // max x + l
  int min_x = 0, min_y = 0, min_z = 0, max_x = 0, max_y = 0, max_z = 0;
};

Extents extents_of(const Configuration& cfg) {
  cfg.require_complete();
  Extents e;
  bool first = true;
  for (const auto& p : cfg.placements) {
    BoxDims d = orient(cfg.instance.boxes[p.s], p.o, cfg.instance.bin.dims);
    e.lc = std::max(e.lc, (long long)p.x + d.l);
    if (first) {
      e.min_x = p.x;
      e.min_y = p.y;
      e.min_z = p.z;
      e.max_x = p.x + d.l;
      e.max_y = p.y + d.w;
      e.max_z = p.z + d.h;
      first = false;
    } else {
      e.min_x = std::min(e.min_x, p.x);
      e.min_y = std::min(e.min_y, p.y);
      e.min_z = std::min(e.min_z, p.z);
      e.max_x = std::max(e.max_x, p.x + d.l);
      e.max_y = std::max(e.max_y, p.y + d.w);
      e.max_z = std::max(e.max_z, p.z + d.h);
    }
  }
  return e;
}

}  // namespace

double utility(const Configuration& cfg) {
  Extents e = extents_of(cfg);
  long long vol = cfg.instance.total_volume();
  long long denom = e.lc * cfg.instance.bin.W * cfg.instance.bin.H;
  return double(vol) / double(denom);
}

bool utility_is_exact_one(const Configuration& cfg) {
  Extents e = extents_of(cfg);
  return cfg.instance.total_volume() == e.lc * cfg.instance.bin.W * cfg.instance.bin.H;
}

double cost(const Configuration& cfg) { return 1.0 - utility(cfg); }

double reward_rr(const Configuration& cfg) {
  Extents e = extents_of(cfg);
  const double L = double(e.max_x - e.min_x);
  const double W = double(e.max_y - e.min_y);
  if (cfg.instance.bin.dims == 2) {
    double area = 0;
    for (const auto& b : cfg.instance.boxes) area += double(b.l) * b.w;
    return 2.0 * std::sqrt(area) / (L + W);
  }
  const double H = double(e.max_z - e.min_z);
  const double vol = double(cfg.instance.total_volume());
  return 3.0 * std::pow(vol, 2.0 / 3.0) / (L * W + W * H + H * L);
}

double reward_l(const Configuration& cfg) {
  if (cfg.instance.bin.dims != 2) throw contract_error("reward_l: 2D only");
  Extents e = extents_of(cfg);
  double area = 0;
  for (const auto& b : cfg.instance.boxes) area += double(b.l) * b.w;
  return double(e.lc - e.min_x) / (area / cfg.instance.bin.W);
}

TrimResult online_trim(const Configuration& cfg, const BinSpec& cube) {
  cfg.require_complete();
  TrimResult r;
  long long kept_vol = 0;
  for (const auto& p : cfg.placements) {
    BoxDims d = orient(cfg.instance.boxes[p.s], p.o, cfg.instance.bin.dims);
    if (p.x >= 0 && p.y >= 0 && p.z >= 0 && p.x + d.l <= cube.L && p.y + d.w <= cube.W &&
        p.z + d.h <= cube.H) {
      ++r.kept;
      kept_vol += d.volume();
    }
  }
  r.trimmed_utility = double(kept_vol) / (double(cube.L) * cube.W * cube.H);
  return r;
}

}  // namespace binpack
