#include <binpack/datagen.hpp>
#include <binpack/packer.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace binpack {

void DatasetSpec::validate() const {
  if (kind != "cut" && kind != "random")
    throw std::invalid_argument("kind must be cut or random");
  if (dims != 2 && dims != 3) throw std::invalid_argument("dims must be 2 or 3");
  if (dims == 2 && H != 1) throw std::invalid_argument("2D datasets require H = 1");
  if (W < 1 || H < 1) throw std::invalid_argument("bin dims must be positive");
  if (n < 1) throw std::invalid_argument("n must be positive");
  if (count < 1) throw std::invalid_argument("count must be positive");
  if (edge_min < 1 || edge_min > edge_max)
    throw std::invalid_argument("need 1 <= edge_min <= edge_max");
  if (kind == "cut") {
    if (n > 64) throw std::invalid_argument("cut supports at most 64 boxes");
    long long min_vol = 1;
    for (int d = 0; d < dims; ++d) min_vol *= edge_min;
    long long cuboid = (long long)edge_max * W * H;
    if ((long long)n * min_vol > cuboid)
      throw std::invalid_argument("unreachable cut spec: n * edge_min^dims exceeds cuboid volume");
  }
}

namespace {

struct Cuboid {
  int x = 0, y = 0, z = 0;
  BoxDims d;
};

// Guillotine cutting of (edge_max, W, H): repeatedly pick a piece with
// probability proportional to volume, an axis proportional to its lengths,
// and a cut point proportional to its distance from the axis center
// (weight |j - e/2| + 1/2); the cut is kept only if both halves respect the
// minimum edge. Stops once n pieces exist. Returns false on stall (a spec can
// be satisfiable in volume yet uncuttable from some intermediate shapes).
bool cut_layout(const DatasetSpec& spec, Rng& rng, std::vector<Cuboid>& out) {
  const int M = spec.edge_min;
  std::vector<Cuboid> live;
  live.push_back({0, 0, 0, {spec.edge_max, spec.W, spec.H}});
  long long rounds = 0, max_rounds = 10000 + 1000LL * spec.n;
  std::vector<double> weights;
  while ((int)live.size() < spec.n) {
    if (++rounds > max_rounds) return false;
    weights.clear();
    for (const auto& c : live) weights.push_back((double)c.d.volume());
    size_t bi = rng.discrete(weights);
    Cuboid b = live[bi];
    live.erase(live.begin() + bi);

    weights = {(double)b.d.l, (double)b.d.w};
    if (spec.dims == 3) weights.push_back((double)b.d.h);
    int axis = (int)rng.discrete(weights);
    int e = axis == 0 ? b.d.l : axis == 1 ? b.d.w : b.d.h;
    if (e >= 2) {
      weights.clear();
      for (int j = 1; j < e; ++j) weights.push_back(std::abs(j - e / 2.0) + 0.5);
      int j = 1 + (int)rng.discrete(weights);
      if (j >= M && e - j >= M) {
        Cuboid b1 = b, b2 = b;
        if (axis == 0) {
          b1.d.l = j;
          b2.d.l = e - j;
          b2.x += j;
        } else if (axis == 1) {
          b1.d.w = j;
          b2.d.w = e - j;
          b2.y += j;
        } else {
          b1.d.h = j;
          b2.d.h = e - j;
          b2.z += j;
        }
        live.push_back(b1);
        live.push_back(b2);
        continue;
      }
    }
    live.push_back(b);
  }
  out = std::move(live);
  return true;
}

int orientation_of(const BoxDims& canonical, const BoxDims& oriented, int dims) {
  for (int o = 0; o < orientation_count(dims); ++o)
    if (orient(canonical, o, dims) == oriented) return o;
  throw std::logic_error("oriented dims are not a permutation of the canonical box");
}

// Applies the placements in the given order and accepts only if the
// environment lands every box exactly at its stored position.
bool try_replay_order(const ProblemInstance& inst, const std::vector<Placement>& order,
                      std::vector<std::array<int, 3>>& actions) {
  PackState st(inst);
  actions.clear();
  for (const auto& p : order) {
    BoxDims d = orient(inst.boxes[(size_t)p.s], p.o, inst.bin.dims);
    auto loc = st.locate(d, p.y);
    if (!loc || loc->first != p.x || loc->second != p.z) return false;
    st.apply(p.s, p.o, p.y);
    actions.push_back({p.s, p.o, p.y});
  }
  return true;
}

// Exhaustive ordering search with dead-state memoization: a box is placeable
// only while the drop scan reproduces its stored (x, z) exactly, so every
// DFS prefix rebuilds the partial layout verbatim and states are identified
// by their placed-set alone.
struct ReplaySearch {
  const ProblemInstance& inst;
  const std::vector<Placement>& ps;  // sorted (z, x, y): natural order first
  std::unordered_set<std::uint64_t> dead;
  std::vector<int> chosen;
  long long budget = 200000;

  bool run(std::vector<std::array<int, 3>>& actions) {
    if (!step()) return false;
    actions.clear();
    for (int i : chosen) actions.push_back({ps[(size_t)i].s, ps[(size_t)i].o, ps[(size_t)i].y});
    return true;
  }

  bool step() {
    if (chosen.size() == ps.size()) return true;
    std::uint64_t mask = 0;
    for (int i : chosen) mask |= 1ull << i;
    if (dead.count(mask)) return false;
    if (--budget < 0) return false;
    PackState st(inst);
    for (int i : chosen) st.apply(ps[(size_t)i].s, ps[(size_t)i].o, ps[(size_t)i].y);
    for (size_t i = 0; i < ps.size(); ++i) {
      if (mask >> i & 1) continue;
      const auto& p = ps[i];
      BoxDims d = orient(inst.boxes[(size_t)p.s], p.o, inst.bin.dims);
      auto loc = st.locate(d, p.y);
      if (loc && loc->first == p.x && loc->second == p.z) {
        chosen.push_back((int)i);
        if (step()) return true;
        chosen.pop_back();
      }
    }
    dead.insert(mask);
    return false;
  }
};

bool certificate_actions(const ProblemInstance& inst, std::vector<Placement> placements,
                         std::vector<std::array<int, 3>>& actions) {
  auto by_zxy = [](const Placement& a, const Placement& b) {
    return std::tie(a.z, a.x, a.y) < std::tie(b.z, b.x, b.y);
  };
  auto by_xzy = [](const Placement& a, const Placement& b) {
    return std::tie(a.x, a.z, a.y) < std::tie(b.x, b.z, b.y);
  };
  std::sort(placements.begin(), placements.end(), by_xzy);
  if (try_replay_order(inst, placements, actions)) return true;  // always works in 2D
  std::sort(placements.begin(), placements.end(), by_zxy);
  if (try_replay_order(inst, placements, actions)) return true;
  ReplaySearch search{inst, placements, {}, {}, 200000};
  return search.run(actions);
}

InstanceRecord make_cut_instance(const DatasetSpec& spec, Rng& rng, bool& ok) {
  std::vector<Cuboid> layout;
  if (!cut_layout(spec, rng, layout)) {
    ok = false;
    return {};
  }
  const int n = spec.n;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<int> pos(n);  // generation index -> instance index
  for (int i = 0; i < n; ++i) pos[order[(size_t)i]] = i;

  InstanceRecord rec;
  rec.instance.boxes.resize((size_t)n);
  Certificate cert;
  cert.placements.resize((size_t)n);
  for (int g = 0; g < n; ++g) {
    const Cuboid& c = layout[(size_t)g];
    BoxDims canon = canonicalize(c.d, spec.dims);
    int s = pos[(size_t)g];
    rec.instance.boxes[(size_t)s] = canon;
    cert.placements[(size_t)g] = {s, orientation_of(canon, c.d, spec.dims), c.x, c.y, c.z};
  }
  rec.instance.bin = bin_for_boxes(rec.instance.boxes, spec.W, spec.H, spec.dims);
  rec.instance.validate();
  if (!certificate_actions(rec.instance, cert.placements, cert.actions)) {
    ok = false;
    return {};
  }
  std::sort(cert.placements.begin(), cert.placements.end(),
            [](const Placement& a, const Placement& b) { return a.s < b.s; });
  rec.certificate = std::move(cert);
  ok = true;
  return rec;
}

InstanceRecord make_random_instance(const DatasetSpec& spec, Rng& rng) {
  InstanceRecord rec;
  for (int i = 0; i < spec.n; ++i) {
    BoxDims b;
    b.l = (int)rng.uniform_int(spec.edge_min, spec.edge_max);
    b.w = (int)rng.uniform_int(spec.edge_min, spec.edge_max);
    b.h = spec.dims == 2 ? 1 : (int)rng.uniform_int(spec.edge_min, spec.edge_max);
    rec.instance.boxes.push_back(canonicalize(b, spec.dims));
  }
  rng.shuffle(rec.instance.boxes);
  rec.instance.bin = bin_for_boxes(rec.instance.boxes, spec.W, spec.H, spec.dims);
  rec.instance.validate();
  return rec;
}

}  // namespace

InstanceRecord generate_instance(const DatasetSpec& spec, std::uint64_t index) {
  spec.validate();
  std::string id = spec.kind + (spec.dims == 2 ? "2d-" : "3d-") + std::to_string(spec.seed) +
                   "-" + std::to_string(index);
  // A cut attempt can stall or produce a layout whose replay search fails;
  // each retry draws from a fresh sub-stream so the result stays a pure
  // function of (seed, index).
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    Rng rng = Rng::stream(spec.seed, index + (attempt << 48));
    InstanceRecord rec;
    if (spec.kind == "cut") {
      bool ok = false;
      rec = make_cut_instance(spec, rng, ok);
      if (!ok) continue;
    } else {
      rec = make_random_instance(spec, rng);
    }
    rec.instance.id = id;
    return rec;
  }
  throw std::runtime_error("instance generation failed repeatedly: " + id);
}

std::vector<InstanceRecord> generate_dataset(const DatasetSpec& spec) {
  spec.validate();
  std::vector<InstanceRecord> out;
  out.reserve((size_t)spec.count);
  for (int i = 0; i < spec.count; ++i) out.push_back(generate_instance(spec, (std::uint64_t)i));
  return out;
}

ProblemInstance permuted(const ProblemInstance& inst, Rng& rng) {
  ProblemInstance out = inst;
  rng.shuffle(out.boxes);
  return out;
}

Configuration replay_certificate(const InstanceRecord& rec) {
  if (!rec.certificate) throw std::invalid_argument("instance has no certificate");
  const Certificate& cert = *rec.certificate;
  Configuration cfg = replay_actions(rec.instance, cert.actions);
  if (cfg.placements.size() != cert.placements.size())
    throw std::runtime_error("certificate replay: placement count mismatch");
  auto replayed = cfg.placements;
  std::sort(replayed.begin(), replayed.end(),
            [](const Placement& a, const Placement& b) { return a.s < b.s; });
  const int dims = rec.instance.bin.dims;
  for (size_t i = 0; i < replayed.size(); ++i) {
    const Placement& got = replayed[i];
    const Placement& want = cert.placements[i];
    bool same = got.s == want.s && got.x == want.x && got.y == want.y && got.z == want.z &&
                orient(rec.instance.boxes[(size_t)got.s], got.o, dims) ==
                    orient(rec.instance.boxes[(size_t)want.s], want.o, dims);
    if (!same) throw std::runtime_error("certificate replay: layout mismatch");
  }
  return cfg;
}

}  // namespace binpack
