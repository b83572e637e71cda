#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "binpack/packer.hpp"
#include "binpack/rng.hpp"
#include "geometry_oracle.hpp"

using namespace binpack;

namespace {

ProblemInstance make_instance(std::vector<BoxDims> boxes, int W, int H, int dims,
                              std::string id = "t") {
  ProblemInstance inst;
  inst.id = std::move(id);
  inst.boxes = std::move(boxes);
  inst.bin = bin_for_boxes(inst.boxes, W, H, dims);
  return inst;
}

ProblemInstance random_instance(Rng& rng, int max_n = 6, int max_side = 12) {
  const int dims = rng.below(2) ? 3 : 2;
  const int W = (int)rng.uniform_int(2, max_side);
  const int H = dims == 2 ? 1 : (int)rng.uniform_int(2, max_side);
  const int n = (int)rng.uniform_int(1, max_n);
  std::vector<BoxDims> boxes;
  for (int i = 0; i < n; ++i) {
    int cap = std::max(W, H);  // keeps every box placeable in some orientation
    BoxDims b{(int)rng.uniform_int(1, cap), (int)rng.uniform_int(1, std::max(2, W)),
              dims == 2 ? 1 : (int)rng.uniform_int(1, cap)};
    boxes.push_back(canonicalize(b, dims));
  }
  auto inst = make_instance(std::move(boxes), W, H, dims);
  // Reject and redraw boxes that fit nowhere (possible when W and H are small).
  try {
    inst.validate();
  } catch (const std::invalid_argument&) {
    return random_instance(rng, max_n, max_side);
  }
  return inst;
}

}  // namespace

TEST_CASE("canonicalize sorts edges") {
  CHECK(canonicalize({5, 2, 3}) == BoxDims{2, 3, 5});
  CHECK(canonicalize({4, 4, 4}) == BoxDims{4, 4, 4});
  CHECK(canonicalize({10, 1, 7}) == BoxDims{1, 7, 10});
  CHECK(canonicalize({7, 3, 1}, 2) == BoxDims{3, 7, 1});
  CHECK_THROWS_AS(canonicalize({0, 1, 1}), std::invalid_argument);
}

TEST_CASE("orient enumerates axis permutations") {
  CHECK(orient({1, 2, 3}, 0) == BoxDims{1, 2, 3});
  for (int o = 0; o < kOrient3; ++o) CHECK(orient({2, 2, 2}, o) == BoxDims{2, 2, 2});

  std::set<std::array<int, 3>> perms;
  for (int o = 0; o < kOrient3; ++o) {
    BoxDims d = orient({1, 2, 3}, o);
    perms.insert({d.l, d.w, d.h});
  }
  CHECK(perms.size() == 6);

  CHECK(orient({3, 5, 1}, 1, 2) == BoxDims{5, 3, 1});
  CHECK_THROWS_AS(orient({1, 2, 3}, 6), std::domain_error);
  CHECK_THROWS_AS(orient({1, 2, 1}, 2, 2), std::domain_error);
}

TEST_CASE("locate picks the rearmost drop position") {
  auto inst = make_instance({{2, 2, 2}, {2, 2, 2}, {2, 2, 10}}, 10, 10, 3);
  PackState s(inst);

  SUBCASE("empty bin lands at the rear-left-bottom") {
    auto loc = s.locate({2, 2, 2}, 0);
    REQUIRE(loc.has_value());
    CHECK(*loc == std::make_pair(0, 0));
    auto loc7 = s.locate({2, 2, 2}, 7);
    REQUIRE(loc7.has_value());
    CHECK(*loc7 == std::make_pair(0, 0));
  }

  SUBCASE("stacks on a low box") {
    s.apply(0, 0, 0);  // (2,2,2) at origin
    auto loc = s.locate({2, 2, 2}, 0);
    REQUIRE(loc.has_value());
    CHECK(*loc == std::make_pair(0, 2));
  }

  SUBCASE("skips a full-height column") {
    s.apply(2, 0, 0);  // (2,2,10) at origin
    auto loc = s.locate({2, 2, 2}, 0);
    REQUIRE(loc.has_value());
    CHECK(*loc == std::make_pair(2, 0));
  }
}

TEST_CASE("placement mask matches wall bounds") {
  auto inst = make_instance({{2, 3, 5}, {1, 1, 1}}, 10, 10, 3);
  PackState s(inst);
  auto mask = s.placement_mask(0);
  for (int o = 0; o < kOrient3; ++o) {
    BoxDims d = orient(inst.boxes[0], o, 3);
    for (int y = 0; y < 10; ++y) {
      const bool expect = y + d.w <= 10;  // h always fits in this bin
      CHECK((bool)mask[o * 10 + y] == expect);
    }
  }
}

TEST_CASE("oversized box is infeasible everywhere") {
  auto inst = make_instance({{1, 2, 2}}, 10, 2, 3);
  PackState s(inst);
  // A 3x3x3 box has h = 3 > H = 2 in every orientation.
  for (int o = 0; o < kOrient3; ++o) {
    BoxDims d = orient({3, 3, 3}, o, 3);
    for (int y = 0; y + d.w <= 10; ++y) CHECK_FALSE(s.placement_feasible(d, y));
  }
}

TEST_CASE("mask soundness: true entries apply, false entries throw") {
  Rng rng(41);
  for (int trial = 0; trial < 60; ++trial) {
    auto inst = random_instance(rng);
    PackState s(inst);
    const int O = orientation_count(inst.bin.dims);
    for (int step = 0; step < inst.n(); ++step) {
      int box = -1;
      for (int i = 0; i < inst.n(); ++i)
        if (!s.is_packed(i)) {
          box = i;
          break;
        }
      auto mask = s.placement_mask(box);
      int picked = -1;
      for (int a = 0; a < O * inst.bin.W; ++a) {
        PackState copy = s;
        if (mask[a]) {
          CHECK_NOTHROW(copy.apply(box, a / inst.bin.W, a % inst.bin.W));
          if (picked < 0) picked = a;
        } else {
          CHECK_THROWS_AS(copy.apply(box, a / inst.bin.W, a % inst.bin.W), contract_error);
        }
      }
      REQUIRE(picked >= 0);  // instances are constructed so every box fits somewhere
      s.apply(box, picked / inst.bin.W, picked % inst.bin.W);
    }
  }
}

TEST_CASE("locate and mask agree with the brute-force oracle") {
  Rng rng(42);
  for (int trial = 0; trial < 120; ++trial) {
    auto inst = random_instance(rng);
    PackState s(inst);
    testing::OracleSim oracle(inst.bin);
    const int O = orientation_count(inst.bin.dims);
    std::vector<int> order(inst.n());
    for (int i = 0; i < inst.n(); ++i) order[i] = i;
    rng.shuffle(order);

    for (int box : order) {
      // Compare locate against the oracle for every (o, y) before acting.
      auto mask = s.placement_mask(box);
      for (int o = 0; o < O; ++o) {
        BoxDims d = orient(inst.boxes[box], o, inst.bin.dims);
        if (d.w > inst.bin.W || d.h > inst.bin.H) continue;
        for (int y = 0; y + d.w <= inst.bin.W; ++y) {
          auto got = s.locate(d, y);
          auto want = oracle.locate(d, y);
          CHECK(got == want);
          CHECK((bool)mask[o * inst.bin.W + y] == want.has_value());
        }
      }
      // Take a random feasible action and mirror it into the oracle.
      std::vector<int> feas;
      for (int a = 0; a < O * inst.bin.W; ++a)
        if (mask[a]) feas.push_back(a);
      REQUIRE(!feas.empty());
      int a = feas[rng.below(feas.size())];
      int o = a / inst.bin.W, y = a % inst.bin.W;
      BoxDims d = orient(inst.boxes[box], o, inst.bin.dims);
      auto loc = s.locate(d, y);
      s.apply(box, o, y);
      oracle.place(d, loc->first, y, loc->second);
      auto chk = check_state(s);
      INFO(chk.detail);
      CHECK(chk.ok);
    }
  }
}

TEST_CASE("elevated overhang can block without sharing a face") {
  // An overhanging slab resting on a tall box blocks the x-scan from above;
  // the next box lands on the floor in front of it, touching nothing. The
  // guaranteed contact form (blocking front face at x) still holds.
  auto inst = make_instance({{3, 3, 8}, {1, 5, 9}, {5, 6, 7}}, 9, 9, 3);
  PackState s(inst);
  s.apply(0, 0, 4);  // (3,3,8) at (0,4,0)
  s.apply(1, 2, 1);  // slab oriented (9,5,1), dropped to (0,1,8), overhangs to x=9
  s.apply(2, 1, 3);  // (6,5,7) forced to (9,3,0): floor only
  const auto& p = s.placed().back();
  CHECK(p.x == 9);
  CHECK(p.z == 0);
  auto chk = check_state(s);
  INFO(chk.detail);
  CHECK(chk.ok);
  CHECK(chk.floor_only_contacts == 1);
}

TEST_CASE("apply is deterministic for a fixed action sequence") {
  Rng rng(7);
  auto inst = random_instance(rng);
  std::vector<std::array<int, 3>> actions;
  {
    PackState s(inst);
    const int O = orientation_count(inst.bin.dims);
    for (int i = 0; i < inst.n(); ++i) {
      auto mask = s.placement_mask(i);
      std::vector<int> feas;
      for (int a = 0; a < O * inst.bin.W; ++a)
        if (mask[a]) feas.push_back(a);
      int a = feas[rng.below(feas.size())];
      actions.push_back({i, a / inst.bin.W, a % inst.bin.W});
      s.apply(i, a / inst.bin.W, a % inst.bin.W);
    }
  }
  auto c1 = replay_actions(inst, actions);
  auto c2 = replay_actions(inst, actions);
  REQUIRE(c1.placements.size() == c2.placements.size());
  for (size_t i = 0; i < c1.placements.size(); ++i) {
    CHECK(c1.placements[i].s == c2.placements[i].s);
    CHECK(c1.placements[i].o == c2.placements[i].o);
    CHECK(c1.placements[i].x == c2.placements[i].x);
    CHECK(c1.placements[i].y == c2.placements[i].y);
    CHECK(c1.placements[i].z == c2.placements[i].z);
  }
  CHECK(utility(c1) == utility(c2));
}

TEST_CASE("utility evaluates the bounding length") {
  SUBCASE("single full box") {
    auto inst = make_instance({{10, 10, 10}}, 10, 10, 3);
    auto cfg = replay_actions(inst, {{0, 0, 0}});
    CHECK(utility(cfg) == 1.0);
    CHECK(utility_is_exact_one(cfg));
    CHECK(cost(cfg) == 0.0);
  }
  SUBCASE("two slabs, packed vs gapped") {
    auto inst = make_instance({{5, 10, 10}, {5, 10, 10}}, 10, 10, 3);
    auto cfg = replay_actions(inst, {{0, 0, 0}, {1, 0, 0}});
    CHECK(utility(cfg) == 1.0);

    Configuration gap;
    gap.instance = inst;
    gap.placements = {{0, 0, 0, 0, 0}, {1, 0, 10, 0, 0}};  // forced gap, L_C = 15
    CHECK(utility(gap) == doctest::Approx(1000.0 / 1500.0));
    CHECK_FALSE(utility_is_exact_one(gap));
  }
  SUBCASE("incomplete configuration is rejected") {
    auto inst = make_instance({{2, 2, 2}, {2, 2, 2}}, 10, 10, 3);
    Configuration cfg;
    cfg.instance = inst;
    cfg.placements = {{0, 0, 0, 0, 0}};
    CHECK_THROWS_AS(utility(cfg), contract_error);
  }
}

TEST_CASE("reward_rr for square and cube packs") {
  SUBCASE("2D") {
    auto inst = make_instance({{5, 10, 1}, {5, 10, 1}}, 10, 1, 2);
    auto cfg = replay_actions(inst, {{0, 0, 0}, {1, 0, 0}});
    CHECK(reward_rr(cfg) == doctest::Approx(1.0));

    // Same boxes side by side across a 20-wide bin: extents 5 x 20.
    ProblemInstance wide = make_instance({{5, 10, 1}, {5, 10, 1}}, 20, 1, 2);
    Configuration stacked;
    stacked.instance = wide;
    stacked.placements = {{0, 0, 0, 0, 0}, {1, 0, 0, 10, 0}};
    CHECK(reward_rr(stacked) == doctest::Approx(0.8));
  }
  SUBCASE("3D perfect cube") {
    auto inst = make_instance({{5, 10, 10}, {5, 10, 10}}, 10, 10, 3);
    auto cfg = replay_actions(inst, {{0, 0, 0}, {1, 0, 0}});
    CHECK(reward_rr(cfg) == doctest::Approx(1.0));
  }
}

TEST_CASE("reward_l is the printed ratio") {
  auto inst = make_instance({{10, 10, 1}, {5, 10, 1}}, 15, 1, 2);
  // Gap-free: area 150 over W = 15, L_pi = 10.
  Configuration cfg;
  cfg.instance = inst;
  cfg.placements = {{0, 0, 0, 0, 0}, {1, 1, 0, 10, 0}};  // (5,10) rotated to (10,5)
  CHECK(reward_l(cfg) == doctest::Approx(1.0));

  Configuration gap;
  gap.instance = inst;
  gap.placements = {{0, 0, 0, 0, 0}, {1, 1, 2, 10, 0}};  // pushed to x = 2, L_pi = 12
  CHECK(reward_l(gap) == doctest::Approx(1.2));

  auto single = make_instance({{15, 15, 1}}, 15, 1, 2);
  auto scfg = replay_actions(single, {{0, 0, 0}});
  CHECK(reward_l(scfg) == doctest::Approx(1.0));

  auto inst3 = make_instance({{2, 2, 2}}, 10, 10, 3);
  auto cfg3 = replay_actions(inst3, {{0, 0, 0}});
  CHECK_THROWS_AS(reward_l(cfg3), contract_error);
}

TEST_CASE("online trim counts boxes inside the cube") {
  auto inst = make_instance({{4, 4, 4}, {4, 4, 4}, {4, 4, 4}}, 10, 10, 3);
  auto cfg = replay_actions(inst, {{0, 0, 0}, {1, 0, 4}, {2, 0, 0}});
  BinSpec cube{10, 10, 10, 3};
  auto all_in = online_trim(cfg, cube);
  CHECK(all_in.kept == 3);
  CHECK(all_in.trimmed_utility == doctest::Approx(3 * 64 / 1000.0));

  Configuration out = cfg;
  out.placements[2].x = 8;  // 8 + 4 > 10: partially outside
  auto trimmed = online_trim(out, cube);
  CHECK(trimmed.kept == 2);
  CHECK(trimmed.trimmed_utility == doctest::Approx(2 * 64 / 1000.0));
}

TEST_CASE("2D states behave as flat packing") {
  auto inst = make_instance({{3, 7, 1}, {3, 7, 1}, {4, 10, 1}}, 10, 1, 2);
  PackState s(inst);
  s.apply(0, 0, 0);  // (3,7) at x 0
  // Same footprint band: must move forward; disjoint band: drops to x 0.
  auto loc_same = s.locate({3, 7, 1}, 0);
  REQUIRE(loc_same.has_value());
  CHECK(*loc_same == std::make_pair(3, 0));
  auto loc_off = s.locate({3, 3, 1}, 7);
  REQUIRE(loc_off.has_value());
  CHECK(*loc_off == std::make_pair(0, 0));
  // Frontier with H = 1 is the per-lane front extent.
  s.apply(1, 0, 0);
  CHECK(s.frontier_cur()[0] == 6);
  CHECK(s.frontier_prev()[0] == 3);
  CHECK(s.frontier_cur()[7] == 0);
}
