#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "binpack/datagen.hpp"
#include "binpack/io.hpp"
#include "binpack/packer.hpp"

using namespace binpack;

namespace {

DatasetSpec cut_spec(int dims, int n, std::uint64_t seed, int count = 1) {
  DatasetSpec s;
  s.kind = "cut";
  s.dims = dims;
  s.W = 10;
  s.H = dims == 2 ? 1 : 10;
  s.n = n;
  s.edge_min = 1;
  s.edge_max = 10;
  s.count = count;
  s.seed = seed;
  return s;
}

std::string temp_path(const char* name) {
  return std::string("/tmp/binpack_test_") + name;
}

}  // namespace

TEST_CASE("dataset spec validation rejects bad parameters") {
  DatasetSpec s = cut_spec(3, 10, 1);
  CHECK_NOTHROW(s.validate());
  s.kind = "fancy";
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = cut_spec(2, 10, 1);
  s.H = 4;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = cut_spec(3, 10, 1);
  s.edge_min = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = cut_spec(3, 10, 1);
  s.edge_min = 7;  // 10 boxes of min volume 343 cannot tile 1000 cells
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = cut_spec(3, 10, 1);
  s.n = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("cut conserves volume and produces exactly n boxes with legal edges") {
  for (int dims : {2, 3}) {
    DatasetSpec spec = cut_spec(dims, 10, 7, 200);
    long long cuboid = (long long)spec.edge_max * spec.W * spec.H;
    auto recs = generate_dataset(spec);
    REQUIRE(recs.size() == 200);
    for (const auto& rec : recs) {
      REQUIRE(rec.instance.n() == 10);
      CHECK(rec.instance.total_volume() == cuboid);
      for (const auto& b : rec.instance.boxes) {
        CHECK(b.l >= 1);
        CHECK(b.h <= 10);  // canonical, so h is the largest edge
        if (dims == 2) CHECK(b.h == 1);
      }
    }
  }
}

TEST_CASE("cut with n = 1 returns the whole cuboid") {
  auto rec = generate_instance(cut_spec(3, 1, 3), 0);
  REQUIRE(rec.instance.n() == 1);
  CHECK(rec.instance.boxes[0] == canonicalize({10, 10, 10}));
  REQUIRE(rec.certificate.has_value());
  auto cfg = replay_certificate(rec);
  CHECK(utility(cfg) == 1.0);
}

TEST_CASE("cut certificates replay to gap-free layouts") {
  for (int dims : {2, 3}) {
    DatasetSpec spec = cut_spec(dims, 10, 11, 100);
    for (const auto& rec : generate_dataset(spec)) {
      REQUIRE(rec.certificate.has_value());
      CHECK(rec.certificate->placements.size() == 10);
      CHECK(rec.certificate->actions.size() == 10);
      Configuration cfg = replay_certificate(rec);  // throws on any mismatch
      CHECK(utility_is_exact_one(cfg));
    }
  }
}

TEST_CASE("random generator with degenerate range yields identical cubes") {
  DatasetSpec s;
  s.kind = "random";
  s.dims = 3;
  s.W = 10;
  s.H = 10;
  s.n = 5;
  s.edge_min = 4;
  s.edge_max = 4;
  s.seed = 9;
  auto rec = generate_instance(s, 0);
  REQUIRE(rec.instance.n() == 5);
  for (const auto& b : rec.instance.boxes) CHECK(b == BoxDims{4, 4, 4});
  CHECK(!rec.certificate.has_value());
}

TEST_CASE("random edges are uniform: chi-square over 1e5 draws") {
  DatasetSpec s;
  s.kind = "random";
  s.dims = 3;
  s.W = 100;
  s.H = 100;
  s.n = 100;
  s.edge_min = 2;
  s.edge_max = 5;
  s.count = 340;
  s.seed = 13;
  std::map<int, long long> freq;
  long long total = 0;
  double mean_volume = 0.0;
  for (const auto& rec : generate_dataset(s))
    for (const auto& b : rec.instance.boxes) {
      // canonicalization sorts within a box but preserves the edge multiset
      ++freq[b.l];
      ++freq[b.w];
      ++freq[b.h];
      total += 3;
      mean_volume += (double)b.volume();
    }
  REQUIRE(total >= 100000);
  const int k = s.edge_max - s.edge_min + 1;
  REQUIRE((int)freq.size() == k);
  double expect = (double)total / k;
  double chi2 = 0.0;
  for (auto& [edge, count] : freq) {
    CHECK(edge >= s.edge_min);
    CHECK(edge <= s.edge_max);
    double dev = (double)count - expect;
    chi2 += dev * dev / expect;
    CHECK(std::abs((double)count / total - 1.0 / k) < 0.01);
  }
  CHECK(chi2 < 16.27);  // chi-square df=3 upper tail at 0.001
  // i.i.d. edges in [2..5] give an expected box volume of 3.5^3
  mean_volume /= 340.0 * 100.0;
  CHECK(mean_volume == doctest::Approx(42.875).epsilon(0.02));
}

TEST_CASE("feature normalization divides by the instance max edge") {
  ProblemInstance inst;
  inst.id = "t";
  inst.boxes = {{2, 3, 5}};
  inst.bin = bin_for_boxes(inst.boxes, 5, 5, 3);
  auto feats = normalize_features(inst);
  REQUIRE(feats.size() == 1);
  CHECK(feats[0][0] == doctest::Approx(0.4));
  CHECK(feats[0][1] == doctest::Approx(0.6));
  CHECK(feats[0][2] == doctest::Approx(1.0));

  inst.boxes = {{3, 3, 3}, {3, 3, 3}};
  inst.bin = bin_for_boxes(inst.boxes, 3, 3, 3);
  for (const auto& row : normalize_features(inst))
    for (double v : row) CHECK(v == 1.0);
}

TEST_CASE("permuted preserves box content and bin") {
  auto rec = generate_instance(cut_spec(3, 10, 21), 4);
  Rng rng = Rng::stream(99, 0);
  ProblemInstance p = permuted(rec.instance, rng);
  CHECK(p.id == rec.instance.id);
  CHECK(p.bin.L == rec.instance.bin.L);
  auto key = [](const ProblemInstance& i) {
    std::multiset<std::array<int, 3>> m;
    for (const auto& b : i.boxes) m.insert({b.l, b.w, b.h});
    return m;
  };
  CHECK(key(p) == key(rec.instance));
  // 10 distinct boxes almost surely move under a uniform shuffle
  bool moved = false;
  for (size_t trial = 0; trial < 8 && !moved; ++trial)
    moved = permuted(rec.instance, rng).boxes != rec.instance.boxes;
  CHECK(moved);
}

TEST_CASE("dataset files round-trip bit-exactly and regeneration matches") {
  DatasetSpec spec = cut_spec(3, 10, 31, 20);
  auto recs = generate_dataset(spec);
  std::string path = temp_path("roundtrip.jsonl");
  save_instances(path, recs);
  auto loaded = load_instances(path);
  REQUIRE(loaded.size() == recs.size());
  for (size_t i = 0; i < recs.size(); ++i) {
    CHECK(loaded[i].instance.id == recs[i].instance.id);
    CHECK(loaded[i].instance.boxes == recs[i].instance.boxes);
    CHECK(loaded[i].instance.bin.L == recs[i].instance.bin.L);
    CHECK(instance_to_json(loaded[i]) == instance_to_json(recs[i]));
  }
  std::string again = temp_path("roundtrip2.jsonl");
  save_instances(again, generate_dataset(spec));
  CHECK(read_text_file(path) == read_text_file(again));
  CHECK(file_checksum_hex(path) == file_checksum_hex(again));
  std::remove(path.c_str());
  std::remove(again.c_str());
}

TEST_CASE("instance json stores derived length nowhere") {
  auto rec = generate_instance(cut_spec(2, 10, 51), 0);
  auto j = nlohmann::json::parse(instance_to_json(rec));
  CHECK(!j.contains("L"));
  CHECK(j.at("dims") == 2);
  CHECK(j.at("W") == 10);
  CHECK(j.at("H") == 1);
  CHECK(j.at("boxes").size() == 10);
}

TEST_CASE("configuration export carries placements and metrics") {
  auto rec = generate_instance(cut_spec(2, 6, 61), 0);
  Configuration cfg = replay_certificate(rec);
  auto j = nlohmann::json::parse(configuration_to_json(cfg));
  CHECK(j.at("instance_id") == rec.instance.id);
  CHECK(j.at("placements").size() == 6);
  CHECK(j.at("r_u").get<double>() == 1.0);
  auto& p0 = j.at("placements").at(0);
  for (const char* k : {"s", "o", "x", "y", "z"}) CHECK(p0.contains(k));
}
