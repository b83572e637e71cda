#pragma once
// Instance generators: guillotine-cut (with gap-free certificates) and
// uniform-random. Fully deterministic per (seed, index).

#include <binpack/geometry.hpp>
#include <binpack/io.hpp>
#include <binpack/rng.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace binpack {

struct DatasetSpec {
  std::string kind;  // "cut" | "random"
  int dims = 3;
  int W = 10;
  int H = 10;  // must be 1 when dims == 2
  int n = 10;
  int edge_min = 1;
  int edge_max = 10;  // for cut, also the depth of the cuboid being cut
  int count = 1;
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

// Generates instance `index` of the dataset. Cut instances carry a
// certificate: the exact cut layout plus a replayable action sequence.
InstanceRecord generate_instance(const DatasetSpec& spec, std::uint64_t index);

std::vector<InstanceRecord> generate_dataset(const DatasetSpec& spec);

// Uniform random reorder of the box list; everything else unchanged.
ProblemInstance permuted(const ProblemInstance& inst, Rng& rng);

// Replays rec's certificate actions through the environment and checks the
// result bit-for-bit against the stored layout. Throws on any mismatch.
Configuration replay_certificate(const InstanceRecord& rec);

}  // namespace binpack
