#pragma once
// Checkpoint container: named arrays with shapes plus raw little-endian float
// payloads and a manifest checksum. One format serves model-only snapshots and
// full trainer state (extra JSON carries scalars: counters, stats, RNG, ...).

#include <binpack/nn.hpp>

#include <string>
#include <vector>

namespace binpack {

struct NamedArray {
  std::string name;
  std::vector<int> shape;
  std::vector<float> data;
};

struct Checkpoint {
  std::vector<NamedArray> arrays;
  std::string extra;  // JSON text; empty for model-only snapshots

  NamedArray* find(const std::string& name);
  const NamedArray* find(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);  // verifies manifest checksum

// Copies every parameter of `ps` into arrays under `prefix + name`.
void store_params(Checkpoint& ck, const ParamStore<float>& ps, const std::string& prefix = "");
// Restores every parameter of `ps` from arrays; throws on missing name or
// shape mismatch.
void load_params(const Checkpoint& ck, ParamStore<float>& ps, const std::string& prefix = "");

}  // namespace binpack
