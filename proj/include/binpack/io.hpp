#pragma once
// Line-delimited JSON persistence for instances and configuration export.
// L is always derived from the box list, never stored.

#include <binpack/geometry.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace binpack {

// Gap-free layout witness emitted by the guillotine generator: the exact
// placements plus an action sequence whose environment replay reproduces them.
struct Certificate {
  std::vector<Placement> placements;
  std::vector<std::array<int, 3>> actions;  // (s, o, y) triples
};

struct InstanceRecord {
  ProblemInstance instance;
  std::optional<Certificate> certificate;
};

std::string instance_to_json(const InstanceRecord& rec);
InstanceRecord instance_from_json(const std::string& line);

void save_instances(const std::string& path, const std::vector<InstanceRecord>& recs);
std::vector<InstanceRecord> load_instances(const std::string& path);

// {instance_id, placements:[{s,o,x,y,z}], r_u, r_rr}
std::string configuration_to_json(const Configuration& cfg);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// FNV-1a (64-bit) content fingerprints for reproducibility manifests.
std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ull);
std::string file_checksum_hex(const std::string& path);
std::string text_checksum_hex(const std::string& text);

}  // namespace binpack
