#include <binpack/checkpoint.hpp>
#include <binpack/geometry.hpp>
#include <binpack/io.hpp>

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

namespace binpack {

using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "payloads are raw little-endian floats");

namespace {
constexpr const char* kMagic = "BINPACK-CKPT 1";
}

NamedArray* Checkpoint::find(const std::string& name) {
  for (auto& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

const NamedArray* Checkpoint::find(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::vector<char> payload;
  json manifest;
  manifest["arrays"] = json::array();
  for (const auto& a : ck.arrays) {
    std::size_t expect = 1;
    for (int d : a.shape) expect *= (std::size_t)d;
    if (expect != a.data.size())
      throw contract_error("checkpoint array " + a.name + ": shape/data mismatch");
    json ja;
    ja["name"] = a.name;
    ja["shape"] = a.shape;
    manifest["arrays"].push_back(std::move(ja));
    std::size_t at = payload.size();
    payload.resize(at + a.data.size() * sizeof(float));
    std::memcpy(payload.data() + at, a.data.data(), a.data.size() * sizeof(float));
  }
  manifest["payload_fnv1a64"] = text_checksum_hex(std::string(payload.begin(), payload.end()));
  if (!ck.extra.empty()) manifest["extra"] = json::parse(ck.extra);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw contract_error("cannot write " + path);
  out << kMagic << "\n" << manifest.dump() << "\n";
  out.write(payload.data(), (std::streamsize)payload.size());
  if (!out) throw contract_error("short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw contract_error("cannot read " + path);
  std::string magic, manifest_line;
  std::getline(in, magic);
  if (magic != kMagic) throw contract_error(path + ": not a checkpoint file");
  std::getline(in, manifest_line);
  json manifest = json::parse(manifest_line);

  Checkpoint ck;
  std::size_t total = 0;
  for (const auto& ja : manifest.at("arrays")) {
    NamedArray a;
    a.name = ja.at("name").get<std::string>();
    a.shape = ja.at("shape").get<std::vector<int>>();
    std::size_t n = 1;
    for (int d : a.shape) n *= (std::size_t)d;
    a.data.resize(n);
    total += n;
    ck.arrays.push_back(std::move(a));
  }
  std::vector<char> payload(total * sizeof(float));
  in.read(payload.data(), (std::streamsize)payload.size());
  if ((std::size_t)in.gcount() != payload.size())
    throw contract_error(path + ": truncated payload");
  std::string sum = text_checksum_hex(std::string(payload.begin(), payload.end()));
  if (sum != manifest.at("payload_fnv1a64").get<std::string>())
    throw contract_error(path + ": payload checksum mismatch");
  std::size_t at = 0;
  for (auto& a : ck.arrays) {
    std::memcpy(a.data.data(), payload.data() + at, a.data.size() * sizeof(float));
    at += a.data.size() * sizeof(float);
  }
  if (manifest.contains("extra")) ck.extra = manifest.at("extra").dump();
  return ck;
}

void store_params(Checkpoint& ck, const ParamStore<float>& ps, const std::string& prefix) {
  for (int i = 0; i < ps.count(); ++i) {
    const auto& e = ps.entry(i);
    ck.arrays.push_back({prefix + e.name, e.shape, e.v});
  }
}

void load_params(const Checkpoint& ck, ParamStore<float>& ps, const std::string& prefix) {
  for (int i = 0; i < ps.count(); ++i) {
    auto& e = ps.entry(i);
    const NamedArray* a = ck.find(prefix + e.name);
    if (!a) throw contract_error("checkpoint missing array " + prefix + e.name);
    if (a->shape != e.shape || a->data.size() != e.v.size())
      throw contract_error("checkpoint shape mismatch for " + prefix + e.name);
    e.v = a->data;
  }
}

}  // namespace binpack
