#include <binpack/io.hpp>
#include <binpack/packer.hpp>

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace binpack {

using nlohmann::json;

std::string instance_to_json(const InstanceRecord& rec) {
  const ProblemInstance& inst = rec.instance;
  json j;
  j["instance_id"] = inst.id;
  j["dims"] = inst.bin.dims;
  j["W"] = inst.bin.W;
  j["H"] = inst.bin.H;
  json boxes = json::array();
  for (const auto& b : inst.boxes) boxes.push_back({b.l, b.w, b.h});
  j["boxes"] = std::move(boxes);
  if (rec.certificate) {
    json cp = json::array();
    for (const auto& p : rec.certificate->placements)
      cp.push_back({p.s, p.o, p.x, p.y, p.z});
    j["cert_placements"] = std::move(cp);
    json ca = json::array();
    for (const auto& a : rec.certificate->actions) ca.push_back({a[0], a[1], a[2]});
    j["cert_actions"] = std::move(ca);
  }
  return j.dump();
}

InstanceRecord instance_from_json(const std::string& line) {
  json j = json::parse(line);
  InstanceRecord rec;
  ProblemInstance& inst = rec.instance;
  inst.id = j.at("instance_id").get<std::string>();
  int dims = j.at("dims").get<int>();
  int W = j.at("W").get<int>();
  int H = j.at("H").get<int>();
  for (const auto& b : j.at("boxes")) {
    if (!b.is_array() || b.size() != 3) throw std::invalid_argument("box entry must be [l,w,h]");
    inst.boxes.push_back({b[0].get<int>(), b[1].get<int>(), b[2].get<int>()});
  }
  inst.bin = bin_for_boxes(inst.boxes, W, H, dims);
  inst.validate();
  if (j.contains("cert_placements")) {
    Certificate cert;
    for (const auto& p : j.at("cert_placements")) {
      if (!p.is_array() || p.size() != 5)
        throw std::invalid_argument("certificate placement must be [s,o,x,y,z]");
      cert.placements.push_back(
          {p[0].get<int>(), p[1].get<int>(), p[2].get<int>(), p[3].get<int>(), p[4].get<int>()});
    }
    if (j.contains("cert_actions"))
      for (const auto& a : j.at("cert_actions")) {
        if (!a.is_array() || a.size() != 3)
          throw std::invalid_argument("certificate action must be [s,o,y]");
        cert.actions.push_back({a[0].get<int>(), a[1].get<int>(), a[2].get<int>()});
      }
    rec.certificate = std::move(cert);
  }
  return rec;
}

void save_instances(const std::string& path, const std::vector<InstanceRecord>& recs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& rec : recs) out << instance_to_json(rec) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<InstanceRecord> load_instances(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<InstanceRecord> recs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    recs.push_back(instance_from_json(line));
  }
  return recs;
}

std::string configuration_to_json(const Configuration& cfg) {
  json j;
  j["instance_id"] = cfg.instance.id;
  json ps = json::array();
  for (const auto& p : cfg.placements) {
    json e;
    e["s"] = p.s;
    e["o"] = p.o;
    e["x"] = p.x;
    e["y"] = p.y;
    e["z"] = p.z;
    ps.push_back(std::move(e));
  }
  j["placements"] = std::move(ps);
  j["r_u"] = utility(cfg);
  j["r_rr"] = reward_rr(cfg);
  return j.dump(2);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

static std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_checksum_hex(const std::string& path) {
  std::string content = read_text_file(path);
  return hex64(fnv1a64(content.data(), content.size()));
}

std::string text_checksum_hex(const std::string& text) {
  return hex64(fnv1a64(text.data(), text.size()));
}

}  // namespace binpack
