#include "checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "version.hpp"

namespace dmsrec {

using json = nlohmann::json;

namespace {
constexpr char kMagic[8] = {'D', 'M', 'S', 'R', 'C', 'K', 'P', 'T'};
constexpr uint32_t kFormatVersion = 1;
}  // namespace

const Tensor& Checkpoint::tensor(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw std::out_of_range("checkpoint: missing tensor " + name);
  return it->second;
}

void save_checkpoint(const std::string& path, json header,
                     const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
  header["format_version"] = kFormatVersion;
  header["tool_version"] = kVersion;
  json dir = json::array();
  for (const auto& [name, t] : tensors)
    dir.push_back({{"name", name}, {"rows", t->rows}, {"cols", t->cols}});
  header["tensors"] = dir;

  std::string head = header.dump();
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + tmp);
    out.write(kMagic, sizeof(kMagic));
    uint64_t hlen = head.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const auto& [name, t] : tensors) {
      (void)name;
      out.write(reinterpret_cast<const char*>(t->v.data()),
                static_cast<std::streamsize>(t->v.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string head(hlen, '\0');
  in.read(head.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw std::runtime_error("truncated checkpoint header: " + path);

  Checkpoint ck;
  ck.header = json::parse(head);
  if (!ck.header.contains("format_version"))
    throw std::runtime_error("checkpoint missing version field: " + path);
  if (ck.header["format_version"].get<uint32_t>() != kFormatVersion)
    throw std::runtime_error("unsupported checkpoint format version in " + path);

  for (const auto& entry : ck.header.at("tensors")) {
    std::string name = entry.at("name").get<std::string>();
    Tensor t(entry.at("rows").get<int>(), entry.at("cols").get<int>());
    in.read(reinterpret_cast<char*>(t.v.data()),
            static_cast<std::streamsize>(t.v.size() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated checkpoint tensor " + name + " in " + path);
    ck.tensors.emplace(std::move(name), std::move(t));
  }
  return ck;
}

}  // namespace dmsrec
