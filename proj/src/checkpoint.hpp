#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tensor.hpp"

namespace dmsrec {

// Self-describing parameter container: magic, format version, a JSON header
// (model config + tensor directory) and raw little-endian doubles.
struct Checkpoint {
  nlohmann::json header;
  std::map<std::string, Tensor> tensors;

  const Tensor& tensor(const std::string& name) const;
  bool has(const std::string& name) const { return tensors.count(name) != 0; }
};

void save_checkpoint(const std::string& path, nlohmann::json header,
                     const std::vector<std::pair<std::string, const Tensor*>>& tensors);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace dmsrec
