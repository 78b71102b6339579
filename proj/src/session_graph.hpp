#pragma once

#include <vector>

#include "tensor.hpp"

namespace dmsrec {

// Directed item-transition graph of one session. Nodes are the unique items
// in order of first appearance; duplicate edges collapse; a_in/a_out rows
// are degree-normalized (each row sums to 1 or 0).
struct SessionGraph {
  std::vector<int> nodes;   // item ids
  std::vector<int> alias;   // position in sequence -> node index
  Tensor a_in;              // n x n, row i lists incoming edges of node i
  Tensor a_out;             // n x n, row i lists outgoing edges of node i

  int n() const { return static_cast<int>(nodes.size()); }
  int last_node() const { return alias.back(); }
};

SessionGraph build_session_graph(const std::vector<int>& items);

}  // namespace dmsrec
