#include "session_graph.hpp"

#include <map>
#include <set>
#include <stdexcept>

namespace dmsrec {

SessionGraph build_session_graph(const std::vector<int>& items) {
  if (items.empty()) throw std::invalid_argument("build_session_graph: empty sequence");

  SessionGraph g;
  std::map<int, int> node_of;
  for (int id : items) {
    auto it = node_of.find(id);
    if (it == node_of.end()) {
      node_of.emplace(id, g.n());
      g.nodes.push_back(id);
      g.alias.push_back(g.n() - 1);
    } else {
      g.alias.push_back(it->second);
    }
  }

  int n = g.n();
  std::set<std::pair<int, int>> edges;
  for (size_t i = 0; i + 1 < items.size(); ++i) {
    int u = node_of[items[i]];
    int v = node_of[items[i + 1]];
    edges.emplace(u, v);
  }

  g.a_out = Tensor(n, n);
  g.a_in = Tensor(n, n);
  for (auto [u, v] : edges) {
    g.a_out.at(u, v) = 1.0;
    g.a_in.at(v, u) = 1.0;
  }
  for (int i = 0; i < n; ++i) {
    double so = 0.0, si = 0.0;
    for (int j = 0; j < n; ++j) {
      so += g.a_out.at(i, j);
      si += g.a_in.at(i, j);
    }
    if (so > 0.0)
      for (int j = 0; j < n; ++j) g.a_out.at(i, j) /= so;
    if (si > 0.0)
      for (int j = 0; j < n; ++j) g.a_in.at(i, j) /= si;
  }
  return g;
}

}  // namespace dmsrec
