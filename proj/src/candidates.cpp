#include "candidates.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fs_util.hpp"
#include "metrics.hpp"

namespace dmsrec {

using json = nlohmann::json;

CandidateSet top_k_candidates(const std::string& session_id, const std::vector<double>& scores,
                              const ItemCatalog& catalog, int k) {
  if (k < 1) throw std::invalid_argument("top_k_candidates: k must be >= 1");
  if (static_cast<int>(scores.size()) != catalog.n_items())
    throw std::invalid_argument("top_k_candidates: score vector does not match catalog");

  std::vector<int> ids(scores.size());
  std::iota(ids.begin(), ids.end(), 1);
  int take = std::min<int>(k, static_cast<int>(ids.size()));
  std::partial_sort(ids.begin(), ids.begin() + take, ids.end(), [&](int a, int b) {
    return score_beats(scores[a - 1], a, scores[b - 1], b);
  });
  ids.resize(take);

  CandidateSet out;
  out.session_id = session_id;
  for (int id : ids) {
    out.item_ids.push_back(id);
    out.titles.push_back(catalog.title(id));
    out.scores.push_back(scores[id - 1]);
  }
  return out;
}

std::vector<CandidateSet> extract_candidates(const std::vector<Session>& sessions,
                                             BackboneParams& backbone, const ItemCatalog& catalog,
                                             int k, ExtractStats* stats) {
  std::vector<CandidateSet> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) {
    try {
      auto scores = frozen_scores(backbone, s.items);
      out.push_back(top_k_candidates(s.session_id, scores, catalog, k));
      if (stats) ++stats->emitted;
    } catch (const std::exception& ex) {
      std::cerr << "candidates: skipping session " << s.session_id << ": " << ex.what() << "\n";
      if (stats) ++stats->failed;
    }
  }
  return out;
}

std::string candidates_to_jsonl(const std::vector<CandidateSet>& sets) {
  std::string out;
  for (const auto& c : sets) {
    json j;
    j["session_id"] = c.session_id;
    j["item_ids"] = c.item_ids;
    j["titles"] = c.titles;
    j["scores"] = c.scores;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<CandidateSet> candidates_from_jsonl(const std::string& text) {
  std::vector<CandidateSet> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    CandidateSet c;
    c.session_id = j.at("session_id").get<std::string>();
    c.item_ids = j.at("item_ids").get<std::vector<int>>();
    c.titles = j.at("titles").get<std::vector<std::string>>();
    c.scores = j.at("scores").get<std::vector<double>>();
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<CandidateSet> load_candidates(const std::string& path) {
  return candidates_from_jsonl(read_file(path));
}

}  // namespace dmsrec
