#include "mining.hpp"

#include <atomic>
#include <iostream>
#include <set>
#include <thread>

#include <json.hpp>

#include "prompt.hpp"
#include "text_util.hpp"

namespace dmsrec {

using json = nlohmann::json;

std::string MineStats::to_json() const {
  json j;
  j["sessions"] = sessions;
  j["failed_sessions"] = failed_sessions;
  j["empty_sessions"] = empty_sessions;
  j["total_intents"] = total_intents;
  j["explicit_total"] = explicit_total;
  j["latent_total"] = latent_total;
  j["hallucinated"] = hallucinated;
  j["hallucination_rate"] = hallucination_rate();
  json he = json::object(), hl = json::object();
  for (auto [k, v] : explicit_histogram) he[std::to_string(k)] = v;
  for (auto [k, v] : latent_histogram) hl[std::to_string(k)] = v;
  j["explicit_histogram"] = he;
  j["latent_histogram"] = hl;
  return j.dump(2) + "\n";
}

std::vector<IntentRecord> mine_intents(const std::vector<Session>& sessions,
                                       const std::vector<CandidateSet>& candidates,
                                       LLMClient& client, ResponseCache& cache,
                                       const MineOptions& options, MineStats* stats) {
  std::map<std::string, const CandidateSet*> by_id;
  for (const auto& c : candidates) by_id[c.session_id] = &c;

  std::vector<IntentRecord> records(sessions.size());
  std::vector<char> failed(sessions.size(), 0);
  std::atomic<size_t> next{0};

  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= sessions.size()) return;
      const Session& s = sessions[i];
      IntentRecord& r = records[i];
      r.session_id = s.session_id;
      auto it = by_id.find(s.session_id);
      if (it == by_id.end()) {
        failed[i] = 1;
        r.empty_flag = true;
        continue;
      }
      try {
        PromptPair prompt = build_prompts(s.titles, *it->second);
        std::string key = prompt_cache_key(prompt, client.fingerprint());
        std::string response;
        if (!cache.lookup(key, &response)) {
          response = client.complete(prompt);
          cache.store(key, response);
        }
        r.raw_response = response;
        r.intents = parse_intents(response);
        if (static_cast<int>(r.intents.size()) > options.max_intents)
          r.intents.resize(options.max_intents);
        if (options.strict) {
          std::set<std::string> cand_keys;
          for (const auto& t : it->second->titles) cand_keys.insert(match_key(t));
          std::vector<std::string> kept;
          for (auto& intent : r.intents)
            if (cand_keys.count(match_key(intent))) kept.push_back(std::move(intent));
          r.intents = std::move(kept);
        }
        classify_intents(r, s.titles, options.substring_match);
      } catch (const std::exception& ex) {
        std::cerr << "mine: session " << s.session_id << " failed: " << ex.what() << "\n";
        failed[i] = 1;
        r = IntentRecord{};
        r.session_id = s.session_id;
        r.empty_flag = true;
      }
    }
  };

  int n_workers = std::max(1, options.workers);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (stats) {
    stats->sessions = static_cast<int>(sessions.size());
    for (size_t i = 0; i < sessions.size(); ++i) {
      const IntentRecord& r = records[i];
      if (failed[i]) {
        ++stats->failed_sessions;
        continue;
      }
      if (r.intents.empty()) ++stats->empty_sessions;
      stats->total_intents += static_cast<int>(r.intents.size());
      stats->explicit_total += static_cast<int>(r.explicit_intents.size());
      stats->latent_total += static_cast<int>(r.latent_intents.size());
      ++stats->explicit_histogram[static_cast<int>(r.explicit_intents.size())];
      ++stats->latent_histogram[static_cast<int>(r.latent_intents.size())];
      auto it = by_id.find(r.session_id);
      std::set<std::string> cand_keys;
      for (const auto& t : it->second->titles) cand_keys.insert(match_key(t));
      for (const auto& intent : r.intents)
        if (!cand_keys.count(match_key(intent))) ++stats->hallucinated;
    }
  }
  return records;
}

}  // namespace dmsrec
