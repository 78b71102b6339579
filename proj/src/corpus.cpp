#include "corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "fs_util.hpp"
#include "text_util.hpp"

namespace dmsrec {

using json = nlohmann::json;

const std::string& ItemCatalog::title(int id) const {
  if (!contains(id)) throw std::out_of_range("catalog: unknown item id " + std::to_string(id));
  return titles[id];
}

int ItemCatalog::add(const std::string& title) {
  titles.push_back(title);
  return n_items();
}

std::vector<RawSession> group_by_user(const std::vector<InteractionEvent>& events) {
  std::vector<RawSession> out;
  std::unordered_map<std::string, size_t> index;
  for (const auto& e : events) {
    auto it = index.find(e.user_id);
    if (it == index.end()) {
      index.emplace(e.user_id, out.size());
      out.push_back(RawSession{e.user_id, {}});
      it = index.find(e.user_id);
    }
    out[it->second].events.push_back(e);
  }
  return out;
}

std::vector<RawSession> sessionize_by_time(const std::vector<InteractionEvent>& events,
                                           int64_t gap_seconds, int64_t max_span_seconds) {
  std::vector<RawSession> out;
  int counter = 0;
  for (auto& user : group_by_user(events)) {
    RawSession cur;
    int64_t session_start = 0;
    int64_t prev_ts = 0;
    for (const auto& e : user.events) {
      if (!cur.events.empty() && e.timestamp < prev_ts)
        throw std::invalid_argument("sessionize: events for user " + user.key +
                                    " not sorted by timestamp");
      bool split = false;
      if (!cur.events.empty()) {
        if (e.timestamp - prev_ts > gap_seconds) split = true;
        if (e.timestamp - session_start > max_span_seconds) split = true;
      }
      if (split) {
        cur.key = user.key + "/" + std::to_string(counter++);
        out.push_back(std::move(cur));
        cur = RawSession{};
      }
      if (cur.events.empty()) session_start = e.timestamp;
      prev_ts = e.timestamp;
      cur.events.push_back(e);
    }
    if (!cur.events.empty()) {
      cur.key = user.key + "/" + std::to_string(counter++);
      out.push_back(std::move(cur));
    }
  }
  return out;
}

FilterResult filter_corpus(const std::vector<RawSession>& sessions, int min_item_freq,
                           int min_session_len) {
  std::vector<RawSession> cur = sessions;
  // Dropping rare items can shorten sessions below the threshold and
  // dropping sessions can lower item counts, so iterate to a fixed point.
  for (;;) {
    std::unordered_map<int64_t, int> freq;
    for (const auto& s : cur)
      for (const auto& e : s.events) ++freq[e.item_id];
    std::vector<RawSession> next;
    bool changed = false;
    for (const auto& s : cur) {
      RawSession kept{s.key, {}};
      for (const auto& e : s.events) {
        if (freq[e.item_id] >= min_item_freq)
          kept.events.push_back(e);
        else
          changed = true;
      }
      if (static_cast<int>(kept.events.size()) > min_session_len)
        next.push_back(std::move(kept));
      else if (!kept.events.empty() || !s.events.empty())
        changed = true;
    }
    cur = std::move(next);
    if (!changed) break;
    if (cur.empty()) break;
  }
  if (cur.empty()) throw std::runtime_error("corpus exhausted: nothing survives filtering");

  FilterResult res;
  for (auto& s : cur) {
    for (auto& e : s.events) {
      auto it = res.remap.find(e.item_id);
      int id;
      if (it == res.remap.end()) {
        std::string title = e.title.empty() ? "item_" + std::to_string(e.item_id) : e.title;
        id = res.catalog.add(title);
        res.remap.emplace(e.item_id, id);
      } else {
        id = it->second;
      }
      e.item_id = id;
      e.title = res.catalog.title(id);
    }
  }
  res.sessions = std::move(cur);
  return res;
}

FilterResult filter_corpus_events(const std::vector<InteractionEvent>& events, int min_item_freq,
                                  int min_session_len) {
  if (events.empty()) throw std::invalid_argument("filter_corpus: no events");
  return filter_corpus(group_by_user(events), min_item_freq, min_session_len);
}

std::vector<Session> prefix_augment(const Session& session) {
  std::vector<Session> out;
  int n = static_cast<int>(session.items.size());
  if (n < 2 || session.titles.size() != session.items.size()) return out;
  for (int k = 2; k <= n - 1; ++k) {
    Session s;
    s.session_id = session.session_id + "#" + std::to_string(k);
    s.items.assign(session.items.begin(), session.items.begin() + k);
    s.titles.assign(session.titles.begin(), session.titles.begin() + k);
    s.target = session.items[k];
    out.push_back(std::move(s));
  }
  return out;
}

Session last_item_target(const Session& session) {
  int n = static_cast<int>(session.items.size());
  if (n < 2) throw std::invalid_argument("last_item_target: session shorter than 2");
  Session s;
  s.session_id = session.session_id;
  s.items.assign(session.items.begin(), session.items.end() - 1);
  s.titles.assign(session.titles.begin(), session.titles.end() - 1);
  s.target = session.items.back();
  return s;
}

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> cols;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      cols.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cols.push_back(cur);
  return cols;
}

bool parse_i64(const std::string& s, int64_t& out) {
  if (s.empty()) return false;
  try {
    size_t pos = 0;
    out = std::stoll(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

}  // namespace

std::vector<InteractionEvent> load_events(const std::string& path, const std::string& meta_path) {
  std::unordered_map<int64_t, std::string> meta;
  if (!meta_path.empty()) {
    std::ifstream in(meta_path);
    if (!in) throw std::runtime_error("cannot open item metadata: " + meta_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      char delim = line.find('\t') != std::string::npos ? '\t' : ',';
      auto cols = split_line(line, delim);
      int64_t id;
      if (cols.size() >= 2 && parse_i64(cols[0], id)) meta[id] = normalize_title(cols[1]);
    }
  }

  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open events file: " + path);
  std::vector<InteractionEvent> events;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    char delim = line.find('\t') != std::string::npos ? '\t' : ',';
    auto cols = split_line(line, delim);
    if (cols.size() < 3) throw std::runtime_error("events line " + std::to_string(lineno) +
                                                  ": expected user,item,timestamp[,title]");
    InteractionEvent e;
    e.user_id = cols[0];
    if (!parse_i64(cols[1], e.item_id) || !parse_i64(cols[2], e.timestamp)) {
      if (lineno == 1) continue;  // header row
      throw std::runtime_error("events line " + std::to_string(lineno) + ": bad numeric field");
    }
    if (e.item_id < 1) throw std::runtime_error("events line " + std::to_string(lineno) +
                                                ": item_id must be >= 1");
    if (e.timestamp < 0) throw std::runtime_error("events line " + std::to_string(lineno) +
                                                  ": negative timestamp");
    if (cols.size() >= 4) e.title = normalize_title(cols[3]);
    auto it = meta.find(e.item_id);
    if (it != meta.end()) e.title = it->second;
    events.push_back(std::move(e));
  }
  return events;
}

PreprocessOutput preprocess(const PreprocessConfig& cfg) {
  auto events = load_events(cfg.input_path, cfg.item_meta_path);
  if (events.empty()) throw std::runtime_error("corpus exhausted: no events in input");

  std::vector<RawSession> raw;
  if (cfg.mode == "time") {
    raw = sessionize_by_time(events, static_cast<int64_t>(cfg.gap_minutes * 60.0),
                             static_cast<int64_t>(cfg.max_span_hours * 3600.0));
  } else if (cfg.mode == "prefix") {
    raw = group_by_user(events);
  } else {
    throw std::invalid_argument("preprocess: unknown mode '" + cfg.mode + "'");
  }

  FilterResult filtered = filter_corpus(raw, cfg.min_item_freq, cfg.min_session_len);

  // Base sessions in chronological order of their first event; the last
  // test_fraction become the test split (no leakage across prefixes).
  std::vector<size_t> order(filtered.sessions.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return filtered.sessions[a].events.front().timestamp <
           filtered.sessions[b].events.front().timestamp;
  });

  size_t n = order.size();
  size_t n_test = 0;
  if (cfg.test_fraction > 0.0 && n > 1) {
    n_test = static_cast<size_t>(static_cast<double>(n) * cfg.test_fraction);
    n_test = std::clamp<size_t>(n_test, 1, n - 1);
  }

  PreprocessOutput out;
  out.catalog = filtered.catalog;
  out.base_sessions = static_cast<int>(n);

  bool augment = cfg.augment && cfg.mode == "prefix";
  for (size_t pos = 0; pos < n; ++pos) {
    const RawSession& rs = filtered.sessions[order[pos]];
    bool is_test = pos >= n - n_test;
    Session base;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%c%06zu", is_test ? 't' : 's', pos);
    base.session_id = buf;
    for (const auto& e : rs.events) {
      base.items.push_back(static_cast<int>(e.item_id));
      base.titles.push_back(e.title);
    }
    auto& dst = is_test ? out.test : out.train;
    if (augment) {
      for (auto& s : prefix_augment(base)) dst.push_back(std::move(s));
    } else {
      if (base.items.size() >= 2) dst.push_back(last_item_target(base));
    }
  }
  if (out.train.empty()) throw std::runtime_error("corpus exhausted: empty train split");
  return out;
}

std::string sessions_to_jsonl(const std::vector<Session>& sessions) {
  std::string out;
  for (const auto& s : sessions) {
    json j;
    j["session_id"] = s.session_id;
    j["items"] = s.items;
    j["titles"] = s.titles;
    j["target"] = s.target;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<Session> sessions_from_jsonl(const std::string& text) {
  std::vector<Session> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    Session s;
    s.session_id = j.at("session_id").get<std::string>();
    s.items = j.at("items").get<std::vector<int>>();
    s.titles = j.at("titles").get<std::vector<std::string>>();
    s.target = j.at("target").get<int>();
    if (s.titles.size() != s.items.size())
      throw std::runtime_error("session " + s.session_id + ": titles not parallel to items");
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Session> load_sessions(const std::string& path) {
  return sessions_from_jsonl(read_file(path));
}

std::string catalog_to_json(const ItemCatalog& catalog) {
  json j;
  j["n_items"] = catalog.n_items();
  j["id_to_title"] = std::vector<std::string>(catalog.titles.begin() + 1, catalog.titles.end());
  return j.dump(2) + "\n";
}

ItemCatalog catalog_from_json(const std::string& text) {
  json j = json::parse(text);
  ItemCatalog c;
  for (const auto& t : j.at("id_to_title")) c.add(t.get<std::string>());
  if (j.at("n_items").get<int>() != c.n_items())
    throw std::runtime_error("catalog: n_items disagrees with id_to_title length");
  return c;
}

ItemCatalog load_catalog(const std::string& path) { return catalog_from_json(read_file(path)); }

}  // namespace dmsrec
