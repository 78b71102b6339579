#include "intent.hpp"

#include <cctype>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fs_util.hpp"
#include "text_util.hpp"

namespace dmsrec {

using json = nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// "1. foo", "2) foo", "- foo" -> "foo"
std::string strip_list_prefix(const std::string& s) {
  size_t i = 0;
  if (i < s.size() && (s[i] == '-' || s[i] == '*')) {
    ++i;
  } else {
    size_t j = i;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i && j < s.size() && (s[j] == '.' || s[j] == ')')) {
      i = j + 1;
    } else {
      return s;
    }
  }
  return trim(s.substr(i));
}

}  // namespace

std::vector<std::string> parse_intents(const std::string& raw) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&]() {
    std::string item = strip_list_prefix(trim(cur));
    if (!item.empty()) out.push_back(item);
    cur.clear();
  };
  for (char c : raw) {
    if (c == ';' || c == '\n') {
      flush();
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

void classify_intents(IntentRecord& record, const std::vector<std::string>& session_titles,
                      bool substring_mode) {
  record.explicit_intents.clear();
  record.latent_intents.clear();
  std::vector<std::string> title_keys;
  title_keys.reserve(session_titles.size());
  for (const auto& t : session_titles) title_keys.push_back(match_key(t));
  std::set<std::string> title_set(title_keys.begin(), title_keys.end());

  for (const auto& intent : record.intents) {
    std::string key = match_key(intent);
    bool is_explicit;
    if (substring_mode) {
      is_explicit = false;
      for (const auto& tk : title_keys) {
        if (tk.find(key) != std::string::npos || key.find(tk) != std::string::npos) {
          is_explicit = true;
          break;
        }
      }
    } else {
      is_explicit = title_set.count(key) != 0;
    }
    (is_explicit ? record.explicit_intents : record.latent_intents).push_back(intent);
  }
  record.empty_flag = record.intents.empty();
}

std::string intents_to_jsonl(const std::vector<IntentRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    json j;
    j["session_id"] = r.session_id;
    j["raw_response"] = r.raw_response;
    j["explicit"] = r.explicit_intents;
    j["latent"] = r.latent_intents;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<IntentRecord> intents_from_jsonl(const std::string& text) {
  std::vector<IntentRecord> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    IntentRecord r;
    r.session_id = j.at("session_id").get<std::string>();
    r.raw_response = j.at("raw_response").get<std::string>();
    r.explicit_intents = j.at("explicit").get<std::vector<std::string>>();
    r.latent_intents = j.at("latent").get<std::vector<std::string>>();
    r.intents = r.explicit_intents;
    r.intents.insert(r.intents.end(), r.latent_intents.begin(), r.latent_intents.end());
    r.empty_flag = r.intents.empty();
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<IntentRecord> load_intents(const std::string& path) {
  return intents_from_jsonl(read_file(path));
}

}  // namespace dmsrec
