#include "llm_client.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "fs_util.hpp"
#include "rng.hpp"
#include "text_util.hpp"

namespace dmsrec {

using json = nlohmann::json;

namespace {

// Recovers the numbered titles of one prompt block ("1. Title;" lines).
std::vector<std::string> parse_block(const std::string& input, const std::string& heading) {
  std::vector<std::string> titles;
  std::istringstream in(input);
  std::string line;
  bool active = false;
  while (std::getline(in, line)) {
    if (line == heading) {
      active = true;
      continue;
    }
    if (!active) continue;
    if (line.empty()) break;
    size_t dot = line.find(". ");
    if (dot == std::string::npos) break;
    std::string title = line.substr(dot + 2);
    if (!title.empty() && title.back() == ';') title.pop_back();
    titles.push_back(title);
  }
  return titles;
}

}  // namespace

std::string MockLLMClient::complete(const PromptPair& prompt) {
  auto clicked = parse_block(prompt.input, "The order in which users click on items is as follows:");
  auto candidates = parse_block(prompt.input, "Candidate item set:");

  std::set<std::string> session_tokens;
  for (const auto& t : clicked)
    for (const auto& tok : tokenize(t)) session_tokens.insert(tok);

  std::vector<std::string> intents;
  std::string first_non_overlapping;
  for (const auto& cand : candidates) {
    bool overlaps = false;
    for (const auto& tok : tokenize(cand)) {
      if (session_tokens.count(tok)) {
        overlaps = true;
        break;
      }
    }
    if (overlaps)
      intents.push_back(cand);
    else if (first_non_overlapping.empty())
      first_non_overlapping = cand;
  }
  if (!first_non_overlapping.empty()) intents.push_back(first_non_overlapping);

  std::string out;
  for (size_t i = 0; i < intents.size(); ++i) {
    if (i) out += "; ";
    out += intents[i];
  }
  return out;
}

HttpLLMClient::HttpLLMClient(HttpLLMConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.url.empty()) throw std::invalid_argument("llm client: url required");
}

std::string HttpLLMClient::fingerprint() const {
  return "http:" + cfg_.model + ":t=" + std::to_string(cfg_.temperature);
}

std::string HttpLLMClient::complete(const PromptPair& prompt) {
  json body{{"model", cfg_.model},
            {"temperature", cfg_.temperature},
            {"max_tokens", cfg_.max_tokens},
            {"messages", json::array({json{{"role", "system"}, {"content", prompt.instruction}},
                                      json{{"role", "user"}, {"content", prompt.input}}})}};
  std::string payload = body.dump();

  httplib::Headers headers;
  if (!cfg_.api_key_env.empty()) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (!key) throw std::runtime_error("llm client: env var " + cfg_.api_key_env + " not set");
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      ++retries_;
      std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.backoff_ms << (attempt - 1)));
    }
    httplib::Client client(cfg_.url);
    client.set_read_timeout(cfg_.timeout_seconds, 0);
    auto res = client.Post(cfg_.path, headers, payload, "application/json");
    if (!res) {
      last_error = "connection failed";
      continue;
    }
    if (res->status >= 500) {
      last_error = "server status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw std::runtime_error("llm client: status " + std::to_string(res->status));
    try {
      json j = json::parse(res->body);
      std::string content = j.at("choices").at(0).at("message").at("content").get<std::string>();
      if (content.empty()) {
        last_error = "empty completion";
        continue;  // flagged for re-query
      }
      return content;
    } catch (const json::exception& ex) {
      last_error = std::string("malformed completion: ") + ex.what();
      continue;
    }
  }
  throw std::runtime_error("llm client: retries exhausted (" + last_error + ")");
}

std::string prompt_cache_key(const PromptPair& prompt, const std::string& client_fingerprint) {
  std::string blob = prompt.instruction;
  blob += '\x1f';
  blob += prompt.input;
  blob += '\x1f';
  blob += client_fingerprint;
  return hash_hex(fnv1a64(blob));
}

ResponseCache::ResponseCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    entries_[j.at("key").get<std::string>()] = j.at("response").get<std::string>();
  }
}

bool ResponseCache::lookup(const std::string& key, std::string* response) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return false;
  *response = it->second;
  return true;
}

void ResponseCache::store(const std::string& key, const std::string& response) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!entries_.emplace(key, response).second) return;
  std::ofstream out(path_, std::ios::app);
  if (!out) throw std::runtime_error("response cache: cannot append to " + path_);
  json j{{"key", key}, {"response", response}};
  out << j.dump() << "\n";
  out.flush();
}

}  // namespace dmsrec
