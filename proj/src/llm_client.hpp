#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "prompt.hpp"

namespace dmsrec {

// Chat-style completion backend. complete() must be safe to call from
// multiple worker threads.
class LLMClient {
 public:
  virtual ~LLMClient() = default;
  virtual std::string fingerprint() const = 0;
  virtual std::string complete(const PromptPair& prompt) = 0;
};

// Deterministic in-tree stand-in: a pure string function over the prompt.
// It echoes every candidate title sharing a token with any clicked title,
// then the first candidate sharing none, semicolon-joined. Responses are
// grounded in the candidate set by construction.
class MockLLMClient : public LLMClient {
 public:
  std::string fingerprint() const override { return "mock:v1"; }
  std::string complete(const PromptPair& prompt) override;
};

struct HttpLLMConfig {
  std::string url;  // e.g. http://localhost:8000
  std::string path = "/v1/chat/completions";
  std::string model;
  double temperature = 0.0;
  int max_tokens = 256;
  std::string api_key_env;
  int max_retries = 3;
  int backoff_ms = 200;
  int timeout_seconds = 120;
};

// OpenAI-compatible chat endpoint with exponential backoff on transient
// failures (connection errors, 5xx, empty completions).
class HttpLLMClient : public LLMClient {
 public:
  explicit HttpLLMClient(HttpLLMConfig cfg);
  std::string fingerprint() const override;
  std::string complete(const PromptPair& prompt) override;

  int retries_logged() const { return retries_; }

 private:
  HttpLLMConfig cfg_;
  std::atomic<int> retries_{0};
};

std::string prompt_cache_key(const PromptPair& prompt, const std::string& client_fingerprint);

// Append-only response cache: one JSON record per line, flushed per insert.
// A hit returns the stored response without touching the network.
class ResponseCache {
 public:
  explicit ResponseCache(std::string path);
  bool lookup(const std::string& key, std::string* response) const;
  void store(const std::string& key, const std::string& response);
  size_t size() const { return entries_.size(); }

 private:
  std::string path_;
  std::map<std::string, std::string> entries_;
  mutable std::mutex mu_;
};

}  // namespace dmsrec
