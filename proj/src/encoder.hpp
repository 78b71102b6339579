#pragma once

#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "tensor.hpp"

namespace dmsrec {

struct IntentRecord;

// Pooled per-session intent embeddings. A missing bucket is the zero vector
// with its flag false; the fusion layer substitutes a learned embedding.
struct IntentEmbedding {
  std::string session_id;
  Tensor e_explicit;
  Tensor e_latent;
  bool has_explicit = false;
  bool has_latent = false;
};

using IntentEmbeddingMap = std::map<std::string, IntentEmbedding>;

// Pluggable sentence encoder. Must be deterministic for a fixed fingerprint.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual int dim() const = 0;
  virtual std::string fingerprint() const = 0;
  virtual std::vector<Tensor> encode(const std::vector<std::string>& texts) = 0;
};

// Deterministic test double: unit-normalized fixed random projection of
// token-hash counts. Columns of the projection are derived on the fly from
// (seed, bucket), so no d_text x buckets matrix is ever materialized.
class HashProjectionEncoder : public TextEncoder {
 public:
  HashProjectionEncoder(int dim, uint64_t seed, int buckets = 1 << 16);
  int dim() const override { return dim_; }
  std::string fingerprint() const override;
  std::vector<Tensor> encode(const std::vector<std::string>& texts) override;

 private:
  int dim_;
  uint64_t seed_;
  int buckets_;
};

struct HttpEncoderConfig {
  std::string url;          // e.g. http://localhost:8080
  std::string path = "/v1/embeddings";
  std::string model;
  std::string api_key_env;  // name of env var holding the key
  int dim = 768;
  int timeout_seconds = 60;
};

// Embeddings-endpoint client for a real pretrained encoder. The constructor
// probes the endpoint; an unreachable encoder is a startup error, never a
// silent fallback.
class HttpEncoder : public TextEncoder {
 public:
  explicit HttpEncoder(HttpEncoderConfig cfg);
  int dim() const override { return cfg_.dim; }
  std::string fingerprint() const override;
  std::vector<Tensor> encode(const std::vector<std::string>& texts) override;

 private:
  HttpEncoderConfig cfg_;
};

std::unique_ptr<TextEncoder> make_encoder(const std::string& kind, int dim, uint64_t seed,
                                          const HttpEncoderConfig& http_cfg);

// Element-wise mean of the rows; empty input yields (zero vector, false).
std::pair<Tensor, bool> pool_bucket(const std::vector<Tensor>& vectors, int dim);

// Content-addressed per-run cache so repeated intent strings (common across
// augmented prefixes) encode once.
class EncodeCache {
 public:
  explicit EncodeCache(TextEncoder& enc) : enc_(enc) {}
  const Tensor& get(const std::string& text);
  size_t size() const { return cache_.size(); }

 private:
  TextEncoder& enc_;
  std::unordered_map<std::string, Tensor> cache_;
};

IntentEmbedding encode_record(const IntentRecord& record, EncodeCache& cache, int dim);

// --- artifact files: <stem>.bin (raw doubles) + <stem>.json (index) ---

void save_intent_embeddings(const std::string& stem, const std::vector<IntentEmbedding>& embs,
                            int dim, const std::string& encoder_fingerprint);

IntentEmbeddingMap load_intent_embeddings(const std::string& stem);

}  // namespace dmsrec
