#include "encoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <httplib.h>
#include <json.hpp>

#include "fs_util.hpp"
#include "intent.hpp"
#include "text_util.hpp"

namespace dmsrec {

using json = nlohmann::json;

HashProjectionEncoder::HashProjectionEncoder(int dim, uint64_t seed, int buckets)
    : dim_(dim), seed_(seed), buckets_(buckets) {
  if (dim < 1 || buckets < 1) throw std::invalid_argument("hash encoder: bad config");
}

std::string HashProjectionEncoder::fingerprint() const {
  return "hash-projection:v1:d=" + std::to_string(dim_) + ":seed=" + std::to_string(seed_) +
         ":buckets=" + std::to_string(buckets_);
}

std::vector<Tensor> HashProjectionEncoder::encode(const std::vector<std::string>& texts) {
  std::vector<Tensor> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    Tensor v(1, dim_);
    for (const auto& tok : tokenize(text)) {
      uint64_t bucket = fnv1a64(tok) % static_cast<uint64_t>(buckets_);
      Rng col(derive_seed(seed_, "col:" + std::to_string(bucket)));
      for (int j = 0; j < dim_; ++j) v.v[j] += col.uniform(-1.0, 1.0);
    }
    double norm = std::sqrt(dot(v, v));
    if (norm > 0.0)
      for (auto& x : v.v) x /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

HttpEncoder::HttpEncoder(HttpEncoderConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.url.empty()) throw std::invalid_argument("http encoder: url required");
  auto probe = encode({"ping"});
  if (probe.size() != 1 || probe[0].cols != cfg_.dim)
    throw std::runtime_error("http encoder: endpoint probe failed for " + cfg_.url);
}

std::string HttpEncoder::fingerprint() const {
  return "http:" + cfg_.model + ":d=" + std::to_string(cfg_.dim);
}

std::vector<Tensor> HttpEncoder::encode(const std::vector<std::string>& texts) {
  if (texts.empty()) return {};
  httplib::Client client(cfg_.url);
  client.set_read_timeout(cfg_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!cfg_.api_key_env.empty()) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (!key) throw std::runtime_error("http encoder: env var " + cfg_.api_key_env + " not set");
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  json body{{"model", cfg_.model}, {"input", texts}};
  auto res = client.Post(cfg_.path, headers, body.dump(), "application/json");
  if (!res || res->status != 200)
    throw std::runtime_error("http encoder: request failed (" +
                             (res ? std::to_string(res->status) : "no response") + ")");
  json j = json::parse(res->body);
  std::vector<Tensor> out;
  for (const auto& item : j.at("data")) {
    auto vec = item.at("embedding").get<std::vector<double>>();
    if (static_cast<int>(vec.size()) != cfg_.dim)
      throw std::runtime_error("http encoder: embedding width " + std::to_string(vec.size()) +
                               " != configured " + std::to_string(cfg_.dim));
    out.push_back(Tensor::row(std::move(vec)));
  }
  if (out.size() != texts.size()) throw std::runtime_error("http encoder: count mismatch");
  return out;
}

std::unique_ptr<TextEncoder> make_encoder(const std::string& kind, int dim, uint64_t seed,
                                          const HttpEncoderConfig& http_cfg) {
  if (kind == "double") return std::make_unique<HashProjectionEncoder>(dim, seed);
  if (kind == "pretrained") return std::make_unique<HttpEncoder>(http_cfg);
  throw std::invalid_argument("unknown encoder kind '" + kind + "'");
}

std::pair<Tensor, bool> pool_bucket(const std::vector<Tensor>& vectors, int dim) {
  Tensor mean(1, dim);
  if (vectors.empty()) return {mean, false};
  for (const auto& v : vectors) {
    if (v.cols != dim || v.rows != 1) throw std::invalid_argument("pool_bucket: width mismatch");
    axpy(1.0, v, mean);
  }
  for (auto& x : mean.v) x /= static_cast<double>(vectors.size());
  return {mean, true};
}

const Tensor& EncodeCache::get(const std::string& text) {
  auto it = cache_.find(text);
  if (it != cache_.end()) return it->second;
  auto vecs = enc_.encode({text});
  return cache_.emplace(text, std::move(vecs.at(0))).first->second;
}

IntentEmbedding encode_record(const IntentRecord& record, EncodeCache& cache, int dim) {
  IntentEmbedding out;
  out.session_id = record.session_id;
  std::vector<Tensor> ex, la;
  for (const auto& s : record.explicit_intents) ex.push_back(cache.get(s));
  for (const auto& s : record.latent_intents) la.push_back(cache.get(s));
  std::tie(out.e_explicit, out.has_explicit) = pool_bucket(ex, dim);
  std::tie(out.e_latent, out.has_latent) = pool_bucket(la, dim);
  return out;
}

void save_intent_embeddings(const std::string& stem, const std::vector<IntentEmbedding>& embs,
                            int dim, const std::string& encoder_fingerprint) {
  json index;
  index["d_text"] = dim;
  index["encoder_fingerprint"] = encoder_fingerprint;
  index["count"] = embs.size();
  json sessions = json::array();

  std::string bin;
  bin.reserve(embs.size() * 2 * dim * sizeof(double));
  for (const auto& e : embs) {
    if (e.e_explicit.cols != dim || e.e_latent.cols != dim)
      throw std::invalid_argument("save_intent_embeddings: width mismatch for " + e.session_id);
    sessions.push_back({{"session_id", e.session_id},
                        {"has_explicit", e.has_explicit},
                        {"has_latent", e.has_latent}});
    bin.append(reinterpret_cast<const char*>(e.e_explicit.v.data()), dim * sizeof(double));
    bin.append(reinterpret_cast<const char*>(e.e_latent.v.data()), dim * sizeof(double));
  }
  index["sessions"] = std::move(sessions);
  atomic_write_file(stem + ".bin", bin);
  atomic_write_file(stem + ".json", index.dump(2) + "\n");
}

IntentEmbeddingMap load_intent_embeddings(const std::string& stem) {
  json index = json::parse(read_file(stem + ".json"));
  int dim = index.at("d_text").get<int>();
  std::string bin = read_file(stem + ".bin");
  size_t rec_bytes = 2 * static_cast<size_t>(dim) * sizeof(double);
  const auto& sessions = index.at("sessions");
  if (bin.size() != sessions.size() * rec_bytes)
    throw std::runtime_error("intent embeddings: bin size disagrees with index " + stem);

  IntentEmbeddingMap out;
  size_t off = 0;
  for (const auto& s : sessions) {
    IntentEmbedding e;
    e.session_id = s.at("session_id").get<std::string>();
    e.has_explicit = s.at("has_explicit").get<bool>();
    e.has_latent = s.at("has_latent").get<bool>();
    e.e_explicit = Tensor(1, dim);
    e.e_latent = Tensor(1, dim);
    std::memcpy(e.e_explicit.v.data(), bin.data() + off, dim * sizeof(double));
    off += dim * sizeof(double);
    std::memcpy(e.e_latent.v.data(), bin.data() + off, dim * sizeof(double));
    off += dim * sizeof(double);
    out.emplace(e.session_id, std::move(e));
  }
  return out;
}

}  // namespace dmsrec
