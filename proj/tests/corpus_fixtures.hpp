#pragma once

#include "encoder.hpp"
#include "intent.hpp"
#include "trainer.hpp"

namespace dmsrec::testing {

// Small deterministic successor corpus with per-session intent embeddings:
// the explicit bucket encodes the last clicked title, the latent bucket the
// target's title.
struct TinyCorpus {
  std::vector<Session> train, test;
  ItemCatalog catalog;
  IntentEmbeddingMap intents;
};

inline TinyCorpus tiny_corpus(int n_sessions = 60, int n_items = 10, int d_text = 16,
                              bool with_intents = true) {
  TinyCorpus c;
  for (int i = 1; i <= n_items; ++i) c.catalog.add("i" + std::to_string(i));
  Rng rng(100);
  HashProjectionEncoder enc(d_text, 55);
  EncodeCache cache(enc);
  for (int k = 0; k < n_sessions; ++k) {
    Session s;
    s.session_id = "s" + std::to_string(k);
    int start = 1 + static_cast<int>(rng.next_below(n_items));
    int len = 2 + static_cast<int>(rng.next_below(3));
    for (int i = 0; i < len; ++i) {
      int id = (start - 1 + i) % n_items + 1;
      s.items.push_back(id);
      s.titles.push_back(c.catalog.title(id));
    }
    s.target = (start - 1 + len) % n_items + 1;
    if (with_intents) {
      IntentRecord r;
      r.session_id = s.session_id;
      r.explicit_intents = {c.catalog.title(s.items.back())};
      r.latent_intents = {c.catalog.title(s.target)};
      c.intents.emplace(s.session_id, encode_record(r, cache, d_text));
    }
    (k % 5 == 4 ? c.test : c.train).push_back(std::move(s));
  }
  return c;
}

inline TrainConfig tiny_config(int d_text = 16) {
  TrainConfig cfg;
  cfg.d = 12;
  cfg.d_text = d_text;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  cfg.seed = 9;
  return cfg;
}

}  // namespace dmsrec::testing
