#include "fixture.hpp"

#include <stdexcept>

#include "fs_util.hpp"

namespace dmsrec {

std::string fixture_title(int item_id, const FixtureConfig& cfg) {
  std::string title = "i" + std::to_string(item_id);
  if (cfg.style == "series")
    title += " s" + std::to_string((item_id - 1) / cfg.series_size);
  return title;
}

void write_fixture_events(const std::string& path, const FixtureConfig& cfg) {
  if (cfg.n_items < 2 || cfg.n_sessions < 1 || cfg.min_len < 2 || cfg.max_len < cfg.min_len)
    throw std::invalid_argument("fixture: bad config");
  if (cfg.style != "series" && cfg.style != "plain")
    throw std::invalid_argument("fixture: unknown style '" + cfg.style + "'");

  Rng rng(cfg.seed);
  std::string out;
  out.reserve(static_cast<size_t>(cfg.n_sessions) * cfg.max_len * 32);
  int64_t ts = 1000000;
  for (int k = 0; k < cfg.n_sessions; ++k) {
    int start = 1 + static_cast<int>(rng.next_below(cfg.n_items));
    int len = cfg.min_len + static_cast<int>(rng.next_below(cfg.max_len - cfg.min_len + 1));
    for (int i = 0; i < len; ++i) {
      int item = (start - 1 + i) % cfg.n_items + 1;
      out += "u" + std::to_string(k) + "\t" + std::to_string(item) + "\t" +
             std::to_string(ts + i * 60) + "\t" + fixture_title(item, cfg) + "\n";
    }
    ts += 1000;
  }
  atomic_write_file(path, out);
}

}  // namespace dmsrec
