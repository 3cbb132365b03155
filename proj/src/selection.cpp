#include "bis/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "bis/error.hpp"
#include "bis/rng.hpp"

namespace bis {

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::bis: return "bis";
    case Strategy::random: return "random";
    case Strategy::low_mc: return "low_mc";
    case Strategy::mixed: return "mixed";
    case Strategy::reliable: return "reliable";
  }
  return "?";
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "bis") return Strategy::bis;
  if (name == "random") return Strategy::random;
  if (name == "low_mc") return Strategy::low_mc;
  if (name == "mixed") return Strategy::mixed;
  if (name == "reliable") return Strategy::reliable;
  throw ValidationError("unknown strategy: " + name);
}

void SelectionConfig::validate() const {
  if (!(keep_ratio > 0.0) || !(keep_ratio <= 1.0))
    throw ValidationError("keep ratio must lie in (0, 1]");
  if (strategy == Strategy::bis && !(alpha > 0.0))
    throw ValidationError("alpha must be > 0");
}

uint64_t SubsetManifest::kept_total() const {
  uint64_t n = 0;
  for (const auto& [_, sel] : sources) n += sel.kept.size();
  return n;
}

uint64_t SubsetManifest::corpus_total() const {
  uint64_t n = 0;
  for (const auto& [_, sel] : sources) n += sel.total;
  return n;
}

uint64_t keep_count(double rho, uint64_t m) {
  if (m == 0) return 0;
  auto k = static_cast<uint64_t>(
      std::floor(rho * static_cast<double>(m) + 0.5));
  return std::clamp<uint64_t>(k, 1, m);
}

namespace {

// Per-source corpus positions, keyed by source name; positions ascend.
std::map<std::string, std::vector<size_t>> group_by_source(
    const Corpus& corpus) {
  std::map<std::string, std::vector<size_t>> groups;
  for (size_t i = 0; i < corpus.rollouts.size(); ++i)
    groups[corpus.rollouts[i].source].push_back(i);
  return groups;
}

SubsetManifest finish(const Corpus& corpus, const SelectionConfig& cfg,
                      std::map<std::string, std::vector<size_t>>&& picked,
                      const std::map<std::string, std::vector<size_t>>& groups) {
  SubsetManifest manifest;
  manifest.config = cfg;
  for (auto& [source, positions] : picked) {
    std::sort(positions.begin(), positions.end());
    SourceSelection sel;
    sel.total = groups.at(source).size();
    sel.kept.reserve(positions.size());
    for (size_t pos : positions) sel.kept.push_back(corpus.rollouts[pos].id);
    manifest.sources.emplace(source, std::move(sel));
  }
  return manifest;
}

// Stable top-k of the group's positions under `better`; equal keys keep the
// earlier corpus position.
template <typename KeyFn, typename Better>
std::vector<size_t> top_k(const std::vector<size_t>& group, uint64_t k,
                          KeyFn key, Better better) {
  std::vector<size_t> order = group;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return better(key(a), key(b));
  });
  order.resize(std::min<size_t>(order.size(), k));
  return order;
}

std::vector<size_t> sample_without_replacement(std::vector<size_t> pool,
                                               uint64_t k, CounterRng& rng) {
  const size_t m = pool.size();
  const size_t take = std::min<size_t>(k, m);
  for (size_t i = 0; i < take; ++i) {
    const size_t j = i + static_cast<size_t>(rng.bounded(m - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return pool;
}

void check_scores(const Corpus& corpus,
                  const std::vector<RolloutScore>& scores) {
  if (scores.size() != corpus.rollouts.size())
    throw ValidationError("scores do not cover the corpus");
}

}  // namespace

SubsetManifest select_bis(const Corpus& corpus,
                          const std::vector<RolloutScore>& scores,
                          const SelectionConfig& cfg) {
  cfg.validate();
  check_scores(corpus, scores);
  auto groups = group_by_source(corpus);
  std::map<std::string, std::vector<size_t>> picked;
  for (const auto& [source, group] : groups) {
    const uint64_t k = keep_count(cfg.keep_ratio, group.size());
    picked[source] = top_k(
        group, k, [&](size_t i) { return scores[i].bis; },
        [](double a, double b) { return a > b; });
  }
  return finish(corpus, cfg, std::move(picked), groups);
}

SubsetManifest select_low_mc(const Corpus& corpus,
                             const SelectionConfig& cfg) {
  cfg.validate();
  auto groups = group_by_source(corpus);
  std::vector<double> mean_mc(corpus.rollouts.size());
  for (size_t i = 0; i < corpus.rollouts.size(); ++i) {
    double sum = 0.0;
    for (double mc : corpus.rollouts[i].mc) sum += mc;
    mean_mc[i] = sum / corpus.rollouts[i].mc.size();
  }
  std::map<std::string, std::vector<size_t>> picked;
  for (const auto& [source, group] : groups) {
    const uint64_t k = keep_count(cfg.keep_ratio, group.size());
    picked[source] = top_k(
        group, k, [&](size_t i) { return mean_mc[i]; },
        [](double a, double b) { return a < b; });
  }
  return finish(corpus, cfg, std::move(picked), groups);
}

SubsetManifest select_reliable(const Corpus& corpus,
                               const std::vector<RolloutScore>& scores,
                               const SelectionConfig& cfg) {
  cfg.validate();
  check_scores(corpus, scores);
  auto groups = group_by_source(corpus);
  std::map<std::string, std::vector<size_t>> picked;
  for (const auto& [source, group] : groups) {
    const uint64_t k = keep_count(cfg.keep_ratio, group.size());
    picked[source] = top_k(
        group, k, [&](size_t i) { return scores[i].reliability; },
        [](double a, double b) { return a > b; });
  }
  return finish(corpus, cfg, std::move(picked), groups);
}

SubsetManifest select_random(const Corpus& corpus,
                             const SelectionConfig& cfg) {
  cfg.validate();
  auto groups = group_by_source(corpus);
  std::map<std::string, std::vector<size_t>> picked;
  for (const auto& [source, group] : groups) {
    const uint64_t k = keep_count(cfg.keep_ratio, group.size());
    CounterRng rng(stream_key(cfg.seed, source));
    picked[source] = sample_without_replacement(group, k, rng);
  }
  return finish(corpus, cfg, std::move(picked), groups);
}

SubsetManifest select_mixed(const Corpus& corpus, const SelectionConfig& cfg) {
  cfg.validate();
  auto groups = group_by_source(corpus);
  std::map<std::string, std::vector<size_t>> picked;
  for (const auto& [source, group] : groups) {
    const uint64_t k = keep_count(cfg.keep_ratio, group.size());
    std::vector<size_t> mixed, rest;
    for (size_t i : group) {
      const auto [n_pos, _] = positive_ratio(corpus.rollouts[i]);
      const bool is_mixed = n_pos > 0 && n_pos < corpus.rollouts[i].mc.size();
      (is_mixed ? mixed : rest).push_back(i);
    }
    if (mixed.size() >= k) {
      mixed.resize(k);  // earliest-positioned mixed rollouts
      picked[source] = std::move(mixed);
    } else {
      // Same substream construction as select_random, so a source with no
      // mixed rollouts reproduces the random manifest exactly.
      CounterRng rng(stream_key(cfg.seed, source));
      auto pad = sample_without_replacement(std::move(rest), k - mixed.size(),
                                            rng);
      mixed.insert(mixed.end(), pad.begin(), pad.end());
      picked[source] = std::move(mixed);
    }
  }
  return finish(corpus, cfg, std::move(picked), groups);
}

SubsetManifest select(const Corpus& corpus, const SelectionConfig& cfg,
                      int jobs) {
  switch (cfg.strategy) {
    case Strategy::random:
      return select_random(corpus, cfg);
    case Strategy::low_mc:
      return select_low_mc(corpus, cfg);
    case Strategy::mixed:
      return select_mixed(corpus, cfg);
    case Strategy::bis:
    case Strategy::reliable: {
      ScoringConfig scfg;
      scfg.alpha = cfg.alpha;
      auto scores = score_corpus(corpus, scfg, jobs);
      return cfg.strategy == Strategy::bis
                 ? select_bis(corpus, scores, cfg)
                 : select_reliable(corpus, scores, cfg);
    }
  }
  throw ValidationError("unknown strategy");
}

std::string manifest_to_json(const SubsetManifest& manifest) {
  nlohmann::ordered_json root;
  nlohmann::ordered_json config;
  config["strategy"] = strategy_name(manifest.config.strategy);
  config["rho"] = manifest.config.keep_ratio;
  config["seed"] = manifest.config.seed;
  config["alpha"] = manifest.config.alpha;
  root["config"] = std::move(config);
  nlohmann::ordered_json sources;
  for (const auto& [name, sel] : manifest.sources) {
    nlohmann::ordered_json s;
    s["kept"] = sel.kept;
    s["total"] = sel.total;
    sources[name] = std::move(s);
  }
  root["sources"] = std::move(sources);
  return root.dump(2) + "\n";
}

SubsetManifest manifest_from_json(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("manifest parse error: ") + e.what());
  }
  SubsetManifest m;
  try {
    const auto& config = root.at("config");
    m.config.strategy = strategy_from_name(config.at("strategy"));
    m.config.keep_ratio = config.at("rho").get<double>();
    m.config.seed = config.at("seed").get<uint64_t>();
    m.config.alpha = config.at("alpha").get<double>();
    for (const auto& [name, s] : root.at("sources").items()) {
      SourceSelection sel;
      sel.kept = s.at("kept").get<std::vector<std::string>>();
      sel.total = s.at("total").get<uint64_t>();
      m.sources.emplace(name, std::move(sel));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("manifest schema error: ") + e.what());
  }
  return m;
}

void write_manifest(const SubsetManifest& manifest, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open output file: " + path);
  out << manifest_to_json(manifest);
  if (!out) throw IoError("write failure on output file: " + path);
}

SubsetManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return manifest_from_json(text);
}

uint64_t materialize(const std::string& corpus_path,
                     const SubsetManifest& manifest,
                     const std::string& out_path) {
  std::unordered_set<std::string> wanted;
  for (const auto& [_, sel] : manifest.sources)
    for (const auto& id : sel.kept) wanted.insert(id);

  std::ifstream in(corpus_path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file: " + corpus_path);
  std::unordered_map<std::string, std::string> lines;
  std::string line;
  uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string body = line;
    if (!body.empty() && body.back() == '\r') body.pop_back();
    if (body.find_first_not_of(" \t") == std::string::npos) continue;
    std::string id;
    try {
      id = nlohmann::json::parse(body).at("id").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("parse error at line " + std::to_string(lineno) +
                            ": " + e.what());
    }
    if (wanted.count(id)) lines.emplace(std::move(id), std::move(body));
  }
  if (in.bad()) throw IoError("read failure on corpus file: " + corpus_path);

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoError("cannot open output file: " + out_path);
  uint64_t written = 0;
  for (const auto& [_, sel] : manifest.sources) {
    for (const auto& id : sel.kept) {
      auto it = lines.find(id);
      if (it == lines.end())
        throw ValidationError("manifest id '" + id + "' missing from corpus");
      out << it->second << '\n';
      ++written;
    }
  }
  if (!out) throw IoError("write failure on output file: " + out_path);
  return written;
}

}  // namespace bis
