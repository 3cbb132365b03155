#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bis/corpus.hpp"
#include "bis/scoring.hpp"

namespace bis {

enum class Strategy { bis, random, low_mc, mixed, reliable };

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct SelectionConfig {
  Strategy strategy = Strategy::bis;
  double keep_ratio = 0.25;  // rho in (0, 1]
  uint64_t seed = 42;        // random / mixed padding
  double alpha = 0.05;       // bis only

  void validate() const;
};

struct SourceSelection {
  std::vector<std::string> kept;  // retained ids, original corpus order
  uint64_t total = 0;             // rollouts in this source
};

// Deterministic, auditable record of one selection run. Sources are keyed by
// name (sorted), kept lists follow original corpus order, so identical
// (corpus, config) pairs serialize to identical bytes.
struct SubsetManifest {
  SelectionConfig config;
  std::map<std::string, SourceSelection> sources;

  uint64_t kept_total() const;
  uint64_t corpus_total() const;
};

// Per-source budget: round-half-up of rho*m, clamped so nonempty sources keep
// at least one rollout and never more than m.
uint64_t keep_count(double rho, uint64_t m);

// Top keep_count by bis, descending; ties keep the earlier-positioned rollout.
// `scores` must align with corpus order (see score_corpus).
SubsetManifest select_bis(const Corpus& corpus,
                          const std::vector<RolloutScore>& scores,
                          const SelectionConfig& cfg);

// Seeded uniform sample without replacement per source. Substreams derive
// from (seed, source name), so adding a source never perturbs another's draw.
SubsetManifest select_random(const Corpus& corpus, const SelectionConfig& cfg);

// Bottom keep_count by mean step MC score, ascending, stable ties.
SubsetManifest select_low_mc(const Corpus& corpus, const SelectionConfig& cfg);

// All mixed rollouts (0 < n_pos < n) first, truncated stably to the budget;
// short sources pad with a seeded sample of the non-mixed remainder.
SubsetManifest select_mixed(const Corpus& corpus, const SelectionConfig& cfg);

// Top keep_count by reliability, descending, stable ties.
SubsetManifest select_reliable(const Corpus& corpus,
                               const std::vector<RolloutScore>& scores,
                               const SelectionConfig& cfg);

// Dispatch on cfg.strategy; computes scores internally when needed.
SubsetManifest select(const Corpus& corpus, const SelectionConfig& cfg,
                      int jobs = 1);

std::string manifest_to_json(const SubsetManifest& manifest);
SubsetManifest manifest_from_json(const std::string& text);
void write_manifest(const SubsetManifest& manifest, const std::string& path);
SubsetManifest load_manifest(const std::string& path);

// Streams the original JSONL and writes exactly the manifest's rollouts, in
// manifest order, each line byte-for-byte as it appeared in the input.
// Returns the number of rollouts written.
uint64_t materialize(const std::string& corpus_path,
                     const SubsetManifest& manifest,
                     const std::string& out_path);

}  // namespace bis
