#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace bis {

// One MC-annotated reasoning rollout. Step text is never retained in memory:
// the math reads only the score vector, and per-step whitespace word counts
// are kept for corpus statistics. The JSONL file stays the source of truth
// for text (see materialize()).
struct Rollout {
  std::string id;
  std::string source;
  std::vector<double> mc;        // per-step MC success fraction in [0,1]
  std::vector<uint32_t> words;   // per-step whitespace token count, 0 if no text

  size_t n_steps() const { return mc.size(); }
};

enum class LabelMode { hard, soft };

struct LabelingConfig {
  double tau = 0.0;  // binarization threshold, strict: label = mc > tau
  LabelMode mode = LabelMode::hard;
};

// Loaded corpora are immutable; parallel readers may share one freely.
struct Corpus {
  int declared_n = 16;  // declared MC continuations per step
  std::vector<Rollout> rollouts;

  size_t size() const { return rollouts.size(); }
  uint64_t total_steps() const;
};

using WarnFn = std::function<void(const std::string&)>;

// Reads a JSONL corpus, one rollout per line:
//   {"id": str, "source": str, "steps": [{"mc": number, "text": str?}]}
// Malformed lines, duplicate ids, empty rollouts, and out-of-range scores are
// hard errors with line numbers. Scores that are not integer multiples of
// 1/declared_n only warn: upstream corpora may average several annotators.
Corpus load_corpus(const std::string& path, int declared_n = 16,
                   const WarnFn& warn = nullptr);

// Re-serializes a corpus (scores only; text was not retained).
void write_corpus(const Corpus& corpus, const std::string& path);

// Hard labels under the standard rule: label_j = 1 iff mc_j > tau (strict,
// so tau = 1/N drops single-success steps). Soft mode has no binarization.
std::vector<int> binarize(const Rollout& rollout, const LabelingConfig& cfg);

}  // namespace bis
