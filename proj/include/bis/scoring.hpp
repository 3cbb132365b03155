#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bis/corpus.hpp"

namespace bis {

// Per-rollout selection quantities. Labels here are always the tau = 0 hard
// labels (positive iff mc > 0); a nonzero training threshold only affects
// label export, never scoring.
struct RolloutScore {
  std::string rollout_id;
  uint32_t n = 0;
  uint32_t n_pos = 0;     // steps with mc > 0
  double p_pos = 0.0;     // n_pos / n
  double reliability = 1.0;  // mean mc over positive steps; 1 when none
  double mixture = 0.0;      // p_pos * (1 - p_pos)
  double bis = 0.0;          // (mixture + alpha) * reliability
};

struct ScoringConfig {
  double alpha = 0.05;  // mixture smoothing constant, must be > 0
  LabelingConfig labeling;  // carried as metadata; scoring itself uses tau = 0

  void validate() const;
};

std::pair<uint32_t, double> positive_ratio(const Rollout& rollout);

double reliability(const Rollout& rollout);

RolloutScore score_rollout(const Rollout& rollout, const ScoringConfig& cfg);

// Order-preserving map over the corpus. Pure per rollout, so the result is
// identical for any worker count.
std::vector<RolloutScore> score_corpus(const Corpus& corpus,
                                       const ScoringConfig& cfg, int jobs = 1);

// Export with fixed column order: id,n,n_pos,p_pos,reliability,mixture,bis.
std::string scores_to_csv(const std::vector<RolloutScore>& scores);
std::string scores_to_jsonl(const std::vector<RolloutScore>& scores);
void write_scores_csv(const std::vector<RolloutScore>& scores,
                      const std::string& path);
void write_scores_jsonl(const std::vector<RolloutScore>& scores,
                        const std::string& path);

}  // namespace bis
