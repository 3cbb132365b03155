#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bis/corpus.hpp"
#include "bis/scoring.hpp"
#include "bis/selection.hpp"

namespace bis {

// Single-pass corpus statistics. Raw accumulators are stored so that shard
// results merge associatively: counts bit-identically, means within an ulp.
struct CorpusStats {
  uint64_t n_rollouts = 0;
  uint64_t n_steps = 0;
  uint64_t error_steps = 0;  // steps with mc == 0
  uint64_t total_words = 0;
  double mc_sum = 0.0;

  double avg_steps_per_rollout() const;
  double avg_words_per_step() const;
  double error_step_ratio() const;
  double avg_mc_per_step() const;
};

CorpusStats corpus_stats(const Corpus& corpus);
CorpusStats merge_stats(const CorpusStats& a, const CorpusStats& b);

std::string stats_to_json(const CorpusStats& s);
std::string stats_to_csv(const CorpusStats& s);

enum class HistQuantity { bis, reliability, mixture };

HistQuantity hist_quantity_from_name(const std::string& name);

// Uniform bins over the quantity's natural range ([0,1] for reliability,
// [0,1/4] for mixture, [0,1/4+alpha] for bis); right-open except the last.
// Coverage is selected/all per bin, null when the bin is empty or no
// manifest was given.
struct HistogramReport {
  HistQuantity quantity = HistQuantity::bis;
  std::vector<double> edges;  // bins + 1
  std::vector<uint64_t> counts_all;
  std::vector<uint64_t> counts_selected;
  std::vector<std::optional<double>> coverage;
};

HistogramReport histogram(const std::vector<RolloutScore>& scores,
                          const SubsetManifest* manifest, HistQuantity quantity,
                          int bins, double alpha = 0.05);

std::string histogram_to_json(const HistogramReport& h);
std::string histogram_to_csv(const HistogramReport& h);

// Best-of-N candidate set: per problem, N candidates each scored per step.
struct CandidateSet {
  std::string problem;
  std::vector<std::vector<double>> candidates;
};

std::vector<CandidateSet> load_candidates(const std::string& path);

// Index of the candidate with the highest mean step score; ties -> lowest.
size_t best_of_n(const CandidateSet& cands);

struct SweepResult {
  double tau = 0.0;
  double micro_f1 = 0.0;
  bool degenerate_gold = false;  // single gold class; trivial classifier
};

// Sweeps tau over distinct scores plus {0,1}, classifying score >= tau as
// positive (evaluation rule; training binarization uses strict >). Returns
// the lowest tau maximizing two-class micro-F1 (pooled counts; equals
// accuracy for single-label binary).
SweepResult threshold_sweep_f1(
    const std::vector<std::pair<double, int>>& pred);

std::vector<std::pair<double, int>> load_predictions_csv(
    const std::string& path);

}  // namespace bis
