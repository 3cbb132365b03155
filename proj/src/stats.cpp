#include "bis/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "bis/error.hpp"

namespace bis {

double CorpusStats::avg_steps_per_rollout() const {
  return static_cast<double>(n_steps) / static_cast<double>(n_rollouts);
}

double CorpusStats::avg_words_per_step() const {
  return static_cast<double>(total_words) / static_cast<double>(n_steps);
}

double CorpusStats::error_step_ratio() const {
  return static_cast<double>(error_steps) / static_cast<double>(n_steps);
}

double CorpusStats::avg_mc_per_step() const {
  return mc_sum / static_cast<double>(n_steps);
}

CorpusStats corpus_stats(const Corpus& corpus) {
  if (corpus.rollouts.empty()) throw ValidationError("empty corpus");
  CorpusStats s;
  for (const auto& r : corpus.rollouts) {
    ++s.n_rollouts;
    s.n_steps += r.mc.size();
    for (double mc : r.mc) {
      if (mc == 0.0) ++s.error_steps;
      s.mc_sum += mc;
    }
    for (uint32_t w : r.words) s.total_words += w;
  }
  return s;
}

CorpusStats merge_stats(const CorpusStats& a, const CorpusStats& b) {
  CorpusStats s;
  s.n_rollouts = a.n_rollouts + b.n_rollouts;
  s.n_steps = a.n_steps + b.n_steps;
  s.error_steps = a.error_steps + b.error_steps;
  s.total_words = a.total_words + b.total_words;
  s.mc_sum = a.mc_sum + b.mc_sum;
  return s;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

std::string stats_to_json(const CorpusStats& s) {
  nlohmann::ordered_json obj;
  obj["n_rollouts"] = s.n_rollouts;
  obj["n_steps"] = s.n_steps;
  obj["avg_steps_per_rollout"] = s.avg_steps_per_rollout();
  obj["avg_words_per_step"] = s.avg_words_per_step();
  obj["error_step_ratio"] = s.error_step_ratio();
  obj["avg_mc_per_step"] = s.avg_mc_per_step();
  return obj.dump(2) + "\n";
}

std::string stats_to_csv(const CorpusStats& s) {
  std::ostringstream out;
  out << "n_rollouts,n_steps,avg_steps_per_rollout,avg_words_per_step,"
         "error_step_ratio,avg_mc_per_step\n";
  out << s.n_rollouts << ',' << s.n_steps << ','
      << fmt(s.avg_steps_per_rollout()) << ',' << fmt(s.avg_words_per_step())
      << ',' << fmt(s.error_step_ratio()) << ',' << fmt(s.avg_mc_per_step())
      << '\n';
  return out.str();
}

HistQuantity hist_quantity_from_name(const std::string& name) {
  if (name == "bis") return HistQuantity::bis;
  if (name == "reliability") return HistQuantity::reliability;
  if (name == "mixture") return HistQuantity::mixture;
  throw ValidationError("unknown histogram quantity: " + name);
}

HistogramReport histogram(const std::vector<RolloutScore>& scores,
                          const SubsetManifest* manifest, HistQuantity quantity,
                          int bins, double alpha) {
  if (bins < 1) throw ValidationError("bins must be >= 1");
  double hi = 1.0;
  switch (quantity) {
    case HistQuantity::reliability: hi = 1.0; break;
    case HistQuantity::mixture: hi = 0.25; break;
    case HistQuantity::bis: hi = 0.25 + alpha; break;
  }
  HistogramReport h;
  h.quantity = quantity;
  h.edges.resize(bins + 1);
  for (int i = 0; i <= bins; ++i)
    h.edges[i] = hi * static_cast<double>(i) / bins;
  h.edges.back() = hi;
  h.counts_all.assign(bins, 0);
  h.counts_selected.assign(bins, 0);

  std::unordered_set<std::string> selected;
  if (manifest) {
    for (const auto& [_, sel] : manifest->sources)
      selected.insert(sel.kept.begin(), sel.kept.end());
  }

  for (const auto& s : scores) {
    double v = 0.0;
    switch (quantity) {
      case HistQuantity::reliability: v = s.reliability; break;
      case HistQuantity::mixture: v = s.mixture; break;
      case HistQuantity::bis: v = s.bis; break;
    }
    // Right-open bins except the last; the top edge lands in the last bin.
    auto idx = static_cast<int64_t>(std::floor(v / hi * bins));
    idx = std::clamp<int64_t>(idx, 0, bins - 1);
    ++h.counts_all[idx];
    if (manifest && selected.count(s.rollout_id)) ++h.counts_selected[idx];
  }

  h.coverage.assign(bins, std::nullopt);
  if (manifest) {
    for (int i = 0; i < bins; ++i) {
      if (h.counts_all[i] > 0)
        h.coverage[i] = static_cast<double>(h.counts_selected[i]) /
                        static_cast<double>(h.counts_all[i]);
    }
  }
  return h;
}

namespace {

const char* quantity_name(HistQuantity q) {
  switch (q) {
    case HistQuantity::bis: return "bis";
    case HistQuantity::reliability: return "reliability";
    case HistQuantity::mixture: return "mixture";
  }
  return "?";
}

}  // namespace

std::string histogram_to_json(const HistogramReport& h) {
  nlohmann::ordered_json obj;
  obj["quantity"] = quantity_name(h.quantity);
  obj["edges"] = h.edges;
  obj["counts_all"] = h.counts_all;
  obj["counts_selected"] = h.counts_selected;
  auto cov = nlohmann::ordered_json::array();
  for (const auto& c : h.coverage) {
    if (c)
      cov.push_back(*c);
    else
      cov.push_back(nullptr);
  }
  obj["coverage"] = std::move(cov);
  return obj.dump(2) + "\n";
}

std::string histogram_to_csv(const HistogramReport& h) {
  std::ostringstream out;
  out << "bin_lo,bin_hi,count_all,count_selected,coverage\n";
  for (size_t i = 0; i + 1 < h.edges.size(); ++i) {
    out << fmt(h.edges[i]) << ',' << fmt(h.edges[i + 1]) << ','
        << h.counts_all[i] << ',' << h.counts_selected[i] << ',';
    if (h.coverage[i]) out << fmt(*h.coverage[i]);
    out << '\n';
  }
  return out.str();
}

std::vector<CandidateSet> load_candidates(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open candidates file: " + path);
  std::vector<CandidateSet> out;
  std::string line;
  uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("parse error at line " + std::to_string(lineno) +
                            ": " + e.what());
    }
    CandidateSet c;
    try {
      c.problem = obj.at("problem").is_string()
                      ? obj.at("problem").get<std::string>()
                      : obj.at("problem").dump();
      c.candidates =
          obj.at("candidates").get<std::vector<std::vector<double>>>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("candidate schema error at line " +
                            std::to_string(lineno) + ": " + e.what());
    }
    if (c.candidates.empty())
      throw ValidationError("problem '" + c.problem + "' has no candidates");
    for (const auto& cand : c.candidates) {
      if (cand.empty())
        throw ValidationError("problem '" + c.problem +
                              "' has a candidate with no steps");
      for (double v : cand)
        if (!(v >= 0.0) || !(v <= 1.0))
          throw ValidationError("problem '" + c.problem +
                                "' has a step score outside [0,1]");
    }
    out.push_back(std::move(c));
  }
  if (in.bad()) throw IoError("read failure on candidates file: " + path);
  return out;
}

size_t best_of_n(const CandidateSet& cands) {
  if (cands.candidates.empty()) throw ValidationError("empty candidate set");
  size_t best = 0;
  double best_mean = -1.0;
  for (size_t i = 0; i < cands.candidates.size(); ++i) {
    const auto& c = cands.candidates[i];
    if (c.empty()) throw ValidationError("candidate with no steps");
    double sum = 0.0;
    for (double v : c) sum += v;
    const double mean = sum / c.size();
    if (mean > best_mean) {
      best_mean = mean;
      best = i;
    }
  }
  return best;
}

SweepResult threshold_sweep_f1(
    const std::vector<std::pair<double, int>>& pred) {
  if (pred.empty()) throw ValidationError("no predictions to sweep");
  size_t gold_pos = 0;
  for (const auto& [score, gold] : pred) {
    if (!(score >= 0.0) || !(score <= 1.0))
      throw ValidationError("prediction score outside [0,1]");
    if (gold != 0 && gold != 1)
      throw ValidationError("gold label must be 0 or 1");
    gold_pos += gold;
  }

  std::vector<double> taus;
  taus.reserve(pred.size() + 2);
  for (const auto& [score, _] : pred) taus.push_back(score);
  taus.push_back(0.0);
  taus.push_back(1.0);
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());

  SweepResult best;
  best.micro_f1 = -1.0;
  for (double tau : taus) {
    // Pooled micro counts over both classes; each example contributes one
    // TP (if correct) or one FP plus one FN (if wrong).
    uint64_t correct = 0;
    for (const auto& [score, gold] : pred)
      correct += (score >= tau ? 1 : 0) == gold ? 1 : 0;
    const uint64_t wrong = pred.size() - correct;
    const double f1 =
        2.0 * correct / static_cast<double>(2 * correct + 2 * wrong);
    if (f1 > best.micro_f1) {
      best.micro_f1 = f1;
      best.tau = tau;
    }
  }
  best.degenerate_gold = gold_pos == 0 || gold_pos == pred.size();
  return best;
}

std::vector<std::pair<double, int>> load_predictions_csv(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open predictions file: " + path);
  std::vector<std::pair<double, int>> out;
  std::string line;
  uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.find_first_not_of("0123456789.,+-eE \t") !=
                           std::string::npos)
      continue;  // header row
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ValidationError("line " + std::to_string(lineno) +
                            ": expected 'score,gold'");
    try {
      const double score = std::stod(line.substr(0, comma));
      const int gold = std::stoi(line.substr(comma + 1));
      out.emplace_back(score, gold);
    } catch (const std::exception&) {
      throw ValidationError("line " + std::to_string(lineno) +
                            ": expected 'score,gold'");
    }
  }
  if (in.bad()) throw IoError("read failure on predictions file: " + path);
  return out;
}

}  // namespace bis
