#include "bis/scoring.hpp"

#include <charconv>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "bis/error.hpp"

namespace bis {

void ScoringConfig::validate() const {
  if (!(alpha > 0.0)) throw ValidationError("alpha must be > 0");
  if (!(labeling.tau >= 0.0) || !(labeling.tau < 1.0))
    throw ValidationError("labeling threshold must lie in [0, 1)");
}

std::pair<uint32_t, double> positive_ratio(const Rollout& rollout) {
  if (rollout.mc.empty()) throw ValidationError("rollout has no steps");
  uint32_t n_pos = 0;
  for (double mc : rollout.mc) n_pos += mc > 0.0 ? 1 : 0;
  return {n_pos, static_cast<double>(n_pos) / rollout.mc.size()};
}

double reliability(const Rollout& rollout) {
  if (rollout.mc.empty()) throw ValidationError("rollout has no steps");
  double sum = 0.0;
  uint32_t n_pos = 0;
  for (double mc : rollout.mc) {
    if (mc > 0.0) {
      sum += mc;
      ++n_pos;
    }
  }
  return n_pos == 0 ? 1.0 : sum / n_pos;
}

RolloutScore score_rollout(const Rollout& rollout, const ScoringConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<uint32_t>(rollout.mc.size());
  const auto [n_pos, p_pos] = positive_ratio(rollout);

  RolloutScore s;
  s.rollout_id = rollout.id;
  s.n = n;
  s.n_pos = n_pos;
  s.p_pos = p_pos;
  s.reliability = reliability(rollout);
  // Counts are exact integers and k/N scores sum exactly, so an extended-
  // precision evaluation rounds to the nearest double of the true rational
  // value (0.29 * 0.890625 prints as 0.25828125, not ...006).
  const uint64_t num = static_cast<uint64_t>(n_pos) * (n - n_pos);
  const uint64_t den = static_cast<uint64_t>(n) * n;
  const long double mixture =
      static_cast<long double>(num) / static_cast<long double>(den);
  s.mixture = static_cast<double>(mixture);
  s.bis = static_cast<double>(
      (mixture + static_cast<long double>(cfg.alpha)) *
      static_cast<long double>(s.reliability));
  return s;
}

std::vector<RolloutScore> score_corpus(const Corpus& corpus,
                                       const ScoringConfig& cfg, int jobs) {
  cfg.validate();
  std::vector<RolloutScore> out(corpus.rollouts.size());
  const size_t n = corpus.rollouts.size();
  if (jobs <= 1 || n < 2) {
    for (size_t i = 0; i < n; ++i)
      out[i] = score_rollout(corpus.rollouts[i], cfg);
    return out;
  }
  const size_t workers = std::min<size_t>(jobs, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (size_t i = w; i < n; i += workers)
        out[i] = score_rollout(corpus.rollouts[i], cfg);
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void write_text(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open output file: " + path);
  out << text;
  if (!out) throw IoError("write failure on output file: " + path);
}

}  // namespace

std::string scores_to_csv(const std::vector<RolloutScore>& scores) {
  std::string out = "id,n,n_pos,p_pos,reliability,mixture,bis\n";
  for (const auto& s : scores) {
    out += s.rollout_id;
    out += ',' + std::to_string(s.n) + ',' + std::to_string(s.n_pos) + ',' +
           fmt(s.p_pos) + ',' + fmt(s.reliability) + ',' + fmt(s.mixture) +
           ',' + fmt(s.bis) + '\n';
  }
  return out;
}

std::string scores_to_jsonl(const std::vector<RolloutScore>& scores) {
  std::string out;
  for (const auto& s : scores) {
    nlohmann::ordered_json obj;
    obj["id"] = s.rollout_id;
    obj["n"] = s.n;
    obj["n_pos"] = s.n_pos;
    obj["p_pos"] = s.p_pos;
    obj["reliability"] = s.reliability;
    obj["mixture"] = s.mixture;
    obj["bis"] = s.bis;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void write_scores_csv(const std::vector<RolloutScore>& scores,
                      const std::string& path) {
  write_text(scores_to_csv(scores), path);
}

void write_scores_jsonl(const std::vector<RolloutScore>& scores,
                        const std::string& path) {
  write_text(scores_to_jsonl(scores), path);
}

}  // namespace bis
