#include "bis/corpus.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "bis/error.hpp"

namespace bis {

uint64_t Corpus::total_steps() const {
  uint64_t n = 0;
  for (const auto& r : rollouts) n += r.mc.size();
  return n;
}

namespace {

uint32_t count_words(const std::string& text) {
  uint32_t n = 0;
  bool in_token = false;
  for (unsigned char c : text) {
    const bool ws = std::isspace(c) != 0;
    if (!ws && !in_token) ++n;
    in_token = !ws;
  }
  return n;
}

}  // namespace

Corpus load_corpus(const std::string& path, int declared_n, const WarnFn& warn) {
  if (declared_n < 1)
    throw ValidationError("declared_n must be positive, got " +
                          std::to_string(declared_n));
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file: " + path);

  Corpus corpus;
  corpus.declared_n = declared_n;
  std::unordered_set<std::string> seen_ids;
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
    if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() ||
        !obj.contains("source") || !obj["source"].is_string() ||
        !obj.contains("steps") || !obj["steps"].is_array()) {
      throw ValidationError("parse error at line " + std::to_string(lineno) +
                            ": expected {id, source, steps[]}");
    }

    Rollout r;
    r.id = obj["id"].get<std::string>();
    r.source = obj["source"].get<std::string>();
    if (r.id.empty())
      throw ValidationError("empty id at line " + std::to_string(lineno));
    if (r.source.empty())
      throw ValidationError("empty source for rollout '" + r.id + "' at line " +
                            std::to_string(lineno));
    if (!seen_ids.insert(r.id).second)
      throw ValidationError("duplicate id '" + r.id + "' at line " +
                            std::to_string(lineno));

    const auto& steps = obj["steps"];
    if (steps.empty())
      throw ValidationError("empty rollout '" + r.id + "' at line " +
                            std::to_string(lineno));
    r.mc.reserve(steps.size());
    r.words.reserve(steps.size());
    size_t step_idx = 0;
    for (const auto& s : steps) {
      if (!s.is_object() || !s.contains("mc") || !s["mc"].is_number()) {
        throw ValidationError("parse error at line " + std::to_string(lineno) +
                              ": step " + std::to_string(step_idx) +
                              " of '" + r.id + "' has no numeric mc");
      }
      const double mc = s["mc"].get<double>();
      if (!(mc >= 0.0) || !(mc <= 1.0)) {
        std::ostringstream msg;
        msg << "score out of range in rollout '" << r.id << "', step "
            << step_idx << ": " << mc;
        throw ValidationError(msg.str());
      }
      const double scaled = mc * declared_n;
      if (warn && std::abs(scaled - std::round(scaled)) > 1e-9) {
        std::ostringstream msg;
        msg << "rollout '" << r.id << "' step " << step_idx << ": mc " << mc
            << " is not a multiple of 1/" << declared_n;
        warn(msg.str());
      }
      r.mc.push_back(mc);
      if (s.contains("text") && s["text"].is_string())
        r.words.push_back(count_words(s["text"].get<std::string>()));
      else
        r.words.push_back(0);
      ++step_idx;
    }
    corpus.rollouts.push_back(std::move(r));
  }
  if (in.bad()) throw IoError("read failure on corpus file: " + path);
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open output file: " + path);
  for (const auto& r : corpus.rollouts) {
    nlohmann::ordered_json obj;
    obj["id"] = r.id;
    obj["source"] = r.source;
    auto steps = nlohmann::ordered_json::array();
    for (double mc : r.mc) steps.push_back({{"mc", mc}});
    obj["steps"] = std::move(steps);
    out << obj.dump() << '\n';
  }
  if (!out) throw IoError("write failure on output file: " + path);
}

std::vector<int> binarize(const Rollout& rollout, const LabelingConfig& cfg) {
  if (cfg.mode != LabelMode::hard)
    throw ValidationError("binarize is undefined for soft labeling mode");
  if (!(cfg.tau >= 0.0) || !(cfg.tau < 1.0))
    throw ValidationError("labeling threshold must lie in [0, 1)");
  std::vector<int> labels;
  labels.reserve(rollout.mc.size());
  for (double mc : rollout.mc) labels.push_back(mc > cfg.tau ? 1 : 0);
  return labels;
}

}  // namespace bis
