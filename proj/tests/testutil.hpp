#pragma once

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "bis/corpus.hpp"
#include "bis/rng.hpp"

namespace testutil {

// The three worked rollouts used as golden values throughout the suite.
inline const std::vector<double> kCase1 = {0.875, 0.875, 0.9375, 0.875, 0.0,
                                           0.0,   0.0,   0.0,    0.0,   0.0};
inline const std::vector<double> kCase2 = {0.5625, 0.6875, 0.6875, 0.0625,
                                           0.0,    0.0,    0.0,    0.0};
inline const std::vector<double> kCase3 = {0.0625, 0.0625, 0.0625, 0.0625, 0.0,
                                           0.0625, 0.0625, 0.0,    0.0};

inline constexpr double kCase1Bis = 0.25828125;
inline constexpr double kCase2Bis = 0.15;
inline constexpr double kCase3Bis = 49.0 / 2880.0;  // 0.01701388...

inline bis::Rollout make_rollout(std::string id, std::string source,
                                 std::vector<double> mc) {
  bis::Rollout r;
  r.id = std::move(id);
  r.source = std::move(source);
  r.words.assign(mc.size(), 0);
  r.mc = std::move(mc);
  return r;
}

inline bis::Corpus case_study_corpus() {
  bis::Corpus c;
  c.rollouts.push_back(make_rollout("case1", "mavis_function", kCase1));
  c.rollouts.push_back(make_rollout("case2", "ai2d", kCase2));
  c.rollouts.push_back(make_rollout("case3", "mavis_function", kCase3));
  return c;
}

inline std::string case_study_jsonl() {
  auto steps = [](const std::vector<double>& mc) {
    std::string s = "[";
    for (size_t i = 0; i < mc.size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "{\"mc\": %.6g}", mc[i]);
      s += buf;
      if (i + 1 < mc.size()) s += ", ";
    }
    return s + "]";
  };
  std::string out;
  out += "{\"id\": \"case1\", \"source\": \"mavis_function\", \"steps\": " +
         steps(kCase1) + "}\n";
  out += "{\"id\": \"case2\", \"source\": \"ai2d\", \"steps\": " +
         steps(kCase2) + "}\n";
  out += "{\"id\": \"case3\", \"source\": \"mavis_function\", \"steps\": " +
         steps(kCase3) + "}\n";
  return out;
}

// Random corpus with sixteenth-grained MC scores, a few of them zero-heavy
// so every label regime appears.
inline bis::Corpus make_synth_corpus(size_t n_rollouts, size_t n_sources,
                                     uint64_t seed, size_t max_steps = 12) {
  bis::Corpus corpus;
  bis::CounterRng rng(bis::stream_key(seed, "synth-corpus"));
  for (size_t i = 0; i < n_rollouts; ++i) {
    bis::Rollout r;
    r.id = "r" + std::to_string(i);
    r.source = "src" + std::to_string(rng.bounded(n_sources));
    const size_t n = 1 + rng.bounded(max_steps);
    const double zero_bias = rng.next_double();
    for (size_t j = 0; j < n; ++j) {
      const bool zero = rng.next_double() < zero_bias * 0.6;
      const double mc =
          zero ? 0.0 : static_cast<double>(1 + rng.bounded(16)) / 16.0;
      r.mc.push_back(mc);
      r.words.push_back(static_cast<uint32_t>(rng.bounded(40)));
    }
    corpus.rollouts.push_back(std::move(r));
  }
  return corpus;
}

class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0; i < 1000; ++i) {
      auto candidate =
          base / ("bis_test_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter_++));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("cannot create temp dir");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path file(const std::string& name) const {
    return path_ / name;
  }

 private:
  static inline int counter_ = 0;
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace testutil
