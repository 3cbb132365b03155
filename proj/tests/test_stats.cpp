#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bis/error.hpp"
#include "bis/rng.hpp"
#include "bis/stats.hpp"
#include "testutil.hpp"

using namespace bis;

TEST_CASE("corpus_stats on the worked rollouts") {
  auto corpus = testutil::case_study_corpus();
  auto s = corpus_stats(corpus);
  CHECK(s.n_rollouts == 3);
  CHECK(s.n_steps == 27);
  CHECK(s.avg_steps_per_rollout() == 9.0);
  CHECK(s.error_steps == 13);
  CHECK(s.error_step_ratio() == doctest::Approx(13.0 / 27.0).epsilon(1e-15));
  // Hand sum of the three score columns: 3.5625 + 2.0 + 0.375.
  CHECK(s.mc_sum == 5.9375);
  CHECK(s.avg_mc_per_step() == doctest::Approx(5.9375 / 27.0).epsilon(1e-15));
  CHECK(s.avg_words_per_step() == 0.0);
}

TEST_CASE("corpus_stats trivial and error cases") {
  Corpus one;
  one.rollouts.push_back(testutil::make_rollout("a", "s", {1.0}));
  auto s = corpus_stats(one);
  CHECK(s.n_rollouts == 1);
  CHECK(s.n_steps == 1);
  CHECK(s.avg_steps_per_rollout() == 1.0);
  CHECK(s.error_step_ratio() == 0.0);
  CHECK(s.avg_mc_per_step() == 1.0);

  Corpus empty;
  CHECK_THROWS_AS(corpus_stats(empty), ValidationError);
}

TEST_CASE("shard stats merge to the concatenated stats") {
  auto corpus = testutil::make_synth_corpus(600, 4, 41);
  auto whole = corpus_stats(corpus);
  CounterRng rng(stream_key(41, "splits"));
  for (int trial = 0; trial < 200; ++trial) {
    const size_t cut = 1 + rng.bounded(corpus.size() - 1);
    Corpus a, b;
    a.rollouts.assign(corpus.rollouts.begin(), corpus.rollouts.begin() + cut);
    b.rollouts.assign(corpus.rollouts.begin() + cut, corpus.rollouts.end());
    auto merged = merge_stats(corpus_stats(a), corpus_stats(b));
    CHECK(merged.n_rollouts == whole.n_rollouts);
    CHECK(merged.n_steps == whole.n_steps);
    CHECK(merged.error_steps == whole.error_steps);
    CHECK(merged.total_words == whole.total_words);
    // Sixteenth-grained scores sum exactly in doubles.
    CHECK(merged.mc_sum == whole.mc_sum);
    CHECK(merged.avg_mc_per_step() == whole.avg_mc_per_step());
    CHECK(merged.avg_steps_per_rollout() == whole.avg_steps_per_rollout());
    CHECK(merged.avg_words_per_step() == whole.avg_words_per_step());
    CHECK(merged.error_step_ratio() == whole.error_step_ratio());
  }
}

TEST_CASE("histogram bin and coverage rules") {
  auto corpus = testutil::make_synth_corpus(300, 3, 42);
  auto scores = score_corpus(corpus, {});

  SUBCASE("counts sum to the input cardinality") {
    for (auto q : {HistQuantity::bis, HistQuantity::reliability,
                   HistQuantity::mixture}) {
      auto h = histogram(scores, nullptr, q, 17);
      uint64_t total = 0;
      for (auto c : h.counts_all) total += c;
      CHECK(total == scores.size());
    }
  }
  SUBCASE("top edge lands in the last bin") {
    std::vector<RolloutScore> ones(5);
    for (auto& s : ones) s.reliability = 1.0;
    auto h = histogram(ones, nullptr, HistQuantity::reliability, 10);
    CHECK(h.counts_all.back() == 5);
    for (size_t i = 0; i + 1 < h.counts_all.size(); ++i)
      CHECK(h.counts_all[i] == 0);
  }
  SUBCASE("interior edges are right-open") {
    std::vector<RolloutScore> mid(1);
    mid[0].reliability = 0.5;
    auto h = histogram(mid, nullptr, HistQuantity::reliability, 2);
    CHECK(h.counts_all[0] == 0);
    CHECK(h.counts_all[1] == 1);
  }
  SUBCASE("no manifest means no coverage") {
    auto h = histogram(scores, nullptr, HistQuantity::bis, 10);
    for (auto c : h.counts_selected) CHECK(c == 0);
    for (const auto& c : h.coverage) CHECK(!c.has_value());
  }
  SUBCASE("full-keep manifest covers every nonempty bin") {
    SelectionConfig cfg;
    cfg.keep_ratio = 1.0;
    auto manifest = select(corpus, cfg);
    auto h = histogram(scores, &manifest, HistQuantity::bis, 10);
    uint64_t selected = 0;
    for (size_t i = 0; i < h.counts_all.size(); ++i) {
      selected += h.counts_selected[i];
      if (h.counts_all[i] > 0) {
        REQUIRE(h.coverage[i].has_value());
        CHECK(*h.coverage[i] == 1.0);
      } else {
        CHECK(!h.coverage[i].has_value());
      }
    }
    CHECK(selected == manifest.kept_total());
  }
  SUBCASE("partial manifest coverage stays in [0,1]") {
    SelectionConfig cfg;
    cfg.keep_ratio = 0.25;
    auto manifest = select(corpus, cfg);
    auto h = histogram(scores, &manifest, HistQuantity::mixture, 8);
    uint64_t selected = 0;
    for (size_t i = 0; i < h.counts_all.size(); ++i) {
      selected += h.counts_selected[i];
      CHECK(h.counts_selected[i] <= h.counts_all[i]);
      if (h.coverage[i]) {
        CHECK(*h.coverage[i] >= 0.0);
        CHECK(*h.coverage[i] <= 1.0);
      }
    }
    CHECK(selected == manifest.kept_total());
  }
  SUBCASE("bins must be positive") {
    CHECK_THROWS_AS(histogram(scores, nullptr, HistQuantity::bis, 0),
                    ValidationError);
  }
}

TEST_CASE("best_of_n picks the highest mean") {
  CandidateSet c;
  c.problem = "p";
  c.candidates = {{0.9, 0.1}, {0.6, 0.6}};
  CHECK(best_of_n(c) == 1);

  SUBCASE("single candidate") {
    c.candidates = {{0.2}};
    CHECK(best_of_n(c) == 0);
  }
  SUBCASE("ties go to the lowest index") {
    c.candidates = {{0.5, 0.5}, {0.4, 0.6}, {1.0, 0.0}};
    CHECK(best_of_n(c) == 0);
  }
  SUBCASE("appending a strictly worse candidate changes nothing") {
    c.candidates = {{0.9, 0.1}, {0.6, 0.6}};
    const size_t before = best_of_n(c);
    c.candidates.push_back({0.1, 0.1});
    CHECK(best_of_n(c) == before);
  }
}

TEST_CASE("best_of_n matches brute force on random instances") {
  CounterRng rng(stream_key(43, "bon"));
  for (int trial = 0; trial < 1000; ++trial) {
    CandidateSet c;
    c.problem = "p";
    const size_t n = 1 + rng.bounded(16);
    for (size_t i = 0; i < n; ++i) {
      std::vector<double> steps(1 + rng.bounded(8));
      for (auto& v : steps) v = rng.next_double();
      c.candidates.push_back(std::move(steps));
    }
    size_t best = 0;
    double best_mean = -1.0;
    for (size_t i = 0; i < c.candidates.size(); ++i) {
      double sum = 0.0;
      for (double v : c.candidates[i]) sum += v;
      const double mean = sum / c.candidates[i].size();
      if (mean > best_mean) {
        best_mean = mean;
        best = i;
      }
    }
    CHECK(best_of_n(c) == best);
  }
}

TEST_CASE("threshold sweep on the worked examples") {
  SUBCASE("three-point example") {
    auto res = threshold_sweep_f1({{0.9, 1}, {0.8, 0}, {0.2, 0}});
    CHECK(res.tau == 0.9);
    CHECK(res.micro_f1 == 1.0);
    CHECK(!res.degenerate_gold);
  }
  SUBCASE("perfect separation returns the lowest optimal tau") {
    auto res = threshold_sweep_f1({{0.1, 0}, {0.2, 0}, {0.7, 1}, {0.9, 1}});
    CHECK(res.micro_f1 == 1.0);
    CHECK(res.tau == 0.7);
  }
  SUBCASE("degenerate gold warns and still classifies") {
    auto res = threshold_sweep_f1({{0.0, 1}, {0.0, 1}});
    CHECK(res.degenerate_gold);
    CHECK(res.tau == 0.0);
    CHECK(res.micro_f1 == 1.0);
  }
  SUBCASE("bad inputs") {
    CHECK_THROWS_AS(threshold_sweep_f1({}), ValidationError);
    CHECK_THROWS_AS(threshold_sweep_f1({{1.5, 1}}), ValidationError);
    CHECK_THROWS_AS(threshold_sweep_f1({{0.5, 2}}), ValidationError);
  }
}

TEST_CASE("threshold sweep matches brute force on random instances") {
  CounterRng rng(stream_key(44, "sweep"));
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::pair<double, int>> pred;
    const size_t n = 2 + rng.bounded(40);
    for (size_t i = 0; i < n; ++i) {
      // Coarse grid so threshold ties actually happen.
      const double score = static_cast<double>(rng.bounded(11)) / 10.0;
      pred.emplace_back(score, static_cast<int>(rng.bounded(2)));
    }
    auto res = threshold_sweep_f1(pred);

    double best_f1 = -1.0, best_tau = 0.0;
    std::vector<double> taus{0.0, 1.0};
    for (auto& [s, g] : pred) taus.push_back(s);
    std::sort(taus.begin(), taus.end());
    taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
    for (double tau : taus) {
      size_t correct = 0;
      for (auto& [s, g] : pred) correct += (s >= tau ? 1 : 0) == g;
      const double f1 = static_cast<double>(correct) / n;  // micro-F1
      if (f1 > best_f1) {
        best_f1 = f1;
        best_tau = tau;
      }
    }
    CHECK(res.micro_f1 == doctest::Approx(best_f1).epsilon(1e-15));
    CHECK(res.tau == best_tau);
  }
}

TEST_CASE("report serialization") {
  auto corpus = testutil::case_study_corpus();
  auto s = corpus_stats(corpus);
  CHECK(stats_to_csv(s).find("3,27,9,") != std::string::npos);
  CHECK(stats_to_json(s).find("\"n_steps\": 27") != std::string::npos);

  auto scores = score_corpus(corpus, {});
  auto h = histogram(scores, nullptr, HistQuantity::bis, 4);
  auto csv = histogram_to_csv(h);
  CHECK(csv.find("bin_lo,bin_hi,count_all,count_selected,coverage") == 0);
  auto json = histogram_to_json(h);
  CHECK(json.find("\"quantity\": \"bis\"") != std::string::npos);
}

TEST_CASE("candidate and prediction file loaders") {
  testutil::TempDir tmp;
  const auto cands = tmp.file("c.jsonl");
  testutil::write_file(cands,
                       "{\"problem\": \"p1\", \"candidates\": [[0.9, 0.1], "
                       "[0.6, 0.6]]}\n");
  auto sets = load_candidates(cands.string());
  REQUIRE(sets.size() == 1);
  CHECK(best_of_n(sets[0]) == 1);

  testutil::write_file(cands, "{\"problem\": \"p\", \"candidates\": [[1.5]]}\n");
  CHECK_THROWS_AS(load_candidates(cands.string()), ValidationError);

  const auto preds = tmp.file("p.csv");
  testutil::write_file(preds, "score,gold\n0.9,1\n0.8,0\n0.2,0\n");
  auto pred = load_predictions_csv(preds.string());
  REQUIRE(pred.size() == 3);
  CHECK(threshold_sweep_f1(pred).micro_f1 == 1.0);
}
