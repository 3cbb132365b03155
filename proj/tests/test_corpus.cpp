#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bis/corpus.hpp"
#include "bis/error.hpp"
#include "testutil.hpp"

using namespace bis;

TEST_CASE("load_corpus ingests valid rollouts") {
  testutil::TempDir tmp;
  const auto path = tmp.file("corpus.jsonl");
  testutil::write_file(path, testutil::case_study_jsonl());

  auto corpus = load_corpus(path.string(), 16);
  REQUIRE(corpus.size() == 3);
  CHECK(corpus.rollouts[0].id == "case1");
  CHECK(corpus.rollouts[0].n_steps() == 10);
  CHECK(corpus.rollouts[1].n_steps() == 8);
  CHECK(corpus.rollouts[2].n_steps() == 9);
  CHECK(corpus.total_steps() == 27);
  CHECK(corpus.rollouts[0].mc[2] == 0.9375);
}

TEST_CASE("load_corpus keeps word counts but not text") {
  testutil::TempDir tmp;
  const auto path = tmp.file("corpus.jsonl");
  testutil::write_file(
      path,
      R"({"id": "a", "source": "s", "steps": [{"mc": 0.5, "text": "two words"}, {"mc": 0.0, "text": "  spaced   out tokens "}, {"mc": 1.0}]})"
      "\n");
  auto corpus = load_corpus(path.string(), 16);
  REQUIRE(corpus.size() == 1);
  CHECK(corpus.rollouts[0].words == std::vector<uint32_t>{2, 3, 0});
}

TEST_CASE("load_corpus rejects bad input") {
  testutil::TempDir tmp;
  const auto path = tmp.file("corpus.jsonl");

  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_corpus(tmp.file("nope.jsonl").string(), 16), IoError);
  }
  SUBCASE("malformed json carries the line number") {
    testutil::write_file(path,
                         "{\"id\": \"a\", \"source\": \"s\", \"steps\": "
                         "[{\"mc\": 0.5}]}\nnot json\n");
    try {
      load_corpus(path.string(), 16);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("score out of range") {
    testutil::write_file(
        path, R"({"id": "a", "source": "s", "steps": [{"mc": 1.2}]})" "\n");
    CHECK_THROWS_AS(load_corpus(path.string(), 16), ValidationError);
  }
  SUBCASE("negative score") {
    testutil::write_file(
        path, R"({"id": "a", "source": "s", "steps": [{"mc": -0.1}]})" "\n");
    CHECK_THROWS_AS(load_corpus(path.string(), 16), ValidationError);
  }
  SUBCASE("duplicate id") {
    testutil::write_file(
        path,
        R"({"id": "a", "source": "s", "steps": [{"mc": 0.5}]})" "\n"
        R"({"id": "a", "source": "s", "steps": [{"mc": 0.5}]})" "\n");
    CHECK_THROWS_AS(load_corpus(path.string(), 16), ValidationError);
  }
  SUBCASE("empty rollout") {
    testutil::write_file(path,
                         R"({"id": "a", "source": "s", "steps": []})" "\n");
    CHECK_THROWS_AS(load_corpus(path.string(), 16), ValidationError);
  }
  SUBCASE("missing mc is a hard error") {
    testutil::write_file(
        path, R"({"id": "a", "source": "s", "steps": [{"text": "hi"}]})" "\n");
    CHECK_THROWS_AS(load_corpus(path.string(), 16), ValidationError);
  }
}

TEST_CASE("load_corpus warns on off-grid scores") {
  testutil::TempDir tmp;
  const auto path = tmp.file("corpus.jsonl");
  testutil::write_file(
      path, R"({"id": "a", "source": "s", "steps": [{"mc": 0.3}]})" "\n");
  std::vector<std::string> warnings;
  auto corpus = load_corpus(path.string(), 16,
                            [&](const std::string& w) { warnings.push_back(w); });
  REQUIRE(corpus.size() == 1);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("multiple of 1/16") != std::string::npos);

  // On-grid corpora stay silent.
  warnings.clear();
  testutil::write_file(path, testutil::case_study_jsonl());
  load_corpus(path.string(), 16,
              [&](const std::string& w) { warnings.push_back(w); });
  CHECK(warnings.empty());
}

TEST_CASE("binarize strict threshold") {
  auto r = testutil::make_rollout("x", "s", {0.875, 0.0, 0.0625});

  SUBCASE("tau = 0") {
    CHECK(binarize(r, {}) == std::vector<int>{1, 0, 1});
  }
  SUBCASE("tau = 1/16 drops single-success steps") {
    LabelingConfig cfg;
    cfg.tau = 1.0 / 16.0;
    CHECK(binarize(r, cfg) == std::vector<int>{1, 0, 0});
  }
  SUBCASE("all zero scores stay zero at any threshold") {
    auto z = testutil::make_rollout("z", "s", {0.0, 0.0, 0.0, 0.0});
    for (double tau : {0.0, 0.1, 0.5, 0.99}) {
      LabelingConfig cfg;
      cfg.tau = tau;
      CHECK(binarize(z, cfg) == std::vector<int>{0, 0, 0, 0});
    }
  }
  SUBCASE("soft mode is rejected") {
    LabelingConfig cfg;
    cfg.mode = LabelMode::soft;
    CHECK_THROWS_AS(binarize(r, cfg), ValidationError);
  }
}

TEST_CASE("binarize tau = 0 matches exact-zero semantics") {
  auto corpus = testutil::make_synth_corpus(200, 3, 11);
  for (const auto& r : corpus.rollouts) {
    auto labels = binarize(r, {});
    for (size_t j = 0; j < r.mc.size(); ++j)
      CHECK((labels[j] == 0) == (r.mc[j] == 0.0));
  }
}

TEST_CASE("raising tau never flips a label to positive") {
  auto corpus = testutil::make_synth_corpus(100, 3, 12);
  for (const auto& r : corpus.rollouts) {
    std::vector<int> prev(r.mc.size(), 1);
    for (double tau : {0.0, 1.0 / 16, 3.0 / 16, 0.5, 0.9}) {
      LabelingConfig cfg;
      cfg.tau = tau;
      auto labels = binarize(r, cfg);
      for (size_t j = 0; j < labels.size(); ++j) CHECK(labels[j] <= prev[j]);
      prev = labels;
    }
  }
}

TEST_CASE("binarize survives a save/load round trip") {
  auto corpus = testutil::make_synth_corpus(150, 4, 13);
  testutil::TempDir tmp;
  const auto path = tmp.file("round.jsonl");
  write_corpus(corpus, path.string());
  auto reloaded = load_corpus(path.string(), 16);
  REQUIRE(reloaded.size() == corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    CHECK(binarize(reloaded.rollouts[i], {}) ==
          binarize(corpus.rollouts[i], {}));
  }
}
