#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bis/corpus.hpp"
#include "bis/error.hpp"
#include "bis/rng.hpp"
#include "bis/scaling.hpp"
#include "bis/scoring.hpp"
#include "bis/selection.hpp"
#include "bis/special.hpp"
#include "bis/stats.hpp"
#include "bis/theorylab.hpp"

namespace {

std::string fmt(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// "csv" / "json" / "" (infer from the output path, default json).
std::string pick_format(const std::string& format, const std::string& path) {
  if (!format.empty()) return format;
  if (ends_with(path, ".csv")) return "csv";
  return "json";
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw bis::IoError("cannot open output file: " + path);
  out << text;
  if (!out) throw bis::IoError("write failure on output file: " + path);
}

bis::WarnFn warner() {
  return [](const std::string& msg) { std::cerr << "warning: " << msg << "\n"; };
}

struct GlobalOpts {
  int jobs = 1;
  uint64_t seed = 42;
  int n_continuations = 16;
  bool verbose = false;

  bis::Corpus load(const std::string& path) const {
    auto corpus = bis::load_corpus(path, n_continuations, warner());
    if (verbose)
      std::cerr << "loaded " << corpus.size() << " rollouts ("
                << corpus.total_steps() << " steps) from " << path << "\n";
    return corpus;
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Curation toolkit for MC-annotated reasoning rollouts"};
  app.require_subcommand(1);
  // Global flags (--seed, --jobs, ...) are accepted after the verb as well.
  app.fallthrough();
  GlobalOpts g;
  app.add_option("--jobs", g.jobs, "Worker threads")->capture_default_str();
  app.add_option("--seed", g.seed, "Seed for randomized strategies")
      ->capture_default_str();
  app.add_option("--n-continuations", g.n_continuations,
                 "Declared MC continuations per step")
      ->capture_default_str();
  app.add_flag("-v,--verbose", g.verbose, "Progress notes on stderr");

  // score
  auto* score = app.add_subcommand("score", "Score every rollout");
  std::string score_in, score_out, score_format;
  double score_alpha = 0.05;
  score->add_option("--in", score_in, "Input corpus JSONL")->required();
  score->add_option("--out", score_out, "Output path (- for stdout)");
  score->add_option("--alpha", score_alpha, "Mixture smoothing constant")
      ->capture_default_str();
  score->add_option("--format", score_format, "csv or jsonl");
  score->callback([&] {
    bis::ScoringConfig cfg;
    cfg.alpha = score_alpha;
    cfg.validate();
    auto corpus = g.load(score_in);
    auto scores = bis::score_corpus(corpus, cfg, g.jobs);
    std::string format = score_format;
    if (format.empty()) format = ends_with(score_out, ".csv") ? "csv" : "jsonl";
    emit(format == "csv" ? bis::scores_to_csv(scores)
                         : bis::scores_to_jsonl(scores),
         score_out);
  });

  // select
  auto* select = app.add_subcommand("select", "Build a budgeted subset");
  std::string sel_in, sel_out, sel_strategy = "bis", sel_materialize;
  double sel_rho = 0.25, sel_alpha = 0.05;
  select->add_option("--in", sel_in, "Input corpus JSONL")->required();
  select->add_option("--out", sel_out, "Manifest output path")->required();
  select->add_option("--strategy", sel_strategy,
                     "bis | random | low_mc | mixed | reliable")
      ->capture_default_str();
  select->add_option("--rho", sel_rho, "Keep ratio in (0,1]")
      ->capture_default_str();
  select->add_option("--alpha", sel_alpha, "Mixture smoothing constant")
      ->capture_default_str();
  select->add_option("--materialize", sel_materialize,
                     "Also write the retained rollouts to this JSONL");
  select->callback([&] {
    bis::SelectionConfig cfg;
    cfg.strategy = bis::strategy_from_name(sel_strategy);
    cfg.keep_ratio = sel_rho;
    cfg.seed = g.seed;
    cfg.alpha = sel_alpha;
    cfg.validate();
    auto corpus = g.load(sel_in);
    auto manifest = bis::select(corpus, cfg, g.jobs);
    bis::write_manifest(manifest, sel_out);
    for (const auto& [name, sel] : manifest.sources) {
      if (sel.total > 0 && sel.kept.empty())
        std::cerr << "warning: source '" << name << "' kept no rollouts\n";
    }
    if (!sel_materialize.empty()) {
      const uint64_t n = bis::materialize(sel_in, manifest, sel_materialize);
      std::cerr << "materialized " << n << " rollouts\n";
    }
  });

  // stats
  auto* stats = app.add_subcommand("stats", "Corpus statistics");
  std::string stats_in, stats_out, stats_format;
  stats->add_option("--in", stats_in, "Input corpus JSONL")->required();
  stats->add_option("--out", stats_out, "Output path (- for stdout)");
  stats->add_option("--format", stats_format, "csv or json");
  stats->callback([&] {
    auto corpus = g.load(stats_in);
    auto s = bis::corpus_stats(corpus);
    const std::string format = pick_format(stats_format, stats_out);
    emit(format == "csv" ? bis::stats_to_csv(s) : bis::stats_to_json(s),
         stats_out);
  });

  // hist
  auto* hist = app.add_subcommand("hist", "Component histogram with coverage");
  std::string hist_in, hist_out, hist_quantity = "bis", hist_manifest,
              hist_format;
  int hist_bins = 50;
  double hist_alpha = 0.05;
  hist->add_option("--in", hist_in, "Input corpus JSONL")->required();
  hist->add_option("--quantity", hist_quantity, "bis | reliability | mixture")
      ->capture_default_str();
  hist->add_option("--bins", hist_bins, "Bin count")->capture_default_str();
  hist->add_option("--manifest", hist_manifest,
                   "Manifest for the selected overlay");
  hist->add_option("--alpha", hist_alpha, "Mixture smoothing constant")
      ->capture_default_str();
  hist->add_option("--out", hist_out, "Output path (- for stdout)");
  hist->add_option("--format", hist_format, "csv or json");
  hist->callback([&] {
    const auto quantity = bis::hist_quantity_from_name(hist_quantity);
    if (hist_bins < 1) throw bis::ValidationError("bins must be >= 1");
    bis::ScoringConfig cfg;
    cfg.alpha = hist_alpha;
    cfg.validate();
    auto corpus = g.load(hist_in);
    auto scores = bis::score_corpus(corpus, cfg, g.jobs);
    bis::SubsetManifest manifest;
    const bis::SubsetManifest* mptr = nullptr;
    if (!hist_manifest.empty()) {
      manifest = bis::load_manifest(hist_manifest);
      mptr = &manifest;
    }
    auto h = bis::histogram(scores, mptr, quantity, hist_bins, hist_alpha);
    const std::string format = pick_format(hist_format, hist_out);
    emit(format == "csv" ? bis::histogram_to_csv(h) : bis::histogram_to_json(h),
         hist_out);
  });

  // rerank
  auto* rerank = app.add_subcommand("rerank", "Best-of-N candidate choice");
  std::string rr_in, rr_out, rr_format;
  rerank->add_option("--candidates", rr_in, "Candidate JSONL")->required();
  rerank->add_option("--out", rr_out, "Output path (- for stdout)");
  rerank->add_option("--format", rr_format, "csv or json");
  rerank->callback([&] {
    auto sets = bis::load_candidates(rr_in);
    const std::string format = pick_format(rr_format, rr_out);
    std::ostringstream buf;
    if (format == "csv") {
      buf << "problem,chosen,mean_score\n";
      for (const auto& c : sets) {
        const size_t idx = bis::best_of_n(c);
        double sum = 0.0;
        for (double v : c.candidates[idx]) sum += v;
        buf << c.problem << ',' << idx << ','
            << fmt(sum / c.candidates[idx].size()) << '\n';
      }
    } else {
      auto arr = nlohmann::ordered_json::array();
      for (const auto& c : sets) {
        const size_t idx = bis::best_of_n(c);
        double sum = 0.0;
        for (double v : c.candidates[idx]) sum += v;
        nlohmann::ordered_json obj;
        obj["problem"] = c.problem;
        obj["chosen"] = idx;
        obj["mean_score"] = sum / c.candidates[idx].size();
        arr.push_back(std::move(obj));
      }
      buf << arr.dump(2) << "\n";
    }
    emit(buf.str(), rr_out);
  });

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Threshold sweep for micro-F1");
  std::string sw_in, sw_out;
  sweep->add_option("--pred", sw_in, "CSV of score,gold rows")->required();
  sweep->add_option("--out", sw_out, "Output path (- for stdout)");
  sweep->callback([&] {
    auto pred = bis::load_predictions_csv(sw_in);
    auto res = bis::threshold_sweep_f1(pred);
    if (res.degenerate_gold)
      std::cerr << "warning: gold labels contain a single class; sweep "
                   "reduces to a trivial classifier\n";
    nlohmann::ordered_json obj;
    obj["tau"] = res.tau;
    obj["micro_f1"] = res.micro_f1;
    obj["degenerate_gold"] = res.degenerate_gold;
    emit(obj.dump(2) + "\n", sw_out);
  });

  // sim
  auto* sim = app.add_subcommand("sim", "Theory-verification lab");
  sim->require_subcommand(1);

  auto* eta = sim->add_subcommand("eta-eff",
                                  "Pseudo-positive probability per MC count");
  double eta_a = 1.0, eta_b = 1.0, eta_tau = 0.5;
  int eta_n = 16;
  std::string eta_out, eta_format;
  eta->add_option("--a", eta_a, "Beta prior a")->capture_default_str();
  eta->add_option("--b", eta_b, "Beta prior b")->capture_default_str();
  eta->add_option("--n", eta_n, "MC continuations")->capture_default_str();
  eta->add_option("--tau", eta_tau, "Reliability threshold")
      ->capture_default_str();
  eta->add_option("--out", eta_out, "Output path (- for stdout)");
  eta->add_option("--format", eta_format, "csv or json");
  eta->callback([&] {
    bis::McAnnotatorModel annot{eta_n, eta_a, eta_b, eta_tau};
    const std::string format = pick_format(eta_format, eta_out);
    std::ostringstream buf;
    if (format == "csv") {
      buf << "k,eta_eff\n";
      for (int k = 0; k <= eta_n; ++k)
        buf << k << ',' << fmt(bis::eta_eff(k, annot)) << '\n';
    } else {
      nlohmann::ordered_json obj;
      obj["a"] = eta_a;
      obj["b"] = eta_b;
      obj["n"] = eta_n;
      obj["tau"] = eta_tau;
      auto vals = nlohmann::ordered_json::array();
      for (int k = 0; k <= eta_n; ++k) vals.push_back(bis::eta_eff(k, annot));
      obj["eta_eff"] = std::move(vals);
      buf << obj.dump(2) << "\n";
    }
    emit(buf.str(), eta_out);
  });

  auto* noise = sim->add_subcommand(
      "noise", "Noisy gradient second moment, analytic vs Monte Carlo");
  double nq = 0.5, neta = 0.1, nnorm = 1.0;
  uint64_t ntrials = 1000000;
  std::string noise_out;
  noise->add_option("--q", nq, "Teacher probability")->capture_default_str();
  noise->add_option("--eta", neta, "Label flip rate")->capture_default_str();
  noise->add_option("--norm-sq", nnorm, "Representation norm squared")
      ->capture_default_str();
  noise->add_option("--trials", ntrials, "Monte Carlo draws")
      ->capture_default_str();
  noise->add_option("--out", noise_out, "Output path (- for stdout)");
  noise->callback([&] {
    const double analytic = bis::noisy_grad_second_moment(nq, neta, nnorm);
    bis::CounterRng rng(bis::stream_key(g.seed, "noise-sim"));
    double sum = 0.0, sum_sq = 0.0;
    for (uint64_t i = 0; i < ntrials; ++i) {
      double y = rng.bernoulli(nq) ? 1.0 : 0.0;
      if (rng.bernoulli(neta)) y = 1.0 - y;
      const double v = (nq - y) * (nq - y) * nnorm;
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / ntrials;
    const double var = sum_sq / ntrials - mean * mean;
    const double se = std::sqrt(std::max(var, 0.0) / ntrials);
    nlohmann::ordered_json obj;
    obj["q"] = nq;
    obj["eta"] = neta;
    obj["norm_sq"] = nnorm;
    obj["analytic"] = analytic;
    obj["monte_carlo"] = mean;
    obj["std_error"] = se;
    obj["within_3se"] = std::abs(mean - analytic) <= 3.0 * se;
    emit(obj.dump(2) + "\n", noise_out);
  });

  auto* lemma = sim->add_subcommand(
      "lemma", "Label mixture identity and sandwich bounds on random draws");
  int ln = 4;
  uint64_t ltrials = 1000;
  std::string lemma_out;
  lemma->add_option("--n", ln, "Steps per rollout")->capture_default_str();
  lemma->add_option("--trials", ltrials, "Random vectors")
      ->capture_default_str();
  lemma->add_option("--out", lemma_out, "Output path (- for stdout)");
  lemma->callback([&] {
    if (ln < 1) throw bis::ValidationError("n must be positive");
    bis::CounterRng rng(bis::stream_key(g.seed, "lemma-sim"));
    double max_err = 0.0;
    bool all_hold = true;
    const bool enumerate = ln <= 20;
    for (uint64_t t = 0; t < ltrials; ++t) {
      std::vector<double> q(ln);
      for (auto& v : q) v = rng.next_double();
      const double expected = bis::expected_label_mixture(q);
      if (enumerate) {
        // Full 2^n outcome enumeration of E[p(1-p)].
        double acc = 0.0;
        for (uint64_t mask = 0; mask < (1ull << ln); ++mask) {
          double prob = 1.0;
          int ones = 0;
          for (int j = 0; j < ln; ++j) {
            const bool bit = (mask >> j) & 1;
            prob *= bit ? q[j] : 1.0 - q[j];
            ones += bit ? 1 : 0;
          }
          const double p = static_cast<double>(ones) / ln;
          acc += prob * p * (1.0 - p);
        }
        max_err = std::max(max_err, std::abs(acc - expected));
      }
      const auto sw = bis::sandwich_check(q);
      all_hold = all_hold && sw.holds && sw.jensen_holds;
    }
    nlohmann::ordered_json obj;
    obj["n"] = ln;
    obj["trials"] = ltrials;
    obj["enumerated"] = enumerate;
    obj["max_enumeration_error"] = max_err;
    obj["all_bounds_hold"] = all_hold;
    emit(obj.dump(2) + "\n", lemma_out);
  });

  auto* scaling = sim->add_subcommand("scaling", "Subset-scaling experiment");
  std::string sc_config, sc_out, sc_csv;
  scaling->add_option("--config", sc_config, "Experiment config JSON")
      ->required();
  scaling->add_option("--out", sc_out, "Report JSON path (- for stdout)");
  scaling->add_option("--curves", sc_csv, "Raw per-seed curve CSV path");
  scaling->callback([&] {
    std::ifstream in(sc_config, std::ios::binary);
    if (!in) throw bis::IoError("cannot open config file: " + sc_config);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    auto cfg = bis::scaling_config_from_json(text);
    auto report = bis::run_scaling_experiment(cfg, g.jobs);
    emit(bis::scaling_report_to_json(report), sc_out);
    if (!sc_csv.empty()) emit(bis::scaling_report_to_csv(report), sc_csv);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const bis::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const bis::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
