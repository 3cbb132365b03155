#include "bis/scaling.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bis/error.hpp"
#include "bis/rng.hpp"

namespace bis {

const char* regime_name(Regime r) {
  return r == Regime::matched_update ? "matched_update" : "single_pass";
}

Regime regime_from_name(const std::string& name) {
  if (name == "matched_update") return Regime::matched_update;
  if (name == "single_pass") return Regime::single_pass;
  throw ValidationError("unknown regime: " + name);
}

void ScalingExperimentConfig::validate() const {
  if (dim < 1) throw ValidationError("dim must be positive");
  if (pool_size < 1) throw ValidationError("pool_size must be positive");
  if (keep_fractions.empty()) throw ValidationError("no keep fractions");
  for (double g : keep_fractions) {
    if (!(g > 0.0) || g > 1.0)
      throw ValidationError("keep fractions must lie in (0, 1]");
    if (g * static_cast<double>(pool_size) < dim) {
      std::ostringstream msg;
      msg << "config infeasible: keep fraction " << g << " of pool "
          << pool_size << " is below dim " << dim;
      throw ValidationError(msg.str());
    }
  }
  if (budgets.empty()) throw ValidationError("no update budgets");
  for (uint64_t t : budgets)
    if (t < 1) throw ValidationError("budgets must be positive");
  if (!(step_size_base > 0.0))
    throw ValidationError("step size base must be positive");
  if (!(noise_rate >= 0.0) || !(noise_rate < 0.5))
    throw ValidationError("noise rate must lie in [0, 1/2)");
  if (seeds.empty()) throw ValidationError("no seeds");
  if (eval_points < 1) throw ValidationError("eval_points must be positive");
  if (!(teacher_norm > 0.0)) throw ValidationError("teacher norm must be > 0");
  if (!(norm_bound > 0.0)) throw ValidationError("norm bound must be > 0");
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Expected logistic loss of predicting logit z when the true positive
// probability is q: q*softplus(-z) + (1-q)*softplus(z).
double expected_loss(double q, double z) {
  return q * softplus(-z) + (1.0 - q) * softplus(z);
}

double dot(const double* a, const double* b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += a[i] * b[i];
  return s;
}

// Isotropic Gaussian rescaled per coordinate, rejected until the norm fits.
void sample_feature(CounterRng& rng, double scale, double bound, double* out,
                    int d) {
  for (;;) {
    double norm_sq = 0.0;
    for (int i = 0; i < d; ++i) {
      out[i] = scale * rng.gaussian();
      norm_sq += out[i] * out[i];
    }
    if (norm_sq <= bound * bound) return;
  }
}

struct EvalSet {
  std::vector<double> features;  // eval_points x dim, row-major
  std::vector<double> q_star;
  double baseline_loss = 0.0;
};

EvalSet make_eval_set(const TeacherModel& teacher, uint64_t points,
                      uint64_t key) {
  const int d = teacher.dim();
  EvalSet ev;
  ev.features.resize(points * d);
  ev.q_star.resize(points);
  CounterRng rng(key);
  double base = 0.0;
  for (uint64_t i = 0; i < points; ++i) {
    double* phi = &ev.features[i * d];
    sample_feature(rng, teacher.feature_scale, teacher.norm_bound, phi, d);
    const double z = dot(teacher.w_star.data(), phi, d);
    ev.q_star[i] = sigmoid(z);
    base += expected_loss(ev.q_star[i], z);
  }
  ev.baseline_loss = base / static_cast<double>(points);
  return ev;
}

double excess_risk(const EvalSet& ev, const std::vector<double>& w, int d,
                   double baseline) {
  double loss = 0.0;
  const uint64_t points = ev.q_star.size();
  for (uint64_t i = 0; i < points; ++i) {
    const double z = dot(w.data(), &ev.features[i * d], d);
    loss += expected_loss(ev.q_star[i], z);
  }
  return loss / static_cast<double>(points) - baseline;
}

struct CellTask {
  size_t gamma_idx;
  size_t seed_idx;
};

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) return 0.0;
  double xm = 0.0, ym = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    xm += x[i];
    ym += y[i];
  }
  xm /= x.size();
  ym /= y.size();
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - xm) * (y[i] - ym);
    den += (x[i] - xm) * (x[i] - xm);
  }
  return den == 0.0 ? 0.0 : num / den;
}

}  // namespace

TeacherModel make_teacher(int dim, double teacher_norm, double feature_scale,
                          double norm_bound, double noise_rate, uint64_t seed) {
  TeacherModel t;
  t.w_star.resize(dim);
  CounterRng rng(stream_key(seed, "teacher"));
  double norm_sq = 0.0;
  do {
    norm_sq = 0.0;
    for (int i = 0; i < dim; ++i) {
      t.w_star[i] = rng.gaussian();
      norm_sq += t.w_star[i] * t.w_star[i];
    }
  } while (norm_sq == 0.0);
  const double scale = teacher_norm / std::sqrt(norm_sq);
  for (double& v : t.w_star) v *= scale;
  t.feature_scale = feature_scale > 0.0 ? feature_scale
                                        : 1.0 / std::sqrt(dim);
  t.norm_bound = norm_bound;
  t.noise_rate = noise_rate;
  return t;
}

ScalingReport run_scaling_experiment(const ScalingExperimentConfig& cfg,
                                     int jobs) {
  cfg.validate();
  const int d = cfg.dim;
  const TeacherModel teacher =
      make_teacher(d, cfg.teacher_norm, cfg.feature_scale, cfg.norm_bound,
                   cfg.noise_rate, cfg.teacher_seed);
  const EvalSet ev = make_eval_set(teacher, cfg.eval_points,
                                   stream_key(cfg.teacher_seed, "eval"));

  std::vector<uint64_t> budgets = cfg.budgets;
  std::sort(budgets.begin(), budgets.end());

  const size_t n_gamma = cfg.keep_fractions.size();
  const size_t n_seeds = cfg.seeds.size();
  const size_t n_budgets = budgets.size();
  // risks[gamma][budget][seed]
  std::vector<double> risks(n_gamma * n_budgets * n_seeds, 0.0);

  std::vector<CellTask> tasks;
  for (size_t g = 0; g < n_gamma; ++g)
    for (size_t s = 0; s < n_seeds; ++s) tasks.push_back({g, s});

  auto run_cell = [&](const CellTask& task) {
    const double gamma = cfg.keep_fractions[task.gamma_idx];
    const uint64_t seed = cfg.seeds[task.seed_idx];
    const auto n_sub = static_cast<uint64_t>(
        std::llround(gamma * static_cast<double>(cfg.pool_size)));

    // The pool stream depends only on the seed, so every keep fraction thins
    // the same teacher-labeled pool.
    CounterRng pool_rng(stream_key(seed, "pool"));
    std::vector<double> pool_features(cfg.pool_size * d);
    std::vector<double> pool_labels(cfg.pool_size);
    for (uint64_t i = 0; i < cfg.pool_size; ++i) {
      double* phi = &pool_features[i * d];
      sample_feature(pool_rng, teacher.feature_scale, teacher.norm_bound, phi,
                     d);
      const double q = sigmoid(dot(teacher.w_star.data(), phi, d));
      double y = pool_rng.bernoulli(q) ? 1.0 : 0.0;
      if (pool_rng.bernoulli(teacher.noise_rate)) y = 1.0 - y;
      pool_labels[i] = y;
    }

    const std::string cell_tag = "cell:" + std::to_string(task.gamma_idx);
    CounterRng subset_rng(stream_key(seed, "subset-" + cell_tag));
    std::vector<uint64_t> index(cfg.pool_size);
    for (uint64_t i = 0; i < cfg.pool_size; ++i) index[i] = i;
    for (uint64_t i = 0; i < n_sub; ++i) {
      const uint64_t j = i + subset_rng.bounded(cfg.pool_size - i);
      std::swap(index[i], index[j]);
    }

    std::vector<uint64_t> checkpoints(n_budgets);
    for (size_t b = 0; b < n_budgets; ++b) {
      checkpoints[b] =
          cfg.regime == Regime::matched_update
              ? budgets[b]
              : std::max<uint64_t>(
                    1, static_cast<uint64_t>(std::llround(
                           gamma * static_cast<double>(budgets[b]))));
    }
    const uint64_t t_max = checkpoints.back();

    CounterRng sgd_rng(stream_key(seed, "sgd-" + cell_tag));
    std::vector<double> w(d, 0.0);
    const double radius = 2.0 * cfg.teacher_norm;
    size_t next_ck = 0;
    for (uint64_t t = 1; t <= t_max; ++t) {
      const uint64_t pick = index[sgd_rng.bounded(n_sub)];
      const double* phi = &pool_features[pick * d];
      const double err = sigmoid(dot(w.data(), phi, d)) - pool_labels[pick];
      const double step =
          cfg.step_size_base / std::sqrt(static_cast<double>(t));
      for (int i = 0; i < d; ++i) w[i] -= step * err * phi[i];
      double norm_sq = 0.0;
      for (int i = 0; i < d; ++i) norm_sq += w[i] * w[i];
      if (norm_sq > radius * radius) {
        const double shrink = radius / std::sqrt(norm_sq);
        for (int i = 0; i < d; ++i) w[i] *= shrink;
      }
      while (next_ck < n_budgets && checkpoints[next_ck] == t) {
        risks[(task.gamma_idx * n_budgets + next_ck) * n_seeds +
              task.seed_idx] = excess_risk(ev, w, d, ev.baseline_loss);
        ++next_ck;
      }
    }
  };

  if (jobs <= 1 || tasks.size() < 2) {
    for (const auto& t : tasks) run_cell(t);
  } else {
    const size_t workers = std::min<size_t>(jobs, tasks.size());
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (size_t i = w; i < tasks.size(); i += workers) run_cell(tasks[i]);
      });
    }
    for (auto& t : pool) t.join();
  }

  ScalingReport report;
  report.regime = cfg.regime;
  report.baseline_loss = ev.baseline_loss;
  for (size_t g = 0; g < n_gamma; ++g) {
    for (size_t b = 0; b < n_budgets; ++b) {
      ScalingCell cell;
      cell.gamma = cfg.keep_fractions[g];
      cell.budget = budgets[b];
      cell.updates =
          cfg.regime == Regime::matched_update
              ? budgets[b]
              : std::max<uint64_t>(
                    1, static_cast<uint64_t>(std::llround(
                           cell.gamma * static_cast<double>(budgets[b]))));
      cell.risks.assign(&risks[(g * n_budgets + b) * n_seeds],
                        &risks[(g * n_budgets + b) * n_seeds] + n_seeds);
      double mean = 0.0;
      for (double r : cell.risks) mean += r;
      mean /= static_cast<double>(n_seeds);
      double var = 0.0;
      for (double r : cell.risks) var += (r - mean) * (r - mean);
      cell.mean_risk = mean;
      cell.stderr_risk =
          n_seeds > 1 ? std::sqrt(var / (n_seeds - 1.0) / n_seeds) : 0.0;
      report.cells.push_back(std::move(cell));
    }
  }

  // T-dependence at the largest keep fraction, sample-dependence at the
  // final budget. Slopes only; the bound's constants stay existential.
  const size_t g_max = static_cast<size_t>(
      std::max_element(cfg.keep_fractions.begin(), cfg.keep_fractions.end()) -
      cfg.keep_fractions.begin());
  std::vector<double> xs, ys;
  for (size_t b = 0; b < n_budgets; ++b) {
    const auto& cell = report.cells[g_max * n_budgets + b];
    xs.push_back(std::log(static_cast<double>(cell.updates)));
    ys.push_back(std::log(std::max(cell.mean_risk, 1e-12)));
  }
  report.slope_updates = ls_slope(xs, ys);

  xs.clear();
  ys.clear();
  for (size_t g = 0; g < n_gamma; ++g) {
    const auto& cell = report.cells[g * n_budgets + (n_budgets - 1)];
    xs.push_back(std::log(cell.gamma * static_cast<double>(cfg.pool_size)));
    ys.push_back(std::log(std::max(cell.mean_risk, 1e-12)));
  }
  report.slope_samples = ls_slope(xs, ys);
  return report;
}

ScalingExperimentConfig scaling_config_from_json(const std::string& text) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("scaling config parse error: ") +
                          e.what());
  }
  ScalingExperimentConfig cfg;
  try {
    if (obj.contains("dim")) cfg.dim = obj["dim"].get<int>();
    if (obj.contains("pool_size"))
      cfg.pool_size = obj["pool_size"].get<uint64_t>();
    if (obj.contains("keep_fractions"))
      cfg.keep_fractions = obj["keep_fractions"].get<std::vector<double>>();
    if (obj.contains("budgets"))
      cfg.budgets = obj["budgets"].get<std::vector<uint64_t>>();
    if (obj.contains("step_size_base"))
      cfg.step_size_base = obj["step_size_base"].get<double>();
    if (obj.contains("noise_rate"))
      cfg.noise_rate = obj["noise_rate"].get<double>();
    if (obj.contains("seeds"))
      cfg.seeds = obj["seeds"].get<std::vector<uint64_t>>();
    if (obj.contains("regime"))
      cfg.regime = regime_from_name(obj["regime"].get<std::string>());
    if (obj.contains("eval_points"))
      cfg.eval_points = obj["eval_points"].get<uint64_t>();
    if (obj.contains("teacher_norm"))
      cfg.teacher_norm = obj["teacher_norm"].get<double>();
    if (obj.contains("norm_bound"))
      cfg.norm_bound = obj["norm_bound"].get<double>();
    if (obj.contains("feature_scale"))
      cfg.feature_scale = obj["feature_scale"].get<double>();
    if (obj.contains("teacher_seed"))
      cfg.teacher_seed = obj["teacher_seed"].get<uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("scaling config schema error: ") +
                          e.what());
  }
  cfg.validate();
  return cfg;
}

std::string scaling_config_to_json(const ScalingExperimentConfig& cfg) {
  nlohmann::ordered_json obj;
  obj["dim"] = cfg.dim;
  obj["pool_size"] = cfg.pool_size;
  obj["keep_fractions"] = cfg.keep_fractions;
  obj["budgets"] = cfg.budgets;
  obj["step_size_base"] = cfg.step_size_base;
  obj["noise_rate"] = cfg.noise_rate;
  obj["seeds"] = cfg.seeds;
  obj["regime"] = regime_name(cfg.regime);
  obj["eval_points"] = cfg.eval_points;
  obj["teacher_norm"] = cfg.teacher_norm;
  obj["norm_bound"] = cfg.norm_bound;
  obj["feature_scale"] = cfg.feature_scale;
  obj["teacher_seed"] = cfg.teacher_seed;
  return obj.dump(2) + "\n";
}

std::string scaling_report_to_json(const ScalingReport& report) {
  nlohmann::ordered_json obj;
  obj["regime"] = regime_name(report.regime);
  obj["baseline_loss"] = report.baseline_loss;
  obj["slope_updates"] = report.slope_updates;
  obj["slope_samples"] = report.slope_samples;
  auto cells = nlohmann::ordered_json::array();
  for (const auto& c : report.cells) {
    nlohmann::ordered_json cell;
    cell["gamma"] = c.gamma;
    cell["budget"] = c.budget;
    cell["updates"] = c.updates;
    cell["mean_risk"] = c.mean_risk;
    cell["stderr_risk"] = c.stderr_risk;
    cell["risks"] = c.risks;
    cells.push_back(std::move(cell));
  }
  obj["cells"] = std::move(cells);
  return obj.dump(2) + "\n";
}

std::string scaling_report_to_csv(const ScalingReport& report) {
  std::ostringstream out;
  out << "gamma,budget,updates,seed_index,excess_risk\n";
  auto fmt = [](double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
  };
  for (const auto& c : report.cells) {
    for (size_t s = 0; s < c.risks.size(); ++s) {
      out << fmt(c.gamma) << ',' << c.budget << ',' << c.updates << ',' << s
          << ',' << fmt(c.risks[s]) << '\n';
    }
  }
  return out.str();
}

}  // namespace bis
