#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bis {

// Linear-logistic teacher: q*(phi) = sigmoid(<w_star, phi>). Features are
// isotropic Gaussian draws rescaled per coordinate, rejected until their norm
// is within `norm_bound`. Labels flip symmetrically at `noise_rate`.
struct TeacherModel {
  std::vector<double> w_star;
  double feature_scale = 0.0;  // per-coordinate stddev
  double norm_bound = 2.0;
  double noise_rate = 0.0;

  int dim() const { return static_cast<int>(w_star.size()); }
};

TeacherModel make_teacher(int dim, double teacher_norm, double feature_scale,
                          double norm_bound, double noise_rate, uint64_t seed);

enum class Regime { matched_update, single_pass };

const char* regime_name(Regime r);
Regime regime_from_name(const std::string& name);

// Grid of (keep fraction, update budget, seed) cells for the subset-scaling
// experiment: projected SGD with step size eta0/sqrt(t) on a logistic
// student, trained on a seeded thinning of a fixed teacher-labeled pool.
// matched_update runs every keep fraction for the same budgets; single_pass
// scales budgets by the keep fraction.
struct ScalingExperimentConfig {
  int dim = 20;
  uint64_t pool_size = 50000;
  std::vector<double> keep_fractions = {0.25, 1.0};
  std::vector<uint64_t> budgets = {250, 500, 1000, 2000, 4000, 8000};
  double step_size_base = 0.5;  // eta0
  double noise_rate = 0.1;
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  Regime regime = Regime::matched_update;
  uint64_t eval_points = 100000;
  double teacher_norm = 4.0;
  double norm_bound = 2.0;
  double feature_scale = 0.0;  // default 1/sqrt(dim) when 0
  uint64_t teacher_seed = 2024;

  void validate() const;
};

ScalingExperimentConfig scaling_config_from_json(const std::string& text);
std::string scaling_config_to_json(const ScalingExperimentConfig& cfg);

struct ScalingCell {
  double gamma = 1.0;
  uint64_t budget = 0;   // configured budget
  uint64_t updates = 0;  // actual SGD updates after regime scaling
  std::vector<double> risks;  // per-seed excess risk
  double mean_risk = 0.0;
  double stderr_risk = 0.0;
};

// Excess population risk is estimated against the teacher analytically: the
// held-out sample contributes expected logistic loss from q* directly, so no
// label-sampling variance enters the estimate and it is pointwise >= 0.
struct ScalingReport {
  Regime regime = Regime::matched_update;
  std::vector<ScalingCell> cells;  // ordered by (keep fraction, budget)
  double slope_updates = 0.0;  // log-log slope of risk vs updates, largest gamma
  double slope_samples = 0.0;  // log-log slope of risk vs gamma*pool, final budget
  double baseline_loss = 0.0;  // estimated L(w*)
};

ScalingReport run_scaling_experiment(const ScalingExperimentConfig& cfg,
                                     int jobs = 1);

std::string scaling_report_to_json(const ScalingReport& report);
std::string scaling_report_to_csv(const ScalingReport& report);

}  // namespace bis
