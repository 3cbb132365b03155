#include "bis/theorylab.hpp"

#include <cmath>
#include <sstream>

#include "bis/error.hpp"
#include "bis/rng.hpp"
#include "bis/special.hpp"

namespace bis {

void McAnnotatorModel::validate() const {
  if (n_continuations < 1)
    throw ValidationError("n_continuations must be positive");
  if (!(beta_a > 0.0) || !(beta_b > 0.0))
    throw ValidationError("beta prior parameters must be positive");
  if (!(reliability_threshold > 0.0) || !(reliability_threshold < 1.0))
    throw ValidationError("reliability threshold must lie in (0, 1)");
}

double eta_eff(int k, const McAnnotatorModel& annot) {
  annot.validate();
  if (k < 0 || k > annot.n_continuations) {
    std::ostringstream msg;
    msg << "success count " << k << " outside [0, " << annot.n_continuations
        << "]";
    throw ValidationError(msg.str());
  }
  return reg_inc_beta(annot.reliability_threshold, annot.beta_a + k,
                      annot.beta_b + annot.n_continuations - k);
}

double pos_label_prob(double r, int n) {
  if (!(r >= 0.0) || !(r <= 1.0))
    throw ValidationError("success probability must lie in [0, 1]");
  if (n < 1) throw ValidationError("n must be positive");
  if (r == 1.0) return 1.0;
  // 1 - (1-r)^n without cancellation for small r.
  return -std::expm1(static_cast<double>(n) * std::log1p(-r));
}

double grad_second_moment(double q, double norm_sq) {
  if (!(q >= 0.0) || !(q <= 1.0))
    throw ValidationError("q must lie in [0, 1]");
  if (!(norm_sq >= 0.0)) throw ValidationError("norm_sq must be >= 0");
  return q * (1.0 - q) * norm_sq;
}

double noisy_grad_second_moment(double q, double flip_rate, double norm_sq) {
  if (!(q >= 0.0) || !(q <= 1.0))
    throw ValidationError("q must lie in [0, 1]");
  if (!(flip_rate >= 0.0) || !(flip_rate < 0.5))
    throw ValidationError("flip rate must lie in [0, 1/2)");
  if (!(norm_sq >= 0.0)) throw ValidationError("norm_sq must be >= 0");
  return ((1.0 - 4.0 * flip_rate) * q * (1.0 - q) + flip_rate) * norm_sq;
}

namespace {

void check_probs(const std::vector<double>& q) {
  if (q.empty()) throw ValidationError("empty probability list");
  for (double v : q)
    if (!(v >= 0.0) || !(v <= 1.0))
      throw ValidationError("probability outside [0, 1]");
}

}  // namespace

double expected_label_mixture(const std::vector<double>& q) {
  check_probs(q);
  const double n = static_cast<double>(q.size());
  double sum = 0.0, sum_unc = 0.0;
  for (double v : q) {
    sum += v;
    sum_unc += v * (1.0 - v);
  }
  const double qbar = sum / n;
  return qbar * (1.0 - qbar) - sum_unc / (n * n);
}

MixtureSandwich sandwich_check(const std::vector<double>& q) {
  check_probs(q);
  const double n = static_cast<double>(q.size());
  double sum = 0.0, sum_unc = 0.0;
  for (double v : q) {
    sum += v;
    sum_unc += v * (1.0 - v);
  }
  const double qbar = sum / n;

  MixtureSandwich out;
  out.upper = qbar * (1.0 - qbar);
  out.lower = out.upper * (1.0 - 1.0 / n);
  out.expected = out.upper - sum_unc / (n * n);
  out.mean_step_uncertainty = sum_unc / n;
  // A few ulps of slack so exact-equality cases (constant q) report true.
  const double slack = 8e-16 * (1.0 + std::abs(out.upper));
  out.holds =
      out.lower <= out.expected + slack && out.expected <= out.upper + slack;
  out.jensen_holds = out.mean_step_uncertainty <= out.upper + slack;
  return out;
}

double flipped_mixture(double mixture, double flip_rate) {
  if (!(mixture >= 0.0) || !(mixture <= 0.25))
    throw ValidationError("mixture must lie in [0, 1/4]");
  if (!(flip_rate >= 0.0) || !(flip_rate <= 0.5))
    throw ValidationError("flip rate must lie in [0, 1/2]");
  const double one_minus = 1.0 - 2.0 * flip_rate;
  const double out = one_minus * one_minus * mixture +
                     flip_rate * (1.0 - flip_rate);
  const double slack = 8e-16;
  if (std::abs(out - mixture) > 2.0 * flip_rate + slack)
    throw std::logic_error("flipped mixture drifted beyond the 2*eta bound");
  return out;
}

void RolloutSimSpec::validate() const {
  if (q.empty()) throw ValidationError("rollout spec has no steps");
  if (noise_rates.size() != q.size() || norm_sq.size() != q.size())
    throw ValidationError("rollout spec field lengths differ");
  for (double v : q)
    if (!(v >= 0.0) || !(v <= 1.0))
      throw ValidationError("q outside [0, 1]");
  for (double v : noise_rates)
    if (!(v >= 0.0) || !(v < 0.5))
      throw ValidationError("noise rate outside [0, 1/2)");
  for (double v : norm_sq)
    if (!(v >= 0.0)) throw ValidationError("negative norm_sq");
}

double signal_term(const RolloutSimSpec& spec) {
  spec.validate();
  double sum = 0.0;
  for (size_t j = 0; j < spec.q.size(); ++j) {
    sum += (1.0 - 4.0 * spec.noise_rates[j]) * spec.q[j] *
           (1.0 - spec.q[j]) * spec.norm_sq[j];
  }
  return sum / static_cast<double>(spec.q.size());
}

std::vector<double> sample_mc_scores(const std::vector<double>& r, int n,
                                     uint64_t seed) {
  if (n < 1) throw ValidationError("n must be positive");
  check_probs(r);
  CounterRng rng(stream_key(seed, "mc-scores"));
  std::vector<double> out;
  out.reserve(r.size());
  for (double p : r)
    out.push_back(static_cast<double>(rng.binomial(n, p)) / n);
  return out;
}

}  // namespace bis
