#pragma once

#include <cstdint>
#include <vector>

namespace bis {

// Beta-Binomial model of the MC annotator: a step's one-shot success
// probability r has prior Beta(a, b); the annotator reports k successes out
// of n_continuations; a step is reliable when r >= reliability_threshold.
struct McAnnotatorModel {
  int n_continuations = 16;
  double beta_a = 1.0;
  double beta_b = 1.0;
  double reliability_threshold = 0.5;

  void validate() const;
};

// Posterior probability that a step with k successful continuations is below
// the reliability threshold: I_tau(a+k, b+N-k). Strictly decreasing in k.
double eta_eff(int k, const McAnnotatorModel& annot);

// Probability the binarized label is positive: 1 - (1-r)^N.
double pos_label_prob(double r, int n);

// Second moment of the logistic gradient at the optimum: q(1-q)*||phi||^2.
double grad_second_moment(double q, double norm_sq);

// Same under symmetric label flips at rate eta: ((1-4*eta)q(1-q)+eta)*||phi||^2.
double noisy_grad_second_moment(double q, double flip_rate, double norm_sq);

// E[p(1-p)] of the empirical positive fraction of n independent Bernoulli(q_j)
// labels: qbar(1-qbar) - (1/n^2) sum q_j(1-q_j).
double expected_label_mixture(const std::vector<double>& q);

struct MixtureSandwich {
  double lower = 0.0;     // latent * (1 - 1/n)
  double expected = 0.0;  // expected_label_mixture
  double upper = 0.0;     // latent mixture qbar(1-qbar)
  bool holds = false;
  double mean_step_uncertainty = 0.0;  // mean of q_j(1-q_j)
  bool jensen_holds = false;           // mean_step_uncertainty <= upper
};

// Evaluates the lower/upper bounds around the expected label mixture and the
// Jensen bound on the mean per-step uncertainty. Comparisons carry a few-ulp
// slack so exact-equality cases (constant q) report as holding.
MixtureSandwich sandwich_check(const std::vector<double>& q);

// Mixture of the flip-noised average label probability:
// (1-2*eta)^2 * mixture + eta*(1-eta). Checks |result - mixture| <= 2*eta.
double flipped_mixture(double mixture, double flip_rate);

// Synthetic rollout for the signal-term computation. Step noise rates may
// come from anywhere; eta_eff(k) over the step's MC success count is one
// natural choice.
struct RolloutSimSpec {
  std::vector<double> q;            // per-step true-label probability
  std::vector<double> noise_rates;  // per-step flip rate in [0, 1/2)
  std::vector<double> norm_sq;      // per-step representation norm squared

  void validate() const;
};

// Mean over steps of (1 - 4*eta_j) * q_j(1-q_j) * ||phi_j||^2.
double signal_term(const RolloutSimSpec& spec);

// Seeded Binomial(n, r_j)/n draws, one score per entry of r.
std::vector<double> sample_mc_scores(const std::vector<double>& r, int n,
                                     uint64_t seed);

}  // namespace bis
