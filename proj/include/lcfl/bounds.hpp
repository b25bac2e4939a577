#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lcfl/data.hpp"
#include "lcfl/model.hpp"
#include "lcfl/random.hpp"

namespace lcfl::bounds {

// Linear-regression population: x ~ N(mu_x, sigma_xx) and
// y = mu_y + beta^T (x - mu_x) + N(0, noise_var) with
// beta = sigma_xx^{-1} sigma_xy, so Cov(x, y) is exactly sigma_xy.
struct PopulationSpec {
    std::vector<double> mu_x;
    std::vector<double> sigma_xx;  // d x d row-major, symmetric positive definite
    std::vector<double> sigma_xy;
    double mu_y = 0.0;
    double noise_var = 0.0;

    std::size_t dim() const { return mu_x.size(); }
    void validate() const;
};

PopulationSpec centered_population(std::vector<double> sigma_xy, double noise_var,
                                   std::vector<double> sigma_xx = {});

// Exact E (w^T [x;1] - y)^2 from population moments; no sampling.
double expected_linear_loss(const PopulationSpec& pop, const model::ParamVector& w);

// Minimizer of the expected squared loss (bias folded in).
model::ParamVector population_optimizer(const PopulationSpec& pop);

struct Sandwich {
    double lower = 0.0;
    double gap = 0.0;
    double upper = 0.0;
};

// For centered populations sharing one sigma_xx, the excess expected loss of
// using the other population's optimizer is sandwiched by
// ||delta sigma_xy||^2 / lambda_max and / lambda_min of sigma_xx.
Sandwich loss_gap_sandwich(const PopulationSpec& pop, const PopulationSpec& pop_hat);

// sqrt(log(2/delta) / (2m)) for losses rescaled to [0,1].
double hoeffding_epsilon(std::size_t m, double delta);

// A hypothesis set with explicit bounds making losses rescalable to [0,1]:
// parameters within ||w|| <= weight_bound, features within
// ||x|| <= feature_bound, regression labels within |y| <= label_bound.
struct BoundedProblem {
    model::ModelSpec spec;
    double weight_bound = 1.0;   // 0 means the singleton hypothesis {0}
    double feature_bound = 1.0;
    double label_bound = 1.0;
    double loss_scale = 1.0;     // analytic bound on the raw loss over the domain
};

// Computes loss_scale analytically for the spec's model kind; weight_bound
// is taken from the spec when not given explicitly.
BoundedProblem make_bounded_problem(const model::ModelSpec& spec, double feature_bound,
                                    double label_bound);
BoundedProblem make_bounded_problem(const model::ModelSpec& spec, double weight_bound,
                                    double feature_bound, double label_bound);

double rescaled_loss(const BoundedProblem& problem, const model::ParamVector& w,
                     const data::ClientDataset& dataset);

struct RademacherOptions {
    std::size_t num_sigma = 128;
    std::size_t ascent_starts = 16;
    std::size_t ascent_steps = 100;
    std::uint64_t seed = 0;
};

enum class FunctionClass {
    Loss,             // rescaled losses of the bounded hypothesis set
    LinearPredictor,  // x -> w^T x with ||w|| <= B, raw features, no bias
};

struct RademacherEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

// Monte-Carlo estimate over Rademacher sign draws, each inner sup
// approximated by multi-start projected gradient ascent. The inner
// approximation can only fall short of the true sup, so this is a lower
// estimate of the empirical complexity.
RademacherEstimate rademacher_estimate(const BoundedProblem& problem,
                                       const data::ClientDataset& dataset,
                                       const RademacherOptions& options,
                                       FunctionClass family = FunctionClass::Loss);

// 2 eps(m_i) + 2 eps(m_j) + rad_i + rad_j: the concentration radius around
// the expected pairwise metric.
double c_delta(std::size_t m_i, std::size_t m_j, double rad_i, double rad_j, double delta);

// Draws m samples, resampling any draw outside the bounded domain.
data::ClientDataset sample_bounded(const PopulationSpec& pop, std::size_t m,
                                   const BoundedProblem& problem, Rng& rng,
                                   std::size_t* rejections = nullptr);

// Expected-form pairwise metric between two populations at their own
// optimizers, with losses rescaled by the problem's loss_scale.
double expected_metric(const PopulationSpec& pop_i, const PopulationSpec& pop_j,
                       const BoundedProblem& problem);

struct TheoremConfig {
    PopulationSpec pop_i, pop_j;
    BoundedProblem problem;
    std::size_t m_i = 200, m_j = 200;
    double delta = 0.1;
    std::size_t trials = 1000;
    RademacherOptions rad_options{64, 16, 100, 0};
    std::size_t rad_sample_sets = 3;  // averaged empirical estimates
    std::uint64_t seed = 0;
};

struct TheoremReport {
    double d_hat = 0.0;
    double rad_i = 0.0, rad_j = 0.0;
    double c_delta_value = 0.0;
    std::vector<double> abs_errors;  // per-trial |d - d_hat|
    std::size_t successes = 0;
    double frequency = 0.0;
    double required_probability = 0.0;  // (1 - delta)^4
    double binomial_p_value = 1.0;      // one-sided, H0: p <= required
    double frequency_lower_bound = 0.0; // one-sided 99% Clopper-Pearson
    bool passes = false;                // p_value < 0.01
    double rejection_rate = 0.0;        // domain resampling rate
    std::size_t minimizer_bound_violations = 0;
};

// Samples dataset pairs, computes empirical minimizers in closed form, and
// checks how often |d - d_hat| stays within c_delta. The pass criterion is a
// one-sided binomial test at 99% confidence against (1-delta)^4.
TheoremReport verify_theorem1(const TheoremConfig& cfg);

struct DiscrepancyOptions {
    std::size_t starts = 16;
    std::size_t steps = 200;
    std::uint64_t seed = 0;
};

// Multi-start estimate of sup_{||w||<=B} |L_i(w) - L_j(w)| (rescaled), the
// label discrepancy of the two populations under the bounded linear class.
double label_discrepancy_estimate(const PopulationSpec& pop_i, const PopulationSpec& pop_j,
                                  const BoundedProblem& problem,
                                  const DiscrepancyOptions& options);

// Standalone utility on discrete histograms (inputs are normalized); returns
// +inf where the reference gives zero mass to supported outcomes.
double kl_divergence(std::span<const double> p, std::span<const double> q);

// P[Binomial(n, p) >= k], computed in log space.
double binomial_upper_tail(std::size_t n, std::size_t k, double p);

}  // namespace lcfl::bounds
