#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "joinpoint/basis.hpp"
#include "joinpoint/errors.hpp"

namespace joinpoint {

// Observed annual counts and populations on a time grid, with the pieces of
// the Poisson log-likelihood that never change cached up front.
struct SeriesData {
    TimeGrid grid;
    Eigen::VectorXd counts;       // nonnegative integers
    Eigen::VectorXd populations;  // person-years, strictly positive

    Eigen::VectorXd centered_times;  // t_i - tbar
    Eigen::VectorXd log_pop;
    double log_count_factorial_sum = 0.0;
    double total_counts = 0.0;
    double total_population = 0.0;

    static SeriesData make(TimeGrid grid, std::vector<double> counts,
                           std::vector<double> populations);

    int size() const { return static_cast<int>(counts.size()); }
};

// One full state of the encompassing model.
struct ModelState {
    double alpha = 0.0;          // log baseline rate
    double beta0 = 0.0;          // global log-linear slope
    Eigen::VectorXd beta;        // break-point magnitudes, size jstar
    Eigen::VectorXd tau;         // change-point locations, size jstar
    std::vector<int> delta;      // inclusion indicators, 0/1
    double gamma = 1.0;          // prior mixing scale, > 0

    int jstar() const { return static_cast<int>(beta.size()); }
    int active_count() const;
};

enum class PriorKind { Bayes1, Bayes2 };

struct FitConfig {
    int jstar = 5;
    double gap = 2.0;
    PriorKind prior = PriorKind::Bayes1;

    // Throws InvalidConfig or DegeneratePrior.
    void validate(const TimeGrid& grid) const;
};

// Single Poisson observation term y*log(mu) - mu - log(y!).
double poisson_log_term(double y, double log_mu);

// log(mu_i) = log(P_i) + alpha + beta0*(t_i - tbar) + sum_j delta_j beta_j B_tau_j(t_i).
// Only active change-points need a solvable basis.
double log_mean(const ModelState& state, const SeriesData& data, int i);

// Throws NonFinite when any |log mu_i| exceeds 700.
double log_likelihood(const ModelState& state, const SeriesData& data);

// Diagonal of W: w_i = P_i exp(alpha + beta0*(t_i - tbar)).
Eigen::VectorXd fisher_weights(const ModelState& state, const SeriesData& data);

// Delta * G * Delta + diag(G - Delta * G * Delta) for G = B^T W B. Positive
// definite for every delta pattern as long as G itself is.
Eigen::MatrixXd scale_inner(const Eigen::MatrixXd& gram, const std::vector<int>& delta);

// Prior scale matrix Sigma = n * scale_inner^{-1}. Throws SingularSystem when
// the weighted Gram matrix is numerically singular.
Eigen::MatrixXd fisher_scale_matrix(const ModelState& state, const SeriesData& data);

// log Normal(beta | 0, gamma * Sigma); factorizes into the active block and
// independent univariate pseudopriors for the inactive coordinates.
double log_prior_beta(const ModelState& state, const SeriesData& data);

// Fast path used by the sampler when B^T W B is already available.
double log_prior_beta_given_gram(const Eigen::VectorXd& beta,
                                 const std::vector<int>& delta, double gamma,
                                 const Eigen::MatrixXd& gram, int n);

// Inverse-gamma(1/2, 1/2) mixing prior.
double log_prior_gamma(double gamma);

// Equal prior mass 1/(J*+1) on each number of change-points, spread uniformly
// over the patterns with that count.
double log_prior_model_bayes1(const std::vector<int>& delta, int jstar);

// Independent Bernoulli(1/J*) coordinates; one expected change-point
// regardless of J*. Requires jstar >= 2.
double log_prior_model_bayes2(const std::vector<int>& delta, int jstar);

double log_prior_model(const std::vector<int>& delta, const FitConfig& config);

// Ordered minimum-gap region: t1 + d < tau_1, tau_j + d < tau_{j+1}, tau_J* + d < tn.
bool in_omega(std::span<const double> tau, const TimeGrid& grid, double gap);

// Sum of log-likelihood and all non-flat prior terms. Throws OutsideOmega
// when the change-point vector leaves the admissible region.
double log_posterior_unnorm(const ModelState& state, const SeriesData& data,
                            const FitConfig& config);

// Parameters of the exact full conditional of gamma.
struct InverseGammaParams {
    double shape = 0.0;
    double scale = 0.0;
};
InverseGammaParams gamma_conditional(const ModelState& state, const SeriesData& data);

}  // namespace joinpoint
