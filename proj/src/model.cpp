#include "joinpoint/model.hpp"

#include <cmath>
#include <numeric>

namespace joinpoint {

namespace {

constexpr double kLogMeanGuard = 700.0;
constexpr double kRcondThreshold = 1e-12;

double log_choose(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

int delta_sum(const std::vector<int>& delta) {
    return std::accumulate(delta.begin(), delta.end(), 0);
}

// Cholesky of the scale-matrix inner term with a singularity guard.
Eigen::LLT<Eigen::MatrixXd> checked_llt(const Eigen::MatrixXd& inner) {
    Eigen::LLT<Eigen::MatrixXd> llt(inner);
    if (llt.info() != Eigen::Success || !(llt.rcond() > kRcondThreshold)) {
        throw SingularSystem("weighted Gram matrix is numerically singular");
    }
    return llt;
}

}  // namespace

SeriesData SeriesData::make(TimeGrid grid, std::vector<double> counts,
                            std::vector<double> populations) {
    const std::size_t n = grid.times.size();
    if (counts.size() != n || populations.size() != n) {
        throw InvalidConfig("counts, populations and time grid must have equal length");
    }
    SeriesData d;
    d.counts.resize(static_cast<int>(n));
    d.populations.resize(static_cast<int>(n));
    d.centered_times.resize(static_cast<int>(n));
    d.log_pop.resize(static_cast<int>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double y = counts[i];
        if (!(y >= 0.0) || y != std::floor(y)) {
            throw InvalidConfig("counts must be nonnegative integers (index " +
                                std::to_string(i) + ")");
        }
        if (!(populations[i] > 0.0)) {
            throw InvalidConfig("populations must be strictly positive (index " +
                                std::to_string(i) + ")");
        }
        d.counts[static_cast<int>(i)] = y;
        d.populations[static_cast<int>(i)] = populations[i];
        d.centered_times[static_cast<int>(i)] = grid.times[i] - grid.mean;
        d.log_pop[static_cast<int>(i)] = std::log(populations[i]);
        d.log_count_factorial_sum += std::lgamma(y + 1.0);
        d.total_counts += y;
        d.total_population += populations[i];
    }
    d.grid = std::move(grid);
    return d;
}

int ModelState::active_count() const { return delta_sum(delta); }

void FitConfig::validate(const TimeGrid& grid) const {
    if (jstar < 1) throw InvalidConfig("jstar must be at least 1");
    if (!(gap > 0.0) || !std::isfinite(gap)) throw InvalidConfig("gap must be positive");
    if (prior == PriorKind::Bayes2 && jstar < 2) {
        throw DegeneratePrior("Bayes2 prior needs jstar >= 2");
    }
    if (!(grid.first() + (jstar + 1) * gap < grid.last())) {
        throw InvalidConfig("admissible change-point region is empty: need t1 + (jstar+1)*gap < tn");
    }
}

double poisson_log_term(double y, double log_mu) {
    return y * log_mu - std::exp(log_mu) - std::lgamma(y + 1.0);
}

double log_mean(const ModelState& state, const SeriesData& data, int i) {
    double eta = data.log_pop[i] + state.alpha + state.beta0 * data.centered_times[i];
    const double t = data.grid.times[static_cast<std::size_t>(i)];
    for (int j = 0; j < state.jstar(); ++j) {
        if (state.delta[static_cast<std::size_t>(j)] == 0) continue;
        eta += state.beta[j] * solve_breakpoint(data.grid, state.tau[j])(t);
    }
    return eta;
}

double log_likelihood(const ModelState& state, const SeriesData& data) {
    const int n = data.size();
    Eigen::VectorXd eta = data.log_pop + Eigen::VectorXd::Constant(n, state.alpha) +
                          state.beta0 * data.centered_times;
    for (int j = 0; j < state.jstar(); ++j) {
        if (state.delta[static_cast<std::size_t>(j)] == 0) continue;
        const BreakpointBasis b = solve_breakpoint(data.grid, state.tau[j]);
        for (int i = 0; i < n; ++i) eta[i] += state.beta[j] * b(data.grid.times[i]);
    }
    double ll = -data.log_count_factorial_sum;
    for (int i = 0; i < n; ++i) {
        if (!(std::abs(eta[i]) <= kLogMeanGuard)) {
            throw NonFinite("log mean overflow at observation " + std::to_string(i));
        }
        ll += data.counts[i] * eta[i] - std::exp(eta[i]);
    }
    return ll;
}

Eigen::VectorXd fisher_weights(const ModelState& state, const SeriesData& data) {
    return (data.log_pop.array() + state.alpha +
            state.beta0 * data.centered_times.array()).exp();
}

Eigen::MatrixXd scale_inner(const Eigen::MatrixXd& gram, const std::vector<int>& delta) {
    const int j = static_cast<int>(gram.rows());
    Eigen::MatrixXd inner = Eigen::MatrixXd::Zero(j, j);
    for (int r = 0; r < j; ++r) {
        inner(r, r) = gram(r, r);
        for (int c = 0; c < j; ++c) {
            if (c != r && delta[static_cast<std::size_t>(r)] &&
                delta[static_cast<std::size_t>(c)]) {
                inner(r, c) = gram(r, c);
            }
        }
    }
    return inner;
}

Eigen::MatrixXd fisher_scale_matrix(const ModelState& state, const SeriesData& data) {
    const Eigen::MatrixXd design =
        design_columns(data.grid, std::span<const double>(state.tau.data(),
                                                          static_cast<std::size_t>(state.tau.size())));
    const Eigen::VectorXd w = fisher_weights(state, data);
    const Eigen::MatrixXd gram = design.transpose() * w.asDiagonal() * design;
    const Eigen::MatrixXd inner = scale_inner(gram, state.delta);
    auto llt = checked_llt(inner);
    const int j = state.jstar();
    return static_cast<double>(data.size()) *
           llt.solve(Eigen::MatrixXd::Identity(j, j));
}

double log_prior_beta_given_gram(const Eigen::VectorXd& beta,
                                 const std::vector<int>& delta, double gamma,
                                 const Eigen::MatrixXd& gram, int n) {
    if (!(gamma > 0.0)) throw NonPositive("gamma must be positive");
    const int j = static_cast<int>(beta.size());
    const Eigen::MatrixXd inner = scale_inner(gram, delta);
    auto llt = checked_llt(inner);
    // Sigma = n * inner^{-1}, so Sigma^{-1} = inner / n and
    // log det Sigma = j log n - log det inner.
    double log_det_inner = 0.0;
    for (int r = 0; r < j; ++r) log_det_inner += 2.0 * std::log(llt.matrixL()(r, r));
    const double quad = beta.dot(inner * beta) / static_cast<double>(n);
    constexpr double kLog2Pi = 1.837877066409345483560659472811;
    return -0.5 * j * (kLog2Pi + std::log(gamma)) -
           0.5 * (j * std::log(static_cast<double>(n)) - log_det_inner) -
           0.5 * quad / gamma;
}

double log_prior_beta(const ModelState& state, const SeriesData& data) {
    const Eigen::MatrixXd design =
        design_columns(data.grid, std::span<const double>(state.tau.data(),
                                                          static_cast<std::size_t>(state.tau.size())));
    const Eigen::VectorXd w = fisher_weights(state, data);
    const Eigen::MatrixXd gram = design.transpose() * w.asDiagonal() * design;
    return log_prior_beta_given_gram(state.beta, state.delta, state.gamma, gram,
                                     data.size());
}

double log_prior_gamma(double gamma) {
    if (!(gamma > 0.0)) throw NonPositive("gamma must be positive");
    constexpr double shape = 0.5;
    constexpr double scale = 0.5;
    return shape * std::log(scale) - std::lgamma(shape) -
           (shape + 1.0) * std::log(gamma) - scale / gamma;
}

double log_prior_model_bayes1(const std::vector<int>& delta, int jstar) {
    return -std::log(jstar + 1.0) - log_choose(jstar, delta_sum(delta));
}

double log_prior_model_bayes2(const std::vector<int>& delta, int jstar) {
    if (jstar < 2) throw DegeneratePrior("Bayes2 prior needs jstar >= 2");
    const int k = delta_sum(delta);
    return -jstar * std::log(static_cast<double>(jstar)) +
           (jstar - k) * std::log(jstar - 1.0);
}

double log_prior_model(const std::vector<int>& delta, const FitConfig& config) {
    return config.prior == PriorKind::Bayes1
               ? log_prior_model_bayes1(delta, config.jstar)
               : log_prior_model_bayes2(delta, config.jstar);
}

bool in_omega(std::span<const double> tau, const TimeGrid& grid, double gap) {
    double lower = grid.first();
    for (double t : tau) {
        if (!(lower + gap < t)) return false;
        lower = t;
    }
    return lower + gap < grid.last();
}

double log_posterior_unnorm(const ModelState& state, const SeriesData& data,
                            const FitConfig& config) {
    if (!in_omega(std::span<const double>(state.tau.data(),
                                          static_cast<std::size_t>(state.tau.size())),
                  data.grid, config.gap)) {
        throw OutsideOmega("change-point vector outside the admissible region");
    }
    return log_likelihood(state, data) + log_prior_beta(state, data) +
           log_prior_gamma(state.gamma) + log_prior_model(state.delta, config);
}

InverseGammaParams gamma_conditional(const ModelState& state, const SeriesData& data) {
    const Eigen::MatrixXd design =
        design_columns(data.grid, std::span<const double>(state.tau.data(),
                                                          static_cast<std::size_t>(state.tau.size())));
    const Eigen::VectorXd w = fisher_weights(state, data);
    const Eigen::MatrixXd gram = design.transpose() * w.asDiagonal() * design;
    const Eigen::MatrixXd inner = scale_inner(gram, state.delta);
    checked_llt(inner);
    const double quad = state.beta.dot(inner * state.beta) / data.size();
    return {0.5 * (1.0 + state.jstar()), 0.5 * (1.0 + quad)};
}

}  // namespace joinpoint
