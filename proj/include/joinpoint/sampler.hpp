#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "joinpoint/model.hpp"
#include "joinpoint/rng.hpp"

namespace joinpoint {

struct SamplerConfig {
    int n_chains = 4;
    int n_iter = 50000;
    int burn_in = 10000;
    int thin = 10;
    std::uint64_t seed = 20110805;
    int adapt_window = 5000;          // adaptation runs for the first iterations of burn-in
    double target_accept_lo = 0.20;
    double target_accept_hi = 0.40;
    bool prior_only = false;          // drop the likelihood and freeze (alpha, beta0)
    bool fix_delta_zero = false;      // keep every indicator at zero (test hook)
    bool parallel_chains = true;

    void validate() const;
};

struct BlockAcceptance {
    long attempts = 0;
    long accepts = 0;
    double rate() const {
        return attempts > 0 ? static_cast<double>(accepts) / static_cast<double>(attempts) : 0.0;
    }
};

// Thinned post-burn-in states of one chain, row per stored draw.
struct ChainDraws {
    std::uint64_t chain_seed = 0;
    std::vector<int> iterations;
    std::vector<double> alpha, beta0, gamma;
    Eigen::MatrixXd beta;   // n_draws x jstar
    Eigen::MatrixXd tau;    // n_draws x jstar
    Eigen::MatrixXi delta;  // n_draws x jstar, entries 0/1

    // Post-burn-in Metropolis acceptance, per block.
    BlockAcceptance accept_alpha_beta0;
    std::vector<BlockAcceptance> accept_tau;
    std::vector<BlockAcceptance> accept_beta;

    // Proposal scales frozen at the end of the adaptation window.
    std::vector<double> tau_scale, beta_scale;
    double alpha_beta0_scale = 1.0;

    int n_draws() const { return static_cast<int>(alpha.size()); }
};

struct PosteriorDraws {
    std::vector<ChainDraws> chains;
    FitConfig fit;
    SamplerConfig config;

    int jstar() const { return fit.jstar; }
    int n_total() const;
    // Merged post-burn-in draws of a scalar parameter, chains concatenated
    // in order. name is one of alpha, beta0, gamma.
    std::vector<double> merged_scalar(const std::string& name) const;
    std::vector<std::vector<double>> per_chain_scalar(const std::string& name) const;
};

// Metropolis-within-Gibbs over the encompassing model. The indicator vector
// keeps the dimension fixed at jstar + 4, so no trans-dimensional moves are
// needed; inactive coordinates keep moving under their pseudoprior so that
// indicator flips land on plausible values.
class Sampler {
public:
    Sampler(const SeriesData& data, const FitConfig& fit, const SamplerConfig& config);

    // alpha = log(sum Y / sum P), beta0 = 0, beta = 0, tau equally spaced in
    // the admissible region, delta = 0, gamma = 1.
    ModelState initial_state() const;

    PosteriorDraws run() const;

    // Single-block updates, exposed for direct testing. Each call rebuilds
    // the caches from the given state and applies exactly one sweep of the
    // named block.
    ModelState step_gamma(const ModelState& state, Rng& rng) const;
    ModelState step_delta(const ModelState& state, Rng& rng) const;
    ModelState step_tau(const ModelState& state, Rng& rng, double step_sd) const;
    ModelState step_alpha_beta0(const ModelState& state, Rng& rng, double step_mult) const;
    ModelState step_beta(const ModelState& state, Rng& rng, double step_sd) const;

    const SeriesData& data() const { return data_; }
    const FitConfig& fit_config() const { return fit_; }

private:
    ChainDraws run_chain(int chain_index) const;

    const SeriesData& data_;
    FitConfig fit_;
    SamplerConfig cfg_;
};

}  // namespace joinpoint
