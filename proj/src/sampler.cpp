#include "joinpoint/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace joinpoint {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Full cached view of one chain state. Proposals work on a copy of the
// affected pieces; everything is small enough that copying beats bookkeeping.
struct Workspace {
    ModelState st;
    std::vector<BreakpointBasis> bases;  // one per coordinate, active or not
    Eigen::MatrixXd design;              // n x jstar
    Eigen::VectorXd weights;             // P_i exp(alpha + beta0 (t_i - tbar))
    Eigen::MatrixXd gram;                // design^T W design
};

void rebuild_weights_gram(Workspace& ws, const SeriesData& data) {
    ws.weights = fisher_weights(ws.st, data);
    ws.gram = ws.design.transpose() * ws.weights.asDiagonal() * ws.design;
}

void rebuild_all(Workspace& ws, const SeriesData& data) {
    const int j = ws.st.jstar();
    const int n = data.size();
    ws.bases.resize(static_cast<std::size_t>(j));
    ws.design.resize(n, j);
    for (int c = 0; c < j; ++c) {
        ws.bases[static_cast<std::size_t>(c)] = solve_breakpoint(data.grid, ws.st.tau[c]);
        for (int i = 0; i < n; ++i) {
            ws.design(i, c) = ws.bases[static_cast<std::size_t>(c)](data.grid.times[i]);
        }
    }
    rebuild_weights_gram(ws, data);
}

// Poisson log-likelihood from the cached design; -inf instead of throwing so
// Metropolis proposals can simply be rejected.
double loglik_of(const Workspace& ws, const SeriesData& data, bool prior_only) {
    if (prior_only) return 0.0;
    const int n = data.size();
    Eigen::VectorXd eta = data.log_pop.array() + ws.st.alpha +
                          ws.st.beta0 * data.centered_times.array();
    for (int c = 0; c < ws.st.jstar(); ++c) {
        if (ws.st.delta[static_cast<std::size_t>(c)]) {
            eta += ws.st.beta[c] * ws.design.col(c);
        }
    }
    double ll = -data.log_count_factorial_sum;
    for (int i = 0; i < n; ++i) {
        if (!(std::abs(eta[i]) <= 700.0)) return kNegInf;
        ll += data.counts[i] * eta[i] - std::exp(eta[i]);
    }
    return ll;
}

double lp_beta_of(const Workspace& ws, const SeriesData& data) {
    try {
        return log_prior_beta_given_gram(ws.st.beta, ws.st.delta, ws.st.gamma,
                                         ws.gram, data.size());
    } catch (const SingularSystem&) {
        return kNegInf;
    }
}

// Per-coordinate proposal scales with Robbins-Monro adaptation toward the
// middle of the target acceptance band, frozen after the adaptation window.
struct Scales {
    Eigen::VectorXd tau_sd, beta_sd;
    double ab_mult = 1.0;
    double ab_alpha_base = 0.0, ab_beta0_base = 0.0;
    double target = 0.30;

    static double step_size(long iter) { return std::pow(static_cast<double>(iter) + 1.0, -0.66); }

    static void nudge(double& scale, double accept_prob, double target, long iter) {
        double ls = std::log(scale);
        ls += step_size(iter) * (accept_prob - target);
        ls = std::clamp(ls, -30.0, 30.0);
        scale = std::exp(ls);
    }
};

struct UpdateContext {
    const SeriesData& data;
    const FitConfig& fit;
    const SamplerConfig& cfg;
    Rng& rng;
    Scales& scales;
    long iter;
    bool adapting;
    BlockAcceptance* acc_ab = nullptr;
    std::vector<BlockAcceptance>* acc_tau = nullptr;
    std::vector<BlockAcceptance>* acc_beta = nullptr;
};

double acceptance_prob(double log_ratio) {
    if (std::isnan(log_ratio)) return 0.0;
    return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

void update_gamma(Workspace& ws, UpdateContext& ctx) {
    const Eigen::MatrixXd inner = scale_inner(ws.gram, ws.st.delta);
    const double quad =
        ws.st.beta.dot(inner * ws.st.beta) / static_cast<double>(ctx.data.size());
    const double shape = 0.5 * (1.0 + ws.st.jstar());
    const double scale = 0.5 * (1.0 + quad);
    ws.st.gamma = ctx.rng.inverse_gamma(shape, scale);
}

void update_delta(Workspace& ws, UpdateContext& ctx) {
    if (ctx.cfg.fix_delta_zero) return;
    for (int j = 0; j < ws.st.jstar(); ++j) {
        const int old = ws.st.delta[static_cast<std::size_t>(j)];

        ws.st.delta[static_cast<std::size_t>(j)] = 0;
        const double l0 = loglik_of(ws, ctx.data, ctx.cfg.prior_only);
        const double p0 = lp_beta_of(ws, ctx.data) + log_prior_model(ws.st.delta, ctx.fit);
        ws.st.delta[static_cast<std::size_t>(j)] = 1;
        const double l1 = loglik_of(ws, ctx.data, ctx.cfg.prior_only);
        const double p1 = lp_beta_of(ws, ctx.data) + log_prior_model(ws.st.delta, ctx.fit);

        const double diff = (l1 + p1) - (l0 + p0);
        int next;
        if (std::isnan(diff)) {
            next = old;  // both sides degenerate; keep the current value
        } else if (diff > 35.0) {
            next = 1;
        } else if (diff < -35.0) {
            next = 0;
        } else {
            const double prob_one = 1.0 / (1.0 + std::exp(-diff));
            next = ctx.rng.uniform() < prob_one ? 1 : 0;
        }
        ws.st.delta[static_cast<std::size_t>(j)] = next;
    }
}

void update_tau(Workspace& ws, UpdateContext& ctx) {
    const TimeGrid& grid = ctx.data.grid;
    const double gap = ctx.fit.gap;
    for (int j = 0; j < ws.st.jstar(); ++j) {
        const double proposal = ws.st.tau[j] + ctx.scales.tau_sd[j] * ctx.rng.normal();

        // Admissibility against the fixed neighbors.
        const double lower = (j == 0 ? grid.first() : ws.st.tau[j - 1]) + gap;
        const double upper = (j == ws.st.jstar() - 1 ? grid.last() : ws.st.tau[j + 1]) - gap;
        double accept = 0.0;
        bool took = false;
        bool ok = proposal > lower && proposal < upper;

        if (ok) {
            Workspace cand = ws;
            cand.st.tau[j] = proposal;
            try {
                cand.bases[static_cast<std::size_t>(j)] = solve_breakpoint(grid, proposal);
            } catch (const SingularSystem&) {
                ok = false;
            }
            if (ok) {
                for (int i = 0; i < ctx.data.size(); ++i) {
                    cand.design(i, j) =
                        cand.bases[static_cast<std::size_t>(j)](grid.times[i]);
                }
                cand.gram = cand.design.transpose() * cand.weights.asDiagonal() * cand.design;

                double log_ratio = lp_beta_of(cand, ctx.data) - lp_beta_of(ws, ctx.data);
                if (ws.st.delta[static_cast<std::size_t>(j)]) {
                    log_ratio += loglik_of(cand, ctx.data, ctx.cfg.prior_only) -
                                 loglik_of(ws, ctx.data, ctx.cfg.prior_only);
                }
                accept = acceptance_prob(log_ratio);
                took = ctx.rng.uniform() < accept;
                if (took) ws = std::move(cand);
            }
        }
        if (ctx.acc_tau) {
            auto& a = (*ctx.acc_tau)[static_cast<std::size_t>(j)];
            ++a.attempts;
            if (took) ++a.accepts;
        }
        if (ctx.adapting) {
            Scales::nudge(ctx.scales.tau_sd[j], accept, ctx.scales.target, ctx.iter);
        }
    }
}

void update_alpha_beta0(Workspace& ws, UpdateContext& ctx) {
    if (ctx.cfg.prior_only) return;  // improper flat prior; frozen in prior-only runs
    Workspace cand = ws;
    cand.st.alpha += ctx.scales.ab_mult * ctx.scales.ab_alpha_base * ctx.rng.normal();
    cand.st.beta0 += ctx.scales.ab_mult * ctx.scales.ab_beta0_base * ctx.rng.normal();
    rebuild_weights_gram(cand, ctx.data);

    const double log_ratio =
        (loglik_of(cand, ctx.data, false) + lp_beta_of(cand, ctx.data)) -
        (loglik_of(ws, ctx.data, false) + lp_beta_of(ws, ctx.data));
    const double accept = acceptance_prob(log_ratio);
    const bool took = ctx.rng.uniform() < accept;
    if (took) ws = std::move(cand);

    if (ctx.acc_ab) {
        ++ctx.acc_ab->attempts;
        if (took) ++ctx.acc_ab->accepts;
    }
    if (ctx.adapting) {
        Scales::nudge(ctx.scales.ab_mult, accept, ctx.scales.target, ctx.iter);
    }
}

void update_beta(Workspace& ws, UpdateContext& ctx) {
    for (int j = 0; j < ws.st.jstar(); ++j) {
        Workspace cand = ws;
        cand.st.beta[j] += ctx.scales.beta_sd[j] * ctx.rng.normal();

        double log_ratio = lp_beta_of(cand, ctx.data) - lp_beta_of(ws, ctx.data);
        if (ws.st.delta[static_cast<std::size_t>(j)]) {
            log_ratio += loglik_of(cand, ctx.data, ctx.cfg.prior_only) -
                         loglik_of(ws, ctx.data, ctx.cfg.prior_only);
        }
        const double accept = acceptance_prob(log_ratio);
        const bool took = ctx.rng.uniform() < accept;
        if (took) ws = std::move(cand);

        if (ctx.acc_beta) {
            auto& a = (*ctx.acc_beta)[static_cast<std::size_t>(j)];
            ++a.attempts;
            if (took) ++a.accepts;
        }
        if (ctx.adapting) {
            Scales::nudge(ctx.scales.beta_sd[j], accept, ctx.scales.target, ctx.iter);
        }
    }
}

Scales make_scales(const SeriesData& data, const FitConfig& fit,
                   const SamplerConfig& cfg) {
    Scales s;
    const double span = data.grid.last() - data.grid.first();
    s.tau_sd = Eigen::VectorXd::Constant(fit.jstar, span / 10.0);
    s.beta_sd = Eigen::VectorXd::Constant(fit.jstar, 0.3);
    const double count_scale = 1.0 / std::sqrt(data.total_counts + 1.0);
    double sd_t = std::sqrt(data.centered_times.squaredNorm() / data.size());
    if (!(sd_t > 0.0)) sd_t = 1.0;
    s.ab_alpha_base = count_scale;
    s.ab_beta0_base = count_scale / sd_t;
    s.ab_mult = 2.4;
    s.target = 0.5 * (cfg.target_accept_lo + cfg.target_accept_hi);
    return s;
}

}  // namespace

void SamplerConfig::validate() const {
    if (n_chains < 1) throw InvalidConfig("need at least one chain");
    if (n_iter < 2) throw InvalidConfig("n_iter too small");
    if (burn_in < 0 || burn_in >= n_iter) throw InvalidConfig("need burn_in < n_iter");
    if (thin < 1) throw InvalidConfig("thin must be >= 1");
    if (adapt_window < 0 || adapt_window > burn_in) {
        throw InvalidConfig("adapt_window must lie within the burn-in");
    }
    if (!(target_accept_lo > 0.0 && target_accept_lo < target_accept_hi &&
          target_accept_hi < 1.0)) {
        throw InvalidConfig("target acceptance band must satisfy 0 < lo < hi < 1");
    }
}

int PosteriorDraws::n_total() const {
    int n = 0;
    for (const auto& c : chains) n += c.n_draws();
    return n;
}

std::vector<double> PosteriorDraws::merged_scalar(const std::string& name) const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n_total()));
    for (const auto& c : per_chain_scalar(name)) out.insert(out.end(), c.begin(), c.end());
    return out;
}

std::vector<std::vector<double>> PosteriorDraws::per_chain_scalar(
    const std::string& name) const {
    std::vector<std::vector<double>> out;
    for (const auto& c : chains) {
        if (name == "alpha") {
            out.push_back(c.alpha);
        } else if (name == "beta0") {
            out.push_back(c.beta0);
        } else if (name == "gamma") {
            out.push_back(c.gamma);
        } else {
            throw UnknownParameter("unknown parameter: " + name);
        }
    }
    return out;
}

Sampler::Sampler(const SeriesData& data, const FitConfig& fit, const SamplerConfig& config)
    : data_(data), fit_(fit), cfg_(config) {
    fit_.validate(data_.grid);
    cfg_.validate();
}

ModelState Sampler::initial_state() const {
    ModelState st;
    const double rate = (data_.total_counts > 0.0 ? data_.total_counts : 0.5) /
                        data_.total_population;
    st.alpha = std::log(rate);
    st.beta0 = 0.0;
    st.beta = Eigen::VectorXd::Zero(fit_.jstar);
    st.tau.resize(fit_.jstar);
    const double span = data_.grid.last() - data_.grid.first();
    for (int j = 0; j < fit_.jstar; ++j) {
        st.tau[j] = data_.grid.first() + (j + 1) * span / (fit_.jstar + 1);
    }
    st.delta.assign(static_cast<std::size_t>(fit_.jstar), 0);
    st.gamma = 1.0;
    return st;
}

ChainDraws Sampler::run_chain(int chain_index) const {
    const std::uint64_t chain_seed =
        derive_seed(cfg_.seed, static_cast<std::uint64_t>(chain_index), 0);
    Rng rng(chain_seed);

    Workspace ws;
    ws.st = initial_state();
    rebuild_all(ws, data_);
    // The initial state must be evaluable; later proposals may fail softly.
    if (!cfg_.prior_only) log_likelihood(ws.st, data_);

    Scales scales = make_scales(data_, fit_, cfg_);

    ChainDraws out;
    out.chain_seed = chain_seed;
    const int n_draws = (cfg_.n_iter - cfg_.burn_in) / cfg_.thin;
    out.alpha.reserve(static_cast<std::size_t>(n_draws));
    out.beta.resize(n_draws, fit_.jstar);
    out.tau.resize(n_draws, fit_.jstar);
    out.delta.resize(n_draws, fit_.jstar);
    out.accept_tau.resize(static_cast<std::size_t>(fit_.jstar));
    out.accept_beta.resize(static_cast<std::size_t>(fit_.jstar));

    for (long it = 1; it <= cfg_.n_iter; ++it) {
        const bool adapting = it <= cfg_.adapt_window;
        const bool ledger = it > cfg_.burn_in;
        UpdateContext ctx{data_, fit_, cfg_, rng, scales, it, adapting,
                          ledger ? &out.accept_alpha_beta0 : nullptr,
                          ledger ? &out.accept_tau : nullptr,
                          ledger ? &out.accept_beta : nullptr};

        update_gamma(ws, ctx);
        update_delta(ws, ctx);
        update_tau(ws, ctx);
        update_alpha_beta0(ws, ctx);
        update_beta(ws, ctx);

        if (it > cfg_.burn_in && (it - cfg_.burn_in) % cfg_.thin == 0) {
            const int row = out.n_draws();
            out.iterations.push_back(static_cast<int>(it));
            out.alpha.push_back(ws.st.alpha);
            out.beta0.push_back(ws.st.beta0);
            out.gamma.push_back(ws.st.gamma);
            for (int j = 0; j < fit_.jstar; ++j) {
                out.beta(row, j) = ws.st.beta[j];
                out.tau(row, j) = ws.st.tau[j];
                out.delta(row, j) = ws.st.delta[static_cast<std::size_t>(j)];
            }
        }
    }

    out.tau_scale.assign(scales.tau_sd.data(), scales.tau_sd.data() + fit_.jstar);
    out.beta_scale.assign(scales.beta_sd.data(), scales.beta_sd.data() + fit_.jstar);
    out.alpha_beta0_scale = scales.ab_mult;
    return out;
}

PosteriorDraws Sampler::run() const {
    PosteriorDraws draws;
    draws.fit = fit_;
    draws.config = cfg_;
    draws.chains.resize(static_cast<std::size_t>(cfg_.n_chains));

    if (cfg_.parallel_chains && cfg_.n_chains > 1) {
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(cfg_.n_chains));
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg_.n_chains));
        for (int c = 0; c < cfg_.n_chains; ++c) {
            workers.emplace_back([this, c, &draws, &errors] {
                try {
                    draws.chains[static_cast<std::size_t>(c)] = run_chain(c);
                } catch (...) {
                    errors[static_cast<std::size_t>(c)] = std::current_exception();
                }
            });
        }
        for (auto& w : workers) w.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    } else {
        for (int c = 0; c < cfg_.n_chains; ++c) {
            draws.chains[static_cast<std::size_t>(c)] = run_chain(c);
        }
    }
    return draws;
}

ModelState Sampler::step_gamma(const ModelState& state, Rng& rng) const {
    Workspace ws;
    ws.st = state;
    rebuild_all(ws, data_);
    Scales scales = make_scales(data_, fit_, cfg_);
    UpdateContext ctx{data_, fit_, cfg_, rng, scales, 1, false};
    update_gamma(ws, ctx);
    return ws.st;
}

ModelState Sampler::step_delta(const ModelState& state, Rng& rng) const {
    Workspace ws;
    ws.st = state;
    rebuild_all(ws, data_);
    Scales scales = make_scales(data_, fit_, cfg_);
    UpdateContext ctx{data_, fit_, cfg_, rng, scales, 1, false};
    update_delta(ws, ctx);
    return ws.st;
}

ModelState Sampler::step_tau(const ModelState& state, Rng& rng, double step_sd) const {
    Workspace ws;
    ws.st = state;
    rebuild_all(ws, data_);
    Scales scales = make_scales(data_, fit_, cfg_);
    scales.tau_sd.setConstant(step_sd);
    UpdateContext ctx{data_, fit_, cfg_, rng, scales, 1, false};
    update_tau(ws, ctx);
    return ws.st;
}

ModelState Sampler::step_alpha_beta0(const ModelState& state, Rng& rng,
                                     double step_mult) const {
    Workspace ws;
    ws.st = state;
    rebuild_all(ws, data_);
    Scales scales = make_scales(data_, fit_, cfg_);
    scales.ab_mult = step_mult;
    UpdateContext ctx{data_, fit_, cfg_, rng, scales, 1, false};
    update_alpha_beta0(ws, ctx);
    return ws.st;
}

ModelState Sampler::step_beta(const ModelState& state, Rng& rng, double step_sd) const {
    Workspace ws;
    ws.st = state;
    rebuild_all(ws, data_);
    Scales scales = make_scales(data_, fit_, cfg_);
    scales.beta_sd.setConstant(step_sd);
    UpdateContext ctx{data_, fit_, cfg_, rng, scales, 1, false};
    update_beta(ws, ctx);
    return ws.st;
}

}  // namespace joinpoint
