#pragma once

#include <map>
#include <string>
#include <vector>

#include "joinpoint/sampler.hpp"

namespace joinpoint {

struct SummaryStats {
    double mean = 0.0;
    double sd = 0.0;
    double q025 = 0.0;
    double q975 = 0.0;
};

// Equal-tailed quantile with type-7 interpolation (the common statistical
// software default).
double quantile_type7(std::vector<double> values, double p);

// Populations to pair with forecast years: explicit per-year overrides first,
// then the last observed population when hold_last is set, otherwise the
// forecast is refused.
struct ForecastPopulations {
    bool hold_last = true;
    std::map<double, double> overrides;

    double at(double year, double last_observed) const;
};

struct TrendPoint {
    double time = 0.0;
    bool forecast = false;
    double population = 0.0;
    double rate_mean = 0.0, rate_lo = 0.0, rate_hi = 0.0;     // per 100,000
    double count_mean = 0.0, count_lo = 0.0, count_hi = 0.0;  // expected deaths
    double observed_rate = 0.0;                               // NaN on forecast rows
};

struct HistBin {
    double lo = 0.0, hi = 0.0;
    long count = 0;
};

// Ordered active change-point locations from the draws with exactly k active
// indicators, plus fixed-bin marginal histograms per rank.
struct ConditionalTau {
    int k = 0;
    long n_draws = 0;
    bool insufficient = false;  // fewer than the requested minimum; reported, not fatal
    Eigen::MatrixXd samples;    // n_draws x k
    std::vector<std::vector<HistBin>> marginal_hist;
};

struct DiagnosticsSummary {
    double rhat_alpha = 1.0, rhat_beta0 = 1.0, rhat_gamma = 1.0;
    double ess_alpha = 0.0, ess_beta0 = 0.0, ess_gamma = 0.0;
    double accept_alpha_beta0 = 0.0;
    std::vector<double> accept_tau, accept_beta;  // pooled over chains
};

struct FitReport {
    std::vector<double> count_pmf;  // P(sum delta = k | y), k = 0..jstar
    int count_mode = 0;
    std::vector<double> inclusion_prob;
    SummaryStats alpha, beta0, gamma;
    std::vector<TrendPoint> trend;
    std::vector<std::pair<double, double>> cumulative_change;  // (t, prob)
    std::vector<ConditionalTau> conditional_tau;
    DiagnosticsSummary diagnostics;
};

struct ReportOptions {
    int horizon_years = 5;
    ForecastPopulations forecast_pop;
    double hist_bin_width = 1.0;
    int min_conditional_draws = 200;
};

std::vector<double> joinpoint_count_pmf(const PosteriorDraws& draws);

// Posterior of the rate per 100,000 at each observed time plus horizon_years
// annual forecast steps; mean and central 95% band per time point.
std::vector<TrendPoint> averaged_trend(const PosteriorDraws& draws,
                                       const SeriesData& data, int horizon_years,
                                       const ForecastPopulations& fpop);

// Fraction of draws with at least one active change-point at or before t.
double cumulative_change_prob(const PosteriorDraws& draws, double t);

ConditionalTau conditional_location_density(const PosteriorDraws& draws, int k,
                                            double bin_width = 1.0,
                                            int min_draws = 200);

// name is one of alpha, beta0, gamma.
SummaryStats parameter_summary(const PosteriorDraws& draws, const std::string& name);

FitReport build_report(const PosteriorDraws& draws, const SeriesData& data,
                       const ReportOptions& options);

}  // namespace joinpoint
