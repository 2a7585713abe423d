#include "joinpoint/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace joinpoint {

namespace {

// Split every chain into halves of equal length.
std::vector<std::vector<double>> split_halves(const std::vector<std::vector<double>>& chains) {
    std::size_t len = std::numeric_limits<std::size_t>::max();
    for (const auto& c : chains) len = std::min(len, c.size());
    const std::size_t half = len / 2;
    std::vector<std::vector<double>> seqs;
    if (half < 2) return seqs;
    for (const auto& c : chains) {
        seqs.emplace_back(c.begin(), c.begin() + static_cast<long>(half));
        seqs.emplace_back(c.begin() + static_cast<long>(len - half),
                          c.begin() + static_cast<long>(len));
    }
    return seqs;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Autocovariance at the given lag, normalized by n.
double autocov(const std::vector<double>& v, double mean, std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < v.size(); ++i) {
        s += (v[i] - mean) * (v[i + lag] - mean);
    }
    return s / static_cast<double>(v.size());
}

struct Pooled {
    std::vector<std::vector<double>> seqs;
    std::vector<double> means;
    std::vector<double> vars;  // sample variances, n-1
    double within = 0.0;
    double between_over_n = 0.0;  // B/n
    double var_plus = 0.0;
    std::size_t n = 0;
};

bool pool(const std::vector<std::vector<double>>& chains, Pooled& p) {
    p.seqs = split_halves(chains);
    const std::size_t m = p.seqs.size();
    if (m < 2) return false;
    p.n = p.seqs.front().size();
    p.means.resize(m);
    p.vars.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        p.means[j] = mean_of(p.seqs[j]);
        p.vars[j] = autocov(p.seqs[j], p.means[j], 0) * static_cast<double>(p.n) /
                    static_cast<double>(p.n - 1);
    }
    const double grand = mean_of(p.means);
    double b = 0.0;
    for (double mu : p.means) b += (mu - grand) * (mu - grand);
    p.between_over_n = b / static_cast<double>(m - 1);
    p.within = mean_of(p.vars);
    p.var_plus = (static_cast<double>(p.n - 1) / static_cast<double>(p.n)) * p.within +
                 p.between_over_n;
    return true;
}

}  // namespace

double split_rhat(const std::vector<std::vector<double>>& chains) {
    Pooled p;
    if (!pool(chains, p)) return 1.0;
    if (!(p.within > 0.0)) return p.between_over_n > 0.0
                                      ? std::numeric_limits<double>::infinity()
                                      : 1.0;
    return std::sqrt(p.var_plus / p.within);
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
    Pooled p;
    if (!pool(chains, p)) return 0.0;
    const std::size_t m = p.seqs.size();
    const double total = static_cast<double>(m) * static_cast<double>(p.n);
    if (!(p.var_plus > 0.0)) return total;

    // rho_t = 1 - (W - mean_j acov_j(t)) / var_plus, accumulated in Geyer
    // pairs until the first nonpositive pair, enforcing monotonicity.
    auto pooled_rho = [&](std::size_t lag) {
        double acov = 0.0;
        for (std::size_t j = 0; j < m; ++j) acov += autocov(p.seqs[j], p.means[j], lag);
        acov /= static_cast<double>(m);
        return 1.0 - (p.within - acov) / p.var_plus;
    };

    double tau = 1.0;  // rho_0 contribution; tau = 1 + 2 sum_{t>=1} rho_t
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t t = 1; t + 1 < p.n; t += 2) {
        double pair = pooled_rho(t) + pooled_rho(t + 1);
        if (pair <= 0.0) break;
        pair = std::min(pair, prev_pair);
        prev_pair = pair;
        tau += 2.0 * pair;
    }
    return total / tau;
}

}  // namespace joinpoint
