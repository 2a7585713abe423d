#include "joinpoint/baseline.hpp"

#include <cmath>
#include <limits>

namespace joinpoint {

namespace {

double poisson_loglik(const Eigen::VectorXd& counts, const Eigen::VectorXd& eta,
                      double lfact_sum) {
    double ll = -lfact_sum;
    for (int i = 0; i < counts.size(); ++i) {
        if (eta[i] > 700.0) return -std::numeric_limits<double>::infinity();
        ll += counts[i] * eta[i] - std::exp(eta[i]);
    }
    return ll;
}

}  // namespace

GlmFit fit_glm(const Eigen::MatrixXd& design, const Eigen::VectorXd& counts,
               const Eigen::VectorXd& offset) {
    const int n = static_cast<int>(design.rows());
    const int p = static_cast<int>(design.cols());
    if (counts.size() != n || offset.size() != n) {
        throw InvalidConfig("design, counts and offset sizes disagree");
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < p) throw SingularSystem("design matrix is rank deficient");

    double lfact = 0.0;
    for (int i = 0; i < n; ++i) lfact += std::lgamma(counts[i] + 1.0);

    Eigen::VectorXd coef = Eigen::VectorXd::Zero(p);
    // Start at the intercept-only solution when the first column is constant.
    const double denom = offset.array().exp().sum();
    coef[0] = std::log((counts.sum() > 0.0 ? counts.sum() : 0.5) / denom);

    Eigen::VectorXd eta = design * coef + offset;
    double ll = poisson_loglik(counts, eta, lfact);

    GlmFit fit;
    for (int iter = 1; iter <= 100; ++iter) {
        const Eigen::VectorXd mu = eta.array().exp();
        const Eigen::VectorXd grad = design.transpose() * (counts - mu);
        fit.fisher = design.transpose() * mu.asDiagonal() * design;
        fit.iterations = iter;

        if (grad.lpNorm<Eigen::Infinity>() < 1e-8) {
            fit.coef = coef;
            fit.loglik = ll;
            return fit;
        }

        Eigen::LLT<Eigen::MatrixXd> llt(fit.fisher);
        if (llt.info() != Eigen::Success) {
            throw SingularSystem("Fisher information not positive definite");
        }
        const Eigen::VectorXd direction = llt.solve(grad);

        // Step halving keeps the log-likelihood nondecreasing.
        double step = 1.0;
        for (int half = 0; half < 60; ++half) {
            const Eigen::VectorXd cand = coef + step * direction;
            const Eigen::VectorXd cand_eta = design * cand + offset;
            const double cand_ll = poisson_loglik(counts, cand_eta, lfact);
            if (cand_ll >= ll - 1e-12) {
                coef = cand;
                eta = cand_eta;
                ll = cand_ll;
                break;
            }
            step *= 0.5;
        }
    }
    throw NoConvergence("Poisson GLM did not converge in 100 iterations");
}

Eigen::MatrixXd glm_design(const SeriesData& data, std::span<const double> taus) {
    const int n = data.size();
    Eigen::MatrixXd design(n, 2 + static_cast<int>(taus.size()));
    design.col(0).setOnes();
    design.col(1) = data.centered_times;
    if (!taus.empty()) {
        design.rightCols(static_cast<int>(taus.size())) = design_columns(data.grid, taus);
    }
    return design;
}

namespace {

// Enumerates ordered tuples over the candidate grid subject to the gap chain
// and fits each one; lexicographic ascent plus strict improvement gives the
// lexicographically smallest argmax.
struct ProfileSearch {
    const SeriesData& data;
    const std::vector<double>& candidates;
    double gap;
    int depth;
    std::vector<double> current;
    ProfileFit best;
    bool any = false;

    void recurse(std::size_t start_idx, int level) {
        for (std::size_t i = start_idx; i < candidates.size(); ++i) {
            const double t = candidates[i];
            if (!current.empty() && !(current.back() + gap < t)) continue;
            if (!(t + gap * (depth - level) < data.grid.last())) break;
            current.push_back(t);
            if (level == depth - 1) {
                try {
                    GlmFit fit = fit_glm(glm_design(data, current), data.counts,
                                         data.log_pop);
                    if (!any || fit.loglik > best.glm.loglik) {
                        best.taus = current;
                        best.glm = std::move(fit);
                        any = true;
                    }
                } catch (const SingularSystem&) {
                } catch (const NoConvergence&) {
                    // skip pathological tuples; the neighbors cover the region
                }
            } else {
                recurse(i + 1, level + 1);
            }
            current.pop_back();
        }
    }
};

}  // namespace

ProfileFit profile_fit(const SeriesData& data, int n_joinpoints, double gap,
                       double grid_step) {
    if (n_joinpoints < 0) throw InvalidConfig("number of change-points must be >= 0");
    if (!(grid_step > 0.0)) throw InvalidConfig("grid step must be positive");

    if (n_joinpoints == 0) {
        ProfileFit fit;
        fit.glm = fit_glm(glm_design(data, {}), data.counts, data.log_pop);
        return fit;
    }

    std::vector<double> candidates;
    const double lo = data.grid.first() + gap;
    const double hi = data.grid.last() - gap;
    for (long k = 1;; ++k) {
        const double t = data.grid.first() + static_cast<double>(k) * grid_step;
        if (!(t < hi)) break;
        if (t > lo) candidates.push_back(t);
    }
    if (candidates.empty()) {
        throw EmptyGrid("no admissible change-point candidates at this step size");
    }

    ProfileSearch search{data, candidates, gap, n_joinpoints, {}, {}, false};
    search.recurse(0, 0);
    if (!search.any) {
        throw EmptyGrid("no admissible change-point tuple for " +
                        std::to_string(n_joinpoints) + " change-points");
    }
    return search.best;
}

BicTable select_bic(const SeriesData& data, int jmax, double gap, double grid_step) {
    if (jmax < 0) throw InvalidConfig("jmax must be >= 0");
    BicTable table;
    const double log_n = std::log(static_cast<double>(data.size()));
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j <= jmax; ++j) {
        ProfileFit fit = profile_fit(data, j, gap, grid_step);
        BicRow row;
        row.n_joinpoints = j;
        row.loglik = fit.glm.loglik;
        row.bic = -2.0 * fit.glm.loglik + (2.0 + 2.0 * j) * log_n;
        row.taus = fit.taus;
        if (row.bic < best) {
            best = row.bic;
            table.chosen = j;
        }
        table.rows.push_back(std::move(row));
    }
    table.rows[static_cast<std::size_t>(table.chosen)].chosen = true;
    return table;
}

}  // namespace joinpoint
