#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "joinpoint/model.hpp"

namespace joinpoint {

struct GlmFit {
    Eigen::VectorXd coef;
    double loglik = 0.0;
    Eigen::MatrixXd fisher;  // X^T diag(mu) X at the optimum
    int iterations = 0;
};

// Poisson regression with log link and a fixed offset, fitted by
// Newton-Raphson with step halving. Convergence: max |gradient| < 1e-8
// within 100 iterations. Throws SingularSystem for rank-deficient designs,
// NoConvergence otherwise.
GlmFit fit_glm(const Eigen::MatrixXd& design, const Eigen::VectorXd& counts,
               const Eigen::VectorXd& offset);

// [1, t - tbar] plus one break-point column per change-point.
Eigen::MatrixXd glm_design(const SeriesData& data, std::span<const double> taus);

struct ProfileFit {
    std::vector<double> taus;
    GlmFit glm;
};

// Exhaustive profile likelihood over the change-point grid t1 + k*grid_step
// restricted to the ordered minimum-gap region; ties resolved toward the
// lexicographically smallest tuple.
ProfileFit profile_fit(const SeriesData& data, int n_joinpoints, double gap,
                       double grid_step);

struct BicRow {
    int n_joinpoints = 0;
    double loglik = 0.0;
    double bic = 0.0;
    std::vector<double> taus;
    bool chosen = false;
};

struct BicTable {
    std::vector<BicRow> rows;
    int chosen = 0;
};

// BIC = -2 loglik + k log n with k = 2 + 2J (coefficients plus locations);
// ties go to the smaller number of change-points.
BicTable select_bic(const SeriesData& data, int jmax, double gap, double grid_step);

}  // namespace joinpoint
