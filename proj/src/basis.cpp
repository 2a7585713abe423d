#include "joinpoint/basis.hpp"

#include <algorithm>
#include <cmath>

namespace joinpoint {

TimeGrid TimeGrid::from_times(std::vector<double> ts) {
    if (ts.size() < 4) {
        throw InvalidConfig("time grid needs at least 4 points, got " +
                            std::to_string(ts.size()));
    }
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        if (!(ts[i] < ts[i + 1])) {
            throw InvalidConfig("time grid must be strictly increasing");
        }
        if (!std::isfinite(ts[i])) throw InvalidConfig("non-finite time value");
    }
    TimeGrid g;
    g.mean = 0.0;
    for (double t : ts) g.mean += t;
    g.mean /= static_cast<double>(ts.size());
    g.times = std::move(ts);
    return g;
}

BreakpointBasis solve_breakpoint(const TimeGrid& grid, double tau) {
    if (!(tau > grid.first() && tau < grid.last())) {
        throw OutOfRange("change-point " + std::to_string(tau) +
                         " outside the open observation window (" +
                         std::to_string(grid.first()) + ", " +
                         std::to_string(grid.last()) + ")");
    }

    // Grid sums split at tau; points with t <= tau count as left.
    double n_left = 0.0, sum_left = 0.0, sumsq_left = 0.0;
    double n_right = 0.0, sum_right = 0.0, sumsq_right = 0.0;
    for (double t : grid.times) {
        if (t <= tau) {
            n_left += 1.0;
            sum_left += t;
            sumsq_left += t * t;
        } else {
            n_right += 1.0;
            sum_right += t;
            sumsq_right += t * t;
        }
    }
    if (n_left < 1.0 || n_right < 1.0) {
        throw SingularSystem("no grid point on one side of the change-point");
    }

    // Unknowns (a0, b0, a1, b1); rows are continuity, zero sum,
    // zero t-moment, unit peak.
    Eigen::Matrix4d sys;
    sys << 1.0, tau, -1.0, -tau,
           n_left, sum_left, n_right, sum_right,
           sum_left, sumsq_left, sum_right, sumsq_right,
           1.0, tau, 0.0, 0.0;
    Eigen::Vector4d rhs(0.0, 0.0, 0.0, 1.0);

    Eigen::PartialPivLU<Eigen::Matrix4d> lu(sys);
    if (!(lu.rcond() > 1e-12)) {
        throw SingularSystem("break-point system is numerically singular (rcond " +
                             std::to_string(lu.rcond()) + ")");
    }
    Eigen::Vector4d coef = lu.solve(rhs);

    BreakpointBasis b;
    b.tau = tau;
    b.left_intercept = coef[0];
    b.left_slope = coef[1];
    b.right_intercept = coef[2];
    b.right_slope = coef[3];
    return b;
}

Eigen::MatrixXd design_columns(const TimeGrid& grid, std::span<const double> taus) {
    const int n = grid.size();
    Eigen::MatrixXd design(n, static_cast<int>(taus.size()));
    for (std::size_t j = 0; j < taus.size(); ++j) {
        const BreakpointBasis b = solve_breakpoint(grid, taus[j]);
        for (int i = 0; i < n; ++i) design(i, static_cast<int>(j)) = b(grid.times[i]);
    }
    return design;
}

}  // namespace joinpoint
