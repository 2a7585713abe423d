#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "joinpoint/errors.hpp"

namespace joinpoint {

// Observation times t_1 < ... < t_n with their mean cached.
struct TimeGrid {
    std::vector<double> times;
    double mean = 0.0;

    static TimeGrid from_times(std::vector<double> ts);

    int size() const { return static_cast<int>(times.size()); }
    double first() const { return times.front(); }
    double last() const { return times.back(); }
    double centered(int i) const { return times[i] - mean; }
};

// Two-piece linear break-point function determined by its change-point
// location and the observation grid. The pieces join continuously at tau,
// the function sums to zero over the grid, has zero t-moment over the grid,
// and equals 1 at tau. Points with t <= tau belong to the left piece.
struct BreakpointBasis {
    double tau = 0.0;
    double left_intercept = 0.0;
    double left_slope = 0.0;
    double right_intercept = 0.0;
    double right_slope = 0.0;

    // Defined on the whole real line; beyond the grid the outer pieces
    // extend linearly, which is what forecasting uses.
    double operator()(double t) const {
        return t <= tau ? left_intercept + left_slope * t
                        : right_intercept + right_slope * t;
    }
};

// Solves the 4x4 linear system given by the four defining constraints.
// Throws OutOfRange unless first < tau < last, SingularSystem if the
// system's reciprocal condition number falls below 1e-12.
BreakpointBasis solve_breakpoint(const TimeGrid& grid, double tau);

// n x J* matrix whose column j is the break-point at taus[j] evaluated on
// the grid. Columns are orthogonal to the all-ones and times vectors.
Eigen::MatrixXd design_columns(const TimeGrid& grid, std::span<const double> taus);

}  // namespace joinpoint
