#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace ridgeline {

struct NelderMeadOptions {
    double x_tolerance = 1e-6;  ///< max |vertex - best| per coordinate
    double f_tolerance = 1e-8;  ///< max |f(vertex) - f(best)|
    int max_iterations = 0;     ///< 0 means 200 * dimension
    /// Offset of the initial vertices from x0. Zero selects the classic rule:
    /// 5% of each nonzero coordinate, 0.00025 for zero coordinates.
    double initial_step = 0.0;
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    /// Best objective value after each iteration (index 0 is the initial simplex).
    std::vector<double> trace;
};

/// Unconstrained Nelder-Mead simplex (reflection 1, expansion 2, contraction 0.5,
/// shrink 0.5). Non-finite objective values away from x0 are treated as +inf.
NelderMeadResult minimize_nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                                      const Eigen::VectorXd& x0,
                                      const NelderMeadOptions& options = {});

}  // namespace ridgeline
