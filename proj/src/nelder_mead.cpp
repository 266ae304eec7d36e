#include "ridgeline/nelder_mead.hpp"

#include "ridgeline/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ridgeline {

NelderMeadResult minimize_nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                                      const Eigen::VectorXd& x0, const NelderMeadOptions& options) {
    const Eigen::Index k = x0.size();
    if (k < 1) throw InvalidArgument("Nelder-Mead needs at least one dimension");
    if (!x0.allFinite()) throw InvalidArgument("Nelder-Mead start point must be finite");
    const int max_iterations = options.max_iterations > 0 ? options.max_iterations
                                                          : 200 * static_cast<int>(k);

    NelderMeadResult result;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++result.evaluations;
        const double v = objective(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    const double f0 = objective(x0);
    ++result.evaluations;
    if (!std::isfinite(f0)) throw InvalidArgument("objective is not finite at the start point");

    std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(k + 1), x0);
    std::vector<double> values(static_cast<std::size_t>(k + 1), f0);
    for (Eigen::Index i = 0; i < k; ++i) {
        Eigen::VectorXd& v = simplex[static_cast<std::size_t>(i + 1)];
        if (options.initial_step > 0.0) {
            v[i] += options.initial_step;
        } else {
            v[i] = x0[i] != 0.0 ? 1.05 * x0[i] : 0.00025;
        }
        values[static_cast<std::size_t>(i + 1)] = eval(v);
    }

    std::vector<std::size_t> order(simplex.size());
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        std::vector<Eigen::VectorXd> s2;
        std::vector<double> v2;
        s2.reserve(order.size());
        v2.reserve(order.size());
        for (std::size_t i : order) {
            s2.push_back(std::move(simplex[i]));
            v2.push_back(values[i]);
        }
        simplex = std::move(s2);
        values = std::move(v2);
    };
    sort_simplex();
    result.trace.push_back(values.front());

    const std::size_t worst = simplex.size() - 1;
    while (true) {
        double f_spread = 0.0;
        double x_spread = 0.0;
        for (std::size_t i = 1; i < simplex.size(); ++i) {
            f_spread = std::max(f_spread, std::abs(values[i] - values[0]));
            x_spread = std::max(x_spread, (simplex[i] - simplex[0]).cwiseAbs().maxCoeff());
        }
        if (f_spread <= options.f_tolerance && x_spread <= options.x_tolerance) {
            result.converged = true;
            break;
        }
        if (result.iterations >= max_iterations) break;
        ++result.iterations;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(k);
        for (std::size_t i = 0; i < worst; ++i) centroid += simplex[i];
        centroid /= static_cast<double>(k);

        const Eigen::VectorXd xr = centroid + (centroid - simplex[worst]);
        const double fr = eval(xr);
        bool shrink = false;
        if (fr < values[0]) {
            const Eigen::VectorXd xe = centroid + 2.0 * (centroid - simplex[worst]);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[worst] = xe;
                values[worst] = fe;
            } else {
                simplex[worst] = xr;
                values[worst] = fr;
            }
        } else if (fr < values[worst - 1]) {
            simplex[worst] = xr;
            values[worst] = fr;
        } else if (fr < values[worst]) {
            const Eigen::VectorXd xc = centroid + 0.5 * (xr - centroid);
            const double fc = eval(xc);
            if (fc <= fr) {
                simplex[worst] = xc;
                values[worst] = fc;
            } else {
                shrink = true;
            }
        } else {
            const Eigen::VectorXd xcc = centroid + 0.5 * (simplex[worst] - centroid);
            const double fcc = eval(xcc);
            if (fcc < values[worst]) {
                simplex[worst] = xcc;
                values[worst] = fcc;
            } else {
                shrink = true;
            }
        }
        if (shrink) {
            for (std::size_t i = 1; i < simplex.size(); ++i) {
                simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
                values[i] = eval(simplex[i]);
            }
        }
        sort_simplex();
        result.trace.push_back(values.front());
    }

    result.x = simplex.front();
    result.value = values.front();
    return result;
}

}  // namespace ridgeline
