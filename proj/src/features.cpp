#include "ridgeline/features.hpp"

#include "ridgeline/error.hpp"
#include "ridgeline/kernels.hpp"

#include <cmath>
#include <random>

namespace ridgeline {

double kernel_exact(const Eigen::Ref<const Eigen::VectorXd>& xa,
                    const Eigen::Ref<const Eigen::VectorXd>& xb, double tau) {
    if (xa.size() != xb.size()) throw InvalidArgument("kernel arguments differ in length");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("kernel width must be positive");
    if (!xa.allFinite() || !xb.allFinite()) throw InvalidArgument("kernel arguments must be finite");
    return std::exp(-(xa - xb).squaredNorm() / (2.0 * tau * tau));
}

Eigen::MatrixXd sample_frequencies(Eigen::Index d, Eigen::Index m, std::uint64_t seed) {
    if (d < 1 || m < 1) throw InvalidArgument("frequency matrix needs d >= 1 and m >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd omega(d, m);
    // Row-major fill so that the first rows do not depend on d.
    for (Eigen::Index k = 0; k < d; ++k) {
        for (Eigen::Index j = 0; j < m; ++j) omega(k, j) = normal(rng);
    }
    return omega;
}

FeatureMap::FeatureMap(Eigen::Index d, Eigen::Index m, std::uint64_t seed, double tau)
    : FeatureMap(sample_frequencies(d, m, seed), seed, tau) {}

FeatureMap::FeatureMap(Eigen::MatrixXd omega, std::uint64_t seed, double tau)
    : omega_(std::move(omega)), seed_(seed), tau_(tau) {
    if (!(tau_ > 0.0) || !std::isfinite(tau_)) throw InvalidArgument("kernel width must be positive");
    if (omega_.rows() < 1 || omega_.cols() < 1) throw InvalidArgument("empty frequency matrix");
}

FeatureMap FeatureMap::from_frequencies(Eigen::MatrixXd omega, double tau) {
    return FeatureMap(std::move(omega), 0, tau);
}

FeatureMap FeatureMap::with_tau(double tau) const { return FeatureMap(omega_, seed_, tau); }

Eigen::VectorXd FeatureMap::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != input_dim()) {
        throw InvalidArgument("feature map expects inputs of length " + std::to_string(input_dim()) +
                              ", got " + std::to_string(x.size()));
    }
    const Eigen::MatrixXd row = x.transpose();
    return kernels::serial::feature_matrix(row, omega_, tau_).row(0).transpose();
}

Eigen::MatrixXd FeatureMap::batch(const Eigen::Ref<const Eigen::MatrixXd>& inputs) const {
    return kernels::parallel::feature_matrix(inputs, omega_, tau_);
}

}  // namespace ridgeline
