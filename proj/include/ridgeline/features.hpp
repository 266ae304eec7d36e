#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace ridgeline {

/// Gaussian kernel exp(-|xa - xb|^2 / (2 tau^2)).
double kernel_exact(const Eigen::Ref<const Eigen::VectorXd>& xa,
                    const Eigen::Ref<const Eigen::VectorXd>& xb, double tau);

/// d x m matrix of i.i.d. standard normal frequencies, a pure function of the seed.
Eigen::MatrixXd sample_frequencies(Eigen::Index d, Eigen::Index m, std::uint64_t seed);

/// Random Fourier feature map for the Gaussian kernel.
///
/// phi(x) = d^{-1/2} [cos(w_1'x/tau) .. cos(w_d'x/tau) sin(w_1'x/tau) .. sin(w_d'x/tau)]
/// so that phi(xa)'phi(xb) approximates kernel_exact(xa, xb, tau) and |phi(x)| = 1.
/// The frequencies depend only on (d, m, seed); changing tau rescales them.
class FeatureMap {
public:
    FeatureMap(Eigen::Index d, Eigen::Index m, std::uint64_t seed, double tau);

    Eigen::Index features() const { return omega_.rows(); }
    Eigen::Index input_dim() const { return omega_.cols(); }
    /// Length of phi(x), i.e. 2d.
    Eigen::Index dim() const { return 2 * omega_.rows(); }
    std::uint64_t seed() const { return seed_; }
    double tau() const { return tau_; }
    const Eigen::MatrixXd& omega() const { return omega_; }

    /// Same frequencies, different width.
    FeatureMap with_tau(double tau) const;

    Eigen::VectorXd operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    /// Feature rows for every row of `inputs` (N x m -> N x 2d).
    Eigen::MatrixXd batch(const Eigen::Ref<const Eigen::MatrixXd>& inputs) const;

    /// Builds a map directly from a frequency matrix (tests, fixed frequencies).
    static FeatureMap from_frequencies(Eigen::MatrixXd omega, double tau);

private:
    FeatureMap(Eigen::MatrixXd omega, std::uint64_t seed, double tau);

    Eigen::MatrixXd omega_;
    std::uint64_t seed_;
    double tau_;
};

}  // namespace ridgeline
