#pragma once

// Reference computations written independently of the library code paths they
// check: closed-form arm dynamics, dense marginal likelihood, dense Kronecker
// designs and a QR-based regularized least-squares solve.

#include "ridgeline/dynamics.hpp"
#include "ridgeline/features.hpp"
#include "ridgeline/models.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

namespace oracle {

/// M(q) ddq + C(q, dq) dq + G(q) for the two-link planar arm, friction free.
inline Eigen::Vector2d mcg_torques(const ridgeline::JointState& x, const ridgeline::ArmParameters& arm) {
    const double m1 = arm.mass[0], m2 = arm.mass[1];
    const double l1 = arm.length[0];
    const double lc1 = arm.com[0], lc2 = arm.com[1];
    const double I1 = arm.inertia[0], I2 = arm.inertia[1];
    const double g = arm.gravity;
    const double c1 = std::cos(x.q[0]);
    const double c2 = std::cos(x.q[1]);
    const double s2 = std::sin(x.q[1]);
    const double c12 = std::cos(x.q[0] + x.q[1]);

    Eigen::Matrix2d M;
    M(0, 0) = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * c2) + I1 + I2;
    M(0, 1) = m2 * (lc2 * lc2 + l1 * lc2 * c2) + I2;
    M(1, 0) = M(0, 1);
    M(1, 1) = m2 * lc2 * lc2 + I2;

    const double h = m2 * l1 * lc2 * s2;
    Eigen::Matrix2d C;
    C << -h * x.dq[1], -h * (x.dq[0] + x.dq[1]),
          h * x.dq[0], 0.0;

    Eigen::Vector2d G;
    G << (m1 * lc1 + m2 * l1) * g * c1 + m2 * lc2 * g * c12, m2 * lc2 * g * c12;
    return M * x.ddq + C * x.dq + G;
}

inline ridgeline::ArmParameters random_arm(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> mass(0.5, 2.0), len(0.3, 1.0), frac(0.2, 0.8), inertia(0.01, 0.2),
        fric(0.0, 0.5);
    ridgeline::ArmParameters arm;
    for (int i = 0; i < 2; ++i) {
        arm.mass[i] = mass(rng);
        arm.length[i] = len(rng);
        arm.com[i] = frac(rng) * arm.length[i];
        arm.inertia[i] = inertia(rng);
        arm.viscous[i] = fric(rng);
        arm.coulomb[i] = fric(rng);
    }
    return arm;
}

inline ridgeline::JointState random_state(std::mt19937_64& rng, Eigen::Index n = 2, double scale = 2.0) {
    std::normal_distribution<double> z(0.0, scale);
    ridgeline::JointState x{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        x.q[i] = z(rng);
        x.dq[i] = z(rng);
        x.ddq[i] = z(rng);
    }
    return x;
}

/// Dataset of random states with simulator torques at the given rate.
inline ridgeline::Dataset random_dataset(std::mt19937_64& rng, const ridgeline::ArmParameters& arm,
                                         std::size_t count, std::uint64_t seed) {
    ridgeline::Dataset ds;
    ds.rate = 20.0;
    for (std::size_t k = 0; k < count; ++k) {
        ridgeline::Sample s;
        s.t = static_cast<double>(k) / ds.rate;
        s.x = random_state(rng);
        s.y = ridgeline::simulate_torques(s.x, arm, seed, k);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

/// Draw from the NP prior: inputs x ~ N(0, I), weights W ~ N(0, rho2 I) of
/// shape 2d x n, y = W' phi(x) + N(0, sigma2 I).
inline ridgeline::Dataset np_prior_dataset(std::uint64_t seed, const ridgeline::FeatureMap& fm, Eigen::Index n,
                                           double rho2, double sigma2, std::size_t count) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Eigen::MatrixXd W(fm.dim(), n);
    for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = std::sqrt(rho2) * z(rng);
    ridgeline::Dataset ds;
    ds.rate = 20.0;
    for (std::size_t k = 0; k < count; ++k) {
        ridgeline::Sample s;
        s.t = static_cast<double>(k) / ds.rate;
        s.x = random_state(rng, n, 1.0);
        Eigen::VectorXd y = W.transpose() * fm(s.x.stacked());
        for (Eigen::Index j = 0; j < n; ++j) y[j] += std::sqrt(sigma2) * z(rng);
        s.y = y;
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

/// Kronecker product A (x) B.
inline Eigen::MatrixXd kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    Eigen::MatrixXd K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
        }
    }
    return K;
}

/// phi(x) straight from the definition, one coordinate at a time.
inline Eigen::VectorXd phi(const Eigen::MatrixXd& omega, double tau, const Eigen::VectorXd& x) {
    const Eigen::Index d = omega.rows();
    Eigen::VectorXd out(2 * d);
    for (Eigen::Index k = 0; k < d; ++k) {
        double arg = 0.0;
        for (Eigen::Index i = 0; i < omega.cols(); ++i) arg += omega(k, i) * x[i];
        arg /= tau;
        out[k] = std::cos(arg) / std::sqrt(static_cast<double>(d));
        out[d + k] = std::sin(arg) / std::sqrt(static_cast<double>(d));
    }
    return out;
}

/// Design of one sample: [psi' | phi' (x) I_n] with the blocks the variant uses.
inline Eigen::MatrixXd design(const ridgeline::ModelSpec& spec, const ridgeline::JointState& x) {
    const Eigen::Index n = spec.outputs();
    Eigen::MatrixXd D(n, 0);
    if (spec.has_rbd_block()) {
        const Eigen::MatrixXd psi_t = ridgeline::rbd_regressor(x, spec.gravity()).transpose();
        D = psi_t;
    }
    if (spec.has_feature_block()) {
        const auto& fm = *spec.feature_map();
        const Eigen::MatrixXd k =
            kron(phi(fm.omega(), fm.tau(), x.stacked()).transpose(), Eigen::MatrixXd::Identity(n, n));
        Eigen::MatrixXd joined(n, D.cols() + k.cols());
        joined << D, k;
        D = joined;
    }
    return D;
}

struct Stacked {
    Eigen::MatrixXd Phi;
    Eigen::VectorXd y;
};

/// Stacked design and mean-corrected targets built from `design`.
inline Stacked stack(const ridgeline::ModelSpec& spec, const ridgeline::Dataset& ds) {
    const Eigen::Index n = spec.outputs();
    const auto t = static_cast<Eigen::Index>(ds.size());
    Stacked s{Eigen::MatrixXd(t * n, spec.params()), Eigen::VectorXd(t * n)};
    const Eigen::VectorXd* pi = spec.mean_parameters();
    for (Eigen::Index i = 0; i < t; ++i) {
        const auto& sample = ds.samples[static_cast<std::size_t>(i)];
        s.Phi.middleRows(i * n, n) = design(spec, sample.x);
        Eigen::VectorXd y = sample.y;
        if (pi != nullptr) y -= ridgeline::rbd_regressor(sample.x, spec.gravity()).transpose() * *pi;
        s.y.segment(i * n, n) = y;
    }
    return s;
}

struct DenseNll {
    double value;
    double logdet_term;
    double quadratic_term;
};

/// Forms V = Phi diag(prior) Phi' + sigma2 I and evaluates the NLL directly.
inline DenseNll dense_nll(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y, const Eigen::VectorXd& prior,
                          double sigma2) {
    const Eigen::Index N = Phi.rows();
    Eigen::MatrixXd V = Phi * prior.asDiagonal() * Phi.transpose();
    V.diagonal().array() += sigma2;
    const Eigen::LLT<Eigen::MatrixXd> llt(V);
    const Eigen::MatrixXd L = llt.matrixL();
    const double logdet = 2.0 * L.diagonal().array().log().sum();
    const double quad = y.dot(llt.solve(y));
    const double c = 0.5 * static_cast<double>(N) * std::log(2.0 * std::numbers::pi);
    return {0.5 * logdet + 0.5 * quad + c, 0.5 * logdet, 0.5 * quad};
}

/// Regularized least squares through a QR factorization of the whitened,
/// prior-augmented system [Phi / sigma; diag(sqrt(precision))] theta = [y / sigma; 0].
inline Eigen::VectorXd qr_tikhonov(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& precision, double sigma2) {
    const Eigen::Index N = Phi.rows(), p = Phi.cols();
    const double sigma = std::sqrt(sigma2);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N + p, p);
    A.topRows(N) = Phi / sigma;
    A.bottomRows(p).diagonal() = precision.cwiseSqrt();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(N + p);
    b.head(N) = y / sigma;
    return A.colPivHouseholderQr().solve(b);
}

inline double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).norm() / (1.0 + b.norm());
}

}  // namespace oracle
