#include "ridgeline/estimator.hpp"

#include "ridgeline/error.hpp"

#include <cmath>
#include <string>

namespace ridgeline {

Eigen::MatrixXd RlsState::information() const { return R.transpose() * R; }

RlsState rls_init(const Eigen::VectorXd& prior_precision, double sigma2) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InvalidArgument("sigma2 must be positive");
    if (prior_precision.size() < 1) throw InvalidArgument("estimator needs at least one parameter");
    for (Eigen::Index i = 0; i < prior_precision.size(); ++i) {
        if (!(prior_precision[i] >= 0.0) || !std::isfinite(prior_precision[i])) {
            throw InvalidArgument("prior precision entry " + std::to_string(i) +
                                  " must be finite and nonnegative");
        }
    }
    RlsState s;
    s.R = prior_precision.cwiseSqrt().asDiagonal();
    s.b = Eigen::VectorXd::Zero(prior_precision.size());
    s.sigma2 = sigma2;
    return s;
}

void cholesky_rank_one_update(UpperFactor& R, Eigen::VectorXd v) {
    const Eigen::Index p = R.rows();
    for (Eigen::Index k = 0; k < p; ++k) {
        const double vk = v[k];
        if (vk == 0.0) continue;
        const double rkk = R(k, k);
        const double r = std::hypot(rkk, vk);
        const double c = rkk / r;
        const double s = vk / r;
        R(k, k) = r;
        // Rotate (row k of R, v) so that v_k vanishes.
        double* row = R.row(k).data();
        for (Eigen::Index i = k + 1; i < p; ++i) {
            const double rki = row[i];
            const double vi = v[i];
            row[i] = c * rki + s * vi;
            v[i] = c * vi - s * rki;
        }
    }
}

void rls_update(RlsState& state, const Eigen::Ref<const Eigen::MatrixXd>& design,
                const Eigen::Ref<const Eigen::VectorXd>& y) {
    const Eigen::Index p = state.params();
    if (design.cols() != p || design.rows() != y.size()) {
        throw InvalidArgument("design is " + std::to_string(design.rows()) + "x" +
                              std::to_string(design.cols()) + ", expected " +
                              std::to_string(y.size()) + "x" + std::to_string(p));
    }
    if (!design.allFinite() || !y.allFinite()) throw InvalidArgument("non-finite sample in update");
    const double inv_sigma = 1.0 / std::sqrt(state.sigma2);
    for (Eigen::Index j = 0; j < design.rows(); ++j) {
        cholesky_rank_one_update(state.R, design.row(j).transpose() * inv_sigma);
    }
    state.b.noalias() += design.transpose() * y / state.sigma2;
    ++state.samples;
}

Eigen::VectorXd rls_solve(const RlsState& state) {
    const Eigen::VectorXd diag = state.R.diagonal();
    const double max_pivot = diag.cwiseAbs().maxCoeff();
    const double tol = 1e-12 * max_pivot;
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
        if (!(std::abs(diag[i]) > tol)) {
            throw SingularSystem("coordinate " + std::to_string(i) +
                                     " is insufficiently excited or unregularized",
                                 i);
        }
    }
    const auto upper = state.R.triangularView<Eigen::Upper>();
    Eigen::VectorXd z = upper.transpose().solve(state.b);
    return upper.solve(z);
}

Eigen::VectorXd batch_tikhonov(const Eigen::Ref<const Eigen::MatrixXd>& Phi,
                               const Eigen::Ref<const Eigen::VectorXd>& y,
                               const Eigen::VectorXd& prior_precision, double sigma2) {
    if (Phi.rows() != y.size() || Phi.cols() != prior_precision.size()) {
        throw InvalidArgument("batch_tikhonov: inconsistent stacked dimensions");
    }
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InvalidArgument("sigma2 must be positive");
    Eigen::MatrixXd A = Phi.transpose() * Phi / sigma2;
    A.diagonal() += prior_precision;
    const Eigen::VectorXd rhs = Phi.transpose() * y / sigma2;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) {
        throw SingularSystem("batch_tikhonov: normal matrix is not positive definite", -1);
    }
    return llt.solve(rhs);
}

Eigen::VectorXd batch_tikhonov(const std::vector<Eigen::MatrixXd>& designs,
                               const std::vector<Eigen::VectorXd>& ys,
                               const Eigen::VectorXd& prior_precision, double sigma2) {
    if (designs.size() != ys.size()) throw InvalidArgument("batch_tikhonov: designs/targets mismatch");
    Eigen::Index rows = 0;
    for (std::size_t s = 0; s < designs.size(); ++s) {
        if (designs[s].rows() != ys[s].size() || designs[s].cols() != prior_precision.size()) {
            throw InvalidArgument("batch_tikhonov: sample " + std::to_string(s) + " has wrong shape");
        }
        rows += designs[s].rows();
    }
    Eigen::MatrixXd Phi(rows, prior_precision.size());
    Eigen::VectorXd y(rows);
    Eigen::Index r = 0;
    for (std::size_t s = 0; s < designs.size(); ++s) {
        Phi.middleRows(r, designs[s].rows()) = designs[s];
        y.segment(r, ys[s].size()) = ys[s];
        r += designs[s].rows();
    }
    return batch_tikhonov(Phi, y, prior_precision, sigma2);
}

Eigen::VectorXd predict(const ModelSpec& spec, const Eigen::VectorXd& theta, const JointState& x) {
    if (theta.size() != spec.params()) {
        throw InvalidArgument("theta has " + std::to_string(theta.size()) + " entries, model needs " +
                              std::to_string(spec.params()));
    }
    return build_design(spec, x) * theta + mean_term(spec, x);
}

RlsState rls_init(const ModelSpec& spec) {
    return rls_init(prior_precision(spec), *spec.hyper().sigma2);
}

void rls_update(RlsState& state, const ModelSpec& spec, const Sample& sample) {
    rls_update(state, build_design(spec, sample.x), apply_mean(spec, sample.x, sample.y));
}

}  // namespace ridgeline
