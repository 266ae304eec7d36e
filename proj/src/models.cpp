#include "ridgeline/models.hpp"

#include "ridgeline/error.hpp"
#include "ridgeline/log.hpp"

#include <cmath>
#include <string>

namespace ridgeline {

namespace {

void require_positive(const std::optional<double>& v, const char* name, Variant variant) {
    if (!v) {
        throw InvalidArgument(std::string("variant ") + std::string(to_string(variant)) +
                              " requires hyperparameter " + name);
    }
    if (!(*v > 0.0) || !std::isfinite(*v)) {
        throw InvalidArgument(std::string("hyperparameter ") + name + " must be positive and finite");
    }
}

void require_absent(bool present, const char* name, Variant variant) {
    if (present) {
        throw InvalidArgument(std::string("variant ") + std::string(to_string(variant)) +
                              " does not use hyperparameter " + name);
    }
}

void require_pi(const std::optional<Eigen::VectorXd>& v, const char* name, Variant variant) {
    if (!v) {
        throw InvalidArgument(std::string("variant ") + std::string(to_string(variant)) + " requires " +
                              name);
    }
    if (v->size() != kBaseParameterCount || !v->allFinite()) {
        throw InvalidArgument(std::string(name) + " must hold " +
                              std::to_string(kBaseParameterCount) + " finite entries");
    }
}

}  // namespace

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::P: return "P";
        case Variant::NP: return "NP";
        case Variant::SP: return "SP";
        case Variant::SP2: return "SP2";
        case Variant::SPK: return "SPK";
    }
    return "?";
}

Variant parse_variant(std::string_view name) {
    for (Variant v : {Variant::P, Variant::NP, Variant::SP, Variant::SP2, Variant::SPK}) {
        if (name == to_string(v)) return v;
    }
    throw InvalidArgument("unknown model variant '" + std::string(name) + "'");
}

void Hyperparameters::validate(Variant v) const {
    const bool uses_gamma = v == Variant::P || v == Variant::SPK;
    const bool uses_kernel = v != Variant::P;
    if (uses_gamma) require_positive(gamma2, "gamma2", v);
    else require_absent(gamma2.has_value(), "gamma2", v);
    if (uses_kernel) {
        require_positive(rho2, "rho2", v);
        require_positive(tau2, "tau2", v);
    } else {
        require_absent(rho2.has_value(), "rho2", v);
        require_absent(tau2.has_value(), "tau2", v);
    }
    require_positive(sigma2, "sigma2", v);
    if (v == Variant::SP) require_pi(pi_mean, "pi_mean", v);
    else require_absent(pi_mean.has_value(), "pi_mean", v);
    if (v == Variant::SP2) require_pi(pi_hat, "pi_hat", v);
    else require_absent(pi_hat.has_value(), "pi_hat", v);
}

ModelSpec::ModelSpec(Variant variant, Hyperparameters hyper, Eigen::Index joints,
                     std::optional<FeatureMap> fm, double gravity)
    : variant_(variant), hyper_(std::move(hyper)), joints_(joints), feature_map_(std::move(fm)),
      gravity_(gravity) {}

ModelSpec ModelSpec::create(Variant variant, Hyperparameters hyper, Eigen::Index joints,
                            const FeatureConfig& features, double gravity) {
    hyper.validate(variant);
    if (joints < 1) throw InvalidArgument("model needs at least one output");
    if (variant != Variant::NP && joints != kArmJoints) {
        throw InvalidArgument("variants with an RBD component require the two-link arm");
    }
    if (!std::isfinite(gravity)) throw InvalidArgument("gravity must be finite");
    std::optional<FeatureMap> fm;
    if (variant != Variant::P) {
        if (features.count < 1) throw InvalidArgument("feature count must be >= 1");
        fm.emplace(features.count, 3 * joints, features.seed, std::sqrt(*hyper.tau2));
    }
    return ModelSpec(variant, std::move(hyper), joints, std::move(fm), gravity);
}

const Eigen::VectorXd* ModelSpec::mean_parameters() const {
    if (variant_ == Variant::SP) return &*hyper_.pi_mean;
    if (variant_ == Variant::SP2) return &*hyper_.pi_hat;
    return nullptr;
}

Eigen::MatrixXd build_design(const ModelSpec& spec, const JointState& x) {
    x.validate();
    const Eigen::Index n = spec.outputs();
    if (x.joints() != n) {
        throw InvalidArgument("joint state has " + std::to_string(x.joints()) +
                              " joints, model expects " + std::to_string(n));
    }
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, spec.params());
    if (spec.has_rbd_block()) {
        D.leftCols(spec.rbd_params()) = rbd_regressor(x, spec.gravity()).transpose();
    }
    if (spec.has_feature_block()) {
        const Eigen::VectorXd phi = (*spec.feature_map())(x.stacked());
        const Eigen::Index offset = spec.rbd_params();
        for (Eigen::Index k = 0; k < phi.size(); ++k) {
            for (Eigen::Index j = 0; j < n; ++j) D(j, offset + k * n + j) = phi[k];
        }
    }
    return D;
}

Eigen::MatrixXd stacked_design(const ModelSpec& spec, const Dataset& ds) {
    const Eigen::Index n = spec.outputs();
    const auto t = static_cast<Eigen::Index>(ds.size());
    Eigen::MatrixXd Phi = Eigen::MatrixXd::Zero(t * n, spec.params());
    if (t == 0) return Phi;
    if (ds.joints() != n) throw InvalidArgument("dataset joint count does not match the model");
    if (spec.has_rbd_block()) {
        for (Eigen::Index s = 0; s < t; ++s) {
            Phi.block(s * n, 0, n, spec.rbd_params()) =
                rbd_regressor(ds.samples[static_cast<std::size_t>(s)].x, spec.gravity()).transpose();
        }
    }
    if (spec.has_feature_block()) {
        const Eigen::MatrixXd F = spec.feature_map()->batch(ds.inputs());
        const Eigen::Index offset = spec.rbd_params();
        for (Eigen::Index s = 0; s < t; ++s) {
            for (Eigen::Index k = 0; k < F.cols(); ++k) {
                for (Eigen::Index j = 0; j < n; ++j) Phi(s * n + j, offset + k * n + j) = F(s, k);
            }
        }
    }
    return Phi;
}

Eigen::VectorXd stacked_targets(const ModelSpec& spec, const Dataset& ds) {
    const Eigen::Index n = spec.outputs();
    Eigen::VectorXd y(static_cast<Eigen::Index>(ds.size()) * n);
    for (std::size_t s = 0; s < ds.size(); ++s) {
        const Sample& sample = ds.samples[s];
        y.segment(static_cast<Eigen::Index>(s) * n, n) = apply_mean(spec, sample.x, sample.y);
    }
    return y;
}

Eigen::VectorXd build_prior(const ModelSpec& spec) {
    spec.hyper().validate(spec.variant());
    Eigen::VectorXd prior(spec.params());
    if (spec.has_rbd_block()) prior.head(spec.rbd_params()).setConstant(*spec.hyper().gamma2);
    if (spec.has_feature_block()) prior.tail(spec.feature_params()).setConstant(*spec.hyper().rho2);
    return prior;
}

Eigen::VectorXd prior_precision(const ModelSpec& spec) { return build_prior(spec).cwiseInverse(); }

Eigen::VectorXd mean_term(const ModelSpec& spec, const JointState& x) {
    const Eigen::VectorXd* pi = spec.mean_parameters();
    if (pi == nullptr) return Eigen::VectorXd::Zero(spec.outputs());
    return rbd_regressor(x, spec.gravity()).transpose() * *pi;
}

Eigen::VectorXd apply_mean(const ModelSpec& spec, const JointState& x, const Eigen::VectorXd& y) {
    if (y.size() != spec.outputs()) throw InvalidArgument("torque vector length does not match the model");
    if (!spec.has_mean()) return y;
    return y - mean_term(spec, x);
}

LeastSquaresFit ls_estimate_pi(const Dataset& ds, double gravity) {
    if (ds.empty()) throw InvalidArgument("least-squares estimate needs a non-empty dataset");
    const auto t = static_cast<Eigen::Index>(ds.size());
    const Eigen::Index n = ds.joints();
    if (n != kArmJoints) throw InvalidArgument("least-squares pi estimate requires the two-link arm");
    Eigen::MatrixXd Psi(t * n, kBaseParameterCount);
    Eigen::VectorXd y(t * n);
    for (Eigen::Index s = 0; s < t; ++s) {
        const Sample& sample = ds.samples[static_cast<std::size_t>(s)];
        Psi.middleRows(s * n, n) = rbd_regressor(sample.x, gravity).transpose();
        y.segment(s * n, n) = sample.y;
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Psi);
    LeastSquaresFit fit;
    fit.pi = cod.solve(y);
    fit.rank = cod.rank();
    fit.rank_deficient = fit.rank < kBaseParameterCount;
    if (fit.rank_deficient) {
        log().warn("RBD regressor is rank deficient (rank {} of {}); returning the minimum-norm pi",
                   fit.rank, kBaseParameterCount);
    }
    return fit;
}

}  // namespace ridgeline
