#pragma once

// The five model classes written in the common linear form
//   y = design(x) theta + mean(x) + e,   theta ~ N(0, diag(prior)),  e ~ N(0, sigma2 I_n).

#include "ridgeline/dynamics.hpp"
#include "ridgeline/features.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ridgeline {

/// P: rigid-body regressor only. NP: random-feature kernel. SP: kernel around an
/// RBD mean with pi estimated jointly with the kernel hyperparameters. SP2: kernel
/// on residuals of a least-squares RBD fit. SPK: RBD regressor inside the kernel.
enum class Variant { P, NP, SP, SP2, SPK };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);

struct Hyperparameters {
    std::optional<double> gamma2;  ///< prior variance of pi (P, SPK)
    std::optional<double> rho2;    ///< kernel scale
    std::optional<double> tau2;    ///< squared kernel width
    std::optional<double> sigma2;  ///< noise variance
    std::optional<Eigen::VectorXd> pi_mean;  ///< SP mean parameters
    std::optional<Eigen::VectorXd> pi_hat;   ///< SP2 least-squares parameters

    /// Checks that exactly the fields the variant needs are present and valid.
    void validate(Variant v) const;
};

struct FeatureConfig {
    Eigen::Index count = 100;
    std::uint64_t seed = 1;
};

class ModelSpec {
public:
    /// Builds the feature map (for every variant but P) from the config and tau2.
    static ModelSpec create(Variant variant, Hyperparameters hyper, Eigen::Index joints,
                            const FeatureConfig& features, double gravity = 9.81);

    Variant variant() const { return variant_; }
    const Hyperparameters& hyper() const { return hyper_; }
    const std::optional<FeatureMap>& feature_map() const { return feature_map_; }
    Eigen::Index outputs() const { return joints_; }
    Eigen::Index input_dim() const { return 3 * joints_; }
    double gravity() const { return gravity_; }

    bool has_rbd_block() const { return variant_ == Variant::P || variant_ == Variant::SPK; }
    bool has_feature_block() const { return variant_ != Variant::P; }
    bool has_mean() const { return variant_ == Variant::SP || variant_ == Variant::SP2; }

    Eigen::Index rbd_params() const { return has_rbd_block() ? kBaseParameterCount : 0; }
    Eigen::Index feature_params() const {
        return has_feature_block() ? feature_map_->dim() * joints_ : 0;
    }
    /// Dimension of theta.
    Eigen::Index params() const { return rbd_params() + feature_params(); }

    /// pi_mean for SP, pi_hat for SP2, nullptr otherwise.
    const Eigen::VectorXd* mean_parameters() const;

private:
    ModelSpec(Variant variant, Hyperparameters hyper, Eigen::Index joints,
              std::optional<FeatureMap> fm, double gravity);

    Variant variant_;
    Hyperparameters hyper_;
    Eigen::Index joints_;
    std::optional<FeatureMap> feature_map_;
    double gravity_;
};

/// n x p design: P -> psi', NP/SP/SP2 -> phi' (x) I_n, SPK -> [psi' | phi' (x) I_n].
/// In the Kronecker block, output row j holds phi_k at column k*n + j.
Eigen::MatrixXd build_design(const ModelSpec& spec, const JointState& x);

/// Stacked tn x p design for N samples (rows grouped by sample).
Eigen::MatrixXd stacked_design(const ModelSpec& spec, const Dataset& ds);

/// Stacked targets y_s - mean_term(x_s), length tn, matching stacked_design.
Eigen::VectorXd stacked_targets(const ModelSpec& spec, const Dataset& ds);

/// Diagonal of the prior covariance: gamma2 on the RBD block, rho2 on the kernel block.
Eigen::VectorXd build_prior(const ModelSpec& spec);
/// Elementwise inverse of build_prior.
Eigen::VectorXd prior_precision(const ModelSpec& spec);

/// psi(x)' pi for SP/SP2, zero otherwise.
Eigen::VectorXd mean_term(const ModelSpec& spec, const JointState& x);
/// y - mean_term(x).
Eigen::VectorXd apply_mean(const ModelSpec& spec, const JointState& x, const Eigen::VectorXd& y);

struct LeastSquaresFit {
    Eigen::VectorXd pi;
    Eigen::Index rank = 0;
    bool rank_deficient = false;
};

/// Ordinary least squares for pi over the stacked regressor; minimum-norm when
/// the regressor is rank deficient (logged as a warning).
LeastSquaresFit ls_estimate_pi(const Dataset& ds, double gravity = 9.81);

}  // namespace ridgeline
