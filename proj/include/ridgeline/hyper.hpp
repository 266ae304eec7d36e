#pragma once

// Hyperparameter estimation: negative log marginal likelihood in weight space,
// generalized least squares profiling of the SP mean, simplex search over
// log-hyperparameters, and the validation-set grid search.

#include "ridgeline/dynamics.hpp"
#include "ridgeline/models.hpp"
#include "ridgeline/nelder_mead.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <vector>

namespace ridgeline {

enum class Execution { serial, parallel };

/// Everything about a model except its hyperparameters.
struct ModelTemplate {
    Variant variant = Variant::NP;
    Eigen::Index joints = kArmJoints;
    FeatureConfig features;
    double gravity = 9.81;

    ModelSpec instantiate(const Hyperparameters& hyper) const;
};

/// L = 1/2 log det V + 1/2 y'V^{-1}y + (tn/2) log 2 pi,  V = Phi Sigma0 Phi' + sigma2 I.
struct NllEvaluation {
    double value = 0.0;
    double logdet_term = 0.0;     ///< 1/2 log det V
    double quadratic_term = 0.0;  ///< 1/2 y'V^{-1}y
    double constant_term = 0.0;   ///< (tn/2) log 2 pi
    long samples = 0;
};

/// Sufficient statistics of a dataset for one feature width.
///
/// Psi is the stacked tn x 5 RBD regressor, F the t x 2d feature matrix and Y
/// the t x n torques. The kernel block of the design is F (x) I_n, so its Gram
/// matrix is F'F (x) I_n and only F'F is stored.
struct DesignMoments {
    Eigen::Index samples = 0;
    Eigen::Index outputs = 0;
    bool has_rbd = false;
    bool has_features = false;
    Eigen::MatrixXd rbd_rbd;    ///< Psi'Psi
    Eigen::MatrixXd rbd_feat;   ///< Psi'(F (x) I_n), column k*n + j
    Eigen::MatrixXd feat_feat;  ///< F'F
    Eigen::VectorXd rbd_y;      ///< Psi'y
    Eigen::MatrixXd feat_y;     ///< F'Y (2d x n)
    double yy = 0.0;

    /// Moments of the residual y - Psi pi (requires has_rbd).
    DesignMoments with_mean_removed(const Eigen::VectorXd& pi) const;
};

DesignMoments compute_moments(const Dataset& ds, const FeatureMap* features, bool with_rbd,
                              double gravity, Execution exec = Execution::parallel);

/// NLL from moments. Uses the RBD block when `use_rbd` and the kernel block when
/// `use_features`; prior variances gamma2/rho2 apply to the respective blocks.
NllEvaluation nll_from_moments(const DesignMoments& mom, bool use_rbd, bool use_features,
                               double gamma2, double rho2, double sigma2);

/// NLL of the template's model at `xi`. SP and SP2 subtract the mean with
/// xi.pi_mean / xi.pi_hat before evaluating.
NllEvaluation nll(const ModelTemplate& tmpl, const Hyperparameters& xi, const Dataset& ds);

/// GLS estimate of the SP mean for fixed (rho2, tau2, sigma2): the pi minimizing
/// the NLL. Throws SingularSystem if Psi'V^{-1}Psi is singular.
Eigen::VectorXd profile_pi(const ModelTemplate& tmpl, const Hyperparameters& xi, const Dataset& ds);
Eigen::VectorXd profile_pi(const DesignMoments& mom, double rho2, double sigma2);

struct FitResult {
    Hyperparameters hyper;
    double objective = 0.0;  ///< final NLL (ML) or validation MSE (VS)
    int iterations = 0;
    int evaluations = 0;
    std::vector<double> trace;
    double seconds = 0.0;
};

struct MlOptions {
    NelderMeadOptions simplex{1e-6, 1e-8, 0, 1.0};
};

/// Starting point from the data: sigma2 from a parametric residual fit, rho2
/// from signal (or residual) power, tau2 from the median squared input distance,
/// gamma2 from the least-squares pi, and pi_hat for SP2.
Hyperparameters default_initial_guess(const ModelTemplate& tmpl, const Dataset& init);

/// Minimizes the NLL over log-hyperparameters with Nelder-Mead. SP profiles pi at
/// every evaluation; SP2 keeps xi0.pi_hat fixed.
FitResult fit_ml(const ModelTemplate& tmpl, const Dataset& init, const Hyperparameters& xi0,
                 const MlOptions& options = {});

struct HyperGrid {
    std::vector<Hyperparameters> candidates;
};

/// tau2 over 7 log-spaced multiples in [0.1, 100] of the median squared input
/// distance, sigma2/rho2 over 7 log-spaced values in [1e-6, 1], sigma2 from a
/// parametric residual fit on `train`. NP and SP2 only.
HyperGrid default_vs_grid(const ModelTemplate& tmpl, const Dataset& train,
                          const std::optional<Eigen::VectorXd>& pi_hat = std::nullopt);

struct VsResult {
    FitResult fit;
    std::size_t index = 0;
    std::vector<double> mse;  ///< validation MSE per candidate
};

/// Validation MSE of the batch Tikhonov fit on `train`, for one candidate.
double validation_mse(const ModelTemplate& tmpl, const Hyperparameters& xi, const Dataset& train,
                      const Dataset& val);

/// Grid argmin of validation_mse; ties go to the earliest candidate.
VsResult fit_vs(const ModelTemplate& tmpl, const Dataset& train, const Dataset& val,
                const HyperGrid& grid, Execution exec = Execution::parallel);

/// Median of |x_i - x_j|^2 over pairs of (at most 400 evenly strided) rows.
double median_squared_distance(const Eigen::MatrixXd& inputs);

}  // namespace ridgeline
