#pragma once

// Streaming regularized least squares.
//
// The estimator keeps the upper Cholesky factor R of
//   A = diag(prior_precision) + (1/sigma2) sum_s D_s' D_s
// and the information vector b = (1/sigma2) sum_s D_s' y_s. Each sample costs n
// rank-one updates of R (Givens rotations, O(n p^2)); theta = A^{-1} b is
// recovered with two triangular solves. Zero precision entries express an
// unregularized coordinate, so the state is only solvable once data excite it.

#include "ridgeline/models.hpp"

#include <Eigen/Dense>

#include <vector>

namespace ridgeline {

/// Row-major so each Givens rotation sweeps a contiguous row.
using UpperFactor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct RlsState {
    UpperFactor R;  ///< upper triangular, R'R = A
    Eigen::VectorXd b;
    long samples = 0;
    double sigma2 = 1.0;

    Eigen::Index params() const { return b.size(); }
    /// Dense A = R'R.
    Eigen::MatrixXd information() const;
};

RlsState rls_init(const Eigen::VectorXd& prior_precision, double sigma2);

/// Absorbs one sample: design is n x p, y has length n (already mean-corrected).
void rls_update(RlsState& state, const Eigen::Ref<const Eigen::MatrixXd>& design,
                const Eigen::Ref<const Eigen::VectorXd>& y);

/// theta = A^{-1} b. Throws SingularSystem naming the first coordinate whose
/// pivot falls below 1e-12 times the largest pivot.
Eigen::VectorXd rls_solve(const RlsState& state);

/// A += v v' on the upper factor, v is consumed.
void cholesky_rank_one_update(UpperFactor& R, Eigen::VectorXd v);

/// Dense reference: solves (diag(prior_precision) + Phi'Phi/sigma2) theta = Phi'y/sigma2
/// with Phi and y stacked from the per-sample designs and targets.
Eigen::VectorXd batch_tikhonov(const std::vector<Eigen::MatrixXd>& designs,
                               const std::vector<Eigen::VectorXd>& ys,
                               const Eigen::VectorXd& prior_precision, double sigma2);

/// Same system from an already stacked design.
Eigen::VectorXd batch_tikhonov(const Eigen::Ref<const Eigen::MatrixXd>& Phi,
                               const Eigen::Ref<const Eigen::VectorXd>& y,
                               const Eigen::VectorXd& prior_precision, double sigma2);

/// y_hat = build_design(spec, x) theta + mean_term(spec, x).
Eigen::VectorXd predict(const ModelSpec& spec, const Eigen::VectorXd& theta, const JointState& x);

/// Fresh estimator for a model: its prior precision and noise variance.
RlsState rls_init(const ModelSpec& spec);
/// rls_update with the design and mean correction of the model.
void rls_update(RlsState& state, const ModelSpec& spec, const Sample& sample);

}  // namespace ridgeline
