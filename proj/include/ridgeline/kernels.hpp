#pragma once

// Data-parallel inner loops. Each kernel has a plain serial reference in
// `serial` and an OpenMP version in `parallel`; the two must agree to
// round-off and the parallel results do not depend on the thread count.

#include <Eigen/Dense>

namespace ridgeline::kernels {

/// Rows processed per task by the parallel reductions. Partial sums are
/// combined in block order, which keeps results independent of scheduling.
inline constexpr Eigen::Index kBlockRows = 256;

namespace serial {

/// N x 2d random-feature matrix: row i is phi(inputs.row(i)).
Eigen::MatrixXd feature_matrix(const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                               const Eigen::Ref<const Eigen::MatrixXd>& omega, double tau);

/// X'X (full symmetric matrix).
Eigen::MatrixXd gram(const Eigen::Ref<const Eigen::MatrixXd>& X);

/// X'Y.
Eigen::MatrixXd cross(const Eigen::Ref<const Eigen::MatrixXd>& X,
                      const Eigen::Ref<const Eigen::MatrixXd>& Y);

}  // namespace serial

namespace parallel {

Eigen::MatrixXd feature_matrix(const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                               const Eigen::Ref<const Eigen::MatrixXd>& omega, double tau);

Eigen::MatrixXd gram(const Eigen::Ref<const Eigen::MatrixXd>& X);

Eigen::MatrixXd cross(const Eigen::Ref<const Eigen::MatrixXd>& X,
                      const Eigen::Ref<const Eigen::MatrixXd>& Y);

}  // namespace parallel

/// Worker count used by the parallel kernels (OpenMP max threads).
int max_threads();

}  // namespace ridgeline::kernels
