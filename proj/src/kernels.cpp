#include "ridgeline/kernels.hpp"

#include "ridgeline/error.hpp"

#include <omp.h>

#include <cmath>
#include <vector>

namespace ridgeline::kernels {

namespace {

void check_feature_args(const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                        const Eigen::Ref<const Eigen::MatrixXd>& omega, double tau) {
    if (inputs.cols() != omega.cols()) {
        throw InvalidArgument("feature inputs have " + std::to_string(inputs.cols()) +
                              " columns, frequencies expect " + std::to_string(omega.cols()));
    }
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("kernel width must be positive");
}

// Shared by both paths so the outputs are bitwise identical.
inline void feature_row(const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                        const Eigen::Ref<const Eigen::MatrixXd>& omega, double tau, Eigen::Index row,
                        Eigen::MatrixXd& out) {
    const Eigen::Index d = omega.rows();
    const Eigen::Index m = omega.cols();
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (Eigen::Index k = 0; k < d; ++k) {
        double proj = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) proj += omega(k, j) * inputs(row, j);
        proj /= tau;
        out(row, k) = scale * std::cos(proj);
        out(row, d + k) = scale * std::sin(proj);
    }
}

Eigen::Index block_count(Eigen::Index rows) { return (rows + kBlockRows - 1) / kBlockRows; }

}  // namespace

int max_threads() { return omp_get_max_threads(); }

namespace serial {

Eigen::MatrixXd feature_matrix(const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                               const Eigen::Ref<const Eigen::MatrixXd>& omega, double tau) {
    check_feature_args(inputs, omega, tau);
    Eigen::MatrixXd out(inputs.rows(), 2 * omega.rows());
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) feature_row(inputs, omega, tau, i, out);
    return out;
}

Eigen::MatrixXd gram(const Eigen::Ref<const Eigen::MatrixXd>& X) {
    const Eigen::Index p = X.cols();
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        for (Eigen::Index j = 0; j < p; ++j) {
            const double xj = X(r, j);
            for (Eigen::Index i = j; i < p; ++i) G(i, j) += X(r, i) * xj;
        }
    }
    return Eigen::MatrixXd(G.selfadjointView<Eigen::Lower>());
}

Eigen::MatrixXd cross(const Eigen::Ref<const Eigen::MatrixXd>& X,
                      const Eigen::Ref<const Eigen::MatrixXd>& Y) {
    if (X.rows() != Y.rows()) throw InvalidArgument("cross product needs equal row counts");
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(X.cols(), Y.cols());
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        for (Eigen::Index c = 0; c < Y.cols(); ++c) {
            const double y = Y(r, c);
            for (Eigen::Index i = 0; i < X.cols(); ++i) C(i, c) += X(r, i) * y;
        }
    }
    return C;
}

}  // namespace serial

namespace parallel {

Eigen::MatrixXd feature_matrix(const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                               const Eigen::Ref<const Eigen::MatrixXd>& omega, double tau) {
    check_feature_args(inputs, omega, tau);
    Eigen::MatrixXd out(inputs.rows(), 2 * omega.rows());
    const Eigen::Index rows = inputs.rows();
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < rows; ++i) feature_row(inputs, omega, tau, i, out);
    return out;
}

Eigen::MatrixXd gram(const Eigen::Ref<const Eigen::MatrixXd>& X) {
    const Eigen::Index p = X.cols();
    const Eigen::Index blocks = block_count(X.rows());
    std::vector<Eigen::MatrixXd> partial(static_cast<std::size_t>(blocks));
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index b = 0; b < blocks; ++b) {
        const Eigen::Index begin = b * kBlockRows;
        const Eigen::Index len = std::min(kBlockRows, X.rows() - begin);
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(p, p);
        G.selfadjointView<Eigen::Lower>().rankUpdate(X.middleRows(begin, len).transpose());
        partial[static_cast<std::size_t>(b)] = std::move(G);
    }
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(p, p);
    for (const auto& part : partial) G += part;
    return Eigen::MatrixXd(G.selfadjointView<Eigen::Lower>());
}

Eigen::MatrixXd cross(const Eigen::Ref<const Eigen::MatrixXd>& X,
                      const Eigen::Ref<const Eigen::MatrixXd>& Y) {
    if (X.rows() != Y.rows()) throw InvalidArgument("cross product needs equal row counts");
    const Eigen::Index blocks = block_count(X.rows());
    std::vector<Eigen::MatrixXd> partial(static_cast<std::size_t>(blocks));
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index b = 0; b < blocks; ++b) {
        const Eigen::Index begin = b * kBlockRows;
        const Eigen::Index len = std::min(kBlockRows, X.rows() - begin);
        partial[static_cast<std::size_t>(b)] =
            X.middleRows(begin, len).transpose() * Y.middleRows(begin, len);
    }
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(X.cols(), Y.cols());
    for (const auto& part : partial) C += part;
    return C;
}

}  // namespace parallel

}  // namespace ridgeline::kernels
