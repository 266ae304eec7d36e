#include "ridgeline/hyper.hpp"

#include "ridgeline/error.hpp"
#include "ridgeline/estimator.hpp"
#include "ridgeline/kernels.hpp"
#include "ridgeline/log.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <string>

namespace ridgeline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Columns k*n + j (k = 0..2d-1) of rbd_feat: Psi_j'F, a 5 x 2d block.
Eigen::MatrixXd channel_block(const Eigen::MatrixXd& rbd_feat, Eigen::Index j, Eigen::Index n) {
    const Eigen::Index dim = rbd_feat.cols() / n;
    Eigen::MatrixXd C(rbd_feat.rows(), dim);
    for (Eigen::Index k = 0; k < dim; ++k) C.col(k) = rbd_feat.col(k * n + j);
    return C;
}

void check_variance(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw InvalidArgument(std::string(name) + " must be positive and finite");
    }
}

// Cholesky of I + ratio * F'F, shared by the kernel-only NLL and the GLS profile.
Eigen::LLT<Eigen::MatrixXd> kernel_factor(const DesignMoments& mom, double ratio) {
    Eigen::MatrixXd M = ratio * mom.feat_feat;
    M.diagonal().array() += 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) throw SingularSystem("kernel Gram factorization failed", -1);
    return llt;
}

double log_det_from_factor(const Eigen::MatrixXd& L) {
    return 2.0 * L.diagonal().array().log().sum();
}

}  // namespace

ModelSpec ModelTemplate::instantiate(const Hyperparameters& hyper) const {
    return ModelSpec::create(variant, hyper, joints, features, gravity);
}

DesignMoments DesignMoments::with_mean_removed(const Eigen::VectorXd& pi) const {
    if (!has_rbd) throw InvalidArgument("mean removal needs the RBD moments");
    if (pi.size() != rbd_rbd.rows()) throw InvalidArgument("pi has the wrong length");
    DesignMoments out = *this;
    out.yy = yy - 2.0 * pi.dot(rbd_y) + pi.dot(rbd_rbd * pi);
    out.rbd_y = rbd_y - rbd_rbd * pi;
    if (has_features) {
        for (Eigen::Index j = 0; j < outputs; ++j) {
            out.feat_y.col(j) -= channel_block(rbd_feat, j, outputs).transpose() * pi;
        }
    }
    return out;
}

DesignMoments compute_moments(const Dataset& ds, const FeatureMap* features, bool with_rbd,
                              double gravity, Execution exec) {
    if (ds.empty()) throw InvalidArgument("moments need a non-empty dataset");
    const bool par = exec == Execution::parallel;
    DesignMoments mom;
    mom.samples = static_cast<Eigen::Index>(ds.size());
    mom.outputs = ds.joints();
    mom.has_rbd = with_rbd;
    mom.has_features = features != nullptr;
    const Eigen::MatrixXd Y = ds.torques();
    mom.yy = Y.squaredNorm();

    Eigen::MatrixXd F;
    if (features) {
        const Eigen::MatrixXd X = ds.inputs();
        F = par ? kernels::parallel::feature_matrix(X, features->omega(), features->tau())
                : kernels::serial::feature_matrix(X, features->omega(), features->tau());
        mom.feat_feat = par ? kernels::parallel::gram(F) : kernels::serial::gram(F);
        mom.feat_y = par ? kernels::parallel::cross(F, Y) : kernels::serial::cross(F, Y);
    }
    if (with_rbd) {
        const Eigen::Index n = mom.outputs;
        const Eigen::Index t = mom.samples;
        mom.rbd_rbd = Eigen::MatrixXd::Zero(kBaseParameterCount, kBaseParameterCount);
        mom.rbd_y = Eigen::VectorXd::Zero(kBaseParameterCount);
        if (features) mom.rbd_feat.resize(kBaseParameterCount, F.cols() * n);
        std::vector<Eigen::MatrixXd> per_channel(static_cast<std::size_t>(n),
                                                 Eigen::MatrixXd(t, kBaseParameterCount));
        for (Eigen::Index s = 0; s < t; ++s) {
            const Eigen::MatrixXd psi = rbd_regressor(ds.samples[static_cast<std::size_t>(s)].x, gravity);
            for (Eigen::Index j = 0; j < n; ++j) {
                per_channel[static_cast<std::size_t>(j)].row(s) = psi.col(j).transpose();
            }
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            const Eigen::MatrixXd& Psi = per_channel[static_cast<std::size_t>(j)];
            mom.rbd_rbd += par ? kernels::parallel::gram(Psi) : kernels::serial::gram(Psi);
            mom.rbd_y += Psi.transpose() * Y.col(j);
            if (features) {
                const Eigen::MatrixXd C =
                    par ? kernels::parallel::cross(Psi, F) : kernels::serial::cross(Psi, F);
                for (Eigen::Index k = 0; k < F.cols(); ++k) mom.rbd_feat.col(k * n + j) = C.col(k);
            }
        }
    }
    return mom;
}

NllEvaluation nll_from_moments(const DesignMoments& mom, bool use_rbd, bool use_features,
                               double gamma2, double rho2, double sigma2) {
    check_variance(sigma2, "sigma2");
    if (use_rbd) {
        check_variance(gamma2, "gamma2");
        if (!mom.has_rbd) throw InvalidArgument("moments lack the RBD block");
    }
    if (use_features) {
        check_variance(rho2, "rho2");
        if (!mom.has_features) throw InvalidArgument("moments lack the kernel block");
    }
    if (!use_rbd && !use_features) throw InvalidArgument("model has no parameters");
    if (mom.samples < 1) throw InvalidArgument("NLL needs at least one sample");

    const double observations = static_cast<double>(mom.samples * mom.outputs);
    NllEvaluation out;
    out.samples = mom.samples;
    out.constant_term = 0.5 * observations * std::log(2.0 * std::numbers::pi);

    double log_det = observations * std::log(sigma2);
    double explained = 0.0;  // b'(G + sigma2 S^{-1})^{-1} b
    if (!use_rbd) {
        // Kernel block only: everything factorizes over the n output channels.
        const double ratio = rho2 / sigma2;
        const auto llt = kernel_factor(mom, ratio);
        const Eigen::MatrixXd L = llt.matrixL();
        log_det += static_cast<double>(mom.outputs) * log_det_from_factor(L);
        const Eigen::MatrixXd W = llt.matrixL().solve(mom.feat_y);
        explained = ratio * W.squaredNorm();
    } else {
        const Eigen::Index pr = kBaseParameterCount;
        const Eigen::Index n = mom.outputs;
        const Eigen::Index pf = use_features ? mom.feat_feat.rows() * n : 0;
        const Eigen::Index p = pr + pf;
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(p, p);
        Eigen::VectorXd b(p);
        Eigen::VectorXd s_half(p);
        G.topLeftCorner(pr, pr) = mom.rbd_rbd;
        b.head(pr) = mom.rbd_y;
        s_half.head(pr).setConstant(std::sqrt(gamma2));
        if (use_features) {
            const Eigen::Index dim = mom.feat_feat.rows();
            G.topRightCorner(pr, pf) = mom.rbd_feat;
            G.bottomLeftCorner(pf, pr) = mom.rbd_feat.transpose();
            for (Eigen::Index k = 0; k < dim; ++k) {
                for (Eigen::Index kk = 0; kk < dim; ++kk) {
                    const double v = mom.feat_feat(k, kk);
                    for (Eigen::Index j = 0; j < n; ++j) G(pr + k * n + j, pr + kk * n + j) = v;
                }
                for (Eigen::Index j = 0; j < n; ++j) b(pr + k * n + j) = mom.feat_y(k, j);
            }
            s_half.tail(pf).setConstant(std::sqrt(rho2));
        }
        Eigen::MatrixXd B = s_half.asDiagonal() * G * s_half.asDiagonal() / sigma2;
        B.diagonal().array() += 1.0;
        Eigen::LLT<Eigen::MatrixXd> llt(B);
        if (llt.info() != Eigen::Success) throw SingularSystem("NLL inner factorization failed", -1);
        const Eigen::MatrixXd L = llt.matrixL();
        log_det += log_det_from_factor(L);
        const Eigen::VectorXd w = llt.matrixL().solve(s_half.cwiseProduct(b));
        explained = w.squaredNorm() / sigma2;
    }
    out.logdet_term = 0.5 * log_det;
    out.quadratic_term = 0.5 * (mom.yy - explained) / sigma2;
    out.value = out.logdet_term + out.quadratic_term + out.constant_term;
    return out;
}

NllEvaluation nll(const ModelTemplate& tmpl, const Hyperparameters& xi, const Dataset& ds) {
    xi.validate(tmpl.variant);
    const ModelSpec spec = tmpl.instantiate(xi);
    const auto& fm = spec.feature_map();
    const bool needs_rbd = tmpl.variant != Variant::NP;
    DesignMoments mom = compute_moments(ds, fm ? &*fm : nullptr, needs_rbd, tmpl.gravity);
    if (const Eigen::VectorXd* pi = spec.mean_parameters()) mom = mom.with_mean_removed(*pi);
    return nll_from_moments(mom, spec.has_rbd_block(), spec.has_feature_block(),
                            xi.gamma2.value_or(0.0), xi.rho2.value_or(0.0), *xi.sigma2);
}

Eigen::VectorXd profile_pi(const DesignMoments& mom, double rho2, double sigma2) {
    check_variance(rho2, "rho2");
    check_variance(sigma2, "sigma2");
    if (!mom.has_rbd || !mom.has_features) throw InvalidArgument("profiling needs RBD and kernel moments");
    const double ratio = rho2 / sigma2;
    const auto llt = kernel_factor(mom, ratio);
    // sigma2 * Psi'V^{-1}Psi and sigma2 * Psi'V^{-1}y via Woodbury.
    Eigen::MatrixXd H = mom.rbd_rbd;
    Eigen::VectorXd g = mom.rbd_y;
    const Eigen::MatrixXd Z = llt.matrixL().solve(mom.feat_y);
    for (Eigen::Index j = 0; j < mom.outputs; ++j) {
        const Eigen::MatrixXd Cj = llt.matrixL().solve(channel_block(mom.rbd_feat, j, mom.outputs).transpose());
        H.noalias() -= ratio * Cj.transpose() * Cj;
        g.noalias() -= ratio * Cj.transpose() * Z.col(j);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    const Eigen::VectorXd D = ldlt.vectorD();
    const double dmax = D.cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || !(dmax > 0.0) || D.minCoeff() <= 1e-13 * dmax) {
        throw SingularSystem("Psi'V^{-1}Psi is singular; the RBD mean is not identifiable from this data", -1);
    }
    return ldlt.solve(g);
}

Eigen::VectorXd profile_pi(const ModelTemplate& tmpl, const Hyperparameters& xi, const Dataset& ds) {
    if (tmpl.variant != Variant::SP) throw InvalidArgument("profile_pi applies to the SP variant");
    if (!xi.rho2 || !xi.tau2 || !xi.sigma2) throw InvalidArgument("profile_pi needs rho2, tau2 and sigma2");
    check_variance(*xi.tau2, "tau2");
    const FeatureMap fm(tmpl.features.count, 3 * tmpl.joints, tmpl.features.seed, std::sqrt(*xi.tau2));
    const DesignMoments mom = compute_moments(ds, &fm, true, tmpl.gravity);
    return profile_pi(mom, *xi.rho2, *xi.sigma2);
}

double median_squared_distance(const Eigen::MatrixXd& inputs) {
    const Eigen::Index rows = inputs.rows();
    if (rows < 2) throw InvalidArgument("median distance needs at least two inputs");
    const Eigen::Index count = std::min<Eigen::Index>(rows, 400);
    std::vector<Eigen::Index> pick(static_cast<std::size_t>(count));
    for (Eigen::Index i = 0; i < count; ++i) pick[static_cast<std::size_t>(i)] = i * rows / count;
    std::vector<double> d2;
    d2.reserve(static_cast<std::size_t>(count * (count - 1) / 2));
    for (Eigen::Index i = 0; i < count; ++i) {
        for (Eigen::Index j = i + 1; j < count; ++j) {
            d2.push_back((inputs.row(pick[static_cast<std::size_t>(i)]) -
                          inputs.row(pick[static_cast<std::size_t>(j)]))
                             .squaredNorm());
        }
    }
    const std::size_t mid = d2.size() / 2;
    std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid), d2.end());
    double median = d2[mid];
    if (d2.size() % 2 == 0) {
        median = 0.5 * (median + *std::max_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return median;
}

Hyperparameters default_initial_guess(const ModelTemplate& tmpl, const Dataset& init) {
    if (init.size() < 2) throw InvalidArgument("initial guess needs at least two samples");
    const Eigen::MatrixXd Y = init.torques();
    const double observations = static_cast<double>(Y.size());
    const double signal = std::max(Y.squaredNorm() / observations, 1e-12);

    Hyperparameters xi;
    double residual_power = 0.1 * signal;
    std::optional<Eigen::VectorXd> pi;
    if (init.joints() == kArmJoints) {
        const LeastSquaresFit ls = ls_estimate_pi(init, tmpl.gravity);
        double sse = 0.0;
        for (const Sample& s : init.samples) {
            sse += (s.y - rbd_regressor(s.x, tmpl.gravity).transpose() * ls.pi).squaredNorm();
        }
        residual_power = std::max(sse / observations, 1e-6 * signal);
        pi = ls.pi;
    }
    xi.sigma2 = residual_power;
    const Variant v = tmpl.variant;
    if (v != Variant::P) {
        xi.rho2 = v == Variant::NP ? signal : residual_power;
        xi.tau2 = median_squared_distance(init.inputs());
    }
    if (v == Variant::P || v == Variant::SPK) {
        if (!pi) throw InvalidArgument("RBD variants require the two-link arm");
        xi.gamma2 = std::max(pi->squaredNorm() / static_cast<double>(pi->size()), 1e-6);
    }
    if (v == Variant::SP || v == Variant::SP2) {
        if (!pi) throw InvalidArgument("RBD variants require the two-link arm");
        if (v == Variant::SP) xi.pi_mean = *pi;
        else xi.pi_hat = *pi;
    }
    return xi;
}

FitResult fit_ml(const ModelTemplate& tmpl, const Dataset& init, const Hyperparameters& xi0,
                 const MlOptions& options) {
    const auto start = Clock::now();
    xi0.validate(tmpl.variant);
    if (init.empty()) throw InvalidArgument("fit_ml needs a non-empty initialization window");
    const Variant v = tmpl.variant;
    const bool uses_gamma = v == Variant::P || v == Variant::SPK;
    const bool uses_kernel = v != Variant::P;
    const bool needs_rbd = v != Variant::NP;

    Eigen::VectorXd x0(static_cast<Eigen::Index>(uses_gamma) + (uses_kernel ? 2 : 0) + 1);
    {
        Eigen::Index i = 0;
        if (uses_gamma) x0[i++] = std::log(*xi0.gamma2);
        if (uses_kernel) {
            x0[i++] = std::log(*xi0.rho2);
            x0[i++] = std::log(*xi0.tau2);
        }
        x0[i] = std::log(*xi0.sigma2);
    }

    auto unpack = [&](const Eigen::VectorXd& x) {
        Hyperparameters xi;
        Eigen::Index i = 0;
        if (uses_gamma) xi.gamma2 = std::exp(x[i++]);
        if (uses_kernel) {
            xi.rho2 = std::exp(x[i++]);
            xi.tau2 = std::exp(x[i++]);
        }
        xi.sigma2 = std::exp(x[i]);
        if (v == Variant::SP2) xi.pi_hat = xi0.pi_hat;
        return xi;
    };

    // Moments depend on the data and tau only; keep the last ones.
    std::optional<double> cached_tau2;
    DesignMoments cached;
    auto moments_for = [&](const Hyperparameters& xi) -> const DesignMoments& {
        const double tau2 = xi.tau2.value_or(0.0);
        if (!cached_tau2 || *cached_tau2 != tau2) {
            std::optional<FeatureMap> fm;
            if (uses_kernel) fm.emplace(tmpl.features.count, 3 * tmpl.joints, tmpl.features.seed, std::sqrt(tau2));
            cached = compute_moments(init, fm ? &*fm : nullptr, needs_rbd, tmpl.gravity);
            if (v == Variant::SP2) cached = cached.with_mean_removed(*xi0.pi_hat);
            cached_tau2 = tau2;
        }
        return cached;
    };

    auto evaluate = [&](const Hyperparameters& xi, Eigen::VectorXd* pi_out) {
        const DesignMoments& mom = moments_for(xi);
        if (v == Variant::SP) {
            const Eigen::VectorXd pi = profile_pi(mom, *xi.rho2, *xi.sigma2);
            if (pi_out) *pi_out = pi;
            return nll_from_moments(mom.with_mean_removed(pi), false, true, 0.0, *xi.rho2, *xi.sigma2).value;
        }
        return nll_from_moments(mom, uses_gamma, uses_kernel, xi.gamma2.value_or(0.0),
                                xi.rho2.value_or(0.0), *xi.sigma2)
            .value;
    };

    auto objective = [&](const Eigen::VectorXd& x) {
        if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 700.0) {
            return std::numeric_limits<double>::infinity();
        }
        try {
            return evaluate(unpack(x), nullptr);
        } catch (const SingularSystem&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    const NelderMeadResult nm = minimize_nelder_mead(objective, x0, options.simplex);
    FitResult out;
    out.hyper = unpack(nm.x);
    if (v == Variant::SP) {
        Eigen::VectorXd pi;
        evaluate(out.hyper, &pi);
        out.hyper.pi_mean = pi;
    }
    out.objective = nm.value;
    out.iterations = nm.iterations;
    out.evaluations = nm.evaluations;
    out.trace = nm.trace;
    out.seconds = seconds_since(start);
    if (!nm.converged) {
        log().info("{}-ML: simplex stopped at the iteration limit ({} iterations)", to_string(v),
                   nm.iterations);
    }
    log().debug("{}-ML: nll {} after {} iterations, {:.2f}s", to_string(v), nm.value, nm.iterations,
                out.seconds);
    return out;
}

HyperGrid default_vs_grid(const ModelTemplate& tmpl, const Dataset& train,
                          const std::optional<Eigen::VectorXd>& pi_hat) {
    if (tmpl.variant != Variant::NP && tmpl.variant != Variant::SP2) {
        throw InvalidArgument("the default validation grid covers NP and SP2 only");
    }
    const LeastSquaresFit ls = ls_estimate_pi(train, tmpl.gravity);
    double sse = 0.0;
    for (const Sample& s : train.samples) {
        sse += (s.y - rbd_regressor(s.x, tmpl.gravity).transpose() * ls.pi).squaredNorm();
    }
    const double sigma2 =
        std::max(sse / static_cast<double>(train.size() * static_cast<std::size_t>(train.joints())), 1e-12);
    const double median = median_squared_distance(train.inputs());

    HyperGrid grid;
    constexpr int kSteps = 7;
    for (int a = 0; a < kSteps; ++a) {
        const double tau2 = median * std::pow(10.0, -1.0 + 3.0 * a / (kSteps - 1));
        for (int b = 0; b < kSteps; ++b) {
            const double lambda = std::pow(10.0, -6.0 + 6.0 * b / (kSteps - 1));
            Hyperparameters xi;
            xi.sigma2 = sigma2;
            xi.rho2 = sigma2 / lambda;
            xi.tau2 = tau2;
            if (tmpl.variant == Variant::SP2) xi.pi_hat = pi_hat ? *pi_hat : ls.pi;
            grid.candidates.push_back(std::move(xi));
        }
    }
    return grid;
}

double validation_mse(const ModelTemplate& tmpl, const Hyperparameters& xi, const Dataset& train,
                      const Dataset& val) {
    if (val.empty()) throw InvalidArgument("validation set is empty");
    const ModelSpec spec = tmpl.instantiate(xi);
    const Eigen::VectorXd theta = batch_tikhonov(stacked_design(spec, train), stacked_targets(spec, train),
                                                 prior_precision(spec), *xi.sigma2);
    const Eigen::VectorXd residual = stacked_targets(spec, val) - stacked_design(spec, val) * theta;
    return residual.squaredNorm() / static_cast<double>(val.size());
}

VsResult fit_vs(const ModelTemplate& tmpl, const Dataset& train, const Dataset& val,
                const HyperGrid& grid, Execution exec) {
    const auto start = Clock::now();
    if (grid.candidates.empty()) throw InvalidArgument("hyperparameter grid is empty");
    if (val.empty()) throw InvalidArgument("validation set is empty");
    for (const auto& xi : grid.candidates) xi.validate(tmpl.variant);

    const auto count = static_cast<std::ptrdiff_t>(grid.candidates.size());
    std::vector<double> mse(grid.candidates.size(), std::numeric_limits<double>::infinity());
    std::vector<std::exception_ptr> failures(grid.candidates.size());
    auto score = [&](std::ptrdiff_t i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            mse[k] = validation_mse(tmpl, grid.candidates[k], train, val);
        } catch (const SingularSystem&) {
            // Leave +inf: the candidate is never selected.
        } catch (...) {
            failures[k] = std::current_exception();
        }
    };
    if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t i = 0; i < count; ++i) score(i);
    } else {
        for (std::ptrdiff_t i = 0; i < count; ++i) score(i);
    }
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }

    VsResult out;
    out.index = 0;
    for (std::size_t i = 1; i < mse.size(); ++i) {
        if (mse[i] < mse[out.index]) out.index = i;
    }
    if (!std::isfinite(mse[out.index])) throw SingularSystem("no grid candidate produced a finite fit", -1);
    out.mse = std::move(mse);
    out.fit.hyper = grid.candidates[out.index];
    out.fit.objective = out.mse[out.index];
    out.fit.evaluations = static_cast<int>(count);
    out.fit.seconds = seconds_since(start);
    return out;
}

}  // namespace ridgeline
