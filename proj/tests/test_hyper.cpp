#include "oracles.hpp"

#include "ridgeline/error.hpp"
#include "ridgeline/hyper.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace ridgeline;

namespace {

Hyperparameters random_hyper(std::mt19937_64& rng, Variant v) {
    std::uniform_real_distribution<double> logu(-3.0, 1.0);
    auto draw = [&] { return std::pow(10.0, logu(rng)); };
    Hyperparameters h;
    if (v == Variant::P || v == Variant::SPK) h.gamma2 = draw();
    if (v != Variant::P) {
        h.rho2 = draw();
        h.tau2 = 1.0 + 10.0 * draw();
    }
    h.sigma2 = draw();
    if (v == Variant::SP) h.pi_mean = base_parameters(ArmParameters{}) * 0.9;
    if (v == Variant::SP2) h.pi_hat = base_parameters(ArmParameters{}) * 1.2;
    return h;
}

ArmParameters frictionless(double noise) {
    ArmParameters arm;
    arm.viscous = {0, 0};
    arm.coulomb = {0, 0};
    arm.noise_std = noise;
    return arm;
}

constexpr Variant kAll[] = {Variant::P, Variant::NP, Variant::SP, Variant::SP2, Variant::SPK};

}  // namespace

TEST_CASE("scalar NLL by hand") {
    DesignMoments mom;
    mom.samples = 1;
    mom.outputs = 1;
    mom.has_features = true;
    mom.feat_feat = Eigen::MatrixXd::Ones(1, 1);
    mom.feat_y = Eigen::MatrixXd::Zero(1, 1);
    mom.yy = 0.0;
    const NllEvaluation e = nll_from_moments(mom, false, true, 0.0, 1.0, 1.0);
    CHECK(e.value == doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
    CHECK(e.value == doctest::Approx(1.26552).epsilon(1e-5));
    CHECK(e.quadratic_term == 0.0);
}

TEST_CASE("weight-space NLL equals the dense evaluation") {
    std::mt19937_64 rng(21);
    for (Variant v : kAll) {
        for (int trial = 0; trial < 4; ++trial) {
            ModelTemplate tmpl{v, 2, FeatureConfig{8, static_cast<std::uint64_t>(trial + 1)}, 9.81};
            const Hyperparameters xi = random_hyper(rng, v);
            const Dataset ds = oracle::random_dataset(rng, ArmParameters{}, 10 + 10 * trial, 3);
            const ModelSpec spec = tmpl.instantiate(xi);
            const oracle::Stacked s = oracle::stack(spec, ds);
            const oracle::DenseNll ref = oracle::dense_nll(s.Phi, s.y, build_prior(spec), *xi.sigma2);
            const NllEvaluation e = nll(tmpl, xi, ds);
            CHECK(std::abs(e.value - ref.value) <= 1e-6 * std::abs(ref.value));
            CHECK(std::abs(e.logdet_term - ref.logdet_term) <= 1e-6 * (1.0 + std::abs(ref.logdet_term)));
            CHECK(std::abs(e.quadratic_term - ref.quadratic_term) <= 1e-6 * (1.0 + ref.quadratic_term));
            CHECK(e.samples == static_cast<long>(ds.size()));
        }
    }
}

TEST_CASE("zero targets give a zero quadratic term") {
    std::mt19937_64 rng(22);
    Dataset ds = oracle::random_dataset(rng, ArmParameters{}, 20, 1);
    for (Sample& s : ds.samples) s.y.setZero();
    for (Variant v : {Variant::P, Variant::NP, Variant::SPK}) {
        const NllEvaluation e = nll(ModelTemplate{v, 2, FeatureConfig{5, 1}, 9.81}, random_hyper(rng, v), ds);
        CHECK(e.quadratic_term == doctest::Approx(0.0).scale(1e-12));
    }
}

TEST_CASE("NLL evaluation is pure") {
    std::mt19937_64 rng(23);
    const Dataset ds = oracle::random_dataset(rng, ArmParameters{}, 200, 1);
    const ModelTemplate tmpl{Variant::SPK, 2, FeatureConfig{20, 4}, 9.81};
    const Hyperparameters xi = random_hyper(rng, Variant::SPK);
    CHECK(nll(tmpl, xi, ds).value == nll(tmpl, xi, ds).value);
}

TEST_CASE("NLL rejects bad input") {
    const ModelTemplate tmpl{Variant::NP, 2, FeatureConfig{5, 1}, 9.81};
    std::mt19937_64 rng(24);
    Hyperparameters xi = random_hyper(rng, Variant::NP);
    CHECK_THROWS_AS(nll(tmpl, xi, Dataset{}), InvalidArgument);
    xi.sigma2 = 0.0;
    CHECK_THROWS_AS(nll(tmpl, xi, oracle::random_dataset(rng, ArmParameters{}, 5, 1)), InvalidArgument);
}

TEST_CASE("profiled pi") {
    const ModelTemplate tmpl{Variant::SP, 2, FeatureConfig{10, 2}, 9.81};

    SUBCASE("tends to ordinary least squares when the kernel vanishes") {
        std::mt19937_64 rng(25);
        const Dataset ds = oracle::random_dataset(rng, ArmParameters{}, 100, 2);
        Hyperparameters xi;
        xi.rho2 = 1e-8;
        xi.tau2 = 4.0;
        xi.sigma2 = 1e6;
        CHECK(oracle::rel_err(profile_pi(tmpl, xi, ds), ls_estimate_pi(ds).pi) < 1e-6);
    }
    SUBCASE("recovers the simulator parameters") {
        const ArmParameters arm = frictionless(0.01);
        const Dataset ds = generate_dataset(TrajectoryRegime::regime_a(), arm, 50.0, 20.0, 5);
        REQUIRE(ds.size() == 1000);
        Hyperparameters xi;
        xi.rho2 = 1e-6;
        xi.tau2 = 4.0;
        xi.sigma2 = 1e-4;
        const Eigen::VectorXd pi = profile_pi(tmpl, xi, ds);
        CHECK((pi - base_parameters(arm)).cwiseAbs().maxCoeff() < 1e-3);
    }
    SUBCASE("is a minimum of the NLL over pi") {
        std::mt19937_64 rng(26);
        const Dataset ds = oracle::random_dataset(rng, ArmParameters{}, 60, 4);
        Hyperparameters xi;
        xi.rho2 = 0.5;
        xi.tau2 = 3.0;
        xi.sigma2 = 0.1;
        const Eigen::VectorXd pi = profile_pi(tmpl, xi, ds);
        xi.pi_mean = pi;
        const double best = nll(tmpl, xi, ds).value;
        std::normal_distribution<double> z;
        for (int k = 0; k < 20; ++k) {
            Eigen::VectorXd dir(5);
            for (int i = 0; i < 5; ++i) dir[i] = z(rng);
            xi.pi_mean = pi + 1e-3 * dir.normalized();
            CHECK(nll(tmpl, xi, ds).value >= best);
        }

        // Gradient in pi: -Psi'V^{-1}(y - Psi pi), from the dense path.
        xi.pi_mean = pi;
        const ModelSpec spec = tmpl.instantiate(xi);
        const oracle::Stacked s = oracle::stack(spec, ds);
        Eigen::MatrixXd V = s.Phi * build_prior(spec).asDiagonal() * s.Phi.transpose();
        V.diagonal().array() += *xi.sigma2;
        Eigen::MatrixXd Psi(s.Phi.rows(), 5);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            Psi.middleRows(static_cast<Eigen::Index>(2 * i), 2) = rbd_regressor(ds.samples[i].x, 9.81).transpose();
        }
        const Eigen::VectorXd grad = Psi.transpose() * V.llt().solve(s.y);
        CHECK(grad.norm() < 1e-8 * (1.0 + (Psi.transpose() * V.llt().solve(Psi * pi)).norm()));
    }
    SUBCASE("rank deficiency is an error") {
        Dataset one;
        Sample s;
        s.x = JointState(Eigen::Vector2d(0.1, 0.2), Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero());
        s.y = Eigen::Vector2d(1.0, 1.0);
        one.samples.push_back(s);
        Hyperparameters xi;
        xi.rho2 = 1.0;
        xi.tau2 = 1.0;
        xi.sigma2 = 1.0;
        CHECK_THROWS_AS(profile_pi(tmpl, xi, one), SingularSystem);
    }
}

TEST_CASE("maximum likelihood fitting") {
    const Dataset ds = generate_dataset(TrajectoryRegime::regime_a(), ArmParameters{}, 25.0, 20.0, 7);

    SUBCASE("every variant improves on its starting point with a non-increasing trace") {
        for (Variant v : kAll) {
            const ModelTemplate tmpl{v, 2, FeatureConfig{15, 3}, 9.81};
            const Hyperparameters xi0 = default_initial_guess(tmpl, ds);
            Hyperparameters start = xi0;
            if (v == Variant::SP) start.pi_mean = profile_pi(tmpl, xi0, ds);
            const FitResult fit = fit_ml(tmpl, ds, xi0);
            CHECK_NOTHROW(fit.hyper.validate(v));
            CHECK(fit.objective <= nll(tmpl, start, ds).value);
            CHECK(fit.objective == doctest::Approx(nll(tmpl, fit.hyper, ds).value).epsilon(1e-12));
            for (std::size_t i = 1; i < fit.trace.size(); ++i) CHECK(fit.trace[i] <= fit.trace[i - 1]);
            if (v == Variant::SP2) CHECK(*fit.hyper.pi_hat == *xi0.pi_hat);
        }
    }
    SUBCASE("scaling the data by sqrt 2 leaves tau unchanged") {
        const ModelTemplate tmpl{Variant::NP, 2, FeatureConfig{30, 5}, 9.81};
        const FeatureMap truth(30, 6, 77, 1.5);
        const Dataset base = oracle::np_prior_dataset(3, truth, 2, 1.0, 0.01, 400);
        Dataset scaled = base;
        for (Sample& s : scaled.samples) s.y *= std::sqrt(2.0);
        const FitResult a = fit_ml(tmpl, base, default_initial_guess(tmpl, base));
        const FitResult b = fit_ml(tmpl, scaled, default_initial_guess(tmpl, scaled));
        CHECK(*b.hyper.tau2 == doctest::Approx(*a.hyper.tau2).epsilon(0.1));
        CHECK(*b.hyper.rho2 == doctest::Approx(2.0 * *a.hyper.rho2).epsilon(0.1));
        CHECK(*b.hyper.sigma2 == doctest::Approx(2.0 * *a.hyper.sigma2).epsilon(0.1));
    }
}

TEST_CASE("initial guess") {
    const Dataset ds = generate_dataset(TrajectoryRegime::regime_a(), ArmParameters{}, 10.0, 20.0, 1);
    for (Variant v : kAll) {
        const Hyperparameters xi = default_initial_guess(ModelTemplate{v, 2, FeatureConfig{}, 9.81}, ds);
        CHECK_NOTHROW(xi.validate(v));
    }
    CHECK_THROWS_AS(default_initial_guess(ModelTemplate{}, ds.slice(0, 1)), InvalidArgument);
}

TEST_CASE("median squared distance") {
    Eigen::MatrixXd x(3, 1);
    x << 0, 1, 3;
    CHECK(median_squared_distance(x) == 4.0);
    Eigen::MatrixXd y(4, 1);
    y << 0, 1, 2, 4;
    // Squared distances 1, 4, 16, 1, 9, 4: median of the sorted six is (4 + 4) / 2.
    CHECK(median_squared_distance(y) == 4.0);
}

TEST_CASE("validation-set selection") {
    const Dataset ds = generate_dataset(TrajectoryRegime::regime_a(), ArmParameters{}, 25.0, 20.0, 9);
    const Dataset train = ds.slice(0, 350);
    const Dataset val = ds.slice(350, 150);
    const ModelTemplate tmpl{Variant::NP, 2, FeatureConfig{10, 2}, 9.81};
    const HyperGrid grid = default_vs_grid(tmpl, train);
    REQUIRE(grid.candidates.size() == 49);

    SUBCASE("grid spans the declared ranges") {
        double tmin = 1e300, tmax = 0.0, lmin = 1e300, lmax = 0.0;
        for (const auto& c : grid.candidates) {
            tmin = std::min(tmin, *c.tau2);
            tmax = std::max(tmax, *c.tau2);
            lmin = std::min(lmin, *c.sigma2 / *c.rho2);
            lmax = std::max(lmax, *c.sigma2 / *c.rho2);
        }
        CHECK(tmax / tmin == doctest::Approx(1000.0).epsilon(1e-12));
        CHECK(lmin == doctest::Approx(1e-6).epsilon(1e-12));
        CHECK(lmax == doctest::Approx(1.0).epsilon(1e-12));
        CHECK_THROWS_AS(default_vs_grid(ModelTemplate{Variant::SP, 2, FeatureConfig{}, 9.81}, train),
                        InvalidArgument);
    }
    SUBCASE("single candidate") {
        HyperGrid one{{grid.candidates[10]}};
        const VsResult r = fit_vs(tmpl, train, val, one);
        CHECK(r.index == 0);
        CHECK(*r.fit.hyper.tau2 == *grid.candidates[10].tau2);
        CHECK(r.fit.objective == r.mse[0]);
    }
    SUBCASE("argmin over the full grid, serial equals parallel") {
        const VsResult par = fit_vs(tmpl, train, val, grid, Execution::parallel);
        const VsResult ser = fit_vs(tmpl, train, val, grid, Execution::serial);
        CHECK(par.mse == ser.mse);
        CHECK(par.index == ser.index);
        for (double m : par.mse) CHECK(par.mse[par.index] <= m);
        CHECK(par.mse[3] == validation_mse(tmpl, grid.candidates[3], train, val));
    }
    SUBCASE("ties go to the earliest candidate and order does not change scores") {
        HyperGrid dup{{grid.candidates[5], grid.candidates[7], grid.candidates[5]}};
        HyperGrid rev{{grid.candidates[5], grid.candidates[7], grid.candidates[5]}};
        std::reverse(rev.candidates.begin(), rev.candidates.end());
        const VsResult a = fit_vs(tmpl, train, val, dup);
        const VsResult b = fit_vs(tmpl, train, val, rev);
        CHECK(a.mse[0] == a.mse[2]);
        CHECK(a.mse[1] == b.mse[1]);
        CHECK(a.mse[0] == b.mse[0]);
        if (a.mse[0] <= a.mse[1]) CHECK(a.index == 0);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(fit_vs(tmpl, train, Dataset{}, grid), InvalidArgument);
        CHECK_THROWS_AS(fit_vs(tmpl, train, val, HyperGrid{}), InvalidArgument);
    }
    SUBCASE("SP2 grid carries the residual parameters") {
        const ModelTemplate sp2{Variant::SP2, 2, FeatureConfig{10, 2}, 9.81};
        const Eigen::VectorXd pi = ls_estimate_pi(ds).pi;
        for (const auto& c : default_vs_grid(sp2, train, pi).candidates) CHECK(*c.pi_hat == pi);
    }
}
