#include "oracles.hpp"

#include "ridgeline/dynamics.hpp"
#include "ridgeline/error.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace ridgeline;

namespace {

JointState state2(double q1, double q2, double dq1 = 0, double dq2 = 0, double ddq1 = 0, double ddq2 = 0) {
    return JointState(Eigen::Vector2d(q1, q2), Eigen::Vector2d(dq1, dq2), Eigen::Vector2d(ddq1, ddq2));
}

}  // namespace

TEST_CASE("regressor at rest keeps only the gravity columns") {
    const Eigen::MatrixXd psi = rbd_regressor(state2(0, 0), 9.81);
    REQUIRE(psi.rows() == 5);
    REQUIRE(psi.cols() == 2);
    Eigen::VectorXd j1(5), j2(5);
    j1 << 0, 0, 0, 9.81, 9.81;
    j2 << 0, 0, 0, 0, 9.81;
    CHECK((psi.col(0) - j1).norm() == 0.0);
    CHECK((psi.col(1) - j2).norm() == 0.0);
}

TEST_CASE("regressor with the elbow at a right angle zeroes the pi3 row") {
    const Eigen::MatrixXd psi = rbd_regressor(state2(0, std::numbers::pi / 2), 9.81);
    CHECK(std::abs(psi(2, 0)) < 1e-12);
    CHECK(std::abs(psi(2, 1)) < 1e-12);
    CHECK(std::abs(psi(4, 1)) < 1e-12);
}

TEST_CASE("regressor times base parameters matches the closed-form M, C, G dynamics") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        ArmParameters arm = oracle::random_arm(rng);
        const JointState x = oracle::random_state(rng);
        const Eigen::VectorXd tau = rbd_regressor(x, arm.gravity).transpose() * base_parameters(arm);
        const Eigen::Vector2d ref = oracle::mcg_torques(x, arm);
        CHECK((tau - ref).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + ref.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("base parameters of the default arm") {
    const Eigen::VectorXd pi = base_parameters(ArmParameters{});
    CHECK(pi[0] == doctest::Approx(1.0 * 0.0625 + 0.8 * 0.25 + 0.25 / 12.0).epsilon(1e-14));
    CHECK(pi[1] == doctest::Approx(0.8 * 0.04 + 0.8 * 0.16 / 12.0).epsilon(1e-14));
    CHECK(pi[2] == doctest::Approx(0.08).epsilon(1e-14));
    CHECK(pi[3] == doctest::Approx(0.65).epsilon(1e-14));
    CHECK(pi[4] == doctest::Approx(0.16).epsilon(1e-14));
}

TEST_CASE("regressor rejects wrong joint counts and non-finite input") {
    const JointState three(Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero());
    CHECK_THROWS_AS(rbd_regressor(three, 9.81), InvalidArgument);
    CHECK_THROWS_AS(rbd_regressor(state2(std::numeric_limits<double>::quiet_NaN(), 0), 9.81), InvalidArgument);
}

TEST_CASE("simulator without friction and noise is the rigid-body model") {
    std::mt19937_64 rng(5);
    ArmParameters arm = oracle::random_arm(rng);
    arm.viscous = {0, 0};
    arm.coulomb = {0, 0};
    arm.noise_std = 0.0;
    const JointState x = oracle::random_state(rng);
    const Eigen::VectorXd y = simulate_torques(x, arm, 3, 17);
    CHECK((y - rbd_regressor(x, arm.gravity).transpose() * base_parameters(arm)).norm() == 0.0);
}

TEST_CASE("Coulomb friction vanishes at zero velocity") {
    ArmParameters arm;
    arm.noise_std = 0.0;
    CHECK(friction_torques(Eigen::Vector2d::Zero(), arm).norm() == 0.0);
    const Eigen::VectorXd f = friction_torques(Eigen::Vector2d(1.0, -2.0), arm);
    CHECK(f[0] == doctest::Approx(0.3 + 0.4));
    CHECK(f[1] == doctest::Approx(-0.4 - 0.25));
    const JointState rest = state2(0.3, -0.2);
    CHECK((simulate_torques(rest, arm, 1) - rbd_regressor(rest, arm.gravity).transpose() * base_parameters(arm))
              .norm() == 0.0);
}

TEST_CASE("simulator noise is a pure function of seed and sample index") {
    const ArmParameters arm;
    const JointState x = state2(0.1, 0.2, 0.3, 0.4, 0.5, 0.6);
    CHECK(simulate_torques(x, arm, 9, 4) == simulate_torques(x, arm, 9, 4));
    CHECK(simulate_torques(x, arm, 9, 4) != simulate_torques(x, arm, 9, 5));
    CHECK(simulate_torques(x, arm, 9, 4) != simulate_torques(x, arm, 10, 4));

    const Eigen::VectorXd clean = true_torques(x, arm);
    double sum = 0.0, sum2 = 0.0;
    const int draws = 20000;
    for (int k = 0; k < draws; ++k) {
        const double e = simulate_torques(x, arm, 1, static_cast<std::uint64_t>(k))[0] - clean[0];
        sum += e;
        sum2 += e * e;
    }
    CHECK(std::abs(sum / draws) < 0.002);
    CHECK(std::sqrt(sum2 / draws) == doctest::Approx(arm.noise_std).epsilon(0.03));
}

TEST_CASE("arm parameter validation") {
    ArmParameters arm;
    arm.com[1] = 0.5;
    CHECK_THROWS_AS(arm.validate(), InvalidArgument);
    arm = ArmParameters{};
    arm.mass[0] = 0.0;
    CHECK_THROWS_AS(arm.validate(), InvalidArgument);
    arm = ArmParameters{};
    arm.noise_std = -1.0;
    CHECK_THROWS_AS(simulate_torques(state2(0, 0), arm, 1), InvalidArgument);
}

TEST_CASE("trajectory generation") {
    SUBCASE("zero amplitude holds the offset") {
        TrajectoryRegime r{{0.0, 0.0}, {0.5, 0.7}, {0.1, 0.2}, {0.4, -0.6}};
        for (const JointState& x : gen_trajectory(r, 2.0, 20.0)) {
            CHECK(x.q[0] == 0.4);
            CHECK(x.q[1] == -0.6);
            CHECK(x.dq.norm() == 0.0);
            CHECK(x.ddq.norm() == 0.0);
        }
    }
    SUBCASE("acceleration is -(2 pi f)^2 (q - c)") {
        const TrajectoryRegime r = TrajectoryRegime::regime_a();
        for (const JointState& x : gen_trajectory(r, 20.0, 20.0)) {
            for (int i = 0; i < 2; ++i) {
                const double w = 2.0 * std::numbers::pi * r.frequency[i];
                CHECK(x.ddq[i] == doctest::Approx(-w * w * (x.q[i] - r.offset[i])).epsilon(1e-12).scale(1.0));
            }
        }
    }
    SUBCASE("velocity matches a central difference of position") {
        const TrajectoryRegime r = TrajectoryRegime::regime_b();
        const double rate = 2000.0;
        const auto traj = gen_trajectory(r, 1.0, rate);
        for (std::size_t k = 1; k + 1 < traj.size(); k += 97) {
            for (int i = 0; i < 2; ++i) {
                const double fd = (traj[k + 1].q[i] - traj[k - 1].q[i]) * rate / 2.0;
                CHECK(traj[k].dq[i] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
            }
        }
    }
    SUBCASE("500 s at 20 Hz is exactly 10000 samples") {
        CHECK(gen_trajectory(TrajectoryRegime::regime_a(), 500.0, 20.0).size() == 10000);
    }
    SUBCASE("aliasing and fractional sample counts are rejected") {
        TrajectoryRegime r = TrajectoryRegime::regime_a();
        r.frequency[0] = 10.0;
        CHECK_THROWS_AS(gen_trajectory(r, 1.0, 20.0), InvalidArgument);
        CHECK_THROWS_AS(gen_trajectory(TrajectoryRegime::regime_a(), 1.01, 20.0), InvalidArgument);
    }
    SUBCASE("regime B shifts offsets and frequencies") {
        const TrajectoryRegime a = TrajectoryRegime::regime_a();
        const TrajectoryRegime b = TrajectoryRegime::regime_b();
        CHECK(b.offset[0] - a.offset[0] == doctest::Approx(0.6));
        CHECK(b.offset[1] - a.offset[1] == doctest::Approx(-0.8));
        CHECK(b.frequency == std::vector<double>{0.5, 0.9});
        CHECK(a.frequency == std::vector<double>{0.8, 0.5});
    }
}

TEST_CASE("dataset container") {
    const Dataset ds = generate_dataset(TrajectoryRegime::regime_a(), ArmParameters{}, 5.0, 20.0, 1);
    CHECK(ds.size() == 100);
    CHECK(ds.joints() == 2);
    CHECK_NOTHROW(ds.validate());
    CHECK(ds.inputs().rows() == 100);
    CHECK(ds.inputs().cols() == 6);
    CHECK(ds.torques().cols() == 2);

    const Dataset part = ds.slice(10, 5);
    CHECK(part.size() == 5);
    CHECK(part.samples.front() == ds.samples[10]);
    CHECK_THROWS_AS(ds.slice(99, 2), InvalidArgument);

    Dataset broken = ds;
    broken.samples[3].t = broken.samples[2].t;
    CHECK_THROWS_AS(broken.validate(), InvalidArgument);
    broken = ds;
    broken.samples[3].t += 0.01;
    CHECK_THROWS_AS(broken.validate(), InvalidArgument);
    broken = ds;
    broken.samples[4].y = Eigen::Vector3d::Zero();
    CHECK_THROWS_AS(broken.validate(), InvalidArgument);
}

TEST_CASE("joint state stacking") {
    const JointState x = state2(1, 2, 3, 4, 5, 6);
    Eigen::VectorXd s(6);
    s << 1, 2, 3, 4, 5, 6;
    CHECK(x.stacked() == s);
    CHECK(JointState::from_stacked(s) == x);
    CHECK_THROWS_AS(JointState::from_stacked(Eigen::VectorXd::Zero(5)), InvalidArgument);
}

TEST_CASE("static torques are the gradient of the potential energy") {
    const Eigen::VectorXd pi = base_parameters(ArmParameters{});
    const double g = 9.81;
    auto potential = [&](double q1, double q2) { return g * (pi[3] * std::sin(q1) + pi[4] * std::sin(q1 + q2)); };
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const double h = 1e-5;
    for (int k = 0; k < 50; ++k) {
        const double q1 = u(rng), q2 = u(rng);
        const Eigen::VectorXd tau = rbd_regressor(state2(q1, q2), g).transpose() * pi;
        const double d1 = (potential(q1 + h, q2) - potential(q1 - h, q2)) / (2 * h);
        const double d2 = (potential(q1, q2 + h) - potential(q1, q2 - h)) / (2 * h);
        CHECK(std::abs(tau[0] - d1) < 1e-6);
        CHECK(std::abs(tau[1] - d2) < 1e-6);
    }
}
