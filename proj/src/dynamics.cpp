#include "ridgeline/dynamics.hpp"

#include "ridgeline/error.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace ridgeline {

namespace {

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

JointState::JointState(Eigen::VectorXd q_, Eigen::VectorXd dq_, Eigen::VectorXd ddq_)
    : q(std::move(q_)), dq(std::move(dq_)), ddq(std::move(ddq_)) {}

JointState JointState::from_stacked(const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x.size() == 0 || x.size() % 3 != 0) {
        throw InvalidArgument("stacked joint state length must be a positive multiple of 3, got " +
                              std::to_string(x.size()));
    }
    const Eigen::Index n = x.size() / 3;
    return JointState(x.segment(0, n), x.segment(n, n), x.segment(2 * n, n));
}

Eigen::VectorXd JointState::stacked() const {
    Eigen::VectorXd x(q.size() + dq.size() + ddq.size());
    x << q, dq, ddq;
    return x;
}

void JointState::validate() const {
    if (q.size() < 1 || dq.size() != q.size() || ddq.size() != q.size()) {
        throw InvalidArgument("joint state vectors must share a length n >= 1");
    }
    if (!all_finite(q) || !all_finite(dq) || !all_finite(ddq)) {
        throw InvalidArgument("joint state contains non-finite entries");
    }
}

bool JointState::operator==(const JointState& other) const {
    return q.size() == other.q.size() && dq.size() == other.dq.size() &&
           ddq.size() == other.ddq.size() && q == other.q && dq == other.dq && ddq == other.ddq;
}

void ArmParameters::validate() const {
    for (int i = 0; i < kArmJoints; ++i) {
        if (!(mass[i] > 0.0) || !(length[i] > 0.0) || !(inertia[i] > 0.0)) {
            throw InvalidArgument("arm masses, lengths and inertias must be strictly positive");
        }
        if (!(com[i] >= 0.0) || com[i] > length[i]) {
            throw InvalidArgument("center-of-mass distance must lie in [0, link length]");
        }
        if (!(viscous[i] >= 0.0) || !(coulomb[i] >= 0.0)) {
            throw InvalidArgument("friction coefficients must be nonnegative");
        }
    }
    if (!std::isfinite(gravity)) throw InvalidArgument("gravity must be finite");
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
        throw InvalidArgument("noise standard deviation must be finite and nonnegative");
    }
}

Eigen::VectorXd base_parameters(const ArmParameters& arm) {
    arm.validate();
    const auto& m = arm.mass;
    const auto& l = arm.length;
    const auto& lc = arm.com;
    const auto& I = arm.inertia;
    Eigen::VectorXd pi(kBaseParameterCount);
    pi << m[0] * lc[0] * lc[0] + m[1] * l[0] * l[0] + I[0],
          m[1] * lc[1] * lc[1] + I[1],
          m[1] * l[0] * lc[1],
          m[0] * lc[0] + m[1] * l[0],
          m[1] * lc[1];
    return pi;
}

Eigen::MatrixXd rbd_regressor(const JointState& x, double gravity) {
    x.validate();
    if (x.joints() != kArmJoints) {
        throw InvalidArgument("rbd_regressor supports the two-link arm only, got n = " +
                              std::to_string(x.joints()));
    }
    if (!std::isfinite(gravity)) throw InvalidArgument("gravity must be finite");

    const double q1 = x.q[0], q2 = x.q[1];
    const double dq1 = x.dq[0], dq2 = x.dq[1];
    const double ddq1 = x.ddq[0], ddq2 = x.ddq[1];
    const double c1 = std::cos(q1), c2 = std::cos(q2), s2 = std::sin(q2);
    const double c12 = std::cos(q1 + q2);

    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(kBaseParameterCount, kArmJoints);
    psi(0, 0) = ddq1;
    psi(1, 0) = ddq1 + ddq2;
    psi(2, 0) = (2.0 * ddq1 + ddq2) * c2 - (2.0 * dq1 * dq2 + dq2 * dq2) * s2;
    psi(3, 0) = gravity * c1;
    psi(4, 0) = gravity * c12;

    psi(1, 1) = ddq1 + ddq2;
    psi(2, 1) = ddq1 * c2 + dq1 * dq1 * s2;
    psi(4, 1) = gravity * c12;
    return psi;
}

Eigen::VectorXd friction_torques(const Eigen::VectorXd& dq, const ArmParameters& arm) {
    if (dq.size() != kArmJoints) throw InvalidArgument("friction expects two joint velocities");
    Eigen::VectorXd f(kArmJoints);
    for (int i = 0; i < kArmJoints; ++i) {
        f[i] = arm.viscous[i] * dq[i] + arm.coulomb[i] * sign0(dq[i]);
    }
    return f;
}

Eigen::VectorXd true_torques(const JointState& x, const ArmParameters& arm) {
    const Eigen::VectorXd pi = base_parameters(arm);
    return rbd_regressor(x, arm.gravity).transpose() * pi + friction_torques(x.dq, arm);
}

Eigen::VectorXd simulate_torques(const JointState& x, const ArmParameters& arm,
                                 std::uint64_t seed, std::uint64_t sample_index) {
    Eigen::VectorXd y = true_torques(x, arm);
    if (arm.noise_std > 0.0) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(sample_index),
                          static_cast<std::uint32_t>(sample_index >> 32)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> noise(0.0, arm.noise_std);
        for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += noise(rng);
    }
    return y;
}

void TrajectoryRegime::validate() const {
    const auto n = amplitude.size();
    if (n == 0 || frequency.size() != n || phase.size() != n || offset.size() != n) {
        throw InvalidArgument("trajectory regime needs amplitude/frequency/phase/offset for every joint");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(amplitude[i]) || !std::isfinite(frequency[i]) || !std::isfinite(phase[i]) ||
            !std::isfinite(offset[i])) {
            throw InvalidArgument("trajectory regime entries must be finite");
        }
        if (frequency[i] < 0.0) throw InvalidArgument("trajectory frequencies must be nonnegative");
    }
}

TrajectoryRegime TrajectoryRegime::regime_a() {
    return {{0.9, 0.7}, {0.8, 0.5}, {0.0, std::numbers::pi / 3.0}, {0.3, 0.5}};
}

TrajectoryRegime TrajectoryRegime::regime_b() {
    TrajectoryRegime b = regime_a();
    b.offset = {0.9, -0.3};
    b.frequency = {0.5, 0.9};
    return b;
}

std::vector<JointState> gen_trajectory(const TrajectoryRegime& regime, double duration, double rate) {
    regime.validate();
    if (!(rate > 0.0) || !(duration >= 0.0) || !std::isfinite(rate) || !std::isfinite(duration)) {
        throw InvalidArgument("trajectory duration must be >= 0 and rate > 0");
    }
    const double count_real = duration * rate;
    const double count_rounded = std::round(count_real);
    if (std::abs(count_real - count_rounded) > 1e-9 * std::max(1.0, count_real)) {
        throw InvalidArgument("duration * rate must be an integer sample count");
    }
    for (double f : regime.frequency) {
        if (f >= rate / 2.0) {
            throw InvalidArgument("trajectory frequency " + std::to_string(f) +
                                  " Hz aliases at sampling rate " + std::to_string(rate) + " Hz");
        }
    }

    const auto count = static_cast<std::size_t>(count_rounded);
    const Eigen::Index n = regime.joints();
    std::vector<JointState> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double t = static_cast<double>(k) / rate;
        JointState s{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
        for (Eigen::Index i = 0; i < n; ++i) {
            const double w = 2.0 * std::numbers::pi * regime.frequency[i];
            const double arg = w * t + regime.phase[i];
            const double a = regime.amplitude[i];
            s.q[i] = regime.offset[i] + a * std::sin(arg);
            s.dq[i] = a * w * std::cos(arg);
            s.ddq[i] = -a * w * w * std::sin(arg);
        }
        out.push_back(std::move(s));
    }
    return out;
}

bool Sample::operator==(const Sample& other) const {
    return t == other.t && x == other.x && y.size() == other.y.size() && y == other.y;
}

Eigen::Index Dataset::joints() const { return samples.empty() ? 0 : samples.front().x.joints(); }

Dataset Dataset::slice(std::size_t begin, std::size_t count) const {
    if (begin > samples.size() || count > samples.size() - begin) {
        throw InvalidArgument("dataset slice [" + std::to_string(begin) + ", " +
                              std::to_string(begin + count) + ") exceeds " +
                              std::to_string(samples.size()) + " samples");
    }
    Dataset out;
    out.rate = rate;
    out.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(begin),
                       samples.begin() + static_cast<std::ptrdiff_t>(begin + count));
    return out;
}

Eigen::MatrixXd Dataset::inputs() const {
    const Eigen::Index n = joints();
    Eigen::MatrixXd X(static_cast<Eigen::Index>(samples.size()), 3 * n);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        X.row(static_cast<Eigen::Index>(i)) = samples[i].x.stacked().transpose();
    }
    return X;
}

Eigen::MatrixXd Dataset::torques() const {
    const Eigen::Index n = joints();
    Eigen::MatrixXd Y(static_cast<Eigen::Index>(samples.size()), n);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        Y.row(static_cast<Eigen::Index>(i)) = samples[i].y.transpose();
    }
    return Y;
}

void Dataset::validate() const {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw InvalidArgument("dataset rate must be positive");
    const Eigen::Index n = joints();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Sample& s = samples[i];
        s.x.validate();
        if (s.x.joints() != n || s.y.size() != n) {
            throw InvalidArgument("sample " + std::to_string(i) + " has a different joint count");
        }
        if (!s.y.allFinite() || !std::isfinite(s.t)) {
            throw InvalidArgument("sample " + std::to_string(i) + " contains non-finite values");
        }
        if (i > 0) {
            const double dt = s.t - samples[i - 1].t;
            if (!(dt > 0.0)) throw InvalidArgument("dataset timestamps must be strictly increasing");
            if (std::abs(dt - 1.0 / rate) > 1e-6 / rate) {
                throw InvalidArgument("sample " + std::to_string(i) + " breaks the 1/rate spacing");
            }
        }
    }
}

bool Dataset::operator==(const Dataset& other) const {
    return rate == other.rate && samples == other.samples;
}

Dataset generate_dataset(const TrajectoryRegime& regime, const ArmParameters& arm,
                         double duration, double rate, std::uint64_t seed) {
    arm.validate();
    const std::vector<JointState> traj = gen_trajectory(regime, duration, rate);
    Dataset ds;
    ds.rate = rate;
    ds.samples.reserve(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        Sample s;
        s.t = static_cast<double>(k) / rate;
        s.x = traj[k];
        s.y = simulate_torques(s.x, arm, seed, k);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

}  // namespace ridgeline
