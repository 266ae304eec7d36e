#pragma once

// Two-link planar arm used as the data source: regressor, torque simulator,
// sinusoidal trajectories and the dataset container.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <vector>

namespace ridgeline {

/// Joint positions, velocities and accelerations of an n-joint arm.
struct JointState {
    Eigen::VectorXd q;
    Eigen::VectorXd dq;
    Eigen::VectorXd ddq;

    JointState() = default;
    JointState(Eigen::VectorXd q_, Eigen::VectorXd dq_, Eigen::VectorXd ddq_);

    /// Splits a stacked vector [q; dq; ddq] of length 3n.
    static JointState from_stacked(const Eigen::Ref<const Eigen::VectorXd>& x);

    Eigen::Index joints() const { return q.size(); }
    /// x = [q; dq; ddq], length 3n.
    Eigen::VectorXd stacked() const;
    /// Throws InvalidArgument on ragged or non-finite vectors.
    void validate() const;

    bool operator==(const JointState& other) const;
};

/// Physical description of the simulated arm. All vectors are per joint.
struct ArmParameters {
    std::array<double, 2> mass{1.0, 0.8};
    std::array<double, 2> length{0.5, 0.4};
    std::array<double, 2> com{0.25, 0.2};
    std::array<double, 2> inertia{1.0 * 0.5 * 0.5 / 12.0, 0.8 * 0.4 * 0.4 / 12.0};
    std::array<double, 2> viscous{0.3, 0.2};
    std::array<double, 2> coulomb{0.4, 0.25};
    double gravity = 9.81;
    double noise_std = 0.05;

    void validate() const;
};

inline constexpr int kArmJoints = 2;
inline constexpr int kBaseParameterCount = 5;

/// Identifiable inertial parameter combinations:
///   pi1 = m1 lc1^2 + m2 l1^2 + I1,  pi2 = m2 lc2^2 + I2,  pi3 = m2 l1 lc2,
///   pi4 = m1 lc1 + m2 l1,           pi5 = m2 lc2.
Eigen::VectorXd base_parameters(const ArmParameters& arm);

/// RBD regressor psi(x) in R^{5 x 2}: psi(x)^T pi is the friction-free torque.
/// Column j holds the coefficients of joint j's torque.
Eigen::MatrixXd rbd_regressor(const JointState& x, double gravity);

/// Joint friction f_i = Fv_i dq_i + Fc_i sign(dq_i), with sign(0) = 0.
Eigen::VectorXd friction_torques(const Eigen::VectorXd& dq, const ArmParameters& arm);

/// Noise-free torque: psi(x)^T pi(arm) + friction(dq).
Eigen::VectorXd true_torques(const JointState& x, const ArmParameters& arm);

/// Measured torque: true_torques plus N(0, noise_std^2) per joint. The noise
/// draw is a pure function of (seed, sample_index).
Eigen::VectorXd simulate_torques(const JointState& x, const ArmParameters& arm,
                                 std::uint64_t seed, std::uint64_t sample_index = 0);

/// Per-joint sinusoid q_i(t) = offset_i + amplitude_i sin(2 pi f_i t + phase_i).
struct TrajectoryRegime {
    std::vector<double> amplitude;
    std::vector<double> frequency;
    std::vector<double> phase;
    std::vector<double> offset;

    Eigen::Index joints() const { return static_cast<Eigen::Index>(amplitude.size()); }
    void validate() const;

    /// Motion used for the source task.
    static TrajectoryRegime regime_a();
    /// Shifted offsets and frequencies: the target task.
    static TrajectoryRegime regime_b();
};

/// Samples the regime at t_k = k / rate for k in [0, duration * rate).
std::vector<JointState> gen_trajectory(const TrajectoryRegime& regime, double duration, double rate);

struct Sample {
    double t = 0.0;
    JointState x;
    Eigen::VectorXd y;

    bool operator==(const Sample& other) const;
};

/// Time-ordered samples recorded at a fixed rate.
struct Dataset {
    std::vector<Sample> samples;
    double rate = 20.0;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    /// Joint count, 0 for an empty dataset.
    Eigen::Index joints() const;

    /// Copy of samples [begin, begin + count).
    Dataset slice(std::size_t begin, std::size_t count) const;
    /// N x 3n matrix of stacked inputs.
    Eigen::MatrixXd inputs() const;
    /// N x n matrix of torques.
    Eigen::MatrixXd torques() const;

    /// Checks shared n, finiteness and a strictly increasing time axis.
    void validate() const;

    bool operator==(const Dataset& other) const;
};

/// Trajectory of the regime sampled at `rate`, torques from simulate_torques.
Dataset generate_dataset(const TrajectoryRegime& regime, const ArmParameters& arm,
                         double duration, double rate, std::uint64_t seed);

}  // namespace ridgeline
