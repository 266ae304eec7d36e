#pragma once

// Task-transfer experiment: hyperparameters and an initial model from the head
// of dataset A, online training on the rest of A, then independent online
// adaptation runs over sequential subsets of dataset B, scored by the relative
// squared prediction error over a fixed horizon.

#include "ridgeline/dynamics.hpp"
#include "ridgeline/estimator.hpp"
#include "ridgeline/hyper.hpp"
#include "ridgeline/models.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ridgeline {

enum class Method { ML, VS, Oracle };

/// One entry of the comparison: a model variant with its estimation method, or
/// the oracle that predicts with the true simulator.
struct VariantRun {
    Variant variant = Variant::P;
    Method method = Method::ML;

    /// "P", "NP-ML", "SP2-VS", ..., "ORACLE".
    std::string name() const;
    static VariantRun parse(std::string_view name);

    bool operator==(const VariantRun&) const = default;
};

/// The seven model/method pairs compared in the experiment plus the oracle.
std::vector<VariantRun> default_variant_runs();

struct ProtocolConfig {
    std::size_t init_count = 1000;
    std::size_t train_a_count = 9000;
    std::size_t subset_count = 5;
    std::size_t subset_len = 2000;
    std::size_t horizon = 25;
    double rate = 20.0;
    double transient_cutoff = 30.0;  ///< seconds
    std::size_t stride = 1;          ///< compute eps_t every `stride` samples
    double vs_train_fraction = 0.7;  ///< head of the init window used for VS training
    std::vector<VariantRun> variants = default_variant_runs();
    FeatureConfig features;
    double gravity = 9.81;
    int jobs = 0;  ///< worker threads, 0 = OpenMP default

    /// First series index counted as steady state.
    std::size_t cutoff_index() const;
    void validate() const;
};

struct PredictionError {
    double eps = 0.0;                 ///< mean over defined channels (NaN if none)
    std::vector<double> per_channel;  ///< NaN where undefined
    std::size_t undefined_channels = 0;
};

/// eps^(k) = sum_s (y - y_hat)^2 / sum_s y^2 per channel, averaged over channels.
/// A channel with zero denominator is reported undefined and left out of the mean.
PredictionError prediction_error(const Eigen::Ref<const Eigen::MatrixXd>& actual,
                                 const Eigen::Ref<const Eigen::MatrixXd>& predicted);

/// A model frozen at some time: evaluation never sees later data.
class FrozenPredictor {
public:
    FrozenPredictor(const ModelSpec& spec, const RlsState& state);
    const Eigen::VectorXd& theta() const { return theta_; }
    Eigen::VectorXd operator()(const JointState& x) const;

private:
    const ModelSpec* spec_;
    Eigen::VectorXd theta_;
};

struct SummaryStats {
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double whisker_low = 0.0;   ///< smallest value >= q1 - 1.5 IQR
    double whisker_high = 0.0;  ///< largest value <= q3 + 1.5 IQR
    std::size_t count = 0;
};

/// Quantile by linear interpolation between order statistics at q (n - 1).
double quantile(std::span<const double> sorted, double q);
/// Box-plot statistics; NaN entries are ignored. Throws on an all-NaN input.
SummaryStats summarize(std::span<const double> values);

struct SeriesSummary {
    std::vector<double> mean_series;  ///< pointwise mean across subsets
    SummaryStats steady;              ///< of mean_series from the cutoff on
    double transient_mean = 0.0;      ///< mean of mean_series before the cutoff
};

/// Pointwise average of equal-length subset series plus steady/transient statistics.
SeriesSummary aggregate_report(const std::vector<std::vector<double>>& subset_series,
                               std::size_t cutoff_index);

struct VariantReport {
    std::string name;
    bool ok = false;
    std::string error;
    std::optional<Hyperparameters> hyper;
    FitResult fit;
    std::vector<std::vector<double>> subset_series;
    SeriesSummary summary;
    std::size_t undefined_channels = 0;
    double seconds_stream = 0.0;
};

struct ExperimentReport {
    ProtocolConfig config;
    std::vector<double> t_seconds;        ///< time axis of every series
    std::vector<VariantReport> variants;  ///< in config order
    /// T sigma_sim^2 / sum y^2 averaged like the eps series (needs the arm).
    std::optional<SeriesSummary> noise_floor;

    const VariantReport* find(std::string_view name) const;
    std::vector<std::string> failed() const;
};

/// Online adaptation on one subset starting from `start`: eps_t at every stride
/// for t = 0 .. len - T - 1, the model at t having absorbed samples 0..t.
std::vector<double> adaptation_series(const ModelSpec& spec, const RlsState& start, const Dataset& subset,
                                      std::size_t horizon, std::size_t stride,
                                      std::size_t* undefined_channels = nullptr);

/// Same schedule with the noise-free simulator as predictor.
std::vector<double> oracle_series(const ArmParameters& arm, const Dataset& subset, std::size_t horizon,
                                  std::size_t stride);

/// Runs the full protocol. `arm` enables the oracle run and the noise floor.
ExperimentReport run_protocol(const ProtocolConfig& cfg, const Dataset& ds_a, const Dataset& ds_b,
                              const std::optional<ArmParameters>& arm = std::nullopt,
                              Execution exec = Execution::parallel);

}  // namespace ridgeline
