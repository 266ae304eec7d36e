#include "ridgeline/harness.hpp"

#include "ridgeline/error.hpp"
#include "ridgeline/log.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

namespace ridgeline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t series_length(std::size_t len, std::size_t horizon, std::size_t stride) {
    if (len <= horizon) return 0;
    return (len - horizon + stride - 1) / stride;
}

void check_schedule(const Dataset& subset, std::size_t horizon, std::size_t stride) {
    if (horizon < 1) throw InvalidArgument("horizon must be >= 1");
    if (stride < 1) throw InvalidArgument("stride must be >= 1");
    if (subset.size() <= horizon) {
        throw InvalidArgument("subset of " + std::to_string(subset.size()) +
                              " samples is too short for horizon " + std::to_string(horizon));
    }
}

// Rows t+1..t+T of the stacked (sample-major) vector v as a T x n matrix.
Eigen::MatrixXd horizon_block(const Eigen::VectorXd& v, std::size_t t, std::size_t horizon,
                              Eigen::Index n) {
    const auto first = static_cast<Eigen::Index>(t + 1) * n;
    const auto len = static_cast<Eigen::Index>(horizon) * n;
    return Eigen::Map<const Eigen::MatrixXd>(v.data() + first, n, len / n).transpose();
}

Eigen::VectorXd stacked_torques(const Dataset& ds) {
    const Eigen::Index n = ds.joints();
    Eigen::VectorXd y(static_cast<Eigen::Index>(ds.size()) * n);
    for (std::size_t s = 0; s < ds.size(); ++s) y.segment(static_cast<Eigen::Index>(s) * n, n) = ds.samples[s].y;
    return y;
}

}  // namespace

std::string VariantRun::name() const {
    if (method == Method::Oracle) return "ORACLE";
    std::string out(to_string(variant));
    if (variant == Variant::P) return out;
    return out + (method == Method::ML ? "-ML" : "-VS");
}

VariantRun VariantRun::parse(std::string_view name) {
    if (name == "ORACLE") return {Variant::P, Method::Oracle};
    const auto dash = name.find('-');
    VariantRun run;
    run.variant = parse_variant(name.substr(0, dash));
    if (dash == std::string_view::npos) {
        if (run.variant != Variant::P) {
            throw InvalidArgument("variant '" + std::string(name) + "' needs a method suffix (-ML or -VS)");
        }
        return run;
    }
    const std::string_view method = name.substr(dash + 1);
    if (method == "ML") run.method = Method::ML;
    else if (method == "VS") run.method = Method::VS;
    else throw InvalidArgument("unknown estimation method '" + std::string(method) + "'");
    if (run.method == Method::VS && run.variant != Variant::NP && run.variant != Variant::SP2) {
        throw InvalidArgument("validation-set estimation is only available for NP and SP2");
    }
    return run;
}

std::vector<VariantRun> default_variant_runs() {
    return {{Variant::P, Method::ML},    {Variant::NP, Method::ML},   {Variant::NP, Method::VS},
            {Variant::SP, Method::ML},   {Variant::SP2, Method::ML},  {Variant::SP2, Method::VS},
            {Variant::SPK, Method::ML},  {Variant::P, Method::Oracle}};
}

std::size_t ProtocolConfig::cutoff_index() const {
    return static_cast<std::size_t>(std::llround(transient_cutoff * rate));
}

void ProtocolConfig::validate() const {
    if (init_count < 2) throw InvalidArgument("init_count must be >= 2");
    if (subset_count < 1) throw InvalidArgument("subset_count must be >= 1");
    if (horizon < 1) throw InvalidArgument("horizon must be >= 1");
    if (subset_len <= horizon) throw InvalidArgument("subset_len must exceed the horizon");
    if (stride < 1) throw InvalidArgument("stride must be >= 1");
    if (!(rate > 0.0) || !std::isfinite(rate)) throw InvalidArgument("rate must be positive");
    if (!(transient_cutoff >= 0.0) || !std::isfinite(transient_cutoff)) {
        throw InvalidArgument("transient_cutoff must be nonnegative");
    }
    if (!(vs_train_fraction > 0.0 && vs_train_fraction < 1.0)) {
        throw InvalidArgument("vs_train_fraction must lie in (0, 1)");
    }
    const auto vs_train = static_cast<std::size_t>(std::llround(vs_train_fraction * static_cast<double>(init_count)));
    if (vs_train < 1 || vs_train >= init_count) throw InvalidArgument("VS split leaves an empty window");
    if (variants.empty()) throw InvalidArgument("no variants to run");
    for (std::size_t i = 0; i < variants.size(); ++i) {
        VariantRun::parse(variants[i].name());
        for (std::size_t j = 0; j < i; ++j) {
            if (variants[j] == variants[i]) throw InvalidArgument("variant " + variants[i].name() + " listed twice");
        }
    }
    if (features.count < 1) throw InvalidArgument("feature count must be >= 1");
    if (!std::isfinite(gravity)) throw InvalidArgument("gravity must be finite");
    if (jobs < 0) throw InvalidArgument("jobs must be >= 0");
}

PredictionError prediction_error(const Eigen::Ref<const Eigen::MatrixXd>& actual,
                                 const Eigen::Ref<const Eigen::MatrixXd>& predicted) {
    if (actual.rows() != predicted.rows() || actual.cols() != predicted.cols()) {
        throw InvalidArgument("actual and predicted torques differ in shape");
    }
    if (actual.rows() < 1 || actual.cols() < 1) throw InvalidArgument("empty prediction window");
    PredictionError out;
    out.per_channel.resize(static_cast<std::size_t>(actual.cols()));
    double sum = 0.0;
    std::size_t defined = 0;
    for (Eigen::Index k = 0; k < actual.cols(); ++k) {
        const double den = actual.col(k).squaredNorm();
        if (den == 0.0) {
            out.per_channel[static_cast<std::size_t>(k)] = kNaN;
            ++out.undefined_channels;
            continue;
        }
        const double e = (actual.col(k) - predicted.col(k)).squaredNorm() / den;
        out.per_channel[static_cast<std::size_t>(k)] = e;
        sum += e;
        ++defined;
    }
    out.eps = defined > 0 ? sum / static_cast<double>(defined) : kNaN;
    return out;
}

FrozenPredictor::FrozenPredictor(const ModelSpec& spec, const RlsState& state)
    : spec_(&spec), theta_(rls_solve(state)) {}

Eigen::VectorXd FrozenPredictor::operator()(const JointState& x) const { return predict(*spec_, theta_, x); }

double quantile(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw InvalidArgument("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

SummaryStats summarize(std::span<const double> values) {
    std::vector<double> v;
    v.reserve(values.size());
    for (double x : values) {
        if (!std::isnan(x)) v.push_back(x);
    }
    if (v.empty()) throw InvalidArgument("no defined values to summarize");
    std::sort(v.begin(), v.end());
    SummaryStats s;
    s.count = v.size();
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    s.median = quantile(v, 0.5);
    s.q1 = quantile(v, 0.25);
    s.q3 = quantile(v, 0.75);
    const double iqr = s.q3 - s.q1;
    const double lo_fence = s.q1 - 1.5 * iqr;
    const double hi_fence = s.q3 + 1.5 * iqr;
    s.whisker_low = *std::find_if(v.begin(), v.end(), [&](double x) { return x >= lo_fence; });
    s.whisker_high = *std::find_if(v.rbegin(), v.rend(), [&](double x) { return x <= hi_fence; });
    return s;
}

SeriesSummary aggregate_report(const std::vector<std::vector<double>>& subset_series,
                               std::size_t cutoff_index) {
    if (subset_series.empty() || subset_series.front().empty()) {
        throw InvalidArgument("aggregation needs at least one non-empty series");
    }
    const std::size_t len = subset_series.front().size();
    for (const auto& s : subset_series) {
        if (s.size() != len) throw InvalidArgument("subset series differ in length");
    }
    if (cutoff_index >= len) {
        throw InvalidArgument("steady-state window is empty: cutoff " + std::to_string(cutoff_index) +
                              " >= series length " + std::to_string(len));
    }
    SeriesSummary out;
    out.mean_series.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& s : subset_series) {
            if (std::isnan(s[i])) continue;
            sum += s[i];
            ++count;
        }
        out.mean_series[i] = count > 0 ? sum / static_cast<double>(count) : kNaN;
    }
    const std::span<const double> all(out.mean_series);
    out.steady = summarize(all.subspan(cutoff_index));
    out.transient_mean = cutoff_index > 0 ? summarize(all.first(cutoff_index)).mean : kNaN;
    return out;
}

const VariantReport* ExperimentReport::find(std::string_view name) const {
    for (const auto& v : variants) {
        if (v.name == name) return &v;
    }
    return nullptr;
}

std::vector<std::string> ExperimentReport::failed() const {
    std::vector<std::string> out;
    for (const auto& v : variants) {
        if (!v.ok) out.push_back(v.name);
    }
    return out;
}

std::vector<double> adaptation_series(const ModelSpec& spec, const RlsState& start, const Dataset& subset,
                                      std::size_t horizon, std::size_t stride,
                                      std::size_t* undefined_channels) {
    check_schedule(subset, horizon, stride);
    const Eigen::Index n = spec.outputs();
    const std::size_t len = subset.size();
    const Eigen::MatrixXd Phi = stacked_design(spec, subset);
    const Eigen::VectorXd targets = stacked_targets(spec, subset);
    const Eigen::VectorXd y = stacked_torques(subset);
    const Eigen::VectorXd mean = y - targets;

    std::vector<double> series;
    series.reserve(series_length(len, horizon, stride));
    std::size_t undefined = 0;
    RlsState state = start;
    const auto rows = static_cast<Eigen::Index>(horizon) * n;
    for (std::size_t t = 0; t + horizon < len; ++t) {
        rls_update(state, Phi.middleRows(static_cast<Eigen::Index>(t) * n, n),
                   targets.segment(static_cast<Eigen::Index>(t) * n, n));
        if (t % stride != 0) continue;
        const Eigen::VectorXd theta = rls_solve(state);
        const auto first = static_cast<Eigen::Index>(t + 1) * n;
        const Eigen::VectorXd pred = Phi.middleRows(first, rows) * theta + mean.segment(first, rows);
        const Eigen::MatrixXd predicted =
            Eigen::Map<const Eigen::MatrixXd>(pred.data(), n, static_cast<Eigen::Index>(horizon)).transpose();
        const PredictionError e = prediction_error(horizon_block(y, t, horizon, n), predicted);
        undefined += e.undefined_channels;
        series.push_back(e.eps);
    }
    if (undefined_channels != nullptr) *undefined_channels = undefined;
    return series;
}

std::vector<double> oracle_series(const ArmParameters& arm, const Dataset& subset, std::size_t horizon,
                                  std::size_t stride) {
    check_schedule(subset, horizon, stride);
    const Eigen::Index n = subset.joints();
    const Eigen::VectorXd y = stacked_torques(subset);
    Eigen::VectorXd truth(y.size());
    for (std::size_t s = 0; s < subset.size(); ++s) {
        truth.segment(static_cast<Eigen::Index>(s) * n, n) = true_torques(subset.samples[s].x, arm);
    }
    std::vector<double> series;
    series.reserve(series_length(subset.size(), horizon, stride));
    for (std::size_t t = 0; t + horizon < subset.size(); t += stride) {
        series.push_back(prediction_error(horizon_block(y, t, horizon, n), horizon_block(truth, t, horizon, n)).eps);
    }
    return series;
}

namespace {

// T sigma^2 / sum_s y_s^2 per channel, channel-averaged, on the eps schedule.
std::vector<double> noise_floor_series(double noise_std, const Dataset& subset, std::size_t horizon,
                                       std::size_t stride) {
    const Eigen::Index n = subset.joints();
    const Eigen::VectorXd y = stacked_torques(subset);
    const double numerator = static_cast<double>(horizon) * noise_std * noise_std;
    std::vector<double> series;
    for (std::size_t t = 0; t + horizon < subset.size(); t += stride) {
        const Eigen::MatrixXd block = horizon_block(y, t, horizon, n);
        double sum = 0.0;
        std::size_t defined = 0;
        for (Eigen::Index k = 0; k < n; ++k) {
            const double den = block.col(k).squaredNorm();
            if (den == 0.0) continue;
            sum += numerator / den;
            ++defined;
        }
        series.push_back(defined > 0 ? sum / static_cast<double>(defined) : kNaN);
    }
    return series;
}

FitResult estimate_hyperparameters(const ProtocolConfig& cfg, const VariantRun& run, const ModelTemplate& tmpl,
                                   const Dataset& init, Execution exec) {
    if (run.method == Method::ML) {
        return fit_ml(tmpl, init, default_initial_guess(tmpl, init));
    }
    const auto n_train =
        static_cast<std::size_t>(std::llround(cfg.vs_train_fraction * static_cast<double>(init.size())));
    const Dataset train = init.slice(0, n_train);
    const Dataset val = init.slice(n_train, init.size() - n_train);
    std::optional<Eigen::VectorXd> pi_hat;
    if (run.variant == Variant::SP2) pi_hat = ls_estimate_pi(init, cfg.gravity).pi;
    const HyperGrid grid = default_vs_grid(tmpl, train, pi_hat);
    return fit_vs(tmpl, train, val, grid, exec).fit;
}

void run_variant(const ProtocolConfig& cfg, const VariantRun& run, const Dataset& init, const Dataset& train_a,
                 const std::vector<Dataset>& subsets, const std::optional<ArmParameters>& arm, Execution exec,
                 VariantReport& out) {
    out.subset_series.assign(subsets.size(), {});
    if (run.method == Method::Oracle) {
        if (!arm) throw InvalidArgument("the oracle needs the simulator arm parameters");
        const auto start = Clock::now();
        for (std::size_t k = 0; k < subsets.size(); ++k) {
            out.subset_series[k] = oracle_series(*arm, subsets[k], cfg.horizon, cfg.stride);
        }
        out.seconds_stream = seconds_since(start);
        return;
    }

    const ModelTemplate tmpl{run.variant, init.joints(), cfg.features, cfg.gravity};
    out.fit = estimate_hyperparameters(cfg, run, tmpl, init, exec);
    out.hyper = out.fit.hyper;
    log().info("{}: hyperparameters estimated in {:.2f} s (objective {})", out.name, out.fit.seconds,
               out.fit.objective);

    const auto start = Clock::now();
    const ModelSpec spec = tmpl.instantiate(out.fit.hyper);
    RlsState state = rls_init(spec);
    for (const Sample& s : init.samples) rls_update(state, spec, s);
    for (const Sample& s : train_a.samples) rls_update(state, spec, s);

    std::vector<std::size_t> undefined(subsets.size(), 0);
    std::vector<std::exception_ptr> failures(subsets.size());
    const bool par = exec == Execution::parallel && !omp_in_parallel();
#pragma omp parallel for schedule(dynamic) if (par)
    for (std::size_t k = 0; k < subsets.size(); ++k) {
        try {
            out.subset_series[k] = adaptation_series(spec, state, subsets[k], cfg.horizon, cfg.stride, &undefined[k]);
        } catch (...) {
            failures[k] = std::current_exception();
        }
    }
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
    for (std::size_t u : undefined) out.undefined_channels += u;
    out.seconds_stream = seconds_since(start);
}

}  // namespace

ExperimentReport run_protocol(const ProtocolConfig& cfg, const Dataset& ds_a, const Dataset& ds_b,
                              const std::optional<ArmParameters>& arm, Execution exec) {
    cfg.validate();
    if (arm) arm->validate();
    ds_a.validate();
    ds_b.validate();
    if (ds_a.size() < cfg.init_count + cfg.train_a_count) {
        throw InvalidArgument("dataset A has " + std::to_string(ds_a.size()) + " samples, the protocol needs " +
                              std::to_string(cfg.init_count + cfg.train_a_count));
    }
    if (ds_b.size() < cfg.subset_count * cfg.subset_len) {
        throw InvalidArgument("dataset B has " + std::to_string(ds_b.size()) + " samples, the protocol needs " +
                              std::to_string(cfg.subset_count * cfg.subset_len));
    }
    if (ds_a.joints() != ds_b.joints()) throw InvalidArgument("datasets A and B differ in joint count");

    const std::size_t len = series_length(cfg.subset_len, cfg.horizon, cfg.stride);
    const std::size_t cutoff = (cfg.cutoff_index() + cfg.stride - 1) / cfg.stride;
    if (cutoff >= len) throw InvalidArgument("transient cutoff leaves no steady-state window");

    ExperimentReport report;
    report.config = cfg;
    report.t_seconds.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
        report.t_seconds[i] = static_cast<double>(i * cfg.stride + 1) / cfg.rate;
    }

    const Dataset init = ds_a.slice(0, cfg.init_count);
    const Dataset train_a = ds_a.slice(cfg.init_count, cfg.train_a_count);
    std::vector<Dataset> subsets;
    for (std::size_t k = 0; k < cfg.subset_count; ++k) subsets.push_back(ds_b.slice(k * cfg.subset_len, cfg.subset_len));

    report.variants.resize(cfg.variants.size());
    for (std::size_t v = 0; v < cfg.variants.size(); ++v) report.variants[v].name = cfg.variants[v].name();

    const int threads = cfg.jobs > 0 ? cfg.jobs : omp_get_max_threads();
    const bool par = exec == Execution::parallel && cfg.variants.size() > 1;
    const auto count = static_cast<long>(cfg.variants.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads) if (par)
    for (long v = 0; v < count; ++v) {
        VariantReport& out = report.variants[static_cast<std::size_t>(v)];
        try {
            run_variant(cfg, cfg.variants[static_cast<std::size_t>(v)], init, train_a, subsets, arm, exec, out);
            out.summary = aggregate_report(out.subset_series, cutoff);
            out.ok = true;
        } catch (const std::exception& e) {
            out.ok = false;
            out.error = e.what();
            out.subset_series.clear();
            log().error("variant {} failed: {}", out.name, out.error);
        }
    }

    if (arm) {
        std::vector<std::vector<double>> floors;
        for (const Dataset& s : subsets) floors.push_back(noise_floor_series(arm->noise_std, s, cfg.horizon, cfg.stride));
        report.noise_floor = aggregate_report(floors, cutoff);
    }
    return report;
}

}  // namespace ridgeline
