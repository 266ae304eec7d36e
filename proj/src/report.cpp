#include "ridgeline/report.hpp"

#include "ridgeline/dataset_io.hpp"
#include "ridgeline/error.hpp"
#include "ridgeline/model_file.hpp"

#include <cmath>

namespace ridgeline {

namespace {

using nlohmann::json;

// NaN and infinities become null, which JSON can represent.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json series_json(const std::vector<double>& s) {
    json out = json::array();
    for (double v : s) out.push_back(number_or_null(v));
    return out;
}

json stats_json(const SummaryStats& s) {
    return {{"mean", number_or_null(s.mean)},
            {"median", number_or_null(s.median)},
            {"q1", number_or_null(s.q1)},
            {"q3", number_or_null(s.q3)},
            {"whisker_low", number_or_null(s.whisker_low)},
            {"whisker_high", number_or_null(s.whisker_high)},
            {"count", s.count}};
}

json summary_json(const SeriesSummary& s) {
    return {{"steady_state", stats_json(s.steady)},
            {"transient_mean", number_or_null(s.transient_mean)},
            {"mean_series", series_json(s.mean_series)}};
}

}  // namespace

json protocol_to_json(const ProtocolConfig& cfg) {
    json variants = json::array();
    for (const auto& v : cfg.variants) variants.push_back(v.name());
    return {{"init_count", cfg.init_count},
            {"train_a_count", cfg.train_a_count},
            {"subset_count", cfg.subset_count},
            {"subset_len", cfg.subset_len},
            {"horizon", cfg.horizon},
            {"rate", cfg.rate},
            {"transient_cutoff", cfg.transient_cutoff},
            {"cutoff_index", cfg.cutoff_index()},
            {"stride", cfg.stride},
            {"vs_train_fraction", cfg.vs_train_fraction},
            {"variants", variants},
            {"feature_count", cfg.features.count},
            {"feature_seed", cfg.features.seed},
            {"gravity", cfg.gravity},
            {"jobs", cfg.jobs}};
}

json report_to_json(const ExperimentReport& report) {
    json variants = json::array();
    for (const auto& v : report.variants) {
        json entry;
        entry["name"] = v.name;
        entry["ok"] = v.ok;
        if (!v.ok) {
            entry["error"] = v.error;
            variants.push_back(entry);
            continue;
        }
        entry["hyperparameters"] = v.hyper ? hyper_to_json(*v.hyper) : json(nullptr);
        if (v.hyper) {
            entry["fit"] = {{"objective", number_or_null(v.fit.objective)},
                            {"iterations", v.fit.iterations},
                            {"evaluations", v.fit.evaluations},
                            {"trace", series_json(v.fit.trace)}};
        }
        entry["summary"] = summary_json(v.summary);
        json subsets = json::array();
        for (const auto& s : v.subset_series) subsets.push_back(series_json(s));
        entry["subset_series"] = subsets;
        entry["undefined_channels"] = v.undefined_channels;
        entry["csv"] = series_file_name(v);
        entry["timing"] = {{"fit_seconds", v.fit.seconds}, {"stream_seconds", v.seconds_stream}};
        variants.push_back(entry);
    }
    json out;
    out["protocol"] = protocol_to_json(report.config);
    out["t_seconds"] = report.t_seconds;
    out["variants"] = variants;
    out["noise_floor"] = report.noise_floor ? summary_json(*report.noise_floor) : json(nullptr);
    json failed = json::array();
    for (const auto& name : report.failed()) failed.push_back(name);
    out["failed"] = failed;
    return out;
}

std::string series_file_name(const VariantReport& variant) { return "eps_" + variant.name + ".csv"; }

std::string series_csv(const ExperimentReport& report, const VariantReport& variant) {
    if (!variant.ok) throw InvalidArgument("variant " + variant.name + " has no series");
    std::string out = "t_seconds,eps_mean";
    for (std::size_t k = 0; k < variant.subset_series.size(); ++k) out += ",eps_subset_" + std::to_string(k + 1);
    out += '\n';
    for (std::size_t i = 0; i < report.t_seconds.size(); ++i) {
        out += format_double(report.t_seconds[i]);
        out += ',';
        out += format_double(variant.summary.mean_series[i]);
        for (const auto& s : variant.subset_series) {
            out += ',';
            out += format_double(s[i]);
        }
        out += '\n';
    }
    return out;
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir,
                  const json& resolved_config) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
    for (const auto& v : report.variants) {
        if (v.ok) write_file_atomic(dir / series_file_name(v), series_csv(report, v));
    }
    json out = report_to_json(report);
    if (!resolved_config.is_null()) out["resolved_config"] = resolved_config;
    write_file_atomic(dir / "report.json", out.dump(2) + "\n");
}

}  // namespace ridgeline
