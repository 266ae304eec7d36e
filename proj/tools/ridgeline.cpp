// ridgeline: dataset generation, model fitting, the task-transfer experiment
// and one-shot prediction, all driven by a single TOML config.

#include "ridgeline/config.hpp"
#include "ridgeline/dataset_io.hpp"
#include "ridgeline/error.hpp"
#include "ridgeline/estimator.hpp"
#include "ridgeline/harness.hpp"
#include "ridgeline/hyper.hpp"
#include "ridgeline/model_file.hpp"
#include "ridgeline/report.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace ridgeline;

namespace {

struct GlobalOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<int> jobs;
    bool dry_run = false;
};

RunConfig resolve_config(const GlobalOptions& g) {
    RunConfig cfg = g.config.empty() ? RunConfig{} : load_run_config(g.config);
    if (g.seed) cfg.apply_seed(*g.seed);
    if (!g.out.empty()) cfg.out_dir = g.out;
    if (g.jobs) {
        if (*g.jobs < 0) throw InvalidArgument("--jobs must be >= 0");
        cfg.protocol.jobs = *g.jobs;
    }
    cfg.resolve();
    cfg.validate();
    return cfg;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create directory " + dir.string() + ": " + ec.message());
}

std::pair<Dataset, Dataset> generate_both(const RunConfig& cfg) {
    Dataset a = generate_dataset(cfg.regime_a, cfg.arm, cfg.duration_a, cfg.protocol.rate, cfg.seeds.dataset_a);
    Dataset b = generate_dataset(cfg.regime_b, cfg.arm, cfg.duration_b, cfg.protocol.rate, cfg.seeds.dataset_b);
    return {std::move(a), std::move(b)};
}

int cmd_gen(const GlobalOptions& g) {
    const RunConfig cfg = resolve_config(g);
    const fs::path a = cfg.out_dir / "dataset_a.csv";
    const fs::path b = cfg.out_dir / "dataset_b.csv";
    if (g.dry_run) {
        std::cout << fmt::format("would write {} ({} samples, seed {})\n", a.string(), cfg.samples_a(),
                                 cfg.seeds.dataset_a);
        std::cout << fmt::format("would write {} ({} samples, seed {})\n", b.string(), cfg.samples_b(),
                                 cfg.seeds.dataset_b);
        return 0;
    }
    ensure_dir(cfg.out_dir);
    const auto [da, db] = generate_both(cfg);
    save_dataset(da, a);
    save_dataset(db, b);
    std::cout << fmt::format("{}: {} samples\n{}: {} samples\n", a.string(), da.size(), b.string(), db.size());
    return 0;
}

struct FitOptions {
    std::string dataset;
    std::string variant;
    std::string method = "ml";
};

int cmd_fit(const GlobalOptions& g, const FitOptions& f) {
    const RunConfig cfg = resolve_config(g);
    std::string method = f.method;
    std::transform(method.begin(), method.end(), method.begin(), [](unsigned char c) { return std::toupper(c); });
    const Variant variant = parse_variant(f.variant);
    const VariantRun run = VariantRun::parse(variant == Variant::P && method == "ML"
                                                 ? std::string("P")
                                                 : f.variant + "-" + method);
    const std::string name = run.name();
    const fs::path model_path = cfg.out_dir / ("model_" + name + ".json");
    const fs::path report_path = cfg.out_dir / ("fit_" + name + ".json");
    if (g.dry_run) {
        std::cout << fmt::format("would fit {} on the first {} samples of {} and write {}\n", name,
                                 cfg.protocol.init_count, f.dataset, model_path.string());
        return 0;
    }

    const Dataset ds = load_dataset(f.dataset);
    if (ds.size() < cfg.protocol.init_count) {
        throw InvalidArgument(fmt::format("{} has {} samples, fitting needs init_count = {}", f.dataset, ds.size(),
                                          cfg.protocol.init_count));
    }
    const Dataset init = ds.slice(0, cfg.protocol.init_count);
    const ModelTemplate tmpl{variant, ds.joints(), cfg.protocol.features, cfg.protocol.gravity};

    FitResult fit;
    if (run.method == Method::ML) {
        fit = fit_ml(tmpl, init, default_initial_guess(tmpl, init));
    } else {
        const auto n_train = static_cast<std::size_t>(
            std::llround(cfg.protocol.vs_train_fraction * static_cast<double>(init.size())));
        const Dataset train = init.slice(0, n_train);
        const Dataset val = init.slice(n_train, init.size() - n_train);
        std::optional<Eigen::VectorXd> pi_hat;
        if (variant == Variant::SP2) pi_hat = ls_estimate_pi(init, tmpl.gravity).pi;
        fit = fit_vs(tmpl, train, val, default_vs_grid(tmpl, train, pi_hat)).fit;
    }

    const ModelSpec spec = tmpl.instantiate(fit.hyper);
    RlsState state = rls_init(spec);
    for (const Sample& s : ds.samples) rls_update(state, spec, s);

    ModelFile model;
    model.tmpl = tmpl;
    model.method = run.method == Method::ML ? "ML" : "VS";
    model.hyper = fit.hyper;
    model.theta = rls_solve(state);
    model.samples = state.samples;
    model.objective = fit.objective;

    ensure_dir(cfg.out_dir);
    save_model(model, model_path);
    write_file_atomic(report_path, fit_report_json(fit, variant, model.method).dump(2) + "\n");
    std::cout << fmt::format("{}: {} = {} after {} iterations\n", name,
                             run.method == Method::ML ? "final NLL" : "validation MSE", format_double(fit.objective),
                             fit.iterations);
    std::cout << fmt::format("wrote {}\n", model_path.string());
    return 0;
}

struct ExperimentOptions {
    std::string dataset_a;
    std::string dataset_b;
};

int cmd_experiment(const GlobalOptions& g, const ExperimentOptions& e) {
    const RunConfig cfg = resolve_config(g);
    if (e.dataset_a.empty() != e.dataset_b.empty()) {
        throw InvalidArgument("--dataset-a and --dataset-b must be given together");
    }
    if (g.dry_run) {
        std::cout << fmt::format("would run {} variants: ", cfg.protocol.variants.size());
        for (std::size_t i = 0; i < cfg.protocol.variants.size(); ++i) {
            std::cout << (i > 0 ? ", " : "") << cfg.protocol.variants[i].name();
        }
        std::cout << fmt::format("\ndata: {}\nreport: {}\n",
                                 e.dataset_a.empty() ? "generated from the config" : e.dataset_a + ", " + e.dataset_b,
                                 (cfg.out_dir / "report.json").string());
        return 0;
    }

    Dataset da;
    Dataset db;
    if (e.dataset_a.empty()) {
        std::tie(da, db) = generate_both(cfg);
    } else {
        da = load_dataset(e.dataset_a);
        db = load_dataset(e.dataset_b);
    }
    const ExperimentReport report = run_protocol(cfg.protocol, da, db, cfg.arm);
    write_report(report, cfg.out_dir, run_config_to_json(cfg));

    std::cout << fmt::format("{:<8} {:>12} {:>12} {:>14}\n", "variant", "steady mean", "steady med", "transient mean");
    for (const auto& v : report.variants) {
        if (!v.ok) {
            std::cout << fmt::format("{:<8} FAILED: {}\n", v.name, v.error);
            continue;
        }
        std::cout << fmt::format("{:<8} {:>12.5g} {:>12.5g} {:>14.5g}\n", v.name, v.summary.steady.mean,
                                 v.summary.steady.median, v.summary.transient_mean);
    }
    if (report.noise_floor) {
        std::cout << fmt::format("{:<8} {:>12.5g}\n", "floor", report.noise_floor->steady.mean);
    }
    std::cout << fmt::format("wrote {}\n", (cfg.out_dir / "report.json").string());

    const auto failed = report.failed();
    if (!failed.empty()) {
        std::string list;
        for (const auto& name : failed) list += (list.empty() ? "" : ", ") + name;
        std::cerr << "failed variants: " << list << "\n";
        return 1;
    }
    return 0;
}

struct PredictOptions {
    std::string model;
    std::string x;
};

int cmd_predict(const PredictOptions& p) {
    const ModelFile model = load_model(p.model);
    std::vector<double> values;
    std::stringstream ss(p.x);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(cell, &used));
            if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw InvalidArgument("--x entry '" + cell + "' is not a number");
        }
    }
    const ModelSpec spec = model.spec();
    if (static_cast<Eigen::Index>(values.size()) != spec.input_dim()) {
        throw InvalidArgument(fmt::format("--x needs {} comma-separated values (q, dq, ddq), got {}",
                                          spec.input_dim(), values.size()));
    }
    const Eigen::Map<const Eigen::VectorXd> x(values.data(), static_cast<Eigen::Index>(values.size()));
    const Eigen::VectorXd y = predict(spec, model.theta, JointState::from_stacked(x));
    for (Eigen::Index k = 0; k < y.size(); ++k) std::cout << (k > 0 ? "," : "") << format_double(y[k]);
    std::cout << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online learning of robot inverse dynamics on a simulated two-link arm"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--config", g.config, "TOML run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Dataset seed (dataset B uses seed + 1)");
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--jobs", g.jobs, "Worker threads for the experiment (0 = all)");
    app.add_flag("--dry-run", g.dry_run, "Validate and print the plan without writing anything");

    auto* gen = app.add_subcommand("gen", "Generate dataset_a.csv and dataset_b.csv");

    FitOptions fit_opts;
    auto* fit = app.add_subcommand("fit", "Fit one model variant and write its model file");
    fit->add_option("--dataset", fit_opts.dataset, "Dataset CSV")->required()->check(CLI::ExistingFile);
    fit->add_option("--variant", fit_opts.variant, "P, NP, SP, SP2 or SPK")->required();
    fit->add_option("--method", fit_opts.method, "ml or vs")
        ->check(CLI::IsMember({"ml", "vs", "ML", "VS"}));

    ExperimentOptions exp_opts;
    auto* experiment = app.add_subcommand("experiment", "Run the task-transfer experiment");
    experiment->add_option("--dataset-a", exp_opts.dataset_a, "Source-task dataset (default: generate)")
        ->check(CLI::ExistingFile);
    experiment->add_option("--dataset-b", exp_opts.dataset_b, "Target-task dataset (default: generate)")
        ->check(CLI::ExistingFile);

    PredictOptions pred_opts;
    auto* predict_cmd = app.add_subcommand("predict", "Predict torques for one joint state");
    predict_cmd->add_option("--model", pred_opts.model, "Model JSON written by fit")->required()->check(CLI::ExistingFile);
    predict_cmd->add_option("--x", pred_opts.x, "q1,q2,dq1,dq2,ddq1,ddq2")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return cmd_gen(g);
        if (*fit) return cmd_fit(g, fit_opts);
        if (*experiment) return cmd_experiment(g, exp_opts);
        if (*predict_cmd) return cmd_predict(pred_opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
