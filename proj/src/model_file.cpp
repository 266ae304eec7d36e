#include "ridgeline/model_file.hpp"

#include "ridgeline/dataset_io.hpp"
#include "ridgeline/error.hpp"

#include <cmath>
#include <set>

namespace ridgeline {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "ridgeline-model";
constexpr int kVersion = 1;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const char* where) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) throw ParseError("unknown key '" + key + "' in " + where, 0);
    }
}

const json& require(const json& j, const char* key) {
    if (!j.contains(key)) throw ParseError(std::string("model file is missing '") + key + "'", 0);
    return j.at(key);
}

double number(const json& j, const char* what) {
    if (!j.is_number()) throw ParseError(std::string(what) + " must be a number", 0);
    return j.get<double>();
}

}  // namespace

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Eigen::VectorXd vector_from_json(const json& j, const char* what) {
    if (!j.is_array()) throw ParseError(std::string(what) + " must be an array", 0);
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], what);
    return v;
}

json hyper_to_json(const Hyperparameters& h) {
    json out = json::object();
    if (h.gamma2) out["gamma2"] = *h.gamma2;
    if (h.rho2) out["rho2"] = *h.rho2;
    if (h.tau2) out["tau2"] = *h.tau2;
    if (h.sigma2) out["sigma2"] = *h.sigma2;
    if (h.pi_mean) out["pi_mean"] = vector_to_json(*h.pi_mean);
    if (h.pi_hat) out["pi_hat"] = vector_to_json(*h.pi_hat);
    return out;
}

Hyperparameters hyper_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("hyperparameters must be an object", 0);
    reject_unknown(j, {"gamma2", "rho2", "tau2", "sigma2", "pi_mean", "pi_hat"}, "hyperparameters");
    Hyperparameters h;
    if (j.contains("gamma2")) h.gamma2 = number(j["gamma2"], "gamma2");
    if (j.contains("rho2")) h.rho2 = number(j["rho2"], "rho2");
    if (j.contains("tau2")) h.tau2 = number(j["tau2"], "tau2");
    if (j.contains("sigma2")) h.sigma2 = number(j["sigma2"], "sigma2");
    if (j.contains("pi_mean")) h.pi_mean = vector_from_json(j["pi_mean"], "pi_mean");
    if (j.contains("pi_hat")) h.pi_hat = vector_from_json(j["pi_hat"], "pi_hat");
    return h;
}

std::string model_to_json_text(const ModelFile& m) {
    const ModelSpec spec = m.spec();
    if (m.theta.size() != spec.params()) throw InvalidArgument("theta length does not match the model");
    json out;
    out["format"] = kFormat;
    out["version"] = kVersion;
    out["variant"] = std::string(to_string(m.tmpl.variant));
    out["method"] = m.method;
    out["joints"] = m.tmpl.joints;
    out["gravity"] = m.tmpl.gravity;
    out["hyperparameters"] = hyper_to_json(m.hyper);
    if (spec.feature_map()) {
        const FeatureMap& fm = *spec.feature_map();
        out["feature_map"] = {{"d", fm.features()}, {"m", fm.input_dim()}, {"seed", fm.seed()}, {"tau", fm.tau()}};
    } else {
        out["feature_map"] = nullptr;
    }
    out["theta"] = vector_to_json(m.theta);
    out["samples"] = m.samples;
    out["objective"] = m.objective;
    return out.dump(2) + "\n";
}

ModelFile model_from_json_text(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model file is not valid JSON: ") + e.what(), 0);
    }
    if (!j.is_object()) throw ParseError("model file must hold a JSON object", 0);
    reject_unknown(j,
                   {"format", "version", "variant", "method", "joints", "gravity", "hyperparameters",
                    "feature_map", "theta", "samples", "objective"},
                   "model file");
    if (require(j, "format") != kFormat) throw ParseError("not a ridgeline model file", 0);
    if (require(j, "version") != kVersion) throw ParseError("unsupported model file version", 0);

    ModelFile m;
    try {
        m.tmpl.variant = parse_variant(require(j, "variant").get<std::string>());
        m.method = require(j, "method").get<std::string>();
        m.tmpl.joints = require(j, "joints").get<Eigen::Index>();
        m.tmpl.gravity = number(require(j, "gravity"), "gravity");
        m.hyper = hyper_from_json(require(j, "hyperparameters"));
        const json& fm = require(j, "feature_map");
        if (!fm.is_null()) {
            reject_unknown(fm, {"d", "m", "seed", "tau"}, "feature_map");
            m.tmpl.features.count = require(fm, "d").get<Eigen::Index>();
            m.tmpl.features.seed = require(fm, "seed").get<std::uint64_t>();
            if (require(fm, "m").get<Eigen::Index>() != 3 * m.tmpl.joints) {
                throw ParseError("feature map input dimension does not match the joint count", 0);
            }
            const double tau = number(require(fm, "tau"), "tau");
            if (!m.hyper.tau2 || std::abs(tau - std::sqrt(*m.hyper.tau2)) > 1e-12 * std::max(1.0, tau)) {
                throw ParseError("feature map width disagrees with tau2", 0);
            }
        }
        m.theta = vector_from_json(require(j, "theta"), "theta");
        m.samples = require(j, "samples").get<long>();
        m.objective = number(require(j, "objective"), "objective");
    } catch (const json::exception& e) {
        throw ParseError(std::string("model file field has the wrong type: ") + e.what(), 0);
    }
    if (m.method != "ML" && m.method != "VS") throw ParseError("method must be ML or VS", 0);
    ModelSpec spec = m.spec();
    if (spec.has_feature_block() != j["feature_map"].is_object()) {
        throw ParseError("feature_map presence does not match the variant", 0);
    }
    if (m.theta.size() != spec.params()) {
        throw ParseError("theta has " + std::to_string(m.theta.size()) + " entries, variant expects " +
                             std::to_string(spec.params()),
                         0);
    }
    return m;
}

void save_model(const ModelFile& m, const std::filesystem::path& path) {
    write_file_atomic(path, model_to_json_text(m));
}

ModelFile load_model(const std::filesystem::path& path) {
    try {
        return model_from_json_text(read_file(path));
    } catch (const ParseError& e) {
        throw e.with_context(path.string());
    }
}

json fit_report_json(const FitResult& fit, Variant variant, std::string_view method) {
    json out;
    out["variant"] = std::string(to_string(variant));
    out["method"] = std::string(method);
    out["hyperparameters"] = hyper_to_json(fit.hyper);
    out["objective"] = fit.objective;
    out["iterations"] = fit.iterations;
    out["evaluations"] = fit.evaluations;
    out["trace"] = fit.trace;
    out["seconds"] = fit.seconds;
    return out;
}

}  // namespace ridgeline
