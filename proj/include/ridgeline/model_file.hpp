#pragma once

// JSON persistence of fitted models. The feature map is stored as
// (d, m, seed, tau) and regenerated on load; Omega itself is never written.

#include "ridgeline/hyper.hpp"
#include "ridgeline/models.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace ridgeline {

nlohmann::json hyper_to_json(const Hyperparameters& h);
/// Reads only the keys present; unknown keys are rejected.
Hyperparameters hyper_from_json(const nlohmann::json& j);

nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j, const char* what);

struct ModelFile {
    ModelTemplate tmpl;
    std::string method = "ML";  ///< ML or VS
    Hyperparameters hyper;
    Eigen::VectorXd theta;
    long samples = 0;        ///< samples absorbed into theta
    double objective = 0.0;  ///< final NLL (ML) or validation MSE (VS)

    ModelSpec spec() const { return tmpl.instantiate(hyper); }
};

/// Deterministic text: identical models give identical bytes.
std::string model_to_json_text(const ModelFile& m);
/// Validates shapes against the variant and rebuilds nothing but the numbers.
ModelFile model_from_json_text(std::string_view text);

void save_model(const ModelFile& m, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

/// Fit report: final hyperparameters, objective trace and wall-clock time.
nlohmann::json fit_report_json(const FitResult& fit, Variant variant, std::string_view method);

}  // namespace ridgeline
