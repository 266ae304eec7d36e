#include "ridgeline/config.hpp"

#include "ridgeline/dataset_io.hpp"
#include "ridgeline/error.hpp"

#include <toml.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <map>

namespace ridgeline {

namespace {

using nlohmann::json;
using Handler = std::function<void(const toml::node&)>;

std::size_t line_of(const toml::node& n) { return n.source().begin.line; }

double get_double(const toml::node& n, const std::string& key) {
    if (!n.is_number()) throw ParseError("'" + key + "' must be a number", line_of(n));
    const double v = n.is_integer() ? static_cast<double>(*n.value<std::int64_t>()) : *n.value<double>();
    return v;
}

std::uint64_t get_uint(const toml::node& n, const std::string& key) {
    if (!n.is_integer()) throw ParseError("'" + key + "' must be an integer", line_of(n));
    const std::int64_t v = *n.value<std::int64_t>();
    if (v < 0) throw ParseError("'" + key + "' must be nonnegative", line_of(n));
    return static_cast<std::uint64_t>(v);
}

std::string get_string(const toml::node& n, const std::string& key) {
    if (!n.is_string()) throw ParseError("'" + key + "' must be a string", line_of(n));
    return *n.value<std::string>();
}

std::vector<double> get_doubles(const toml::node& n, const std::string& key) {
    const toml::array* arr = n.as_array();
    if (arr == nullptr) throw ParseError("'" + key + "' must be an array of numbers", line_of(n));
    std::vector<double> out;
    for (const toml::node& e : *arr) out.push_back(get_double(e, key));
    return out;
}

std::array<double, 2> get_pair(const toml::node& n, const std::string& key) {
    const std::vector<double> v = get_doubles(n, key);
    if (v.size() != 2) throw ParseError("'" + key + "' must hold one value per joint (2)", line_of(n));
    return {v[0], v[1]};
}

void read_table(const toml::node& node, const std::string& name, const std::map<std::string, Handler>& handlers) {
    const toml::table* tbl = node.as_table();
    if (tbl == nullptr) throw ParseError("'" + name + "' must be a table", line_of(node));
    for (auto&& [key, value] : *tbl) {
        const std::string k(key.str());
        const auto it = handlers.find(k);
        if (it == handlers.end()) throw ParseError("unknown key '" + k + "' in [" + name + "]", line_of(value));
        it->second(value);
    }
}

std::map<std::string, Handler> regime_handlers(TrajectoryRegime& r, double& duration) {
    return {{"amplitude", [&](const toml::node& n) { r.amplitude = get_doubles(n, "amplitude"); }},
            {"frequency", [&](const toml::node& n) { r.frequency = get_doubles(n, "frequency"); }},
            {"phase", [&](const toml::node& n) { r.phase = get_doubles(n, "phase"); }},
            {"offset", [&](const toml::node& n) { r.offset = get_doubles(n, "offset"); }},
            {"duration", [&](const toml::node& n) { duration = get_double(n, "duration"); }}};
}

std::size_t sample_count(double duration, double rate, const char* which) {
    const double real = duration * rate;
    if (!(duration >= 0.0) || !std::isfinite(real)) {
        throw InvalidArgument(std::string(which) + " duration must be finite and nonnegative");
    }
    const double rounded = std::round(real);
    if (std::abs(real - rounded) > 1e-9 * std::max(1.0, real)) {
        throw InvalidArgument(std::string(which) + " duration * rate must be an integer sample count");
    }
    return static_cast<std::size_t>(rounded);
}

std::string toml_list(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out += ", ";
        out += format_double(v[i]);
    }
    return out + "]";
}

std::string toml_list(const std::array<double, 2>& v) { return toml_list(std::vector<double>(v.begin(), v.end())); }

std::string toml_string(const std::string& s) {
    // Literal strings need no escaping as long as they hold no single quote.
    if (s.find('\'') == std::string::npos && s.find('\n') == std::string::npos) return "'" + s + "'";
    return json(s).dump();
}

std::string regime_toml(const char* name, const TrajectoryRegime& r, double duration) {
    std::string out = "[" + std::string(name) + "]\n";
    out += "amplitude = " + toml_list(r.amplitude) + "\n";
    out += "frequency = " + toml_list(r.frequency) + "\n";
    out += "phase = " + toml_list(r.phase) + "\n";
    out += "offset = " + toml_list(r.offset) + "\n";
    out += "duration = " + format_double(duration) + "\n";
    return out;
}

json regime_json(const TrajectoryRegime& r, double duration) {
    return {{"amplitude", r.amplitude},
            {"frequency", r.frequency},
            {"phase", r.phase},
            {"offset", r.offset},
            {"duration", duration}};
}

}  // namespace

void RunConfig::resolve() {
    protocol.gravity = arm.gravity;
    protocol.features.seed = seeds.features;
}

void RunConfig::apply_seed(std::uint64_t seed) {
    seeds.dataset_a = seed;
    seeds.dataset_b = seed + 1;
}

std::size_t RunConfig::samples_a() const { return sample_count(duration_a, protocol.rate, "regime_a"); }
std::size_t RunConfig::samples_b() const { return sample_count(duration_b, protocol.rate, "regime_b"); }

void RunConfig::validate() const {
    arm.validate();
    for (const auto* r : {&regime_a, &regime_b}) {
        r->validate();
        if (r->joints() != kArmJoints) throw InvalidArgument("trajectory regimes must describe the two-link arm");
        for (double f : r->frequency) {
            if (f >= protocol.rate / 2.0) {
                throw InvalidArgument("trajectory frequency " + format_double(f) + " Hz aliases at " +
                                      format_double(protocol.rate) + " Hz");
            }
        }
    }
    protocol.validate();
    if (protocol.gravity != arm.gravity) throw InvalidArgument("protocol gravity must match the arm");
    if (protocol.features.seed != seeds.features) throw InvalidArgument("feature seed is not resolved");
    if (samples_a() < protocol.init_count + protocol.train_a_count) {
        throw InvalidArgument("regime_a records " + std::to_string(samples_a()) + " samples, the protocol needs " +
                              std::to_string(protocol.init_count + protocol.train_a_count));
    }
    if (samples_b() < protocol.subset_count * protocol.subset_len) {
        throw InvalidArgument("regime_b records " + std::to_string(samples_b()) + " samples, the protocol needs " +
                              std::to_string(protocol.subset_count * protocol.subset_len));
    }
    if (out_dir.empty()) throw InvalidArgument("output directory must not be empty");
}

namespace {

RunConfig parse_toml(std::string_view text, const std::string& source) {
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        throw ParseError(std::string(e.description()), e.source().begin.line);
    }

    RunConfig cfg;
    ArmParameters& arm = cfg.arm;
    ProtocolConfig& p = cfg.protocol;
    auto arm_pair = [&](std::array<double, 2>& dst, const char* key) {
        return Handler([&dst, key](const toml::node& n) { dst = get_pair(n, key); });
    };
    auto size_key = [](std::size_t& dst, const char* key) {
        return Handler([&dst, key](const toml::node& n) { dst = static_cast<std::size_t>(get_uint(n, key)); });
    };

    const std::map<std::string, Handler> tables = {
        {"arm",
         [&](const toml::node& n) {
             read_table(n, "arm",
                        {{"mass", arm_pair(arm.mass, "mass")},
                         {"length", arm_pair(arm.length, "length")},
                         {"com", arm_pair(arm.com, "com")},
                         {"inertia", arm_pair(arm.inertia, "inertia")},
                         {"viscous", arm_pair(arm.viscous, "viscous")},
                         {"coulomb", arm_pair(arm.coulomb, "coulomb")},
                         {"gravity", [&](const toml::node& v) { arm.gravity = get_double(v, "gravity"); }},
                         {"noise_std", [&](const toml::node& v) { arm.noise_std = get_double(v, "noise_std"); }}});
         }},
        {"regime_a", [&](const toml::node& n) { read_table(n, "regime_a", regime_handlers(cfg.regime_a, cfg.duration_a)); }},
        {"regime_b", [&](const toml::node& n) { read_table(n, "regime_b", regime_handlers(cfg.regime_b, cfg.duration_b)); }},
        {"protocol",
         [&](const toml::node& n) {
             read_table(n, "protocol",
                        {{"init_count", size_key(p.init_count, "init_count")},
                         {"train_a_count", size_key(p.train_a_count, "train_a_count")},
                         {"subset_count", size_key(p.subset_count, "subset_count")},
                         {"subset_len", size_key(p.subset_len, "subset_len")},
                         {"horizon", size_key(p.horizon, "horizon")},
                         {"stride", size_key(p.stride, "stride")},
                         {"rate", [&](const toml::node& v) { p.rate = get_double(v, "rate"); }},
                         {"transient_cutoff",
                          [&](const toml::node& v) { p.transient_cutoff = get_double(v, "transient_cutoff"); }},
                         {"vs_train_fraction",
                          [&](const toml::node& v) { p.vs_train_fraction = get_double(v, "vs_train_fraction"); }},
                         {"jobs",
                          [&](const toml::node& v) {
                              const std::uint64_t j = get_uint(v, "jobs");
                              if (j > 4096) throw ParseError("'jobs' is unreasonably large", line_of(v));
                              p.jobs = static_cast<int>(j);
                          }},
                         {"variants", [&](const toml::node& v) {
                              const toml::array* arr = v.as_array();
                              if (arr == nullptr) throw ParseError("'variants' must be an array of names", line_of(v));
                              p.variants.clear();
                              for (const toml::node& e : *arr) {
                                  try {
                                      p.variants.push_back(VariantRun::parse(get_string(e, "variants")));
                                  } catch (const InvalidArgument& err) {
                                      throw ParseError(err.what(), line_of(e));
                                  }
                              }
                          }}});
         }},
        {"features",
         [&](const toml::node& n) {
             read_table(n, "features", {{"count", [&](const toml::node& v) {
                                            const std::uint64_t c = get_uint(v, "count");
                                            if (c < 1 || c > 100000) throw ParseError("'count' must lie in [1, 100000]", line_of(v));
                                            p.features.count = static_cast<Eigen::Index>(c);
                                        }}});
         }},
        {"seeds",
         [&](const toml::node& n) {
             read_table(n, "seeds",
                        {{"dataset_a", [&](const toml::node& v) { cfg.seeds.dataset_a = get_uint(v, "dataset_a"); }},
                         {"dataset_b", [&](const toml::node& v) { cfg.seeds.dataset_b = get_uint(v, "dataset_b"); }},
                         {"features", [&](const toml::node& v) { cfg.seeds.features = get_uint(v, "features"); }}});
         }},
        {"output",
         [&](const toml::node& n) {
             read_table(n, "output", {{"dir", [&](const toml::node& v) { cfg.out_dir = get_string(v, "dir"); }}});
         }},
    };

    for (auto&& [key, value] : root) {
        const std::string k(key.str());
        const auto it = tables.find(k);
        if (it == tables.end()) throw ParseError("unknown table or key '" + k + "'", line_of(value));
        it->second(value);
    }
    cfg.resolve();
    return cfg;
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const std::string& source) {
    try {
        return parse_toml(text, source);
    } catch (const ParseError& e) {
        throw e.with_context(source);
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    return parse_run_config(read_file(path), path.string());
}

std::string run_config_to_toml(const RunConfig& cfg) {
    const ArmParameters& a = cfg.arm;
    const ProtocolConfig& p = cfg.protocol;
    std::string out;
    out += "[arm]\n";
    out += "mass = " + toml_list(a.mass) + "\n";
    out += "length = " + toml_list(a.length) + "\n";
    out += "com = " + toml_list(a.com) + "\n";
    out += "inertia = " + toml_list(a.inertia) + "\n";
    out += "viscous = " + toml_list(a.viscous) + "\n";
    out += "coulomb = " + toml_list(a.coulomb) + "\n";
    out += "gravity = " + format_double(a.gravity) + "\n";
    out += "noise_std = " + format_double(a.noise_std) + "\n\n";
    out += regime_toml("regime_a", cfg.regime_a, cfg.duration_a) + "\n";
    out += regime_toml("regime_b", cfg.regime_b, cfg.duration_b) + "\n";
    out += "[protocol]\n";
    out += "init_count = " + std::to_string(p.init_count) + "\n";
    out += "train_a_count = " + std::to_string(p.train_a_count) + "\n";
    out += "subset_count = " + std::to_string(p.subset_count) + "\n";
    out += "subset_len = " + std::to_string(p.subset_len) + "\n";
    out += "horizon = " + std::to_string(p.horizon) + "\n";
    out += "rate = " + format_double(p.rate) + "\n";
    out += "transient_cutoff = " + format_double(p.transient_cutoff) + "\n";
    out += "stride = " + std::to_string(p.stride) + "\n";
    out += "vs_train_fraction = " + format_double(p.vs_train_fraction) + "\n";
    out += "jobs = " + std::to_string(p.jobs) + "\n";
    out += "variants = [";
    for (std::size_t i = 0; i < p.variants.size(); ++i) {
        if (i > 0) out += ", ";
        out += "\"" + p.variants[i].name() + "\"";
    }
    out += "]\n\n";
    out += "[features]\n";
    out += "count = " + std::to_string(p.features.count) + "\n\n";
    out += "[seeds]\n";
    out += "dataset_a = " + std::to_string(cfg.seeds.dataset_a) + "\n";
    out += "dataset_b = " + std::to_string(cfg.seeds.dataset_b) + "\n";
    out += "features = " + std::to_string(cfg.seeds.features) + "\n\n";
    out += "[output]\n";
    out += "dir = " + toml_string(cfg.out_dir.string()) + "\n";
    return out;
}

json run_config_to_json(const RunConfig& cfg) {
    const ArmParameters& a = cfg.arm;
    json variants = json::array();
    for (const auto& v : cfg.protocol.variants) variants.push_back(v.name());
    return {{"arm",
             {{"mass", a.mass},
              {"length", a.length},
              {"com", a.com},
              {"inertia", a.inertia},
              {"viscous", a.viscous},
              {"coulomb", a.coulomb},
              {"gravity", a.gravity},
              {"noise_std", a.noise_std}}},
            {"regime_a", regime_json(cfg.regime_a, cfg.duration_a)},
            {"regime_b", regime_json(cfg.regime_b, cfg.duration_b)},
            {"protocol",
             {{"init_count", cfg.protocol.init_count},
              {"train_a_count", cfg.protocol.train_a_count},
              {"subset_count", cfg.protocol.subset_count},
              {"subset_len", cfg.protocol.subset_len},
              {"horizon", cfg.protocol.horizon},
              {"rate", cfg.protocol.rate},
              {"transient_cutoff", cfg.protocol.transient_cutoff},
              {"stride", cfg.protocol.stride},
              {"vs_train_fraction", cfg.protocol.vs_train_fraction},
              {"jobs", cfg.protocol.jobs},
              {"variants", variants}}},
            {"features", {{"count", cfg.protocol.features.count}}},
            {"seeds",
             {{"dataset_a", cfg.seeds.dataset_a},
              {"dataset_b", cfg.seeds.dataset_b},
              {"features", cfg.seeds.features}}},
            {"output", {{"dir", cfg.out_dir.string()}}},
            {"toml", run_config_to_toml(cfg)}};
}

}  // namespace ridgeline
