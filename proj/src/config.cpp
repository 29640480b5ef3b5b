#include "bdsde/config.hpp"

#include <fstream>

#include "bdsde/csv.hpp"

namespace bdsde {

namespace {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

std::vector<double> vec_or(const nlohmann::json& j, const char* key,
                           std::vector<double> fallback = {}) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<std::vector<double>>();
}

AssumptionConstants constants_from(const nlohmann::json& j) {
    AssumptionConstants c = default_constants();
    c.mu = get_or(j, "mu", c.mu);
    c.K = get_or(j, "K", c.K);
    c.Kprime = get_or(j, "Kprime", c.Kprime);
    c.p = get_or(j, "p", c.p);
    c.C0 = get_or(j, "C0", c.C0);
    c.C1 = get_or(j, "C1", c.C1);
    c.C = get_or(j, "C", c.C);
    c.alpha = get_or(j, "alpha", c.alpha);
    c.L = get_or(j, "L", c.L);
    c.d = get_or(j, "d", c.d);
    c.l = get_or(j, "l", c.l);
    return c;
}

nlohmann::json constants_to(const AssumptionConstants& c) {
    return {{"mu", c.mu}, {"K", c.K},         {"Kprime", c.Kprime}, {"p", c.p},
            {"C0", c.C0}, {"C1", c.C1},       {"C", c.C},           {"alpha", c.alpha},
            {"L", c.L},   {"d", c.d},         {"l", c.l}};
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& doc) {
    ExperimentConfig cfg;
    if (doc.contains("model")) {
        const auto& m = doc.at("model");
        cfg.model_name = get_or<std::string>(m, "name", "linear");
        cfg.model_params = m;
        cfg.model_params.erase("name");
    }
    if (doc.contains("constants")) cfg.constants = constants_from(doc.at("constants"));
    if (doc.contains("grid")) {
        cfg.grid.h = get_or(doc.at("grid"), "h", defaults::h);
        cfg.grid.T = get_or(doc.at("grid"), "T", defaults::horizon);
    }
    cfg.solver.paths = defaults::paths;
    cfg.solver.basis.degree = defaults::basis_degree;
    if (doc.contains("solver")) {
        const auto& s = doc.at("solver");
        cfg.solver.paths = get_or<std::size_t>(s, "paths", defaults::paths);
        cfg.solver.implicit_iterations = get_or(s, "implicit_iterations", 0);
        cfg.solver.svd_tolerance = get_or(s, "svd_tolerance", defaults::svd_tolerance);
        cfg.solver.truncation_bound = get_or(s, "truncation_bound", defaults::truncation_bound);
        cfg.solver.allow_design_deficit = get_or(s, "allow_design_deficit", false);
        cfg.solver.override_assumptions = get_or(s, "override_assumptions", false);
        if (s.contains("basis")) {
            const auto& b = s.at("basis");
            const std::string kind = get_or<std::string>(b, "kind", "polynomial");
            if (kind == "polynomial")
                cfg.solver.basis.kind = BasisSpec::Kind::polynomial;
            else if (kind == "piecewise-constant")
                cfg.solver.basis.kind = BasisSpec::Kind::piecewise_constant;
            else
                throw std::invalid_argument("config: unknown basis kind '" + kind + "'");
            cfg.solver.basis.degree = get_or(b, "degree", defaults::basis_degree);
            cfg.solver.basis.bin_edges = vec_or(b, "bin_edges");
        }
    }
    cfg.environments = get_or<std::size_t>(doc, "environments", defaults::environments);
    cfg.epsilon = get_or(doc, "epsilon", defaults::epsilon);
    cfg.seed = get_or<std::uint64_t>(doc, "seed", 1);
    cfg.workers = get_or(doc, "workers", 0);
    if (doc.contains("out")) cfg.out_dir = doc.at("out").get<std::string>();
    if (doc.contains("options")) cfg.subcommand_options = doc.at("options");
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("config: cannot open " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        // e.what() carries the byte offset of the failure.
        throw std::invalid_argument("config: " + path.string() + ": " + e.what());
    }
    return from_json(doc);
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json model = model_params;
    model["name"] = model_name;
    nlohmann::json basis = {{"kind", solver.basis.kind == BasisSpec::Kind::polynomial
                                         ? "polynomial"
                                         : "piecewise-constant"},
                            {"degree", solver.basis.degree}};
    if (!solver.basis.bin_edges.empty()) basis["bin_edges"] = solver.basis.bin_edges;
    nlohmann::json doc = {
        {"model", model},
        {"constants", constants_to(constants)},
        {"grid", {{"h", grid.h}, {"T", grid.T}}},
        {"solver",
         {{"paths", solver.paths},
          {"basis", basis},
          {"implicit_iterations", solver.implicit_iterations},
          {"svd_tolerance", solver.svd_tolerance},
          {"truncation_bound", solver.truncation_bound},
          {"allow_design_deficit", solver.allow_design_deficit},
          {"override_assumptions", solver.override_assumptions}}},
        {"environments", environments},
        {"epsilon", epsilon},
        {"seed", seed},
        {"workers", workers},
    };
    if (!out_dir.empty()) doc["out"] = out_dir.string();
    if (!subcommand_options.empty()) doc["options"] = subcommand_options;
    return doc;
}

std::uint64_t ExperimentConfig::hash() const {
    const std::string dump = to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

ModelSpec ExperimentConfig::build_model() const {
    ModelSpec spec;
    spec.constants = constants;
    const auto& mp = model_params;
    if (model_name == "linear" || model_name == "ou") {
        LinearModelParams p;
        p.d = constants.d;
        p.l = constants.l;
        p.a = get_or(mp, "a", 0.0);
        p.mu = get_or(mp, "mu", constants.mu);
        p.cz = get_or(mp, "cz", 0.0);
        p.g0 = vec_or(mp, "g0");
        p.g1 = vec_or(mp, "g1");
        p.b0 = get_or(mp, "b0", 0.0);
        p.b1 = get_or(mp, "b1", model_name == "ou" ? 1.0 : 0.0);
        p.s0 = get_or(mp, "s0", 1.0);
        spec.coefficients = make_linear_coefficients(p);
    } else if (model_name == "cubic") {
        CubicModelParams p;
        p.base.d = constants.d;
        p.base.l = constants.l;
        p.base.a = get_or(mp, "a", 0.0);
        p.base.mu = get_or(mp, "mu", constants.mu);
        p.base.cz = get_or(mp, "cz", 0.0);
        p.base.g0 = vec_or(mp, "g0");
        p.base.g1 = vec_or(mp, "g1");
        p.base.b0 = get_or(mp, "b0", 0.0);
        p.base.b1 = get_or(mp, "b1", 0.0);
        p.base.s0 = get_or(mp, "s0", 1.0);
        p.cubic = get_or(mp, "cubic", 1.0);
        spec.coefficients = make_cubic_coefficients(p);
    } else if (model_name == "custom-polynomial") {
        PolynomialModelParams p;
        p.d = constants.d;
        p.l = constants.l;
        p.fy = vec_or(mp, "fy");
        p.fx = vec_or(mp, "fx");
        p.fz = vec_or(mp, "fz");
        if (mp.contains("gy")) p.gy = mp.at("gy").get<std::vector<std::vector<double>>>();
        p.b0 = get_or(mp, "b0", 0.0);
        p.b1 = get_or(mp, "b1", 0.0);
        p.s0 = get_or(mp, "s0", 1.0);
        spec.coefficients = make_polynomial_coefficients(p);
    } else {
        throw std::invalid_argument("config: unknown catalog model '" + model_name + "'");
    }
    spec.validate_structure();
    return spec;
}

RunManifest::RunManifest(const ExperimentConfig& config, std::string subcommand) {
    doc_["tool"] = "bdsde";
    doc_["version"] = "0.1.0";
    doc_["subcommand"] = std::move(subcommand);
    doc_["config_hash"] = config.hash();
    doc_["seed"] = config.seed;
    doc_["config"] = config.to_json();
    doc_["stages"] = nlohmann::json::array();
    doc_["outputs"] = nlohmann::json::array();
}

void RunManifest::stage_done(const std::string& stage, double seconds) {
    doc_["stages"].push_back({{"stage", stage}, {"seconds", seconds}});
}

void RunManifest::add_output(const std::filesystem::path& file) {
    doc_["outputs"].push_back({{"file", file.string()},
                               {"bytes", std::filesystem::file_size(file)},
                               {"fnv1a", csv::file_checksum(file)}});
}

void RunManifest::write(const std::filesystem::path& path) const {
    std::ofstream os(path);
    os << doc_.dump(2) << "\n";
}

}  // namespace bdsde
