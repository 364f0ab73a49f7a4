#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tfw/analysis.hpp"
#include "tfw/io.hpp"
#include "tfw/nuclear.hpp"
#include "tfw/solver.hpp"

namespace tfw {

/// One term of a nuclear density. Parameters not used by `kind` are ignored.
struct NuclearTerm {
    std::string kind = "jellium";  ///< jellium | comb | bump | gaussian | file
    double rho0 = 1.0;
    double sigma = 0.1;
    double period = 1.0;
    double center = 0.0;
    double width = 0.05;
    double height = 11.0;
    double amplitude = 0.5;
    std::string path;
    double defect_half_width = 0.0;
};

struct RunConfig {
    double half_width = 10.0;
    std::size_t num_points = 1600;
    ModelParams model = ModelParams::tfw();
    std::string model_name = "tfw";
    std::vector<NuclearTerm> nuclear{NuclearTerm{}};
    std::vector<NuclearTerm> perturbation;
    SolverOptions solver;
    std::string initial_guess = "uniform";  ///< uniform | random
    AnalysisOptions analysis;
    std::filesystem::path output_dir = "out";
    std::vector<double> sizes;
    std::size_t trials = 3;
};

namespace config_detail {

using Json = io::Json;

/// Typed access to one JSON object that remembers which keys were read, so
/// anything left over can be reported as unknown.
class Section {
public:
    Section(const Json& j, std::string prefix) : j_(j), prefix_(std::move(prefix))
    {
        if (!j_.is_object()) throw InvalidArgument("config key '" + prefix_ + "' must be an object");
    }

    std::string key(const std::string& k) const { return prefix_.empty() ? k : prefix_ + "." + k; }
    bool has(const std::string& k) const { return j_.contains(k); }
    const Json& raw(const std::string& k)
    {
        seen_.insert(k);
        return j_.at(k);
    }

    void number(const std::string& k, double& out)
    {
        if (!has(k)) return;
        const Json& v = raw(k);
        if (!v.is_number() || !std::isfinite(v.get<double>()))
            throw InvalidArgument("config key '" + key(k) + "' must be a finite number");
        out = v.get<double>();
    }
    template <class Int>
    void integer(const std::string& k, Int& out)
    {
        if (!has(k)) return;
        const Json& v = raw(k);
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw InvalidArgument("config key '" + key(k) + "' must be a non-negative integer");
        out = static_cast<Int>(v.get<long long>());
    }
    void string(const std::string& k, std::string& out)
    {
        if (!has(k)) return;
        const Json& v = raw(k);
        if (!v.is_string()) throw InvalidArgument("config key '" + key(k) + "' must be a string");
        out = v.get<std::string>();
    }
    void boolean(const std::string& k, bool& out)
    {
        if (!has(k)) return;
        const Json& v = raw(k);
        if (!v.is_boolean()) throw InvalidArgument("config key '" + key(k) + "' must be true or false");
        out = v.get<bool>();
    }
    void numbers(const std::string& k, std::vector<double>& out)
    {
        if (!has(k)) return;
        const Json& v = raw(k);
        if (!v.is_array()) throw InvalidArgument("config key '" + key(k) + "' must be an array of numbers");
        out.clear();
        for (const auto& x : v) {
            if (!x.is_number()) throw InvalidArgument("config key '" + key(k) + "' must be an array of numbers");
            out.push_back(x.get<double>());
        }
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw InvalidArgument("unknown config key '" + key(it.key()) + "'");
    }

private:
    const Json& j_;
    std::string prefix_;
    std::set<std::string> seen_;
};

inline NuclearTerm parse_term(const Json& j, const std::string& prefix)
{
    Section s(j, prefix);
    NuclearTerm t;
    s.string("kind", t.kind);
    if (t.kind == "jellium") {
        s.number("rho0", t.rho0);
    } else if (t.kind == "comb") {
        s.number("sigma", t.sigma);
        s.number("period", t.period);
    } else if (t.kind == "bump") {
        s.number("center", t.center);
        s.number("width", t.width);
        s.number("height", t.height);
    } else if (t.kind == "gaussian") {
        s.number("amplitude", t.amplitude);
        s.number("sigma", t.sigma);
    } else if (t.kind == "file") {
        s.string("path", t.path);
        s.number("defect_half_width", t.defect_half_width);
        if (t.path.empty()) throw InvalidArgument("config key '" + s.key("path") + "' is required for kind 'file'");
    } else {
        throw InvalidArgument("config key '" + s.key("kind") + "' must be one of jellium, comb, bump, gaussian, file");
    }
    s.finish();
    return t;
}

/// A density section is either one term or an array of terms to be summed.
inline std::vector<NuclearTerm> parse_terms(const Json& j, const std::string& prefix)
{
    std::vector<NuclearTerm> out;
    if (j.is_array()) {
        if (j.empty()) throw InvalidArgument("config key '" + prefix + "' must not be empty");
        for (std::size_t i = 0; i < j.size(); ++i)
            out.push_back(parse_term(j[i], prefix + "[" + std::to_string(i) + "]"));
    } else {
        out.push_back(parse_term(j, prefix));
    }
    return out;
}

inline void apply_model_preset(RunConfig& c, const std::string& name, const std::string& key)
{
    if (name == "tfw")
        c.model = ModelParams::tfw();
    else if (name == "tfwd")
        c.model = ModelParams::tfwd();
    else
        throw InvalidArgument("config key '" + key + "' must be 'tfw' or 'tfwd'");
    c.model_name = name;
}

}  // namespace config_detail

/// Parses a run configuration. Unknown keys and ill-typed values raise
/// InvalidArgument naming the offending key.
inline RunConfig parse_config(const io::Json& j)
{
    using config_detail::Section;
    Section root(j, "");
    RunConfig c;

    if (root.has("grid")) {
        Section s(root.raw("grid"), "grid");
        s.number("half_width", c.half_width);
        s.integer("num_points", c.num_points);
        s.finish();
    }
    if (root.has("model")) {
        Section s(root.raw("model"), "model");
        std::string preset = "tfw";
        s.string("preset", preset);
        config_detail::apply_model_preset(c, preset, "model.preset");
        const ModelParams base = c.model;
        s.number("c_w", c.model.c_w);
        s.number("c_tf", c.model.c_tf);
        s.number("c_d", c.model.c_d);
        if (c.model.c_w != base.c_w || c.model.c_tf != base.c_tf || c.model.c_d != base.c_d) c.model_name = "custom";
        s.finish();
    }
    if (root.has("nuclear")) c.nuclear = config_detail::parse_terms(root.raw("nuclear"), "nuclear");
    if (root.has("perturbation")) c.perturbation = config_detail::parse_terms(root.raw("perturbation"), "perturbation");
    if (root.has("solver")) {
        Section s(root.raw("solver"), "solver");
        SolverOptions& o = c.solver;
        s.number("tol_constraint", o.tol_constraint);
        s.number("tol_residual", o.tol_residual);
        s.integer("max_outer", o.max_outer);
        s.integer("max_inner", o.max_inner);
        s.number("inner_grad_tol", o.inner_grad_tol);
        s.number("step_init", o.step_init);
        s.number("armijo_c", o.armijo_c);
        s.number("backtrack_factor", o.backtrack_factor);
        s.integer("seed", o.seed);
        s.number("mu0", o.mu0);
        s.number("c0", o.c0);
        s.number("kappa", o.kappa);
        s.number("c_min", o.c_min);
        std::string coupling = "self_consistent";
        s.string("coupling", coupling);
        if (coupling == "self_consistent")
            o.coupling = CoulombCoupling::SelfConsistent;
        else if (coupling == "frozen")
            o.coupling = CoulombCoupling::Frozen;
        else
            throw InvalidArgument("config key 'solver.coupling' must be 'self_consistent' or 'frozen'");
        s.string("initial_guess", c.initial_guess);
        if (c.initial_guess != "uniform" && c.initial_guess != "random")
            throw InvalidArgument("config key 'solver.initial_guess' must be 'uniform' or 'random'");
        s.finish();
    }
    if (root.has("analysis")) {
        Section s(root.raw("analysis"), "analysis");
        s.numbers("truncation_widths", c.analysis.truncation_widths);
        s.number("boundary_buffer_fraction", c.analysis.boundary_buffer_fraction);
        if (s.has("core_half_width")) {
            double v = 0.0;
            s.number("core_half_width", v);
            c.analysis.core_half_width = v;
        }
        s.boolean("variational", c.analysis.variational);
        s.finish();
    }
    if (root.has("output")) {
        Section s(root.raw("output"), "output");
        std::string dir = c.output_dir.string();
        s.string("directory", dir);
        c.output_dir = dir;
        s.finish();
    }
    if (root.has("study")) {
        Section s(root.raw("study"), "study");
        s.numbers("sizes", c.sizes);
        s.integer("trials", c.trials);
        s.finish();
    }
    root.finish();

    if (!(c.half_width > 0.0)) throw InvalidArgument("config key 'grid.half_width' must be positive");
    if (c.num_points < 8 || c.num_points % 2 != 0)
        throw InvalidArgument("config key 'grid.num_points' must be an even integer >= 8");
    try {
        c.model.validate();
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(std::string("config section 'model': ") + e.what());
    }
    try {
        c.solver.validate();
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(std::string("config section 'solver': ") + e.what());
    }
    if (!(c.analysis.boundary_buffer_fraction >= 0.0 && c.analysis.boundary_buffer_fraction < 0.5))
        throw InvalidArgument("config key 'analysis.boundary_buffer_fraction' must lie in [0, 0.5)");
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config file '" + path.string() + "'");
    io::Json j;
    try {
        j = io::Json::parse(in);
    } catch (const io::Json::parse_error& e) {
        throw InvalidArgument("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    RunConfig c = parse_config(j);
    // Relative density-file paths are resolved against the config's directory.
    const auto base = path.parent_path();
    for (auto* terms : {&c.nuclear, &c.perturbation})
        for (auto& t : *terms)
            if (t.kind == "file" && std::filesystem::path(t.path).is_relative()) t.path = (base / t.path).string();
    return c;
}

inline void set_model(RunConfig& c, const std::string& name) { config_detail::apply_model_preset(c, name, "--model"); }

inline NuclearDensity build_term(const GridPtr& g, const NuclearTerm& t)
{
    if (t.kind == "jellium") return jellium(g, t.rho0);
    if (t.kind == "comb") return gaussian_comb(g, t.sigma, t.period);
    if (t.kind == "bump") return uniform_bump(g, t.center, t.width, t.height);
    if (t.kind == "gaussian") return gaussian_perturbation(g, t.amplitude, t.sigma);
    if (t.kind == "file") return load_density(g, t.path, t.defect_half_width);
    throw InvalidArgument("unknown nuclear kind '" + t.kind + "'");
}

/// Sum of the terms. A reference density must be non-negative everywhere;
/// a perturbation may be signed.
inline NuclearDensity build_density(const GridPtr& g, const std::vector<NuclearTerm>& terms, bool signed_ok)
{
    if (terms.empty()) throw InvalidArgument("density has no terms");
    Field sum(g, 0.0);
    double half = 0.0;
    for (const auto& t : terms) {
        const NuclearDensity d = build_term(g, t);
        sum += d.field;
        half = std::max(half, d.defect_half_width);
    }
    if (!signed_ok) detail::require_nonnegative(sum, "nuclear density");
    return detail::finish(std::move(sum), half);
}

/// nu = m2 - m1 with the defect half-width read off its support.
inline NuclearDensity difference_density(const NuclearDensity& m2, const NuclearDensity& m1)
{
    if (!same_grid(m1.field, m2.field)) throw InvalidArgument("densities live on different grids");
    Field nu = m2.field - m1.field;
    double half = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i)
        if (nu[i] != 0.0) half = std::max(half, std::abs(nu.grid().z(i)));
    return detail::finish(std::move(nu), half);
}

}  // namespace tfw
