#pragma once

#include <chrono>
#include <ctime>
#include <cmath>
#include <filesystem>
#include <limits>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tfw/analysis.hpp"
#include "tfw/config.hpp"
#include "tfw/io.hpp"
#include "tfw/solver.hpp"

namespace tfw {

inline constexpr const char* kVersion = "0.1.0";

/// Exit status contract of the command-line front end.
enum ExitCode : int { kExitConverged = 0, kExitNotConverged = 1, kExitInvalidInput = 2 };

namespace schema {

inline const std::vector<std::string> kFields{"z", "m", "u", "phi"};
inline const std::vector<std::string> kTrace{"outer_iter", "energy", "Q", "mu", "c", "inner_steps", "el_residual"};
inline const std::vector<std::string> kDefect{"z", "m1", "m2", "u1", "u2", "phi1", "phi2", "v", "phi_d"};
inline const std::vector<std::string> kTruncation{"K", "gamma_K"};
inline const std::vector<std::string> kConvergence{"L", "gamma_L", "u_diff_sup"};
inline const std::vector<std::string> kTrials{"trial", "seed", "energy", "mu", "outer_iterations"};

inline const std::vector<std::string> kSummary{
    "model.name", "model.c_w", "model.c_tf", "model.c_d", "grid.half_width", "grid.num_points", "grid.spacing",
    "total_charge", "converged", "energy", "energy_per_length", "mu_final", "outer_iterations",
    "constraint_violation", "el_residual", "poisson_source_mean", "diagnostics"};
inline const std::vector<std::string> kReport{"gamma",
                                              "energy_difference",
                                              "truncated",
                                              "neutrality_defect",
                                              "decay_u.k1",
                                              "decay_u.k2",
                                              "decay_u.fit_window",
                                              "decay_u.correlation",
                                              "decay_phi.k1",
                                              "decay_phi.k2",
                                              "decay_phi.fit_window",
                                              "decay_phi.correlation",
                                              "variational_value",
                                              "variational_agreement",
                                              "reference",
                                              "perturbed"};
inline const std::vector<std::string> kDecay{"model", "core_half_width", "boundary_buffer", "v.both", "v.left",
                                             "v.right", "phi_d.both", "phi_d.left", "phi_d.right",
                                             "min_correlation", "reference", "perturbed"};
inline const std::vector<std::string> kConvergenceJson{"sizes", "gamma", "gamma_differences", "difference_ratios",
                                                       "u_diff_sup", "u_diff_rate", "monotone"};
inline const std::vector<std::string> kUniqueness{"model", "trials", "seeds", "spread", "relative_spread",
                                                  "energies", "all_converged"};

}  // namespace schema

/// A reference/perturbed pair of densities on one grid.
struct Problem {
    GridPtr grid;
    NuclearDensity m1;
    NuclearDensity m2;
    NuclearDensity nu;
};

namespace cmd_detail {

using io::Json;
namespace fs = std::filesystem;

inline std::string utc_timestamp()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Everything that varies between otherwise identical runs goes here and
/// nowhere else, so the payload files stay byte-identical.
inline void write_metadata(const fs::path& out, const std::string& command, const std::string& config_path)
{
    Json j;
    j["command"] = command;
    j["config"] = config_path;
    j["version"] = kVersion;
    j["timestamp"] = utc_timestamp();
    io::write_json(out / "metadata.json", j);
}

inline Json model_json(const RunConfig& c)
{
    return Json{{"name", c.model_name}, {"c_w", c.model.c_w}, {"c_tf", c.model.c_tf}, {"c_d", c.model.c_d}};
}

inline Json solve_json(const RunConfig& c, const NuclearDensity& m, const SolveResult& r)
{
    const Grid1D& g = m.grid();
    Json j;
    j["model"] = model_json(c);
    j["grid"] = Json{{"half_width", g.half_width()}, {"num_points", g.size()}, {"spacing", g.spacing()}};
    j["total_charge"] = m.total_charge;
    j["converged"] = r.converged;
    j["energy"] = io::number(r.energy);
    j["energy_per_length"] = io::number(r.energy / g.length());
    j["mu_final"] = io::number(r.mu_final);
    j["outer_iterations"] = r.outer_iterations;
    j["constraint_violation"] = io::number(r.constraint_violation);
    j["el_residual"] = io::number(r.el_residual);
    j["poisson_source_mean"] = io::number(r.poisson_source_mean);
    j["diagnostics"] = r.diagnostics;
    return j;
}

inline Json fit_json(const DecayFit& f)
{
    return Json{{"k1", io::number(f.k1)},
                {"k2", io::number(f.k2)},
                {"fit_window", Json::array({f.window_lo, f.window_hi})},
                {"correlation", io::number(f.correlation)},
                {"samples", f.samples}};
}

inline io::Table trace_table(const SolveResult& r)
{
    std::vector<double> cols[7];
    for (const auto& t : r.trace) {
        cols[0].push_back(static_cast<double>(t.outer_iter));
        cols[1].push_back(t.energy);
        cols[2].push_back(t.charge_residual);
        cols[3].push_back(t.mu);
        cols[4].push_back(t.c);
        cols[5].push_back(static_cast<double>(t.inner_steps));
        cols[6].push_back(t.el_residual);
    }
    io::Table tab;
    for (std::size_t k = 0; k < 7; ++k) tab.add(schema::kTrace[k], std::move(cols[k]));
    return tab;
}

inline std::vector<double> coords(const Grid1D& g)
{
    std::vector<double> z(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) z[i] = g.z(i);
    return z;
}

inline io::Table defect_table(const Problem& p, const SolveResult& r1, const SolveResult& r2, const DefectFields& d)
{
    io::Table t;
    t.add("z", coords(*p.grid));
    t.add("m1", p.m1.field.data());
    t.add("m2", p.m2.field.data());
    t.add("u1", r1.state.u.data());
    t.add("u2", r2.state.u.data());
    t.add("phi1", r1.state.phi.data());
    t.add("phi2", r2.state.phi.data());
    t.add("v", d.v.data());
    t.add("phi_d", d.phi_d.data());
    return t;
}

inline void prepare_output(const fs::path& out)
{
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw InvalidArgument("cannot create output directory '" + out.string() + "': " + ec.message());
}

inline SolveResult run_solve(const RunConfig& c, const NuclearDensity& m)
{
    std::optional<FieldState> init;
    if (c.initial_guess == "random")
        init = FieldState{random_guess(m, c.solver.seed), Field(m.grid_ptr(), 0.0)};
    return staggered_solve(m, c.model, c.solver, init);
}

/// Grid and model of two configs must agree exactly for a defect comparison.
inline void require_compatible(const RunConfig& a, const RunConfig& b)
{
    if (a.half_width != b.half_width || a.num_points != b.num_points)
        throw InvalidArgument("reference and perturbation configs use different grids");
    if (a.model.c_w != b.model.c_w || a.model.c_tf != b.model.c_tf || a.model.c_d != b.model.c_d)
        throw InvalidArgument("reference and perturbation configs use different models");
}

}  // namespace cmd_detail

/// Builds m1, m2 and nu on `grid`. With a perturbed config, m2 is its nuclear
/// density and nu = m2 - m1; otherwise nu comes from the reference config's
/// perturbation section and m2 = m1 + nu.
inline Problem build_problem(const GridPtr& grid, const RunConfig& ref, const RunConfig* perturbed)
{
    Problem p;
    p.grid = grid;
    p.m1 = build_density(grid, ref.nuclear, false);
    if (perturbed) {
        cmd_detail::require_compatible(ref, *perturbed);
        p.m2 = build_density(grid, perturbed->nuclear, false);
        p.nu = difference_density(p.m2, p.m1);
    } else {
        if (ref.perturbation.empty())
            throw InvalidArgument("config has no 'perturbation' section and no perturbed config was given");
        p.nu = build_density(grid, ref.perturbation, true);
        p.m2 = superpose(p.m1, p.nu);
    }
    return p;
}

inline int cmd_solve(const RunConfig& c, const std::filesystem::path& out, const std::string& config_path = "")
{
    namespace d = cmd_detail;
    const GridPtr grid = make_grid(c.half_width, c.num_points);
    const NuclearDensity m = build_density(grid, c.nuclear, false);
    d::prepare_output(out);
    const SolveResult r = d::run_solve(c, m);

    io::Table fields;
    fields.add("z", d::coords(*grid));
    fields.add("m", m.field.data());
    fields.add("u", r.state.u.data());
    fields.add("phi", r.state.phi.data());
    io::write_csv(out / "fields.csv", fields);
    io::write_csv(out / "trace.csv", d::trace_table(r));
    io::write_json(out / "summary.json", d::solve_json(c, m, r));
    d::write_metadata(out, "solve", config_path);

    io::validate_csv(out / "fields.csv", schema::kFields);
    io::validate_csv(out / "trace.csv", schema::kTrace);
    io::validate_json(out / "summary.json", schema::kSummary);
    if (!r.converged) std::cerr << "not converged: " << r.diagnostics << "\n";
    return r.converged ? kExitConverged : kExitNotConverged;
}

namespace cmd_detail {

/// Solves both systems; on failure writes the summaries that exist and
/// returns false.
inline bool solve_pair(const RunConfig& ref, const RunConfig* pert, const Problem& p, const fs::path& out,
                       SolveResult& r1, SolveResult& r2, Json& meta)
{
    r1 = run_solve(ref, p.m1);
    r2 = run_solve(pert ? *pert : ref, p.m2);
    meta["reference"] = solve_json(ref, p.m1, r1);
    meta["perturbed"] = solve_json(pert ? *pert : ref, p.m2, r2);
    if (r1.converged && r2.converged) return true;
    io::write_json(out / "solves.json", meta);
    std::cerr << "not converged: " << (r1.converged ? r2.diagnostics : r1.diagnostics) << "\n";
    return false;
}

}  // namespace cmd_detail

inline int cmd_relative_energy(const RunConfig& ref, const RunConfig* pert, const std::filesystem::path& out,
                               bool variational, const std::string& config_path = "")
{
    namespace d = cmd_detail;
    const GridPtr grid = make_grid(ref.half_width, ref.num_points);
    const Problem p = build_problem(grid, ref, pert);
    d::prepare_output(out);
    SolveResult r1, r2;
    io::Json solves;
    if (!d::solve_pair(ref, pert, p, out, r1, r2, solves)) return kExitNotConverged;

    AnalysisOptions aopts = ref.analysis;
    aopts.variational = aopts.variational || variational;
    RelativeEnergyReport rep;
    try {
        rep = build_report(r1, r2, p.m1, p.m2, p.nu, ref.model, aopts, ref.solver);
    } catch (const ConvergenceError& e) {
        std::cerr << e.what() << "\n";
        return kExitNotConverged;
    }
    const DefectFields df = make_defect_fields(r1, r2, p.nu);

    io::Json j;
    j["gamma"] = io::number(rep.gamma);
    j["energy_difference"] = io::number(rep.energy_difference);
    io::Json trunc = io::Json::array();
    std::vector<double> ks, gs;
    for (const auto& [K, g] : rep.truncated) {
        trunc.push_back(io::Json{{"K", K}, {"gamma_K", io::number(g)}});
        ks.push_back(K);
        gs.push_back(g);
    }
    j["truncated"] = trunc;
    j["neutrality_defect"] = io::number(rep.neutrality_defect);
    j["decay_u"] = d::fit_json(rep.decay_u);
    j["decay_phi"] = d::fit_json(rep.decay_phi);
    j["variational_value"] = rep.variational_value ? io::number(*rep.variational_value) : io::Json(nullptr);
    j["variational_agreement"] =
        rep.variational_agreement ? io::number(*rep.variational_agreement) : io::Json(nullptr);
    j["reference"] = solves["reference"];
    j["perturbed"] = solves["perturbed"];

    io::Table trunc_tab;
    trunc_tab.add("K", ks);
    trunc_tab.add("gamma_K", gs);
    io::write_csv(out / "defect.csv", d::defect_table(p, r1, r2, df));
    io::write_csv(out / "truncation.csv", trunc_tab);
    io::write_json(out / "report.json", j);
    d::write_metadata(out, "relative-energy", config_path);

    io::validate_csv(out / "defect.csv", schema::kDefect);
    io::validate_csv(out / "truncation.csv", schema::kTruncation);
    io::validate_json(out / "report.json", schema::kReport);
    return kExitConverged;
}

/// Decay fits of v and phi_d on both tails pooled and on each tail alone.
inline int cmd_decay_study(const RunConfig& ref, const RunConfig* pert, const std::filesystem::path& out,
                           const std::string& config_path = "")
{
    namespace d = cmd_detail;
    const GridPtr grid = make_grid(ref.half_width, ref.num_points);
    const Problem p = build_problem(grid, ref, pert);
    d::prepare_output(out);
    SolveResult r1, r2;
    io::Json solves;
    if (!d::solve_pair(ref, pert, p, out, r1, r2, solves)) return kExitNotConverged;
    const DefectFields df = make_defect_fields(r1, r2, p.nu);

    const double core = ref.analysis.core_half_width.value_or(p.nu.defect_half_width);
    const double buffer = ref.analysis.boundary_buffer_fraction * grid->length();
    io::Json j;
    j["model"] = d::model_json(ref);
    j["core_half_width"] = core;
    j["boundary_buffer"] = buffer;
    double rmin = 1.0;
    for (const auto& [name, f] : {std::pair<const char*, const Field*>{"v", &df.v}, {"phi_d", &df.phi_d}}) {
        const DecayFit both = fit_decay_or_empty(*f, core, buffer, Tail::Both);
        const DecayFit left = fit_decay_or_empty(*f, core, buffer, Tail::Left);
        const DecayFit right = fit_decay_or_empty(*f, core, buffer, Tail::Right);
        for (double r : {both.correlation, left.correlation, right.correlation})
            rmin = std::isnan(r) || std::isnan(rmin) ? std::numeric_limits<double>::quiet_NaN() : std::min(rmin, r);
        j[name] = io::Json{{"both", d::fit_json(both)}, {"left", d::fit_json(left)}, {"right", d::fit_json(right)}};
    }
    j["min_correlation"] = io::number(rmin);
    j["reference"] = solves["reference"];
    j["perturbed"] = solves["perturbed"];

    io::write_csv(out / "defect.csv", d::defect_table(p, r1, r2, df));
    io::write_json(out / "decay.json", j);
    d::write_metadata(out, "decay-study", config_path);
    io::validate_csv(out / "defect.csv", schema::kDefect);
    io::validate_json(out / "decay.json", schema::kDecay);
    return kExitConverged;
}

/// Relative energy at several box sizes with the grid spacing held fixed.
/// u_diff_sup compares the perturbed density with the largest-box one,
/// restricted to the smaller box.
inline int cmd_convergence_study(const RunConfig& ref, const RunConfig* pert, const std::filesystem::path& out,
                                 const std::string& config_path = "")
{
    namespace d = cmd_detail;
    const std::vector<double>& sizes = ref.sizes;
    if (sizes.size() < 3) throw InvalidArgument("config key 'study.sizes' needs at least 3 box sizes for a fit");
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i)
        if (!(sizes[i + 1] > sizes[i])) throw InvalidArgument("config key 'study.sizes' must be strictly increasing");
    const double h = 2.0 * ref.half_width / static_cast<double>(ref.num_points);
    std::vector<GridPtr> grids;
    for (double L : sizes) {
        const double n = 2.0 * L / h;
        const auto ni = static_cast<std::size_t>(std::llround(n));
        if (std::abs(n - static_cast<double>(ni)) > 1e-9 * n || ni % 2 != 0 || ni < 8)
            throw InvalidArgument("config key 'study.sizes': L = " + std::to_string(L) +
                                  " is not an even multiple of the grid spacing " + std::to_string(h));
        grids.push_back(make_grid(L, ni));
    }
    d::prepare_output(out);

    std::vector<double> gammas;
    std::vector<Field> u2s;
    for (const GridPtr& g : grids) {
        const Problem p = build_problem(g, ref, pert);
        if (!(g->half_width() > p.nu.defect_half_width))
            throw InvalidArgument("config key 'study.sizes': every box must be wider than the defect");
        SolveResult r1, r2;
        io::Json solves;
        if (!d::solve_pair(ref, pert, p, out, r1, r2, solves)) return kExitNotConverged;
        gammas.push_back(relative_energy(make_defect_fields(r1, r2, p.nu), ref.model));
        u2s.push_back(r2.state.u);
    }

    const Field& uref = u2s.back();
    const std::size_t nref = uref.size();
    std::vector<double> udiff;
    for (const Field& u : u2s) {
        const std::size_t offset = (nref - u.size()) / 2;
        double m = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) m = std::max(m, std::abs(u[i] - uref[i + offset]));
        udiff.push_back(m);
    }
    std::vector<double> diffs, ratios;
    for (std::size_t i = 0; i + 1 < gammas.size(); ++i) diffs.push_back(std::abs(gammas[i + 1] - gammas[i]));
    bool monotone = true;
    for (std::size_t i = 0; i + 1 < diffs.size(); ++i) {
        ratios.push_back(diffs[i] > 0.0 ? diffs[i + 1] / diffs[i] : 0.0);
        monotone = monotone && diffs[i + 1] < diffs[i];
    }
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i + 1 < udiff.size(); ++i)
        if (udiff[i] > 0.0) {
            xs.push_back(sizes[i]);
            ys.push_back(std::log(udiff[i]));
        }

    io::Json j;
    j["sizes"] = sizes;
    j["gamma"] = gammas;
    j["gamma_differences"] = diffs;
    j["difference_ratios"] = ratios;
    j["u_diff_sup"] = udiff;
    j["u_diff_rate"] = xs.size() >= 2 ? io::number(-linear_fit(xs, ys).slope) : io::Json(nullptr);
    j["monotone"] = monotone;
    io::Table t;
    t.add("L", sizes);
    t.add("gamma_L", gammas);
    t.add("u_diff_sup", udiff);
    io::write_csv(out / "convergence.csv", t);
    io::write_json(out / "convergence.json", j);
    d::write_metadata(out, "convergence-study", config_path);
    io::validate_csv(out / "convergence.csv", schema::kConvergence);
    io::validate_json(out / "convergence.json", schema::kConvergenceJson);
    return kExitConverged;
}

/// Solves the reference system from several random initial guesses.
inline int cmd_uniqueness_probe(const RunConfig& c, const std::filesystem::path& out,
                                const std::string& config_path = "")
{
    namespace d = cmd_detail;
    if (c.trials < 2) throw InvalidArgument("config key 'study.trials' must be at least 2");
    const GridPtr grid = make_grid(c.half_width, c.num_points);
    const NuclearDensity m = build_density(grid, c.nuclear, false);
    d::prepare_output(out);

    std::vector<SolveResult> runs;
    bool all = true;
    for (std::size_t t = 0; t < c.trials; ++t) {
        const Field u0 = random_guess(m, c.solver.seed + t);
        runs.push_back(staggered_solve(m, c.model, c.solver, FieldState{u0, Field(grid, 0.0)}));
        all = all && runs.back().converged;
    }
    double spread = 0.0, umax = 0.0;
    for (const auto& r : runs) umax = std::max(umax, r.state.u.max_abs());
    for (std::size_t a = 0; a < runs.size(); ++a)
        for (std::size_t b = a + 1; b < runs.size(); ++b)
            for (std::size_t i = 0; i < grid->size(); ++i)
                spread = std::max(spread, std::abs(std::abs(runs[a].state.u[i]) - std::abs(runs[b].state.u[i])));

    io::Json j;
    j["model"] = d::model_json(c);
    j["trials"] = c.trials;
    std::vector<double> seeds, energies, mus, outers, trial_ids;
    for (std::size_t t = 0; t < runs.size(); ++t) {
        trial_ids.push_back(static_cast<double>(t));
        seeds.push_back(static_cast<double>(c.solver.seed + t));
        energies.push_back(runs[t].energy);
        mus.push_back(runs[t].mu_final);
        outers.push_back(static_cast<double>(runs[t].outer_iterations));
    }
    io::Json seed_list = io::Json::array();
    for (std::size_t t = 0; t < runs.size(); ++t) seed_list.push_back(c.solver.seed + t);
    j["seeds"] = seed_list;
    j["spread"] = spread;
    j["relative_spread"] = umax > 0.0 ? spread / umax : spread;
    j["energies"] = energies;
    j["all_converged"] = all;
    io::Table t;
    t.add("trial", trial_ids);
    t.add("seed", seeds);
    t.add("energy", energies);
    t.add("mu", mus);
    t.add("outer_iterations", outers);
    io::write_csv(out / "trials.csv", t);
    io::write_json(out / "uniqueness.json", j);
    d::write_metadata(out, "uniqueness-probe", config_path);
    io::validate_csv(out / "trials.csv", schema::kTrials);
    io::validate_json(out / "uniqueness.json", schema::kUniqueness);
    return all ? kExitConverged : kExitNotConverged;
}

}  // namespace tfw
