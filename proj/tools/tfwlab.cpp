// tfwlab: command-line driver for the TFW/TFWD defect lab.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tfw/commands.hpp"

namespace {

struct Args {
    std::string config;
    std::string perturbation;
    std::string out;
    std::string model;
    std::optional<std::uint64_t> seed;
    bool variational = false;
};

void add_common(CLI::App* cmd, Args& a, bool defect)
{
    cmd->add_option("--config", a.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", a.out, "output directory (overrides output.directory)");
    cmd->add_option("--model", a.model, "model preset")->check(CLI::IsMember({"tfw", "tfwd"}));
    cmd->add_option("--seed", a.seed, "seed for randomized initial guesses");
    if (defect)
        cmd->add_option("--perturbation", a.perturbation, "config of the perturbed system (same grid and model)")
            ->check(CLI::ExistingFile);
}

tfw::RunConfig finish(tfw::RunConfig c, const Args& a)
{
    if (!a.model.empty()) tfw::set_model(c, a.model);
    if (a.seed) c.solver.seed = *a.seed;
    if (!a.out.empty()) c.output_dir = a.out;
    return c;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Orbital-free TFW/TFWD ground states and defect energetics on periodic 1D grids"};
    app.require_subcommand(1);
    Args a;
    auto* solve = app.add_subcommand("solve", "ground state of one nuclear density");
    auto* rel = app.add_subcommand("relative-energy", "relative energy of a defect");
    auto* decay = app.add_subcommand("decay-study", "exponential decay fits of the defect fields");
    auto* conv = app.add_subcommand("convergence-study", "relative energy against box size");
    auto* uniq = app.add_subcommand("uniqueness-probe", "solves from several random initial guesses");
    add_common(solve, a, false);
    add_common(rel, a, true);
    add_common(decay, a, true);
    add_common(conv, a, true);
    add_common(uniq, a, false);
    rel->add_flag("--variational", a.variational, "also minimize the relative-energy functional directly");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : tfw::kExitInvalidInput;
    }

    try {
        const tfw::RunConfig c = finish(tfw::load_config(a.config), a);
        std::optional<tfw::RunConfig> p;
        if (!a.perturbation.empty()) p = finish(tfw::load_config(a.perturbation), a);
        const tfw::RunConfig* pp = p ? &*p : nullptr;
        if (*solve) return tfw::cmd_solve(c, c.output_dir, a.config);
        if (*rel) return tfw::cmd_relative_energy(c, pp, c.output_dir, a.variational, a.config);
        if (*decay) return tfw::cmd_decay_study(c, pp, c.output_dir, a.config);
        if (*conv) return tfw::cmd_convergence_study(c, pp, c.output_dir, a.config);
        return tfw::cmd_uniqueness_probe(c, c.output_dir, a.config);
    } catch (const tfw::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return tfw::kExitInvalidInput;
    } catch (const tfw::ConvergenceError& e) {
        std::cerr << "not converged: " << e.what() << "\n";
        return tfw::kExitNotConverged;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return tfw::kExitNotConverged;
    }
}
