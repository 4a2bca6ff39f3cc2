#include "pff/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    using namespace pff;
    CLI::App app{"Phase field fracture solver (AT2, volumetric-deviatoric split)"};
    app.require_subcommand(1);

    CliOverrides cli;
    std::string mode, output;
    int threads = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_flag("--override-resolution", cli.override_resolution, "run even if h > ell/5");
        sub->add_option("--mode", mode, "solution scheme")
            ->check(CLI::IsMember({"monolithic-full", "monolithic-block", "staggered"}));
        sub->add_option("--threads", threads, "assembly threads")->check(CLI::PositiveNumber);
        sub->add_option("--output", output, "output directory (overrides the config)");
    };

    std::string config_path;
    auto* run = app.add_subcommand("run", "run one simulation from a YAML config");
    run->add_option("config", config_path, "run configuration")->required();
    add_common(run);

    std::string plan_path;
    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep from a YAML plan");
    sweep->add_option("plan", plan_path, "sweep plan")->required();
    add_common(sweep);

    MaterialParams p;
    auto* v1d = app.add_subcommand("verify1d", "single element check against the homogeneous 1D solution");
    v1d->add_option("--E_MPa", p.E, "Young's modulus")->capture_default_str();
    v1d->add_option("--nu", p.nu, "Poisson's ratio")->capture_default_str();
    v1d->add_option("--Gc_N_per_mm", p.Gc, "critical energy release rate")->capture_default_str();
    v1d->add_option("--ell_mm", p.ell, "length scale")->capture_default_str();
    v1d->add_option("--kappa", p.kappa, "residual stiffness")->capture_default_str();

    std::string mesh_arg, region;
    double ell = 0.0;
    GeometryOptions geo;
    auto* check = app.add_subcommand("checkmesh", "check the crack-zone resolution h <= ell/5");
    check->add_option("mesh", mesh_arg, "Gmsh file or builtin:NAME")->required();
    check->add_option("--ell_mm", ell, "length scale")->required();
    check->add_option("--region", region, "node set bounding the crack zone");
    check->add_option("--scale", geo.scale, "builtin mesh refinement factor");
    check->add_option("--h_fine_mm", geo.h_fine, "builtin crack-zone element size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : exit_code::config;
    }
    if (!mode.empty())
        cli.mode = parse_mode(mode);
    if (threads > 0)
        cli.threads = threads;
    if (!output.empty())
        cli.output = output;

    try {
        if (*run)
            return cmd_run(config_path, cli, std::cout, std::cerr);
        if (*sweep)
            return cmd_sweep(plan_path, cli, std::cout, std::cerr);
        if (*v1d)
            return cmd_verify1d(p, std::cout, std::cerr);
        return cmd_checkmesh(mesh_arg, ell, geo, region.empty() ? std::nullopt : std::optional(region), std::cout,
                             std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code::other;
    }
}
