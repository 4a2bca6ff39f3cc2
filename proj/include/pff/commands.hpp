#pragma once

// Subcommands of the pff tool, callable in-process (tests drive them directly).

#include "pff/config.hpp"
#include "pff/crack.hpp"
#include "pff/postproc.hpp"
#include "pff/verify.hpp"

#include <chrono>
#include <ostream>

namespace pff
{

namespace exit_code
{
inline constexpr int ok = 0;
inline constexpr int other = 1;
inline constexpr int config = 2;
inline constexpr int resolution = 3;
inline constexpr int solver = 4;
} // namespace exit_code

/// Command line flags that take precedence over the configuration file.
struct CliOverrides
{
    bool override_resolution = false;
    std::optional<SolverMode> mode;
    std::optional<int> threads;
    std::optional<std::filesystem::path> output;
};

namespace commands_detail
{

inline void write_crack_outputs(const Mesh& mesh, const NodalFields& f, const OutputOptions& o,
                                const std::filesystem::path& dir, std::ostream& log)
{
    try {
        if (o.crack_path && mesh.dim == 2) {
            const CrackPath2D p = extract_crack_path(mesh, f.phi, o.crack_threshold);
            auto out = detail::open_out(dir / "crack_path.csv");
            write_path_csv(p, out);
            detail::close_out(out, dir / "crack_path.csv");
        }
        if (o.crack_surface && mesh.dim == 3) {
            const CrackSurface3D s =
                extract_crack_surface(mesh, f.phi, o.crack_threshold, o.surface_spacing, o.surface_axis);
            auto out = detail::open_out(dir / "crack_surface.csv");
            write_surface_csv(s, out);
            detail::close_out(out, dir / "crack_surface.csv");
        }
    } catch (const NoCrack& e) {
        log << "crack extraction skipped: " << e.what() << '\n';
    }
}

inline std::string step_name(int step)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "step_%04d.vtk", step);
    return buf;
}

} // namespace commands_detail

inline int cmd_run(const std::filesystem::path& config_path, const CliOverrides& cli, std::ostream& out,
                   std::ostream& err)
{
    using namespace commands_detail;
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig c;
    Benchmark b;
    try {
        c = load_run_config(config_path);
        if (cli.override_resolution)
            c.override_resolution = true;
        if (cli.mode)
            c.mode = *cli.mode;
        if (cli.threads)
            c.threads = *cli.threads;
        if (cli.output)
            c.output.directory = *cli.output;
        c.material.validate();
        c.control.validate();
        b = build_problem(c);
    } catch (const ParseError& e) {
        err << config_path.string() << ": " << e.what() << '\n';
        return exit_code::config;
    } catch (const ParameterError& e) {
        err << config_path.string() << ": " << e.what() << '\n';
        return exit_code::config;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::other;
    }

    const std::filesystem::path dir = c.output.directory;
    SimulationRecord rec;
    try {
        std::filesystem::create_directories(dir);
        if (!c.override_resolution)
            check_resolution(b.mesh, c.material.ell);
    } catch (const ResolutionError& e) {
        err << "error: " << e.what() << '\n';
        rec.failure = e.what();
        write_summary(rec, c.material, dir / "summary.txt");
        return exit_code::resolution;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::other;
    }

    try {
        const DofMap dofs(b.mesh, b.bcs);
        RunOptions opt;
        opt.mode = c.mode;
        opt.form = c.form;
        opt.threads = c.threads;
        opt.override_resolution = true;
        opt.observer = [&](const StepRecord& r, const SolverState& s) {
            out << "step " << r.step << "  u = " << detail::fmt("%.6g", r.displacement)
                << " mm  F = " << detail::fmt("%.6g", r.force) << " N  max phi = " << detail::fmt("%.4f", r.max_phi)
                << "  " << to_string(r.scheme) << '\n';
            if (c.output.vtk_every > 0 && r.step % c.output.vtk_every == 0)
                write_vtk(b.mesh, nodal_fields(dofs, s.x), dir / step_name(r.step));
        };
        SolverState final_state;
        rec = run(b.mesh, c.material, b.bcs, b.load, c.control, opt, &final_state);
        force_displacement_csv(rec, dir / "force_displacement.csv");
        write_summary(rec, c.material, dir / "summary.txt");
        if (!rec.steps.empty()) {
            const NodalFields f = nodal_fields(dofs, final_state.x);
            if (c.output.vtk_final)
                write_vtk(b.mesh, f, dir / "final.vtk");
            write_crack_outputs(b.mesh, f, c.output, dir, out);
        }
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::config;
    } catch (const MeshError& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::config;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        rec.failure = e.what();
        rec.completed = false;
        write_summary(rec, c.material, dir / "summary.txt");
        return exit_code::solver;
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out << "sigma_c = " << detail::fmt("%.6g", critical_stress(c.material)) << " MPa\n";
    if (!rec.steps.empty())
        out << "peak force = " << detail::fmt("%.6g", rec.peak_force())
            << " N at u = " << detail::fmt("%.6g", rec.displacement_at_peak()) << " mm\n";
    out << "wall time = " << detail::fmt("%.2f", wall) << " s\n";
    if (!rec.completed) {
        err << "error: " << rec.failure << " (partial outputs kept in " << dir.string() << ")\n";
        return exit_code::solver;
    }
    return exit_code::ok;
}

inline int cmd_sweep(const std::filesystem::path& plan_path, const CliOverrides& cli, std::ostream& out,
                     std::ostream& err)
{
    SweepConfig c;
    try {
        c = load_sweep_config(plan_path);
        if (cli.override_resolution)
            c.plan.override_resolution = true;
        if (cli.mode)
            c.plan.mode = *cli.mode;
        if (cli.threads)
            c.plan.threads_per_run = *cli.threads;
        if (cli.output)
            c.directory = *cli.output;
        c.plan.validate();
    } catch (const ParseError& e) {
        err << plan_path.string() << ": " << e.what() << '\n';
        return exit_code::config;
    } catch (const ParameterError& e) {
        err << plan_path.string() << ": " << e.what() << '\n';
        return exit_code::config;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::other;
    }
    SweepResult r;
    try {
        r = run_sweep(c.plan);
        std::filesystem::create_directories(c.directory);
        write_sweep_csv(r, c.directory / "sweep.csv");
    } catch (const ResolutionError& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::resolution;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::other;
    }
    write_sweep_csv(r, out);
    for (const SweepRow& row : r.rows)
        if (!row.converged)
            err << "run E = " << row.params.E << ", Gc = " << row.params.Gc << ", ell = " << row.params.ell
                << " failed: " << row.failure << '\n';
    return r.all_converged() ? exit_code::ok : exit_code::solver;
}

inline int cmd_verify1d(const MaterialParams& p, std::ostream& out, std::ostream& err)
{
    try {
        p.validate();
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::config;
    }
    const Verify1DResult r = verify_1d(p);
    using detail::fmt;
    out << "                 analytic      FEM           rel. error\n";
    out << "peak stress MPa  " << fmt("%-13.6g", r.sigma_analytic) << ' ' << fmt("%-13.6g", r.sigma_fem) << ' '
        << fmt("%.3e", r.sigma_error()) << '\n';
    out << "peak strain      " << fmt("%-13.6g", r.eps_analytic) << ' ' << fmt("%-13.6g", r.eps_fem) << ' '
        << fmt("%.3e", r.eps_error()) << '\n';
    if (!r.converged) {
        err << "error: single element run did not converge\n";
        return exit_code::solver;
    }
    out << (r.pass() ? "PASS" : "FAIL") << " (tolerance 1%)\n";
    return r.pass() ? exit_code::ok : exit_code::other;
}

/// Mesh given as a Gmsh file or "builtin:NAME".
inline int cmd_checkmesh(const std::string& mesh_arg, double ell, const GeometryOptions& g,
                         const std::optional<std::string>& region, std::ostream& out, std::ostream& err)
{
    Mesh m;
    try {
        if (!(ell > 0))
            throw ParameterError("ell must be positive");
        if (mesh_arg.rfind("builtin:", 0) == 0)
            m = builtin_geometry(mesh_arg.substr(8), g);
        else
            m = read_gmsh(mesh_arg);
    } catch (const ParseError& e) {
        err << mesh_arg << ": " << e.what() << '\n';
        return exit_code::config;
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::config;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::other;
    }
    std::optional<std::string> reg = region;
    if (!reg && m.node_sets.count("crack_zone"))
        reg = "crack_zone";
    ResolutionReport r;
    try {
        r = characteristic_size(m, ell, reg);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::other;
    }
    using detail::fmt;
    out << "nodes = " << m.num_nodes() << "\nelements = " << m.num_elements() << '\n';
    out << "region = " << (reg ? *reg : "whole mesh") << '\n';
    out << "h_min_mm = " << fmt("%.6g", r.h_min) << "\nh_max_mm = " << fmt("%.6g", r.h_max) << '\n';
    out << "h_crack_zone_mm = " << fmt("%.6g", r.h_crackzone) << '\n';
    out << "ell_over_h = " << fmt("%.6g", r.ratio) << " (required >= " << fmt("%g", min_resolution_ratio) << ")\n";
    out << (r.pass ? "PASS" : "FAIL: h must not exceed ell/5") << '\n';
    return r.pass ? exit_code::ok : exit_code::resolution;
}

} // namespace pff
