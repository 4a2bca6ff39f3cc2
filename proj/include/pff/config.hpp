#pragma once

// YAML configuration for the command line tool. Needs yaml-cpp; the solver
// headers do not include this file.

#include "pff/benchmarks.hpp"
#include "pff/gmsh.hpp"
#include "pff/sweep.hpp"

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <set>

namespace pff
{

struct MeshSource
{
    std::string builtin;              // specimen name, or empty
    std::filesystem::path file;       // Gmsh file when builtin is empty
    GeometryOptions geometry;
    std::optional<double> thickness;  // overrides the mesh's out-of-plane thickness
};

struct OutputOptions
{
    std::filesystem::path directory = "output";  // relative to the configuration file
    int vtk_every = 0;         // snapshot every N converged steps; 0: none
    bool vtk_final = true;     // snapshot of the last converged state
    bool crack_path = false;   // 2D only
    bool crack_surface = false;  // 3D only
    double crack_threshold = 0.95;
    double surface_spacing = 0.1;  // mm
    int surface_axis = 0;
};

struct RunConfig
{
    MeshSource mesh;
    MaterialParams material;
    std::optional<std::vector<BoundaryCondition>> bcs;  // builtin defaults when unset
    LoadSpec load;
    StepControl control;
    SolverMode mode = SolverMode::monolithic_full;
    PhaseForm form = PhaseForm::direct;
    int threads = 1;
    bool override_resolution = false;
    OutputOptions output;
};

struct SweepConfig
{
    SweepPlan plan;
    std::filesystem::path directory = "output";
};

inline Component parse_component(const std::string& s)
{
    if (s == "ux")
        return Component::ux;
    if (s == "uy")
        return Component::uy;
    if (s == "uz")
        return Component::uz;
    if (s == "phi")
        return Component::phi;
    throw ParameterError("unknown component '" + s + "' (expected ux, uy, uz or phi)");
}

inline PhaseForm parse_form(const std::string& s)
{
    if (s == "direct")
        return PhaseForm::direct;
    if (s == "heat")
        return PhaseForm::heat;
    throw ParameterError("unknown phase form '" + s + "' (expected direct or heat)");
}

namespace config_detail
{

inline int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

// A mapping whose keys must all be consumed; leftovers are reported as
// unknown keys with their line.
class Section
{
public:
    Section(const YAML::Node& node, std::string name) : node_(node), name_(std::move(name))
    {
        if (node_ && !node_.IsNull() && !node_.IsMap())
            throw ParseError("'" + name_ + "' must be a mapping", line_of(node_));
    }

    bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

    YAML::Node raw(const std::string& key)
    {
        used_.insert(key);
        return has(key) ? node_[key] : YAML::Node(YAML::NodeType::Undefined);
    }

    template <class T>
    void get(const std::string& key, T& out)
    {
        const YAML::Node n = raw(key);
        if (!n)
            return;
        try {
            out = n.as<T>();
        } catch (const YAML::Exception&) {
            throw ParseError("bad value for '" + name_ + "." + key + "'", line_of(n));
        }
    }

    template <class T>
    void get(const std::string& key, std::optional<T>& out)
    {
        T v{};
        if (has(key)) {
            get(key, v);
            out = v;
        } else
            used_.insert(key);
    }

    // Enumerations and other parsed strings; library errors gain the line.
    template <class F>
    void get_parsed(const std::string& key, F&& parse)
    {
        const YAML::Node n = raw(key);
        if (!n)
            return;
        std::string s;
        try {
            s = n.as<std::string>();
        } catch (const YAML::Exception&) {
            throw ParseError("bad value for '" + name_ + "." + key + "'", line_of(n));
        }
        try {
            parse(s);
        } catch (const ParameterError& e) {
            throw ParseError(e.what(), line_of(n));
        }
    }

    void finish() const
    {
        if (!node_ || !node_.IsMap())
            return;
        for (const auto& kv : node_) {
            const std::string k = kv.first.as<std::string>();
            if (!used_.count(k))
                throw ParseError("unknown key '" + k + "' in '" + name_ + "'", line_of(kv.first));
        }
    }

private:
    YAML::Node node_;
    std::string name_;
    std::set<std::string> used_;
};

inline void read_material(Section s, MaterialParams& p)
{
    s.get("E_MPa", p.E);
    s.get("nu", p.nu);
    s.get("Gc_N_per_mm", p.Gc);
    s.get("ell_mm", p.ell);
    s.get("kappa", p.kappa);
    s.finish();
}

inline void read_control(Section s, StepControl& c)
{
    s.get("u_max_mm", c.u_max);
    s.get("n_steps", c.n_steps);
    s.get("cutback_factor", c.cutback_factor);
    s.get("max_cutbacks", c.max_cutbacks);
    s.get("newton_tol_rel", c.newton_tol_rel);
    s.get("newton_tol_abs_N", c.newton_tol_abs);
    s.get("phi_tol", c.phi_tol);
    s.get("max_newton_iters", c.max_newton_iters);
    s.get("stagger_tol", c.stagger_tol);
    s.get("max_stagger_iters", c.max_stagger_iters);
    s.get("post_peak_fraction", c.post_peak_fraction);
    s.get("peak_drop", c.peak_drop);
    s.get("peak_refinements", c.peak_refinements);
    s.get("line_search", c.line_search);
    s.get("predictor", c.predictor);
    s.finish();
}

inline void read_geometry(Section& s, GeometryOptions& g)
{
    s.get("scale", g.scale);
    s.get("h_fine_mm", g.h_fine);
    s.get("h_coarse_mm", g.h_coarse);
    s.get("h_thickness_mm", g.h_thickness);
    s.get("zone_margin_mm", g.zone_margin);
    s.get("notch_cells", g.notch_cells);
    s.get("footprint_mm", g.footprint);
    s.get("pad_radius_mm", g.pad_radius);
    s.get("notch_offset_mm", g.notch_offset);
    s.get("notch_angle_deg", g.notch_angle_deg);
    s.get("notch_depth_front_mm", g.notch_depth_front);
    s.get("notch_depth_back_mm", g.notch_depth_back);
    s.get("tetrahedral", g.tetrahedral);
}

struct SolverSettings
{
    SolverMode mode = SolverMode::monolithic_full;
    PhaseForm form = PhaseForm::direct;
    int threads = 1;
    bool override_resolution = false;
};

inline void read_solver(Section s, SolverSettings& o)
{
    s.get_parsed("mode", [&](const std::string& v) { o.mode = parse_mode(v); });
    s.get_parsed("phase_form", [&](const std::string& v) { o.form = parse_form(v); });
    s.get("threads", o.threads);
    s.get("override_resolution", o.override_resolution);
    s.finish();
    if (o.threads < 1)
        throw ParseError("solver.threads must be at least 1");
}

inline std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base)
{
    return p.is_absolute() || base.empty() ? p : base / p;
}

template <class F>
auto guarded(F&& f)
{
    try {
        return f();
    } catch (const YAML::Exception& e) {
        throw ParseError(e.msg, e.mark.line >= 0 ? e.mark.line + 1 : 0);
    }
}

inline YAML::Node load_root(const std::string& text)
{
    return guarded([&] {
        YAML::Node root = YAML::Load(text);
        if (!root.IsMap())
            throw ParseError("configuration must be a mapping", line_of(root));
        return root;
    });
}

} // namespace config_detail

/// Parses a run configuration. Relative paths resolve against base_dir.
inline RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {})
{
    using namespace config_detail;
    return guarded([&] {
        const YAML::Node root = load_root(text);
        RunConfig c;
        Section top(root, "config");

        Section mesh(top.raw("mesh"), "mesh");
        if (!top.has("mesh"))
            throw ParseError("missing 'mesh' section");
        mesh.get("builtin", c.mesh.builtin);
        std::string file;
        mesh.get("file", file);
        if (c.mesh.builtin.empty() == file.empty())
            throw ParseError("mesh needs exactly one of 'builtin' and 'file'", line_of(root["mesh"]));
        if (!file.empty())
            c.mesh.file = resolve(file, base_dir);
        else
            mesh.get_parsed("builtin", [](const std::string& v) { parse_specimen(v); });
        read_geometry(mesh, c.mesh.geometry);
        mesh.get("thickness_mm", c.mesh.thickness);
        mesh.finish();

        read_material(Section(top.raw("material"), "material"), c.material);

        if (const YAML::Node bl = top.raw("boundary_conditions")) {
            if (!bl.IsSequence())
                throw ParseError("'boundary_conditions' must be a list", line_of(bl));
            std::vector<BoundaryCondition> bcs;
            for (const YAML::Node& item : bl) {
                Section b(item, "boundary_conditions");
                BoundaryCondition bc;
                b.get("node_set", bc.node_set);
                b.get_parsed("component", [&](const std::string& v) { bc.component = parse_component(v); });
                b.get("value_mm", bc.value);
                b.finish();
                if (bc.node_set.empty())
                    throw ParseError("boundary condition without 'node_set'", line_of(item));
                bcs.push_back(bc);
            }
            c.bcs = bcs;
        }

        Section load(top.raw("load"), "load");
        load.get("node_set", c.load.node_set);
        load.get_parsed("component", [&](const std::string& v) { c.load.component = parse_component(v); });
        load.finish();

        read_control(Section(top.raw("control"), "control"), c.control);

        SolverSettings so;
        read_solver(Section(top.raw("solver"), "solver"), so);
        c.mode = so.mode;
        c.form = so.form;
        c.threads = so.threads;
        c.override_resolution = so.override_resolution;

        Section out(top.raw("output"), "output");
        std::string dir;
        out.get("directory", dir);
        c.output.directory = resolve(dir.empty() ? c.output.directory : std::filesystem::path(dir), base_dir);
        out.get("vtk_every", c.output.vtk_every);
        out.get("vtk_final", c.output.vtk_final);
        out.get("crack_path", c.output.crack_path);
        out.get("crack_surface", c.output.crack_surface);
        out.get("crack_threshold", c.output.crack_threshold);
        out.get("surface_spacing_mm", c.output.surface_spacing);
        out.get("surface_axis", c.output.surface_axis);
        out.finish();

        top.finish();
        return c;
    });
}

/// Parses a sweep plan. Axis keys use the material key names; their order in
/// the file is the loop order (first key varies slowest).
inline SweepConfig parse_sweep_config(const std::string& text, const std::filesystem::path& base_dir = {})
{
    using namespace config_detail;
    return guarded([&] {
        const YAML::Node root = load_root(text);
        SweepConfig c;
        Section top(root, "config");
        top.get_parsed("benchmark", [&](const std::string& v) { c.plan.benchmark = parse_specimen(v); });
        if (!top.has("benchmark"))
            throw ParseError("missing 'benchmark'");

        Section geo(top.raw("geometry"), "geometry");
        read_geometry(geo, c.plan.geometry);
        geo.finish();

        read_material(Section(top.raw("material"), "material"), c.plan.base);

        const YAML::Node axes = top.raw("axes");
        if (!axes || !axes.IsMap() || axes.size() == 0)
            throw ParseError("'axes' must be a non-empty mapping", axes ? line_of(axes) : 0);
        for (const auto& kv : axes) {
            const std::string k = kv.first.as<std::string>();
            SweepAxis a;
            if (k == "E_MPa")
                a.param = SweepParam::E;
            else if (k == "Gc_N_per_mm")
                a.param = SweepParam::Gc;
            else if (k == "ell_mm")
                a.param = SweepParam::ell;
            else
                throw ParseError("unknown sweep axis '" + k + "' (expected E_MPa, Gc_N_per_mm or ell_mm)",
                                 line_of(kv.first));
            try {
                a.values = kv.second.as<std::vector<double>>();
            } catch (const YAML::Exception&) {
                throw ParseError("axis '" + k + "' must be a list of numbers", line_of(kv.second));
            }
            if (a.values.empty())
                throw ParseError("axis '" + k + "' has no values", line_of(kv.second));
            for (double v : a.values)
                if (!(v > 0.0))
                    throw ParseError("axis '" + k + "' values must be positive", line_of(kv.second));
            c.plan.axes.push_back(a);
        }

        read_control(Section(top.raw("control"), "control"), c.plan.control);

        SolverSettings so;
        read_solver(Section(top.raw("solver"), "solver"), so);
        c.plan.mode = so.mode;
        c.plan.form = so.form;
        c.plan.threads_per_run = so.threads;
        c.plan.override_resolution = so.override_resolution;
        top.get("workers", c.plan.workers);

        std::string dir;
        top.get("output_directory", dir);
        c.directory = resolve(dir.empty() ? c.directory : std::filesystem::path(dir), base_dir);
        top.finish();
        return c;
    });
}

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline RunConfig load_run_config(const std::filesystem::path& path)
{
    return parse_run_config(read_text(path), path.parent_path());
}

inline SweepConfig load_sweep_config(const std::filesystem::path& path)
{
    return parse_sweep_config(read_text(path), path.parent_path());
}

/// Mesh, boundary conditions and load set described by a run configuration.
inline Benchmark build_problem(const RunConfig& c)
{
    Benchmark b;
    if (!c.mesh.builtin.empty())
        b = builtin_benchmark(parse_specimen(c.mesh.builtin), c.mesh.geometry);
    else
        b.mesh = read_gmsh(c.mesh.file.string());
    if (c.mesh.thickness)
        b.mesh.thickness = *c.mesh.thickness;
    if (c.bcs)
        b.bcs = *c.bcs;
    else if (c.mesh.builtin.empty())
        throw ParameterError("a mesh file needs explicit boundary_conditions");
    b.load = c.load;
    return b;
}

} // namespace pff
