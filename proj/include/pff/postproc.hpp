#pragma once

#include "pff/solver.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace pff
{

struct NodalFields
{
    std::vector<double> phi;
    std::vector<Vec3> u;  // z = 0 in 2D
};

inline NodalFields nodal_fields(const DofMap& dofs, const Eigen::VectorXd& x)
{
    NodalFields f;
    f.phi.resize(dofs.n_nodes());
    f.u.assign(dofs.n_nodes(), Vec3::Zero());
    for (int v = 0; v < dofs.n_nodes(); ++v) {
        f.phi[v] = x(dofs.phi(v));
        for (int c = 0; c < dofs.dim(); ++c)
            f.u[v](c) = x(dofs.u(v, c));
    }
    return f;
}

namespace detail
{

// Fixed printf formatting keeps the output byte-identical across runs.
inline std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot open '" + path.string() + "' for writing");
    return out;
}

inline void close_out(std::ofstream& out, const std::filesystem::path& path)
{
    out.close();
    if (!out)
        throw Error("write to '" + path.string() + "' failed");
}

} // namespace detail

inline int vtk_cell_type(ElementKind k)
{
    switch (k) {
    case ElementKind::tri3: return 5;
    case ElementKind::quad4: return 9;
    case ElementKind::tet4: return 10;
    case ElementKind::hex8: return 12;
    }
    return 0;
}

/// Legacy ASCII VTK 4.2 unstructured grid with phi and displacement.
inline void write_vtk(const Mesh& mesh, const NodalFields& f, std::ostream& out)
{
    using detail::fmt;
    out << "# vtk DataFile Version 4.2\nphase field snapshot\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.num_nodes() << " float\n";
    for (const Vec3& x : mesh.nodes)
        out << fmt("%.9g", x(0)) << ' ' << fmt("%.9g", x(1)) << ' ' << fmt("%.9g", x(2)) << '\n';
    long size = 0;
    for (const Element& el : mesh.elements)
        size += 1 + static_cast<long>(el.nodes.size());
    out << "CELLS " << mesh.num_elements() << ' ' << size << '\n';
    for (const Element& el : mesh.elements) {
        out << el.nodes.size();
        for (int n : el.nodes)
            out << ' ' << n;
        out << '\n';
    }
    out << "CELL_TYPES " << mesh.num_elements() << '\n';
    for (const Element& el : mesh.elements)
        out << vtk_cell_type(el.kind) << '\n';
    out << "POINT_DATA " << mesh.num_nodes() << "\nSCALARS phi float 1\nLOOKUP_TABLE default\n";
    for (double p : f.phi)
        out << fmt("%.9g", p) << '\n';
    out << "VECTORS displacement float\n";
    for (const Vec3& u : f.u)
        out << fmt("%.9g", u(0)) << ' ' << fmt("%.9g", u(1)) << ' ' << fmt("%.9g", u(2)) << '\n';
}

inline void write_vtk(const Mesh& mesh, const NodalFields& f, const std::filesystem::path& path)
{
    auto out = detail::open_out(path);
    write_vtk(mesh, f, out);
    detail::close_out(out, path);
}

inline void force_displacement_csv(const SimulationRecord& rec, std::ostream& out)
{
    out << "displacement_mm,force_N\n";
    for (const StepRecord& s : rec.steps)
        out << detail::fmt("%.12g", s.displacement) << ',' << detail::fmt("%.12g", s.force) << '\n';
}

inline void force_displacement_csv(const SimulationRecord& rec, const std::filesystem::path& path)
{
    auto out = detail::open_out(path);
    force_displacement_csv(rec, out);
    detail::close_out(out, path);
}

/// key = value summary. The strength implied by the parameters is always
/// reported, also for failed or empty runs.
inline void write_summary(const SimulationRecord& rec, const MaterialParams& p, std::ostream& out)
{
    using detail::fmt;
    out << "sigma_c_MPa = " << fmt("%.6g", critical_stress(p)) << '\n';
    out << "critical_strain = " << fmt("%.6g", critical_strain(p)) << '\n';
    if (rec.steps.empty()) {
        out << "status = error: no converged steps";
        if (!rec.failure.empty())
            out << " (" << rec.failure << ')';
        out << '\n';
        return;
    }
    const StepRecord& pk = rec.steps[rec.peak_index()];
    out << "peak_force_N = " << fmt("%.12g", pk.force) << '\n';
    out << "displacement_at_peak_mm = " << fmt("%.12g", pk.displacement) << '\n';
    out << "peak_step = " << pk.step << '\n';
    out << "steps = " << rec.steps.size() << '\n';
    out << "final_displacement_mm = " << fmt("%.12g", rec.steps.back().displacement) << '\n';
    out << "final_max_phi = " << fmt("%.6g", rec.steps.back().max_phi) << '\n';
    if (rec.completed)
        out << "status = completed\n";
    else
        out << "status = failed: " << rec.failure << '\n';
}

inline void write_summary(const SimulationRecord& rec, const MaterialParams& p, const std::filesystem::path& path)
{
    auto out = detail::open_out(path);
    write_summary(rec, p, out);
    detail::close_out(out, path);
}

} // namespace pff
