#pragma once

#include "pff/benchmarks.hpp"

namespace pff
{

struct Verify1DResult
{
    double sigma_analytic = 0.0;  // MPa
    double eps_analytic = 0.0;
    double sigma_fem = 0.0;
    double eps_fem = 0.0;
    bool converged = false;

    double sigma_error() const { return std::abs(sigma_fem - sigma_analytic) / sigma_analytic; }
    double eps_error() const { return std::abs(eps_fem - eps_analytic) / eps_analytic; }
    bool pass(double tol = 0.01) const { return converged && sigma_error() < tol && eps_error() < tol; }
};

/// One unit hex8 with symmetry planes x = 0, y = 0, z = 0, pulled along x
/// on the face x = 1 (prescribed ux = load factor).
inline Benchmark uniaxial_element()
{
    Benchmark b;
    Mesh& m = b.mesh;
    m = box_mesh(1.0, 1.0, 1.0, 1, 1, 1);
    m.node_sets["x0"] = nodes_on_plane(m, 0, 0.0);
    m.node_sets["x1"] = nodes_on_plane(m, 0, 1.0);
    m.node_sets["y0"] = nodes_on_plane(m, 1, 0.0);
    m.node_sets["z0"] = nodes_on_plane(m, 2, 0.0);
    b.bcs = {{"x0", Component::ux, 0.0}, {"y0", Component::uy, 0.0}, {"z0", Component::uz, 0.0}, {"x1", Component::ux, 1.0}};
    b.load = {"x1", Component::ux};
    return b;
}

/// Uniaxial tension of uniaxial_element(), strained to 3x the critical
/// strain. The lateral faces stay traction free, so the whole strain energy
/// is tensile and the response is the homogeneous 1D solution. The peak is
/// refined by a parabola through the largest sample and its neighbours.
inline Verify1DResult verify_1d(const MaterialParams& p, int n_steps = 150, int threads = 1)
{
    p.validate();
    const Benchmark b = uniaxial_element();
    Verify1DResult r;
    r.sigma_analytic = critical_stress(p);
    r.eps_analytic = critical_strain(p);

    StepControl c;
    c.u_max = 3.0 * r.eps_analytic;
    c.n_steps = n_steps;
    c.post_peak_fraction = 0.0;
    Simulation sim(b.mesh, p, b.bcs, b.load, threads);
    const SimulationRecord rec = sim.run(c, SolverMode::monolithic_full);
    r.converged = rec.completed;
    const int k = rec.peak_index();
    if (k < 0)
        return r;
    const auto& s = rec.steps;
    r.sigma_fem = s[k].force;  // unit cross section
    r.eps_fem = s[k].displacement;
    if (k > 0 && k + 1 < static_cast<int>(s.size())) {
        const double x0 = s[k - 1].displacement, x1 = s[k].displacement, x2 = s[k + 1].displacement;
        const double y0 = s[k - 1].force, y1 = s[k].force, y2 = s[k + 1].force;
        const double d01 = (y1 - y0) / (x1 - x0), d12 = (y2 - y1) / (x2 - x1);
        const double a = (d12 - d01) / (x2 - x0);
        if (a < 0) {
            const double b = d01 - a * (x0 + x1);
            r.eps_fem = -b / (2 * a);
            r.sigma_fem = y1 + (r.eps_fem - x1) * (d01 + a * (r.eps_fem - x0));
        }
    }
    return r;
}

} // namespace pff
