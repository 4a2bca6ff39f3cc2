#pragma once

#include "pff/geometry.hpp"
#include "pff/solver.hpp"

namespace pff
{

struct Benchmark
{
    Mesh mesh;
    std::vector<BoundaryCondition> bcs;
    LoadSpec load;
};

/// Displacement boundary conditions of the builtin specimens at unit load
/// factor (the solver scales them by the applied displacement in mm).
///   beams: rollers uy = 0 on both support lines; the load line moves down
///          with ux = 0 (and uz = 0 in 3D) removing the rigid modes.
///          Beams also pin phi = 0 on the "no_damage" pads when present.
///   SENT:  bottom uy = 0, bottom-left node ux = 0, top edge pulled up with
///          ux = 0.
inline std::vector<BoundaryCondition> builtin_bcs(Specimen s, int dim)
{
    if (s == Specimen::SENT)
        return {{"bottom", Component::uy, 0.0},
                {"support_left", Component::ux, 0.0},
                {"load_line", Component::ux, 0.0},
                {"load_line", Component::uy, 1.0}};
    std::vector<BoundaryCondition> b{{"support_left", Component::uy, 0.0},
                                     {"support_right", Component::uy, 0.0},
                                     {"load_line", Component::ux, 0.0},
                                     {"load_line", Component::uy, -1.0}};
    if (dim == 3)
        b.push_back({"load_line", Component::uz, 0.0});
    return b;
}

inline Benchmark builtin_benchmark(Specimen s, const GeometryOptions& opt = {})
{
    Benchmark b;
    b.mesh = builtin_geometry(s, opt);
    b.bcs = builtin_bcs(s, b.mesh.dim);
    if (b.mesh.node_sets.count("no_damage"))
        b.bcs.push_back({"no_damage", Component::phi, 0.0});
    return b;
}

} // namespace pff
