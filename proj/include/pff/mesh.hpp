#ifndef PFF_MESH_HPP
#define PFF_MESH_HPP

#include "pff/error.hpp"
#include "pff/fem.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pff
{

using Vec3 = Eigen::Vector3d;

struct Element
{
    ElementKind kind = ElementKind::quad4;
    std::vector<int> nodes;
};

/// (element, local face) pair of a side set.
struct SideRef
{
    int element = 0;
    int face = 0;
    friend bool operator==(const SideRef&, const SideRef&) = default;
};

/// Unstructured mesh. Node ids are dense 0-based indices into `nodes`; 2D
/// meshes keep z = 0. `thickness` is the out-of-plane depth used to turn
/// plane-strain line forces into forces (1 for 3D meshes).
struct Mesh
{
    int dim = 2;
    std::vector<Vec3> nodes;
    std::vector<Element> elements;
    std::map<std::string, std::vector<int>> node_sets;
    std::map<std::string, std::vector<SideRef>> side_sets;
    std::map<std::string, Vec3> landmarks;
    double thickness = 1.0;

    int num_nodes() const { return static_cast<int>(nodes.size()); }
    int num_elements() const { return static_cast<int>(elements.size()); }

    const std::vector<int>& node_set(const std::string& name) const
    {
        auto it = node_sets.find(name);
        if (it == node_sets.end())
            throw MeshError("unknown node set '" + name + "'");
        return it->second;
    }
};

/// Nodal coordinates of element e in the fixed-size layout of kind K.
template <ElementKind K>
typename ElementTraits<K>::Coords element_coords(const Mesh& mesh, int e)
{
    using T = ElementTraits<K>;
    typename T::Coords x;
    const Element& el = mesh.elements[e];
    for (int a = 0; a < T::nodes; ++a)
        x.row(a) = mesh.nodes[el.nodes[a]].head<T::dim>().transpose();
    return x;
}

/// Kinematics with dynamic sizes, for callers that do not dispatch on kind.
struct ElementKinematics
{
    Eigen::VectorXd N;
    Eigen::MatrixXd dN_dx;
    Eigen::MatrixXd B_u;
    Eigen::MatrixXd B_phi;
    double detJxW = 0.0;
};

inline ElementKinematics kinematics_at(const Mesh& mesh, int e, int qp)
{
    return dispatch(mesh.elements[e].kind, [&](auto t) {
        using T = decltype(t);
        const auto k = kinematics_at<T::kind>(element_coords<T::kind>(mesh, e), qp, e);
        return ElementKinematics{k.N, k.dN_dx, k.B_u, k.B_phi, k.detJxW};
    });
}

/// Area (2D) or volume (3D) of element e by its quadrature rule.
inline double element_measure(const Mesh& mesh, int e)
{
    return dispatch(mesh.elements[e].kind, [&](auto t) {
        using T = decltype(t);
        const auto x = element_coords<T::kind>(mesh, e);
        double m = 0.0;
        for (int q = 0; q < T::nqp; ++q)
            m += kinematics_at<T::kind>(x, q, e).detJxW;
        return m;
    });
}

inline double mesh_measure(const Mesh& mesh)
{
    double m = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e)
        m += element_measure(mesh, e);
    return m;
}

/// Local vertex pairs forming the edges of each element kind.
inline const std::vector<std::pair<int, int>>& element_edges(ElementKind k)
{
    static const std::vector<std::pair<int, int>> tri{{0, 1}, {1, 2}, {2, 0}};
    static const std::vector<std::pair<int, int>> quad{{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    static const std::vector<std::pair<int, int>> tet{{0, 1}, {1, 2}, {2, 0}, {0, 3}, {1, 3}, {2, 3}};
    static const std::vector<std::pair<int, int>> hex{{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                                      {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
    switch (k) {
    case ElementKind::tri3: return tri;
    case ElementKind::quad4: return quad;
    case ElementKind::tet4: return tet;
    case ElementKind::hex8: break;
    }
    return hex;
}

/// Local node lists of element faces (edges in 2D), outward ordering.
inline const std::vector<std::vector<int>>& element_faces(ElementKind k)
{
    static const std::vector<std::vector<int>> tri{{0, 1}, {1, 2}, {2, 0}};
    static const std::vector<std::vector<int>> quad{{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    static const std::vector<std::vector<int>> tet{{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}};
    static const std::vector<std::vector<int>> hex{{0, 3, 2, 1}, {0, 1, 5, 4}, {1, 2, 6, 5},
                                                   {2, 3, 7, 6}, {3, 0, 4, 7}, {4, 5, 6, 7}};
    switch (k) {
    case ElementKind::tri3: return tri;
    case ElementKind::quad4: return quad;
    case ElementKind::tet4: return tet;
    case ElementKind::hex8: break;
    }
    return hex;
}

/// Characteristic size of an element: its minimum edge length.
inline double element_size(const Mesh& mesh, int e)
{
    const Element& el = mesh.elements[e];
    double h = std::numeric_limits<double>::infinity();
    for (auto [a, b] : element_edges(el.kind))
        h = std::min(h, (mesh.nodes[el.nodes[a]] - mesh.nodes[el.nodes[b]]).norm());
    return h;
}

/// Checks every structural invariant; throws MeshError / SingularJacobian.
inline void validate(const Mesh& mesh)
{
    if (mesh.dim != 2 && mesh.dim != 3)
        throw MeshError("mesh dimension must be 2 or 3");
    if (mesh.elements.empty())
        throw MeshError("mesh has no elements");
    for (const Vec3& x : mesh.nodes)
        if (!x.allFinite())
            throw MeshError("non-finite node coordinate");
    const int nn = mesh.num_nodes();
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const Element& el = mesh.elements[e];
        if (dimension_of(el.kind) != mesh.dim)
            throw MeshError("element " + std::to_string(e) + " of kind " + std::string(to_string(el.kind)) +
                            " in a " + std::to_string(mesh.dim) + "D mesh");
        if (static_cast<int>(el.nodes.size()) != node_count(el.kind))
            throw MeshError("element " + std::to_string(e) + " has wrong connectivity length");
        for (int n : el.nodes)
            if (n < 0 || n >= nn)
                throw MeshError("element " + std::to_string(e) + " references missing node " + std::to_string(n));
        std::vector<int> sorted = el.nodes;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw MeshError("element " + std::to_string(e) + " repeats a node");
        dispatch(el.kind, [&](auto t) {
            using T = decltype(t);
            const auto x = element_coords<T::kind>(mesh, e);
            for (int q = 0; q < T::nqp; ++q)
                kinematics_at<T::kind>(x, q, e);
            return 0;
        });
    }
    for (const auto& [name, ids] : mesh.node_sets) {
        if (ids.empty())
            throw MeshError("node set '" + name + "' is empty");
        for (int n : ids)
            if (n < 0 || n >= nn)
                throw MeshError("node set '" + name + "' references missing node " + std::to_string(n));
    }
    for (const auto& [name, sides] : mesh.side_sets) {
        if (sides.empty())
            throw MeshError("side set '" + name + "' is empty");
        for (const SideRef& s : sides)
            if (s.element < 0 || s.element >= mesh.num_elements() ||
                s.face >= static_cast<int>(element_faces(mesh.elements[s.element].kind).size()))
                throw MeshError("side set '" + name + "' references a missing face");
    }
}

struct ResolutionReport
{
    double h_min = 0.0;
    double h_max = 0.0;
    double h_crackzone = 0.0;
    double ratio = 0.0;
    bool pass = false;
};

/// Smallest admissible ell / h ratio for a mesh-objective phase field.
inline constexpr double min_resolution_ratio = 5.0;

/// Resolution of the length scale ell. With a region, the crack-zone size
/// is the largest characteristic size among elements whose nodes all lie in
/// that node set; without one, the whole mesh is the crack zone.
inline ResolutionReport characteristic_size(const Mesh& mesh, double ell,
                                            const std::optional<std::string>& region = std::nullopt)
{
    std::vector<char> in_region;
    if (region) {
        const auto& ids = mesh.node_set(*region);
        in_region.assign(mesh.nodes.size(), 0);
        for (int n : ids)
            in_region[n] = 1;
    }
    ResolutionReport r;
    r.h_min = std::numeric_limits<double>::infinity();
    r.h_max = 0.0;
    double hz = 0.0;
    bool any = false;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const double h = element_size(mesh, e);
        r.h_min = std::min(r.h_min, h);
        r.h_max = std::max(r.h_max, h);
        if (region) {
            const auto& ns = mesh.elements[e].nodes;
            if (!std::all_of(ns.begin(), ns.end(), [&](int n) { return in_region[n] != 0; }))
                continue;
        }
        hz = std::max(hz, h);
        any = true;
    }
    if (!any)
        throw MeshError("region '" + region.value_or("") + "' contains no complete element");
    r.h_crackzone = hz;
    r.ratio = ell / hz;
    // Node coordinates built by repeated addition carry ~1e-16 relative noise.
    r.pass = r.ratio >= min_resolution_ratio * (1.0 - 1e-12);
    return r;
}

} // namespace pff

#endif // PFF_MESH_HPP
