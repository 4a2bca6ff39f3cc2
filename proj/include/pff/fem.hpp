#ifndef PFF_FEM_HPP
#define PFF_FEM_HPP

// Linear Lagrange elements: shape functions, full-integration quadrature and
// the strain-displacement / gradient operators used by the coupled assembly.
//
// Voigt convention: engineering shear (gamma_xy = 2 eps_xy). Plane strain
// vectors are (xx, yy, zz, xy) with zz kept explicitly so the trace is the 3D
// trace; 3D vectors are (xx, yy, zz, xy, xz, yz).

#include "pff/error.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace pff
{

enum class ElementKind : std::uint8_t
{
    tri3,
    quad4,
    tet4,
    hex8
};

constexpr int node_count(ElementKind k)
{
    switch (k) {
    case ElementKind::tri3: return 3;
    case ElementKind::quad4: return 4;
    case ElementKind::tet4: return 4;
    case ElementKind::hex8: return 8;
    }
    return 0;
}

constexpr int dimension_of(ElementKind k)
{
    return (k == ElementKind::tri3 || k == ElementKind::quad4) ? 2 : 3;
}

constexpr int qp_count(ElementKind k)
{
    switch (k) {
    case ElementKind::tri3: return 1;
    case ElementKind::quad4: return 4;
    case ElementKind::tet4: return 1;
    case ElementKind::hex8: return 8;
    }
    return 0;
}

constexpr int voigt_size(int dim) { return dim == 2 ? 4 : 6; }

constexpr std::string_view to_string(ElementKind k)
{
    switch (k) {
    case ElementKind::tri3: return "tri3";
    case ElementKind::quad4: return "quad4";
    case ElementKind::tet4: return "tet4";
    case ElementKind::hex8: return "hex8";
    }
    return "?";
}

/// Measure of the parent element (sum of quadrature weights).
constexpr double parent_measure(ElementKind k)
{
    switch (k) {
    case ElementKind::tri3: return 0.5;
    case ElementKind::quad4: return 4.0;
    case ElementKind::tet4: return 1.0 / 6.0;
    case ElementKind::hex8: return 8.0;
    }
    return 0.0;
}

/// Compile-time element description used by the fixed-size kernels.
template <ElementKind K>
struct ElementTraits
{
    static constexpr ElementKind kind = K;
    static constexpr int nodes = node_count(K);
    static constexpr int dim = dimension_of(K);
    static constexpr int nqp = qp_count(K);
    static constexpr int nv = voigt_size(dim);
    static constexpr int ndof_u = nodes * dim;
    static constexpr int ndof = nodes * (dim + 1);

    using Point = Eigen::Matrix<double, dim, 1>;
    using ShapeValues = Eigen::Matrix<double, nodes, 1>;
    using ShapeGrads = Eigen::Matrix<double, nodes, dim>;
    using Coords = Eigen::Matrix<double, nodes, dim>;
};

template <ElementKind K>
struct QuadRule
{
    using T = ElementTraits<K>;
    std::array<typename T::Point, T::nqp> points;
    std::array<double, T::nqp> weights;
};

/// Full integration: 2x2 / 2x2x2 Gauss for quad4 / hex8, centroid rule for
/// the simplices.
template <ElementKind K>
const QuadRule<K>& quad_rule()
{
    static const QuadRule<K> rule = [] {
        QuadRule<K> q;
        const double g = 1.0 / std::sqrt(3.0);
        if constexpr (K == ElementKind::tri3) {
            q.points[0] << 1.0 / 3.0, 1.0 / 3.0;
            q.weights[0] = 0.5;
        } else if constexpr (K == ElementKind::tet4) {
            q.points[0] << 0.25, 0.25, 0.25;
            q.weights[0] = 1.0 / 6.0;
        } else if constexpr (K == ElementKind::quad4) {
            const double s[4][2] = {{-g, -g}, {g, -g}, {g, g}, {-g, g}};
            for (int i = 0; i < 4; ++i) {
                q.points[i] << s[i][0], s[i][1];
                q.weights[i] = 1.0;
            }
        } else {
            int i = 0;
            for (int c = 0; c < 2; ++c)
                for (int b = 0; b < 2; ++b)
                    for (int a = 0; a < 2; ++a, ++i) {
                        q.points[i] << (a ? g : -g), (b ? g : -g), (c ? g : -g);
                        q.weights[i] = 1.0;
                    }
        }
        return q;
    }();
    return rule;
}

/// Parent coordinates of the element vertices (Gmsh ordering).
template <ElementKind K>
typename ElementTraits<K>::Coords parent_vertices()
{
    typename ElementTraits<K>::Coords v;
    if constexpr (K == ElementKind::tri3)
        v << 0, 0, 1, 0, 0, 1;
    else if constexpr (K == ElementKind::quad4)
        v << -1, -1, 1, -1, 1, 1, -1, 1;
    else if constexpr (K == ElementKind::tet4)
        v << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1;
    else
        v << -1, -1, -1, 1, -1, -1, 1, 1, -1, -1, 1, -1, -1, -1, 1, 1, -1, 1, 1, 1, 1, -1, 1, 1;
    return v;
}

/// True when xi lies in the closed parent element (with tolerance).
template <ElementKind K>
bool inside_parent(const typename ElementTraits<K>::Point& xi, double tol = 1e-12)
{
    if constexpr (K == ElementKind::tri3 || K == ElementKind::tet4)
        return (xi.array() >= -tol).all() && xi.sum() <= 1.0 + tol;
    else
        return (xi.array().abs() <= 1.0 + tol).all();
}

template <ElementKind K>
struct ShapeEval
{
    typename ElementTraits<K>::ShapeValues N;
    typename ElementTraits<K>::ShapeGrads dN_dxi;
};

/// Linear Lagrange shape functions and their parent-coordinate gradients.
template <ElementKind K>
ShapeEval<K> shape_eval(const typename ElementTraits<K>::Point& xi)
{
    ShapeEval<K> s;
    if constexpr (K == ElementKind::tri3) {
        s.N << 1.0 - xi(0) - xi(1), xi(0), xi(1);
        s.dN_dxi << -1, -1, 1, 0, 0, 1;
    } else if constexpr (K == ElementKind::tet4) {
        s.N << 1.0 - xi(0) - xi(1) - xi(2), xi(0), xi(1), xi(2);
        s.dN_dxi << -1, -1, -1, 1, 0, 0, 0, 1, 0, 0, 0, 1;
    } else {
        const auto v = parent_vertices<K>();
        for (int a = 0; a < ElementTraits<K>::nodes; ++a) {
            double n = 1.0;
            for (int d = 0; d < ElementTraits<K>::dim; ++d)
                n *= 0.5 * (1.0 + v(a, d) * xi(d));
            s.N(a) = n;
            for (int d = 0; d < ElementTraits<K>::dim; ++d) {
                double g = 0.5 * v(a, d);
                for (int e = 0; e < ElementTraits<K>::dim; ++e)
                    if (e != d)
                        g *= 0.5 * (1.0 + v(a, e) * xi(e));
                s.dN_dxi(a, d) = g;
            }
        }
    }
    return s;
}

/// Kinematic operators at one quadrature point.
template <ElementKind K>
struct Kinematics
{
    using T = ElementTraits<K>;
    typename T::ShapeValues N;
    typename T::ShapeGrads dN_dx;
    Eigen::Matrix<double, T::nv, T::ndof_u> B_u;
    Eigen::Matrix<double, T::dim, T::nodes> B_phi;
    double detJxW = 0.0;
};

/// Small-strain operator in Voigt form (engineering shear) from spatial
/// shape-function gradients.
template <ElementKind K>
Eigen::Matrix<double, ElementTraits<K>::nv, ElementTraits<K>::ndof_u>
strain_operator(const typename ElementTraits<K>::ShapeGrads& g)
{
    using T = ElementTraits<K>;
    Eigen::Matrix<double, T::nv, T::ndof_u> B = Eigen::Matrix<double, T::nv, T::ndof_u>::Zero();
    for (int a = 0; a < T::nodes; ++a) {
        const int c = a * T::dim;
        if constexpr (T::dim == 2) {
            B(0, c) = g(a, 0);
            B(1, c + 1) = g(a, 1);
            // row 2 (zz) stays zero: plane strain
            B(3, c) = g(a, 1);
            B(3, c + 1) = g(a, 0);
        } else {
            B(0, c) = g(a, 0);
            B(1, c + 1) = g(a, 1);
            B(2, c + 2) = g(a, 2);
            B(3, c) = g(a, 1);
            B(3, c + 1) = g(a, 0);
            B(4, c) = g(a, 2);
            B(4, c + 2) = g(a, 0);
            B(5, c + 1) = g(a, 2);
            B(5, c + 2) = g(a, 1);
        }
    }
    return B;
}

/// Kinematics at an arbitrary parent point with weight w. Throws
/// SingularJacobian (tagged with element id `eid`) if det J <= 0.
template <ElementKind K>
Kinematics<K> kinematics_at_point(const typename ElementTraits<K>::Coords& x,
                                  const typename ElementTraits<K>::Point& xi, double w, int eid = -1)
{
    using T = ElementTraits<K>;
    const ShapeEval<K> s = shape_eval<K>(xi);
    const Eigen::Matrix<double, T::dim, T::dim> J = x.transpose() * s.dN_dxi;
    const double det = J.determinant();
    if (!(det > 0.0))
        throw SingularJacobian(eid, det);
    Kinematics<K> k;
    k.N = s.N;
    k.dN_dx = s.dN_dxi * J.inverse();
    k.B_u = strain_operator<K>(k.dN_dx);
    k.B_phi = k.dN_dx.transpose();
    k.detJxW = det * w;
    return k;
}

template <ElementKind K>
Kinematics<K> kinematics_at(const typename ElementTraits<K>::Coords& x, int qp, int eid = -1)
{
    const QuadRule<K>& q = quad_rule<K>();
    return kinematics_at_point<K>(x, q.points[qp], q.weights[qp], eid);
}

/// eps = B_u * u_e; u_e is node-major (u_x0, u_y0, [u_z0], u_x1, ...).
template <ElementKind K>
Eigen::Matrix<double, ElementTraits<K>::nv, 1>
strain(const Kinematics<K>& k, const Eigen::Matrix<double, ElementTraits<K>::ndof_u, 1>& u_e)
{
    return k.B_u * u_e;
}

/// Runtime dispatch on element kind: calls f(std::integral_constant-like tag).
template <class F>
decltype(auto) dispatch(ElementKind kind, F&& f)
{
    switch (kind) {
    case ElementKind::tri3: return f(ElementTraits<ElementKind::tri3>{});
    case ElementKind::quad4: return f(ElementTraits<ElementKind::quad4>{});
    case ElementKind::tet4: return f(ElementTraits<ElementKind::tet4>{});
    case ElementKind::hex8: break;
    }
    return f(ElementTraits<ElementKind::hex8>{});
}

} // namespace pff

#endif // PFF_FEM_HPP
