#pragma once

#include "pff/mesh.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <queue>

namespace pff
{

class NoCrack : public Error
{
public:
    using Error::Error;
};

struct CrackPath2D
{
    std::vector<Eigen::Vector2d> points;
    double h = 0.0;  // element size used for the front spacing
};

namespace crack_detail
{

// Pairs of flagged nodes closer than r, found through a bucket grid. Used
// instead of mesh edges: on an inclined crack the thin phi >= threshold band
// need not be edge connected.
inline std::vector<std::vector<std::pair<int, double>>> proximity_graph(const Mesh& mesh,
                                                                        const std::vector<char>& keep, double r)
{
    std::map<std::array<long, 3>, std::vector<int>> cells;
    auto cell = [&](const Vec3& x) {
        return std::array<long, 3>{static_cast<long>(std::floor(x(0) / r)), static_cast<long>(std::floor(x(1) / r)),
                                   static_cast<long>(std::floor(x(2) / r))};
    };
    for (int v = 0; v < mesh.num_nodes(); ++v)
        if (keep[v])
            cells[cell(mesh.nodes[v])].push_back(v);
    std::vector<std::vector<std::pair<int, double>>> g(mesh.num_nodes());
    for (int v = 0; v < mesh.num_nodes(); ++v) {
        if (!keep[v])
            continue;
        const auto c = cell(mesh.nodes[v]);
        for (long i = -1; i <= 1; ++i)
            for (long j = -1; j <= 1; ++j)
                for (long k = -1; k <= 1; ++k) {
                    auto it = cells.find({c[0] + i, c[1] + j, c[2] + k});
                    if (it == cells.end())
                        continue;
                    for (int w : it->second) {
                        const double l = (mesh.nodes[v] - mesh.nodes[w]).norm();
                        if (w != v && l <= r)
                            g[v].emplace_back(w, l);
                    }
                }
        std::sort(g[v].begin(), g[v].end());
    }
    return g;
}

} // namespace crack_detail

/// Ridge of the phase field band phi >= threshold, traced from the cracked
/// node nearest to `start` (default: the mesh's "notch_tip" landmark).
/// Cracked nodes are ordered by their geodesic distance from that seed inside
/// the band (hops up to 2.5 h); every front of width h contributes the centroid of its
/// (near-)maximal nodes.
inline CrackPath2D extract_crack_path(const Mesh& mesh, const std::vector<double>& phi, double threshold = 0.95,
                                      std::optional<Vec3> start = std::nullopt)
{
    if (mesh.dim != 2)
        throw MeshError("crack path extraction needs a 2D mesh");
    const int n = mesh.num_nodes();
    std::vector<char> cracked(n, 0);
    double max_phi = -1.0;
    int arg_max = 0;
    for (int v = 0; v < n; ++v) {
        cracked[v] = phi[v] >= threshold;
        if (phi[v] > max_phi) {
            max_phi = phi[v];
            arg_max = v;
        }
    }
    if (max_phi < threshold) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "no crack: max phi %.4g is below threshold %.4g", max_phi, threshold);
        throw NoCrack(buf);
    }
    if (!start) {
        auto it = mesh.landmarks.find("notch_tip");
        start = it != mesh.landmarks.end() ? it->second : mesh.nodes[arg_max];
    }

    // element size: median over the elements touching the crack band
    CrackPath2D path;
    std::vector<double> sizes;
    for (int e = 0; e < mesh.num_elements(); ++e)
        for (int v : mesh.elements[e].nodes)
            if (cracked[v]) {
                sizes.push_back(element_size(mesh, e));
                break;
            }
    std::nth_element(sizes.begin(), sizes.begin() + sizes.size() / 2, sizes.end());
    path.h = sizes[sizes.size() / 2];
    const auto g = crack_detail::proximity_graph(mesh, cracked, 2.5 * path.h);

    int seed = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int v = 0; v < n; ++v)
        if (cracked[v]) {
            const double d = (mesh.nodes[v] - *start).head<2>().norm();
            if (d < best) {
                best = d;
                seed = v;
            }
        }

    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[seed] = 0.0;
    pq.emplace(0.0, seed);
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d > dist[v])
            continue;
        for (auto [w, l] : g[v])
            if (d + l < dist[w]) {
                dist[w] = d + l;
                pq.emplace(dist[w], w);
            }
    }

    std::map<long, std::vector<int>> fronts;
    for (int v = 0; v < n; ++v)
        if (std::isfinite(dist[v]))
            fronts[static_cast<long>(std::floor(dist[v] / path.h + 0.5))].push_back(v);
    const double plateau = 0.01;
    for (const auto& [k, nodes] : fronts) {
        double m = -1.0;
        for (int v : nodes)
            m = std::max(m, phi[v]);
        Eigen::Vector2d c = Eigen::Vector2d::Zero();
        int cnt = 0;
        for (int v : nodes)
            if (phi[v] >= m - plateau) {
                c += mesh.nodes[v].head<2>();
                ++cnt;
            }
        path.points.push_back(c / cnt);
    }
    return path;
}

inline double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    const Eigen::Vector2d ab = b - a;
    const double L2 = ab.squaredNorm();
    const double t = L2 > 0 ? std::clamp((p - a).dot(ab) / L2, 0.0, 1.0) : 0.0;
    return (a + t * ab - p).norm();
}

inline double point_polyline_distance(const Eigen::Vector2d& p, const std::vector<Eigen::Vector2d>& line)
{
    if (line.size() == 1)
        return (p - line[0]).norm();
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < line.size(); ++i)
        d = std::min(d, point_segment_distance(p, line[i], line[i + 1]));
    return d;
}

/// Mean perpendicular distance between two polylines, symmetrized.
inline double path_distance(const std::vector<Eigen::Vector2d>& a, const std::vector<Eigen::Vector2d>& b)
{
    if (a.empty() || b.empty())
        throw Error("path_distance of an empty polyline");
    double sa = 0.0, sb = 0.0;
    for (const auto& p : a)
        sa += point_polyline_distance(p, b);
    for (const auto& p : b)
        sb += point_polyline_distance(p, a);
    return 0.5 * (sa / a.size() + sb / b.size());
}

/// Evaluates a nodal field at arbitrary points (bucket grid over element
/// bounding boxes, inverse isoparametric map).
class FieldProbe
{
public:
    FieldProbe(const Mesh& mesh, const std::vector<double>& field) : mesh_(mesh), field_(field)
    {
        lo_ = hi_ = mesh.nodes.front();
        for (const Vec3& x : mesh.nodes) {
            lo_ = lo_.cwiseMin(x);
            hi_ = hi_.cwiseMax(x);
        }
        double vol = 1.0;
        for (int d = 0; d < mesh.dim; ++d)
            vol *= hi_(d) - lo_(d);
        const double cell = std::pow(vol / mesh.num_elements(), 1.0 / mesh.dim) * 2.0;
        for (int d = 0; d < 3; ++d)
            n_[d] = d < mesh.dim ? std::max(1, static_cast<int>((hi_(d) - lo_(d)) / cell)) : 1;
        buckets_.resize(static_cast<std::size_t>(n_[0]) * n_[1] * n_[2]);
        boxes_.resize(mesh.num_elements());
        for (int e = 0; e < mesh.num_elements(); ++e) {
            Vec3 a = mesh.nodes[mesh.elements[e].nodes[0]], b = a;
            for (int v : mesh.elements[e].nodes) {
                a = a.cwiseMin(mesh.nodes[v]);
                b = b.cwiseMax(mesh.nodes[v]);
            }
            boxes_[e] = {a, b};
            const auto i0 = index(a), i1 = index(b);
            for (int i = i0[0]; i <= i1[0]; ++i)
                for (int j = i0[1]; j <= i1[1]; ++j)
                    for (int k = i0[2]; k <= i1[2]; ++k)
                        buckets_[(static_cast<std::size_t>(k) * n_[1] + j) * n_[0] + i].push_back(e);
        }
    }

    /// Field value at x, or nullopt outside the mesh.
    std::optional<double> operator()(const Vec3& x) const
    {
        for (int d = 0; d < mesh_.dim; ++d)
            if (x(d) < lo_(d) - 1e-12 || x(d) > hi_(d) + 1e-12)
                return std::nullopt;
        const auto i = index(x);
        for (int e : buckets_[(static_cast<std::size_t>(i[2]) * n_[1] + i[1]) * n_[0] + i[0]]) {
            const auto& [a, b] = boxes_[e];
            bool in = true;
            for (int d = 0; d < mesh_.dim; ++d)
                in = in && x(d) >= a(d) - 1e-12 && x(d) <= b(d) + 1e-12;
            if (!in)
                continue;
            const std::optional<double> v = dispatch(mesh_.elements[e].kind, [&](auto t) -> std::optional<double> {
                using T = decltype(t);
                return evaluate<T::kind>(e, x);
            });
            if (v)
                return v;
        }
        return std::nullopt;
    }

private:
    std::array<int, 3> index(const Vec3& x) const
    {
        std::array<int, 3> i{0, 0, 0};
        for (int d = 0; d < mesh_.dim; ++d) {
            const double t = (x(d) - lo_(d)) / (hi_(d) - lo_(d));
            i[d] = std::clamp(static_cast<int>(t * n_[d]), 0, n_[d] - 1);
        }
        return i;
    }

    template <ElementKind K>
    std::optional<double> evaluate(int e, const Vec3& x) const
    {
        using T = ElementTraits<K>;
        const auto X = element_coords<K>(mesh_, e);
        const typename T::Point target = x.head<T::dim>();
        typename T::Point xi = T::Point::Zero();
        for (int it = 0; it < 20; ++it) {
            const auto s = shape_eval<K>(xi);
            const typename T::Point r = X.transpose() * s.N - target;
            if (r.norm() < 1e-13 * (1.0 + target.norm()))
                break;
            const Eigen::Matrix<double, T::dim, T::dim> J = X.transpose() * s.dN_dxi;
            xi -= J.lu().solve(r);
        }
        if (!inside_parent<K>(xi, 1e-9))
            return std::nullopt;
        const auto s = shape_eval<K>(xi);
        double v = 0.0;
        for (int a = 0; a < T::nodes; ++a)
            v += s.N(a) * field_[mesh_.elements[e].nodes[a]];
        return v;
    }

    const Mesh& mesh_;
    const std::vector<double>& field_;
    Vec3 lo_, hi_;
    std::array<int, 3> n_{};
    std::vector<std::vector<int>> buckets_;
    std::vector<std::pair<Vec3, Vec3>> boxes_;
};

/// Height map of a 3D crack band: for every point of a regular grid over the
/// two axes other than `axis`, the centroid of the samples with
/// phi >= threshold along a line parallel to `axis`. NaN where the line does
/// not cross the band.
struct CrackSurface3D
{
    int axis = 0;
    double spacing = 0.1;
    std::vector<double> rows;  // coordinates along axis (axis + 1) % 3
    std::vector<double> cols;  // coordinates along axis (axis + 2) % 3
    Eigen::MatrixXd height;
};

inline CrackSurface3D extract_crack_surface(const Mesh& mesh, const std::vector<double>& phi, double threshold = 0.95,
                                            double spacing = 0.1, int axis = 0)
{
    if (mesh.dim != 3)
        throw MeshError("crack surface extraction needs a 3D mesh");
    if (!(spacing > 0) || axis < 0 || axis > 2)
        throw Error("invalid crack surface grid");
    const int ra = (axis + 1) % 3, ca = (axis + 2) % 3;
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
    Vec3 mlo = mesh.nodes.front(), mhi = mlo;
    for (int v = 0; v < mesh.num_nodes(); ++v) {
        mlo = mlo.cwiseMin(mesh.nodes[v]);
        mhi = mhi.cwiseMax(mesh.nodes[v]);
        if (phi[v] >= threshold) {
            lo = lo.cwiseMin(mesh.nodes[v]);
            hi = hi.cwiseMax(mesh.nodes[v]);
        }
    }
    if (!(lo(0) <= hi(0)))
        throw NoCrack("no crack: phi is below the threshold everywhere");
    double hmin = std::numeric_limits<double>::infinity();
    for (int e = 0; e < mesh.num_elements(); ++e)
        hmin = std::min(hmin, element_size(mesh, e));
    // sample the crack band's extent along `axis`, one element beyond it
    const double s0 = std::max(mlo(axis), lo(axis) - hmin), s1 = std::min(mhi(axis), hi(axis) + hmin);
    const double ds = std::min(spacing, hmin) / 4.0;
    const int ns = std::max(2, static_cast<int>(std::ceil((s1 - s0) / ds)) + 1);

    CrackSurface3D s;
    s.axis = axis;
    s.spacing = spacing;
    for (double v = mlo(ra); v <= mhi(ra) + 1e-9; v += spacing)
        s.rows.push_back(std::min(v, mhi(ra)));
    for (double v = mlo(ca); v <= mhi(ca) + 1e-9; v += spacing)
        s.cols.push_back(std::min(v, mhi(ca)));
    s.height.setConstant(s.rows.size(), s.cols.size(), std::numeric_limits<double>::quiet_NaN());
    FieldProbe probe(mesh, phi);
    for (std::size_t i = 0; i < s.rows.size(); ++i)
        for (std::size_t j = 0; j < s.cols.size(); ++j) {
            double sum = 0.0;
            int cnt = 0;
            for (int k = 0; k < ns; ++k) {
                Vec3 p;
                p(axis) = s0 + (s1 - s0) * k / (ns - 1);
                p(ra) = s.rows[i];
                p(ca) = s.cols[j];
                const auto v = probe(p);
                if (v && *v >= threshold) {
                    sum += p(axis);
                    ++cnt;
                }
            }
            if (cnt)
                s.height(i, j) = sum / cnt;
        }
    return s;
}

/// Row-major height grid; "nan" where the sampling line misses the crack.
inline void write_surface_csv(const CrackSurface3D& s, std::ostream& out)
{
    char buf[64];
    for (int i = 0; i < s.height.rows(); ++i) {
        for (int j = 0; j < s.height.cols(); ++j) {
            if (j)
                out << ',';
            const double h = s.height(i, j);
            if (std::isnan(h))
                out << "nan";
            else {
                std::snprintf(buf, sizeof buf, "%.6g", h);
                out << buf;
            }
        }
        out << '\n';
    }
}

inline void write_path_csv(const CrackPath2D& p, std::ostream& out)
{
    char buf[96];
    out << "x_mm,y_mm\n";
    for (const auto& q : p.points) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", q(0), q(1));
        out << buf;
    }
}

} // namespace pff
