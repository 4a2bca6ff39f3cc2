#ifndef PFF_GEOMETRY_HPP
#define PFF_GEOMETRY_HPP

// Parametric specimen meshes.
//
// Beams are 76.2 (x) by 25.4 (y) with a 12.7 mm thickness (z in 3D, the
// plane-strain depth in 2D). Supports sit at x = 6.35 and 69.85 on the
// bottom face, the load line at x = 38.1 on the top face. Notches are open
// slots cut from the bottom face.
//
// 2D beams use a balanced quadtree refined to the crack-zone size inside a
// box spanning the notch and the load line; cells with hanging nodes are
// split into a fan of triangles around their center. 3D beams use a graded
// tensor-product grid in a reference space (xi, eta, z) that is sheared so
// the slot column becomes an inclined notch, and optionally split into
// tetrahedra.

#include "pff/error.hpp"
#include "pff/mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

namespace pff
{

enum class Specimen
{
    HC,
    HB,
    HA,
    H45,
    CHALLENGE,
    SENT
};

inline Specimen parse_specimen(const std::string& s)
{
    static const std::map<std::string, Specimen> names{{"HC", Specimen::HC},   {"HB", Specimen::HB},
                                                       {"HA", Specimen::HA},   {"H45", Specimen::H45},
                                                       {"CHALLENGE", Specimen::CHALLENGE}, {"SENT", Specimen::SENT}};
    auto it = names.find(s);
    if (it == names.end())
        throw ParameterError("unknown builtin geometry '" + s + "'");
    return it->second;
}

inline std::string to_string(Specimen s)
{
    switch (s) {
    case Specimen::HC: return "HC";
    case Specimen::HB: return "HB";
    case Specimen::HA: return "HA";
    case Specimen::H45: return "H45";
    case Specimen::CHALLENGE: return "CHALLENGE";
    case Specimen::SENT: break;
    }
    return "SENT";
}

struct BeamDimensions
{
    double length = 76.2;
    double height = 25.4;
    double thickness = 12.7;
    double support_left = 6.35;
    double support_right = 69.85;
    double load_x = 38.1;
    double notch_depth = 6.35;
};

/// Knobs of the builtin meshes. Zero means "derive from scale".
struct GeometryOptions
{
    double scale = 1.0;
    double h_fine = 0.0;          // crack-zone element size (mm); default 0.1 / scale
    double zone_margin = 1.5;     // crack-zone box margin around notch and load line (mm)
    int notch_cells = 2;          // slot width in crack-zone elements
    double footprint = 0.0;       // support / load footprint width (mm); 0 = single node line
    double pad_radius = 3.0;      // undamageable zone around load and support lines (mm); 0 = none
    double notch_offset = std::nan("");  // notch x minus load x (mm); default per specimen
    // 3D only
    double notch_angle_deg = std::nan("");  // inclination through the thickness
    double notch_depth_front = std::nan("");  // at z = 0 (CHALLENGE)
    double notch_depth_back = std::nan("");   // at z = thickness (CHALLENGE)
    double h_coarse = 0.0;        // largest element away from the crack zone (mm)
    double h_thickness = 0.0;     // spacing through the thickness (mm); default h_fine
    bool tetrahedral = false;
};

/// Structured nx x ny quad mesh of [0, Lx] x [0, Ly].
inline Mesh rectangle_mesh(double Lx, double Ly, int nx, int ny)
{
    if (nx < 1 || ny < 1)
        throw MeshError("rectangle needs at least one cell per direction");
    Mesh m;
    m.dim = 2;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            m.nodes.emplace_back(Lx * i / nx, Ly * j / ny, 0.0);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int a = j * (nx + 1) + i;
            m.elements.push_back({ElementKind::quad4, {a, a + 1, a + nx + 2, a + nx + 1}});
        }
    return m;
}

namespace geometry_detail
{

// Kuhn split of a hex (Gmsh vertex order) into 6 positively oriented tets
// sharing the diagonal 0-6. Conforming on structured grids.
inline std::vector<std::array<int, 4>> kuhn_tets()
{
    // Gmsh hex vertex v -> bits (x, y, z)
    static const int bits[8] = {0, 1, 3, 2, 4, 5, 7, 6};
    int vertex_of[8];
    for (int v = 0; v < 8; ++v)
        vertex_of[bits[v]] = v;
    const int axes[6][3] = {{1, 2, 4}, {1, 4, 2}, {2, 1, 4}, {2, 4, 1}, {4, 1, 2}, {4, 2, 1}};
    std::vector<std::array<int, 4>> tets;
    for (auto& a : axes) {
        std::array<int, 4> t{vertex_of[0], vertex_of[a[0]], vertex_of[a[0] | a[1]], vertex_of[7]};
        Eigen::Matrix3d J;
        for (int c = 1; c < 4; ++c) {
            const int b = bits[t[c]];
            J.col(c - 1) << (b & 1), ((b >> 1) & 1), ((b >> 2) & 1);
        }
        if (J.determinant() < 0)
            std::swap(t[1], t[2]);
        tets.push_back(t);
    }
    return tets;
}

// Points from a to b whose first cell (at a) has size h0, growing by `growth`
// up to h_max, rescaled to end exactly at b. Includes a, excludes b.
inline std::vector<double> graded(double a, double b, double h0, double h_max, double growth = 1.3)
{
    const double L = std::abs(b - a);
    std::vector<double> sizes;
    double h = h0, sum = 0.0;
    while (sum < L * (1 - 1e-9)) {
        sizes.push_back(h);
        sum += h;
        h = std::min(h * growth, h_max);
    }
    if (sizes.size() > 1 && sum - L > 0.5 * sizes.back()) {
        sum -= sizes.back();
        sizes.pop_back();
    }
    std::vector<double> pts{a};
    const double dir = b > a ? 1.0 : -1.0;
    double x = a;
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
        x += dir * sizes[k] * L / sum;
        pts.push_back(x);
    }
    return pts;
}

inline std::vector<double> uniform(double a, double b, double h)
{
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / h - 1e-9)));
    std::vector<double> pts;
    for (int k = 0; k < n; ++k)
        pts.push_back(a + (b - a) * k / n);
    return pts;
}

inline std::vector<int> nodes_near_line(const Mesh& m, int axis, double value, double fixed_axis_value,
                                        int fixed_axis, double half_width)
{
    std::vector<int> ids;
    double best = std::numeric_limits<double>::infinity();
    int nearest = -1;
    for (int v = 0; v < m.num_nodes(); ++v) {
        if (std::abs(m.nodes[v](fixed_axis) - fixed_axis_value) > 1e-9)
            continue;
        const double d = std::abs(m.nodes[v](axis) - value);
        if (d <= half_width + 1e-9)
            ids.push_back(v);
        if (d < best) {
            best = d;
            nearest = v;
        }
    }
    if (ids.empty() && nearest >= 0) {
        // single node line: every node at the nearest coordinate
        for (int v = 0; v < m.num_nodes(); ++v)
            if (std::abs(m.nodes[v](fixed_axis) - fixed_axis_value) <= 1e-9 &&
                std::abs(m.nodes[v](axis) - m.nodes[nearest](axis)) <= 1e-9)
                ids.push_back(v);
    }
    return ids;
}

class Quadtree
{
public:
    // Root cells of size 2^fine_level fine units, nx x ny of them.
    Quadtree(int fine_level, int nx, int ny) : Lf_(fine_level), nx_(nx), ny_(ny)
    {
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                leaves_.insert(key(0, i, j));
    }

    static std::uint64_t key(int L, int i, int j)
    {
        return (static_cast<std::uint64_t>(L) << 56) | (static_cast<std::uint64_t>(i) << 28) |
               static_cast<std::uint64_t>(j);
    }
    static int level(std::uint64_t k) { return static_cast<int>(k >> 56); }
    static int ci(std::uint64_t k) { return static_cast<int>((k >> 28) & 0xFFFFFFF); }
    static int cj(std::uint64_t k) { return static_cast<int>(k & 0xFFFFFFF); }

    int size(int L) const { return 1 << (Lf_ - L); }
    int extent_x() const { return nx_ << Lf_; }
    int extent_y() const { return ny_ << Lf_; }

    void split(std::uint64_t k)
    {
        const int L = level(k), i = ci(k), j = cj(k);
        leaves_.erase(k);
        for (int b = 0; b < 2; ++b)
            for (int a = 0; a < 2; ++a)
                leaves_.insert(key(L + 1, 2 * i + a, 2 * j + b));
    }

    // Refines until every cell satisfies level >= target(L, X0, Y0, s).
    template <class F>
    void refine(F target)
    {
        std::vector<std::uint64_t> work(leaves_.begin(), leaves_.end());
        while (!work.empty()) {
            const std::uint64_t k = work.back();
            work.pop_back();
            const int L = level(k);
            const int s = size(L);
            if (L < Lf_ && target(ci(k) * s, cj(k) * s, s) > L) {
                split(k);
                for (int b = 0; b < 2; ++b)
                    for (int a = 0; a < 2; ++a)
                        work.push_back(key(L + 1, 2 * ci(k) + a, 2 * cj(k) + b));
            }
        }
    }

    // Leaf containing fine cell (px, py).
    std::uint64_t find(int px, int py) const
    {
        for (int L = Lf_; L >= 0; --L) {
            const std::uint64_t k = key(L, px >> (Lf_ - L), py >> (Lf_ - L));
            if (leaves_.count(k))
                return k;
        }
        throw MeshError("quadtree lookup failed");
    }

    // 2:1 balance across edges.
    void balance()
    {
        std::vector<std::uint64_t> work(leaves_.begin(), leaves_.end());
        while (!work.empty()) {
            const std::uint64_t k = work.back();
            work.pop_back();
            if (!leaves_.count(k))
                continue;
            const int L = level(k), s = size(L);
            const int X = ci(k) * s, Y = cj(k) * s;
            const int probes[4][2] = {{X - 1, Y + s / 2}, {X + s, Y + s / 2}, {X + s / 2, Y - 1}, {X + s / 2, Y + s}};
            for (auto& p : probes) {
                if (p[0] < 0 || p[1] < 0 || p[0] >= extent_x() || p[1] >= extent_y())
                    continue;
                const std::uint64_t n = find(p[0], p[1]);
                if (level(n) < L - 1) {
                    const int Ln = level(n);
                    split(n);
                    for (int b = 0; b < 2; ++b)
                        for (int a = 0; a < 2; ++a)
                            work.push_back(key(Ln + 1, 2 * ci(n) + a, 2 * cj(n) + b));
                    work.push_back(k);
                    break;
                }
            }
        }
    }

    const std::set<std::uint64_t>& leaves() const { return leaves_; }
    std::set<std::uint64_t>& leaves() { return leaves_; }

private:
    int Lf_;
    int nx_, ny_;
    std::set<std::uint64_t> leaves_;
};

struct IBox
{
    long x0, x1, y0, y1;
    bool overlaps(long X, long Y, long s) const { return X < x1 && X + s > x0 && Y < y1 && Y + s > y0; }
    bool contains_cell(long X, long Y, long s) const { return X >= x0 && X + s <= x1 && Y >= y0 && Y + s <= y1; }
    bool contains_point(long X, long Y) const { return X >= x0 && X <= x1 && Y >= y0 && Y <= y1; }
};

inline Mesh beam_2d(const BeamDimensions& B, double notch_x, const GeometryOptions& opt)
{
    const double h_target = opt.h_fine > 0 ? opt.h_fine : 0.1 / opt.scale;
    const int base = 4;
    const int Lf = std::max(base, static_cast<int>(std::ceil(std::log2(B.height / h_target) - 1e-9)));
    if (Lf > 14)
        throw MeshError("requested crack-zone size is too small for the quadtree");
    const double h = B.height / (1 << Lf);
    auto to_fine = [&](double x) { return static_cast<long>(std::llround(x / h)); };
    auto check_on_grid = [&](double x, const char* what) {
        if (std::abs(x / h - std::round(x / h)) > 1e-6)
            throw MeshError(std::string(what) + " does not fall on the quadtree grid");
    };
    check_on_grid(notch_x, "notch position");
    check_on_grid(B.notch_depth, "notch depth");
    if (opt.notch_cells < 1)
        throw MeshError("notch_cells must be positive");

    const int nroot = static_cast<int>(std::lround(B.length / B.height));
    Quadtree qt(Lf, nroot, 1);
    const long NX = qt.extent_x(), NY = qt.extent_y();

    const long xn = to_fine(notch_x);
    const long half_lo = opt.notch_cells / 2, half_hi = opt.notch_cells - half_lo;
    const IBox slot{xn - half_lo, xn + half_hi, 0, to_fine(B.notch_depth)};
    const double zx0 = std::min(notch_x, B.load_x) - opt.zone_margin;
    const double zx1 = std::max(notch_x, B.load_x) + opt.zone_margin;
    const double zy0 = B.notch_depth - opt.zone_margin;
    const IBox zone{std::max(0L, static_cast<long>(std::floor(zx0 / h))),
                    std::min(NX, static_cast<long>(std::ceil(zx1 / h))),
                    std::max(0L, static_cast<long>(std::floor(zy0 / h))), NY};

    qt.refine([&](long X, long Y, long s) {
        if (zone.overlaps(X, Y, s) || slot.overlaps(X, Y, s))
            return Lf;
        return base;
    });
    qt.balance();

    // drop slot cells (all at the fine level)
    std::vector<std::uint64_t> kept;
    for (std::uint64_t k : qt.leaves()) {
        const int s = qt.size(Quadtree::level(k));
        if (!slot.contains_cell(Quadtree::ci(k) * s, Quadtree::cj(k) * s, s))
            kept.push_back(k);
    }

    using P = std::pair<long, long>;  // (Y, X) for row-major numbering
    std::set<P> corners;
    for (std::uint64_t k : kept) {
        const long s = qt.size(Quadtree::level(k)), X = Quadtree::ci(k) * s, Y = Quadtree::cj(k) * s;
        corners.insert({Y, X});
        corners.insert({Y, X + s});
        corners.insert({Y + s, X});
        corners.insert({Y + s, X + s});
    }
    struct Cell
    {
        long X, Y, s;
        std::vector<P> loop;  // CCW boundary points including hanging midpoints
        bool fan;
    };
    std::vector<Cell> cells;
    std::set<P> points = corners;
    for (std::uint64_t k : kept) {
        Cell c;
        c.s = qt.size(Quadtree::level(k));
        c.X = Quadtree::ci(k) * c.s;
        c.Y = Quadtree::cj(k) * c.s;
        const long X = c.X, Y = c.Y, s = c.s;
        const P cs[4] = {{Y, X}, {Y, X + s}, {Y + s, X + s}, {Y + s, X}};
        const P mids[4] = {{Y, X + s / 2}, {Y + s / 2, X + s}, {Y + s, X + s / 2}, {Y + s / 2, X}};
        c.fan = false;
        for (int e = 0; e < 4; ++e) {
            c.loop.push_back(cs[e]);
            if (s > 1 && corners.count(mids[e])) {
                c.loop.push_back(mids[e]);
                c.fan = true;
            }
        }
        if (c.fan)
            points.insert({Y + s / 2, X + s / 2});
        cells.push_back(std::move(c));
    }

    Mesh m;
    m.dim = 2;
    m.thickness = B.thickness;
    std::map<P, int> id;
    for (const P& p : points) {
        id[p] = m.num_nodes();
        m.nodes.emplace_back(p.second * h, p.first * h, 0.0);
    }
    for (const Cell& c : cells) {
        if (!c.fan) {
            std::vector<int> q;
            for (const P& p : c.loop)
                q.push_back(id.at(p));
            m.elements.push_back({ElementKind::quad4, q});
        } else {
            const int center = id.at({c.Y + c.s / 2, c.X + c.s / 2});
            const int n = static_cast<int>(c.loop.size());
            for (int a = 0; a < n; ++a)
                m.elements.push_back({ElementKind::tri3, {center, id.at(c.loop[a]), id.at(c.loop[(a + 1) % n])}});
        }
    }

    std::vector<int> zone_nodes;
    for (const auto& [p, v] : id)
        if (zone.contains_point(p.second, p.first))
            zone_nodes.push_back(v);
    std::sort(zone_nodes.begin(), zone_nodes.end());
    m.node_sets["crack_zone"] = zone_nodes;

    const double hw = 0.5 * opt.footprint;
    m.node_sets["load_line"] = nodes_near_line(m, 0, B.load_x, B.height, 1, hw);
    m.node_sets["support_left"] = nodes_near_line(m, 0, B.support_left, 0.0, 1, hw);
    m.node_sets["support_right"] = nodes_near_line(m, 0, B.support_right, 0.0, 1, hw);
    m.landmarks["notch_tip"] = Vec3(notch_x, B.notch_depth, 0.0);
    m.landmarks["load_point"] = Vec3(B.load_x, B.height, 0.0);
    return m;
}

// 3D beam: reference grid (xi, eta, z) mapped by
//   x = xi + s(xi, eta) (z - t/2) tan(theta),  y = depth map in eta
// with s = 1 in the crack band and tapering to 0 away from it and towards
// the top face, so supports and load line stay straight.
inline Mesh beam_3d(const BeamDimensions& B, double notch_x, double angle_deg, double depth_front, double depth_back,
                    const GeometryOptions& opt)
{
    using namespace geometry_detail;
    const double h = opt.h_fine > 0 ? opt.h_fine : 0.1 / opt.scale;
    const double hc = opt.h_coarse > 0 ? opt.h_coarse : std::max(2.0, 4 * h);
    const double hz = opt.h_thickness > 0 ? opt.h_thickness : h;
    const double tan_t = std::tan(angle_deg * std::numbers::pi / 180.0);
    const double d_ref = std::max(depth_front, depth_back);
    if (!(d_ref > 0 && d_ref < B.height))
        throw MeshError("notch depth must lie inside the beam");

    // xi lines: fine band centered on the notch, graded outwards; supports are grid lines.
    const int nb = opt.notch_cells + static_cast<int>(std::ceil(opt.zone_margin / h));
    const double band_lo = notch_x - nb * h, band_hi = notch_x + nb * h;
    const double taper = std::abs(tan_t) * B.thickness;  // keeps dx/dxi >= 1/2
    if (band_lo - taper <= B.support_left || band_hi + taper >= B.support_right)
        throw MeshError("inclined notch too close to the supports");
    std::vector<double> xs = uniform(0.0, B.support_left, std::min(hc, B.support_left));
    {
        const std::vector<double> g = graded(band_lo, B.support_left, h, hc);  // band_lo, band_lo - h, ...
        xs.insert(xs.end(), g.rbegin(), g.rend());
        xs.push_back(B.support_left);
        for (int k = -nb + 1; k <= nb; ++k)
            xs.push_back(notch_x + k * h);
        const std::vector<double> g2 = graded(band_hi, B.support_right, h, hc);
        xs.insert(xs.end(), g2.begin() + 1, g2.end());
        for (double x : uniform(B.support_right, B.length, std::min(hc, B.length - B.support_right)))
            xs.push_back(x);
        xs.push_back(B.length);
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                 xs.end());
    }
    // eta lines: graded below the notch tip, uniform above
    std::vector<double> ys;
    {
        std::vector<double> g = graded(d_ref, 0.0, h, hc);
        ys.assign(g.rbegin(), g.rend());
        ys.insert(ys.begin(), 0.0);
        for (double y : uniform(d_ref, B.height, h))
            ys.push_back(y);
        ys.push_back(B.height);
        std::sort(ys.begin(), ys.end());
        ys.erase(std::unique(ys.begin(), ys.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                 ys.end());
    }
    std::vector<double> zs = uniform(0.0, B.thickness, hz);
    zs.push_back(B.thickness);

    const int nx = static_cast<int>(xs.size()) - 1, ny = static_cast<int>(ys.size()) - 1,
              nz = static_cast<int>(zs.size()) - 1;
    auto ix_of = [&](double x) {
        for (int i = 0; i <= nx; ++i)
            if (std::abs(xs[i] - x) < 1e-9)
                return i;
        throw MeshError("grid line missing");
    };
    const int slot_i0 = ix_of(notch_x - (opt.notch_cells / 2) * h);
    const int slot_i1 = slot_i0 + opt.notch_cells;
    int slot_j1 = 0;
    while (slot_j1 < ny && ys[slot_j1] < d_ref - 1e-9)
        ++slot_j1;
    const int band_i0 = ix_of(band_lo), band_i1 = ix_of(band_hi);

    auto shear = [&](double xi, double eta) {
        double sx = 1.0;
        if (xi < band_lo)
            sx = std::max(0.0, 1.0 - (band_lo - xi) / taper);
        else if (xi > band_hi)
            sx = std::max(0.0, 1.0 - (xi - band_hi) / taper);
        const double sy = eta <= d_ref ? 1.0 : (B.height - eta) / (B.height - d_ref);
        return sx * sy;
    };
    auto depth_at = [&](double z) { return depth_front + (depth_back - depth_front) * z / B.thickness; };
    auto map = [&](double xi, double eta, double z) {
        const double d = depth_at(z);
        const double y = eta <= d_ref ? eta * d / d_ref : d + (eta - d_ref) * (B.height - d) / (B.height - d_ref);
        return Vec3(xi + shear(xi, eta) * (z - 0.5 * B.thickness) * tan_t, y, z);
    };

    auto removed = [&](int i, int j) { return i >= slot_i0 && i < slot_i1 && j < slot_j1; };
    const long NXn = nx + 1, NYn = ny + 1;
    auto gid = [&](int i, int j, int k) { return (static_cast<long>(k) * NYn + j) * NXn + i; };
    std::vector<int> id(static_cast<std::size_t>(NXn * NYn * (nz + 1)), -1);
    Mesh m;
    m.dim = 3;
    m.thickness = 1.0;
    // number nodes used by kept cells, z-major then y then x
    for (int k = 0; k <= nz; ++k)
        for (int j = 0; j <= ny; ++j)
            for (int i = 0; i <= nx; ++i) {
                bool used = false;
                for (int dj = -1; dj <= 0 && !used; ++dj)
                    for (int di = -1; di <= 0 && !used; ++di) {
                        const int ci = i + di, cj = j + dj;
                        if (ci >= 0 && cj >= 0 && ci < nx && cj < ny && !removed(ci, cj))
                            used = true;
                    }
                if (!used)
                    continue;
                id[gid(i, j, k)] = m.num_nodes();
                m.nodes.push_back(map(xs[i], ys[j], zs[k]));
            }
    const auto tets = kuhn_tets();
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                if (removed(i, j))
                    continue;
                const int v[8] = {id[gid(i, j, k)],         id[gid(i + 1, j, k)],     id[gid(i + 1, j + 1, k)],
                                  id[gid(i, j + 1, k)],     id[gid(i, j, k + 1)],     id[gid(i + 1, j, k + 1)],
                                  id[gid(i + 1, j + 1, k + 1)], id[gid(i, j + 1, k + 1)]};
                if (opt.tetrahedral) {
                    for (const auto& t : tets)
                        m.elements.push_back({ElementKind::tet4, {v[t[0]], v[t[1]], v[t[2]], v[t[3]]}});
                } else {
                    m.elements.push_back({ElementKind::hex8, std::vector<int>(v, v + 8)});
                }
            }

    auto collect = [&](auto pred) {
        std::vector<int> ids;
        for (int k = 0; k <= nz; ++k)
            for (int j = 0; j <= ny; ++j)
                for (int i = 0; i <= nx; ++i) {
                    const int v = id[gid(i, j, k)];
                    if (v >= 0 && pred(i, j, k))
                        ids.push_back(v);
                }
        std::sort(ids.begin(), ids.end());
        return ids;
    };
    const double hw = 0.5 * opt.footprint + 1e-9;
    m.node_sets["crack_zone"] =
        collect([&](int i, int j, int) { return i >= band_i0 && i <= band_i1 && j >= slot_j1; });
    m.node_sets["load_line"] =
        collect([&](int i, int j, int) { return j == ny && std::abs(xs[i] - B.load_x) <= std::max(hw, 1e-9); });
    m.node_sets["support_left"] =
        collect([&](int i, int j, int) { return j == 0 && std::abs(xs[i] - B.support_left) <= hw; });
    m.node_sets["support_right"] =
        collect([&](int i, int j, int) { return j == 0 && std::abs(xs[i] - B.support_right) <= hw; });
    if (m.node_sets["load_line"].empty())
        throw MeshError("load line is not a grid line");
    m.landmarks["notch_tip"] = Vec3(notch_x, 0.5 * (depth_front + depth_back), 0.5 * B.thickness);
    m.landmarks["load_point"] = Vec3(B.load_x, B.height, 0.5 * B.thickness);
    return m;
}

} // namespace geometry_detail

/// Unit-square single-edge-notched tension specimen: (10 s) x (10 s + 1)
/// quads, the notch being the left half of the middle cell row.
inline Mesh sent_mesh(double scale)
{
    const int n = static_cast<int>(std::lround(10 * scale));
    if (n < 2 || n % 2)
        throw MeshError("SENT scale must give an even number of cells (10 * scale)");
    const int nx = n, ny = n + 1, mid = n / 2;
    Mesh full = rectangle_mesh(1.0, 1.0, nx, ny);
    Mesh m;
    m.dim = 2;
    std::vector<int> id(full.nodes.size(), -1);
    std::vector<Element> kept;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            if (!(j == mid && i < nx / 2))
                kept.push_back(full.elements[j * nx + i]);
    for (const Element& e : kept)
        for (int v : e.nodes)
            id[v] = 0;
    for (std::size_t v = 0; v < full.nodes.size(); ++v)
        if (id[v] == 0) {
            id[v] = m.num_nodes();
            m.nodes.push_back(full.nodes[v]);
        }
    for (Element e : kept) {
        for (int& v : e.nodes)
            v = id[v];
        m.elements.push_back(e);
    }
    std::vector<int> all(m.num_nodes()), top, bottom;
    for (int v = 0; v < m.num_nodes(); ++v) {
        all[v] = v;
        if (m.nodes[v](1) == 1.0)
            top.push_back(v);
        if (m.nodes[v](1) == 0.0)
            bottom.push_back(v);
    }
    m.node_sets["crack_zone"] = all;
    m.node_sets["load_line"] = top;
    m.node_sets["bottom"] = bottom;
    m.node_sets["support_left"] = {bottom.front()};
    m.node_sets["support_right"] = {bottom.back()};
    m.landmarks["notch_tip"] = Vec3(0.5, 0.5, 0.0);
    m.landmarks["load_point"] = Vec3(0.5, 1.0, 0.0);
    return m;
}

/// Notch x position of a beam specimen.
inline double default_notch_x(Specimen s, const BeamDimensions& B)
{
    switch (s) {
    case Specimen::HB: return B.load_x - 6.35;
    case Specimen::HA: return B.load_x - 12.7;
    default: return B.load_x;
    }
}

inline Mesh builtin_geometry(Specimen s, const GeometryOptions& opt = {})
{
    if (!(opt.scale >= 1.0))
        throw MeshError("scale must be >= 1");
    if (s == Specimen::SENT) {
        Mesh m = sent_mesh(opt.scale);
        validate(m);
        return m;
    }
    BeamDimensions B;
    const double notch_x =
        std::isnan(opt.notch_offset) ? default_notch_x(s, B) : B.load_x + opt.notch_offset;
    Mesh m;
    if (s == Specimen::HC || s == Specimen::HB || s == Specimen::HA) {
        m = geometry_detail::beam_2d(B, notch_x, opt);
    } else if (s == Specimen::H45) {
        const double angle = std::isnan(opt.notch_angle_deg) ? 45.0 : opt.notch_angle_deg;
        const double d = std::isnan(opt.notch_depth_front) ? B.notch_depth : opt.notch_depth_front;
        m = geometry_detail::beam_3d(B, notch_x, angle, d, d, opt);
    } else {
        const double angle = std::isnan(opt.notch_angle_deg) ? 30.0 : opt.notch_angle_deg;
        const double d0 = std::isnan(opt.notch_depth_front) ? 3.81 : opt.notch_depth_front;
        const double d1 = std::isnan(opt.notch_depth_back) ? 8.89 : opt.notch_depth_back;
        m = geometry_detail::beam_3d(B, notch_x, angle, d0, d1, opt);
    }
    if (opt.pad_radius > 0) {
        // Point loads and supports concentrate deviatoric energy, which the
        // split counts as crack driving; the pads keep those spots elastic.
        const Eigen::Vector2d centres[3] = {
            {B.load_x, B.height}, {B.support_left, 0.0}, {B.support_right, 0.0}};
        std::vector<int>& pad = m.node_sets["no_damage"];
        for (int v = 0; v < m.num_nodes(); ++v)
            for (const auto& c : centres)
                if ((m.nodes[v].head<2>() - c).norm() <= opt.pad_radius + 1e-9) {
                    pad.push_back(v);
                    break;
                }
    }
    validate(m);
    return m;
}

inline Mesh builtin_geometry(const std::string& name, const GeometryOptions& opt = {})
{
    return builtin_geometry(parse_specimen(name), opt);
}

/// Structured hex (or Kuhn-tet) mesh of [0, Lx] x [0, Ly] x [0, Lz].
inline Mesh box_mesh(double Lx, double Ly, double Lz, int nx, int ny, int nz, bool tets = false)
{
    Mesh m;
    m.dim = 3;
    for (int k = 0; k <= nz; ++k)
        for (int j = 0; j <= ny; ++j)
            for (int i = 0; i <= nx; ++i)
                m.nodes.emplace_back(Lx * i / nx, Ly * j / ny, Lz * k / nz);
    auto id = [&](int i, int j, int k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
    const auto kt = geometry_detail::kuhn_tets();
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const int v[8] = {id(i, j, k),     id(i + 1, j, k),     id(i + 1, j + 1, k),     id(i, j + 1, k),
                                  id(i, j, k + 1), id(i + 1, j, k + 1), id(i + 1, j + 1, k + 1), id(i, j + 1, k + 1)};
                if (tets)
                    for (const auto& t : kt)
                        m.elements.push_back({ElementKind::tet4, {v[t[0]], v[t[1]], v[t[2]], v[t[3]]}});
                else
                    m.elements.push_back({ElementKind::hex8, std::vector<int>(v, v + 8)});
            }
    return m;
}

/// Nodes of a mesh on the plane x_axis = value (within tol).
inline std::vector<int> nodes_on_plane(const Mesh& m, int axis, double value, double tol = 1e-9)
{
    std::vector<int> ids;
    for (int v = 0; v < m.num_nodes(); ++v)
        if (std::abs(m.nodes[v](axis) - value) <= tol)
            ids.push_back(v);
    return ids;
}

} // namespace pff

#endif // PFF_GEOMETRY_HPP
