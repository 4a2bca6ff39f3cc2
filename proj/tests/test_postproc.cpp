#include "pff/crack.hpp"
#include "pff/geometry.hpp"
#include "pff/postproc.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace pff;

namespace
{

SimulationRecord sample_record()
{
    SimulationRecord r;
    const double d[] = {0.0, 0.01, 0.02, 0.03};
    const double f[] = {0.0, 1.5, 2.25, 0.5};
    for (int i = 0; i < 4; ++i) {
        StepRecord s;
        s.step = i;
        s.displacement = d[i];
        s.force = f[i];
        s.max_phi = 0.1 * i;
        r.steps.push_back(s);
    }
    r.completed = true;
    return r;
}

std::vector<std::string> lines(const std::string& s)
{
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);)
        out.push_back(l);
    return out;
}

// Phase field of a straight crack along the ray from `o` in direction `t`
// (AT2 profile across it), zero behind the origin.
std::vector<double> ray_field(const Mesh& m, Eigen::Vector2d o, Eigen::Vector2d t, double ell)
{
    t.normalize();
    std::vector<double> phi(m.num_nodes());
    for (int v = 0; v < m.num_nodes(); ++v) {
        const Eigen::Vector2d r = m.nodes[v].head<2>() - o;
        const double along = r.dot(t);
        const double across = std::abs(r(0) * t(1) - r(1) * t(0));
        phi[v] = along < 0 ? 0.0 : std::exp(-across / ell);
    }
    return phi;
}

} // namespace

TEST(Vtk, HeaderCountsAndCellTypes)
{
    Mesh m = rectangle_mesh(2.0, 1.0, 2, 1);
    DofMap dofs(m, {});
    Eigen::VectorXd x = Eigen::VectorXd::Zero(dofs.n_dof());
    for (int v = 0; v < m.num_nodes(); ++v) {
        x(dofs.phi(v)) = 0.25 * v;
        x(dofs.u(v, 1)) = -1.0 * v;
    }
    std::ostringstream out;
    write_vtk(m, nodal_fields(dofs, x), out);
    const auto l = lines(out.str());
    EXPECT_EQ(l[0], "# vtk DataFile Version 4.2");
    EXPECT_EQ(l[3], "DATASET UNSTRUCTURED_GRID");
    EXPECT_EQ(l[4], "POINTS 6 float");
    EXPECT_EQ(l[11], "CELLS 2 10");
    EXPECT_EQ(l[14], "CELL_TYPES 2");
    EXPECT_EQ(l[15], "9");
    EXPECT_EQ(l[17], "POINT_DATA 6");
    EXPECT_EQ(l[18], "SCALARS phi float 1");
    EXPECT_EQ(l[20], "0");
    EXPECT_EQ(l[21], "0.25");
    EXPECT_EQ(l[26], "VECTORS displacement float");
    EXPECT_EQ(l[28], "0 -1 0");
    EXPECT_EQ(l.size(), 33u);
}

TEST(Vtk, TetAndHexTypes)
{
    EXPECT_EQ(vtk_cell_type(ElementKind::tri3), 5);
    EXPECT_EQ(vtk_cell_type(ElementKind::tet4), 10);
    EXPECT_EQ(vtk_cell_type(ElementKind::hex8), 12);
}

TEST(Csv, ForceDisplacementColumns)
{
    std::ostringstream out;
    force_displacement_csv(sample_record(), out);
    const auto l = lines(out.str());
    ASSERT_EQ(l.size(), 5u);
    EXPECT_EQ(l[0], "displacement_mm,force_N");
    EXPECT_EQ(l[2], "0.01,1.5");
    EXPECT_EQ(l[3], "0.02,2.25");
}

TEST(Summary, ReportsPeakAndStrength)
{
    MaterialParams p;
    std::ostringstream out;
    write_summary(sample_record(), p, out);
    const std::string s = out.str();
    EXPECT_NE(s.find("sigma_c_MPa = 4.05"), std::string::npos);
    EXPECT_NE(s.find("peak_force_N = 2.25\n"), std::string::npos);
    EXPECT_NE(s.find("displacement_at_peak_mm = 0.02\n"), std::string::npos);
    EXPECT_NE(s.find("status = completed"), std::string::npos);
}

TEST(Summary, EmptyRecordIsAnError)
{
    SimulationRecord r;
    r.failure = "solver diverged";
    std::ostringstream out;
    write_summary(r, MaterialParams{}, out);
    EXPECT_NE(out.str().find("status = error: no converged steps (solver diverged)"), std::string::npos);
    EXPECT_NE(out.str().find("sigma_c_MPa"), std::string::npos);
}

TEST(Summary, UnwritablePathThrows)
{
    EXPECT_THROW(write_summary(sample_record(), MaterialParams{}, std::filesystem::path("/nonexistent/dir/s.txt")),
                 Error);
}

TEST(CrackPath, StraightRidgeRecovered)
{
    Mesh m = rectangle_mesh(1.0, 1.0, 60, 60);
    const Eigen::Vector2d o(0.5, 0.2), t(0.0, 1.0);
    const auto phi = ray_field(m, o, t, 0.02);
    const CrackPath2D p = extract_crack_path(m, phi, 0.95, Vec3(0.5, 0.2, 0.0));
    ASSERT_GE(p.points.size(), 40u);
    EXPECT_NEAR(p.h, 1.0 / 60, 1e-12);
    for (const auto& q : p.points)
        EXPECT_NEAR(q(0), 0.5, 1e-9);
    EXPECT_NEAR(p.points.front()(1), 0.2, p.h);
    EXPECT_NEAR(p.points.back()(1), 1.0, p.h);
    for (std::size_t i = 1; i < p.points.size(); ++i)
        EXPECT_LT((p.points[i] - p.points[i - 1]).norm(), 2 * p.h);
}

TEST(CrackPath, InclinedRidgeWithinOneElement)
{
    Mesh m = rectangle_mesh(1.0, 1.0, 50, 50);
    const Eigen::Vector2d o(0.3, 0.0), t(0.4, 1.0);
    const auto phi = ray_field(m, o, t, 0.06);
    const CrackPath2D p = extract_crack_path(m, phi, 0.9, Vec3(0.3, 0.0, 0.0));
    const std::vector<Eigen::Vector2d> exact{o, o + t / t(1)};
    for (const auto& q : p.points)
        EXPECT_LT(point_polyline_distance(q, exact), p.h);
    EXPECT_LT(path_distance(p.points, exact), 0.5 * p.h);
}

TEST(CrackPath, NoCrackBelowThreshold)
{
    Mesh m = rectangle_mesh(1.0, 1.0, 4, 4);
    std::vector<double> phi(m.num_nodes(), 0.5);
    try {
        extract_crack_path(m, phi, 0.95);
        FAIL();
    } catch (const NoCrack& e) {
        EXPECT_NE(std::string(e.what()).find("no crack"), std::string::npos);
    }
}

TEST(PathDistance, ParallelLinesAndSymmetry)
{
    std::vector<Eigen::Vector2d> a{{0, 0}, {0, 1}}, b{{0.1, 0}, {0.1, 0.5}, {0.1, 1}};
    EXPECT_NEAR(path_distance(a, b), 0.1, 1e-14);
    EXPECT_DOUBLE_EQ(path_distance(a, b), path_distance(b, a));
    EXPECT_DOUBLE_EQ(path_distance(a, a), 0.0);
    EXPECT_THROW(path_distance({}, a), Error);
}

TEST(FieldProbe, ReproducesLinearFieldsOnAllKinds)
{
    for (bool tets : {false, true}) {
        Mesh m = box_mesh(2.0, 1.0, 1.0, 4, 3, 3, tets);
        std::vector<double> f(m.num_nodes());
        for (int v = 0; v < m.num_nodes(); ++v)
            f[v] = 1.0 + 2.0 * m.nodes[v](0) - m.nodes[v](1) + 0.5 * m.nodes[v](2);
        FieldProbe probe(m, f);
        for (Vec3 x : {Vec3(0.3, 0.2, 0.7), Vec3(1.99, 0.5, 0.5), Vec3(0.0, 0.0, 0.0)}) {
            auto v = probe(x);
            ASSERT_TRUE(v);
            EXPECT_NEAR(*v, 1.0 + 2.0 * x(0) - x(1) + 0.5 * x(2), 1e-10);
        }
        EXPECT_FALSE(probe(Vec3(2.5, 0.5, 0.5)));
    }
    Mesh q = rectangle_mesh(1.0, 1.0, 3, 3);
    q.nodes[5](0) += 0.05;  // distorted interior node
    std::vector<double> f(q.num_nodes());
    for (int v = 0; v < q.num_nodes(); ++v)
        f[v] = q.nodes[v](0) + 3.0 * q.nodes[v](1);
    auto v = FieldProbe(q, f)(Vec3(0.41, 0.37, 0.0));
    ASSERT_TRUE(v);
    EXPECT_NEAR(*v, 0.41 + 3.0 * 0.37, 1e-10);
}

TEST(CrackSurface, TiltedPlaneHeightMap)
{
    // crack band around the plane x = 1 + 0.2 z, sampled along x
    Mesh m = box_mesh(2.0, 1.0, 1.0, 40, 4, 10);
    std::vector<double> phi(m.num_nodes());
    for (int v = 0; v < m.num_nodes(); ++v) {
        const Vec3& x = m.nodes[v];
        phi[v] = std::exp(-std::abs(x(0) - 1.0 - 0.2 * x(2)) / 0.05);
    }
    const CrackSurface3D s = extract_crack_surface(m, phi, 0.5, 0.25, 0);
    ASSERT_EQ(s.rows.size(), 5u);  // y
    ASSERT_EQ(s.cols.size(), 5u);  // z
    for (std::size_t i = 0; i < s.rows.size(); ++i)
        for (std::size_t j = 0; j < s.cols.size(); ++j)
            EXPECT_NEAR(s.height(i, j), 1.0 + 0.2 * s.cols[j], 0.02);
    std::ostringstream out;
    write_surface_csv(s, out);
    EXPECT_EQ(lines(out.str()).size(), 5u);
}

TEST(CrackSurface, PartialCrackLeavesNan)
{
    Mesh m = box_mesh(1.0, 1.0, 1.0, 10, 10, 2);
    std::vector<double> phi(m.num_nodes(), 0.0);
    for (int v = 0; v < m.num_nodes(); ++v)
        if (std::abs(m.nodes[v](0) - 0.5) < 1e-9 && m.nodes[v](1) < 0.45)
            phi[v] = 1.0;
    const CrackSurface3D s = extract_crack_surface(m, phi, 0.95, 0.1, 0);
    EXPECT_NEAR(s.height(0, 0), 0.5, 1e-12);
    EXPECT_TRUE(std::isnan(s.height(8, 0)));
    std::ostringstream out;
    write_surface_csv(s, out);
    EXPECT_NE(out.str().find("nan"), std::string::npos);
    EXPECT_THROW(extract_crack_surface(m, std::vector<double>(m.num_nodes(), 0.0)), NoCrack);
}

TEST(CrackPath, ThresholdStable)
{
    Mesh m = rectangle_mesh(1.0, 1.0, 50, 50);
    // localized crack: fully broken core one element wide, AT2 tails outside
    const Eigen::Vector2d o(0.4, 0.0), t(0.25, 1.0);
    std::vector<double> phi = ray_field(m, o, t, 0.05);
    for (double& f : phi)
        f = f > 0 ? std::min(1.0, f * std::exp(0.02 / 0.05)) : 0.0;
    const CrackPath2D a = extract_crack_path(m, phi, 0.90, Vec3(0.4, 0.0, 0.0));
    const CrackPath2D b = extract_crack_path(m, phi, 0.95, Vec3(0.4, 0.0, 0.0));
    for (const auto& q : a.points)
        EXPECT_LT(point_polyline_distance(q, b.points), a.h);
    for (const auto& q : b.points)
        EXPECT_LT(point_polyline_distance(q, a.points), a.h);
    EXPECT_GT(b.points.back()(1), 0.9);
}

TEST(CrackSurface, PlanarCrackIsConstant)
{
    Mesh m = box_mesh(1.0, 1.0, 1.0, 8, 8, 20);
    const double h = 1.0 / 20, c = 0.43;
    std::vector<double> phi(m.num_nodes());
    for (int v = 0; v < m.num_nodes(); ++v)
        phi[v] = std::exp(-std::abs(m.nodes[v](2) - c) / 0.08);
    const CrackSurface3D s = extract_crack_surface(m, phi, 0.5, 0.1, 2);
    for (std::size_t i = 0; i < s.rows.size(); ++i)
        for (std::size_t j = 0; j < s.cols.size(); ++j)
            EXPECT_NEAR(s.height(i, j), c, h / 2);
}

TEST(CrackSurface, InclinedCrackSlope)
{
    Mesh m = box_mesh(1.0, 1.0, 1.0, 10, 10, 20);
    const double a = 0.3;
    std::vector<double> phi(m.num_nodes());
    for (int v = 0; v < m.num_nodes(); ++v)
        phi[v] = std::exp(-std::abs(m.nodes[v](2) - 0.3 - a * m.nodes[v](1)) / 0.08);
    const CrackSurface3D s = extract_crack_surface(m, phi, 0.5, 0.1, 2);
    // least-squares slope of height against y (rows of an axis-2 map run along x, columns along y)
    double sy = 0, sz = 0, syy = 0, syz = 0;
    int n = 0;
    for (std::size_t i = 0; i < s.rows.size(); ++i)
        for (std::size_t j = 0; j < s.cols.size(); ++j) {
            const double y = s.cols[j], z = s.height(i, j);
            sy += y, sz += z, syy += y * y, syz += y * z, ++n;
        }
    const double slope = (n * syz - sy * sz) / (n * syy - sy * sy);
    EXPECT_NEAR(slope, a, 0.1 * a);
}
