#include "pff/gmsh.hpp"
#include "pff/mesh.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace pff;

namespace
{

const char* single_quad = R"($MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
2
1 1 "bottom"
0 2 "corner"
$EndPhysicalNames
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
3
1 3 2 0 1 1 2 3 4
2 1 2 1 1 1 2
3 15 2 2 1 1
$EndElements
)";

Mesh read_string(const std::string& s)
{
    std::istringstream in(s);
    return read_gmsh(in);
}

// Uniform nx x ny quad mesh on [0, Lx] x [0, Ly].
Mesh grid(int nx, int ny, double Lx, double Ly)
{
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

std::string unit_cube_tets()
{
    // Kuhn split of the unit cube into 6 tetrahedra sharing the main diagonal.
    std::ostringstream s;
    s << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n8\n";
    for (int k = 0; k < 8; ++k)
        s << k + 1 << " " << (k & 1) << " " << ((k >> 1) & 1) << " " << ((k >> 2) & 1) << "\n";
    s << "$EndNodes\n$Elements\n6\n";
    // paths 0 -> 7 through the cube vertices (bit order)
    const int perms[6][3] = {{1, 2, 4}, {1, 4, 2}, {2, 1, 4}, {2, 4, 1}, {4, 1, 2}, {4, 2, 1}};
    for (int t = 0; t < 6; ++t) {
        int v[4] = {0, perms[t][0], perms[t][0] | perms[t][1], 7};
        // orient positively
        Eigen::Matrix3d J;
        for (int c = 1; c < 4; ++c)
            J.col(c - 1) << (v[c] & 1), ((v[c] >> 1) & 1), ((v[c] >> 2) & 1);
        if (J.determinant() < 0)
            std::swap(v[1], v[2]);
        s << t + 1 << " 4 2 0 1 " << v[0] + 1 << " " << v[1] + 1 << " " << v[2] + 1 << " " << v[3] + 1 << "\n";
    }
    s << "$EndElements\n";
    return s.str();
}

} // namespace

TEST(Gmsh, SingleQuad)
{
    const Mesh m = read_string(single_quad);
    EXPECT_EQ(m.dim, 2);
    EXPECT_EQ(m.num_nodes(), 4);
    ASSERT_EQ(m.num_elements(), 1);
    EXPECT_EQ(m.elements[0].kind, ElementKind::quad4);
    EXPECT_EQ(m.elements[0].nodes, (std::vector<int>{0, 1, 2, 3}));
    EXPECT_EQ(m.node_set("bottom"), (std::vector<int>{0, 1}));
    EXPECT_EQ(m.node_set("corner"), (std::vector<int>{0}));
    ASSERT_EQ(m.side_sets.at("bottom").size(), 1u);
    EXPECT_EQ(m.side_sets.at("bottom")[0], (SideRef{0, 0}));
    EXPECT_NEAR(mesh_measure(m), 1.0, 1e-15);
}

TEST(Gmsh, DanglingNodeReference)
{
    std::string s = single_quad;
    s.replace(s.find("1 3 2 0 1 1 2 3 4"), 17, "1 3 2 0 1 1 2 3 99");
    EXPECT_THROW(read_string(s), MeshError);
}

TEST(Gmsh, UnsupportedElementType)
{
    std::string s = single_quad;
    s.replace(s.find("1 3 2 0 1 1 2 3 4"), 17, "1 16 2 0 1 1 2 3 4");
    try {
        read_string(s);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 18);
    }
}

TEST(Gmsh, MalformedSection)
{
    std::string s = single_quad;
    s.replace(s.find("3 1 1 0"), 7, "3 1 x 0");
    EXPECT_THROW(read_string(s), ParseError);
    EXPECT_THROW(read_string("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n"), ParseError);
    EXPECT_THROW(read_string("garbage\n"), ParseError);
}

TEST(Gmsh, InvertedElementRejected)
{
    std::string s = single_quad;
    s.replace(s.find("1 3 2 0 1 1 2 3 4"), 17, "1 3 2 0 1 1 4 3 2");
    EXPECT_THROW(read_string(s), SingularJacobian);
}

TEST(Gmsh, UnitCubeTetsHaveUnitVolume)
{
    const Mesh m = read_string(unit_cube_tets());
    EXPECT_EQ(m.dim, 3);
    EXPECT_EQ(m.num_elements(), 6);
    EXPECT_NEAR(mesh_measure(m), 1.0, 1e-14);
}

TEST(Gmsh, RoundTripIsBitExact)
{
    Mesh m = grid(7, 5, 1.0, 1.0);
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(-0.01, 0.01);
    for (Vec3& x : m.nodes) {
        x(0) += u(rng) / 3.0;
        x(1) += u(rng) / 7.0;
    }
    m.node_sets["left"] = {0, 8, 16};
    std::ostringstream out;
    write_gmsh(m, out);
    const Mesh r = read_string(out.str());
    ASSERT_EQ(r.num_nodes(), m.num_nodes());
    for (int i = 0; i < m.num_nodes(); ++i)
        for (int d = 0; d < 3; ++d)
            EXPECT_EQ(r.nodes[i](d), m.nodes[i](d));
    EXPECT_EQ(r.node_set("left"), m.node_set("left"));
    ASSERT_EQ(r.num_elements(), m.num_elements());
    for (int e = 0; e < m.num_elements(); ++e)
        EXPECT_EQ(r.elements[e].nodes, m.elements[e].nodes);
}

TEST(Validate, RejectsBadConnectivity)
{
    Mesh m = grid(1, 1, 1, 1);
    m.elements[0].nodes[3] = 0;
    EXPECT_THROW(validate(m), MeshError);
    m = grid(1, 1, 1, 1);
    m.elements[0].nodes.pop_back();
    EXPECT_THROW(validate(m), MeshError);
    m = grid(1, 1, 1, 1);
    m.node_sets["empty"] = {};
    EXPECT_THROW(validate(m), MeshError);
    m = grid(1, 1, 1, 1);
    m.dim = 3;
    EXPECT_THROW(validate(m), MeshError);
    m = grid(1, 1, 1, 1);
    m.nodes[2](0) = std::nan("");
    EXPECT_THROW(validate(m), MeshError);
}

TEST(Resolution, UniformMeshAtBoundary)
{
    const Mesh m = grid(10, 10, 1.0, 1.0);  // h = 0.1
    const ResolutionReport r = characteristic_size(m, 0.5);
    EXPECT_NEAR(r.ratio, 5.0, 1e-12);
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.h_min, 0.1, 1e-15);
    EXPECT_NEAR(r.h_max, 0.1, 1e-15);
}

TEST(Resolution, CoarseMeshFails)
{
    const Mesh m = grid(5, 5, 1.0, 1.0);  // h = 0.2
    const ResolutionReport r = characteristic_size(m, 0.5);
    EXPECT_NEAR(r.ratio, 2.5, 1e-12);
    EXPECT_FALSE(r.pass);
}

TEST(Resolution, RegionFilter)
{
    // 10 x 10 grid of h = 0.05 next to one coarse unit square
    Mesh m = grid(10, 10, 0.5, 0.5);
    std::vector<int> fine(m.num_nodes());
    for (int i = 0; i < m.num_nodes(); ++i)
        fine[i] = i;
    const int o = m.num_nodes();
    for (Vec3 x : {Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(2, 1, 0), Vec3(1, 1, 0)})
        m.nodes.push_back(x);
    m.elements.push_back({ElementKind::quad4, {o, o + 1, o + 2, o + 3}});
    m.node_sets["crack_zone"] = fine;
    validate(m);
    const ResolutionReport all = characteristic_size(m, 0.5);
    EXPECT_FALSE(all.pass);
    const ResolutionReport r = characteristic_size(m, 0.5, std::string("crack_zone"));
    EXPECT_NEAR(r.ratio, 10.0, 1e-10);
    EXPECT_TRUE(r.pass);
    EXPECT_THROW(characteristic_size(m, 0.5, std::string("nope")), MeshError);
}

TEST(Measure, ElementEdgesAndFaces)
{
    EXPECT_EQ(element_edges(ElementKind::hex8).size(), 12u);
    EXPECT_EQ(element_faces(ElementKind::tet4).size(), 4u);
    // outward face ordering of a unit hex: bottom face normal points to -z
    const auto& f = element_faces(ElementKind::hex8)[0];
    const auto v = parent_vertices<ElementKind::hex8>();
    const Eigen::Vector3d a = v.row(f[1]) - v.row(f[0]);
    const Eigen::Vector3d b = v.row(f[2]) - v.row(f[0]);
    EXPECT_LT(a.cross(b)(2), 0.0);
}
