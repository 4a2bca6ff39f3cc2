#ifndef PFF_GMSH_HPP
#define PFF_GMSH_HPP

// Gmsh MSH 2.2 ASCII reader and writer.
//
// Domain elements: type 2 (tri3), 3 (quad4), 4 (tet4), 5 (hex8). Lower-
// dimensional entities (15 point, 1 line, and 2/3 faces of a 3D mesh) are
// accepted only as carriers of physical groups; every other type code is
// rejected. Each physical group becomes a node set; boundary groups also
// become side sets.

#include "pff/error.hpp"
#include "pff/mesh.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace pff
{

namespace gmsh_detail
{

struct RawElement
{
    int type = 0;
    int physical = 0;
    std::vector<long> nodes;
    int line = 0;
};

inline int type_dim(int type)
{
    switch (type) {
    case 15: return 0;
    case 1: return 1;
    case 2:
    case 3: return 2;
    case 4:
    case 5: return 3;
    default: return -1;
    }
}

inline int type_nodes(int type)
{
    switch (type) {
    case 15: return 1;
    case 1: return 2;
    case 2: return 3;
    case 3: return 4;
    case 4: return 4;
    case 5: return 8;
    default: return -1;
    }
}

inline ElementKind type_kind(int type)
{
    switch (type) {
    case 2: return ElementKind::tri3;
    case 3: return ElementKind::quad4;
    case 4: return ElementKind::tet4;
    default: return ElementKind::hex8;
    }
}

inline int kind_type(ElementKind k)
{
    switch (k) {
    case ElementKind::tri3: return 2;
    case ElementKind::quad4: return 3;
    case ElementKind::tet4: return 4;
    case ElementKind::hex8: break;
    }
    return 5;
}

class LineReader
{
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    bool next(std::string& s)
    {
        while (std::getline(in_, s)) {
            ++line_;
            if (!s.empty() && s.back() == '\r')
                s.pop_back();
            if (s.find_first_not_of(" \t") != std::string::npos)
                return true;
        }
        return false;
    }

    std::string expect(const char* what)
    {
        std::string s;
        if (!next(s))
            throw ParseError(std::string("unexpected end of file while reading ") + what, line_);
        return s;
    }

    int line() const { return line_; }

private:
    std::istream& in_;
    int line_ = 0;
};

inline long parse_count(const std::string& s, int line, const char* what)
{
    std::istringstream is(s);
    long n = -1;
    if (!(is >> n) || n < 0)
        throw ParseError(std::string("bad ") + what + " count", line);
    return n;
}

} // namespace gmsh_detail

inline Mesh read_gmsh(std::istream& in)
{
    using namespace gmsh_detail;
    LineReader rd(in);
    std::map<int, std::string> phys_names;
    std::vector<Vec3> coords;
    std::unordered_map<long, int> node_index;
    std::vector<RawElement> raw;
    bool have_format = false, have_nodes = false, have_elements = false;

    std::string s;
    while (rd.next(s)) {
        if (s == "$MeshFormat") {
            std::istringstream is(rd.expect("$MeshFormat"));
            std::string version;
            int file_type = -1, dsize = 0;
            if (!(is >> version >> file_type >> dsize))
                throw ParseError("malformed $MeshFormat header", rd.line());
            if (version != "2.2" || file_type != 0)
                throw ParseError("only MSH 2.2 ASCII is supported (got version " + version + ", type " +
                                     std::to_string(file_type) + ")",
                                 rd.line());
            if (rd.expect("$EndMeshFormat") != "$EndMeshFormat")
                throw ParseError("expected $EndMeshFormat", rd.line());
            have_format = true;
        } else if (s == "$PhysicalNames") {
            const long n = parse_count(rd.expect("$PhysicalNames"), rd.line(), "physical name");
            for (long i = 0; i < n; ++i) {
                const std::string l = rd.expect("$PhysicalNames");
                std::istringstream is(l);
                int dim = 0, tag = 0;
                if (!(is >> dim >> tag))
                    throw ParseError("malformed physical name entry", rd.line());
                const auto q0 = l.find('"'), q1 = l.rfind('"');
                if (q0 == std::string::npos || q1 == q0)
                    throw ParseError("physical name must be quoted", rd.line());
                phys_names[tag] = l.substr(q0 + 1, q1 - q0 - 1);
            }
            if (rd.expect("$EndPhysicalNames") != "$EndPhysicalNames")
                throw ParseError("expected $EndPhysicalNames", rd.line());
        } else if (s == "$Nodes") {
            const long n = parse_count(rd.expect("$Nodes"), rd.line(), "node");
            coords.reserve(n);
            for (long i = 0; i < n; ++i) {
                std::istringstream is(rd.expect("$Nodes"));
                long id = 0;
                double x = 0, y = 0, z = 0;
                if (!(is >> id >> x >> y >> z))
                    throw ParseError("malformed node entry", rd.line());
                if (!node_index.emplace(id, static_cast<int>(coords.size())).second)
                    throw ParseError("duplicate node id " + std::to_string(id), rd.line());
                coords.emplace_back(x, y, z);
            }
            if (rd.expect("$EndNodes") != "$EndNodes")
                throw ParseError("expected $EndNodes", rd.line());
            have_nodes = true;
        } else if (s == "$Elements") {
            const long n = parse_count(rd.expect("$Elements"), rd.line(), "element");
            raw.reserve(n);
            for (long i = 0; i < n; ++i) {
                std::istringstream is(rd.expect("$Elements"));
                long id = 0;
                int type = 0, ntags = 0;
                if (!(is >> id >> type >> ntags) || ntags < 0)
                    throw ParseError("malformed element entry", rd.line());
                const int nn = type_nodes(type);
                if (nn < 0)
                    throw ParseError("unsupported element type code " + std::to_string(type), rd.line());
                RawElement r;
                r.type = type;
                r.line = rd.line();
                for (int t = 0; t < ntags; ++t) {
                    int tag = 0;
                    if (!(is >> tag))
                        throw ParseError("malformed element tags", rd.line());
                    if (t == 0)
                        r.physical = tag;
                }
                r.nodes.resize(nn);
                for (int a = 0; a < nn; ++a)
                    if (!(is >> r.nodes[a]))
                        throw ParseError("element has too few nodes", rd.line());
                raw.push_back(std::move(r));
            }
            if (rd.expect("$EndElements") != "$EndElements")
                throw ParseError("expected $EndElements", rd.line());
            have_elements = true;
        } else if (!s.empty() && s[0] == '$' && s.rfind("$End", 0) != 0) {
            // Unknown section: skip to its end marker.
            const std::string end = "$End" + s.substr(1);
            std::string t;
            while (rd.next(t) && t != end) {
            }
        } else {
            throw ParseError("unexpected content '" + s + "'", rd.line());
        }
    }
    if (!have_format)
        throw ParseError("missing $MeshFormat section");
    if (!have_nodes || !have_elements)
        throw ParseError("missing $Nodes or $Elements section");

    Mesh mesh;
    int dim = 0;
    for (const RawElement& r : raw)
        dim = std::max(dim, type_dim(r.type));
    if (dim < 2)
        throw MeshError("mesh contains no 2D or 3D elements");
    mesh.dim = dim;
    mesh.nodes = std::move(coords);

    auto resolve = [&](const RawElement& r) {
        std::vector<int> ids(r.nodes.size());
        for (std::size_t a = 0; a < r.nodes.size(); ++a) {
            auto it = node_index.find(r.nodes[a]);
            if (it == node_index.end())
                throw MeshError("line " + std::to_string(r.line) + ": element references undefined node " +
                                std::to_string(r.nodes[a]));
            ids[a] = it->second;
        }
        return ids;
    };
    auto group_name = [&](int tag) {
        auto it = phys_names.find(tag);
        return it != phys_names.end() ? it->second : "physical_" + std::to_string(tag);
    };

    std::map<std::string, std::set<int>> sets;
    std::vector<std::pair<std::string, std::vector<int>>> boundary;
    for (const RawElement& r : raw) {
        std::vector<int> ids = resolve(r);
        if (type_dim(r.type) == dim) {
            mesh.elements.push_back({type_kind(r.type), ids});
        } else if (r.physical != 0) {
            boundary.emplace_back(group_name(r.physical), ids);
        }
        if (r.physical != 0)
            sets[group_name(r.physical)].insert(ids.begin(), ids.end());
    }
    for (auto& [name, ids] : sets)
        mesh.node_sets[name] = std::vector<int>(ids.begin(), ids.end());

    if (!boundary.empty()) {
        std::map<std::vector<int>, SideRef> faces;
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const auto& fl = element_faces(mesh.elements[e].kind);
            for (int f = 0; f < static_cast<int>(fl.size()); ++f) {
                std::vector<int> key;
                for (int a : fl[f])
                    key.push_back(mesh.elements[e].nodes[a]);
                std::sort(key.begin(), key.end());
                faces.emplace(std::move(key), SideRef{e, f});
            }
        }
        for (auto& [name, ids] : boundary) {
            std::sort(ids.begin(), ids.end());
            auto it = faces.find(ids);
            if (it != faces.end())
                mesh.side_sets[name].push_back(it->second);
        }
    }
    validate(mesh);
    return mesh;
}

inline Mesh read_gmsh(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open mesh file '" + path + "'");
    return read_gmsh(in);
}

/// Writes the mesh as MSH 2.2 ASCII. Node sets are emitted as tagged point
/// elements and side sets as tagged face elements, so read_gmsh recovers
/// them. Coordinates use 17 significant digits (exact round trip).
inline void write_gmsh(const Mesh& mesh, std::ostream& out)
{
    using namespace gmsh_detail;
    std::map<std::string, int> tags;
    int next_tag = 1;
    for (const auto& [name, ids] : mesh.node_sets)
        tags.emplace(name, next_tag++);
    for (const auto& [name, sides] : mesh.side_sets)
        if (tags.emplace(name, next_tag).second)
            ++next_tag;

    out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
    if (!tags.empty()) {
        out << "$PhysicalNames\n" << tags.size() << "\n";
        for (const auto& [name, tag] : tags) {
            const int d = mesh.side_sets.count(name) ? mesh.dim - 1 : 0;
            out << d << " " << tag << " \"" << name << "\"\n";
        }
        out << "$EndPhysicalNames\n";
    }
    char buf[128];
    out << "$Nodes\n" << mesh.nodes.size() << "\n";
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        const Vec3& x = mesh.nodes[i];
        std::snprintf(buf, sizeof buf, "%d %.17g %.17g %.17g\n", i + 1, x(0), x(1), x(2));
        out << buf;
    }
    out << "$EndNodes\n";

    std::size_t count = mesh.elements.size();
    for (const auto& [name, ids] : mesh.node_sets)
        if (!mesh.side_sets.count(name))
            count += ids.size();
    for (const auto& [name, sides] : mesh.side_sets)
        count += sides.size();

    out << "$Elements\n" << count << "\n";
    long id = 1;
    for (const Element& el : mesh.elements) {
        out << id++ << " " << kind_type(el.kind) << " 2 0 1";
        for (int n : el.nodes)
            out << " " << n + 1;
        out << "\n";
    }
    for (const auto& [name, ids] : mesh.node_sets) {
        if (mesh.side_sets.count(name))
            continue;
        for (int n : ids)
            out << id++ << " 15 2 " << tags.at(name) << " 0 " << n + 1 << "\n";
    }
    for (const auto& [name, sides] : mesh.side_sets) {
        for (const SideRef& s : sides) {
            const Element& el = mesh.elements[s.element];
            const auto& face = element_faces(el.kind)[s.face];
            int type = 1;
            if (mesh.dim == 3)
                type = face.size() == 3 ? 2 : 3;
            out << id++ << " " << type << " 2 " << tags.at(name) << " 0";
            for (int a : face)
                out << " " << el.nodes[a] + 1;
            out << "\n";
        }
    }
    out << "$EndElements\n";
}

inline void write_gmsh(const Mesh& mesh, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write mesh file '" + path + "'");
    write_gmsh(mesh, out);
}

} // namespace pff

#endif // PFF_GMSH_HPP
