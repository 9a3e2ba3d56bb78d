#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rdmix/error.hpp"

namespace rdmix {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

struct Box {
    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
};

/// Triangle with its vertices stored counter-clockwise. Local edge i is opposite local
/// vertex i and is traversed from vertex (i+1)%3 to vertex (i+2)%3.
struct Triangle {
    std::array<int, 3> vertices{};
    int region = 0;
    std::array<int, 3> edges{};
    /// +1 when the local traversal agrees with the edge's canonical direction.
    std::array<int, 3> signs{};
};

/// Edge with canonical direction vertices[0] -> vertices[1], vertices[0] < vertices[1].
struct Edge {
    std::array<int, 2> vertices{};
    std::array<int, 2> elements{-1, -1};
    std::array<int, 2> local_index{-1, -1};
    int tag = 0;

    bool is_boundary() const { return elements[1] < 0; }
};

struct BoundarySegment {
    int v0 = 0;
    int v1 = 0;
    int tag = 0;
};

/// Immutable triangular mesh with edge adjacency and orientation data.
class Mesh {
public:
    Mesh() = default;

    /// Builds adjacency from raw cells. Clockwise triangles are reordered; degenerate
    /// triangles and dangling vertex references are rejected.
    static Mesh from_cells(std::vector<Point> vertices,
                           std::vector<std::array<int, 3>> triangles,
                           std::vector<int> regions,
                           const std::vector<BoundarySegment>& boundary = {}) {
        RDMIX_REQUIRE(regions.size() == triangles.size(), Error,
                      "mesh: region count does not match triangle count");
        Mesh mesh;
        mesh.vertices_ = std::move(vertices);
        const int nv = static_cast<int>(mesh.vertices_.size());
        mesh.elements_.resize(triangles.size());
        std::map<std::pair<int, int>, int> edge_ids;
        for (std::size_t k = 0; k < triangles.size(); ++k) {
            auto tri = triangles[k];
            for (int v : tri)
                RDMIX_REQUIRE(v >= 0 && v < nv, Error,
                              "mesh: triangle " + std::to_string(k) +
                                  " references dangling vertex " + std::to_string(v));
            const double area2 = cross(mesh.vertices_[tri[1]] - mesh.vertices_[tri[0]],
                                       mesh.vertices_[tri[2]] - mesh.vertices_[tri[0]]);
            RDMIX_REQUIRE(std::abs(area2) > 0.0 && std::isfinite(area2), Error,
                          "mesh: triangle " + std::to_string(k) +
                              " is degenerate; orientation cannot be repaired");
            if (area2 < 0.0) std::swap(tri[1], tri[2]);
            Triangle& el = mesh.elements_[k];
            el.vertices = tri;
            el.region = regions[k];
            for (int i = 0; i < 3; ++i) {
                const int a = tri[(i + 1) % 3];
                const int b = tri[(i + 2) % 3];
                const auto key = std::minmax(a, b);
                auto [it, inserted] =
                    edge_ids.emplace(std::pair<int, int>(key.first, key.second),
                                     static_cast<int>(mesh.edges_.size()));
                if (inserted) {
                    Edge e;
                    e.vertices = {key.first, key.second};
                    e.elements[0] = static_cast<int>(k);
                    e.local_index[0] = i;
                    mesh.edges_.push_back(e);
                } else {
                    Edge& e = mesh.edges_[it->second];
                    RDMIX_REQUIRE(e.elements[1] < 0, Error,
                                  "mesh: edge shared by more than two triangles");
                    e.elements[1] = static_cast<int>(k);
                    e.local_index[1] = i;
                }
                el.edges[i] = it->second;
                el.signs[i] = a < b ? 1 : -1;
            }
        }
        for (std::size_t e = 0; e < mesh.edges_.size(); ++e) {
            const Edge& edge = mesh.edges_[e];
            if (!edge.is_boundary()) {
                const int s0 = mesh.elements_[edge.elements[0]].signs[edge.local_index[0]];
                const int s1 = mesh.elements_[edge.elements[1]].signs[edge.local_index[1]];
                RDMIX_REQUIRE(s0 * s1 == -1, Error,
                              "mesh: inconsistent orientation across edge " +
                                  std::to_string(e));
            }
        }
        for (const auto& seg : boundary) {
            const auto key = std::minmax(seg.v0, seg.v1);
            auto it = edge_ids.find({key.first, key.second});
            RDMIX_REQUIRE(it != edge_ids.end(), Error,
                          "mesh: boundary segment (" + std::to_string(seg.v0) + ", " +
                              std::to_string(seg.v1) + ") is not a mesh edge");
            mesh.edges_[it->second].tag = seg.tag;
        }
        return mesh;
    }

    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_edges() const { return static_cast<int>(edges_.size()); }
    int num_elements() const { return static_cast<int>(elements_.size()); }

    const std::vector<Point>& vertices() const { return vertices_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<Triangle>& elements() const { return elements_; }

    const Point& vertex(int i) const { return vertices_[i]; }
    const Edge& edge(int e) const { return edges_[e]; }
    const Triangle& element(int k) const { return elements_[k]; }

    int num_boundary_edges() const {
        return static_cast<int>(std::count_if(edges_.begin(), edges_.end(),
                                              [](const Edge& e) { return e.is_boundary(); }));
    }

    std::array<Point, 3> corners(int k) const {
        const auto& v = elements_[k].vertices;
        return {vertices_[v[0]], vertices_[v[1]], vertices_[v[2]]};
    }

    double area(int k) const {
        const auto c = corners(k);
        return 0.5 * cross(c[1] - c[0], c[2] - c[0]);
    }

    Point centroid(int k) const {
        const auto c = corners(k);
        return {(c[0].x + c[1].x + c[2].x) / 3.0, (c[0].y + c[1].y + c[2].y) / 3.0};
    }

    double edge_length(int e) const {
        return norm(vertices_[edges_[e].vertices[1]] - vertices_[edges_[e].vertices[0]]);
    }

    /// Unit outward normal of local edge i of element k.
    Point outward_normal(int k, int i) const {
        const auto& v = elements_[k].vertices;
        const Point t = vertices_[v[(i + 2) % 3]] - vertices_[v[(i + 1) % 3]];
        const double len = norm(t);
        return {t.y / len, -t.x / len};
    }

    /// Mesh parameter h: the longest edge.
    double max_edge_length() const {
        double h = 0.0;
        for (int e = 0; e < num_edges(); ++e) h = std::max(h, edge_length(e));
        return h;
    }

    Box bounding_box() const {
        Box b{std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest(),
              std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest()};
        for (const auto& p : vertices_) {
            b.xmin = std::min(b.xmin, p.x);
            b.xmax = std::max(b.xmax, p.x);
            b.ymin = std::min(b.ymin, p.y);
            b.ymax = std::max(b.ymax, p.y);
        }
        return b;
    }

    /// Reference coordinates of a physical point in element k.
    Point to_reference(int k, Point p) const {
        const auto c = corners(k);
        const Point a = c[1] - c[0];
        const Point b = c[2] - c[0];
        const Point d = p - c[0];
        const double det = cross(a, b);
        return {cross(d, b) / det, cross(a, d) / det};
    }

    Point to_physical(int k, Point ref) const {
        const auto c = corners(k);
        return c[0] + ref.x * (c[1] - c[0]) + ref.y * (c[2] - c[0]);
    }

    /// Index of the lowest-numbered element containing p, or -1.
    int locate(Point p, double tol = 1e-12) const {
        for (int k = 0; k < num_elements(); ++k) {
            const Point r = to_reference(k, p);
            if (r.x >= -tol && r.y >= -tol && r.x + r.y <= 1.0 + tol) return k;
        }
        return -1;
    }

    void set_regions(const std::vector<int>& regions) {
        RDMIX_REQUIRE(regions.size() == elements_.size(), Error,
                      "mesh: region count does not match element count");
        for (std::size_t k = 0; k < regions.size(); ++k) elements_[k].region = regions[k];
    }

    void set_edge_tag(int e, int tag) { edges_[e].tag = tag; }

private:
    std::vector<Point> vertices_;
    std::vector<Edge> edges_;
    std::vector<Triangle> elements_;
};

/// Region tag of the element containing p (ties broken by lowest element index).
inline int region_lookup(const Mesh& mesh, Point p) {
    const int k = mesh.locate(p);
    RDMIX_REQUIRE(k >= 0, Error,
                  "region_lookup: point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                      ") lies outside the mesh");
    return mesh.element(k).region;
}

enum class Diagonal { Right, Crossed };

/// Structured triangulation with 2*nx*ny triangles. Boundary edges are tagged
/// 1 (bottom), 2 (right), 3 (top), 4 (left).
inline Mesh generate_structured(int nx, int ny, Box box, Diagonal diagonal = Diagonal::Right) {
    RDMIX_REQUIRE(nx >= 1 && ny >= 1, Error, "generate_structured: nx, ny must be >= 1");
    RDMIX_REQUIRE(box.xmax > box.xmin && box.ymax > box.ymin, Error,
                  "generate_structured: degenerate bounding box");
    std::vector<Point> vertices;
    vertices.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            vertices.push_back({box.xmin + (box.xmax - box.xmin) * i / nx,
                                box.ymin + (box.ymax - box.ymin) * j / ny});
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    std::vector<std::array<int, 3>> tris;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
            const bool flip = diagonal == Diagonal::Crossed && (i + j) % 2 == 1;
            if (!flip) {
                tris.push_back({a, b, c});
                tris.push_back({a, c, d});
            } else {
                tris.push_back({a, b, d});
                tris.push_back({b, c, d});
            }
        }
    }
    std::vector<BoundarySegment> boundary;
    for (int i = 0; i < nx; ++i) {
        boundary.push_back({id(i, 0), id(i + 1, 0), 1});
        boundary.push_back({id(i, ny), id(i + 1, ny), 3});
    }
    for (int j = 0; j < ny; ++j) {
        boundary.push_back({id(nx, j), id(nx, j + 1), 2});
        boundary.push_back({id(0, j), id(0, j + 1), 4});
    }
    std::vector<int> regions(tris.size(), 0);
    return Mesh::from_cells(std::move(vertices), std::move(tris), std::move(regions), boundary);
}

enum class MeshFormat { Native, GmshV2 };

namespace detail {

inline std::string next_data_line(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
        const auto pos = line.find_first_not_of(" \t\r");
        if (pos != std::string::npos) return line.substr(pos);
    }
    throw ParseError("mesh: unexpected end of file");
}

inline std::pair<std::string, long> read_header(std::istream& in) {
    std::istringstream ss(next_data_line(in));
    std::string key;
    long count = -1;
    ss >> key >> count;
    RDMIX_REQUIRE(ss && count >= 0, ParseError, "mesh: malformed section header '" + key + "'");
    return {key, count};
}

} // namespace detail

/// Native format: "rdmix-mesh 1", "vertices N" + N lines "x y", "triangles M" + M lines
/// "v0 v1 v2 region", optionally "boundary K" + K lines "v0 v1 tag".
inline Mesh read_native(std::istream& in) {
    {
        std::istringstream ss(detail::next_data_line(in));
        std::string magic;
        int version = 0;
        ss >> magic >> version;
        RDMIX_REQUIRE(magic == "rdmix-mesh" && version == 1, ParseError,
                      "mesh: missing 'rdmix-mesh 1' header");
    }
    auto [vkey, nv] = detail::read_header(in);
    RDMIX_REQUIRE(vkey == "vertices", ParseError, "mesh: expected 'vertices' section");
    std::vector<Point> vertices(static_cast<std::size_t>(nv));
    for (auto& p : vertices) {
        std::istringstream ss(detail::next_data_line(in));
        RDMIX_REQUIRE(static_cast<bool>(ss >> p.x >> p.y), ParseError,
                      "mesh: malformed vertex line");
    }
    auto [tkey, nt] = detail::read_header(in);
    RDMIX_REQUIRE(tkey == "triangles", ParseError, "mesh: expected 'triangles' section");
    std::vector<std::array<int, 3>> tris(static_cast<std::size_t>(nt));
    std::vector<int> regions(static_cast<std::size_t>(nt));
    for (long k = 0; k < nt; ++k) {
        std::istringstream ss(detail::next_data_line(in));
        RDMIX_REQUIRE(static_cast<bool>(ss >> tris[k][0] >> tris[k][1] >> tris[k][2] >> regions[k]),
                      ParseError, "mesh: malformed triangle line");
    }
    std::vector<BoundarySegment> boundary;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream hs(line);
        std::string key;
        long nb = -1;
        hs >> key >> nb;
        RDMIX_REQUIRE(key == "boundary" && nb >= 0, ParseError,
                      "mesh: unexpected section '" + key + "'");
        boundary.resize(static_cast<std::size_t>(nb));
        for (auto& seg : boundary) {
            std::istringstream ss(detail::next_data_line(in));
            RDMIX_REQUIRE(static_cast<bool>(ss >> seg.v0 >> seg.v1 >> seg.tag), ParseError,
                          "mesh: malformed boundary line");
        }
        break;
    }
    return Mesh::from_cells(std::move(vertices), std::move(tris), std::move(regions), boundary);
}

inline void write_native(const Mesh& mesh, std::ostream& out) {
    out << "rdmix-mesh 1\n";
    out << "vertices " << mesh.num_vertices() << '\n';
    out << std::setprecision(17);
    for (const auto& p : mesh.vertices()) out << p.x << ' ' << p.y << '\n';
    out << "triangles " << mesh.num_elements() << '\n';
    for (const auto& t : mesh.elements())
        out << t.vertices[0] << ' ' << t.vertices[1] << ' ' << t.vertices[2] << ' ' << t.region
            << '\n';
    std::vector<const Edge*> tagged;
    for (const auto& e : mesh.edges())
        if (e.tag != 0) tagged.push_back(&e);
    if (!tagged.empty()) {
        out << "boundary " << tagged.size() << '\n';
        for (const Edge* e : tagged)
            out << e->vertices[0] << ' ' << e->vertices[1] << ' ' << e->tag << '\n';
    }
}

/// Gmsh ASCII v2 subset: $Nodes and $Elements with line (1) and triangle (2) cells.
/// The first element tag (physical group) becomes the region or boundary tag.
inline Mesh read_gmsh(std::istream& in) {
    std::map<long, int> node_index;
    std::vector<Point> vertices;
    std::vector<std::array<int, 3>> tris;
    std::vector<int> regions;
    std::vector<BoundarySegment> boundary;
    bool have_nodes = false, have_elements = false;
    std::string line;
    auto lookup = [&](long id) {
        auto it = node_index.find(id);
        RDMIX_REQUIRE(it != node_index.end(), ParseError,
                      "gmsh: element references unknown node " + std::to_string(id));
        return it->second;
    };
    while (std::getline(in, line)) {
        if (line.rfind("$MeshFormat", 0) == 0) {
            std::istringstream ss(detail::next_data_line(in));
            double version = 0;
            int file_type = -1;
            ss >> version >> file_type;
            RDMIX_REQUIRE(version >= 2.0 && version < 3.0 && file_type == 0, ParseError,
                          "gmsh: only ASCII format version 2 is supported");
        } else if (line.rfind("$Nodes", 0) == 0) {
            const long n = std::stol(detail::next_data_line(in));
            for (long i = 0; i < n; ++i) {
                std::istringstream ss(detail::next_data_line(in));
                long id;
                double x, y, z;
                RDMIX_REQUIRE(static_cast<bool>(ss >> id >> x >> y >> z), ParseError,
                              "gmsh: malformed node line");
                node_index[id] = static_cast<int>(vertices.size());
                vertices.push_back({x, y});
            }
            have_nodes = true;
        } else if (line.rfind("$Elements", 0) == 0) {
            RDMIX_REQUIRE(have_nodes, ParseError, "gmsh: $Elements before $Nodes");
            const long n = std::stol(detail::next_data_line(in));
            for (long i = 0; i < n; ++i) {
                std::istringstream ss(detail::next_data_line(in));
                long id;
                int type, ntags;
                RDMIX_REQUIRE(static_cast<bool>(ss >> id >> type >> ntags), ParseError,
                              "gmsh: malformed element line");
                std::vector<int> tags(static_cast<std::size_t>(ntags));
                for (auto& t : tags) ss >> t;
                const int tag = ntags > 0 ? tags[0] : 0;
                if (type == 2) {
                    long a, b, c;
                    RDMIX_REQUIRE(static_cast<bool>(ss >> a >> b >> c), ParseError,
                                  "gmsh: malformed triangle");
                    tris.push_back({lookup(a), lookup(b), lookup(c)});
                    regions.push_back(tag);
                } else if (type == 1) {
                    long a, b;
                    RDMIX_REQUIRE(static_cast<bool>(ss >> a >> b), ParseError,
                                  "gmsh: malformed line element");
                    boundary.push_back({lookup(a), lookup(b), tag});
                } else if (type == 15) {
                    // point cells carry no topology
                } else {
                    throw ParseError("gmsh: non-triangle cell of type " + std::to_string(type) +
                                     " (element " + std::to_string(id) + ")");
                }
            }
            have_elements = true;
        }
    }
    RDMIX_REQUIRE(have_nodes && have_elements, ParseError,
                  "gmsh: missing $Nodes or $Elements section");
    return Mesh::from_cells(std::move(vertices), std::move(tris), std::move(regions), boundary);
}

inline Mesh load_mesh(const std::string& path, MeshFormat format) {
    std::ifstream in(path);
    RDMIX_REQUIRE(in.good(), Error, "mesh: cannot open '" + path + "'");
    return format == MeshFormat::Native ? read_native(in) : read_gmsh(in);
}

} // namespace rdmix
