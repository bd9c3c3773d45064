#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ecgi/common.hpp"

namespace ecgi {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double c) const { return {x * c, y * c, z * c}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

// Triangular surface mesh. Plain-text file format:
//   line 1: "V F"
//   V lines: "x y z"
//   F lines: "i j k" (0-based vertex indices)
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    std::size_t num_vertices() const { return vertices.size(); }
    std::size_t num_triangles() const { return triangles.size(); }
};

// Unique undirected edges (a < b), sorted lexicographically.
inline std::vector<std::pair<int, int>> unique_edges(const TriMesh& mesh) {
    std::set<std::pair<int, int>> edges;
    for (const auto& t : mesh.triangles) {
        for (int e = 0; e < 3; ++e) {
            int a = t[e], b = t[(e + 1) % 3];
            if (a > b) std::swap(a, b);
            edges.emplace(a, b);
        }
    }
    return {edges.begin(), edges.end()};
}

inline long euler_characteristic(const TriMesh& mesh) {
    return static_cast<long>(mesh.num_vertices()) - static_cast<long>(unique_edges(mesh).size()) +
           static_cast<long>(mesh.num_triangles());
}

// Checks the TriMesh invariants: indices in range, no degenerate triangles,
// every edge bordering one or two triangles.
inline void validate_mesh(const TriMesh& mesh) {
    const int V = static_cast<int>(mesh.num_vertices());
    std::map<std::pair<int, int>, int> edge_count;
    for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
        const auto& t = mesh.triangles[f];
        for (int k = 0; k < 3; ++k) {
            if (t[k] < 0 || t[k] >= V)
                throw ValidationError("triangle " + std::to_string(f) + ": vertex index " +
                                      std::to_string(t[k]) + " out of range [0," +
                                      std::to_string(V) + ")");
        }
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
            throw ValidationError("triangle " + std::to_string(f) + " is degenerate");
        for (int e = 0; e < 3; ++e) {
            int a = t[e], b = t[(e + 1) % 3];
            if (a > b) std::swap(a, b);
            ++edge_count[{a, b}];
        }
    }
    for (const auto& [edge, count] : edge_count) {
        if (count > 2)
            throw ValidationError("edge (" + std::to_string(edge.first) + "," +
                                  std::to_string(edge.second) + ") borders " +
                                  std::to_string(count) + " triangles; mesh is not edge-manifold");
    }
}

inline TriMesh load_mesh(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw RuntimeError("cannot open mesh file: " + path);

    auto fail = [&](int line, const std::string& msg) {
        throw ValidationError(path + ":" + std::to_string(line) + ": " + msg);
    };

    std::string header;
    if (!std::getline(is, header)) fail(1, "missing header line");
    std::istringstream hs(header);
    long V = -1, F = -1;
    if (!(hs >> V >> F) || V < 0 || F < 0) fail(1, "expected header 'V F'");

    TriMesh mesh;
    mesh.vertices.reserve(static_cast<std::size_t>(V));
    mesh.triangles.reserve(static_cast<std::size_t>(F));
    std::string line;
    for (long i = 0; i < V; ++i) {
        if (!std::getline(is, line)) fail(static_cast<int>(2 + i), "missing vertex line");
        std::istringstream ls(line);
        Vec3 p;
        if (!(ls >> p.x >> p.y >> p.z))
            fail(static_cast<int>(2 + i), "expected vertex 'x y z', got '" + line + "'");
        mesh.vertices.push_back(p);
    }
    for (long i = 0; i < F; ++i) {
        if (!std::getline(is, line)) fail(static_cast<int>(2 + V + i), "missing triangle line");
        std::istringstream ls(line);
        std::array<int, 3> t{};
        if (!(ls >> t[0] >> t[1] >> t[2]))
            fail(static_cast<int>(2 + V + i), "expected triangle 'i j k', got '" + line + "'");
        mesh.triangles.push_back(t);
    }
    validate_mesh(mesh);
    return mesh;
}

inline void save_mesh(const TriMesh& mesh, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw RuntimeError("cannot open for write: " + path);
    os << mesh.num_vertices() << " " << mesh.num_triangles() << "\n";
    os.precision(17);
    for (const auto& p : mesh.vertices) os << p.x << " " << p.y << " " << p.z << "\n";
    for (const auto& t : mesh.triangles) os << t[0] << " " << t[1] << " " << t[2] << "\n";
    if (!os) throw RuntimeError("write failed: " + path);
}

inline Vec3 centroid(const TriMesh& mesh) {
    Vec3 c;
    for (const auto& p : mesh.vertices) c = c + p;
    return c * (1.0 / static_cast<double>(mesh.num_vertices()));
}

// Rigid rotation about the named axis through the mesh centroid.
inline TriMesh rotate_mesh(const TriMesh& mesh, char axis, double degrees) {
    const double rad = degrees * 3.14159265358979323846 / 180.0;
    const double c = std::cos(rad), s = std::sin(rad);
    const Vec3 o = centroid(mesh);
    TriMesh out = mesh;
    for (auto& p : out.vertices) {
        const Vec3 q = p - o;
        Vec3 r;
        switch (axis) {
            case 'x': r = {q.x, c * q.y - s * q.z, s * q.y + c * q.z}; break;
            case 'y': r = {c * q.x + s * q.z, q.y, -s * q.x + c * q.z}; break;
            case 'z': r = {c * q.x - s * q.y, s * q.x + c * q.y, q.z}; break;
            default: throw ValidationError(std::string("rotate_mesh: unknown axis '") + axis + "'");
        }
        p = r + o;
    }
    return out;
}

// Hash of the geometric content (not the file bytes), used to tie
// checkpoints and datasets to the geometry they were built from.
inline std::uint64_t mesh_hash(const TriMesh& mesh) {
    std::uint64_t h = kFnvOffset;
    h = fnv1a(static_cast<std::uint64_t>(mesh.num_vertices()), h);
    h = fnv1a(static_cast<std::uint64_t>(mesh.num_triangles()), h);
    for (const auto& p : mesh.vertices) {
        h = fnv1a(std::bit_cast<std::uint64_t>(p.x), h);
        h = fnv1a(std::bit_cast<std::uint64_t>(p.y), h);
        h = fnv1a(std::bit_cast<std::uint64_t>(p.z), h);
    }
    for (const auto& t : mesh.triangles)
        for (int k = 0; k < 3; ++k) h = fnv1a(static_cast<std::uint64_t>(t[k]), h);
    return h;
}

}  // namespace ecgi
