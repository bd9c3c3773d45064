#pragma once

#include <array>
#include <string>
#include <vector>

#include "ecgi/common.hpp"
#include "ecgi/mesh.hpp"

namespace ecgi {

// Pseudo-coordinate of a directed edge: the unit offset (ci - cj)/|ci - cj|
// rescaled per coordinate from [-1,1] to [0,1]. Self-loops (ci == cj) get
// the center of the attribute domain.
inline std::array<double, 3> edge_attribute(const Vec3& ci, const Vec3& cj) {
    const Vec3 d = ci - cj;
    const double s = d.norm();
    if (s == 0.0) return {0.5, 0.5, 0.5};
    return {(d.x / s + 1.0) * 0.5, (d.y / s + 1.0) * 0.5, (d.z / s + 1.0) * 0.5};
}

// Directed graph over mesh vertices. edges[e] = (dst, src): vertex dst
// receives from vertex src, with attribute edge_attribute(c_dst, c_src).
// Contains both directions of every mesh edge plus one self-loop per vertex.
struct GeometryGraph {
    int num_vertices = 0;
    std::vector<std::pair<int, int>> edges;
    std::vector<std::array<double, 3>> edge_attrs;

    std::size_t num_edges() const { return edges.size(); }
};

inline GeometryGraph build_graph(const TriMesh& mesh) {
    GeometryGraph g;
    g.num_vertices = static_cast<int>(mesh.num_vertices());
    const auto undirected = unique_edges(mesh);
    g.edges.reserve(undirected.size() * 2 + mesh.num_vertices());
    for (const auto& [a, b] : undirected) {
        g.edges.emplace_back(a, b);
        g.edges.emplace_back(b, a);
    }
    for (int i = 0; i < g.num_vertices; ++i) g.edges.emplace_back(i, i);
    g.edge_attrs.reserve(g.edges.size());
    for (const auto& [dst, src] : g.edges)
        g.edge_attrs.push_back(edge_attribute(mesh.vertices[dst], mesh.vertices[src]));
    return g;
}

// Complete bipartite graph between two latent vertex sets. Every right
// (heart) vertex receives from every left (torso) vertex; the attribute of
// edge (i, j) encodes the relative position of heart vertex i and torso
// vertex j.
struct BipartiteGraph {
    int num_left = 0;   // torso latent vertices (sources)
    int num_right = 0;  // heart latent vertices (destinations)
    std::vector<std::pair<int, int>> edges;  // (dst right, src left)
    std::vector<std::array<double, 3>> edge_attrs;

    std::size_t num_edges() const { return edges.size(); }
};

inline BipartiteGraph build_bipartite(const std::vector<Vec3>& torso_coords,
                                      const std::vector<Vec3>& heart_coords) {
    if (torso_coords.empty() || heart_coords.empty())
        throw ValidationError("build_bipartite: latent vertex sets must be nonempty");
    BipartiteGraph b;
    b.num_left = static_cast<int>(torso_coords.size());
    b.num_right = static_cast<int>(heart_coords.size());
    b.edges.reserve(static_cast<std::size_t>(b.num_left) * b.num_right);
    for (int i = 0; i < b.num_right; ++i)
        for (int j = 0; j < b.num_left; ++j) {
            b.edges.emplace_back(i, j);
            b.edge_attrs.push_back(edge_attribute(heart_coords[i], torso_coords[j]));
        }
    return b;
}

}  // namespace ecgi
