#pragma once

#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "ecgi/mesh.hpp"

// Procedural closed genus-0 meshes used for synthetic geometry.

namespace ecgi {

inline TriMesh icosahedron(double radius = 1.0) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    TriMesh m;
    m.vertices = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
    };
    for (auto& p : m.vertices) p = p * (radius / p.norm());
    m.triangles = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
    };
    return m;
}

// Icosahedron with `subdiv` rounds of 1-to-4 triangle subdivision, vertices
// projected to the sphere. V = 10*4^subdiv + 2.
inline TriMesh icosphere(int subdiv, double radius = 1.0) {
    TriMesh m = icosahedron(1.0);
    for (int s = 0; s < subdiv; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Vec3 p = (m.vertices[a] + m.vertices[b]) * 0.5;
            p = p * (1.0 / p.norm());
            int idx = static_cast<int>(m.vertices.size());
            m.vertices.push_back(p);
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(m.triangles.size() * 4);
        for (const auto& t : m.triangles) {
            int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
            next.push_back({t[0], ab, ca});
            next.push_back({t[1], bc, ab});
            next.push_back({t[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        m.triangles = std::move(next);
    }
    for (auto& p : m.vertices) p = p * (radius / p.norm());
    return m;
}

// Latitude-longitude sphere: `rings` rings of `segments` vertices plus two
// poles. V = rings*segments + 2, closed and edge-manifold.
inline TriMesh uv_sphere(int rings, int segments) {
    if (rings < 1 || segments < 3)
        throw ValidationError("uv_sphere: need rings >= 1 and segments >= 3");
    TriMesh m;
    m.vertices.push_back({0, 0, 1});  // north pole
    for (int r = 1; r <= rings; ++r) {
        const double theta = 3.14159265358979323846 * r / (rings + 1);
        for (int s = 0; s < segments; ++s) {
            const double phi = 2.0 * 3.14159265358979323846 * s / segments;
            m.vertices.push_back(
                {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)});
        }
    }
    m.vertices.push_back({0, 0, -1});  // south pole
    const int south = static_cast<int>(m.vertices.size()) - 1;
    auto ring_vertex = [&](int r, int s) { return 1 + r * segments + ((s % segments + segments) % segments); };

    for (int s = 0; s < segments; ++s) m.triangles.push_back({0, ring_vertex(0, s), ring_vertex(0, s + 1)});
    for (int r = 0; r + 1 < rings; ++r) {
        for (int s = 0; s < segments; ++s) {
            int a = ring_vertex(r, s), b = ring_vertex(r, s + 1);
            int c = ring_vertex(r + 1, s), d = ring_vertex(r + 1, s + 1);
            m.triangles.push_back({a, c, d});
            m.triangles.push_back({a, d, b});
        }
    }
    for (int s = 0; s < segments; ++s)
        m.triangles.push_back({ring_vertex(rings - 1, s), south, ring_vertex(rings - 1, s + 1)});
    return m;
}

inline TriMesh scale_mesh(TriMesh m, const Vec3& factors, const Vec3& offset = {}) {
    for (auto& p : m.vertices) {
        p.x = p.x * factors.x + offset.x;
        p.y = p.y * factors.y + offset.y;
        p.z = p.z * factors.z + offset.z;
    }
    return m;
}

// Ellipsoid from a uv sphere; used for synthetic heart and torso surfaces.
inline TriMesh ellipsoid(int rings, int segments, const Vec3& radii, const Vec3& center = {}) {
    return scale_mesh(uv_sphere(rings, segments), radii, center);
}

}  // namespace ecgi
