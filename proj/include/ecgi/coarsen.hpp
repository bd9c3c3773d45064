#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ecgi/autograd.hpp"
#include "ecgi/graph.hpp"
#include "ecgi/mesh.hpp"
#include "ecgi/serialize.hpp"

namespace ecgi {

// Binary fine-to-coarse vertex assignment. parent[f] is the coarse vertex of
// fine vertex f (each row of the assignment matrix has exactly one 1);
// cluster_size[c] >= 1 (no empty clusters). Pooling applies the
// column-normalized transpose (cluster mean), unpooling copies the cluster
// value back.
struct PoolingMap {
    int fine = 0;
    int coarse = 0;
    std::vector<int> parent;
    std::vector<int> cluster_size;

    void validate() const {
        if (static_cast<int>(parent.size()) != fine)
            throw ValidationError("PoolingMap: parent size != fine count");
        std::vector<int> count(coarse, 0);
        for (int p : parent) {
            if (p < 0 || p >= coarse) throw ValidationError("PoolingMap: parent index out of range");
            ++count[p];
        }
        for (int c = 0; c < coarse; ++c)
            if (count[c] == 0)
                throw ValidationError("PoolingMap: empty cluster " + std::to_string(c));
        if (count != cluster_size) throw ValidationError("PoolingMap: cluster_size inconsistent");
    }
};

namespace detail {

// Mutable mesh connectivity for edge collapse.
struct CollapseMesh {
    std::vector<Vec3> pos;
    std::vector<bool> vertex_alive;
    std::vector<std::array<int, 3>> tris;
    std::vector<bool> tri_alive;
    std::vector<std::vector<int>> vertex_tris;  // incident alive triangle ids (lazily cleaned)
    std::vector<int> merged_into;               // collapse chain, -1 while alive
    std::vector<std::uint32_t> version;         // bumped when a vertex's star changes

    explicit CollapseMesh(const TriMesh& m)
        : pos(m.vertices),
          vertex_alive(m.num_vertices(), true),
          tris(m.triangles),
          tri_alive(m.num_triangles(), true),
          vertex_tris(m.num_vertices()),
          merged_into(m.num_vertices(), -1),
          version(m.num_vertices(), 0) {
        for (std::size_t f = 0; f < tris.size(); ++f)
            for (int k = 0; k < 3; ++k) vertex_tris[tris[f][k]].push_back(static_cast<int>(f));
    }

    void tidy_incidence(int v) {
        auto& inc = vertex_tris[v];
        inc.erase(std::remove_if(inc.begin(), inc.end(), [&](int f) { return !tri_alive[f]; }),
                  inc.end());
    }

    // neighbors of v over alive triangles, sorted unique
    std::vector<int> neighbors(int v) {
        tidy_incidence(v);
        std::vector<int> out;
        for (int f : vertex_tris[v])
            for (int k = 0; k < 3; ++k)
                if (tris[f][k] != v) out.push_back(tris[f][k]);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    std::vector<int> shared_triangles(int u, int v) {
        tidy_incidence(u);
        std::vector<int> out;
        for (int f : vertex_tris[u]) {
            const auto& t = tris[f];
            if (t[0] == v || t[1] == v || t[2] == v) out.push_back(f);
        }
        return out;
    }
};

// Link condition for an edge collapse on a 2-manifold (Dey et al.): the
// common vertex neighbors of u and v must be exactly the vertices opposite
// the shared triangles (2 for an interior edge, 1 on a boundary), and no
// triangle edge opposite u may coincide with one opposite v. Violations
// mean the collapse would pinch the surface or create duplicate faces,
// changing the Euler characteristic.
inline bool collapse_is_legal(CollapseMesh& cm, int u, int v) {
    const auto shared = cm.shared_triangles(u, v);
    if (shared.empty() || shared.size() > 2) return false;

    std::set<int> opposite;
    for (int f : shared)
        for (int k = 0; k < 3; ++k)
            if (cm.tris[f][k] != u && cm.tris[f][k] != v) opposite.insert(cm.tris[f][k]);

    const auto nu = cm.neighbors(u);
    const auto nv = cm.neighbors(v);
    std::vector<int> common;
    std::set_intersection(nu.begin(), nu.end(), nv.begin(), nv.end(), std::back_inserter(common));
    common.erase(std::remove(common.begin(), common.end(), u), common.end());
    common.erase(std::remove(common.begin(), common.end(), v), common.end());
    if (common.size() != opposite.size()) return false;
    for (int c : common)
        if (!opposite.count(c)) return false;

    // opposite-edge test (catches e.g. the tetrahedron, where collapsing any
    // edge would fold the two remaining faces onto each other)
    auto opposite_edges = [&](int w) {
        std::set<std::pair<int, int>> out;
        cm.tidy_incidence(w);
        for (int f : cm.vertex_tris[w]) {
            const auto& t = cm.tris[f];
            std::array<int, 2> rest{};
            int n = 0;
            for (int k = 0; k < 3; ++k)
                if (t[k] != w) rest[n++] = t[k];
            if (rest[0] == u || rest[0] == v || rest[1] == u || rest[1] == v) continue;
            out.emplace(std::min(rest[0], rest[1]), std::max(rest[0], rest[1]));
        }
        return out;
    };
    const auto eu = opposite_edges(u);
    for (const auto& e : opposite_edges(v))
        if (eu.count(e)) return false;
    return true;
}

}  // namespace detail

// Iterative shortest-edge collapse down to target_vertex_count, rejecting
// any collapse that fails the link condition. The merged vertex sits at the
// edge midpoint. If no legal collapse remains before reaching the target,
// coarsening stops early with the achieved count.
inline std::pair<TriMesh, PoolingMap> coarsen(const TriMesh& mesh, int target_vertex_count) {
    const int V = static_cast<int>(mesh.num_vertices());
    if (target_vertex_count < 4 || target_vertex_count >= V)
        throw ValidationError("coarsen: target must be in [4, V), got " +
                              std::to_string(target_vertex_count) + " for V=" + std::to_string(V));

    detail::CollapseMesh cm(mesh);

    struct Candidate {
        double length;
        int u, v;
        std::uint64_t stamp;  // combined endpoint versions at push time
        bool operator>(const Candidate& o) const {
            if (length != o.length) return length > o.length;
            if (u != o.u) return u > o.u;
            return v > o.v;
        }
    };
    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<Candidate>> queue;

    auto stamp_of = [&](int u, int v) {
        return (static_cast<std::uint64_t>(cm.version[u]) << 32) | cm.version[v];
    };
    auto push_edge = [&](int u, int v) {
        if (u > v) std::swap(u, v);
        queue.push({distance(cm.pos[u], cm.pos[v]), u, v, stamp_of(u, v)});
    };
    for (const auto& [a, b] : unique_edges(mesh)) push_edge(a, b);

    int alive = V;
    while (alive > target_vertex_count && !queue.empty()) {
        const Candidate cand = queue.top();
        queue.pop();
        const int u = cand.u, v = cand.v;
        if (!cm.vertex_alive[u] || !cm.vertex_alive[v]) continue;
        if (cand.stamp != stamp_of(u, v)) continue;  // stale entry
        if (!detail::collapse_is_legal(cm, u, v)) continue;

        // collapse u into v at the midpoint
        cm.pos[v] = (cm.pos[u] + cm.pos[v]) * 0.5;
        for (int f : cm.shared_triangles(u, v)) cm.tri_alive[f] = false;
        cm.tidy_incidence(u);
        for (int f : cm.vertex_tris[u]) {
            for (int k = 0; k < 3; ++k)
                if (cm.tris[f][k] == u) cm.tris[f][k] = v;
            cm.vertex_tris[v].push_back(f);
        }
        cm.vertex_tris[u].clear();
        cm.vertex_alive[u] = false;
        cm.merged_into[u] = v;
        --alive;

        ++cm.version[v];
        for (int n : cm.neighbors(v)) {
            ++cm.version[n];
            push_edge(v, n);
            for (int n2 : cm.neighbors(n))
                if (n2 != v) push_edge(n, n2);
        }
    }

    // renumber alive vertices
    std::vector<int> coarse_index(V, -1);
    TriMesh coarse;
    for (int i = 0; i < V; ++i) {
        if (cm.vertex_alive[i]) {
            coarse_index[i] = static_cast<int>(coarse.vertices.size());
            coarse.vertices.push_back(cm.pos[i]);
        }
    }
    for (std::size_t f = 0; f < cm.tris.size(); ++f) {
        if (!cm.tri_alive[f]) continue;
        const auto& t = cm.tris[f];
        coarse.triangles.push_back({coarse_index[t[0]], coarse_index[t[1]], coarse_index[t[2]]});
    }
    validate_mesh(coarse);

    PoolingMap map;
    map.fine = V;
    map.coarse = static_cast<int>(coarse.vertices.size());
    map.parent.resize(V);
    map.cluster_size.assign(map.coarse, 0);
    for (int i = 0; i < V; ++i) {
        int r = i;
        while (cm.merged_into[r] >= 0) r = cm.merged_into[r];
        map.parent[i] = coarse_index[r];
        ++map.cluster_size[coarse_index[r]];
    }
    map.validate();
    return {std::move(coarse), std::move(map)};
}

// Ordered coarsening levels; levels[0] is the input mesh. maps[l] pools
// level l to level l+1. The Euler characteristic is identical at every
// level by construction (each collapse preserves it).
struct MeshHierarchy {
    std::vector<TriMesh> meshes;
    std::vector<GeometryGraph> graphs;
    std::vector<PoolingMap> maps;

    std::size_t num_levels() const { return meshes.size(); }
};

inline MeshHierarchy build_hierarchy(const TriMesh& mesh, const std::vector<int>& targets) {
    validate_mesh(mesh);
    MeshHierarchy h;
    h.meshes.push_back(mesh);
    for (int target : targets) {
        auto [coarse, map] = coarsen(h.meshes.back(), target);
        h.meshes.push_back(std::move(coarse));
        h.maps.push_back(std::move(map));
    }
    const long chi = euler_characteristic(h.meshes.front());
    for (std::size_t l = 1; l < h.meshes.size(); ++l) {
        if (h.meshes[l].num_vertices() >= h.meshes[l - 1].num_vertices())
            throw RuntimeError("build_hierarchy: vertex counts not strictly decreasing at level " +
                               std::to_string(l));
        if (euler_characteristic(h.meshes[l]) != chi)
            throw RuntimeError("build_hierarchy: Euler characteristic changed at level " +
                               std::to_string(l));
    }
    for (const auto& m : h.meshes) h.graphs.push_back(build_graph(m));
    return h;
}

// ---- pooling as differentiable operations ----

// cluster mean: f_coarse = normalized-transpose(P) * f_fine
inline Var pool(const Var& x, const PoolingMap& map) {
    const Tensor& xv = x->value;
    if (xv.rank() != 3 || xv.dim(0) != static_cast<std::size_t>(map.fine))
        throw ValidationError("pool: input node dim " + std::to_string(xv.dim(0)) +
                              " != fine count " + std::to_string(map.fine));
    const std::size_t C = xv.dim(1), T = xv.dim(2), B = C * T;
    Tensor out({static_cast<std::size_t>(map.coarse), C, T});
    for (int f = 0; f < map.fine; ++f) {
        const double w = 1.0 / map.cluster_size[map.parent[f]];
        const double* src = &xv.v[f * B];
        double* dst = &out.v[static_cast<std::size_t>(map.parent[f]) * B];
        for (std::size_t i = 0; i < B; ++i) dst[i] += w * src[i];
    }
    const auto parent = map.parent;
    const auto csize = map.cluster_size;
    return detail::make_op("pool", std::move(out), {x}, [parent, csize, B](Node& self) {
        Node& xn = *self.parents[0];
        xn.ensure_grad();
        for (std::size_t f = 0; f < parent.size(); ++f) {
            const double w = 1.0 / csize[parent[f]];
            const double* g = &self.grad.v[static_cast<std::size_t>(parent[f]) * B];
            double* gx = &xn.grad.v[f * B];
            for (std::size_t i = 0; i < B; ++i) gx[i] += w * g[i];
        }
    });
}

// copy cluster value to members: f_fine = P * f_coarse
inline Var unpool(const Var& x, const PoolingMap& map) {
    const Tensor& xv = x->value;
    if (xv.rank() != 3 || xv.dim(0) != static_cast<std::size_t>(map.coarse))
        throw ValidationError("unpool: input node dim " + std::to_string(xv.dim(0)) +
                              " != coarse count " + std::to_string(map.coarse));
    const std::size_t C = xv.dim(1), T = xv.dim(2), B = C * T;
    Tensor out({static_cast<std::size_t>(map.fine), C, T});
    for (int f = 0; f < map.fine; ++f) {
        const double* src = &xv.v[static_cast<std::size_t>(map.parent[f]) * B];
        double* dst = &out.v[f * B];
        for (std::size_t i = 0; i < B; ++i) dst[i] = src[i];
    }
    const auto parent = map.parent;
    return detail::make_op("unpool", std::move(out), {x}, [parent, B](Node& self) {
        Node& xn = *self.parents[0];
        xn.ensure_grad();
        for (std::size_t f = 0; f < parent.size(); ++f) {
            const double* g = &self.grad.v[f * B];
            double* gx = &xn.grad.v[static_cast<std::size_t>(parent[f]) * B];
            for (std::size_t i = 0; i < B; ++i) gx[i] += g[i];
        }
    });
}

// ---- hierarchy serialization ----
// "ECGH" magic, version, level meshes and parent assignments; graphs are
// rebuilt on load.

inline void save_hierarchy(const MeshHierarchy& h, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw RuntimeError("cannot open for write: " + path);
    os.write("ECGH", 4);
    write_u32(os, 1);
    write_u32(os, static_cast<std::uint32_t>(h.num_levels()));
    for (const auto& m : h.meshes) {
        write_u64(os, m.num_vertices());
        write_u64(os, m.num_triangles());
        for (const auto& p : m.vertices) {
            write_f64(os, p.x);
            write_f64(os, p.y);
            write_f64(os, p.z);
        }
        for (const auto& t : m.triangles)
            for (int k = 0; k < 3; ++k) write_u64(os, static_cast<std::uint64_t>(t[k]));
    }
    for (const auto& map : h.maps) {
        write_u64(os, static_cast<std::uint64_t>(map.fine));
        write_u64(os, static_cast<std::uint64_t>(map.coarse));
        for (int p : map.parent) write_u64(os, static_cast<std::uint64_t>(p));
    }
    if (!os) throw RuntimeError("write failed: " + path);
}

inline MeshHierarchy load_hierarchy(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw RuntimeError("cannot open for read: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != "ECGH")
        throw ValidationError(path + ": not a hierarchy file");
    if (read_u32(is) != 1) throw ValidationError(path + ": unsupported hierarchy version");
    const std::uint32_t levels = read_u32(is);
    MeshHierarchy h;
    for (std::uint32_t l = 0; l < levels; ++l) {
        TriMesh m;
        const auto V = read_u64(is), F = read_u64(is);
        m.vertices.resize(V);
        for (auto& p : m.vertices) {
            p.x = read_f64(is);
            p.y = read_f64(is);
            p.z = read_f64(is);
        }
        m.triangles.resize(F);
        for (auto& t : m.triangles)
            for (int k = 0; k < 3; ++k) t[k] = static_cast<int>(read_u64(is));
        validate_mesh(m);
        h.meshes.push_back(std::move(m));
    }
    for (std::uint32_t l = 0; l + 1 < levels; ++l) {
        PoolingMap map;
        map.fine = static_cast<int>(read_u64(is));
        map.coarse = static_cast<int>(read_u64(is));
        map.parent.resize(map.fine);
        map.cluster_size.assign(map.coarse, 0);
        for (auto& p : map.parent) {
            p = static_cast<int>(read_u64(is));
            ++map.cluster_size[p];
        }
        map.validate();
        h.maps.push_back(std::move(map));
    }
    for (const auto& m : h.meshes) h.graphs.push_back(build_graph(m));
    return h;
}

}  // namespace ecgi
