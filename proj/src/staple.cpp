#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "gromov/rtree.hpp"

namespace gromov {

TreePoint project_to_hull(const RTree& t, const std::vector<TreePoint>& anchors, const TreePoint& z) {
    const TreePoint& a0 = anchors.front();
    double dz = t.dist(a0, z);
    double g = 0;
    for (const auto& q : anchors) g = std::max(g, t.gromov(z, q, a0));
    return t.point_along(a0, z, std::min(g, dz));
}

bool in_hull(const RTree& t, const std::vector<TreePoint>& anchors, const TreePoint& z, double tol) {
    return t.dist(z, project_to_hull(t, anchors, z)) <= tol;
}

TreePoint apply_staple_map(const RTree& tf, const std::vector<TreePoint>& from, const RTree& tt,
                           const std::vector<TreePoint>& to, const TreePoint& y) {
    const TreePoint& a0 = from.front();
    double dy = tf.dist(a0, y);
    for (size_t q = 0; q < from.size(); ++q) {
        if (tf.gromov(y, from[q], a0) >= dy - 1e-12) return tt.point_along(to.front(), to[q], dy);
    }
    throw Error(ErrorCode::CONSISTENCY_VIOLATION, "point outside the staple domain");
}

namespace {

struct Oriented {
    const std::vector<TreePoint>* from;
    const std::vector<TreePoint>* to;
};

std::vector<std::vector<int>> staple_matrix(const StaplePlan& plan) {
    int n = int(plan.trees.size());
    std::vector<std::vector<int>> idx(n, std::vector<int>(n, -1));
    for (size_t s = 0; s < plan.staples.size(); ++s) {
        const auto& st = plan.staples[s];
        if (st.v < 0 || st.w < 0 || st.v >= n || st.w >= n || st.v == st.w)
            throw Error(ErrorCode::CONSISTENCY_VIOLATION, "staple " + std::to_string(s) + " has bad endpoints");
        if (idx[st.v][st.w] >= 0)
            throw Error(ErrorCode::CONSISTENCY_VIOLATION, "duplicate staple between " + std::to_string(st.v) + " and " +
                                                              std::to_string(st.w));
        idx[st.v][st.w] = idx[st.w][st.v] = int(s);
    }
    return idx;
}

Oriented orient(const StaplePlan& plan, const std::vector<std::vector<int>>& idx, int v, int w) {
    const auto& st = plan.staples[idx[v][w]];
    if (st.v == v) return {&st.anchors_v, &st.anchors_w};
    return {&st.anchors_w, &st.anchors_v};
}

// Biconnected components by Tarjan's edge-stack algorithm; every block must be complete.
void check_block_graph(const std::vector<std::vector<int>>& adj) {
    int n = int(adj.size());
    std::vector<int> disc(n, -1), low(n, 0);
    std::vector<std::pair<int, int>> stack;
    int timer = 0;
    std::function<void(int, int)> dfs = [&](int u, int parent) {
        disc[u] = low[u] = timer++;
        for (int v : adj[u]) {
            if (v == parent) continue;
            if (disc[v] < 0) {
                stack.push_back({u, v});
                dfs(v, u);
                low[u] = std::min(low[u], low[v]);
                if (low[v] >= disc[u]) {
                    std::set<int> verts;
                    size_t edges = 0;
                    while (true) {
                        auto e = stack.back();
                        stack.pop_back();
                        verts.insert(e.first);
                        verts.insert(e.second);
                        ++edges;
                        if (e.first == u && e.second == v) break;
                    }
                    size_t k = verts.size();
                    if (edges != k * (k - 1) / 2)
                        throw Error(ErrorCode::CYCLE_NOT_CONTRACTIBLE,
                                    "a cycle through vertex " + std::to_string(*verts.begin()) + " does not span a complete subgraph");
                }
            } else if (disc[v] < disc[u]) {
                stack.push_back({u, v});
                low[u] = std::min(low[u], disc[v]);
            }
        }
    };
    for (int s = 0; s < n; ++s)
        if (disc[s] < 0) dfs(s, -1);
}

}  // namespace

void validate_staple_plan(const StaplePlan& plan) {
    int n = int(plan.trees.size());
    if (n == 0) throw Error(ErrorCode::CONSISTENCY_VIOLATION, "plan has no trees");
    for (const auto& t : plan.trees)
        if (!t.finalized()) throw Error(ErrorCode::CONSISTENCY_VIOLATION, "plan tree not finalized");
    auto idx = staple_matrix(plan);
    for (size_t s = 0; s < plan.staples.size(); ++s) {
        const auto& st = plan.staples[s];
        if (st.anchors_v.empty() || st.anchors_v.size() != st.anchors_w.size())
            throw Error(ErrorCode::CONSISTENCY_VIOLATION, "staple " + std::to_string(s) + " anchor lists differ");
        const auto& tv = plan.trees[st.v];
        const auto& tw = plan.trees[st.w];
        for (auto& p : st.anchors_v) tv.check_point(p);
        for (auto& p : st.anchors_w) tw.check_point(p);
        for (size_t i = 0; i < st.anchors_v.size(); ++i)
            for (size_t j = i + 1; j < st.anchors_v.size(); ++j) {
                double a = tv.dist(st.anchors_v[i], st.anchors_v[j]);
                double b = tw.dist(st.anchors_w[i], st.anchors_w[j]);
                if (std::abs(a - b) > 1e-9)
                    throw Error(ErrorCode::CONSISTENCY_VIOLATION, "staple " + std::to_string(s) + " is not an isometry");
            }
    }
    std::vector<std::vector<int>> adj(n);
    for (int v = 0; v < n; ++v)
        for (int w = 0; w < n; ++w)
            if (idx[v][w] >= 0) adj[v].push_back(w);
    {
        std::vector<int> seen(n, 0), q{0};
        seen[0] = 1;
        for (size_t i = 0; i < q.size(); ++i)
            for (int w : adj[q[i]])
                if (!seen[w]) {
                    seen[w] = 1;
                    q.push_back(w);
                }
        if (int(q.size()) != n) throw Error(ErrorCode::CONSISTENCY_VIOLATION, "staple graph is disconnected");
    }
    check_block_graph(adj);

    for (int u = 0; u < n; ++u)
        for (int v : adj[u])
            for (int w : adj[u]) {
                if (v >= w || idx[v][w] < 0) continue;
                const RTree& tu = plan.trees[u];
                auto uv = orient(plan, idx, u, v);
                auto uw = orient(plan, idx, u, w);
                auto wv = orient(plan, idx, w, v);
                std::vector<TreePoint> cand;
                for (auto& a : *uv.from) cand.push_back(project_to_hull(tu, *uw.from, a));
                for (auto& a : *uw.from) cand.push_back(project_to_hull(tu, *uv.from, a));
                std::string cyc = "(" + std::to_string(u) + "," + std::to_string(v) + "," + std::to_string(w) + ")";
                bool any = false;
                for (auto& z : cand) {
                    if (!in_hull(tu, *uv.from, z, 1e-12) || !in_hull(tu, *uw.from, z, 1e-12)) continue;
                    any = true;
                    TreePoint zw = apply_staple_map(tu, *uw.from, plan.trees[w], *uw.to, z);
                    if (!in_hull(plan.trees[w], *wv.from, zw, 1e-9))
                        throw Error(ErrorCode::CONSISTENCY_VIOLATION, "3-cycle " + cyc + ": image of a shared point leaves the staple set");
                    TreePoint a = apply_staple_map(plan.trees[w], *wv.from, plan.trees[v], *wv.to, zw);
                    TreePoint b = apply_staple_map(tu, *uv.from, plan.trees[v], *uv.to, z);
                    if (plan.trees[v].dist(a, b) > 1e-9)
                        throw Error(ErrorCode::CONSISTENCY_VIOLATION, "3-cycle " + cyc + ": composed staple maps disagree at a shared point");
                }
                if (!any) throw Error(ErrorCode::CONSISTENCY_VIOLATION, "3-cycle " + cyc + ": staple sets do not meet");
            }
}

double StapledTree::recipe_dist(int v, const TreePoint& x, int w, const TreePoint& y) const {
    int cur = v;
    TreePoint z = x;
    double total = 0;
    while (cur != w) {
        int nxt = next_hop[cur][w];
        const auto& st = plan.staples[staple_index[cur][nxt]];
        const auto& from = st.v == cur ? st.anchors_v : st.anchors_w;
        const auto& to = st.v == cur ? st.anchors_w : st.anchors_v;
        const RTree& tc = plan.trees[cur];
        TreePoint p = project_to_hull(tc, from, z);
        total += tc.dist(z, p);
        z = apply_staple_map(tc, from, plan.trees[nxt], to, p);
        cur = nxt;
    }
    return total + plan.trees[w].dist(z, y);
}

StapledTree staple_build(const StaplePlan& plan) {
    validate_staple_plan(plan);
    StapledTree out;
    out.plan = plan;
    int n = int(plan.trees.size());
    out.staple_index = staple_matrix(plan);
    out.next_hop.assign(n, std::vector<int>(n, -1));
    for (int w = 0; w < n; ++w) {
        // BFS from the target: next_hop[v][w] is the BFS parent of v
        std::vector<int> par(n, -2), q{w};
        par[w] = -1;
        for (size_t i = 0; i < q.size(); ++i) {
            int u = q[i];
            for (int x = 0; x < n; ++x)
                if (out.staple_index[u][x] >= 0 && par[x] == -2) {
                    par[x] = u;
                    q.push_back(x);
                }
        }
        for (int v = 0; v < n; ++v) out.next_hop[v][w] = v == w ? v : par[v];
    }
    out.key_points.resize(n);
    for (int v = 0; v < n; ++v)
        for (int k = 0; k < plan.trees[v].vertex_count(); ++k) out.key_points[v].push_back(TreePoint::at_vertex(k));
    for (const auto& st : plan.staples) {
        for (auto& p : st.anchors_v) out.key_points[st.v].push_back(plan.trees[st.v].canonical(p));
        for (auto& p : st.anchors_w) out.key_points[st.w].push_back(plan.trees[st.w].canonical(p));
    }
    std::vector<std::pair<int, int>> flat;
    for (int v = 0; v < n; ++v)
        for (size_t k = 0; k < out.key_points[v].size(); ++k) flat.push_back({v, int(k)});
    int m = int(flat.size());
    std::vector<std::vector<double>> d(m, std::vector<double>(m, 0));
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            auto [v, a] = flat[i];
            auto [w, b] = flat[j];
            d[i][j] = d[j][i] = out.recipe_dist(v, out.key_points[v][a], w, out.key_points[w][b]);
        }
    auto real = realize_tree_metric(d);
    out.tree = std::move(real.tree);
    out.key_vertex.resize(n);
    for (int i = 0; i < m; ++i) out.key_vertex[flat[i].first].push_back(real.vertex_of[i]);
    return out;
}

}  // namespace gromov
