#include "gromov/rtree.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

namespace gromov {

int RTree::add_vertex() {
    finalized_ = false;
    adj_.emplace_back();
    return int(adj_.size()) - 1;
}

int RTree::add_edge(int a, int b, double len) {
    if (a < 0 || b < 0 || a >= vertex_count() || b >= vertex_count() || a == b)
        throw Error(ErrorCode::NOT_TREE_METRIC, "edge endpoints invalid");
    if (!(len > 0) || !std::isfinite(len)) throw Error(ErrorCode::NOT_TREE_METRIC, "edge length must be positive");
    finalized_ = false;
    edges_.push_back({a, b, len});
    int e = int(edges_.size()) - 1;
    adj_[a].push_back({b, e});
    adj_[b].push_back({a, e});
    return e;
}

double RTree::total_length() const {
    double s = 0;
    for (const auto& e : edges_) s += e.len;
    return s;
}

void RTree::finalize() {
    int n = vertex_count();
    if (n == 0) throw Error(ErrorCode::NOT_TREE_METRIC, "empty tree");
    if (edge_count() != n - 1) throw Error(ErrorCode::NOT_TREE_METRIC, "edge count must be vertex count minus one");
    parent_.assign(n, -1);
    parent_edge_.assign(n, -1);
    level_.assign(n, -1);
    depth_.assign(n, 0);
    std::vector<int> order{0};
    level_[0] = 0;
    for (size_t i = 0; i < order.size(); ++i) {
        int u = order[i];
        for (auto [v, e] : adj_[u]) {
            if (level_[v] >= 0) continue;
            level_[v] = level_[u] + 1;
            parent_[v] = u;
            parent_edge_[v] = e;
            depth_[v] = depth_[u] + edges_[e].len;
            order.push_back(v);
        }
    }
    if (int(order.size()) != n) throw Error(ErrorCode::NOT_TREE_METRIC, "graph is not connected");
    int lg = 1;
    while ((1 << lg) < n) ++lg;
    up_.assign(lg + 1, std::vector<int>(n, 0));
    for (int v = 0; v < n; ++v) up_[0][v] = parent_[v] < 0 ? v : parent_[v];
    for (int k = 1; k <= lg; ++k)
        for (int v = 0; v < n; ++v) up_[k][v] = up_[k - 1][up_[k - 1][v]];
    finalized_ = true;
}

int RTree::lca(int u, int v) const {
    if (!finalized_) throw Error(ErrorCode::NOT_TREE_METRIC, "tree not finalized");
    if (level_[u] < level_[v]) std::swap(u, v);
    int diff = level_[u] - level_[v];
    for (int k = 0; diff; ++k, diff >>= 1)
        if (diff & 1) u = up_[k][u];
    if (u == v) return u;
    for (int k = int(up_.size()) - 1; k >= 0; --k)
        if (up_[k][u] != up_[k][v]) {
            u = up_[k][u];
            v = up_[k][v];
        }
    return parent_[u];
}

double RTree::vertex_dist(int u, int v) const {
    int w = lca(u, v);
    return (depth_[u] - depth_[w]) + (depth_[v] - depth_[w]);
}

std::vector<int> RTree::vertex_path(int u, int v) const {
    int w = lca(u, v);
    std::vector<int> left, right;
    for (int x = u; x != w; x = parent_[x]) left.push_back(x);
    left.push_back(w);
    for (int x = v; x != w; x = parent_[x]) right.push_back(x);
    left.insert(left.end(), right.rbegin(), right.rend());
    return left;
}

int RTree::edge_between(int u, int v) const {
    if (parent_[u] == v) return parent_edge_[u];
    if (parent_[v] == u) return parent_edge_[v];
    return -1;
}

void RTree::check_point(const TreePoint& p) const {
    if (p.vertex >= 0) {
        if (p.vertex >= vertex_count()) throw Error(ErrorCode::SPACE_MISMATCH, "vertex out of range");
        return;
    }
    if (p.edge < 0 || p.edge >= edge_count()) throw Error(ErrorCode::SPACE_MISMATCH, "edge out of range");
    if (p.offset < -1e-12 || p.offset > edges_[p.edge].len + 1e-12)
        throw Error(ErrorCode::SPACE_MISMATCH, "edge offset out of range");
}

TreePoint RTree::canonical(const TreePoint& p) const {
    check_point(p);
    if (p.vertex >= 0) return p;
    const auto& e = edges_[p.edge];
    if (p.offset <= 0) return TreePoint::at_vertex(e.a);
    if (p.offset >= e.len) return TreePoint::at_vertex(e.b);
    return p;
}

std::vector<RTree::Segment> RTree::segments(const TreePoint& p0, const TreePoint& q0) const {
    TreePoint p = canonical(p0), q = canonical(q0);
    std::vector<Segment> out;
    if (p.vertex < 0 && q.vertex < 0 && p.edge == q.edge) {
        if (p.offset != q.offset) out.push_back({p.edge, p.offset, q.offset, std::abs(q.offset - p.offset)});
        return out;
    }
    struct Exit {
        int v;
        double cost;
    };
    auto exits = [&](const TreePoint& x) {
        std::vector<Exit> r;
        if (x.vertex >= 0) {
            r.push_back({x.vertex, 0});
        } else {
            const auto& e = edges_[x.edge];
            r.push_back({e.a, x.offset});
            r.push_back({e.b, e.len - x.offset});
        }
        return r;
    };
    auto ep = exits(p), eq = exits(q);
    double best = kInf;
    Exit bx{}, by{};
    for (auto x : ep)
        for (auto y : eq) {
            double c = x.cost + vertex_dist(x.v, y.v) + y.cost;
            if (c < best) {
                best = c;
                bx = x;
                by = y;
            }
        }
    if (p.vertex < 0 && bx.cost > 0) {
        const auto& e = edges_[p.edge];
        out.push_back({p.edge, p.offset, bx.v == e.a ? 0.0 : e.len, bx.cost});
    }
    auto path = vertex_path(bx.v, by.v);
    for (size_t i = 0; i + 1 < path.size(); ++i) {
        int e = edge_between(path[i], path[i + 1]);
        const auto& ed = edges_[e];
        bool forward = ed.a == path[i];
        out.push_back({e, forward ? 0.0 : ed.len, forward ? ed.len : 0.0, ed.len});
    }
    if (q.vertex < 0 && by.cost > 0) {
        const auto& e = edges_[q.edge];
        out.push_back({q.edge, by.v == e.a ? 0.0 : e.len, q.offset, by.cost});
    }
    return out;
}

double RTree::dist(const TreePoint& p0, const TreePoint& q0) const {
    TreePoint p = canonical(p0), q = canonical(q0);
    if (p.vertex >= 0 && q.vertex >= 0) return vertex_dist(p.vertex, q.vertex);
    if (p.vertex < 0 && q.vertex < 0 && p.edge == q.edge) return std::abs(p.offset - q.offset);
    auto opts = [&](const TreePoint& x, int* v, double* c) {
        if (x.vertex >= 0) {
            v[0] = v[1] = x.vertex;
            c[0] = c[1] = 0;
        } else {
            const auto& e = edges_[x.edge];
            v[0] = e.a;
            c[0] = x.offset;
            v[1] = e.b;
            c[1] = e.len - x.offset;
        }
    };
    int vp[2], vq[2];
    double cp[2], cq[2];
    opts(p, vp, cp);
    opts(q, vq, cq);
    double best = kInf;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) best = std::min(best, cp[i] + vertex_dist(vp[i], vq[j]) + cq[j]);
    return best;
}

double RTree::gromov(const TreePoint& x, const TreePoint& y, const TreePoint& z) const {
    return 0.5 * (dist(z, x) + dist(z, y) - dist(x, y));
}

TreePoint RTree::point_along(const TreePoint& p, const TreePoint& q, double t) const {
    auto segs = segments(p, q);
    if (t <= 0 || segs.empty()) return canonical(p);
    double acc = 0;
    for (const auto& s : segs) {
        if (t <= acc + s.len) {
            double f = (t - acc) / s.len;
            return canonical(TreePoint::on_edge(s.edge, s.from + (s.to - s.from) * f));
        }
        acc += s.len;
    }
    return canonical(q);
}

TreePoint RTree::triangle_center(const TreePoint& p, const TreePoint& q, const TreePoint& r) const {
    return point_along(p, q, gromov(q, r, p));
}

double RTree::gromov_ray(const TreeRay& xi, const TreePoint& y, const TreePoint& z) const {
    return gromov(TreePoint::at_vertex(xi.anchor), y, z);
}

double RTree::gromov_rays(const TreeRay& xi, const TreeRay& eta, const TreePoint& z) const {
    if (xi.anchor == eta.anchor) {
        if (xi.id == eta.id) return kInf;
        return dist(z, TreePoint::at_vertex(xi.anchor));
    }
    return gromov(TreePoint::at_vertex(xi.anchor), TreePoint::at_vertex(eta.anchor), z);
}

double RTree::busemann(const TreeRay& xi, const TreePoint& x, const TreePoint& y) const {
    TreePoint a = TreePoint::at_vertex(xi.anchor);
    return dist(x, a) - dist(y, a);
}

double four_point_defect(double dxy, double dxz, double dxw, double dyz, double dyw, double dzw) {
    // Gromov products based at w
    double pxy = 0.5 * (dxw + dyw - dxy);
    double pyz = 0.5 * (dyw + dzw - dyz);
    double pxz = 0.5 * (dxw + dzw - dxz);
    double d1 = std::min(pxy, pyz) - pxz;
    double d2 = std::min(pxy, pxz) - pyz;
    double d3 = std::min(pxz, pyz) - pxy;
    return std::max({0.0, d1, d2, d3});
}

// ---------------------------------------------------------------- realization

namespace {

struct Builder {
    std::vector<std::vector<std::pair<int, double>>> adj;

    int add_vertex() {
        adj.emplace_back();
        return int(adj.size()) - 1;
    }
    void add_edge(int a, int b, double len) {
        adj[a].push_back({b, len});
        adj[b].push_back({a, len});
    }
    void remove_edge(int a, int b) {
        auto rm = [&](int x, int y) {
            auto& v = adj[x];
            v.erase(std::find_if(v.begin(), v.end(), [&](auto& p) { return p.first == y; }));
        };
        rm(a, b);
        rm(b, a);
    }
    double edge_len(int a, int b) const {
        for (auto& p : adj[a])
            if (p.first == b) return p.second;
        return kInf;
    }
    void bfs(int src, std::vector<int>& par, std::vector<double>& dist) const {
        int n = int(adj.size());
        par.assign(n, -2);
        dist.assign(n, 0);
        par[src] = -1;
        std::vector<int> q{src};
        for (size_t i = 0; i < q.size(); ++i) {
            int u = q[i];
            for (auto [v, l] : adj[u])
                if (par[v] == -2) {
                    par[v] = u;
                    dist[v] = dist[u] + l;
                    q.push_back(v);
                }
        }
    }
};

}  // namespace

TreeRealization realize_tree_metric(const std::vector<std::vector<double>>& d, double tol) {
    int n = int(d.size());
    if (n == 0) throw Error(ErrorCode::NOT_TREE_METRIC, "no points");
    for (int i = 0; i < n; ++i) {
        if (int(d[i].size()) != n) throw Error(ErrorCode::NOT_TREE_METRIC, "distance matrix not square");
        for (int j = 0; j < n; ++j)
            if (!(d[i][j] >= 0) || std::abs(d[i][j] - d[j][i]) > tol)
                throw Error(ErrorCode::NOT_TREE_METRIC, "distance matrix not symmetric and nonnegative");
    }
    Builder b;
    std::vector<int> vof(n, -1);
    vof[0] = b.add_vertex();
    std::vector<int> par;
    std::vector<double> dd;
    for (int i = 1; i < n; ++i) {
        int best = 0;
        double g = -kInf;
        for (int j = 0; j < i; ++j) {
            double gj = 0.5 * (d[0][i] + d[0][j] - d[i][j]);
            if (gj > g + 1e-15) {
                g = gj;
                best = j;
            }
        }
        g = std::clamp(g, 0.0, d[0][best]);
        b.bfs(vof[0], par, dd);
        std::vector<int> path;
        for (int x = vof[best]; x != -1; x = par[x]) path.push_back(x);
        std::reverse(path.begin(), path.end());
        int attach = path.back();
        for (size_t k = 0; k < path.size(); ++k) {
            int u = path[k];
            if (std::abs(dd[u] - g) <= tol) {
                attach = u;
                break;
            }
            if (k + 1 < path.size() && dd[path[k + 1]] > g + tol) {
                int v = path[k + 1];
                int w = b.add_vertex();
                b.remove_edge(u, v);
                b.add_edge(u, w, g - dd[u]);
                b.add_edge(w, v, dd[v] - g);
                attach = w;
                break;
            }
        }
        double pend = d[0][i] - g;
        if (pend <= tol) {
            vof[i] = attach;
        } else {
            int v = b.add_vertex();
            b.add_edge(attach, v, pend);
            vof[i] = v;
        }
    }
    TreeRealization out;
    for (size_t v = 0; v < b.adj.size(); ++v) out.tree.add_vertex();
    for (size_t u = 0; u < b.adj.size(); ++u)
        for (auto [v, l] : b.adj[u])
            if (int(u) < v) out.tree.add_edge(int(u), v, l);
    out.tree.finalize();
    out.vertex_of = vof;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double got = out.tree.vertex_dist(vof[i], vof[j]);
            if (std::abs(got - d[i][j]) > tol * std::max(1.0, d[i][j]) * 10)
                throw Error(ErrorCode::NOT_TREE_METRIC, "metric is not realized by a tree (pair " + std::to_string(i) +
                                                            "," + std::to_string(j) + ")");
        }
    return out;
}

// ---------------------------------------------------------------- cone

void validate_ultrametric(const UltrametricSpace& z) {
    int n = z.size();
    if (n == 0) throw Error(ErrorCode::NOT_ULTRAMETRIC, "empty space");
    for (int i = 0; i < n; ++i) {
        if (int(z.d[i].size()) != n) throw Error(ErrorCode::NOT_ULTRAMETRIC, "matrix not square");
        for (int j = 0; j < n; ++j) {
            if (z.d[i][j] != z.d[j][i]) throw Error(ErrorCode::NOT_ULTRAMETRIC, "matrix not symmetric");
            if ((i == j) != (z.d[i][j] == 0) || z.d[i][j] < 0)
                throw Error(ErrorCode::NOT_ULTRAMETRIC, "D(x,y) = 0 must hold exactly when x = y");
        }
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                if (z.d[i][k] > std::max(z.d[i][j], z.d[j][k]))
                    throw Error(ErrorCode::NOT_ULTRAMETRIC, "strong triangle inequality fails at (" + std::to_string(i) +
                                                                "," + std::to_string(j) + "," + std::to_string(k) + ")");
}

ConeTree cone_build(const UltrametricSpace& z, int base_index, const std::vector<double>& extra_heights) {
    validate_ultrametric(z);
    int n = z.size();
    if (base_index < 0 || base_index >= n) throw Error(ErrorCode::NOT_ULTRAMETRIC, "base index out of range");
    double dmin = kInf, dmax = 0;
    std::vector<double> hs{1.0};
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            dmin = std::min(dmin, z.d[i][j]);
            dmax = std::max(dmax, z.d[i][j]);
            hs.push_back(z.d[i][j]);
        }
    if (n == 1) dmin = dmax = 1;
    double lo = std::min(dmin, 1.0), hi = std::max(dmax, 1.0);
    for (double h : extra_heights) {
        if (!(h > 0)) throw Error(ErrorCode::NOT_ULTRAMETRIC, "heights must be positive");
        hs.push_back(h);
        lo = std::min(lo, h);
        hi = std::max(hi, h);
    }
    hs.push_back(lo / M_E);
    hs.push_back(hi * M_E);
    std::sort(hs.begin(), hs.end());
    std::vector<double> grid;
    for (double h : hs)
        if (grid.empty() || h > grid.back() * (1 + 1e-13)) grid.push_back(h);

    ConeTree c;
    c.space = z;
    c.heights = grid;
    c.base_index = base_index;
    int m = int(grid.size());
    c.vertex.assign(n, std::vector<int>(m, -1));
    for (int k = 0; k < m; ++k) {
        for (int i = 0; i < n; ++i) {
            int cls = i;
            for (int j = 0; j < i; ++j)
                if (z.d[i][j] <= grid[k]) {
                    cls = j;
                    break;
                }
            c.vertex[i][k] = cls == i ? c.tree.add_vertex() : c.vertex[cls][k];
        }
    }
    for (int k = 0; k + 1 < m; ++k) {
        std::vector<int> done;
        for (int i = 0; i < n; ++i) {
            int v = c.vertex[i][k];
            if (std::find(done.begin(), done.end(), v) != done.end()) continue;
            done.push_back(v);
            c.tree.add_edge(v, c.vertex[i][k + 1], std::log(grid[k + 1] / grid[k]));
        }
    }
    c.tree.finalize();
    c.basepoint = c.cone_point(base_index, 1.0);
    for (int i = 0; i < n; ++i) c.iota.push_back(TreeRay{c.vertex[i][0], i});
    c.infinity = TreeRay{c.vertex[0][m - 1], -1};
    return c;
}

TreePoint ConeTree::cone_point(int i, double r) const {
    int m = int(heights.size());
    if (r < heights.front() * (1 - 1e-12) || r > heights.back() * (1 + 1e-12))
        throw Error(ErrorCode::OUT_OF_RANGE, "height outside the realized cone");
    int k = int(std::upper_bound(heights.begin(), heights.end(), r) - heights.begin()) - 1;
    k = std::clamp(k, 0, m - 1);
    if (std::abs(r - heights[k]) <= 1e-13 * heights[k] || k == m - 1) return TreePoint::at_vertex(vertex[i][k]);
    int e = tree.edge_between(vertex[i][k], vertex[i][k + 1]);
    const auto& ed = tree.edge(e);
    double off = std::log(r / heights[k]);
    if (ed.a != vertex[i][k]) off = ed.len - off;
    return tree.canonical(TreePoint::on_edge(e, off));
}

double ConeTree::formula_dist(int i, double r1, int j, double r2) const {
    double dd = space.d[i][j];
    double top = std::max({r1 * r1, r2 * r2, dd * dd});
    return std::log(top / (r1 * r2));
}

double ConeTree::hamenstadt_at_infinity(int i, int j) const {
    if (i == j) return 0;
    double xy = tree.gromov_rays(iota[i], iota[j], basepoint);
    double xi = tree.gromov_rays(iota[i], infinity, basepoint);
    double yi = tree.gromov_rays(iota[j], infinity, basepoint);
    return std::exp(-(xy - xi - yi));
}

// ---------------------------------------------------------------- counting specs

int CountingSpec::levels_upto(double r) const {
    int k = 0;
    while (k < int(lambda.size()) && lambda[k] <= r) ++k;
    if (k == int(lambda.size()) && infinite()) {
        double last = lambda.empty() ? 0 : lambda.back();
        if (r >= last + tail_step) k += int(std::floor((r - last) / tail_step + 1e-12));
    }
    return k;
}

double CountingSpec::lambda_at(int n) const {
    if (n < int(lambda.size())) return lambda[n];
    double last = lambda.empty() ? 0 : lambda.back();
    return last + tail_step * (n - int(lambda.size()) + 1);
}

int CountingSpec::mult_at(int n) const { return n < int(mult.size()) ? mult[n] : tail_mult; }

double CountingSpec::log_f(double r) const {
    int k = levels_upto(r);
    double s = 0;
    for (int n = 0; n < k; ++n) s += std::log(double(mult_at(n)));
    return s;
}

double CountingSpec::f(double r) const { return std::exp(log_f(r)); }

void validate_counting_spec(const CountingSpec& spec) {
    if (spec.lambda.size() != spec.mult.size()) throw Error(ErrorCode::DIVISIBILITY_VIOLATION, "lambda/N length mismatch");
    for (size_t i = 0; i < spec.lambda.size(); ++i) {
        if (!(spec.lambda[i] > 0)) throw Error(ErrorCode::DIVISIBILITY_VIOLATION, "thresholds must be positive");
        if (i > 0 && !(spec.lambda[i] > spec.lambda[i - 1]))
            throw Error(ErrorCode::DIVISIBILITY_VIOLATION, "thresholds must be increasing");
        if (spec.mult[i] < 2) throw Error(ErrorCode::DIVISIBILITY_VIOLATION, "multiplicities must be at least 2");
    }
    if (spec.tail_mult != 0 && (spec.tail_mult < 2 || !(spec.tail_step > 0)))
        throw Error(ErrorCode::DIVISIBILITY_VIOLATION, "tail needs step > 0 and multiplicity >= 2");
}

CountingSpec parse_counting_spec(const std::string& text) {
    CountingSpec s;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        if (first == "tail") {
            if (!(ls >> s.tail_step >> s.tail_mult))
                throw Error(ErrorCode::DIVISIBILITY_VIOLATION, "bad tail line " + std::to_string(lineno));
            continue;
        }
        double lam;
        int n;
        try {
            lam = std::stod(first);
        } catch (...) {
            throw Error(ErrorCode::DIVISIBILITY_VIOLATION, "bad line " + std::to_string(lineno));
        }
        if (!(ls >> n)) throw Error(ErrorCode::DIVISIBILITY_VIOLATION, "bad line " + std::to_string(lineno));
        s.lambda.push_back(lam);
        s.mult.push_back(n);
    }
    validate_counting_spec(s);
    return s;
}

CountingSpec counting_spec_from_values(const std::vector<double>& r, const std::vector<long long>& f) {
    if (r.size() != f.size() || r.empty()) throw Error(ErrorCode::DIVISIBILITY_VIOLATION, "need matching jump lists");
    CountingSpec s;
    long long prev = 1;
    for (size_t i = 0; i < r.size(); ++i) {
        if (f[i] < prev || f[i] % prev != 0)
            throw Error(ErrorCode::DIVISIBILITY_VIOLATION,
                        "f(" + std::to_string(r[i]) + ") = " + std::to_string(f[i]) + " is not a multiple of " + std::to_string(prev));
        long long ratio = f[i] / prev;
        if (ratio >= 2) {
            s.lambda.push_back(r[i]);
            s.mult.push_back(int(ratio));
        }
        prev = f[i];
    }
    validate_counting_spec(s);
    return s;
}

}  // namespace gromov
