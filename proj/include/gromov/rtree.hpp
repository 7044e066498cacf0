#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gromov/error.hpp"

namespace gromov {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct TreeEdge {
    int a = 0;
    int b = 0;
    double len = 0;
};

/// A point of a metric tree: a vertex, or a position on an edge measured from edge.a.
struct TreePoint {
    int vertex = -1;
    int edge = -1;
    double offset = 0;

    static TreePoint at_vertex(int v) { return TreePoint{v, -1, 0}; }
    static TreePoint on_edge(int e, double t) { return TreePoint{-1, e, t}; }
};

/// Boundary point of a finite tree: a geodesic ray leaving the tree at an anchor vertex.
/// Rays with different ids are distinct boundary points.
struct TreeRay {
    int anchor = 0;
    int id = 0;
};

class RTree {
public:
    RTree() = default;

    int add_vertex();
    int add_edge(int a, int b, double len);
    /// Checks connectivity and acyclicity and builds the ancestor tables.
    void finalize();
    bool finalized() const { return finalized_; }

    int vertex_count() const { return int(adj_.size()); }
    int edge_count() const { return int(edges_.size()); }
    const TreeEdge& edge(int e) const { return edges_[e]; }
    const std::vector<TreeEdge>& edges() const { return edges_; }
    const std::vector<std::pair<int, int>>& neighbors(int v) const { return adj_[v]; }
    double total_length() const;

    double vertex_dist(int u, int v) const;
    int lca(int u, int v) const;
    std::vector<int> vertex_path(int u, int v) const;
    /// Edge joining adjacent vertices u and v, or -1.
    int edge_between(int u, int v) const;

    TreePoint canonical(const TreePoint& p) const;
    void check_point(const TreePoint& p) const;
    double dist(const TreePoint& p, const TreePoint& q) const;
    double gromov(const TreePoint& x, const TreePoint& y, const TreePoint& z) const;
    /// Point at distance t from p on the geodesic [p, q]; t is clamped to [0, d(p,q)].
    TreePoint point_along(const TreePoint& p, const TreePoint& q, double t) const;
    TreePoint triangle_center(const TreePoint& p, const TreePoint& q, const TreePoint& r) const;

    // rays
    double gromov_ray(const TreeRay& xi, const TreePoint& y, const TreePoint& z) const;
    double gromov_rays(const TreeRay& xi, const TreeRay& eta, const TreePoint& z) const;
    double busemann(const TreeRay& xi, const TreePoint& x, const TreePoint& y) const;

private:
    struct Segment {
        int edge;
        double from;
        double to;
        double len;
    };
    std::vector<Segment> segments(const TreePoint& p, const TreePoint& q) const;

    std::vector<TreeEdge> edges_;
    std::vector<std::vector<std::pair<int, int>>> adj_;  // (neighbor, edge)
    bool finalized_ = false;
    std::vector<int> parent_, parent_edge_, level_;
    std::vector<double> depth_;
    std::vector<std::vector<int>> up_;
};

/// Maximum Gromov-inequality defect over the given quadruples of a distance function.
double four_point_defect(double dxy, double dxz, double dxw, double dyz, double dyw, double dzw);

/// Realizes a finite metric as the vertex set of a metric tree (branch points added as needed).
/// vertex_of[i] is the tree vertex of point i. Throws NOT_TREE_METRIC.
struct TreeRealization {
    RTree tree;
    std::vector<int> vertex_of;
};
TreeRealization realize_tree_metric(const std::vector<std::vector<double>>& d, double tol = 1e-9);

// ---------------------------------------------------------------- ultrametric cone

struct UltrametricSpace {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> d;

    int size() const { return int(d.size()); }
};

/// Throws NOT_ULTRAMETRIC.
void validate_ultrametric(const UltrametricSpace& z);

struct ConeTree {
    RTree tree;
    UltrametricSpace space;
    std::vector<double> heights;            // sorted height grid
    std::vector<std::vector<int>> vertex;   // vertex[i][k]: vertex of <z_i, heights[k]>
    int base_index = 0;                     // z0
    TreePoint basepoint;                    // <z0, 1>
    std::vector<TreeRay> iota;              // downward rays
    TreeRay infinity;                       // upward ray

    /// <z_i, r> for any r in [heights.front(), heights.back()].
    TreePoint cone_point(int i, double r) const;
    /// Closed form log((r1^2 v r2^2 v D^2)/(r1 r2)).
    double formula_dist(int i, double r1, int j, double r2) const;
    double hamenstadt_at_infinity(int i, int j) const;
};

ConeTree cone_build(const UltrametricSpace& z, int base_index = 0, const std::vector<double>& extra_heights = {});

// ---------------------------------------------------------------- stapling

/// A staple between trees[v] and trees[w]: the convex hulls of anchors_v and anchors_w
/// are glued by the isometry sending anchors_v[i] to anchors_w[i].
struct Staple {
    int v = 0;
    int w = 0;
    std::vector<TreePoint> anchors_v;
    std::vector<TreePoint> anchors_w;
};

struct StaplePlan {
    std::vector<RTree> trees;
    std::vector<Staple> staples;
};

struct StapledTree {
    RTree tree;
    /// key[v][k]: realized vertex of the k-th key point of trees[v] (its vertices first, then anchors).
    std::vector<std::vector<int>> key_vertex;
    std::vector<std::vector<TreePoint>> key_points;
    /// Distance by graph geodesic plus nearest-point projections.
    double recipe_dist(int v, const TreePoint& x, int w, const TreePoint& y) const;

    StaplePlan plan;
    std::vector<std::vector<int>> staple_index;  // staple_index[v][w] = staple id or -1
    std::vector<std::vector<int>> next_hop;      // graph shortest-path successor
};

/// Hull helpers used by stapling.
bool in_hull(const RTree& t, const std::vector<TreePoint>& anchors, const TreePoint& z, double tol = 1e-12);
TreePoint project_to_hull(const RTree& t, const std::vector<TreePoint>& anchors, const TreePoint& z);
/// Image of y (in the hull of from) under the isometry from[i] -> to[i].
TreePoint apply_staple_map(const RTree& tf, const std::vector<TreePoint>& from, const RTree& tt,
                           const std::vector<TreePoint>& to, const TreePoint& y);

/// Validates the plan (isometric staples, block-graph cycles, 3-cycle consistency).
void validate_staple_plan(const StaplePlan& plan);
StapledTree staple_build(const StaplePlan& plan);

// ---------------------------------------------------------------- counting specs

/// Orbital counting law f(R) = prod_{lambda_n <= R} N_n.
struct CountingSpec {
    std::vector<double> lambda;
    std::vector<int> mult;
    /// Optional infinite tail: lambda continues by tail_step with multiplicity tail_mult.
    double tail_step = 0;
    int tail_mult = 0;

    bool infinite() const { return tail_mult >= 2 && tail_step > 0; }
    int levels_upto(double r) const;
    double lambda_at(int n) const;  // 0-based level
    int mult_at(int n) const;
    double f(double r) const;
    double log_f(double r) const;
};

/// Parses lines "lambda N"; a line "tail step N" adds an infinite tail. Throws DIVISIBILITY_VIOLATION.
CountingSpec parse_counting_spec(const std::string& text);
void validate_counting_spec(const CountingSpec& spec);
/// Builds the thresholds for a target step function given at its jump points (R_k, f(R_k)).
/// Throws DIVISIBILITY_VIOLATION when f(R_k) does not divide f(R_{k+1}).
CountingSpec counting_spec_from_values(const std::vector<double>& r, const std::vector<long long>& f);

}  // namespace gromov
