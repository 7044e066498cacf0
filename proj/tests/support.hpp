#pragma once

#include <random>

#include "doctest.h"
#include "gromov/coarse.hpp"
#include "gromov/models.hpp"
#include "gromov/rtree.hpp"

namespace testing {

using namespace gromov;

inline ModelPoint random_point(std::mt19937_64& rng, Model m, int n, double radius = 3.0) {
    std::normal_distribution<double> g(0, 1);
    std::uniform_real_distribution<double> u(0, radius);
    Vec dir(n);
    for (int i = 0; i < n; ++i) dir[i] = g(rng);
    dir.normalize();
    double r = u(rng);
    Vec h(n + 1);
    h[0] = std::cosh(r);
    h.tail(n) = std::sinh(r) * dir;
    return from_hyperboloid(h, m);
}

inline ModelBoundary random_boundary(std::mt19937_64& rng, Model m, int n) {
    std::normal_distribution<double> g(0, 1);
    Vec v(n + 1);
    v[0] = 1;
    Vec dir(n);
    for (int i = 0; i < n; ++i) dir[i] = g(rng);
    v.tail(n) = dir.normalized();
    return boundary_from_null(v, m);
}

/// Star with the given leg lengths; vertex 0 is the center, leg i ends at vertex i+1.
inline RTree star(const std::vector<double>& legs) {
    RTree t;
    t.add_vertex();
    for (double l : legs) t.add_edge(0, t.add_vertex(), l);
    t.finalize();
    return t;
}

inline RTree random_tree(std::mt19937_64& rng, int n) {
    RTree t;
    t.add_vertex();
    std::uniform_real_distribution<double> len(0.1, 2.0);
    for (int v = 1; v < n; ++v) {
        std::uniform_int_distribution<int> par(0, v - 1);
        int p = par(rng);
        t.add_edge(p, t.add_vertex(), len(rng));
    }
    t.finalize();
    return t;
}

inline TreePoint random_tree_point(std::mt19937_64& rng, const RTree& t) {
    std::uniform_int_distribution<int> e(0, t.edge_count() - 1);
    std::uniform_real_distribution<double> u(0, 1);
    int k = e(rng);
    return TreePoint::on_edge(k, u(rng) * t.edge(k).len);
}

template <class F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::EMPTY;
}

}  // namespace testing
