#include <cmath>

#include "support.hpp"

using namespace gromov;

namespace {

Vec vec(std::initializer_list<double> xs) {
    Vec v(xs.size());
    int i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

}  // namespace

TEST_CASE("gromov products on a tripod") {
    RTree t = testing::star({2, 3, 4});
    auto ctx = tree_context(t, TreePoint::at_vertex(0));
    TreePoint p = TreePoint::at_vertex(1), q = TreePoint::at_vertex(2), r = TreePoint::at_vertex(3);
    CHECK(gromov_product(ctx, q, r, p) == doctest::Approx(2).epsilon(1e-15));
    CHECK(gromov_product(ctx, q, q, p) == doctest::Approx(5));
    TreeRay a{2, 0}, b{3, 0};
    CHECK(visual_dist(ctx, a, b) == doctest::Approx(1.0));
    CHECK(std::isinf(gromov_product(ctx, a, a, p)));
    CHECK(visual_dist(ctx, a, a) == 0.0);
    CHECK(visual_dist(ctx, q, q) == doctest::Approx(std::exp(-3.0)));
}

TEST_CASE("ball boundary gromov product") {
    auto ctx = model_context(Model::Ball, 3);
    auto xi = make_boundary(Model::Ball, vec({1, 0, 0})), eta = make_boundary(Model::Ball, vec({-1, 0, 0}));
    CHECK(std::abs(gromov_product(ctx, xi, eta, ctx.o)) < 1e-12);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 100; ++i) {
        auto a = testing::random_boundary(rng, Model::Ball, 3), b = testing::random_boundary(rng, Model::Ball, 3);
        CHECK(visual_dist(ctx, a, b) == doctest::Approx(0.5 * (a.data - b.data).norm()).epsilon(1e-10));
    }
    auto x = make_point(Model::Ball, vec({0.5, 0.2, 0}));
    CHECK(visual_dist(ctx, x, x) == doctest::Approx(std::exp(-dist(ctx.o, x))));
}

TEST_CASE("hamenstadt distance") {
    auto ctx = model_context(Model::HalfSpace, 3);
    auto inf = halfspace_infinity(3);
    auto p = make_boundary(Model::HalfSpace, vec({0.3, -0.2})), q = make_boundary(Model::HalfSpace, vec({-1.0, 0.7}));
    CHECK(hamenstadt_dist(ctx, inf, p, q) == doctest::Approx((p.data - q.data).norm()).epsilon(1e-10));
    auto x = make_point(Model::HalfSpace, vec({0.5, 1, 1}));
    CHECK(hamenstadt_dist(ctx, inf, ctx.o, x) == doctest::Approx(std::exp(gromov_product(ctx, x, inf, ctx.o))).epsilon(1e-10));
    // a similarity with g'(inf) = 1/2 scales D_inf by 2
    auto s = poincare_extension(make_similarity(2, Mat::Identity(2, 2), vec({0.1, 0.4})));
    double before = hamenstadt_dist(ctx, inf, p, q);
    double after = hamenstadt_dist(ctx, inf, s.lorentz.apply(p), s.lorentz.apply(q));
    CHECK(after == doctest::Approx(2 * before).epsilon(1e-10));
    CHECK(testing::code_of([&] { hamenstadt_dist(ctx, inf, inf, p); }) == ErrorCode::EQUALS_XI);
}

TEST_CASE("shadows") {
    auto ctx = model_context(Model::Ball, 2);
    auto x = make_point(Model::Ball, vec({0.5, 0}));
    CHECK(in_shadow(ctx, Shadow<ModelPoint>{ctx.o, x, 0}, make_boundary(Model::Ball, vec({1, 0}))));
    CHECK(!in_shadow(ctx, Shadow<ModelPoint>{ctx.o, x, 0}, make_boundary(Model::Ball, vec({-1, 0}))));

    RTree t = testing::star({1, 1, 1});
    auto tc = tree_context(t, TreePoint::at_vertex(1));
    Shadow<TreePoint> s{TreePoint::at_vertex(1), TreePoint::at_vertex(0), 0};
    CHECK(in_shadow(tc, s, TreeRay{2, 0}));
    CHECK(in_shadow(tc, s, TreeRay{3, 0}));
    CHECK(!in_shadow(tc, s, TreeRay{1, 5}));
}

TEST_CASE("derivatives") {
    auto ctx = model_context(Model::HalfSpace, 3);
    auto inf = halfspace_infinity(3);
    auto s = poincare_extension(make_similarity(3, Mat::Identity(2, 2), Vec::Zero(2)));
    CHECK(dynamical_derivative(ctx, s.lorentz, inf) == doctest::Approx(1.0 / 3).epsilon(1e-6));
    CHECK(dynamical_derivative(ctx, lorentz_identity(3), inf) == doctest::Approx(1.0).epsilon(1e-12));
    auto zero = make_boundary(Model::HalfSpace, vec({0, 0}));
    double prod = dynamical_derivative(ctx, s.lorentz, inf) * dynamical_derivative(ctx, s.lorentz, zero);
    CHECK(prod == doctest::Approx(1.0).epsilon(1e-6));
    auto other = make_boundary(Model::HalfSpace, vec({1, 0}));
    CHECK(testing::code_of([&] { dynamical_derivative(ctx, s.lorentz, other); }) == ErrorCode::NOT_FIXED);
}

TEST_CASE("geometric mean value theorem") {
    std::mt19937_64 rng(9);
    auto ctx = model_context(Model::Ball, 3);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int i = 0; i < 200; ++i) {
        LorentzMap g = lorentz_boost(3, 1 + i % 3, u(rng)).compose(lorentz_rotation(3, 1, 2, u(rng)));
        auto a = testing::random_boundary(rng, Model::Ball, 3), b = testing::random_boundary(rng, Model::Ball, 3);
        double lhs = std::pow(visual_dist(ctx, g.apply(a), g.apply(b)), 2);
        double rhs = metric_derivative(ctx, g, a) * metric_derivative(ctx, g, b) * std::pow(visual_dist(ctx, a, b), 2);
        CHECK(std::abs(lhs - rhs) < 1e-8);
    }
}

TEST_CASE("polar coordinates") {
    auto ctx = model_context(Model::HalfSpace, 2);
    auto zero = make_boundary(Model::HalfSpace, vec({0})), inf = halfspace_infinity(2);
    auto [r0, th0] = polar_coords(ctx, zero, inf, ctx.o);
    CHECK(std::abs(r0) < 1e-14);
    CHECK(std::abs(th0) < 1e-14);
    auto [r1, th1] = polar_coords(ctx, zero, inf, make_point(Model::HalfSpace, vec({M_E, 0})));
    CHECK(r1 == doctest::Approx(1).epsilon(1e-12));
    CHECK(std::abs(th1) < 1e-12);
    double a = M_PI / 3;  // angle from the vertical axis
    auto [r2, th2] = polar_coords(ctx, zero, inf, make_point(Model::HalfSpace, vec({std::cos(a), std::sin(a)})));
    CHECK(std::abs(r2) < 1e-12);
    CHECK(th2 == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(testing::code_of([&] { polar_coords(ctx, inf, inf, ctx.o); }) == ErrorCode::DEGENERATE);
}

TEST_CASE("visual metric triangle inequality on trees") {
    std::mt19937_64 rng(4);
    RTree t = testing::random_tree(rng, 30);
    auto ctx = tree_context(t, TreePoint::at_vertex(0));
    std::uniform_int_distribution<int> v(0, 29);
    for (int i = 0; i < 2000; ++i) {
        TreeBord x = TreeRay{v(rng), 0}, y = TreeRay{v(rng), 1}, z = testing::random_tree_point(rng, t);
        CHECK(visual_dist(ctx, x, z) <= visual_dist(ctx, x, y) + visual_dist(ctx, y, z) + 1e-12);
    }
}

TEST_CASE("space mismatch") {
    auto ctx = model_context(Model::Ball, 3);
    auto p = origin(Model::Ball, 2);
    CHECK(testing::code_of([&] { gromov_product(ctx, p, p, ctx.o); }) == ErrorCode::SPACE_MISMATCH);
}
