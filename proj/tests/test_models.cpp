#include <cmath>

#include "support.hpp"

using namespace gromov;
using testing::random_point;

namespace {

Vec v2(double a, double b) {
    Vec x(2);
    x << a, b;
    return x;
}

}  // namespace

TEST_CASE("distance worked values") {
    auto o = origin(Model::Ball, 2);
    CHECK(dist(o, make_point(Model::Ball, v2(0.6, 0))) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    auto a = make_point(Model::HalfSpace, v2(1, 0)), b = make_point(Model::HalfSpace, v2(M_E, 0));
    CHECK(dist(a, b) == doctest::Approx(1.0).epsilon(1e-12));
    for (Model m : {Model::Hyperboloid, Model::Ball, Model::HalfSpace}) {
        std::mt19937_64 rng(1);
        auto p = random_point(rng, m, 3);
        CHECK(dist(p, p) == 0.0);
    }
    CHECK(testing::code_of([&] { dist(o, a); }) == ErrorCode::MODEL_MISMATCH);
}

TEST_CASE("invalid points") {
    CHECK(testing::code_of([] { make_point(Model::Ball, v2(0.8, 0.8)); }) == ErrorCode::INVALID_POINT);
    CHECK(testing::code_of([] { make_point(Model::HalfSpace, v2(0, 1)); }) == ErrorCode::INVALID_POINT);
    CHECK(testing::code_of([] { make_point(Model::Hyperboloid, Vec::Zero(3)); }) == ErrorCode::INVALID_POINT);
    CHECK(testing::code_of([] { origin(Model::Ball, kMaxDim + 1); }) == ErrorCode::INVALID_POINT);
}

TEST_CASE("conversions") {
    Vec h = to_hyperboloid(origin(Model::Ball, 3));
    CHECK(h[0] == doctest::Approx(1));
    CHECK(h.tail(3).norm() < 1e-15);
    Vec hs = to_hyperboloid(origin(Model::HalfSpace, 3));
    CHECK(hs[0] == doctest::Approx(1));
    CHECK(hs.tail(3).norm() < 1e-12);
    Vec x(3);
    x << 0.3, 0.4, 0;
    auto p = make_point(Model::Ball, x);
    auto back = convert(convert(p, Model::Hyperboloid), Model::Ball);
    CHECK((back.coords - x).norm() < 1e-14);

    std::mt19937_64 rng(7);
    for (int i = 0; i < 500; ++i) {
        int n = 2 + i % 7;
        auto a = random_point(rng, Model::Hyperboloid, n), b = random_point(rng, Model::Hyperboloid, n);
        double d = dist(a, b);
        for (Model m : {Model::Ball, Model::HalfSpace}) CHECK(std::abs(dist(convert(a, m), convert(b, m)) - d) < 1e-9);
    }
}

TEST_CASE("geodesic points") {
    std::mt19937_64 rng(3);
    auto p = random_point(rng, Model::HalfSpace, 3), q = random_point(rng, Model::HalfSpace, 3);
    double d = dist(p, q);
    CHECK(dist(geodesic_point(p, q, 0), p) < 1e-9);
    CHECK(dist(geodesic_point(p, q, d), q) < 1e-7);
    auto m = geodesic_point(p, q, d / 3);
    CHECK(dist(p, m) == doctest::Approx(d / 3).epsilon(1e-9));
    CHECK(dist(m, q) == doctest::Approx(2 * d / 3).epsilon(1e-9));

    auto z = origin(Model::Hyperboloid, 2);
    Vec w(3);
    w << 1, 1, 0;
    auto e1 = make_point(Model::Hyperboloid, Vec((Vec(3) << std::cosh(2.0), std::sinh(2.0), 0).finished()));
    auto x = geodesic_point(z, e1, 1);
    Vec expect = normalize_hyperboloid(Vec((Vec(3) << 1, std::tanh(1.0), 0).finished()));
    CHECK((x.coords - expect).norm() < 1e-12);
    CHECK(testing::code_of([&] { geodesic_point(z, z, 1); }) == ErrorCode::DEGENERATE);
    CHECK(testing::code_of([&] { geodesic_point(z, e1, 3); }) == ErrorCode::OUT_OF_RANGE);
}

TEST_CASE("boosts") {
    CHECK((lorentz_boost(3, 1, 0).m - Mat::Identity(4, 4)).norm() == 0.0);
    Vec o = to_hyperboloid(origin(Model::Hyperboloid, 3));
    Vec x = lorentz_boost(3, 1, 1).apply(o);
    CHECK(x[0] == doctest::Approx(std::cosh(1.0)));
    CHECK(x[1] == doctest::Approx(std::sinh(1.0)));
    Mat c = lorentz_boost(3, 1, 0.4).m * lorentz_boost(3, 1, 0.7).m;
    CHECK((c - lorentz_boost(3, 1, 1.1).m).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(testing::code_of([] { lorentz_boost(3, 4, 1); }) == ErrorCode::BAD_AXIS);
    CHECK(testing::code_of([] { lorentz_boost(3, 0, 1); }) == ErrorCode::BAD_AXIS);
}

TEST_CASE("poincare extension") {
    Similarity id = make_similarity(1, Mat::Identity(2, 2), Vec::Zero(2));
    auto e = poincare_extension(id);
    CHECK((e.lorentz.m - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-14);

    Vec b(2);
    b << 0.3, -1.2;
    auto t = poincare_extension(make_similarity(1, Mat::Identity(2, 2), b));
    Vec x(3);
    x << 0.7, 0.1, 2.0;
    auto p = make_point(Model::HalfSpace, x);
    auto q = t(p);
    CHECK(q.coords[0] == doctest::Approx(0.7));
    CHECK(std::abs(busemann_halfspace(p, q)) < 1e-14);
    CHECK(e.lorentz.lorentz_defect() < 1e-12);
    CHECK(t.lorentz.lorentz_defect() < 1e-12);
    // the Lorentz matrix agrees with the direct formula
    CHECK(dist(from_hyperboloid(t.lorentz.apply(to_hyperboloid(p)), Model::HalfSpace), q) < 1e-9);

    auto s = poincare_extension(make_similarity(2, Mat::Identity(2, 2), Vec::Zero(2)));
    auto ctx = model_context(Model::HalfSpace, 3);
    CHECK(metric_derivative(ctx, s.lorentz, halfspace_infinity(3)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(testing::code_of([] { make_similarity(1, 2 * Mat::Identity(2, 2), Vec::Zero(2)); }) == ErrorCode::INVALID_POINT);
}

TEST_CASE("half-space busemann") {
    auto a = make_point(Model::HalfSpace, v2(1, 0)), b = make_point(Model::HalfSpace, v2(M_E, 0));
    CHECK(busemann_halfspace(a, a) == 0.0);
    CHECK(busemann_halfspace(a, b) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(busemann_halfspace(b, a) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("metric axioms and strong hyperbolicity") {
    std::mt19937_64 rng(11);
    for (Model m : {Model::Hyperboloid, Model::Ball, Model::HalfSpace}) {
        int fails = 0;
        for (int i = 0; i < 2000; ++i) {
            int n = 2 + i % 7;
            auto w = random_point(rng, m, n), x = random_point(rng, m, n), y = random_point(rng, m, n),
                 z = random_point(rng, m, n);
            double dxy = dist(x, y), dyz = dist(y, z), dxz = dist(x, z);
            if (std::abs(dxy - dist(y, x)) > 1e-9 || dxz > dxy + dyz + 1e-9 || dxy < 0) ++fails;
            auto gp = [&](const ModelPoint& a, const ModelPoint& c) { return 0.5 * (dist(w, a) + dist(w, c) - dist(a, c)); };
            if (std::exp(-gp(x, z)) > std::exp(-gp(x, y)) + std::exp(-gp(y, z)) + 1e-9) ++fails;
        }
        CHECK(fails == 0);
    }
}

TEST_CASE("operator norm law") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 50; ++i) {
        LorentzMap m = lorentz_boost(3, 1, u(rng))
                           .compose(lorentz_rotation(3, 1, 2, u(rng)))
                           .compose(lorentz_boost(3, 3, u(rng)))
                           .compose(lorentz_rotation(3, 2, 3, u(rng)));
        auto o = origin(Model::Hyperboloid, 3);
        CHECK(std::abs(std::log(m.op_norm()) - dist(o, m.apply(o))) < 1e-8);
    }
}
