#include <cmath>
#include <set>

#include "gromov/groups.hpp"
#include "support.hpp"

using namespace gromov;

namespace {

FreeProduct mixed_group() {
    FreeProduct g;
    g.factors = {factor_integer(1), factor_cyclic(3, 1), factor_cyclic(2, 0.5)};
    return g;
}

// repeated adjacent merging until nothing changes
Word brute_reduce(const FreeProduct& g, Word w) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t i = 0; i < w.size(); ++i)
            if (w[i].elem == 0) {
                w.erase(w.begin() + i);
                changed = true;
                break;
            }
        if (changed) continue;
        for (size_t i = 0; i + 1 < w.size(); ++i)
            if (w[i].factor == w[i + 1].factor) {
                w[i].elem = g.factors[w[i].factor].mul(w[i].elem, w[i + 1].elem);
                w.erase(w.begin() + i + 1);
                changed = true;
                break;
            }
    }
    return w;
}

Word random_word(std::mt19937_64& rng, int len) {
    std::uniform_int_distribution<int> f(0, 2), z(-2, 2), c3(0, 2), c2(0, 1);
    Word w;
    for (int i = 0; i < len; ++i) {
        int a = f(rng);
        w.push_back({a, a == 0 ? z(rng) : a == 1 ? c3(rng) : c2(rng)});
    }
    return w;
}

TreeAction f2(double r = 1) { return pure_schottky_action({factor_integer(r), factor_integer(r)}); }

}  // namespace

TEST_CASE("reduction") {
    FreeProduct g = mixed_group();
    CHECK(g.reduce({{1, 1}, {1, 2}}).empty());
    CHECK(g.reduce({{1, 1}, {1, 1}}) == Word{{1, 2}});
    // two internal cancellations collapse to one letter
    Word w = {{0, 2}, {1, 1}, {2, 1}, {2, 1}, {1, 2}, {0, -1}};
    CHECK(g.reduce(w) == brute_reduce(g, w));
    CHECK(g.reduce(w) == Word{{0, 1}});
    CHECK(testing::code_of([&] { g.reduce({{5, 1}}); }) == ErrorCode::BAD_FACTOR);
    CHECK(testing::code_of([&] { g.reduce({{1, 7}}); }) == ErrorCode::BAD_FACTOR);

    std::mt19937_64 rng(17);
    for (int i = 0; i < 10000; ++i) {
        Word a = random_word(rng, 6), b = random_word(rng, 5), c = random_word(rng, 4);
        Word ra = g.reduce(a);
        CHECK(ra == brute_reduce(g, a));
        CHECK(g.reduce(ra) == ra);
        CHECK(g.multiply(g.multiply(a, b), c) == g.multiply(a, g.multiply(b, c)));
        CHECK(g.multiply(a, g.inverse(a)).empty());
    }
}

TEST_CASE("orbit enumeration") {
    OrbitCutoff cut;
    cut.max_length = 2;
    auto words = orbit_enumerate(f2(), cut);
    CHECK(words.size() == 17);
    std::set<std::string> seen;
    for (auto& e : words) seen.insert(word_to_string(e.word));
    CHECK(seen.size() == 17);
    CHECK(words.front().word.empty());
    CHECK(word_to_string(words[1].word) == "(0,1)");
    cut.max_length = 0;
    CHECK(orbit_enumerate(f2(), cut).size() == 1);
    auto d = pure_schottky_action({factor_cyclic(2, 1), factor_cyclic(2, 1)});
    cut.max_length = 3;
    CHECK(orbit_enumerate(d, cut).size() == 7);
    cut.max_length = 6;
    CHECK(orbit_norms(f2(), cut).size() == size_t(2 * std::pow(3, 6) - 1));
    cut.cap = 100;
    CHECK(testing::code_of([&] { orbit_norms(f2(), cut); }) == ErrorCode::BUDGET_EXCEEDED);
}

TEST_CASE("pure Schottky norms") {
    auto zz = f2();
    CHECK(zz.norm({{0, 1}, {1, 1}}) == 2);
    CHECK(zz.norm({}) == 0);
    auto d = pure_schottky_action({factor_cyclic(2, 1), factor_cyclic(2, 1)});
    Word w;
    for (int k = 1; k <= 5; ++k) {
        w.push_back({0, 1});
        w.push_back({1, 1});
        CHECK(d.norm(w) == 2 * k);
    }
}

TEST_CASE("pure Schottky tree realization") {
    for (auto factors : {std::vector<Factor>{factor_integer(1), factor_integer(1)},
                         std::vector<Factor>{factor_cyclic(3, 1), factor_cyclic(3, 1), factor_integer(0.7)},
                         std::vector<Factor>{factor_counting(parse_counting_spec("1 2\n2 2\n")), factor_integer(1)}}) {
        auto act = pure_schottky_action(factors);
        auto real = pure_schottky_tree(factors, 3);
        int o = real.orbit_vertex[0];
        for (size_t i = 0; i < real.orbit.size(); ++i) {
            double sum = 0;
            for (auto& l : real.orbit[i].word) sum += factors[l.factor].norm(l.elem);
            CHECK(std::abs(real.tree.vertex_dist(o, real.orbit_vertex[i]) - sum) <= 1e-12);
            CHECK(std::abs(act.norm(real.orbit[i].word) - sum) <= 1e-12);
        }
        // equivariance on the realized ball
        for (size_t i = 0; i < real.orbit.size(); i += 3)
            for (size_t j = 0; j < real.orbit.size(); j += 5)
                CHECK(std::abs(real.tree.vertex_dist(real.orbit_vertex[i], real.orbit_vertex[j]) -
                               act.dist(real.orbit[i].word, real.orbit[j].word)) < 1e-9);
    }
    CHECK(testing::code_of([] { pure_schottky_tree({}, 2); }) == ErrorCode::EMPTY_FACTOR);
}

TEST_CASE("geometric products") {
    RTree y;
    y.add_vertex();
    y.add_edge(0, y.add_vertex(), 1);
    y.finalize();
    auto act = geometric_product_action(y, TreePoint::at_vertex(0), {TreePoint::at_vertex(0), TreePoint::at_vertex(1)},
                                        {factor_cyclic(2, 0), factor_cyclic(2, 0)});
    CHECK(act.norm({{0, 1}, {1, 1}}) == 2);
    CHECK(act.norm({{1, 1}}) == 2);
    CHECK(act.norm({{0, 1}}) == 0);
    CHECK(act.norm({}) == 0);
    CHECK(testing::code_of([&] {
              geometric_product_action(y, TreePoint::at_vertex(0), {TreePoint::at_vertex(4)}, {factor_cyclic(2, 0)});
          }) == ErrorCode::P_NOT_IN_Y);

    auto act2 = geometric_product_action(y, TreePoint::on_edge(0, 0.25), {TreePoint::at_vertex(0), TreePoint::at_vertex(1)},
                                         {factor_cyclic(2, 0), factor_cyclic(3, 0)});
    auto real = geometric_product_tree(act2, 4);
    int o = real.orbit_vertex[0];
    for (size_t i = 0; i < real.orbit.size(); ++i)
        CHECK(std::abs(real.tree.vertex_dist(o, real.orbit_vertex[i]) - act2.norm(real.orbit[i].word)) <= 1e-12);
}

TEST_CASE("parabolic from counting") {
    auto spec = parse_counting_spec("1 2\ntail 1 2\n");
    auto p = parabolic_from_counting(spec, 6);
    for (double rho : {0.5, 1.0, 2.5, 4.0, 6.0}) CHECK(p.orbit_count(rho) == (long long)std::llround(std::pow(2, std::floor(rho))));
    CHECK(p.orbit_count(-0.1) == 0);
    CHECK(p.orbit_count(0) == 1);
    for (size_t i = 0; i < p.elements.size(); ++i)
        CHECK(std::abs(p.cone.tree.busemann(p.cone.infinity, p.cone.basepoint, p.cone.cone_point(int(i), 1))) < 1e-12);
    // isometric action on cone points
    for (int64_t g : {int64_t(1), int64_t(5), int64_t(22)})
        for (int i = 0; i < int(p.elements.size()); i += 7)
            for (int j = 0; j < int(p.elements.size()); j += 5)
                for (double r : {0.5, 1.0, 3.0})
                    CHECK(std::abs(p.cone.tree.dist(p.cone.cone_point(i, r), p.cone.cone_point(j, 1)) -
                                   p.cone.tree.dist(p.cone.cone_point(p.act(g, i), r), p.cone.cone_point(p.act(g, j), 1))) < 1e-12);
}

TEST_CASE("model classification") {
    auto ctx = model_context(Model::Hyperboloid, 3);
    auto lox = classify_isometry(ctx, lorentz_boost(3, 1, 1));
    CHECK(lox.kind == IsometryClass::Loxodromic);
    CHECK(lox.translation_length == doctest::Approx(1).epsilon(1e-9));
    for (int n = 1; n <= 32; ++n) CHECK(std::abs(lox.orbit[n - 1] - n) <= lox.orbit_bound + 1e-9);

    auto ell = classify_isometry(ctx, lorentz_rotation(3, 1, 2, 0.7));
    CHECK(ell.kind == IsometryClass::Elliptic);

    auto hctx = model_context(Model::HalfSpace, 3);
    Vec b = Vec::Zero(2);
    b[0] = 1;
    auto t = poincare_extension(make_similarity(1, Mat::Identity(2, 2), b));
    auto par = classify_isometry(hctx, t.lorentz);
    CHECK(par.kind == IsometryClass::Parabolic);
    REQUIRE(par.fixed.has_value());
    CHECK(par.fixed->at_infinity);
    CHECK(std::abs(par.fixed_derivative - 1) < 1e-6);

    // conjugated loxodromic: witness bound from the axis
    LorentzMap c = lorentz_rotation(3, 1, 3, 0.4).compose(lorentz_boost(3, 2, 0.8));
    LorentzMap g = c.compose(lorentz_boost(3, 1, 0.6)).compose(c.inverse());
    auto w = classify_isometry(ctx, g);
    CHECK(w.kind == IsometryClass::Loxodromic);
    CHECK(w.translation_length == doctest::Approx(0.6).epsilon(1e-9));
    auto ga = g.apply(*w.attracting);
    CHECK(same_boundary(ga, *w.attracting, 1e-8));
    CHECK(dynamical_derivative(ctx, g, *w.attracting) * dynamical_derivative(ctx, g, *w.repelling) ==
          doctest::Approx(1).epsilon(1e-6));
}

TEST_CASE("tree classification") {
    auto act = f2();
    auto c = classify_isometry(act, {{0, 1}, {1, 1}});
    CHECK(c.kind == IsometryClass::Loxodromic);
    CHECK(c.translation_length == 2);
    auto conj = classify_isometry(act, {{1, 2}, {0, 1}, {1, -2}});
    CHECK(conj.kind == IsometryClass::Loxodromic);
    CHECK(conj.translation_length == 1);
    CHECK(conj.conjugator == Word{{1, 2}});
    auto d = pure_schottky_action({factor_cyclic(2, 1), factor_cyclic(2, 1)});
    CHECK(classify_isometry(d, {{0, 1}}).kind == IsometryClass::Elliptic);
    CHECK(classify_isometry(d, {{0, 1}, {1, 1}}).translation_length == 2);
    // attracting fixed point is fixed
    auto lx = classify_isometry(act, {{0, 1}, {1, -1}, {0, 1}});
    REQUIRE(lx.attracting.has_value());
    WordAddress moved{act.group.multiply({{0, 1}, {1, -1}, {0, 1}}, lx.attracting->prefix), lx.attracting->period};
    CHECK(std::isinf(address_gromov(act, moved, *lx.attracting)));
}

TEST_CASE("cylinders and coding") {
    auto act = f2();
    WordAddress xi{{{0, 1}}, {{1, 1}, {0, 1}}};
    CHECK(in_cylinder(act, {{0, 1}, {1, 1}}, xi));
    CHECK(!in_cylinder(act, {{0, 1}, {1, -1}}, xi));
    CHECK(in_cylinder(act, {}, xi));
    WordAddress line{{}, {{0, 1}}};
    CHECK(!in_cylinder(act, {{0, 3}}, line));
    CHECK(testing::code_of([&] { check_address(act.group, WordAddress{{}, {{0, 1}, {0, -1}}}); }) == ErrorCode::NOT_LIMIT_POINT);
    auto d = pure_schottky_action({factor_cyclic(2, 1), factor_cyclic(2, 1)});
    CHECK(testing::code_of([&] { check_address(d.group, WordAddress{{}, {{0, 1}}}); }) == ErrorCode::NOT_LIMIT_POINT);

    // nesting iff prefix, disjoint otherwise (sampled on periodic addresses)
    OrbitCutoff cut;
    cut.max_length = 3;
    auto words = orbit_enumerate(act, cut);
    std::vector<WordAddress> pts;
    for (auto& e : words)
        if (!e.word.empty()) pts.push_back({e.word, {{e.word.back().factor == 0 ? 1 : 0, 1}, {e.word.back().factor, 1}}});
    for (auto& g : words)
        for (auto& h : words) {
            bool nested = true, disjoint = true;
            for (auto& p : pts) {
                bool in_g = in_cylinder(act, g.word, p), in_h = in_cylinder(act, h.word, p);
                if (in_h && !in_g) nested = false;
                if (in_h && in_g) disjoint = false;
            }
            if (is_prefix(g.word, h.word)) CHECK(nested);
            else if (!is_prefix(h.word, g.word)) CHECK(disjoint);
        }

    Word alt;
    for (int i = 0; i < 12; ++i) alt.push_back({i % 2, 1});
    auto cp = coding_limit_point(act, alt, 10);
    CHECK(cp.radius <= cp.fitted_c * std::exp(-10.0) + 1e-15);
    CHECK(coding_limit_point(act, alt, 0).radius == 1);
    auto zero = pure_schottky_action({factor_cyclic(2, 0), factor_cyclic(2, 1)});
    CHECK(testing::code_of([&] { coding_limit_point(zero, {{0, 1}}, 1); }) == ErrorCode::NOT_SEPARATED);
    // two addresses agreeing on 10 letters and splitting at g·o have visual distance e^{-10}
    WordAddress a{alt, {{0, 1}, {1, 1}}}, b{Word(alt.begin(), alt.begin() + 10), {{0, -1}, {1, 1}}};
    CHECK(address_gromov(act, a, b) == doctest::Approx(10));
}

TEST_CASE("Edelstein displacement") {
    auto fac = edelstein_factorial(30);
    CHECK(edelstein_displacement(fac, 0).squared == 0);
    double prev = kInf;
    long long n = 1;
    for (int k = 1; k <= 8; ++k) {
        n *= k;
        if (k < 3) continue;
        double v = edelstein_displacement(fac, n).squared;
        CHECK(v < prev);
        prev = v;
    }
    CHECK(prev < 0.5);

    auto geo = edelstein_geometric(60);
    for (int k = 1; k <= 10; ++k) {
        auto d = edelstein_displacement(geo, 1LL << k);
        CHECK(std::abs(d.dist_form - 1.0 / 3) < 1e-9);
        CHECK(d.tail_bound < 1e-9);
    }
    CHECK(testing::code_of([&] { edelstein_displacement(edelstein_geometric(5), 1LL << 10); }) == ErrorCode::TAIL_TOO_LARGE);

    // half-space exactness: cosh d(o, g^n o) = 1 + |g^n(0)|^2 / 2
    auto small = edelstein_factorial(7);
    auto ext = poincare_extension(edelstein_similarity(small));
    int dim = 2 * 7 + 1;
    auto ctx = model_context(Model::HalfSpace, dim);
    LorentzMap p = lorentz_identity(dim);
    for (int k = 1; k <= 30; ++k) {
        p = ext.lorentz.compose(p);
        double sq = 0;
        for (int j = 1; j <= 7; ++j) sq += 4 * std::pow(std::sin(M_PI * k * small.a(j)), 2);
        CHECK(std::abs(std::cosh(dist(ctx.o, p.apply(ctx.o))) - (1 + sq / 2)) < 1e-9);
    }
}
