#include <cmath>

#include "gromov/partition.hpp"
#include "support.hpp"

using namespace gromov;
using testing::code_of;

namespace {

PartitionStructure f2(int depth, double s = 0) {
    return free_group_structure(pure_schottky_action({factor_integer(1), factor_integer(1)}), depth, s);
}

}  // namespace

TEST_CASE("free group cylinders form a valid structure") {
    auto p = f2(5, 0.9);
    CHECK(p.nodes.size() == 1 + 4 + 12 + 36 + 108 + 324);
    CHECK(p.kappa == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(p.lambda == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    auto v = validate(p);
    CHECK(v.valid);
    CHECK(v.checked == int(p.nodes.size()));
    // 3 e^{-0.9} children mass per unit parent mass
    CHECK(v.worst_thickness == doctest::Approx(3 * std::exp(-0.9)).epsilon(1e-12));
    CHECK(v.worst_kappa == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
    p.s = 1.2;
    auto bad = validate(p);
    CHECK_FALSE(bad.valid);
    CHECK(bad.clause == "thickness");
}

TEST_CASE("validation finds a shrunk child and accepts a single node") {
    auto p = uniform_structure(2, 0.5, 4);
    int victim = p.nodes[p.nodes[0].children[1]].children[0];
    p.nodes[victim].diam *= 0.2;
    auto v = validate(p);
    CHECK_FALSE(v.valid);
    CHECK(v.clause == "lambda");
    CHECK(v.node == victim);

    auto q = uniform_structure(2, 0.5, 3);
    q.nodes[q.nodes[q.nodes[0].children[0]].children[1]].sep = 0.1;
    auto w = validate(q);
    CHECK(w.clause == "kappa");

    auto one = uniform_structure(3, 0.4, 0);
    CHECK(one.nodes.size() == 1);
    CHECK(validate(one).valid);
}

TEST_CASE("binary halving at s = 1 gives the uniform measure") {
    auto p = uniform_structure(2, 0.5, 8);
    auto m = thick_substructure_measure(p, 1.0);
    CHECK(m.c == 0.5);
    CHECK(m.min_branching == 2);
    CHECK(m.regular);
    CHECK(m.consistency == 0);
    for (int v = 1; v < int(p.nodes.size()); ++v) CHECK(m.weight[v] == m.weight[p.nodes[v].parent] / 2);
    CHECK(m.leaves.support.size() == 256);
    for (double x : m.leaves.weight) CHECK(x == 1.0 / 256);
    auto a = ahlfors_check(m, p);
    CHECK(a.c2 == doctest::Approx(1));
    CHECK(a.c1 == doctest::Approx(0.5));
    CHECK(a.k == 2);
    CHECK(a.sandwich);
    CHECK(a.leaf_sum == 1);
}

TEST_CASE("free group measure at s = 0.9 is regular to depth 10") {
    auto p = f2(10);
    auto m = thick_substructure_measure(p, 0.9);
    double c = 1 - std::exp(-0.9);
    CHECK(m.c == doctest::Approx(c).epsilon(1e-15));
    // by hand: two children of mass e^{-0.9} already exceed c, so the root keeps two halves
    CHECK(m.retained[0] == 2);
    CHECK(m.weight[p.nodes[0].children[0]] == doctest::Approx(c / 2).epsilon(1e-15));
    CHECK(m.weight[p.nodes[0].children[2]] == 0);
    CHECK(m.regular);
    CHECK(m.min_branching >= 2);
    CHECK(m.initial_segments);
    CHECK(m.consistency < 1e-15);
    CHECK(m.regularity_low >= 1);
    CHECK(m.regularity_high < 1);
    for (int v = 0; v < int(p.nodes.size()); ++v) {
        if (m.weight[v] <= 0) continue;
        double ds = std::pow(p.nodes[v].diam, 0.9);
        CHECK(m.weight[v] >= c * ds);
        CHECK(m.weight[v] < ds);
    }
    auto a = ahlfors_check(m, p);
    CHECK(a.pass);
    CHECK(a.k == 2);
    CHECK(a.c1_raw >= a.c1_bound);
    CHECK(a.c2_raw <= a.c2_bound);
    CHECK(a.c1_bound == doctest::Approx(c * std::exp(-0.9)));
    CHECK(a.c2_bound == doctest::Approx(std::exp(1.8)));
    CHECK(std::abs(a.leaf_sum - 1) < 1e-12);
    CHECK(a.hd_lower == 0.9);
}

TEST_CASE("thickness failures and tampered weights") {
    auto p = f2(4);
    CHECK(code_of([&] { thick_substructure_measure(p, 1.2); }) == ErrorCode::NOT_THICK);
    CHECK(code_of([&] { thick_substructure_measure(uniform_structure(2, 0.5, 3), 1.01); }) == ErrorCode::NOT_THICK);
    auto broken = uniform_structure(2, 0.5, 3);
    broken.nodes[3].diam = 0.01;
    CHECK(code_of([&] { thick_substructure_measure(broken, 0.5); }) == ErrorCode::DEGENERATE);

    auto m = thick_substructure_measure(p, 0.9);
    int v = p.nodes[p.nodes[0].children[0]].children[0];
    m.weight[v] = 50 * std::pow(p.nodes[v].diam, 0.9);
    CHECK(code_of([&] { ahlfors_check(m, p); }) == ErrorCode::BOUND_FAIL);
    CHECK(code_of([] { free_group_structure(pure_schottky_action({factor_cyclic(3, 1), factor_integer(1)}), 2); }) ==
          ErrorCode::BAD_FACTOR);
}

TEST_CASE("structures round-trip through json") {
    auto p = uniform_structure(3, 0.3, 3);
    auto j = structure_to_json(p, 3);
    auto q = structure_from_json(j);
    REQUIRE(q.nodes.size() == p.nodes.size());
    for (int v = 0; v < int(p.nodes.size()); ++v) {
        CHECK(q.nodes[v].diam == p.nodes[v].diam);
        CHECK(q.nodes[v].sep == p.nodes[v].sep);
        CHECK(q.nodes[v].parent == p.nodes[v].parent);
    }
    CHECK(code_of([] { structure_from_json(nlohmann::json{{"kappa", 0.5}}); }) == ErrorCode::CONFIG_INVALID);
    CHECK(code_of([] {
              structure_from_json(nlohmann::json{{"kappa", 1.5}, {"lambda", 0.5}, {"tree", {{"diam", 1}}}});
          }) == ErrorCode::CONFIG_INVALID);
}
