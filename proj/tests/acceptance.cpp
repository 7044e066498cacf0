#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "gromov/bim.hpp"
#include "gromov/coarse.hpp"
#include "gromov/error.hpp"
#include "gromov/experiments.hpp"
#include "gromov/groups.hpp"
#include "gromov/measures.hpp"
#include "gromov/models.hpp"
#include "gromov/partition.hpp"
#include "gromov/poincare.hpp"
#include "gromov/rtree.hpp"

#ifndef GROMOV_CONFIG_DIR
#define GROMOV_CONFIG_DIR "configs"
#endif

using namespace gromov;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream note;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            note << " [failed: " << what << "]";
        }
    }
};

std::string num(double x) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3g", x);
    return b;
}

Vec hyperboloid_point(std::mt19937_64& rng, int n, double radius) {
    std::normal_distribution<double> g(0, 1);
    std::uniform_real_distribution<double> u(0, radius);
    Vec dir(n);
    for (int i = 0; i < n; ++i) dir[i] = g(rng);
    dir.normalize();
    double r = u(rng);
    Vec h(n + 1);
    h[0] = std::cosh(r);
    h.tail(n) = std::sinh(r) * dir;
    return h;
}

// four-point condition: the two largest of the three pair sums agree
double defect4(double xy, double zw, double xz, double yw, double xw, double yz) {
    double s[3] = {xy + zw, xz + yw, xw + yz};
    std::sort(s, s + 3);
    return s[2] - s[1];
}

TreePoint tree_point(std::mt19937_64& rng, const RTree& t) {
    std::uniform_int_distribution<int> e(0, t.edge_count() - 1);
    std::uniform_real_distribution<double> u(0, 1);
    int k = e(rng);
    return TreePoint::on_edge(k, u(rng) * t.edge(k).len);
}

double tree_defect(const RTree& t, uint64_t seed, int quads) {
    std::mt19937_64 rng(seed);
    double worst = 0;
    for (int i = 0; i < quads; ++i) {
        auto x = tree_point(rng, t), y = tree_point(rng, t), z = tree_point(rng, t), w = tree_point(rng, t);
        worst = std::max(worst, defect4(t.dist(x, y), t.dist(z, w), t.dist(x, z), t.dist(y, w), t.dist(x, w), t.dist(y, z)));
    }
    return worst;
}

RTree random_tree(std::mt19937_64& rng, int n, double lo, double hi) {
    RTree t;
    t.add_vertex();
    std::uniform_real_distribution<double> len(lo, hi);
    for (int v = 1; v < n; ++v) {
        std::uniform_int_distribution<int> par(0, v - 1);
        int p = par(rng);
        t.add_edge(p, t.add_vertex(), len(rng));
    }
    t.finalize();
    return t;
}

// ---------------------------------------------------------------- criteria

void models(Verdict& v) {
    std::mt19937_64 rng(101);
    double worst = 0;
    for (Model m : {Model::Hyperboloid, Model::Ball, Model::HalfSpace})
        for (int i = 0; i < 10000; ++i) {
            int n = 2 + i % 7;
            Vec hx = hyperboloid_point(rng, n, 3), hy = hyperboloid_point(rng, n, 3), hz = hyperboloid_point(rng, n, 3),
                hw = hyperboloid_point(rng, n, 3);
            auto x = from_hyperboloid(hx, m), y = from_hyperboloid(hy, m), z = from_hyperboloid(hz, m),
                 w = from_hyperboloid(hw, m);
            double dxy = dist(x, y), dyz = dist(y, z), dxz = dist(x, z);
            // reference distance straight from the Lorentz form
            double ref = std::acosh(std::max(1.0, hx[0] * hy[0] - hx.tail(n).dot(hy.tail(n))));
            worst = std::max(worst, std::abs(dxy - ref) / std::max(1.0, ref) * (ref > 1e-3 ? 1 : 0));
            worst = std::max(worst, std::abs(dxy - dist(y, x)));
            worst = std::max(worst, dist(x, x));
            worst = std::max(worst, dxz - dxy - dyz);
            for (Model o : {Model::Hyperboloid, Model::Ball, Model::HalfSpace})
                worst = std::max(worst, std::abs(dist(convert(x, o), convert(y, o)) - dxy));
            double dwx = dist(w, x), dwy = dist(w, y), dwz = dist(w, z);
            auto gp = [](double a, double b, double c) { return 0.5 * (a + b - c); };
            worst = std::max(worst, std::exp(-gp(dwx, dwz, dxz)) - std::exp(-gp(dwx, dwy, dxy)) - std::exp(-gp(dwy, dwz, dyz)));
        }
    v.require(worst <= 1e-9, "residual " + num(worst));
    v.note << "worst residual " << num(worst) << " over 3 x 10^4 pairs";
}

void worked(Verdict& v) {
    Vec a(2), b(2), c(2), zero(1);
    a << 0.6, 0;
    b << 1, 0;
    c << M_E, 0;
    zero << 0;
    auto p1 = make_point(Model::HalfSpace, b), pe = make_point(Model::HalfSpace, c);
    auto ctx = model_context(Model::HalfSpace, 2);
    auto [r, th] = polar_coords(ctx, make_boundary(Model::HalfSpace, zero), halfspace_infinity(2), pe);
    double errs[] = {std::abs(dist(origin(Model::Ball, 2), make_point(Model::Ball, a)) - std::log(2.0)),
                     std::abs(dist(p1, pe) - 1), std::abs(busemann_halfspace(p1, pe) - 1), std::abs(r - 1), std::abs(th)};
    double worst = *std::max_element(std::begin(errs), std::end(errs));
    v.require(worst <= 1e-12, "worst error " + num(worst));
    v.note << "5 quantities, worst error " << num(worst);
}

void rtrees(Verdict& v) {
    std::vector<std::pair<std::string, RTree>> trees;
    int n = 16;
    UltrametricSpace u;
    u.d.assign(n, std::vector<double>(n, 0));
    for (int i = 0; i < n; ++i) {
        u.labels.push_back(std::to_string(i));
        for (int j = 0; j < n; ++j)
            if (i != j) u.d[i][j] = 0.3 * std::pow(2.0, std::floor(std::log2(double(i ^ j))) + 1);
    }
    ConeTree cone = cone_build(u, 0, {0.5, 2.5});
    double ident = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) ident = std::max(ident, std::abs(cone.hamenstadt_at_infinity(i, j) - u.d[i][j]));
    trees.push_back({"cone", cone.tree});

    std::mt19937_64 rng(5);
    StaplePlan plan;
    for (int i = 0; i < 3; ++i) plan.trees.push_back(random_tree(rng, 12, 0.1, 2));
    plan.staples.push_back({0, 1, {TreePoint::at_vertex(5)}, {TreePoint::at_vertex(3)}});
    plan.staples.push_back({1, 2, {TreePoint::at_vertex(7)}, {TreePoint::on_edge(4, 0.05)}});
    trees.push_back({"stapled", staple_build(plan).tree});
    trees.push_back({"pure-schottky", pure_schottky_tree({factor_cyclic(3, 1), factor_integer(1), factor_integer(0.7)}, 3).tree});
    RTree y;
    y.add_vertex();
    y.add_edge(0, y.add_vertex(), 1);
    y.add_edge(1, y.add_vertex(), 0.5);
    y.finalize();
    auto act = geometric_product_action(y, TreePoint::on_edge(0, 0.25),
                                        {TreePoint::at_vertex(0), TreePoint::at_vertex(1), TreePoint::at_vertex(2)},
                                        {factor_cyclic(2, 0), factor_cyclic(3, 0), factor_cyclic(2, 0)});
    trees.push_back({"geometric", geometric_product_tree(act, 4).tree});
    double worst = 0;
    for (size_t i = 0; i < trees.size(); ++i) worst = std::max(worst, tree_defect(trees[i].second, 1000 + i, 10000));
    v.require(worst <= 1e-12, "defect " + num(worst));
    v.require(ident <= 1e-12, "cone identity " + num(ident));
    v.note << "4 trees x 10^4 quadruples, defect " << num(worst) << ", cone identity " << num(ident);
}

void bim(Verdict& v) {
    struct Case {
        std::string name;
        std::vector<std::vector<double>> d;
        std::vector<int> sigma;
    };
    std::vector<Case> cases;
    cases.push_back({"tripod", {{0, 1, 1, 1}, {1, 0, 2, 2}, {1, 2, 0, 2}, {1, 2, 2, 0}}, {0, 2, 3, 1}});
    {
        auto act = pure_schottky_action({factor_integer(1), factor_integer(1)});
        OrbitCutoff cut;
        cut.max_length = 2;
        auto orbit = orbit_enumerate(act, cut);
        orbit.resize(10);
        Case c{"f2-ball", {}, {}};
        c.d.assign(10, std::vector<double>(10));
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 10; ++j) c.d[i][j] = act.dist(orbit[i].word, orbit[j].word);
        // inversion of the first generator
        for (int i = 0; i < 10; ++i) {
            Word w = orbit[i].word;
            for (auto& l : w)
                if (l.factor == 0) l.elem = -l.elem;
            int t = -1;
            for (int j = 0; j < 10; ++j)
                if (orbit[j].word == w) t = j;
            c.sigma.push_back(t);
        }
        cases.push_back(c);
    }
    {
        std::mt19937_64 rng(42);
        RTree t = random_tree(rng, 20, 0.1, 1.0);
        Case c{"random-tree", {}, std::vector<int>(20, -1)};
        c.d.assign(20, std::vector<double>(20));
        for (int i = 0; i < 20; ++i)
            for (int j = 0; j < 20; ++j) c.d[i][j] = t.vertex_dist(i, j);
        c.sigma[3] = 11;
        c.sigma[11] = 3;
        cases.push_back(c);
    }
    double id = 0, eq = 0;
    for (const auto& c : cases)
        for (double lambda : {M_E, 2.0}) {
            BimConfig cfg;
            cfg.lambda = lambda;
            cfg.d = c.d;
            int m = cfg.size();
            auto emb = embed(cfg);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) {
                    Vec a = emb.points.col(i), b = emb.points.col(j);
                    double cosh_d = a[0] * b[0] - a.tail(a.size() - 1).dot(b.tail(b.size() - 1));
                    id = std::max(id, std::abs(cosh_d - std::pow(lambda, c.d[i][j])));
                }
            Mat form(m, m);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) form(i, j) = -std::pow(lambda, c.d[i][j]);
            Eigen::SelfAdjointEigenSolver<Mat> es(form);
            int neg = 0, pos = 0;
            for (int i = 0; i < m; ++i) (es.eigenvalues()[i] < 0 ? neg : pos)++;
            v.require(neg == 1 && pos == m - 1, c.name + " signature");
            auto g = represent_isometry(cfg, emb, c.sigma);
            for (int i = 0; i < m; ++i)
                if (c.sigma[i] >= 0) eq = std::max(eq, (g.m * emb.points.col(i) - emb.points.col(c.sigma[i])).norm());
        }
    v.require(id <= 1e-8, "identity " + num(id));
    v.require(eq <= 1e-7, "equivariance " + num(eq));
    v.note << "3 configurations x 2 bases, identity " << num(id) << ", equivariance " << num(eq) << ", signature (m-1,1)";
}

void exponents(Verdict& v) {
    std::vector<Factor> z(4, factor_integer(1));
    double worst = 0;
    bool div = true;
    for (int k : {2, 3, 4}) {
        auto ps = schottky_poincare_set(std::vector<Factor>(z.begin(), z.begin() + k));
        worst = std::max(worst, std::abs(ps.delta - std::log(2.0 * k - 1)));
        div = div && ps.divergence_type;
    }
    OrbitCutoff cut;
    cut.max_length = 12;
    auto fit = exponent_estimate(build_profile(orbit_norms(pure_schottky_action({z[0], z[1]}), cut)), 12);
    double rel = std::abs(fit.delta.value - std::log(3.0)) / std::log(3.0);
    v.require(worst <= 1e-10, "exact " + num(worst));
    v.require(rel <= 0.05, "fit " + num(rel));
    v.require(div, "divergence type");
    v.note << "exact error " << num(worst) << ", fit " << fit.delta.value << " (" << num(100 * rel)
           << "% off log 3), divergence type at the root";
}

void growth(Verdict& v) {
    auto h = growth_rate("heisenberg", 20);
    auto z2 = growth_rate("Z^2", 60);
    v.require(h.alpha.value >= 3.5 && h.alpha.value <= 4.5, "heisenberg alpha");
    v.require(z2.alpha.value >= 1.9 && z2.alpha.value <= 2.1, "Z^2 alpha");
    bool bounds = true;
    for (int d : {1, 2}) {
        int k = d == 1 ? 100000 : 300;
        auto fit = exponent_estimate(build_profile(translation_lattice_norms(d, k)), dist_from_half_chord(0.5 * k));
        auto g = growth_rate("Z^" + std::to_string(d), d == 1 ? 200 : 60);
        bounds = bounds && parabolic_bound_check("Z^" + std::to_string(d), fit, g).pass && fit.delta.contains(d / 2.0);
    }
    v.require(bounds, "parabolic bound");
    v.note << "Heisenberg alpha " << num(h.alpha.value) << ", Z^2 alpha " << num(z2.alpha.value)
           << ", delta >= alpha/2 for Z and Z^2";
}

void edelstein(Verdict& v) {
    auto fac = edelstein_factorial(30);
    double prev = kInf, last = 0;
    bool dec = true;
    long long n = 2;
    for (int k = 3; k <= 8; ++k) {
        n *= k;
        last = edelstein_displacement(fac, n).squared;
        dec = dec && last < prev;
        prev = last;
    }
    // sum_{m >= 1} dist(2^-m, Z)^2 = 1/4 + 1/16 + ...
    double closed = 0;
    for (int m = 1; m < 60; ++m) closed += std::pow(std::min(std::ldexp(1.0, -m), 1 - std::ldexp(1.0, -m)), 2);
    double worst = 0;
    auto geo = edelstein_geometric(60);
    for (int k = 1; k <= 10; ++k) {
        double f = edelstein_displacement(geo, 1LL << k).dist_form;
        worst = std::max({worst, std::abs(f - closed), std::abs(f - 1.0 / 3)});
    }
    v.require(dec, "not decreasing");
    v.require(last < 0.5, "k = 8 displacement " + num(last));
    v.require(worst <= 1e-9, "tail sum " + num(worst));
    v.note << "1/k! displacement decreasing to " << num(last) << " at k = 8; 2^-k form within " << num(worst) << " of 1/3";
}

void measures(Verdict& v) {
    auto act = pure_schottky_action({factor_integer(1), factor_integer(1)});
    auto mu = schottky_cylinder_measure(act);
    OrbitCutoff cut;
    cut.max_length = 10;
    double cyl = 0;
    for (const auto& e : orbit_enumerate(act, cut)) {
        int n = act.group.generator_length(e.word);
        if (n == 0) continue;
        double want = 1 / (4 * std::pow(3.0, n - 1));
        cyl = std::max(cyl, std::abs(mu.cylinder(e.word) - want) / want);
    }
    auto sh = shadow_lemma_check(act, [&](const Word& g, double s) { return mu.shadow(g, s); }, mu.delta, 0, 8);
    auto conf = conformality_check(mu, 500, 3);

    CountingSpec cusp;
    cusp.lambda = {2};
    cusp.mult = {2};
    cusp.tail_step = 2;
    cusp.tail_mult = 2;
    auto cm = schottky_cylinder_measure(pure_schottky_action({factor_counting(cusp), factor_integer(1)}));
    auto ctx = global_measure_context(cm);
    auto samples = gmf_samples(ctx, 40, 5);
    choose_theta(ctx, samples, 15);
    auto sw = global_formula_verify(ctx, samples, 15);

    CuspLaw power;
    power.a = 0.6;
    auto yes = doubling_and_dimension_tests(power, 0.7, true);
    CuspLaw edge;
    edge.kind = CuspLaw::Kind::PowerLog;
    edge.a = 1.4;
    edge.b = 2;
    auto no = doubling_and_dimension_tests(edge, 0.7, true);

    v.require(cyl <= 1e-12, "cylinders " + num(cyl));
    v.require(sh.spread <= 3, "shadow spread " + num(sh.spread));
    v.require(conf.max_residual <= 1e-9, "conformality " + num(conf.max_residual));
    v.require(sw.pass && sw.sigma <= 3 && sw.constant <= 100, "sandwich");
    v.require(yes.doubling == TriState::Yes && yes.exact_dimensional == TriState::Yes, "power law verdict");
    v.require(no.exact_dimensional == TriState::No, "log^2 verdict");
    v.note << "cylinders " << num(cyl) << ", spread " << num(sh.spread) << ", conformality " << num(conf.max_residual)
           << ", sandwich sigma " << sw.sigma << " C " << num(sw.constant) << ", verdicts " << tri_name(yes.doubling) << "/"
           << tri_name(no.exact_dimensional);
}

void partition(Verdict& v) {
    auto ps = free_group_structure(pure_schottky_action({factor_integer(1), factor_integer(1)}), 10);
    double s = 0.9;
    auto m = thick_substructure_measure(ps, s);
    double c = 1 - std::pow(std::exp(-1.0), s);
    bool regular = true, consistent = true;
    for (int w = 0; w < int(ps.nodes.size()); ++w) {
        if (m.weight[w] <= 0) continue;
        double ds = std::pow(ps.nodes[w].diam, s);
        regular = regular && c * ds <= m.weight[w] && m.weight[w] < ds;
        if (ps.nodes[w].children.empty()) continue;
        double sum = 0;
        for (int ch : ps.nodes[w].children) sum += m.weight[ch];
        consistent = consistent && std::abs(sum - m.weight[w]) <= 1e-15 * m.weight[w];
    }
    auto a = ahlfors_check(m, ps);
    double kappa = std::exp(-1.0);
    int k = 2;  // e^-2 = kappa^2
    double c1 = c * std::pow(kappa, s * (k - 1)), c2 = std::pow(kappa, -2 * s);
    v.require(regular, "regularity");
    v.require(consistent, "consistency");
    v.require(a.c1_raw >= c1 && a.c2_raw <= c2 && a.sandwich, "envelope");
    v.note << m.retained_nodes << " retained nodes regular to depth 10, C1 " << num(a.c1_raw) << " >= " << num(c1)
           << ", C2 " << num(a.c2_raw) << " <= " << num(c2);
}

void determinism(Verdict& v) {
    auto cat = list_experiments(GROMOV_CONFIG_DIR);
    int same = 0;
    for (const auto& e : cat) {
        auto cfg = load_config(e.path);
        cfg["name"] = e.name;
        RunOptions one, two;
        two.jobs = 2;
        auto a = run_experiment(cfg, one), b = run_experiment(cfg, two);
        bool eq = a.report.dump(2) == b.report.dump(2) && a.tables.size() == b.tables.size();
        for (size_t i = 0; eq && i < a.tables.size(); ++i) eq = a.tables[i].str() == b.tables[i].str();
        v.require(eq, e.name);
        same += eq;
    }
    v.require(cat.size() >= 10, "fewer than 10 configs");
    v.note << same << "/" << cat.size() << " bundled configs byte-identical across two runs";
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget;  // seconds, 0 = none
        std::function<void(Verdict&)> run;
    };
    std::vector<Criterion> all{{1, "model exactness", 10, models},       {2, "worked numbers", 0, worked},
                               {3, "R-tree zero defect", 30, rtrees},    {4, "BIM identity", 0, bim},
                               {5, "Poincare exponents", 60, exponents}, {6, "growth", 0, growth},
                               {7, "Edelstein family", 0, edelstein},    {8, "measures", 120, measures},
                               {9, "partition algorithm", 30, partition}, {10, "determinism", 0, determinism}};
    int failures = 0;
    for (auto& c : all) {
        Verdict v;
        auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(v);
        } catch (const std::exception& e) {
            v.pass = false;
            v.note << " [error: " << e.what() << "]";
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget > 0 && secs >= c.budget) v.require(false, "over the " + num(c.budget) + " s budget");
        std::printf("criterion %2d %-20s %s  %s  (%.2f s)\n", c.id, c.name, v.pass ? "PASS" : "FAIL", v.note.str().c_str(), secs);
        failures += !v.pass;
    }
    return failures == 0 ? 0 : 1;
}
