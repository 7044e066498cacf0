#include "gromov/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "gromov/bim.hpp"
#include "gromov/coarse.hpp"
#include "gromov/error.hpp"
#include "gromov/groups.hpp"
#include "gromov/measures.hpp"
#include "gromov/models.hpp"
#include "gromov/partition.hpp"
#include "gromov/poincare.hpp"
#include "gromov/rtree.hpp"

namespace gromov {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string csv_cell(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string csv_cell(long long x) { return std::to_string(x); }

std::string CsvTable::str() const {
    std::string out;
    auto quoted = [](const std::string& c) {
        if (c.find_first_of(",\"\n") == std::string::npos) return c;
        std::string q = "\"";
        for (char ch : c) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        return q + "\"";
    };
    auto line = [&](const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + quoted(cells[i]);
        out += '\n';
    };
    line(columns);
    for (const auto& r : rows) line(r);
    return out;
}

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& msg) {
    throw Error(ErrorCode::CONFIG_INVALID, "field '" + field + "': " + msg);
}

/// Number, "e", or {"log": x}.
double value_of(const json& v, const std::string& field) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string() && v.get<std::string>() == "e") return M_E;
    if (v.is_object() && v.size() == 1 && v.contains("log") && v["log"].is_number() && v["log"].get<double>() > 0)
        return std::log(v["log"].get<double>());
    invalid(field, "expected a number, \"e\" or {\"log\": x}");
}

class Params {
public:
    Params(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) invalid(path_, "must be an object");
    }

    std::string field(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
    bool has(const char* k) const { return j_.contains(k); }
    const json& raw(const char* k) const {
        if (!j_.contains(k)) invalid(field(k), "missing");
        return j_.at(k);
    }
    double num(const char* k, double def) const { return has(k) ? value_of(j_.at(k), field(k)) : def; }
    double positive(const char* k, double def) const {
        double v = num(k, def);
        if (!(v > 0) || std::isinf(v)) invalid(field(k), "must be positive");
        return v;
    }
    long long integer(const char* k, long long def, long long min = 0) const {
        if (!has(k)) return def;
        const auto& v = j_.at(k);
        if (!v.is_number_integer()) invalid(field(k), "must be an integer");
        long long x = v.get<long long>();
        if (x < min) invalid(field(k), "must be >= " + std::to_string(min));
        return x;
    }
    std::string str(const char* k, const std::string& def) const {
        if (!has(k)) return def;
        if (!j_.at(k).is_string()) invalid(field(k), "must be a string");
        return j_.at(k).get<std::string>();
    }
    bool flag(const char* k, bool def) const {
        if (!has(k)) return def;
        if (!j_.at(k).is_boolean()) invalid(field(k), "must be true or false");
        return j_.at(k).get<bool>();
    }
    Params sub(const char* k) const {
        static const json empty = json::object();
        return Params(has(k) ? j_.at(k) : empty, field(k));
    }
    std::vector<Params> list(const char* k) const {
        std::vector<Params> out;
        if (!has(k)) return out;
        if (!j_.at(k).is_array()) invalid(field(k), "must be an array");
        for (size_t i = 0; i < j_.at(k).size(); ++i) out.emplace_back(j_.at(k)[i], field(k) + "[" + std::to_string(i) + "]");
        return out;
    }
    std::vector<std::string> strings(const char* k, std::vector<std::string> def) const {
        if (!has(k)) return def;
        std::vector<std::string> out;
        const auto& v = j_.at(k);
        if (!v.is_array()) invalid(field(k), "must be an array of strings");
        for (const auto& x : v) {
            if (!x.is_string()) invalid(field(k), "must be an array of strings");
            out.push_back(x.get<std::string>());
        }
        return out;
    }
    std::vector<double> numbers(const char* k, std::vector<double> def) const {
        if (!has(k)) return def;
        const auto& v = j_.at(k);
        if (!v.is_array()) invalid(field(k), "must be an array");
        std::vector<double> out;
        for (size_t i = 0; i < v.size(); ++i) out.push_back(value_of(v[i], field(k) + "[" + std::to_string(i) + "]"));
        return out;
    }
    const json& json_value() const { return j_; }

private:
    const json& j_;
    std::string path_;
};

struct Checks {
    ojson list = ojson::array();
    bool all = true;

    void add(const std::string& name, bool ok, ojson detail) {
        ojson a;
        a["name"] = name;
        for (auto& [k, v] : detail.items()) a[k] = v;
        a["pass"] = ok;
        list.push_back(std::move(a));
        all = all && ok;
    }
    void le(const std::string& name, double value, double bound) {
        add(name, value <= bound, {{"value", value}, {"bound", bound}});
    }
    void ge(const std::string& name, double value, double bound) {
        add(name, value >= bound, {{"value", value}, {"bound", bound}});
    }
    void near(const std::string& name, double value, double expected, double tol) {
        add(name, std::abs(value - expected) <= tol, {{"value", value}, {"expected", expected}, {"tol", tol}});
    }
    void within(const std::string& name, double value, double lo, double hi) {
        add(name, lo <= value && value <= hi, {{"value", value}, {"lo", lo}, {"hi", hi}});
    }
    void truth(const std::string& name, bool ok) { add(name, ok, ojson::object()); }
};

struct Run {
    Params params;
    Params tol;
    uint64_t seed;
    int jobs;
    Checks ck;
    ojson results = ojson::object();
    std::vector<CsvTable> tables;

    CsvTable& table(const std::string& file, std::vector<std::string> columns) {
        tables.push_back({file, std::move(columns), {}});
        return tables.back();
    }
};

uint64_t sub_seed(uint64_t seed, uint64_t i) {
    uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (i + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Runs f(0..n-1) on up to `jobs` threads; rethrows the error of the lowest failing index.
template <class F>
void parallel_for(int n, int jobs, F&& f) {
    std::vector<std::exception_ptr> errors(n);
    auto body = [&](int i) {
        try {
            f(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    if (jobs <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) body(i);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < std::min(jobs, n); ++t)
            pool.emplace_back([&] {
                for (int i = next++; i < n; i = next++) body(i);
            });
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::string support_id(const Word& w) {
    if (w.empty()) return "e";
    std::string s;
    for (size_t i = 0; i < w.size(); ++i) s += (i ? "." : "") + std::to_string(w[i].factor) + ":" + std::to_string(w[i].elem);
    return s;
}

Factor parse_factor(const Params& f) {
    std::string type = f.str("type", "");
    if (type == "integer") return factor_integer(f.positive("r", 1));
    if (type == "cyclic") {
        if (f.has("norms")) return factor_cyclic(f.numbers("norms", {}));
        return factor_cyclic(int(f.integer("n", 2, 2)), f.num("r", 1));
    }
    if (type == "counting") {
        CountingSpec spec;
        spec.lambda = f.numbers("lambda", {});
        for (double m : f.numbers("mult", {})) spec.mult.push_back(int(m));
        spec.tail_step = f.num("tail_step", 0);
        spec.tail_mult = int(f.integer("tail_mult", 0));
        try {
            validate_counting_spec(spec);
        } catch (const Error& e) {
            invalid(f.field("type"), e.what());
        }
        return factor_counting(spec);
    }
    invalid(f.field("type"), "expected integer, cyclic or counting");
}

std::vector<Factor> parse_factors(const Params& p, const char* key) {
    std::vector<Factor> out;
    for (const auto& f : p.list(key)) out.push_back(parse_factor(f));
    if (out.empty()) invalid(p.field(key), "needs at least one factor");
    return out;
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

TreePoint random_tree_point(std::mt19937_64& rng, const RTree& t) {
    std::uniform_int_distribution<int> e(0, t.edge_count() - 1);
    std::uniform_real_distribution<double> u(0, 1);
    int k = e(rng);
    return TreePoint::on_edge(k, u(rng) * t.edge(k).len);
}

ModelPoint random_model_point(std::mt19937_64& rng, Model m, int n, double radius) {
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

// ---------------------------------------------------------------- model-check

void run_model_random(Run& run) {
    const auto& p = run.params;
    std::vector<Model> models;
    for (const auto& s : p.strings("models", {"hyperboloid", "ball", "halfspace"})) {
        try {
            models.push_back(model_from_name(s));
        } catch (const Error&) {
            invalid(p.field("models"), "unknown model '" + s + "'");
        }
    }
    int dmin = int(p.integer("dim_min", 2, 1)), dmax = int(p.integer("dim_max", 8, 1));
    if (dmax < dmin) invalid(p.field("dim_max"), "must be >= dim_min");
    long long pairs = p.integer("pairs", 10000, 1);
    double radius = p.positive("radius", 3);
    double tol = run.tol.positive("metric", 1e-9);
    int dims = dmax - dmin + 1;

    struct Slot {
        Model model;
        int n;
        long long pairs;
        double symmetry = 0, self = 0, triangle = 0, conversion = 0, strong = 0;
    };
    std::vector<Slot> slots;
    for (Model m : models)
        for (int n = dmin; n <= dmax; ++n) {
            long long k = pairs / dims + ((n - dmin) < pairs % dims ? 1 : 0);
            slots.push_back({m, n, k});
        }
    parallel_for(int(slots.size()), run.jobs, [&](int i) {
        Slot& s = slots[i];
        std::mt19937_64 rng(sub_seed(run.seed, i));
        for (long long t = 0; t < s.pairs; ++t) {
            auto x = random_model_point(rng, s.model, s.n, radius), y = random_model_point(rng, s.model, s.n, radius),
                 z = random_model_point(rng, s.model, s.n, radius), w = random_model_point(rng, s.model, s.n, radius);
            double dxy = dist(x, y), dyz = dist(y, z), dxz = dist(x, z);
            s.symmetry = std::max(s.symmetry, std::abs(dxy - dist(y, x)));
            s.self = std::max(s.self, std::abs(dist(x, x)));
            s.triangle = std::max(s.triangle, dxz - dxy - dyz);
            for (Model other : {Model::Hyperboloid, Model::Ball, Model::HalfSpace}) {
                if (other == s.model) continue;
                s.conversion = std::max(s.conversion, std::abs(dist(convert(x, other), convert(y, other)) - dxy));
            }
            double dwx = dist(w, x), dwy = dist(w, y), dwz = dist(w, z);
            auto gp = [](double a, double b, double c) { return 0.5 * (a + b - c); };
            s.strong = std::max(s.strong, std::exp(-gp(dwx, dwz, dxz)) - std::exp(-gp(dwx, dwy, dxy)) - std::exp(-gp(dwy, dwz, dyz)));
        }
    });

    auto& t = run.table("data.csv", {"model", "dim", "pairs", "max_symmetry", "max_self_distance", "max_triangle_excess",
                                     "max_conversion", "max_strong_excess"});
    ojson per_model = ojson::object();
    for (Model m : models) {
        double sym = 0, self = 0, tri = 0, conv = 0, strong = 0;
        long long total = 0;
        for (const auto& s : slots) {
            if (s.model != m) continue;
            t.rows.push_back({model_name(m), csv_cell(s.n), csv_cell(s.pairs), csv_cell(s.symmetry), csv_cell(s.self),
                              csv_cell(s.triangle), csv_cell(s.conversion), csv_cell(s.strong)});
            sym = std::max(sym, s.symmetry);
            self = std::max(self, s.self);
            tri = std::max(tri, s.triangle);
            conv = std::max(conv, s.conversion);
            strong = std::max(strong, s.strong);
            total += s.pairs;
        }
        std::string name = model_name(m);
        per_model[name] = {{"pairs", total}, {"max_symmetry", sym}, {"max_self_distance", self}, {"max_triangle_excess", tri},
                           {"max_conversion", conv}, {"max_strong_excess", strong}};
        run.ck.le(name + " symmetry", sym, tol);
        run.ck.le(name + " self distance", self, tol);
        run.ck.le(name + " triangle inequality", tri, tol);
        run.ck.le(name + " conversion isometry", conv, tol);
        run.ck.le(name + " strong hyperbolicity", strong, tol);
    }
    run.results["models"] = per_model;
}

void run_model_worked(Run& run) {
    double tol = run.tol.positive("worked", 1e-12);
    Vec v(2);
    auto pt = [&](Model m, double a, double b) {
        v << a, b;
        return make_point(m, v);
    };
    struct Item {
        std::string name;
        double value, expected;
    };
    std::vector<Item> items;
    items.push_back({"ball_distance_origin_to_0.6", dist(origin(Model::Ball, 2), pt(Model::Ball, 0.6, 0)), std::log(2.0)});
    auto a = pt(Model::HalfSpace, 1, 0), b = pt(Model::HalfSpace, M_E, 0);
    items.push_back({"halfspace_distance_1_to_e", dist(a, b), 1.0});
    items.push_back({"busemann_infinity_1_to_e", busemann_halfspace(a, b), 1.0});
    auto ctx = model_context(Model::HalfSpace, 2);
    Vec zero(1);
    zero << 0;
    auto [r, theta] = polar_coords(ctx, make_boundary(Model::HalfSpace, zero), halfspace_infinity(2), b);
    items.push_back({"polar_radius_of_e", r, 1.0});
    items.push_back({"polar_angle_of_e", theta, 0.0});
    auto& t = run.table("data.csv", {"quantity", "value", "expected", "abs_error"});
    for (const auto& it : items) {
        t.rows.push_back({it.name, csv_cell(it.value), csv_cell(it.expected), csv_cell(std::abs(it.value - it.expected))});
        run.results[it.name] = it.value;
        run.ck.near(it.name, it.value, it.expected, tol);
    }
}

// ---------------------------------------------------------------- tree-build

struct BuiltTree {
    std::string name;
    RTree tree;
    double boundary_identity = -1;  // cone only
};

BuiltTree build_recipe(const std::string& name, const Params& p, uint64_t seed) {
    BuiltTree out{name, {}, -1};
    if (name == "cone") {
        int n = int(p.integer("cone_points", 16, 2));
        double scale = p.positive("cone_scale", 0.3);
        UltrametricSpace u;
        u.d.assign(n, std::vector<double>(n, 0));
        for (int i = 0; i < n; ++i) {
            u.labels.push_back(std::to_string(i));
            for (int j = 0; j < n; ++j)
                if (i != j) u.d[i][j] = std::pow(2.0, std::floor(std::log2(double(i ^ j))) + 1) * scale;
        }
        ConeTree c = cone_build(u, 0, {0.5, 2.5});
        double worst = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) worst = std::max(worst, std::abs(c.hamenstadt_at_infinity(i, j) - u.d[i][j]) / u.d[i][j]);
        out.tree = c.tree;
        out.boundary_identity = worst;
    } else if (name == "stapled") {
        std::mt19937_64 rng(seed);
        int k = int(p.integer("staple_trees", 3, 2));
        StaplePlan plan;
        for (int i = 0; i < k; ++i) plan.trees.push_back(random_tree(rng, 12, 0.1, 2.0));
        for (int i = 0; i + 1 < k; ++i)
            plan.staples.push_back({i, i + 1, {TreePoint::at_vertex(5)}, {TreePoint::at_vertex(3)}});
        out.tree = staple_build(plan).tree;
    } else if (name == "pure-schottky") {
        std::vector<Factor> f{factor_cyclic(3, 1), factor_cyclic(3, 1), factor_integer(0.7)};
        if (p.has("schottky_factors")) f = parse_factors(p, "schottky_factors");
        out.tree = pure_schottky_tree(f, int(p.integer("max_length", 3, 1))).tree;
    } else if (name == "geometric-product") {
        RTree y;
        y.add_vertex();
        y.add_edge(0, y.add_vertex(), 1);
        y.finalize();
        auto act = geometric_product_action(y, TreePoint::on_edge(0, 0.25), {TreePoint::at_vertex(0), TreePoint::at_vertex(1)},
                                            {factor_cyclic(2, 0), factor_cyclic(3, 0)});
        out.tree = geometric_product_tree(act, int(p.integer("max_length", 3, 1)) + 1).tree;
    } else {
        invalid(p.field("trees"), "unknown tree '" + name + "'");
    }
    return out;
}

void run_tree_build(Run& run) {
    const auto& p = run.params;
    auto names = p.strings("trees", {"cone", "stapled", "pure-schottky", "geometric-product"});
    long long quads = p.integer("quadruples", 10000, 1);
    double tol = run.tol.positive("defect", 1e-12);
    double id_tol = run.tol.positive("boundary_identity", 1e-12);
    std::vector<BuiltTree> trees(names.size());
    std::vector<double> defect(names.size(), 0);
    parallel_for(int(names.size()), run.jobs, [&](int i) {
        trees[i] = build_recipe(names[i], p, sub_seed(run.seed, 2 * i));
        std::mt19937_64 rng(sub_seed(run.seed, 2 * i + 1));
        const RTree& t = trees[i].tree;
        double worst = 0;
        for (long long q = 0; q < quads; ++q) {
            TreePoint x = random_tree_point(rng, t), y = random_tree_point(rng, t), z = random_tree_point(rng, t),
                      w = random_tree_point(rng, t);
            worst = std::max(worst, four_point_defect(t.dist(x, y), t.dist(x, z), t.dist(x, w), t.dist(y, z), t.dist(y, w),
                                                      t.dist(z, w)));
        }
        defect[i] = worst;
    });
    auto& tab = run.table("data.csv", {"tree", "vertices", "edges", "total_length", "quadruples", "max_defect",
                                       "boundary_identity"});
    ojson res = ojson::object();
    for (size_t i = 0; i < names.size(); ++i) {
        const auto& t = trees[i].tree;
        tab.rows.push_back({names[i], csv_cell(t.vertex_count()), csv_cell(t.edge_count()), csv_cell(t.total_length()),
                            csv_cell(quads), csv_cell(defect[i]),
                            trees[i].boundary_identity >= 0 ? csv_cell(trees[i].boundary_identity) : ""});
        ojson r = {{"vertices", t.vertex_count()}, {"edges", t.edge_count()}, {"max_defect", defect[i]}};
        run.ck.le(names[i] + " four-point defect", defect[i], tol);
        if (trees[i].boundary_identity >= 0) {
            r["boundary_identity"] = trees[i].boundary_identity;
            run.ck.le(names[i] + " boundary identity", trees[i].boundary_identity, id_tol);
        }
        res[names[i]] = r;
    }
    run.results["trees"] = res;
    run.results["quadruples"] = quads;
}

// ---------------------------------------------------------------- bim

struct BimCase {
    std::string name;
    BimConfig cfg;
    std::vector<int> sigma;
};

BimCase bim_case(const std::string& name, double lambda, const Params& p, uint64_t seed) {
    BimCase c{name, {}, {}};
    c.cfg.lambda = lambda;
    if (name == "tripod") {
        RTree t;
        t.add_vertex();
        for (int i = 0; i < 3; ++i) t.add_edge(0, t.add_vertex(), 1.0);
        t.finalize();
        std::vector<TreePoint> pts;
        for (int v = 0; v < 4; ++v) pts.push_back(TreePoint::at_vertex(v));
        c.cfg = bim_config(t, pts, lambda);
        c.sigma = {0, 2, 3, 1};  // rotation of the legs
    } else if (name == "f2-ball") {
        int n = int(p.integer("ball_points", 10, 2));
        auto act = pure_schottky_action({factor_integer(1), factor_integer(1)});
        OrbitCutoff cut;
        cut.max_length = 1;
        while (true) {
            auto orbit = orbit_enumerate(act, cut);
            if (int(orbit.size()) >= n) {
                orbit.resize(n);
                c.cfg.d.assign(n, std::vector<double>(n, 0));
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) c.cfg.d[i][j] = act.dist(orbit[i].word, orbit[j].word);
                // swapping the generators, restricted to the points it keeps in the ball
                for (int i = 0; i < n; ++i) {
                    Word w = orbit[i].word;
                    for (auto& l : w) l.factor = 1 - l.factor;
                    int target = -1;
                    for (int j = 0; j < n; ++j)
                        if (orbit[j].word == w) target = j;
                    c.sigma.push_back(target);
                }
                break;
            }
            ++cut.max_length;
        }
    } else if (name == "random-tree") {
        int n = int(p.integer("tree_points", 20, 2));
        std::mt19937_64 rng(seed);
        RTree t = random_tree(rng, n, p.positive("edge_min", 0.1), p.positive("edge_max", 1.0));
        std::vector<TreePoint> pts;
        for (int v = 0; v < n; ++v) pts.push_back(TreePoint::at_vertex(v));
        c.cfg = bim_config(t, pts, lambda);
        // exchange of two points is a partial isometry
        c.sigma.assign(n, -1);
        c.sigma[0] = n - 1;
        c.sigma[n - 1] = 0;
    } else {
        invalid(p.field("cases"), "unknown case '" + name + "'");
    }
    return c;
}

void run_bim(Run& run) {
    const auto& p = run.params;
    auto cases = p.strings("cases", {"tripod", "f2-ball", "random-tree"});
    auto lambdas = p.numbers("lambdas", {M_E, 2.0});
    for (size_t i = 0; i < lambdas.size(); ++i)
        if (!(lambdas[i] > 1)) invalid(p.field("lambdas"), "every lambda must exceed 1");
    double id_tol = run.tol.positive("identity", 1e-8);
    double eq_tol = run.tol.positive("equivariance", 1e-7);
    struct Out {
        std::string name;
        double lambda;
        int points = 0, negative = 0, positive = 0;
        double identity = 0, equivariance = 0, lorentz = 0;
    };
    std::vector<Out> outs(cases.size() * lambdas.size());
    parallel_for(int(outs.size()), run.jobs, [&](int i) {
        const auto& name = cases[i / lambdas.size()];
        double lambda = lambdas[i % lambdas.size()];
        auto c = bim_case(name, lambda, p, sub_seed(run.seed, i / lambdas.size()));
        auto emb = embed(c.cfg);
        auto m = represent_isometry(c.cfg, emb, c.sigma);
        outs[i] = {name, lambda, c.cfg.size(), emb.form.negative, emb.form.positive, emb.identity_residual(c.cfg),
                   equivariance_residual(emb, m, c.sigma), m.lorentz_defect()};
    });
    auto& t = run.table("data.csv", {"case", "lambda", "points", "negative", "positive", "identity_residual",
                                     "equivariance_residual", "lorentz_defect"});
    ojson res = ojson::array();
    for (const auto& o : outs) {
        t.rows.push_back({o.name, csv_cell(o.lambda), csv_cell(o.points), csv_cell(o.negative), csv_cell(o.positive),
                          csv_cell(o.identity), csv_cell(o.equivariance), csv_cell(o.lorentz)});
        res.push_back({{"case", o.name}, {"lambda", o.lambda}, {"points", o.points}, {"signature", {o.positive, o.negative}},
                       {"identity_residual", o.identity}, {"equivariance_residual", o.equivariance}});
        std::string tag = o.name + " lambda=" + csv_cell(o.lambda);
        run.ck.le(tag + " identity", o.identity, id_tol);
        run.ck.truth(tag + " signature (m-1,1)", o.negative == 1 && o.positive == o.points - 1);
        run.ck.le(tag + " equivariance", o.equivariance, eq_tol);
    }
    run.results["cases"] = res;
}

// ---------------------------------------------------------------- poincare

void run_poincare(Run& run) {
    const auto& p = run.params;
    auto& t = run.table("data.csv", {"section", "item", "quantity", "value", "lo", "hi", "expected"});
    auto row = [&](const std::string& sec, const std::string& item, const std::string& q, double v, double lo, double hi,
                   double expected) {
        t.rows.push_back({sec, item, q, csv_cell(v), csv_cell(lo), csv_cell(hi), csv_cell(expected)});
    };
    const double nan = std::nan("");

    ojson exact = ojson::array();
    double exact_tol = run.tol.positive("exact", 1e-10);
    for (const auto& s : p.list("schottky")) {
        auto factors = parse_factors(s, "factors");
        std::string label = s.str("label", "product");
        auto ps = schottky_poincare_set(factors);
        ojson r = {{"label", label}, {"delta_exact", ps.delta}, {"set", ps.set}, {"divergence_type", ps.divergence_type},
                   {"criterion_at_root", ps.criterion_at_root}};
        double expected = nan;
        if (s.has("expected")) {
            expected = s.num("expected", 0);
            r["expected"] = expected;
            run.ck.near(label + " exact exponent", ps.delta, expected, exact_tol);
        }
        if (s.flag("require_divergence_type", false)) run.ck.truth(label + " divergence type", ps.divergence_type);
        row("schottky", label, "delta", ps.delta, ps.delta, ps.delta, expected);
        exact.push_back(r);
    }
    if (!exact.empty()) run.results["schottky"] = exact;

    if (p.has("fit")) {
        auto f = p.sub("fit");
        auto factors = parse_factors(f, "factors");
        double rho_max = f.positive("max_norm", 12);
        OrbitCutoff cut;
        cut.max_norm = rho_max;
        cut.cap = size_t(f.integer("cap", 5'000'000, 1));
        auto prof = build_profile(orbit_norms(pure_schottky_action(factors), cut));
        auto fit = exponent_estimate(prof, rho_max);
        ojson r = {{"orbit_points", prof.norms.size()},
                   {"delta_fit", fit.delta.value},
                   {"band", {fit.delta.lo, fit.delta.hi}},
                   {"slope_se", fit.slope_se},
                   {"window", {fit.window_lo, fit.window_hi}}};
        double expected = nan;
        if (f.has("expected")) {
            expected = f.num("expected", 0);
            double rel = run.tol.positive("fit_relative", 0.05);
            r["expected"] = expected;
            r["relative_error"] = std::abs(fit.delta.value - expected) / expected;
            run.ck.le("fit within relative tolerance", std::abs(fit.delta.value - expected) / expected, rel);
            if (f.flag("band_must_cover", true)) run.ck.truth("band covers the exact exponent", fit.delta.contains(expected));
        }
        row("fit", "orbit", "delta", fit.delta.value, fit.delta.lo, fit.delta.hi, expected);
        auto& c = run.table("counting.csv", {"rho", "count"});
        for (int i = 0; i <= 100; ++i) {
            double rho = rho_max * i / 100;
            c.rows.push_back({csv_cell(rho), csv_cell(prof.count(rho))});
        }
        run.results["fit"] = r;
    }

    ojson growth = ojson::array();
    for (const auto& g : p.list("growth")) {
        std::string group = g.str("group", "");
        int radius = int(g.integer("radius", 20, 1));
        auto fit = growth_rate(group, radius);
        ojson r = {{"group", group}, {"radius", radius}, {"alpha", fit.alpha.value}, {"band", {fit.alpha.lo, fit.alpha.hi}},
                   {"ball", fit.ball.back()}};
        if (g.has("alpha_range")) {
            auto range = g.numbers("alpha_range", {});
            if (range.size() != 2) invalid(g.field("alpha_range"), "needs [lo, hi]");
            run.ck.within(group + " growth exponent", fit.alpha.value, range[0], range[1]);
        }
        row("growth", group, "alpha", fit.alpha.value, fit.alpha.lo, fit.alpha.hi, nan);
        growth.push_back(r);
    }
    if (!growth.empty()) run.results["growth"] = growth;

    ojson bounds = ojson::array();
    for (const auto& b : p.list("bounds")) {
        int d = int(b.integer("dim", 1, 1));
        int k = int(b.integer("k", 1000, 1));
        std::string group = "Z^" + std::to_string(d);
        auto norms = translation_lattice_norms(d, k);
        double rho_max = dist_from_half_chord(0.5 * k);
        auto fit = exponent_estimate(build_profile(norms), rho_max);
        auto g = growth_rate(group, int(b.integer("growth_radius", 60, 1)));
        auto chk = parabolic_bound_check(group, fit, g);
        ojson r = {{"group", group},
                   {"delta", fit.delta.value},
                   {"delta_band", {fit.delta.lo, fit.delta.hi}},
                   {"alpha", g.alpha.value},
                   {"alpha_band", {g.alpha.lo, g.alpha.hi}},
                   {"pass", chk.pass}};
        if (b.has("expected_delta")) {
            double e = b.num("expected_delta", 0);
            r["expected_delta"] = e;
            run.ck.truth(group + " delta band covers " + csv_cell(e), fit.delta.contains(e));
        }
        run.ck.truth(group + " delta >= alpha/2", chk.pass);
        row("bounds", group, "delta", fit.delta.value, fit.delta.lo, fit.delta.hi, b.num("expected_delta", nan));
        row("bounds", group, "alpha", g.alpha.value, g.alpha.lo, g.alpha.hi, nan);
        bounds.push_back(r);
    }
    if (!bounds.empty()) run.results["bounds"] = bounds;
    if (exact.empty() && !p.has("fit") && growth.empty() && bounds.empty())
        invalid(p.field("schottky"), "poincare needs at least one of schottky, fit, growth, bounds");
}

// ---------------------------------------------------------------- group-action

void run_group_action(Run& run) {
    const auto& p = run.params;
    std::string family = p.str("family", "geometric");
    int trunc = int(p.integer("truncation", family == "factorial" ? 30 : 60, 1));
    EdelsteinSpec spec;
    if (family == "geometric") spec = edelstein_geometric(trunc);
    else if (family == "factorial") spec = edelstein_factorial(trunc);
    else invalid(p.field("family"), "expected geometric or factorial");
    int kmin = int(p.integer("k_min", 1, 1)), kmax = int(p.integer("k_max", 10, 1));
    if (kmax < kmin) invalid(p.field("k_max"), "must be >= k_min");
    if (family == "factorial" && kmax > 20) invalid(p.field("k_max"), "k! overflows beyond 20");
    if (family == "geometric" && kmax > 62) invalid(p.field("k_max"), "2^k overflows beyond 62");
    double tail_tol = run.tol.positive("tail", 1e-9);

    auto& t = run.table("data.csv", {"k", "n", "squared_displacement", "tail_bound", "squared_distance_form", "hyperbolic"});
    ojson rows = ojson::array();
    std::vector<double> sq, form;
    for (int k = kmin; k <= kmax; ++k) {
        long long n = 1;
        if (family == "geometric") n = 1LL << k;
        else
            for (int j = 2; j <= k; ++j) n *= j;
        auto d = edelstein_displacement(spec, n, tail_tol);
        t.rows.push_back({csv_cell(k), csv_cell(n), csv_cell(d.squared), csv_cell(d.tail_bound), csv_cell(d.dist_form),
                          csv_cell(d.hyperbolic)});
        rows.push_back({{"k", k}, {"n", n}, {"squared", d.squared}, {"dist_form", d.dist_form}, {"hyperbolic", d.hyperbolic}});
        sq.push_back(d.squared);
        form.push_back(d.dist_form);
    }
    run.results["family"] = family;
    run.results["table"] = rows;
    if (p.flag("expect_decreasing", false)) {
        bool dec = true;
        for (size_t i = 1; i < sq.size(); ++i) dec = dec && sq[i] < sq[i - 1];
        run.ck.truth("displacement strictly decreasing", dec);
    }
    if (p.has("final_below")) run.ck.le("displacement at k_max", sq.back(), p.num("final_below", 0));
    if (p.has("distance_form_expected")) {
        double e = p.num("distance_form_expected", 0);
        double tol = run.tol.positive("distance_form", 1e-9);
        double worst = 0;
        for (double f : form) worst = std::max(worst, std::abs(f - e));
        run.ck.le("squared-distance form matches " + csv_cell(e), worst, tol);
    }
}

// ---------------------------------------------------------------- measure

void run_patterson_sullivan(Run& run) {
    const auto& p = run.params;
    auto act = pure_schottky_action(parse_factors(p, "factors"));
    auto mu = schottky_cylinder_measure(act);
    int levels = int(p.integer("levels", 10, 1));
    int export_level = int(p.integer("export_level", 4, 1));
    OrbitCutoff cut;
    cut.max_length = levels;
    auto orbit = orbit_enumerate(act, cut);
    std::vector<double> level_sum(levels + 1, 0), level_err(levels + 1, 0);
    std::vector<long long> level_count(levels + 1, 0);
    bool expect = p.has("cylinder_expectation");
    double first = 0, ratio = 0;
    if (expect) {
        auto e = p.sub("cylinder_expectation");
        first = e.positive("first", 1);
        ratio = e.positive("ratio", 1);
    }
    auto& t = run.table("data.csv", {"support_id", "level", "weight"});
    for (const auto& e : orbit) {
        int n = act.group.generator_length(e.word);
        if (n == 0) continue;
        double c = mu.cylinder(e.word);
        level_sum[n] += c;
        ++level_count[n];
        if (expect) {
            double want = first * std::pow(ratio, n - 1);
            level_err[n] = std::max(level_err[n], std::abs(c - want) / want);
        }
        if (n == export_level) t.rows.push_back({support_id(e.word), csv_cell(n), csv_cell(c)});
    }
    double cyl_tol = run.tol.positive("cylinder", 1e-12);
    ojson lv = ojson::array();
    double worst_err = 0, worst_sum = 0;
    for (int n = 1; n <= levels; ++n) {
        lv.push_back({{"level", n}, {"cylinders", level_count[n]}, {"total", level_sum[n]}, {"max_relative_error", level_err[n]}});
        worst_err = std::max(worst_err, level_err[n]);
        worst_sum = std::max(worst_sum, std::abs(level_sum[n] - 1));
    }
    run.results["delta"] = mu.delta;
    run.results["levels"] = lv;
    if (expect) run.ck.le("level-n cylinder masses", worst_err, cyl_tol);
    run.ck.le("levels sum to 1", worst_sum, cyl_tol * 10);

    auto sh = p.sub("shadow");
    double sigma = sh.num("sigma", 0);
    auto rep = shadow_lemma_check(act, [&](const Word& g, double s) { return mu.shadow(g, s); }, mu.delta, sigma,
                                  sh.positive("rho_max", 8));
    run.results["shadow"] = {{"sigma", sigma}, {"elements", rep.elements}, {"min_ratio", rep.min_ratio},
                             {"max_ratio", rep.max_ratio}, {"spread", rep.spread}};
    run.ck.le("shadow-lemma spread", rep.spread, sh.positive("spread_max", 3));

    auto cf = p.sub("conformality");
    auto conf = conformality_check(mu, int(cf.integer("samples", 500, 1)), sub_seed(run.seed, 0));
    run.results["conformality"] = {{"samples", conf.samples}, {"max_residual", conf.max_residual},
                                   {"max_additivity", conf.max_additivity}};
    run.ck.le("conformality residual", conf.max_residual, run.tol.positive("conformality", 1e-9));
}

std::string point_label(const GmfPoint& g, int i) { return g.label.empty() ? "p" + std::to_string(i) : g.label; }

void run_global_formula(Run& run) {
    const auto& p = run.params;
    auto mu = schottky_cylinder_measure(pure_schottky_action(parse_factors(p, "factors")));
    auto ctx = global_measure_context(mu);
    int count = int(p.integer("samples", 40, 1));
    double t_max = p.positive("t_max", 15);
    auto samples = gmf_samples(ctx, count, run.seed);
    auto th = choose_theta(ctx, samples, t_max, p.positive("monotone_cap", 10));
    double sigma_cap = p.positive("sigma_cap", 3), c_cap = p.positive("constant_cap", 100);
    auto rep = global_formula_verify(ctx, samples, t_max, p.positive("t_step", 0.05), sigma_cap, c_cap);
    run.results["delta"] = mu.delta;
    run.results["cusps"] = ctx.cusps;
    run.results["t0"] = ctx.t0;
    run.results["theta"] = th.theta;
    run.results["monotone_constant"] = th.constant;
    run.results["sigma"] = rep.sigma;
    run.results["constant"] = rep.constant;
    run.results["worst_point"] = rep.worst_point;
    run.results["worst_t"] = rep.worst_t;
    run.results["lipschitz_defect"] = rep.lipschitz_defect;
    run.results["evaluations"] = rep.evaluations;
    run.ck.le("sandwich slack sigma", rep.sigma, sigma_cap);
    run.ck.le("sandwich constant", rep.constant, c_cap);
    run.ck.le("excursion 1-Lipschitz", rep.lipschitz_defect, run.tol.positive("lipschitz", 1e-9));

    // support-id, weight: syllable cylinders of the first levels
    auto& t = run.table("data.csv", {"support_id", "level", "weight"});
    OrbitCutoff cut;
    cut.max_length = int(p.integer("export_level", 2, 1));
    cut.max_norm = p.positive("export_norm", 6);
    for (const auto& e : orbit_enumerate(mu.action, cut))
        if (!e.word.empty())
            t.rows.push_back({support_id(e.word), csv_cell(int(e.word.size())), csv_cell(mu.syllable(e.word))});

    auto& tr = run.table("traces.csv", {"point", "t", "m", "b", "ball"});
    int traced = int(std::min<long long>(p.integer("trace_points", 6, 0), (long long)samples.size()));
    for (int i = 0; i < traced; ++i)
        for (double tt = 0.25; tt <= t_max + 1e-12; tt += 0.25)
            tr.rows.push_back({point_label(samples[i], i), csv_cell(tt), csv_cell(ctx.m(samples[i], tt)),
                               csv_cell(ctx.b(samples[i], tt)), csv_cell(ctx.ball(samples[i], tt))});
}

CuspLaw parse_law(const Params& l) {
    CuspLaw law;
    std::string kind = l.str("kind", "power");
    if (kind == "power") {
        law.kind = CuspLaw::Kind::Power;
        law.a = l.positive("a", 1);
    } else if (kind == "power-log") {
        law.kind = CuspLaw::Kind::PowerLog;
        law.a = l.positive("a", 1);
        law.b = l.num("b", 0);
    } else if (kind == "staircase") {
        law.kind = CuspLaw::Kind::Staircase;
        law.base = l.positive("base", 2);
        law.c = l.positive("c", 1);
        law.p = l.positive("p", 1);
    } else if (kind == "counting") {
        law.kind = CuspLaw::Kind::Counting;
        law.spec = parse_factor(l.sub("factor")).counting;
    } else if (kind == "tabulated") {
        law.kind = CuspLaw::Kind::Tabulated;
        law.table = l.numbers("table", {});
    } else {
        invalid(l.field("kind"), "expected power, power-log, staircase, counting or tabulated");
    }
    return law;
}

void run_doubling(Run& run) {
    const auto& p = run.params;
    auto& t = run.table("data.csv", {"law", "delta", "doubling", "exact_dimensional", "dexp_lower", "dexp_upper",
                                     "sigma_delta_partial", "sigma_delta_converges", "hlog_partial", "hlog_converges"});
    ojson res = ojson::array();
    auto cases = p.list("laws");
    if (cases.empty()) invalid(p.field("laws"), "needs at least one law");
    for (const auto& c : cases) {
        auto law = parse_law(c.sub("law"));
        double delta = c.positive("delta", 1);
        std::string label = c.str("label", law.describe());
        auto r = doubling_and_dimension_tests(law, delta, c.flag("tree_lineal", true), int(c.integer("terms", 200, 10)));
        std::string dbl = tri_name(r.doubling), ex = tri_name(r.exact_dimensional);
        t.rows.push_back({label, csv_cell(delta), dbl, ex, csv_cell(r.dexp_lower), csv_cell(r.dexp_upper),
                          csv_cell(r.sigma_delta_partial), r.sigma_delta_converges ? "1" : "0", csv_cell(r.hlog_partial),
                          r.hlog_converges ? "1" : "0"});
        res.push_back({{"label", label}, {"law", law.describe()}, {"delta", delta}, {"doubling", dbl},
                       {"exact_dimensional", ex}, {"dexp", {r.dexp_lower, r.dexp_upper}}, {"witness", r.witness}});
        auto expect = c.sub("expect");
        if (expect.has("doubling"))
            run.ck.add(label + " doubling", dbl == expect.str("doubling", ""), {{"value", dbl}, {"expected", expect.str("doubling", "")}});
        if (expect.has("exact_dimensional"))
            run.ck.add(label + " exact dimensional", ex == expect.str("exact_dimensional", ""),
                       {{"value", ex}, {"expected", expect.str("exact_dimensional", "")}});
    }
    run.results["laws"] = res;
}

void run_measure(Run& run) {
    std::string mode = run.params.str("mode", "");
    if (mode == "patterson-sullivan") run_patterson_sullivan(run);
    else if (mode == "global-formula") run_global_formula(run);
    else if (mode == "doubling") run_doubling(run);
    else invalid(run.params.field("mode"), "expected patterson-sullivan, global-formula or doubling");
}

// ---------------------------------------------------------------- partition

void run_partition(Run& run) {
    const auto& p = run.params;
    auto st = p.sub("structure");
    std::string type = st.str("type", "");
    PartitionStructure ps;
    if (type == "free-group") {
        int rank = int(st.integer("rank", 2, 1));
        ps = free_group_structure(pure_schottky_action(std::vector<Factor>(rank, factor_integer(st.positive("r", 1)))),
                                  int(st.integer("depth", 12, 0)));
    } else if (type == "uniform") {
        ps = uniform_structure(int(st.integer("branching", 2, 1)), st.positive("ratio", 0.5), int(st.integer("depth", 12, 0)));
    } else if (type == "tree") {
        ps = structure_from_json(st.raw("tree_data"));
    } else {
        invalid(st.field("type"), "expected free-group, uniform or tree");
    }
    double s = p.positive("s", 1);
    auto v = validate(ps);
    run.results["nodes"] = ps.nodes.size();
    run.results["depth"] = ps.depth;
    run.results["kappa"] = ps.kappa;
    run.results["lambda"] = ps.lambda;
    run.results["validation"] = {{"valid", v.valid}, {"clause", v.clause}, {"detail", v.detail}};
    run.ck.truth("structure valid", v.valid);
    if (!v.valid) return;
    auto m = thick_substructure_measure(ps, s);
    auto a = ahlfors_check(m, ps);
    run.results["s"] = s;
    run.results["c"] = m.c;
    run.results["retained_nodes"] = m.retained_nodes;
    run.results["min_branching"] = m.min_branching;
    run.results["regularity"] = {{"low", m.regularity_low}, {"high", m.regularity_high}, {"holds", m.regular}};
    run.results["consistency_defect"] = m.consistency;
    run.results["ahlfors"] = {{"k", a.k},           {"C1", a.c1},
                              {"C2", a.c2},         {"C1_unnormalised", a.c1_raw},
                              {"C2_unnormalised", a.c2_raw}, {"C1_envelope", a.c1_bound},
                              {"C2_envelope", a.c2_bound},   {"balls", a.samples},
                              {"sandwich", a.sandwich},      {"hausdorff_lower_bound", a.hd_lower}};
    run.ck.truth("regularity c D^s <= mu < D^s at every retained node", m.regular);
    run.ck.truth("retained children are initial segments", m.initial_segments);
    run.ck.le("Kolmogorov consistency", m.consistency, run.tol.positive("consistency", 1e-12));
    run.ck.ge("C1 within envelope", a.c1_raw, a.c1_bound);
    run.ck.le("C2 within envelope", a.c2_raw, a.c2_bound);
    run.ck.truth("ball sandwich", a.sandwich);
    run.ck.le("leaf mass sums to 1", std::abs(a.leaf_sum - 1), run.tol.positive("leaf_sum", 1e-12));

    auto& t = run.table("data.csv", {"support_id", "depth", "weight"});
    for (size_t i = 0; i < m.leaves.support.size(); ++i)
        t.rows.push_back({m.leaves.support[i], csv_cell(ps.depth), csv_cell(m.leaves.weight[i])});
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> k{"model-check", "tree-build", "bim", "poincare", "measure", "partition",
                                            "group-action"};
    return k;
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::CONFIG_INVALID, "cannot open config '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::CONFIG_INVALID, "malformed JSON in '" + path + "': " + e.what());
    }
}

ExperimentOutput run_experiment(const json& config, const RunOptions& opt) {
    if (!config.is_object()) throw Error(ErrorCode::CONFIG_INVALID, "config must be a JSON object");
    Params top(config, "");
    std::string kind = top.str("kind", "");
    const auto& kinds = experiment_kinds();
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) invalid("kind", "unknown kind '" + kind + "'");
    uint64_t seed = opt.seed ? *opt.seed : uint64_t(top.integer("seed", 0, 0));
    static const json empty = json::object();
    Run run{Params(config.contains("params") ? config["params"] : empty, "params"),
            Params(config.contains("tolerances") ? config["tolerances"] : empty, "tolerances"),
            seed,
            std::max(1, opt.jobs),
            {},
            ojson::object(),
            {}};
    for (auto& [k, v] : run.tol.json_value().items())
        if (!v.is_number() || !(v.get<double>() > 0)) invalid("tolerances." + k, "must be a positive number");

    if (kind == "model-check") {
        if (run.params.str("mode", "random") == "worked") run_model_worked(run);
        else run_model_random(run);
    } else if (kind == "tree-build") {
        run_tree_build(run);
    } else if (kind == "bim") {
        run_bim(run);
    } else if (kind == "poincare") {
        run_poincare(run);
    } else if (kind == "measure") {
        run_measure(run);
    } else if (kind == "partition") {
        run_partition(run);
    } else {
        run_group_action(run);
    }

    ExperimentOutput out;
    out.report["experiment"] = top.str("name", "");
    out.report["kind"] = kind;
    out.report["criterion"] = top.integer("criterion", 0, 0);
    out.report["seed"] = seed;
    out.report["results"] = std::move(run.results);
    out.report["assertions"] = run.ck.list;
    out.report["pass"] = run.ck.all;
    out.tables = std::move(run.tables);
    if (out.tables.empty() || out.tables[0].file != "data.csv") out.tables.insert(out.tables.begin(), CsvTable{});
    out.pass = run.ck.all;
    return out;
}

std::vector<CatalogEntry> list_experiments(const std::string& dir, const std::string& filter) {
    namespace fs = std::filesystem;
    std::vector<CatalogEntry> out;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) return out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() != ".json") continue;
        std::string name = e.path().stem().string();
        if (name.find(filter) == std::string::npos) continue;
        CatalogEntry c{name, "", 0, "", e.path().string()};
        try {
            auto j = load_config(c.path);
            c.kind = j.value("kind", "");
            c.criterion = j.value("criterion", 0);
            c.description = j.value("description", "");
        } catch (const std::exception&) {
            c.description = "(unreadable config)";
        }
        out.push_back(std::move(c));
    }
    std::sort(out.begin(), out.end(), [](const CatalogEntry& a, const CatalogEntry& b) { return a.name < b.name; });
    return out;
}

}  // namespace gromov
