#include "gromov/partition.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gromov/error.hpp"

namespace gromov {

namespace {

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

}  // namespace

std::string PartitionStructure::label(int node) const {
    if (node == 0) return "root";
    std::string out;
    for (int v : path(node))
        if (v != 0) out += (out.empty() ? "" : ".") + std::to_string(nodes[v].symbol + 1);
    return out;
}

std::vector<int> PartitionStructure::path(int node) const {
    std::vector<int> out;
    for (int v = node; v >= 0; v = nodes[v].parent) out.push_back(v);
    std::reverse(out.begin(), out.end());
    return out;
}

int PartitionStructure::add(int parent, double diam, double sep) {
    PartitionNode n;
    n.parent = parent;
    n.diam = diam;
    n.sep = sep;
    if (parent >= 0) {
        n.depth = nodes[parent].depth + 1;
        n.symbol = int(nodes[parent].children.size());
        nodes[parent].children.push_back(int(nodes.size()));
    }
    depth = std::max(depth, n.depth);
    nodes.push_back(n);
    return int(nodes.size()) - 1;
}

PartitionStructure uniform_structure(int branching, double ratio, int depth) {
    if (branching < 1 || !(ratio > 0 && ratio < 1) || depth < 0)
        throw Error(ErrorCode::CONFIG_INVALID, "uniform structure needs branching >= 1, ratio in (0,1)");
    PartitionStructure p;
    p.kappa = ratio;
    p.lambda = ratio;
    p.add(-1, 1.0, std::numeric_limits<double>::infinity());
    for (int v = 0; v < int(p.nodes.size()); ++v) {
        if (p.nodes[v].depth == depth) continue;
        double d = p.nodes[v].diam;
        double sep = v == 0 ? std::numeric_limits<double>::infinity() : p.nodes[p.nodes[v].parent].diam;
        for (int a = 0; a < branching; ++a) p.add(v, d * ratio, sep);
    }
    p.depth = depth;
    return p;
}

PartitionStructure free_group_structure(const TreeAction& act, int depth, double s) {
    const auto& fs = act.group.factors;
    if (act.kind != ActionKind::PureSchottky || fs.empty())
        throw Error(ErrorCode::BAD_FACTOR, "cylinder structures need a pure Schottky action");
    for (const auto& f : fs)
        if (f.kind != FactorKind::Integer)
            throw Error(ErrorCode::BAD_FACTOR, "cylinder structures need Integer factors, got " + f.describe());
    std::vector<Letter> steps;
    for (int f = 0; f < int(fs.size()); ++f) {
        steps.push_back({f, 1});
        steps.push_back({f, -1});
    }
    PartitionStructure p;
    std::vector<Word> words{{}};
    std::vector<double> norms{0};
    p.add(-1, 1.0, std::numeric_limits<double>::infinity());
    double lo = 1, hi = 0;
    for (int v = 0; v < int(p.nodes.size()); ++v) {
        if (p.nodes[v].depth == depth) continue;
        int len = act.group.generator_length(words[v]);
        double sep = v == 0 ? std::numeric_limits<double>::infinity() : std::exp(-norms[p.nodes[v].parent]);
        for (const auto& st : steps) {
            Word w = act.group.multiply(words[v], {st});
            if (act.group.generator_length(w) != len + 1) continue;
            double nrm = act.norm(w);
            double ratio = std::exp(norms[v] - nrm);
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
            p.add(v, std::exp(-nrm), sep);
            words.push_back(std::move(w));
            norms.push_back(nrm);
        }
    }
    p.depth = depth;
    p.kappa = lo;
    p.lambda = hi;
    p.s = s;
    return p;
}

PartitionStructure structure_from_json(const nlohmann::json& j) {
    PartitionStructure p;
    try {
        p.kappa = j.at("kappa").get<double>();
        p.lambda = j.at("lambda").get<double>();
        p.s = j.value("s", 0.0);
        const auto& root = j.at("tree");
        std::vector<const nlohmann::json*> todo{&root};
        p.add(-1, root.at("diam").get<double>(), std::numeric_limits<double>::infinity());
        for (int v = 0; v < int(todo.size()); ++v) {
            if (!todo[v]->contains("children")) continue;
            for (const auto& c : todo[v]->at("children")) {
                double sep = c.contains("sep") ? c.at("sep").get<double>()
                             : v == 0        ? std::numeric_limits<double>::infinity()
                                             : p.nodes[p.nodes[v].parent].diam;
                p.add(v, c.at("diam").get<double>(), sep);
                todo.push_back(&c);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CONFIG_INVALID, std::string("partition structure: ") + e.what());
    }
    if (!(p.kappa > 0 && p.kappa < 1 && p.lambda > 0 && p.lambda < 1))
        throw Error(ErrorCode::CONFIG_INVALID, "kappa and lambda must lie in (0,1)");
    return p;
}

nlohmann::json structure_to_json(const PartitionStructure& p, int max_depth) {
    std::vector<nlohmann::json> out(p.nodes.size());
    for (int v = int(p.nodes.size()) - 1; v >= 0; --v) {
        const auto& n = p.nodes[v];
        if (n.depth > max_depth) continue;
        nlohmann::json o;
        o["diam"] = n.diam;
        if (std::isfinite(n.sep)) o["sep"] = n.sep;
        if (n.depth < max_depth && !n.children.empty()) {
            o["children"] = nlohmann::json::array();
            for (int c : n.children) o["children"].push_back(std::move(out[c]));
        }
        out[v] = std::move(o);
    }
    return {{"kappa", p.kappa}, {"lambda", p.lambda}, {"s", p.s}, {"depth", p.depth}, {"tree", out[0]}};
}

ValidationReport validate(const PartitionStructure& p, double tol) {
    ValidationReport r;
    auto fail = [&](int v, const char* clause, std::string detail) {
        r.valid = false;
        r.node = v;
        r.clause = clause;
        r.detail = p.label(v) + ": " + detail;
        return r;
    };
    for (int v = 0; v < int(p.nodes.size()); ++v) {
        const auto& n = p.nodes[v];
        ++r.checked;
        if (!(n.diam > 0) || !std::isfinite(n.diam)) return fail(v, "nesting", "diameter must be positive");
        // children are distinct symbols directly below v: disjoint and nested by construction
        for (int i = 0; i < int(n.children.size()); ++i) {
            const auto& c = p.nodes[n.children[i]];
            if (c.parent != v || c.symbol != i || c.depth != n.depth + 1)
                return fail(n.children[i], "nesting", "child is not a distinct one-symbol extension");
        }
        if (n.children.empty()) continue;
        double thick = 0;
        for (int ci : n.children) {
            const auto& c = p.nodes[ci];
            double ratio = c.diam / n.diam;
            r.worst_low = std::min(r.worst_low, ratio);
            r.worst_high = std::max(r.worst_high, ratio);
            if (v != 0) r.worst_kappa = std::min(r.worst_kappa, c.sep / n.diam);
            if (v != 0 && c.sep < p.kappa * n.diam * (1 - tol))
                return fail(ci, "kappa", "separation " + fmt(c.sep) + " < kappa D = " + fmt(p.kappa * n.diam));
            if (ratio < p.kappa * (1 - tol) || ratio > p.lambda * (1 + tol))
                return fail(ci, "lambda", "D ratio " + fmt(ratio) + " outside [" + fmt(p.kappa) + ", " + fmt(p.lambda) + "]");
            if (p.s > 0) thick += std::pow(c.diam, p.s);
        }
        if (p.s > 0) {
            double q = thick / std::pow(n.diam, p.s);
            r.worst_thickness = std::min(r.worst_thickness, q);
            if (q < 1 - tol) return fail(v, "thickness", "sum D_child^s / D^s = " + fmt(q) + " < 1");
        }
    }
    return r;
}

SubstructureMeasure thick_substructure_measure(const PartitionStructure& p, double s) {
    if (!(s > 0)) throw Error(ErrorCode::OUT_OF_RANGE, "s must be positive");
    PartitionStructure shape = p;
    shape.s = 0;
    auto v = validate(shape);
    if (!v.valid) throw Error(ErrorCode::DEGENERATE, "not a partition structure: " + v.clause + " at " + v.detail);
    int n_nodes = int(p.nodes.size());
    for (int w = 0; w < n_nodes; ++w) {
        const auto& n = p.nodes[w];
        if (n.children.empty()) continue;
        double sum = 0;
        for (int c : n.children) sum += std::pow(p.nodes[c].diam, s);
        if (sum < std::pow(n.diam, s))
            throw Error(ErrorCode::NOT_THICK, p.label(w) + " fails thickness at s = " + fmt(s));
    }

    SubstructureMeasure m;
    m.s = s;
    m.c = 1 - std::pow(p.lambda, s);
    m.weight.assign(n_nodes, 0.0);
    m.retained.assign(n_nodes, -1);
    m.weight[0] = m.c * std::pow(p.nodes[0].diam, s);
    m.regularity_low = std::numeric_limits<double>::infinity();
    m.min_branching = std::numeric_limits<int>::max();
    // parents precede children, so one forward sweep is the level-by-level recursion
    for (int w = 0; w < n_nodes; ++w) {
        double mu = m.weight[w];
        if (mu <= 0) continue;
        const auto& n = p.nodes[w];
        ++m.retained_nodes;
        double ds = std::pow(n.diam, s);
        m.regularity_low = std::min(m.regularity_low, mu / (m.c * ds));
        m.regularity_high = std::max(m.regularity_high, mu / ds);
        if (!(m.c * ds <= mu && mu < ds)) m.regular = false;
        if (n.children.empty()) {
            m.leaves.support.push_back(p.label(w));
            m.leaves.weight.push_back(mu);
            continue;
        }
        double prefix = 0;
        int big_n = 0;
        while (big_n < int(n.children.size()) && !(prefix > mu)) prefix += std::pow(p.nodes[n.children[big_n++]].diam, s);
        if (!(prefix > mu)) throw Error(ErrorCode::NOT_THICK, p.label(w) + ": children cannot carry the mass");
        m.retained[w] = big_n;
        m.min_branching = std::min(m.min_branching, big_n);
        double sum = 0;
        for (int a = 0; a < big_n; ++a) {
            int c = n.children[a];
            m.weight[c] = std::pow(p.nodes[c].diam, s) * mu / prefix;
            sum += m.weight[c];
        }
        m.consistency = std::max(m.consistency, std::abs(mu - sum) / mu);
    }
    if (m.min_branching == std::numeric_limits<int>::max()) m.min_branching = 0;
    // retained children are the first N_w by construction; recheck from the weights
    for (int w = 0; w < n_nodes; ++w) {
        bool seen_zero = false;
        for (int c : p.nodes[w].children) {
            if (m.weight[c] <= 0) seen_zero = true;
            else if (seen_zero) m.initial_segments = false;
        }
    }
    for (double& x : m.leaves.weight) x /= m.weight[0];
    return m;
}

AhlforsReport ahlfors_check(const SubstructureMeasure& mu, const PartitionStructure& p) {
    AhlforsReport r;
    double s = mu.s;
    r.k = std::max(1, int(std::ceil(std::log(p.kappa * p.kappa) / std::log(p.lambda) - 1e-12)));
    r.c1_bound = (1 - std::pow(p.lambda, s)) * std::pow(p.kappa, s * (r.k - 1));
    r.c2_bound = std::pow(p.kappa, -2 * s);
    r.c1 = r.c1_raw = std::numeric_limits<double>::infinity();
    r.leaf_sum = mu.leaves.total();
    double norm = mu.weight[0];
    double r_max = p.kappa * p.nodes[0].diam;
    std::string witness;

    // the closed ball B(z, r) is the cylinder of the first node on z's path with D <= r
    for (int w = 1; w < int(p.nodes.size()); ++w) {
        if (mu.weight[w] <= 0) continue;
        const auto& n = p.nodes[w];
        double lo = n.diam;
        double hi = std::min(p.nodes[n.parent].diam, r_max);
        if (lo > r_max) continue;
        double m = mu.weight[w];
        ++r.samples;
        // mu/r^s peaks at r = D_w and dips as r approaches the top of the interval
        double up = m / std::pow(lo, s), down = m / std::pow(hi, s);
        r.c2_raw = std::max(r.c2_raw, up);
        if (down < r.c1_raw) {
            r.c1_raw = down;
            witness = p.label(w) + " r=" + fmt(hi);
        }
        r.c2 = std::max(r.c2, up / norm);
        r.c1 = std::min(r.c1, down / norm);

        // sandwich P_{n+k} within B within P_n, n the largest index with r < kappa D_n
        auto path = p.path(w);
        for (double rad : {lo, std::sqrt(hi * lo)}) {
            int big_n = -1;
            for (int j = 0; j < int(path.size()); ++j)
                if (rad < p.kappa * p.nodes[path[j]].diam) big_n = j;
            if (big_n < 0) continue;
            int ball = n.depth;
            if (ball < big_n) r.sandwich = false;
            if (big_n + r.k <= p.depth && ball > big_n + r.k) r.sandwich = false;
        }
    }
    if (r.samples == 0) {
        r.c1 = r.c2 = r.c1_raw = r.c2_raw = 0;
        r.pass = true;
        return r;
    }
    r.hd_lower = s;
    const double slack = 1e-12;
    r.pass = r.c1_raw >= r.c1_bound * (1 - slack) && r.c2_raw <= r.c2_bound * (1 + slack) && r.sandwich &&
             std::abs(r.leaf_sum - 1) <= 1e-12;
    if (!r.pass)
        throw Error(ErrorCode::BOUND_FAIL, "Ahlfors envelope fails: C1=" + fmt(r.c1_raw) + " (>= " + fmt(r.c1_bound) +
                                               "), C2=" + fmt(r.c2_raw) + " (<= " + fmt(r.c2_bound) +
                                               "), sandwich=" + (r.sandwich ? "ok" : "broken") + ", witness " + witness);
    return r;
}

}  // namespace gromov
