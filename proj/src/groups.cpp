#include "gromov/groups.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace gromov {

// ---------------------------------------------------------------- factors

namespace {

void bad(const std::string& msg) { throw Error(ErrorCode::BAD_FACTOR, msg); }

}  // namespace

bool Factor::finite() const {
    switch (kind) {
        case FactorKind::Integer:
            return false;
        case FactorKind::Counting:
            return !counting.infinite();
        default:
            return true;
    }
}

bool Factor::valid(int64_t a) const {
    switch (kind) {
        case FactorKind::Integer:
            return true;
        case FactorKind::Counting:
            return a >= 0 && a < counting_place.back();
        default:
            return a >= 0 && a < order;
    }
}

int64_t Factor::mul(int64_t a, int64_t b) const {
    switch (kind) {
        case FactorKind::Integer:
            return a + b;
        case FactorKind::Table:
            return table[a][b];
        case FactorKind::Counting: {
            int64_t out = 0;
            for (int n = 0; n < counting_levels; ++n) {
                int64_t m = counting.mult_at(n);
                int64_t da = (a / counting_place[n]) % m, db = (b / counting_place[n]) % m;
                out += ((da + db) % m) * counting_place[n];
            }
            return out;
        }
        default:
            return (a + b) % order;
    }
}

int64_t Factor::inv(int64_t a) const {
    switch (kind) {
        case FactorKind::Integer:
            return -a;
        case FactorKind::Table:
            for (int b = 0; b < order; ++b)
                if (table[a][b] == 0) return b;
            bad("table element without inverse");
            return 0;
        case FactorKind::Counting: {
            int64_t out = 0;
            for (int n = 0; n < counting_levels; ++n) {
                int64_t m = counting.mult_at(n);
                int64_t da = (a / counting_place[n]) % m;
                out += ((m - da) % m) * counting_place[n];
            }
            return out;
        }
        default:
            return (order - a) % order;
    }
}

double Factor::norm(int64_t a) const {
    switch (kind) {
        case FactorKind::Integer:
            return std::abs(double(a)) * r;
        case FactorKind::Counting: {
            for (int n = counting_levels - 1; n >= 0; --n)
                if ((a / counting_place[n]) % counting.mult_at(n) != 0) return counting.lambda_at(n);
            return 0;
        }
        default:
            return norms[a];
    }
}

int Factor::letter_length(int64_t a) const {
    if (a == 0) return 0;
    return kind == FactorKind::Integer ? int(std::llabs(a)) : 1;
}

int64_t Factor::order_key(int64_t a) const {
    if (kind != FactorKind::Integer) return a;
    return a > 0 ? 2 * a - 1 : 2 * -a;
}

std::vector<int64_t> Factor::elements(double max_norm, int max_len) const {
    std::vector<int64_t> out;
    if (kind == FactorKind::Integer) {
        double kmax = max_len >= 0 ? double(max_len) : kInf;
        if (r > 0) kmax = std::min(kmax, std::floor(max_norm / r + 1e-12));
        if (std::isinf(kmax)) throw Error(ErrorCode::BUDGET_EXCEEDED, "unbounded translation factor needs a cutoff");
        for (int64_t k = 1; k <= int64_t(kmax); ++k) {
            out.push_back(k);
            out.push_back(-k);
        }
        return out;
    }
    if (max_len == 0) return out;
    if (kind == FactorKind::Counting) {
        int levels = std::isinf(max_norm) ? (counting.infinite() ? -1 : int(counting.lambda.size()))
                                          : counting.levels_upto(max_norm + 1e-12);
        if (levels < 0 || levels > counting_levels)
            throw Error(ErrorCode::BUDGET_EXCEEDED, "counting factor cutoff exceeds representable levels");
        for (int64_t a = 1; a < counting_place[levels]; ++a) out.push_back(a);
        return out;
    }
    for (int a = 1; a < order; ++a)
        if (norms[a] <= max_norm + 1e-12) out.push_back(a);
    return out;
}

double Factor::series_minus_one(double s) const {
    switch (kind) {
        case FactorKind::Integer: {
            double q = std::exp(-s * r);
            return q >= 1 ? kInf : 2 * q / (1 - q);
        }
        case FactorKind::Tabulated:
            throw Error(ErrorCode::FACTOR_SERIES_UNKNOWN, "tabulated factor '" + name + "' has no closed-form series");
        case FactorKind::Counting: {
            double total = 0, log_place = 0;
            int n_explicit = int(counting.lambda.size());
            for (int n = 0; n < n_explicit; ++n) {
                int m = counting.mult[n];
                total += (m - 1) * std::exp(log_place - s * counting.lambda[n]);
                log_place += std::log(double(m));
            }
            if (counting.infinite()) {
                int m = counting.tail_mult;
                double q = m * std::exp(-s * counting.tail_step);
                if (q >= 1) return kInf;
                double last = counting.lambda.empty() ? 0 : counting.lambda.back();
                total += (m - 1) * std::exp(log_place - s * (last + counting.tail_step)) / (1 - q);
            }
            return total;
        }
        default: {
            double total = 0;
            for (int a = 1; a < order; ++a) total += std::exp(-s * norms[a]);
            return total;
        }
    }
}

double Factor::exponent() const {
    if (kind == FactorKind::Tabulated)
        throw Error(ErrorCode::FACTOR_SERIES_UNKNOWN, "tabulated factor '" + name + "' has no closed-form series");
    if (kind == FactorKind::Counting && counting.infinite()) return std::log(double(counting.tail_mult)) / counting.tail_step;
    return 0;
}

bool Factor::divergence_type() const {
    if (kind == FactorKind::Integer) return true;
    if (kind == FactorKind::Counting && counting.infinite()) return true;  // geometric tail with ratio 1 at the exponent
    return false;
}

std::string Factor::describe() const {
    std::ostringstream o;
    switch (kind) {
        case FactorKind::Integer:
            o << "Z(r=" << r << ")";
            break;
        case FactorKind::Cyclic:
            o << "Z/" << order;
            break;
        case FactorKind::Table:
            o << "table(" << order << ")";
            break;
        case FactorKind::Counting:
            o << "counting(" << counting.lambda.size() << (counting.infinite() ? "+tail" : "") << ")";
            break;
        case FactorKind::Tabulated:
            o << "tabulated(" << order << ")";
            break;
    }
    return o.str();
}

Factor factor_integer(double r) {
    if (!(r > 0)) bad("translation length must be positive");
    Factor f;
    f.kind = FactorKind::Integer;
    f.r = r;
    f.name = "Z";
    return f;
}

Factor factor_cyclic(const std::vector<double>& norms) {
    int n = int(norms.size());
    if (n < 2) bad("cyclic factor needs order >= 2");
    if (norms[0] != 0) bad("identity must have norm 0");
    for (int a = 1; a < n; ++a)
        if (!(norms[a] >= 0) || std::abs(norms[a] - norms[(n - a) % n]) > 1e-12) bad("cyclic norms must be symmetric and nonnegative");
    Factor f;
    f.kind = FactorKind::Cyclic;
    f.order = n;
    f.norms = norms;
    f.name = "Z/" + std::to_string(n);
    return f;
}

Factor factor_cyclic(int n, double r) {
    if (n < 2) bad("cyclic factor needs order >= 2");
    std::vector<double> norms(n, r);
    norms[0] = 0;
    return factor_cyclic(norms);
}

Factor factor_table(const std::vector<std::vector<int>>& table, const std::vector<double>& norms) {
    int n = int(table.size());
    if (n < 2 || int(norms.size()) != n) bad("table and norms must have the same size >= 2");
    for (int a = 0; a < n; ++a) {
        if (int(table[a].size()) != n) bad("table must be square");
        std::vector<int> seen(n, 0);
        for (int b = 0; b < n; ++b) {
            int c = table[a][b];
            if (c < 0 || c >= n || seen[c]++) bad("table rows must be permutations");
        }
        if (table[0][a] != a || table[a][0] != a) bad("element 0 must be the identity");
    }
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                if (table[table[a][b]][c] != table[a][table[b][c]]) bad("table is not associative");
    Factor f;
    f.kind = FactorKind::Table;
    f.order = n;
    f.table = table;
    f.norms = norms;
    f.name = "table" + std::to_string(n);
    if (norms[0] != 0) bad("identity must have norm 0");
    for (int a = 1; a < n; ++a)
        if (!(norms[a] >= 0) || std::abs(norms[a] - norms[f.inv(a)]) > 1e-12) bad("table norms must be symmetric");
    return f;
}

Factor factor_counting(const CountingSpec& spec) {
    validate_counting_spec(spec);
    Factor f;
    f.kind = FactorKind::Counting;
    f.counting = spec;
    f.name = "counting";
    f.counting_place = {1};
    int n = 0;
    while (true) {
        if (!spec.infinite() && n >= int(spec.lambda.size())) break;
        long long m = spec.mult_at(n);
        if (f.counting_place.back() > (1LL << 62) / m) break;
        f.counting_place.push_back(f.counting_place.back() * m);
        ++n;
    }
    f.counting_levels = n;
    return f;
}

Factor factor_tabulated(const std::vector<double>& norms) {
    Factor f = factor_cyclic(norms);
    f.kind = FactorKind::Tabulated;
    f.name = "tabulated";
    return f;
}

// ---------------------------------------------------------------- words

void FreeProduct::check(const Word& w) const {
    for (const auto& l : w) {
        if (l.factor < 0 || l.factor >= int(factors.size()))
            throw Error(ErrorCode::BAD_FACTOR, "letter references factor " + std::to_string(l.factor));
        if (!factors[l.factor].valid(l.elem))
            throw Error(ErrorCode::BAD_FACTOR, "element " + std::to_string(l.elem) + " not in factor " + std::to_string(l.factor));
    }
}

Word FreeProduct::reduce(const Word& w) const {
    check(w);
    Word out;
    for (const auto& l : w) {
        if (l.elem == 0) continue;
        if (!out.empty() && out.back().factor == l.factor) {
            int64_t m = factors[l.factor].mul(out.back().elem, l.elem);
            out.pop_back();
            if (m != 0) out.push_back({l.factor, m});
        } else {
            out.push_back(l);
        }
    }
    return out;
}

Word FreeProduct::multiply(const Word& a, const Word& b) const {
    Word w = a;
    w.insert(w.end(), b.begin(), b.end());
    return reduce(w);
}

Word FreeProduct::inverse(const Word& w) const {
    check(w);
    Word out;
    for (auto it = w.rbegin(); it != w.rend(); ++it) out.push_back({it->factor, factors[it->factor].inv(it->elem)});
    return reduce(out);
}

int FreeProduct::generator_length(const Word& w) const {
    int n = 0;
    for (const auto& l : reduce(w)) n += factors[l.factor].letter_length(l.elem);
    return n;
}

std::string word_to_string(const Word& w) {
    if (w.empty()) return "e";
    std::ostringstream o;
    for (size_t i = 0; i < w.size(); ++i) o << (i ? " " : "") << "(" << w[i].factor << "," << w[i].elem << ")";
    return o.str();
}

// ---------------------------------------------------------------- actions

double TreeAction::letter_norm(const Letter& l) const {
    if (kind == ActionKind::PureSchottky) return group.factors[l.factor].norm(l.elem);
    return 2 * base.dist(base_o, attach[l.factor]);
}

double TreeAction::norm(const Word& w0) const {
    Word w = group.reduce(w0);
    if (w.empty()) return 0;
    if (kind == ActionKind::PureSchottky) {
        double s = 0;
        for (const auto& l : w) s += group.factors[l.factor].norm(l.elem);
        return s;
    }
    double s = base.dist(base_o, attach[w.front().factor]);
    for (size_t i = 1; i < w.size(); ++i) s += base.dist(attach[w[i - 1].factor], attach[w[i].factor]);
    return s + base.dist(attach[w.back().factor], base_o);
}

TreeAction pure_schottky_action(const std::vector<Factor>& factors) {
    if (factors.empty()) throw Error(ErrorCode::EMPTY_FACTOR, "no factors");
    TreeAction a;
    a.kind = ActionKind::PureSchottky;
    a.group.factors = factors;
    return a;
}

TreeAction geometric_product_action(const RTree& y, const TreePoint& o, const std::vector<TreePoint>& points,
                                    const std::vector<Factor>& groups) {
    if (groups.empty()) throw Error(ErrorCode::EMPTY_FACTOR, "no factors");
    if (points.size() != groups.size()) throw Error(ErrorCode::P_NOT_IN_Y, "need one attachment point per factor");
    TreeAction a;
    a.kind = ActionKind::GeometricProduct;
    a.group.factors = groups;
    a.base = y;
    try {
        y.check_point(o);
        a.base_o = y.canonical(o);
        for (auto& p : points) {
            y.check_point(p);
            a.attach.push_back(y.canonical(p));
        }
    } catch (const Error& e) {
        throw Error(ErrorCode::P_NOT_IN_Y, std::string("point not in the base tree: ") + e.what());
    }
    return a;
}

namespace {

// DFS over reduced words under the cutoffs; visit(word, norm).
template <class Visit>
void orbit_dfs(const TreeAction& act, const OrbitCutoff& cut, Visit&& visit) {
    const auto& fs = act.group.factors;
    size_t count = 0;
    Word w;
    auto bump = [&] {
        if (++count > cut.cap)
            throw Error(ErrorCode::BUDGET_EXCEEDED, "orbit enumeration exceeded " + std::to_string(cut.cap) + " words");
    };
    bool geo = act.kind == ActionKind::GeometricProduct;
    if (geo && std::isinf(cut.max_norm) && cut.max_length < 0)
        throw Error(ErrorCode::BUDGET_EXCEEDED, "geometric product enumeration needs a length cutoff");
    std::vector<std::vector<int64_t>> geo_elems;
    if (geo)
        for (auto& f : fs) geo_elems.push_back(f.elements(kInf, cut.max_length));
    // partial: norm without the return leg (geometric) / full norm (pure)
    std::function<void(double, int)> rec = [&](double partial, int len) {
        int last = w.empty() ? -1 : w.back().factor;
        for (int a = 0; a < int(fs.size()); ++a) {
            if (a == last) continue;
            double step = 0;
            if (geo) step = w.empty() ? act.base.dist(act.base_o, act.attach[a]) : act.base.dist(act.attach[last], act.attach[a]);
            double ret = geo ? act.base.dist(act.attach[a], act.base_o) : 0;
            double budget = cut.max_norm - partial - step - ret;
            if (budget < -1e-12) continue;
            int len_budget = cut.max_length < 0 ? -1 : cut.max_length - len;
            if (len_budget == 0) continue;
            std::vector<int64_t> elems;
            if (geo) {
                for (int64_t e : geo_elems[a])
                    if (len_budget < 0 || fs[a].letter_length(e) <= len_budget) elems.push_back(e);
            } else {
                elems = fs[a].elements(budget, len_budget);
            }
            for (int64_t e : elems) {
                double np = geo ? partial + step : partial + fs[a].norm(e);
                double nn = geo ? np + ret : np;
                if (nn > cut.max_norm + 1e-12) continue;
                w.push_back({a, e});
                bump();
                visit(w, nn);
                rec(np, len + fs[a].letter_length(e));
                w.pop_back();
            }
        }
    };
    bump();
    visit(w, 0.0);
    rec(0.0, 0);
}

}  // namespace

std::vector<OrbitEntry> orbit_enumerate(const TreeAction& action, const OrbitCutoff& cut) {
    std::vector<OrbitEntry> out;
    std::vector<int> lens;
    orbit_dfs(action, cut, [&](const Word& w, double n) { out.push_back({w, n}); });
    const auto& fs = action.group.factors;
    auto glen = [&](const Word& w) {
        int n = 0;
        for (auto& l : w) n += fs[l.factor].letter_length(l.elem);
        return n;
    };
    std::vector<int> len(out.size());
    for (size_t i = 0; i < out.size(); ++i) len[i] = glen(out[i].word);
    std::vector<size_t> idx(out.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](size_t i, size_t j) {
        if (len[i] != len[j]) return len[i] < len[j];
        const Word& a = out[i].word;
        const Word& b = out[j].word;
        for (size_t k = 0; k < std::min(a.size(), b.size()); ++k) {
            if (a[k].factor != b[k].factor) return a[k].factor < b[k].factor;
            int64_t ka = fs[a[k].factor].order_key(a[k].elem), kb = fs[b[k].factor].order_key(b[k].elem);
            if (ka != kb) return ka < kb;
        }
        return a.size() < b.size();
    });
    std::vector<OrbitEntry> sorted;
    sorted.reserve(out.size());
    for (size_t i : idx) sorted.push_back(std::move(out[i]));
    return sorted;
}

std::vector<double> orbit_norms(const TreeAction& action, const OrbitCutoff& cut) {
    std::vector<double> out;
    orbit_dfs(action, cut, [&](const Word&, double n) { out.push_back(n); });
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------- addresses

Word address_expansion(const FreeProduct& g, const WordAddress& a, int reps) {
    Word w = a.prefix;
    for (int i = 0; i < reps; ++i) w.insert(w.end(), a.period.begin(), a.period.end());
    return g.reduce(w);
}

namespace {

// g = u c u^{-1} with c cyclically reduced.
std::pair<Word, Word> cyclic_reduce(const FreeProduct& g, const Word& w0) {
    Word c = g.reduce(w0), u;
    while (c.size() >= 2 && c.front().factor == c.back().factor) {
        Letter a = c.front();
        u = g.multiply(u, {a});
        Word ainv = {{a.factor, g.factors[a.factor].inv(a.elem)}};
        c = g.multiply(g.multiply(ainv, c), {a});
    }
    return {u, c};
}

bool has_infinite_order(const FreeProduct& g, const Word& period) {
    auto [u, c] = cyclic_reduce(g, period);
    if (c.empty()) return false;
    if (c.size() == 1) return g.factors[c[0].factor].kind == FactorKind::Integer;
    return true;
}

template <class F>
double stabilized(F&& value_at, double cap_test_tol = 1e-9) {
    double prev = value_at(8);
    for (int n = 16; n <= 4096; n *= 2) {
        double v = value_at(n);
        if (std::abs(v - prev) <= cap_test_tol) return v;
        prev = v;
    }
    return kInf;
}

}  // namespace

void check_address(const FreeProduct& g, const WordAddress& a) {
    g.check(a.prefix);
    g.check(a.period);
    if (!has_infinite_order(g, a.period))
        throw Error(ErrorCode::NOT_LIMIT_POINT, "period " + word_to_string(a.period) + " has finite order");
}

double address_gromov(const TreeAction& act, const WordAddress& a, const WordAddress& b) {
    check_address(act.group, a);
    check_address(act.group, b);
    const auto& g = act.group;
    return stabilized([&](int n) {
        Word x = address_expansion(g, a, n), y = address_expansion(g, b, n);
        if (x == y) return 0.5 * (act.norm(x) + act.norm(y)) + n;  // never stabilizes
        return 0.5 * (act.norm(x) + act.norm(y) - act.norm(g.multiply(g.inverse(x), y)));
    });
}

double address_word_gromov(const TreeAction& act, const WordAddress& a, const Word& w) {
    check_address(act.group, a);
    const auto& g = act.group;
    double nw = act.norm(w);
    Word winv = g.inverse(w);
    return stabilized([&](int n) {
        Word x = address_expansion(g, a, n);
        return 0.5 * (act.norm(x) + nw - act.norm(g.multiply(winv, x)));
    });
}

double address_busemann(const TreeAction& act, const WordAddress& a, const Word& x, const Word& y) {
    check_address(act.group, a);
    const auto& g = act.group;
    Word xi = g.inverse(x), yi = g.inverse(y);
    double v = stabilized([&](int n) {
        Word z = address_expansion(g, a, n);
        return act.norm(g.multiply(xi, z)) - act.norm(g.multiply(yi, z));
    });
    if (std::isinf(v)) throw Error(ErrorCode::INCONCLUSIVE, "Busemann value did not stabilize");
    return v;
}

bool is_prefix(const Word& g, const Word& h) {
    if (g.size() > h.size()) return false;
    return std::equal(g.begin(), g.end(), h.begin());
}

bool in_cylinder(const TreeAction& act, const Word& g0, const WordAddress& a) {
    check_address(act.group, a);
    Word g = act.group.reduce(g0);
    if (g.empty()) return true;
    size_t need = g.size() + 1;
    int n = 4;
    Word x;
    while ((x = address_expansion(act.group, a, n)).size() < need && n < (1 << 20)) n *= 2;
    Word y = address_expansion(act.group, a, 2 * n);
    return is_prefix(g, x) && is_prefix(g, y);
}

CodedPoint coding_limit_point(const TreeAction& act, const Word& address0, int depth) {
    Word address = act.group.reduce(address0);
    if (depth < 0 || depth > int(address.size()))
        throw Error(ErrorCode::OUT_OF_RANGE, "depth exceeds the address prefix");
    double c = 1;
    if (act.kind == ActionKind::PureSchottky) {
        for (size_t j = 0; j < act.group.factors.size(); ++j) {
            const auto& f = act.group.factors[j];
            auto el = f.kind == FactorKind::Integer ? std::vector<int64_t>{1} : f.elements(kInf, 1);
            for (int64_t e : el)
                if (!(f.norm(e) > 0))
                    throw Error(ErrorCode::NOT_SEPARATED, "factor " + std::to_string(j) + " has a nonidentity element of norm 0");
        }
    } else {
        for (size_t i = 0; i < act.attach.size(); ++i)
            for (size_t j = i + 1; j < act.attach.size(); ++j)
                if (!(act.base.dist(act.attach[i], act.attach[j]) > 0))
                    throw Error(ErrorCode::NOT_SEPARATED, "factors share an attachment point");
        for (auto& p : act.attach) c = std::max(c, std::exp(act.base.dist(act.base_o, p)));
    }
    CodedPoint out;
    out.cylinder.assign(address.begin(), address.begin() + depth);
    out.fitted_c = depth == 0 ? 1 : c;
    out.radius = depth == 0 ? 1 : c * std::exp(-act.norm(out.cylinder));
    return out;
}

// ---------------------------------------------------------------- classification

const char* class_name(IsometryClass c) {
    switch (c) {
        case IsometryClass::Elliptic:
            return "elliptic";
        case IsometryClass::Parabolic:
            return "parabolic";
        case IsometryClass::Loxodromic:
            return "loxodromic";
    }
    return "?";
}

namespace {

Vec real_eigvec_near(const Eigen::EigenSolver<Mat>& es, double target) {
    int best = -1;
    double bd = kInf;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        auto ev = es.eigenvalues()[i];
        double d = std::abs(ev - std::complex<double>(target, 0));
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    Vec v = es.eigenvectors().col(best).real();
    if (v[0] < 0) v = -v;
    return v / v[0];
}

}  // namespace

ModelClassification classify_isometry(const ModelContext& ctx, const LorentzMap& g, int n_max) {
    if (g.m.rows() != ctx.n + 1) throw Error(ErrorCode::SPACE_MISMATCH, "map dimension differs from the context");
    ModelClassification out;
    Vec o = to_hyperboloid(ctx.o);
    // distance from the model origin e0; exact Lorentz products stay on the hyperboloid
    auto d_to = [&](const Vec& v) { return std::asinh(v.tail(v.size() - 1).norm()); };
    {
        Vec v = o;
        for (int n = 1; n <= n_max; ++n) {
            v = g.m * v;
            out.orbit.push_back(d_to(v));
        }
    }
    Mat p = g.m;
    // repeated squaring of a parabolic loses precision like N^4 eps, so stop at N = 2^14
    for (int k = 0; k <= 14; ++k) {
        Vec v = p * o;
        out.doubling.push_back(d_to(v));
        if (out.doubling.back() > 600) break;
        p = p * p;
    }

    Eigen::EigenSolver<Mat> es(g.m);
    double rho = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) rho = std::max(rho, std::abs(es.eigenvalues()[i]));
    double ell = std::log(rho);
    std::ostringstream ev;

    if (ell > 1e-4) {
        out.kind = IsometryClass::Loxodromic;
        out.translation_length = ell;
        Vec plus = real_eigvec_near(es, rho), minus = real_eigvec_near(es, 1 / rho);
        out.attracting = boundary_from_null(plus, ctx.model);
        out.repelling = boundary_from_null(minus, ctx.model);
        double axis = std::acosh(std::max(1.0, std::exp(gromov_product(ctx, *out.attracting, *out.repelling, ctx.o))));
        out.orbit_bound = 2 * axis;
        double worst = 0;
        for (int n = 1; n <= n_max; ++n) worst = std::max(worst, std::abs(out.orbit[n - 1] - n * ell));
        ev << "spectral radius e^" << ell << "; max |d(o,g^n o) - n l| = " << worst << " <= 2 d(o,axis) = " << out.orbit_bound;
        if (worst > out.orbit_bound + 1e-6) throw Error(ErrorCode::INCONCLUSIVE, "loxodromic witness failed: " + ev.str());
        out.evidence = ev.str();
        return out;
    }

    // growth along doubling: ~ 2 log 2 per step for parabolics, bounded for elliptics
    const auto& dd = out.doubling;
    int k = int(dd.size());
    bool grows = k >= 12;
    for (int i = k - 6; grows && i < k; ++i) {
        double inc = dd[i] - dd[i - 1];
        if (std::abs(inc - 2 * std::log(2.0)) > 0.05) grows = false;
    }
    if (grows) {
        out.kind = IsometryClass::Parabolic;
        // the fixed null vector is the degenerate direction of the form on ker(M - I)
        int dim = int(g.m.rows());
        Eigen::JacobiSVD<Mat> svd(g.m - Mat::Identity(dim, dim), Eigen::ComputeFullV);
        std::vector<int> kernel;
        for (int i = 0; i < dim; ++i)
            if (svd.singularValues()[i] < 1e-7) kernel.push_back(i);
        if (kernel.empty()) throw Error(ErrorCode::INCONCLUSIVE, "growth looks parabolic but no fixed vector was found");
        Mat kb(dim, kernel.size());
        for (size_t i = 0; i < kernel.size(); ++i) kb.col(i) = svd.matrixV().col(kernel[i]);
        Mat jk = kb;
        jk.row(0) *= -1;
        Eigen::SelfAdjointEigenSolver<Mat> form(kb.transpose() * jk);
        int best = 0;
        for (int i = 1; i < form.eigenvalues().size(); ++i)
            if (std::abs(form.eigenvalues()[i]) < std::abs(form.eigenvalues()[best])) best = i;
        Vec v = kb * form.eigenvectors().col(best);
        v /= v[0];
        out.fixed = boundary_from_null(v, ctx.model);
        out.fixed_derivative = metric_derivative(ctx, g, *out.fixed);
        out.orbit_bound = kInf;
        ev << "d(o, g^(2^k) o) increments ~ 2 log 2 over the last 6 doublings (last " << dd.back()
           << "); fixed-point derivative " << out.fixed_derivative;
        if (!same_boundary(g.apply(*out.fixed), *out.fixed, 1e-6) || std::abs(out.fixed_derivative - 1) > 1e-6)
            throw Error(ErrorCode::INCONCLUSIVE, "parabolic witness failed: " + ev.str());
        out.evidence = ev.str();
        return out;
    }

    // elliptic: a timelike fixed vector certifies a bounded orbit
    int dim = int(g.m.rows());
    Eigen::JacobiSVD<Mat> svd(g.m - Mat::Identity(dim, dim), Eigen::ComputeFullV);
    std::vector<int> kernel;
    for (int i = 0; i < dim; ++i)
        if (svd.singularValues()[i] < 1e-8) kernel.push_back(i);
    if (!kernel.empty()) {
        Mat kb(dim, kernel.size());
        for (size_t i = 0; i < kernel.size(); ++i) kb.col(i) = svd.matrixV().col(kernel[i]);
        Mat jk = kb;
        jk.row(0) *= -1;
        Eigen::SelfAdjointEigenSolver<Mat> form(kb.transpose() * jk);
        if (form.eigenvalues()[0] < -1e-9) {
            Vec v = normalize_hyperboloid(kb * form.eigenvectors().col(0));
            double r = d_to(v);
            out.kind = IsometryClass::Elliptic;
            out.orbit_bound = 2 * r;
            double mx = *std::max_element(dd.begin(), dd.end());
            if (!out.orbit.empty()) mx = std::max(mx, *std::max_element(out.orbit.begin(), out.orbit.end()));
            ev << "fixed point at distance " << r << " from o; orbit max " << mx << " <= " << out.orbit_bound;
            if (mx > out.orbit_bound + 1e-6) throw Error(ErrorCode::INCONCLUSIVE, "elliptic witness failed: " + ev.str());
            out.evidence = ev.str();
            return out;
        }
    }
    throw Error(ErrorCode::INCONCLUSIVE, "no loxodromic, parabolic, or elliptic witness within budget");
}

TreeClassification classify_isometry(const TreeAction& act, const Word& g0) {
    const auto& grp = act.group;
    TreeClassification out;
    auto [u, c] = cyclic_reduce(grp, g0);
    out.conjugator = u;
    out.core = c;
    std::ostringstream ev;
    ev << "g = u c u^-1 with u = " << word_to_string(u) << ", c = " << word_to_string(c);
    bool lox = false;
    double ell = 0;
    if (c.size() >= 2) {
        ell = act.norm(grp.multiply(c, c)) - act.norm(c);
        lox = ell > 1e-12;
    } else if (c.size() == 1 && act.kind == ActionKind::PureSchottky && grp.factors[c[0].factor].kind == FactorKind::Integer) {
        ell = act.norm(c);
        lox = true;
    }
    if (lox) {
        out.kind = IsometryClass::Loxodromic;
        out.translation_length = ell;
        out.attracting = WordAddress{u, c};
        out.repelling = WordAddress{u, grp.inverse(c)};
        ev << "; l = |c^2| - |c| = " << ell;
    } else {
        out.kind = IsometryClass::Elliptic;
        ev << "; core fixes a point (bounded orbit)";
    }
    out.evidence = ev.str();
    return out;
}

// ---------------------------------------------------------------- Edelstein

namespace {

double inv_factorial(int k) {
    double v = 1;
    for (int i = 2; i <= k; ++i) v /= i;
    return v;
}

}  // namespace

EdelsteinSpec edelstein_factorial(int truncation) {
    EdelsteinSpec s;
    s.a = [](int k) { return inv_factorial(k); };
    s.b = [](int) { return 1.0; };
    s.truncation = truncation;
    s.family = "factorial";
    return s;
}

EdelsteinSpec edelstein_geometric(int truncation) {
    EdelsteinSpec s;
    s.a = [](int k) { return std::ldexp(1.0, -k); };
    s.b = [](int) { return 1.0; };
    s.truncation = truncation;
    s.family = "geometric";
    return s;
}

EdelsteinDisplacement edelstein_displacement(const EdelsteinSpec& spec, long long n, double tail_tol) {
    if (spec.truncation < 1) throw Error(ErrorCode::OUT_OF_RANGE, "truncation must be positive");
    EdelsteinDisplacement out;
    if (n == 0) return out;
    int K = spec.truncation;
    double nn = double(std::llabs(n));
    for (int k = 1; k <= K; ++k) {
        double x = nn * spec.a(k);
        double f = x - std::round(x);
        double b = spec.b(k);
        double s = std::sin(M_PI * f);
        out.squared += 4 * b * b * s * s;
        out.dist_form += b * b * f * f;
    }
    // tails: sum_{k>K} 4 b^2 min(1, (pi n a)^2) and sum_{k>K} b^2 (n a)^2
    double tail_sin = 0, tail_dist = 0;
    if (spec.family == "geometric") {
        double q = nn * std::ldexp(1.0, -K);  // n a_K
        if (M_PI * q / 2 <= 1) {
            tail_sin = 4 * M_PI * M_PI * q * q / 3;
            tail_dist = q * q / 3;
        } else {
            tail_sin = kInf;
        }
    } else if (spec.family == "factorial") {
        double t = nn * inv_factorial(K + 1);
        if (M_PI * t <= 1) {
            double geo = 1 / (1 - 1.0 / ((K + 2.0) * (K + 2.0)));
            tail_sin = 4 * M_PI * M_PI * t * t * geo;
            tail_dist = t * t * geo;
        } else {
            tail_sin = kInf;
        }
    } else {
        double prev = 0;
        for (int k = K + 1; k <= K + 100000; ++k) {
            double b = spec.b(k), x = nn * spec.a(k);
            double term = 4 * b * b * std::min(1.0, M_PI * M_PI * x * x);
            tail_sin += term;
            tail_dist += b * b * x * x;
            if (k > K + 1 && prev > 0 && term / prev < 0.9 && term < 1e-18) {
                tail_sin += term * 9;
                break;
            }
            prev = term;
        }
    }
    out.tail_bound = tail_sin;
    out.dist_form += tail_dist;
    if (!(tail_sin <= tail_tol))
        throw Error(ErrorCode::TAIL_TOO_LARGE, "certified tail " + std::to_string(tail_sin) + " exceeds tolerance; raise the truncation");
    out.hyperbolic = std::acosh(1 + out.squared / 2);
    return out;
}

Similarity edelstein_similarity(const EdelsteinSpec& spec) {
    int K = spec.truncation;
    Similarity s;
    s.scale = 1;
    s.orth = Mat::Zero(2 * K, 2 * K);
    s.shift = Vec::Zero(2 * K);
    for (int k = 1; k <= K; ++k) {
        double th = 2 * M_PI * spec.a(k), b = spec.b(k);
        int i = 2 * (k - 1);
        s.orth(i, i) = std::cos(th);
        s.orth(i, i + 1) = -std::sin(th);
        s.orth(i + 1, i) = std::sin(th);
        s.orth(i + 1, i + 1) = std::cos(th);
        s.shift[i] = b * (1 - std::cos(th));
        s.shift[i + 1] = -b * std::sin(th);
    }
    return s;
}

// ---------------------------------------------------------------- realizations

namespace {

struct CopyTree {
    RTree tree;
    std::map<int64_t, int> vertex_of;  // element -> vertex
};

CopyTree factor_copy(const Factor& f, const std::vector<int64_t>& elems) {
    std::vector<std::vector<double>> d(elems.size(), std::vector<double>(elems.size(), 0));
    for (size_t i = 0; i < elems.size(); ++i)
        for (size_t j = i + 1; j < elems.size(); ++j) d[i][j] = d[j][i] = f.norm(f.mul(f.inv(elems[i]), elems[j]));
    auto real = realize_tree_metric(d);
    CopyTree c;
    c.tree = std::move(real.tree);
    for (size_t i = 0; i < elems.size(); ++i) c.vertex_of[elems[i]] = real.vertex_of[i];
    return c;
}

std::string word_key(const Word& w) { return word_to_string(w); }

}  // namespace

RealizedAction pure_schottky_tree(const std::vector<Factor>& factors, int max_length) {
    TreeAction act = pure_schottky_action(factors);
    OrbitCutoff cut;
    cut.max_length = max_length;
    RealizedAction out;
    out.orbit = orbit_enumerate(act, cut);
    // coset (factor j, representative) -> elements present
    std::map<std::pair<int, std::string>, std::pair<Word, std::vector<int64_t>>> cosets;
    auto coset_of = [&](const Word& w, int j) {
        Word rep = w;
        int64_t h = 0;
        if (!rep.empty() && rep.back().factor == j) {
            h = rep.back().elem;
            rep.pop_back();
        }
        return std::make_pair(rep, h);
    };
    for (const auto& e : out.orbit)
        for (int j = 0; j < int(factors.size()); ++j) {
            auto [rep, h] = coset_of(e.word, j);
            auto& c = cosets[{j, word_key(rep)}];
            c.first = rep;
            c.second.push_back(h);
        }
    StaplePlan plan;
    std::map<std::pair<int, std::string>, int> copy_index;
    std::vector<std::map<int64_t, int>> copy_vertex;
    for (auto& [key, c] : cosets) {
        if (c.second.size() < 2 && !(out.orbit.size() == 1 && key.first == 0)) continue;
        auto elems = c.second;
        std::sort(elems.begin(), elems.end());
        CopyTree ct = factor_copy(factors[key.first], elems);
        copy_index[key] = int(plan.trees.size());
        plan.trees.push_back(std::move(ct.tree));
        copy_vertex.push_back(std::move(ct.vertex_of));
    }
    // staples: at each group element, between all copies containing it
    std::vector<std::vector<std::pair<int, int>>> at(out.orbit.size());  // (copy, vertex)
    for (size_t i = 0; i < out.orbit.size(); ++i) {
        for (int j = 0; j < int(factors.size()); ++j) {
            auto [rep, h] = coset_of(out.orbit[i].word, j);
            auto it = copy_index.find({j, word_key(rep)});
            if (it == copy_index.end()) continue;
            at[i].push_back({it->second, copy_vertex[it->second].at(h)});
        }
        for (size_t a = 0; a < at[i].size(); ++a)
            for (size_t b = a + 1; b < at[i].size(); ++b)
                plan.staples.push_back({at[i][a].first, at[i][b].first, {TreePoint::at_vertex(at[i][a].second)},
                                        {TreePoint::at_vertex(at[i][b].second)}});
    }
    StapledTree st = staple_build(plan);
    out.tree = std::move(st.tree);
    for (size_t i = 0; i < out.orbit.size(); ++i) {
        auto [copy, v] = at[i].front();
        out.orbit_vertex.push_back(st.key_vertex[copy][v]);
    }
    return out;
}

namespace {

// Subdivides edges so that the given points become vertices.
RTree with_vertices(const RTree& y, std::vector<TreePoint>& pts) {
    struct Cut {
        double t;
        size_t idx;
    };
    std::map<int, std::vector<Cut>> cuts;
    for (size_t i = 0; i < pts.size(); ++i) {
        TreePoint p = y.canonical(pts[i]);
        pts[i] = p;
        if (p.vertex < 0) cuts[p.edge].push_back({p.offset, i});
    }
    RTree t;
    for (int v = 0; v < y.vertex_count(); ++v) t.add_vertex();
    for (int e = 0; e < y.edge_count(); ++e) {
        const auto& ed = y.edge(e);
        auto it = cuts.find(e);
        if (it == cuts.end()) {
            t.add_edge(ed.a, ed.b, ed.len);
            continue;
        }
        auto cs = it->second;
        std::sort(cs.begin(), cs.end(), [](const Cut& a, const Cut& b) { return a.t < b.t; });
        int prev = ed.a;
        double pt = 0;
        std::map<double, int> made;
        for (auto& c : cs) {
            int v;
            auto m = made.find(c.t);
            if (m != made.end()) {
                v = m->second;
            } else {
                v = t.add_vertex();
                t.add_edge(prev, v, c.t - pt);
                prev = v;
                pt = c.t;
                made[c.t] = v;
            }
            pts[c.idx] = TreePoint::at_vertex(v);
        }
        t.add_edge(prev, ed.b, ed.len - pt);
    }
    t.finalize();
    return t;
}

}  // namespace

RealizedAction geometric_product_tree(const TreeAction& act, int max_length) {
    if (act.kind != ActionKind::GeometricProduct) throw Error(ErrorCode::SPACE_MISMATCH, "not a geometric product");
    OrbitCutoff cut;
    cut.max_length = max_length;
    RealizedAction out;
    out.orbit = orbit_enumerate(act, cut);
    std::vector<TreePoint> pts = act.attach;
    pts.push_back(act.base_o);
    RTree y = with_vertices(act.base, pts);
    int ov = pts.back().vertex;
    std::map<std::string, int> index;
    for (size_t i = 0; i < out.orbit.size(); ++i) index[word_key(out.orbit[i].word)] = int(i);
    StaplePlan plan;
    plan.trees.assign(out.orbit.size(), y);
    // cosets g Gamma_p: the element with the last letter stripped (if in factor p) and its extensions
    std::map<std::pair<int, std::string>, std::vector<int>> cosets;
    for (size_t i = 0; i < out.orbit.size(); ++i)
        for (int j = 0; j < int(act.group.factors.size()); ++j) {
            Word rep = out.orbit[i].word;
            if (!rep.empty() && rep.back().factor == j) rep.pop_back();
            cosets[{j, word_key(rep)}].push_back(int(i));
        }
    for (auto& [key, members] : cosets) {
        if (members.size() < 2) continue;
        TreePoint p = pts[key.first];
        for (size_t a = 0; a < members.size(); ++a)
            for (size_t b = a + 1; b < members.size(); ++b) plan.staples.push_back({members[a], members[b], {p}, {p}});
    }
    StapledTree st = staple_build(plan);
    out.tree = std::move(st.tree);
    for (size_t i = 0; i < out.orbit.size(); ++i) out.orbit_vertex.push_back(st.key_vertex[i][ov]);
    return out;
}

long long ParabolicTree::orbit_count(double rho) const {
    long long n = 0;
    for (int i = 0; i < cone.space.size(); ++i)
        if (cone.tree.dist(cone.basepoint, cone.cone_point(i, 1)) <= rho + 1e-9) ++n;
    return n;
}

int ParabolicTree::act(int64_t g, int idx) const {
    int64_t target = group.mul(g, elements[idx]);
    auto it = std::lower_bound(elements.begin(), elements.end(), target);
    if (it == elements.end() || *it != target) throw Error(ErrorCode::OUT_OF_RANGE, "translate leaves the truncation");
    return int(it - elements.begin());
}

ParabolicTree parabolic_from_counting(const CountingSpec& spec, double max_norm) {
    ParabolicTree out;
    out.group = factor_counting(spec);
    out.elements = {0};
    for (int64_t a : out.group.elements(max_norm, 1)) out.elements.push_back(a);
    int m = int(out.elements.size());
    UltrametricSpace z;
    z.d.assign(m, std::vector<double>(m, 0));
    for (int i = 0; i < m; ++i) {
        z.labels.push_back(std::to_string(out.elements[i]));
        for (int j = 0; j < m; ++j)
            if (i != j)
                z.d[i][j] = std::exp(0.5 * out.group.norm(out.group.mul(out.group.inv(out.elements[i]), out.elements[j])));
    }
    out.cone = cone_build(z, 0);
    return out;
}

}  // namespace gromov
