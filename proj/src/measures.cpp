#include "gromov/measures.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace gromov {

namespace {

constexpr double kSlack = 1e-9;

const CountingSpec& counting_of(const Factor& f) {
    if (f.kind != FactorKind::Counting) throw Error(ErrorCode::BAD_FACTOR, "factor '" + f.name + "' is not a counting group");
    return f.counting;
}

bool level_in(double lambda, double x, bool strict) { return strict ? lambda > x : lambda >= x; }

// sum over nontrivial h with |h| > x (or >= x) of e^{-s |h|}
double counting_sum_above(const CountingSpec& c, double s, double x, bool strict) {
    double total = 0, log_place = 0;
    int n_exp = int(c.lambda.size());
    for (int n = 0; n < n_exp; ++n) {
        if (level_in(c.lambda[n], x, strict)) total += (c.mult[n] - 1) * std::exp(log_place - s * c.lambda[n]);
        log_place += std::log(double(c.mult[n]));
    }
    if (!c.infinite()) return total;
    double m = c.tail_mult, st = c.tail_step, last = n_exp ? c.lambda.back() : 0;
    double q = m * std::exp(-s * st);
    if (q >= 1) return kInf;
    long k = std::max(0L, long(std::floor((x - last) / st)) - 1);
    while (!level_in(last + (k + 1) * st, x, strict)) ++k;
    while (k > 0 && level_in(last + k * st, x, strict)) --k;
    total += (m - 1) * std::exp(log_place + k * std::log(m) - s * (last + (k + 1) * st)) / (1 - q);
    return total;
}

// log #{h : |h| < x} (strict) or |h| <= x, identity included
double counting_log_count(const CountingSpec& c, double x, bool strict) {
    double lc = 0;
    int n_exp = int(c.lambda.size());
    for (int n = 0; n < n_exp; ++n)
        if (strict ? c.lambda[n] < x : c.lambda[n] <= x) lc += std::log(double(c.mult[n]));
    if (!c.infinite()) return lc;
    double st = c.tail_step, last = n_exp ? c.lambda.back() : 0;
    double span = (x - last) / st;
    if (span <= 0) return lc;
    long levels = long(std::floor(span));
    if (strict && std::abs(span - double(levels)) < 1e-12) --levels;
    if (!strict && std::abs(span - double(levels + 1)) < 1e-12) ++levels;
    return lc + double(std::max(0L, levels)) * std::log(double(c.tail_mult));
}

std::vector<int64_t> step_letters(const Factor& f) {
    if (f.kind == FactorKind::Counting || f.kind == FactorKind::Tabulated)
        throw Error(ErrorCode::BAD_FACTOR, "shadows need Integer, Cyclic or Table factors, got " + f.describe());
    return f.elements(kInf, 1);
}

}  // namespace

// ---------------------------------------------------------------- Patterson's weight

double ShellLaw::log_shell(long i) const {
    if (i < long(table.size())) return table[i] > 0 ? std::log(table[i]) : -kInf;
    double rho = midpoint(i);
    return std::log(coeff * h) + delta * rho - power * std::log(rho);
}

double PattersonWeight::log_weight(double log_x) const {
    if (knots.empty() || log_x <= knots[0]) return 0;
    size_t j = std::upper_bound(knots.begin(), knots.end(), log_x) - knots.begin() - 1;
    return log_k[j] + eps[j] * (log_x - knots[j]);
}

double PattersonWeight::epsilon(double y) const {
    if (eps.empty()) return 0;
    double ly = std::log(y);
    if (ly < knots[0]) return eps[0];
    size_t j = std::upper_bound(knots.begin(), knots.end(), ly) - knots.begin() - 1;
    return eps[j];
}

PattersonWeight patterson_weight(const ShellLaw& law, double bound, double gap, double tail_tol) {
    if (!std::isfinite(law.delta)) throw Error(ErrorCode::DELTA_INFINITE, "exponent is infinite");
    if (!(law.h > 0) || !(law.coeff > 0)) throw Error(ErrorCode::OUT_OF_RANGE, "shell law needs h > 0 and coeff > 0");
    PattersonWeight w;
    const long cap = 50'000'000;
    auto log_term = [&](long i, double s) {
        double rho = law.midpoint(i);
        return law.log_shell(i) + w.log_weight(rho) - s * rho;
    };
    if (law.divergent()) {
        w.trivial = true;
    } else {
        // blocks with slope 1/j, each closed once it adds 2^j to the series at delta
        w.knots = {0};
        w.eps = {1};
        w.log_k = {0};
        int j = 1;
        double block = 0, total = 0;
        long i = 0;
        for (; i < cap && total < bound; ++i) {
            double t = std::exp(log_term(i, law.delta));
            total += t;
            block += t;
            if (block >= std::ldexp(1.0, j)) {
                double rho = law.midpoint(i);
                w.log_k.push_back(w.log_weight(rho));
                w.knots.push_back(rho);
                ++j;
                w.eps.push_back(1.0 / j);
                block = 0;
            }
        }
        if (total < bound) throw Error(ErrorCode::BUDGET_EXCEEDED, "schedule did not reach the divergence bound");
        w.schedule_sum = total;
        w.schedule_end = law.midpoint(i);
        w.tail_eps = std::min(1.0 / (j + 1), gap / 2);
        w.log_k.push_back(w.log_weight(w.schedule_end));
        w.knots.push_back(w.schedule_end);
        w.eps.push_back(w.tail_eps);
    }
    // convergence at delta + gap with a geometric tail bound past the table
    double s = law.delta + gap;
    double rate = gap - w.tail_eps;
    double sum = 0;
    long i = 0;
    for (; i < cap; ++i) {
        sum += std::exp(log_term(i, s));
        double rho = law.midpoint(i);
        if (i + 1 >= long(law.table.size()) && rho >= 1 && (w.knots.empty() || rho >= w.knots.back()) && law.power > 0) {
            double lead = std::log(law.coeff * law.h) - law.power * std::log(rho) + w.log_weight(rho) - gap * rho;
            double tail = std::exp(lead) / (1 - std::exp(-rate * law.h));
            if (tail < tail_tol) {
                w.convergent_tail = tail;
                break;
            }
        }
    }
    if (i == cap) throw Error(ErrorCode::BUDGET_EXCEEDED, "tail bound not reached");
    w.convergent_sum = sum;
    w.convergent_cutoff = law.midpoint(i);
    // k(xy) <= x^eps(y) k(y) on a 32 x 32 grid
    double hi = (w.knots.empty() ? 10 : w.knots.back()) + 20;
    w.grid_worst = -kInf;
    for (int a = 0; a < 32; ++a)
        for (int b = 0; b < 32; ++b) {
            double ly = -2 + (hi + 2) * a / 31.0;
            double lx = 0.01 + 60.0 * b / 31.0;
            double d = w.log_weight(lx + ly) - w.log_weight(ly) - w.epsilon(std::exp(ly)) * lx;
            w.grid_worst = std::max(w.grid_worst, d);
            ++w.grid_pairs;
        }
    return w;
}

double AtomicMeasure::total() const {
    double t = 0;
    for (double x : weight) t += x;
    return t;
}

AtomicMeasure mu_s(const std::vector<std::string>& ids, const std::vector<double>& norms, const PattersonWeight* k, double s,
                   double delta_full) {
    if (ids.size() != norms.size()) throw Error(ErrorCode::OUT_OF_RANGE, "ids and norms differ in length");
    if (ids.empty()) throw Error(ErrorCode::EMPTY, "no atoms");
    if (s <= delta_full) throw Error(ErrorCode::SERIES_DIVERGES, "s is at or below the exponent of the full orbit");
    std::vector<double> lw(norms.size());
    double top = -kInf;
    for (size_t i = 0; i < norms.size(); ++i) {
        lw[i] = (k ? k->log_weight(norms[i]) : 0) - s * norms[i];
        top = std::max(top, lw[i]);
    }
    if (!std::isfinite(top)) throw Error(ErrorCode::SERIES_DIVERGES, "weights are not finite");
    double z = 0;
    for (double x : lw) z += std::exp(x - top);
    if (!std::isfinite(z) || z <= 0) throw Error(ErrorCode::SERIES_DIVERGES, "normalizer is not finite");
    AtomicMeasure m;
    m.support = ids;
    for (double x : lw) m.weight.push_back(std::exp(x - top) / z);
    return m;
}

// ---------------------------------------------------------------- cylinder measures

CylinderMeasure schottky_cylinder_measure(const TreeAction& act) {
    if (act.kind != ActionKind::PureSchottky) throw Error(ErrorCode::BAD_FACTOR, "cylinder measures need a pure Schottky action");
    const auto& fs = act.group.factors;
    if (fs.size() < 2) throw Error(ErrorCode::BAD_FACTOR, "cylinder measures need at least two factors");
    auto ps = schottky_poincare_set(fs);
    if (!ps.divergence_type || !ps.root_from_criterion)
        throw Error(ErrorCode::NOT_DIVERGENCE_TYPE, "criterion at the exponent is " + std::to_string(ps.criterion_at_root));
    CylinderMeasure mu;
    mu.action = act;
    mu.delta = ps.delta;
    int k = int(fs.size());
    Mat a = schottky_matrix(fs, ps.delta);  // a(i,j) = q_j for i != j
    Eigen::EigenSolver<Mat> es(a);
    int best = 0;
    for (int i = 1; i < k; ++i)
        if (es.eigenvalues()[i].real() > es.eigenvalues()[best].real()) best = i;
    Vec w = es.eigenvectors().col(best).real();
    if (w.sum() < 0) w = -w;
    Vec q(k);
    for (int i = 0; i < k; ++i) q[i] = fs[i].series_minus_one(ps.delta);
    mu.w = w / q.dot(w);
    return mu;
}

double CylinderMeasure::syllable(const Word& g) const {
    if (g.empty()) return 1;
    return std::exp(-delta * action.norm(g)) * w[g.back().factor];
}

double CylinderMeasure::cylinder(const Word& g) const {
    if (g.empty()) return 1;
    const Factor& f = action.group.factors[g.back().factor];
    double m = syllable(g);
    if (f.kind == FactorKind::Integer) m /= 1 - std::exp(-delta * f.r);
    return m;
}

double CylinderMeasure::shadow(const Word& g, double sigma) const {
    const auto& grp = action.group;
    double ng = action.norm(g);
    if (ng <= sigma + kSlack) return 1;
    std::vector<std::vector<int64_t>> letters;
    for (const auto& f : grp.factors) letters.push_back(step_letters(f));
    std::function<double(const Word&)> descend = [&](const Word& h) {
        double total = 0;
        auto visit = [&](const Word& c) {
            double nc = action.norm(c);
            double t = 0.5 * (nc + ng - action.dist(c, g));
            if (t >= ng - kSlack) total += cylinder(c);
            else if (t >= nc - kSlack) total += descend(c);
            else if (ng - t <= sigma + kSlack) total += cylinder(c);
        };
        int last = h.empty() ? -1 : h.back().factor;
        if (last >= 0 && grp.factors[last].kind == FactorKind::Integer)
            visit(grp.multiply(h, {Letter{last, h.back().elem > 0 ? 1 : -1}}));
        for (int b = 0; b < int(grp.factors.size()); ++b) {
            if (b == last) continue;
            for (int64_t x : letters[b]) visit(grp.multiply(h, {Letter{b, x}}));
        }
        return total;
    };
    return descend({});
}

double CylinderMeasure::ball(const std::vector<Letter>& syl, int cusp, double t) const {
    if (t <= 0) return 1;
    const auto& fs = action.group.factors;
    double pre = 0;
    for (const auto& s : syl) {
        double len = action.letter_norm(s);
        if (t < pre + len) {
            double u = t - pre, eg = std::exp(-delta * pre), wa = w[s.factor];
            const Factor& f = fs[s.factor];
            if (f.kind == FactorKind::Integer) {
                double j = std::floor(u / f.r + 1e-12) + 1;
                return eg * std::exp(-delta * j * f.r) * wa / (1 - std::exp(-delta * f.r));
            }
            const auto& c = counting_of(f);
            if (u < len / 2) return eg * wa * counting_sum_above(c, delta, 2 * u, true);
            return std::exp(-delta * (pre + len) + counting_log_count(c, 2 * (len - u), true)) * wa;
        }
        pre += len;
    }
    if (cusp < 0) throw Error(ErrorCode::SANDWICH_FAIL, "UNDERSAMPLED: t beyond the expanded address");
    return std::exp(-delta * pre) * w[cusp] * counting_sum_above(counting_of(fs[cusp]), delta, 2 * (t - pre), true);
}

ConformalityReport conformality_check(const CylinderMeasure& mu, int samples, uint64_t seed) {
    const auto& grp = mu.action.group;
    std::mt19937_64 rng(seed);
    int k = int(grp.factors.size());
    auto letter = [&](int f) {
        auto el = grp.factors[f].elements(grp.factors[f].finite() ? kInf : 3 * grp.factors[f].r + 1e-9, -1);
        return Letter{f, el[std::uniform_int_distribution<size_t>(0, el.size() - 1)(rng)]};
    };
    ConformalityReport rep;
    while (rep.samples < samples) {
        int len = std::uniform_int_distribution<int>(2, 7)(rng);
        Word g;
        int last = -1;
        for (int i = 0; i < len; ++i) {
            int f;
            do f = std::uniform_int_distribution<int>(0, k - 1)(rng);
            while (f == last);
            g.push_back(letter(f));
            last = f;
        }
        Letter gam = letter(std::uniform_int_distribution<int>(0, k - 1)(rng));
        Word gg = grp.multiply({gam}, g);
        if (gg.size() < g.size()) continue;  // gamma cancelled the first syllable
        // additivity: the children of g partition its cylinder
        int a = g.back().factor;
        double parts = 0;
        for (int b = 0; b < k; ++b) {
            if (b == a) continue;
            if (grp.factors[b].kind == FactorKind::Integer) {
                parts += mu.cylinder(grp.multiply(g, {Letter{b, 1}})) + mu.cylinder(grp.multiply(g, {Letter{b, -1}}));
            } else if (grp.factors[b].finite()) {
                for (int64_t x : grp.factors[b].elements(kInf, -1)) parts += mu.syllable(grp.multiply(g, {Letter{b, x}}));
            } else {
                parts = -1;
                break;
            }
        }
        if (parts >= 0) rep.max_additivity = std::max(rep.max_additivity, std::abs(parts / mu.syllable(g) - 1));
        if (grp.factors[a].kind == FactorKind::Integer) {
            double next = mu.cylinder(grp.multiply(g, {Letter{a, g.back().elem > 0 ? 1 : -1}}));
            rep.max_additivity = std::max(rep.max_additivity, std::abs((mu.syllable(g) + next) / mu.cylinder(g) - 1));
        }
        double ratio = mu.syllable(gg) / mu.syllable(g);
        double expect = std::exp(-mu.delta * (mu.action.norm(gg) - mu.action.norm(g)));
        rep.max_residual = std::max(rep.max_residual, std::abs(ratio / expect - 1));
        ++rep.samples;
    }
    return rep;
}

ShadowReport shadow_lemma_check(const TreeAction& act, const std::function<double(const Word&, double)>& shadow_mass,
                                double delta, double sigma, double rho_max, double bound) {
    OrbitCutoff cut;
    cut.max_norm = rho_max;
    auto orbit = orbit_enumerate(act, cut);
    if (orbit.empty() || shadow_mass({}, sigma) <= 0) throw Error(ErrorCode::EMPTY_SHADOW, "the whole boundary has no mass");
    ShadowReport r;
    r.min_ratio = kInf;
    for (const auto& e : orbit) {
        double ratio = shadow_mass(e.word, sigma) * std::exp(delta * e.norm);
        r.min_ratio = std::min(r.min_ratio, ratio);
        r.max_ratio = std::max(r.max_ratio, ratio);
        ++r.elements;
    }
    r.infinite_spread = !(r.min_ratio > 0);
    r.spread = r.infinite_spread ? kInf : r.max_ratio / r.min_ratio;
    r.pass = !r.infinite_spread && r.spread <= bound;
    return r;
}

double point_mass_shadow(const TreeAction& act, const WordAddress& at, const Word& g, double sigma) {
    double ng = act.norm(g);
    return ng - address_word_gromov(act, at, g) <= sigma + kSlack ? 1.0 : 0.0;
}

// ---------------------------------------------------------------- global measure formula

namespace {

struct Place {
    bool inside = false;
    double t_xi = 0;
    double gp = kInf;  // <xi|eta>_o
    int cusp = -1;
};

Place place(const GlobalMeasureContext& ctx, const std::vector<Letter>& syl, int cusp, double t) {
    const auto& act = ctx.mu.action;
    auto is_cusp = [&](int f) { return std::find(ctx.cusps.begin(), ctx.cusps.end(), f) != ctx.cusps.end(); };
    double pre = 0;
    Place p;
    for (const auto& s : syl) {
        double len = act.letter_norm(s);
        if (t < pre + len) {
            if (!is_cusp(s.factor)) return p;
            double u = t - pre;
            double height = u < len / 2 ? u : len - u;
            p.inside = height > ctx.t0;
            p.t_xi = pre + ctx.t0;
            p.gp = pre + len / 2;
            p.cusp = s.factor;
            return p;
        }
        pre += len;
    }
    if (cusp < 0) throw Error(ErrorCode::SANDWICH_FAIL, "UNDERSAMPLED: t beyond the expanded address");
    p.inside = t - pre > ctx.t0;
    p.t_xi = pre + ctx.t0;
    p.cusp = cusp;
    return p;
}

double log_I(const GlobalMeasureContext& ctx, int cusp, double log_r) {
    const auto& c = counting_of(ctx.mu.action.group.factors[cusp]);
    double v = (log_r <= 0 ? 1.0 : 0.0) + counting_sum_above(c, ctx.mu.delta, 2 * log_r, false);
    return std::log(v);
}

double log_N(const GlobalMeasureContext& ctx, int cusp, double log_r) {
    const auto& c = counting_of(ctx.mu.action.group.factors[cusp]);
    return counting_log_count(c, 2 * std::max(log_r, 0.0), false);
}

double log_m(const GlobalMeasureContext& ctx, const std::vector<Letter>& syl, int cusp, double t) {
    if (t <= 0) return 0;
    double d = ctx.mu.delta;
    Place p = place(ctx, syl, cusp, t);
    if (!p.inside) return -d * t;
    if (t <= p.gp) return -d * p.t_xi + log_I(ctx, p.cusp, t - p.t_xi - ctx.theta);
    return -d * (2 * p.gp - p.t_xi) + log_N(ctx, p.cusp, 2 * p.gp - t - p.t_xi - ctx.theta);
}

double b_value(const GlobalMeasureContext& ctx, const std::vector<Letter>& syl, int cusp, double t) {
    if (t <= 0) return 0;
    Place p = place(ctx, syl, cusp, t);
    if (!p.inside) return 0;
    return std::min(t, 2 * p.gp - t) - p.t_xi;
}

std::string point_label(const GmfPoint& eta) {
    if (!eta.label.empty()) return eta.label;
    std::string s = word_to_string(eta.addr.prefix);
    if (eta.cusp >= 0) return s + "*p" + std::to_string(eta.cusp);
    return s + "(" + word_to_string(eta.addr.period) + ")^inf";
}

}  // namespace

std::vector<Letter> GlobalMeasureContext::syllables(const GmfPoint& eta, double t_max) const {
    const auto& act = mu.action;
    if (eta.cusp >= 0) {
        if (eta.cusp >= int(act.group.factors.size()) ||
            std::find(cusps.begin(), cusps.end(), eta.cusp) == cusps.end())
            throw Error(ErrorCode::NOT_LIMIT_POINT, "cusp index is not a parabolic factor");
        Word w = act.group.reduce(eta.addr.prefix);
        if (!w.empty() && w.back().factor == eta.cusp)
            throw Error(ErrorCode::NOT_LIMIT_POINT, "prefix must not end in the cusp factor");
        return w;
    }
    check_address(act.group, eta.addr);
    for (int reps = 1; reps <= (1 << 16); reps *= 2) {
        Word w = address_expansion(act.group, eta.addr, reps);
        if (act.norm(w) > t_max + 1) return w;
    }
    throw Error(ErrorCode::SANDWICH_FAIL, "UNDERSAMPLED: address too short for t_max");
}

double GlobalMeasureContext::I(int cusp, double r) const { return std::exp(log_I(*this, cusp, std::log(r))); }
double GlobalMeasureContext::N(int cusp, double r) const { return std::exp(log_N(*this, cusp, std::log(r))); }

double GlobalMeasureContext::m(const GmfPoint& eta, double t) const {
    return std::exp(log_m(*this, syllables(eta, t), eta.cusp, t));
}

double GlobalMeasureContext::b(const GmfPoint& eta, double t) const {
    return b_value(*this, syllables(eta, t), eta.cusp, t);
}

double GlobalMeasureContext::ball(const GmfPoint& eta, double t) const { return mu.ball(syllables(eta, t), eta.cusp, t); }

double horoball_gap(const GlobalMeasureContext& ctx, double t0, double rho_max) {
    const auto& act = ctx.mu.action;
    OrbitCutoff cut;
    cut.max_norm = rho_max;
    auto orbit = orbit_enumerate(act, cut);
    // every orbit point lies on the boundary horosphere of g p for each cusp factor p
    struct Foot {
        Word base;
        int cusp;
        size_t idx;
    };
    std::vector<Foot> feet;
    for (size_t i = 0; i < orbit.size(); ++i)
        for (int c : ctx.cusps) {
            Word base = orbit[i].word;
            if (!base.empty() && base.back().factor == c) base.pop_back();
            feet.push_back({base, c, i});
        }
    double gap = kInf;
    for (size_t a = 0; a < feet.size(); ++a)
        for (size_t b = a + 1; b < feet.size(); ++b) {
            if (feet[a].cusp == feet[b].cusp && feet[a].base == feet[b].base) continue;
            double d = act.dist(orbit[feet[a].idx].word, orbit[feet[b].idx].word);
            gap = std::min(gap, 2 * t0 + d);
        }
    return gap;
}

GlobalMeasureContext global_measure_context(const CylinderMeasure& mu) {
    GlobalMeasureContext ctx;
    ctx.mu = mu;
    const auto& fs = mu.action.group.factors;
    for (int i = 0; i < int(fs.size()); ++i) {
        if (fs[i].kind == FactorKind::Counting && fs[i].counting.infinite()) {
            if (!(mu.delta > fs[i].exponent()))
                throw Error(ErrorCode::NOT_DIVERGENCE_TYPE, "exponent does not exceed the cusp exponent");
            ctx.cusps.push_back(i);
        } else if (fs[i].kind != FactorKind::Integer) {
            throw Error(ErrorCode::BAD_FACTOR, "global formula needs Integer and infinite counting factors");
        }
    }
    ctx.t0 = 0;
    for (double t0 = 0.5; t0 <= 10; t0 += 0.5)
        if (ctx.cusps.empty() || horoball_gap(ctx, t0, 4) > 0) {
            ctx.t0 = t0;
            break;
        }
    return ctx;
}

ThetaChoice choose_theta(GlobalMeasureContext& ctx, const std::vector<GmfPoint>& samples, double t_max, double monotone_cap) {
    const double step = 0.05;
    int n = int(std::lround(t_max / step));
    std::vector<std::vector<Letter>> syl;
    for (const auto& e : samples) syl.push_back(ctx.syllables(e, t_max));
    ThetaChoice out;
    for (int k = 0; k <= 20; ++k) {
        ctx.theta = 0.5 * k;
        double worst = 0;
        for (size_t s = 0; s < samples.size(); ++s) {
            double low = kInf;
            for (int i = 0; i <= n; ++i) {
                double lm = log_m(ctx, syl[s], samples[s].cusp, i * step);
                if (i > 0) worst = std::max(worst, lm - low);
                low = std::min(low, lm);
            }
        }
        out.theta = ctx.theta;
        out.constant = std::exp(worst);
        if (out.constant <= monotone_cap) break;
    }
    return out;
}

std::vector<GmfPoint> gmf_samples(const GlobalMeasureContext& ctx, int count, uint64_t seed) {
    const auto& fs = ctx.mu.action.group.factors;
    int k = int(fs.size());
    std::mt19937_64 rng(seed);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto letter = [&](int f) {
        const Factor& fac = fs[f];
        if (fac.kind == FactorKind::Integer) {
            int m = pick(1, 3);
            return Letter{f, pick(0, 1) ? m : -m};
        }
        double cap = fac.counting.lambda_at(6) + 1e-9;
        auto el = fac.elements(cap, -1);
        return Letter{f, el[std::uniform_int_distribution<size_t>(0, el.size() - 1)(rng)]};
    };
    auto other = [&](int f) {
        int g;
        do g = pick(0, k - 1);
        while (g == f);
        return g;
    };
    std::vector<GmfPoint> out;
    for (int i = 0; i < count; ++i) {
        GmfPoint p;
        int len = pick(1, 5);
        int last = -1;
        for (int j = 0; j < len; ++j) {
            int f = last < 0 ? pick(0, k - 1) : other(last);
            p.addr.prefix.push_back(letter(f));
            last = f;
        }
        if (!ctx.cusps.empty() && i % 3 == 2) {
            int c = ctx.cusps[pick(0, int(ctx.cusps.size()) - 1)];
            if (last == c) p.addr.prefix.pop_back();
            p.cusp = c;
        } else {
            int a = pick(0, k - 1), b = other(a);
            p.addr.period = {letter(a), letter(b)};
        }
        p.label = point_label(p);
        out.push_back(p);
    }
    return out;
}

SandwichReport global_formula_verify(const GlobalMeasureContext& ctx, const std::vector<GmfPoint>& samples, double t_max,
                                     double t_step, double sigma_cap, double constant_cap) {
    if (samples.empty()) throw Error(ErrorCode::EMPTY, "no samples");
    int n = int(std::lround(t_max / t_step));
    int shift_max = int(std::lround(sigma_cap / t_step));
    struct Trace {
        std::vector<double> lm, lb;
    };
    std::vector<Trace> tr(samples.size());
    SandwichReport rep;
    for (size_t s = 0; s < samples.size(); ++s) {
        auto syl = ctx.syllables(samples[s], t_max + sigma_cap);
        int cusp = samples[s].cusp;
        for (int i = 0; i <= n + shift_max; ++i) tr[s].lm.push_back(log_m(ctx, syl, cusp, i * t_step));
        for (int i = 0; i <= n; ++i) {
            double b = ctx.mu.ball(syl, cusp, i * t_step);
            if (!(b > 0)) throw Error(ErrorCode::SANDWICH_FAIL, "ball of zero mass at " + samples[s].label);
            tr[s].lb.push_back(std::log(b));
            ++rep.evaluations;
        }
        double prev = 0;
        for (int i = 0; i <= n; ++i) {
            double b = b_value(ctx, syl, cusp, i * t_step);
            if (i > 0) rep.lipschitz_defect = std::max(rep.lipschitz_defect, std::abs(b - prev) - t_step);
            prev = b;
        }
    }
    int step_quarter = std::max(1, int(std::lround(0.25 / t_step)));
    for (int k = 0; k <= shift_max; k += step_quarter) {
        double worst = 0;
        size_t ws = 0;
        int wi = 0;
        for (size_t s = 0; s < samples.size(); ++s)
            for (int i = 1; i <= n; ++i) {
                double lower = tr[s].lm[i + k] - tr[s].lb[i];
                double upper = tr[s].lb[i] - tr[s].lm[std::max(i - k, 0)];
                double v = std::max(lower, upper);
                if (v > worst) {
                    worst = v;
                    ws = s;
                    wi = i;
                }
            }
        rep.sigma = k * t_step;
        rep.constant = std::exp(worst);
        rep.worst_point = samples[ws].label;
        rep.worst_t = wi * t_step;
        if (rep.constant <= constant_cap) {
            rep.pass = true;
            return rep;
        }
    }
    std::ostringstream o;
    o << "no sigma <= " << sigma_cap << " gives constant <= " << constant_cap << "; worst " << rep.worst_point
      << " at t = " << rep.worst_t << " (constant " << rep.constant << ")";
    throw Error(ErrorCode::SANDWICH_FAIL, o.str());
}

double cusp_identity_residual(const GlobalMeasureContext& ctx, int cusp, double r) {
    if (!(r >= 1)) throw Error(ErrorCode::OUT_OF_RANGE, "identity is checked for R >= 1");
    const Factor& f = ctx.mu.action.group.factors[cusp];
    const auto& c = counting_of(f);
    double d = ctx.mu.delta;
    int levels = std::min(16, f.counting_levels);
    double cap = c.lambda_at(levels - 1);
    if (2 * std::log(r) > cap) throw Error(ErrorCode::OUT_OF_RANGE, "R beyond the enumerated levels");
    double lhs = std::exp(log_I(ctx, cusp, std::log(r))) + std::pow(r, -2 * d) * std::exp(log_N(ctx, cusp, std::log(r)));
    // direct sum over enumerated elements, identity first, then the untouched levels above the cap
    double rhs = std::pow(r, -2 * d);
    for (int64_t h : f.elements(cap + 1e-9, -1)) rhs += std::pow(std::max(r, std::exp(0.5 * f.norm(h))), -2 * d);
    double place = 1;
    for (int n = 0; n < levels; ++n) place *= c.mult_at(n);
    if (!(c.infinite() && levels >= int(c.lambda.size())))
        throw Error(ErrorCode::OUT_OF_RANGE, "identity check needs the enumerated levels to reach the tail");
    double q = c.tail_mult * std::exp(-d * c.tail_step);
    rhs += (c.tail_mult - 1) * place * std::exp(-d * c.lambda_at(levels)) / (1 - q);
    return std::abs(lhs - rhs) / rhs;
}

// ---------------------------------------------------------------- doubling and exact dimension

double CuspLaw::log_count(double x) const {
    switch (kind) {
        case Kind::Power:
            return a * std::max(x, 0.0);
        case Kind::PowerLog:
            return a * std::max(x, 0.0) - b * std::log(std::max(x, M_E));
        case Kind::Staircase:
            return std::floor(c * std::pow(std::max(x, 0.0), p)) * std::log(base);
        case Kind::Counting:
            return spec.log_f(2 * std::max(x, 0.0));
        case Kind::Tabulated: {
            long k = long(std::floor(x));
            if (k < 0 || k >= long(table.size())) throw Error(ErrorCode::TAIL_UNKNOWN, "tabulated cusp has no tail law");
            return std::log(table[k]);
        }
    }
    return 0;
}

std::string CuspLaw::describe() const {
    std::ostringstream o;
    switch (kind) {
        case Kind::Power:
            o << "R^" << a;
            break;
        case Kind::PowerLog:
            o << "R^" << a << "/log^" << b << "(R)";
            break;
        case Kind::Staircase:
            o << base << "^floor(" << c << " log^" << p << " R)";
            break;
        case Kind::Counting:
            o << "counting";
            break;
        case Kind::Tabulated:
            o << "tabulated(" << table.size() << ")";
            break;
    }
    return o.str();
}

const char* tri_name(TriState t) {
    switch (t) {
        case TriState::Yes:
            return "YES";
        case TriState::No:
            return "NO";
        default:
            return "UNDECIDED";
    }
}

DoublingReport doubling_and_dimension_tests(const CuspLaw& law, double delta, bool tree_lineal, int terms) {
    using LK = CuspLaw::Kind;
    if (law.kind == LK::Tabulated) throw Error(ErrorCode::TAIL_UNKNOWN, "tabulated cusp has no tail law");
    if ((law.kind == LK::PowerLog && law.b < 0) || (law.kind == LK::Staircase && (law.base <= 1 || law.c <= 0 || law.p <= 0)))
        throw Error(ErrorCode::OUT_OF_RANGE, "cusp law parameters out of range");
    DoublingReport r;
    const double two_d = 2 * delta;
    // asymptotic growth exponent of log N(e^x)
    double g = 0;
    switch (law.kind) {
        case LK::Power:
        case LK::PowerLog:
            g = law.a;
            break;
        case LK::Staircase:
            g = law.p > 1 ? kInf : law.p < 1 ? 0 : law.c * std::log(law.base);
            break;
        case LK::Counting:
            g = law.spec.infinite() ? 2 * std::log(double(law.spec.tail_mult)) / law.spec.tail_step : 0;
            break;
        default:
            break;
    }
    r.dexp_lower = r.dexp_upper = g;
    // window slopes over [K/2, K]
    int K = terms;
    r.window_lower = kInf;
    r.window_upper = -kInf;
    for (int x = K / 2; x < K; ++x)
        for (int dx = 1; dx <= K / 4 && x + dx <= K; ++dx) {
            double s = (law.log_count(x + dx) - law.log_count(x)) / dx;
            r.window_lower = std::min(r.window_lower, s);
            r.window_upper = std::max(r.window_upper, s);
        }
    // partial sums of sum e^{-2 delta k} k^j N(e^k), j = 0, 1
    for (int k = 0; k <= K; ++k) {
        double t = std::exp(law.log_count(k) - two_d * k);
        r.sigma_delta_partial += t;
        r.hlog_partial += k * t;
    }
    // envelope N(e^k) <= A e^{slope (k - K)} past K
    double log_a = law.log_count(K), slope = g;
    if (law.kind == LK::Staircase && law.p <= 1) {
        log_a = law.c * std::pow(double(K), law.p) * std::log(law.base);
        slope = law.c * law.p * std::pow(double(K), law.p - 1) * std::log(law.base);
    }
    if (law.kind == LK::Counting && law.spec.infinite()) log_a += std::log(double(law.spec.tail_mult));
    auto tail = [&](int j) {
        double x = std::exp(slope - two_d);
        double base = std::exp(log_a - two_d * K);
        if (j == 0) return base * x / (1 - x);
        return base * (K * x / (1 - x) + x / ((1 - x) * (1 - x)));
    };
    bool critical = std::abs(g - two_d) <= 1e-9 * std::max(1.0, two_d);
    std::ostringstream wit;
    if (slope < two_d && !critical) {
        r.sigma_delta_tail = tail(0);
        r.hlog_tail = tail(1);
        r.sigma_delta_converges = r.hlog_converges = true;
        wit << "growth " << g << " < 2 delta = " << two_d << "; geometric tails";
    } else if (critical && (law.kind == LK::Power || law.kind == LK::PowerLog)) {
        double b = law.kind == LK::PowerLog ? law.b : 0;
        // terms k^{j-b}
        r.sigma_delta_converges = b > 1;
        r.hlog_converges = b > 2;
        r.sigma_delta_tail = r.sigma_delta_converges ? std::pow(double(K), 1 - b) / (b - 1) : kInf;
        r.hlog_tail = r.hlog_converges ? std::pow(double(K), 2 - b) / (b - 2) : kInf;
        wit << "growth equals 2 delta; terms ~ k^" << -b << " and k^" << 1 - b;
    } else {
        r.sigma_delta_tail = r.hlog_tail = kInf;
        wit << "growth " << g << " >= 2 delta = " << two_d << "; terms do not decay";
    }
    if (r.hlog_converges) r.exact_dimensional = TriState::Yes;
    else if (tree_lineal) r.exact_dimensional = TriState::No;
    bool cond_a = g > 0 && g < two_d && !critical;
    bool cond_c = g > 0 && (g < two_d || critical);
    if (cond_a) r.doubling = TriState::Yes;
    else if (!cond_c || r.exact_dimensional == TriState::No) r.doubling = TriState::No;
    wit << "; dexp = " << g << (cond_a ? " inside (0, 2 delta)" : cond_c ? " at 2 delta" : " outside (0, 2 delta]");
    r.witness = wit.str();
    return r;
}

}  // namespace gromov
