#include "gromov/poincare.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <unordered_set>

namespace gromov {

namespace {

struct Line {
    double slope = 0;
    double se = 0;
};

Line least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    size_t n = x.size();
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    Line l;
    l.slope = sxx > 0 ? sxy / sxx : 0;
    double rss = 0;
    for (size_t i = 0; i < n; ++i) {
        double r = y[i] - my - l.slope * (x[i] - mx);
        rss += r * r;
    }
    l.se = (n > 2 && sxx > 0) ? std::sqrt(rss / double(n - 2) / sxx) : 0;
    return l;
}

// slope over the window, its standard error, and the spread of the two half-window slopes
Band fit_band(const std::vector<double>& x, const std::vector<double>& y, double* se_out) {
    Line all = least_squares(x, y);
    size_t h = x.size() / 2;
    Line a = least_squares({x.begin(), x.begin() + h}, {y.begin(), y.begin() + h});
    Line b = least_squares({x.begin() + h, x.end()}, {y.begin() + h, y.end()});
    double w = 3 * all.se + 0.5 * std::abs(a.slope - b.slope);
    if (se_out) *se_out = all.se;
    return {all.slope, all.slope - w, all.slope + w};
}

}  // namespace

long long PoincareProfile::count(double rho) const {
    return std::upper_bound(norms.begin(), norms.end(), rho) - norms.begin();
}

double PoincareProfile::series(double s) const {
    // largest terms last keeps the summation stable
    double sum = 0;
    for (auto it = norms.rbegin(); it != norms.rend(); ++it) sum += std::exp(-s * *it);
    return sum;
}

PoincareProfile build_profile(std::vector<double> norms) {
    if (norms.empty()) throw Error(ErrorCode::EMPTY_ORBIT, "no orbit points");
    std::sort(norms.begin(), norms.end());
    if (norms.front() < 0) throw Error(ErrorCode::EMPTY_ORBIT, "negative norm in orbit stream");
    if (norms.front() > 1e-12) throw Error(ErrorCode::EMPTY_ORBIT, "identity (norm 0) missing from orbit stream");
    return {std::move(norms)};
}

ExponentFit exponent_estimate(const PoincareProfile& p, double rho_max) {
    if (rho_max <= 0) rho_max = p.max_norm();
    ExponentFit f;
    f.window_lo = rho_max / 2;
    f.window_hi = rho_max;
    if (!(rho_max > 0) || p.count(f.window_hi) == p.count(f.window_lo))
        throw Error(ErrorCode::INSUFFICIENT_RANGE, "counting function is flat over the fitting window");
    const int n = 200;
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
        x[i] = f.window_lo + (f.window_hi - f.window_lo) * i / (n - 1);
        y[i] = std::log(double(p.count(x[i])));
    }
    f.samples = n;
    f.delta = fit_band(x, y, &f.slope_se);
    return f;
}

NetProfile modified_exponent(const std::vector<double>& norms, const std::function<double(int, int)>& dist, double rho,
                             double rho_max) {
    if (norms.empty()) throw Error(ErrorCode::EMPTY, "empty orbit sample");
    if (!(rho > 0)) throw Error(ErrorCode::EMPTY, "separation radius must be positive");
    NetProfile net;
    net.rho = rho;
    for (int i = 0; i < int(norms.size()); ++i) {
        bool far = true;
        for (int j : net.members)
            if (dist(i, j) < rho) {
                far = false;
                break;
            }
        if (far) {
            net.members.push_back(i);
            net.norms.push_back(norms[i]);
        }
    }
    std::vector<double> sorted = net.norms;
    std::sort(sorted.begin(), sorted.end());
    if (net.members.size() == 1) return net;
    PoincareProfile prof{sorted};
    try {
        auto fit = exponent_estimate(prof, rho_max);
        net.delta = fit.delta.value;
        net.band = fit.delta;
        net.fitted = true;
    } catch (const Error&) {
        net.fitted = false;
    }
    return net;
}

Mat schottky_matrix(const std::vector<Factor>& factors, double s) {
    int k = int(factors.size());
    Mat a = Mat::Zero(k, k);
    for (int j = 0; j < k; ++j) {
        double q = factors[j].series_minus_one(s);
        for (int i = 0; i < k; ++i)
            if (i != j) a(i, j) = q;
    }
    return a;
}

double schottky_criterion(const std::vector<Factor>& factors, double s) {
    Mat a = schottky_matrix(factors, s);
    if (!a.allFinite()) return kInf;
    if (a.rows() == 1) return 0;
    return Eigen::EigenSolver<Mat>(a, false).eigenvalues().cwiseAbs().maxCoeff();
}

PoincareSet schottky_poincare_set(const std::vector<Factor>& factors) {
    if (factors.empty()) throw Error(ErrorCode::EMPTY_FACTOR, "no factors");
    for (const auto& f : factors) f.series_minus_one(1.0);  // throws FACTOR_SERIES_UNKNOWN
    PoincareSet out;
    double lo = 1e-6, hi = 50;
    double fexp = 0;
    for (const auto& f : factors) fexp = std::max(fexp, f.exponent());
    lo = std::max(lo, fexp);
    auto fmt = [](double d, bool closed) {
        char buf[64];
        std::snprintf(buf, sizeof buf, closed ? "[0, %.12g]" : "[0, %.12g)", d);
        return std::string(buf);
    };
    if (factors.size() == 1) {
        const auto& f = factors[0];
        out.delta = f.exponent();
        out.divergence_type = f.divergence_type();
        out.criterion_at_root = 0;
        if (f.finite()) out.set = "empty";
        else if (out.delta == 0) out.set = out.divergence_type ? "{0}" : "empty";
        else out.set = fmt(out.delta, out.divergence_type);
        return out;
    }
    // just above the largest factor exponent the criterion may already be below 1
    double at_lo = schottky_criterion(factors, lo * (1 + 1e-12) + 1e-300);
    if (at_lo <= 1) {
        out.delta = fexp;
        bool any_div = false;
        for (const auto& f : factors)
            if (f.exponent() == fexp && f.divergence_type()) any_div = true;
        out.divergence_type = any_div;
        out.criterion_at_root = at_lo;
        out.set = fmt(out.delta, any_div);
        return out;
    }
    if (schottky_criterion(factors, hi) >= 1) throw Error(ErrorCode::FACTOR_SERIES_UNKNOWN, "criterion exceeds 1 at s = 50");
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        double mid = 0.5 * (lo + hi);
        if (schottky_criterion(factors, mid) > 1) lo = mid;
        else hi = mid;
    }
    out.delta = 0.5 * (lo + hi);
    out.root_from_criterion = true;
    out.criterion_at_root = schottky_criterion(factors, out.delta);
    out.divergence_type = std::abs(out.criterion_at_root - 1) < 1e-6;
    out.set = fmt(out.delta, out.divergence_type);
    return out;
}

GrowthFit growth_rate(const std::string& group, int r_max, size_t cap) {
    GrowthFit g;
    g.group = group;
    int dim = 0;
    bool heis = group == "heisenberg";
    if (!heis) {
        if (group.rfind("Z^", 0) != 0) throw Error(ErrorCode::MISMATCHED_GROUP, "unknown Cayley spec " + group);
        dim = std::stoi(group.substr(2));
        if (dim < 0 || dim > 6) throw Error(ErrorCode::MISMATCHED_GROUP, "Z^d needs 0 <= d <= 6");
    } else {
        dim = 3;
    }
    using Elem = std::array<int, 6>;
    auto key = [](const Elem& e) {
        uint64_t k = 0;
        for (int v : e) k = k * 0x9E3779B97F4A7C15ULL + uint64_t(int64_t(v) + (1 << 20));
        return k;
    };
    std::vector<Elem> gens;
    if (heis) {
        gens = {Elem{1, 0, 0}, Elem{-1, 0, 0}, Elem{0, 1, 0}, Elem{0, -1, 0}};
    } else {
        for (int i = 0; i < dim; ++i) {
            Elem e{};
            e[i] = 1;
            gens.push_back(e);
            e[i] = -1;
            gens.push_back(e);
        }
    }
    auto mul = [&](const Elem& a, const Elem& b) {
        Elem c{};
        for (int i = 0; i < 6; ++i) c[i] = a[i] + b[i];
        if (heis) c[2] = a[2] + b[2] + a[0] * b[1];
        return c;
    };
    std::unordered_set<uint64_t> seen;
    std::vector<Elem> frontier{Elem{}};
    seen.insert(key(Elem{}));
    g.ball.push_back(1);
    for (int r = 1; r <= r_max; ++r) {
        std::vector<Elem> next;
        for (const auto& e : frontier)
            for (const auto& s : gens) {
                Elem c = mul(e, s);
                if (seen.insert(key(c)).second) next.push_back(c);
            }
        if (seen.size() > cap) throw Error(ErrorCode::BUDGET_EXCEEDED, "ball exceeds the element budget");
        frontier.swap(next);
        g.ball.push_back((long long)seen.size());
    }
    if (g.ball.back() == 1 || r_max < 4) {
        g.alpha = {0, 0, 0};
        return g;
    }
    std::vector<double> x, y;
    for (int r = std::max(1, r_max / 2); r <= r_max; ++r) {
        x.push_back(std::log(double(r)));
        y.push_back(std::log(double(g.ball[r])));
    }
    g.alpha = fit_band(x, y, nullptr);
    return g;
}

BoundCheck parabolic_bound_check(const std::string& action_group, const ExponentFit& delta, const GrowthFit& growth) {
    if (action_group != growth.group)
        throw Error(ErrorCode::MISMATCHED_GROUP, "action group " + action_group + " differs from Cayley spec " + growth.group);
    BoundCheck b;
    b.group = action_group;
    b.delta = delta.delta;
    b.alpha = growth.alpha;
    b.pass = b.delta.hi >= growth.alpha.lo / 2;
    return b;
}

std::vector<double> translation_lattice_norms(int d, int k) {
    if (d < 1 || k < 0) throw Error(ErrorCode::OUT_OF_RANGE, "lattice needs d >= 1, k >= 0");
    std::vector<double> out;
    std::vector<int> v(d, -k);
    while (true) {
        double sq = 0;
        for (int x : v) sq += double(x) * x;
        out.push_back(dist_from_half_chord(0.5 * std::sqrt(sq)));
        int i = 0;
        while (i < d && v[i] == k) v[i++] = -k;
        if (i == d) break;
        ++v[i];
    }
    return out;
}

}  // namespace gromov
