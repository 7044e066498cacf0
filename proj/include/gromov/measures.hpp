#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gromov/groups.hpp"
#include "gromov/poincare.hpp"

namespace gromov {

// ---------------------------------------------------------------- Patterson's weight

/// Orbit counts in shells [i h, (i+1) h) of the norm: explicit table entries, then the law
/// coeff * h * exp(delta rho) * rho^-power at the shell midpoint rho.
struct ShellLaw {
    double delta = 1;
    double coeff = 1;
    double power = 2;
    double h = 0.1;
    std::vector<double> table;

    double midpoint(long i) const { return (double(i) + 0.5) * h; }
    double log_shell(long i) const;
    /// The law diverges at delta iff power <= 1.
    bool divergent() const { return power <= 1; }
};

/// k(x) = 1 up to the first knot, then log k is piecewise linear in log x with slopes eps
/// decreasing block by block; beyond the last knot the slope stays at tail_eps.
struct PattersonWeight {
    bool trivial = false;
    std::vector<double> knots;   // values of log x
    std::vector<double> eps;     // slope on [knots[j], knots[j+1])
    std::vector<double> log_k;   // log k at knots
    double tail_eps = 0;

    double log_weight(double log_x) const;
    double k(double x) const { return std::exp(log_weight(std::log(x))); }
    /// Exponent in k(xy) <= x^eps(y) k(y).
    double epsilon(double y) const;

    // certificate
    double schedule_sum = 0;      // partial sum of the series at delta
    double schedule_end = 0;      // norm where the schedule stopped
    double convergent_sum = 0;    // partial sum at delta + gap
    double convergent_tail = 0;   // certified tail bound at delta + gap
    double convergent_cutoff = 0;
    double grid_worst = 0;        // max over the grid of log k(xy) - log k(y) - eps(y) log x
    int grid_pairs = 0;
};

/// Throws DELTA_INFINITE.
PattersonWeight patterson_weight(const ShellLaw& law, double bound = 1e6, double gap = 0.05, double tail_tol = 1e-9);

struct AtomicMeasure {
    std::vector<std::string> support;
    std::vector<double> weight;

    double total() const;
};

/// mu_s = sum k(e^norm) e^{-s norm} delta_x / Sigma_{s,k}. k may be null (k = 1).
/// Throws SERIES_DIVERGES when s <= delta_full or the truncated sum is not finite.
AtomicMeasure mu_s(const std::vector<std::string>& ids, const std::vector<double>& norms, const PattersonWeight* k, double s,
                   double delta_full = -kInf);

// ---------------------------------------------------------------- cylinder measures on pure Schottky trees

struct CylinderMeasure {
    TreeAction action;
    double delta = 0;
    Vec w;  // continuation weight after a syllable of each factor

    /// Mass of the syllable cylinder (limit points whose syllables start with g).
    double syllable(const Word& g) const;
    /// Mass of the generator cylinder (limit points whose generator expansion starts with g).
    double cylinder(const Word& g) const;
    /// Mass of Shad_o(g o, sigma). Integer, Cyclic and Table factors only.
    double shadow(const Word& g, double sigma) const;
    /// Mass of the visual ball B(eta, e^-t) = {zeta : <eta|zeta>_o > t}. Integer and Counting factors only.
    double ball(const std::vector<Letter>& syllables, int cusp, double t) const;
};

/// Throws NOT_DIVERGENCE_TYPE, FACTOR_SERIES_UNKNOWN.
CylinderMeasure schottky_cylinder_measure(const TreeAction& act);

struct ConformalityReport {
    int samples = 0;
    double max_residual = 0;    // relative
    double max_additivity = 0;  // children against parent, relative
};
ConformalityReport conformality_check(const CylinderMeasure& mu, int samples, uint64_t seed);

struct ShadowReport {
    int elements = 0;
    double min_ratio = 0;
    double max_ratio = 0;
    double spread = 0;  // max / min, inf when some shadow has zero mass
    bool infinite_spread = false;
    bool pass = false;
};

/// Ratios mu(Shad(g o, sigma)) e^{delta |g|} over every g with |g| <= rho_max (identity included).
/// Throws EMPTY_SHADOW.
ShadowReport shadow_lemma_check(const TreeAction& act, const std::function<double(const Word&, double)>& shadow_mass,
                                double delta, double sigma, double rho_max, double bound = 100);
/// Shadow mass of a point mass at the limit point of an address.
double point_mass_shadow(const TreeAction& act, const WordAddress& at, const Word& g, double sigma);

// ---------------------------------------------------------------- global measure formula

/// Limit point: an eventually periodic address, or prefix * p when cusp >= 0 (p the fixed point of that factor).
struct GmfPoint {
    WordAddress addr;
    int cusp = -1;
    std::string label;
};

struct GlobalMeasureContext {
    CylinderMeasure mu;
    double t0 = 0.5;
    double theta = 0;
    std::vector<int> cusps;  // counting factors

    /// Syllables of eta long enough to pass t_max (the parabolic tail is implicit).
    std::vector<Letter> syllables(const GmfPoint& eta, double t_max) const;
    double I(int cusp, double r) const;          // sum_{|h|_p >= R} |h|_p^{-2 delta}
    double N(int cusp, double r) const;          // #{|h|_p <= R}, arguments below 1 count the identity
    double m(const GmfPoint& eta, double t) const;
    double b(const GmfPoint& eta, double t) const;
    double ball(const GmfPoint& eta, double t) const;
};

/// t0: smallest value of {0.5, 1, ...} keeping the enumerated horoballs disjoint.
/// theta: smallest of {0, 0.5, ..., 10} with near-monotonicity constant <= monotone_cap on the samples.
struct ThetaChoice {
    double theta = 0;
    double constant = 0;
};
GlobalMeasureContext global_measure_context(const CylinderMeasure& mu);
ThetaChoice choose_theta(GlobalMeasureContext& ctx, const std::vector<GmfPoint>& samples, double t_max,
                         double monotone_cap = 10);
double horoball_gap(const GlobalMeasureContext& ctx, double t0, double rho_max);

/// Deterministic sample of limit points (random syllable prefixes with periodic tails, plus cusp points).
std::vector<GmfPoint> gmf_samples(const GlobalMeasureContext& ctx, int count, uint64_t seed);

struct SandwichReport {
    double sigma = 0;
    double constant = 0;
    bool pass = false;
    bool undersampled = false;
    std::string worst_point;
    double worst_t = 0;
    double lipschitz_defect = 0;  // max |b(t2)-b(t1)| - |t2-t1|
    int evaluations = 0;
};

/// Smallest sigma on {0, 0.25, ..., sigma_cap} with sandwich constant <= constant_cap over t in (0, t_max].
/// Throws SANDWICH_FAIL (message carries the worst point, or UNDERSAMPLED).
SandwichReport global_formula_verify(const GlobalMeasureContext& ctx, const std::vector<GmfPoint>& samples, double t_max,
                                     double t_step = 0.05, double sigma_cap = 3, double constant_cap = 100);

/// Relative gap between I_p(R) + R^{-2 delta} N_p(R) and the direct sum of (R v |h|_p)^{-2 delta};
/// zero unless R is itself a norm value, where ties count on both sides.
double cusp_identity_residual(const GlobalMeasureContext& ctx, int cusp, double r);

// ---------------------------------------------------------------- doubling and exact dimension

struct CuspLaw {
    enum class Kind { Power, PowerLog, Staircase, Counting, Tabulated };
    Kind kind = Kind::Power;
    double a = 1;      // R^a (log R)^-b
    double b = 0;
    double base = 2;   // base^floor(c (log R)^p)
    double c = 1;
    double p = 1;
    CountingSpec spec;             // N(R) = f(2 log R)
    std::vector<double> table;     // N(e^k), k = 0, 1, ...

    double log_count(double log_r) const;
    std::string describe() const;
};

enum class TriState { Yes, No, Undecided };
const char* tri_name(TriState t);

struct DoublingReport {
    TriState doubling = TriState::Undecided;
    TriState exact_dimensional = TriState::Undecided;
    double dexp_lower = 0;          // asymptotic values
    double dexp_upper = 0;
    double window_lower = 0;        // window estimates
    double window_upper = 0;
    double sigma_delta_partial = 0; // sum e^{-2 delta k} N(e^k)
    double sigma_delta_tail = 0;
    bool sigma_delta_converges = false;
    double hlog_partial = 0;        // sum e^{-2 delta k} k N(e^k)
    double hlog_tail = 0;
    bool hlog_converges = false;
    std::string witness;
};

/// tree_lineal: the group is a pure Schottky product of the cusp with a lineal group on a tree,
/// where divergence of the series rules out exact dimensionality. Throws TAIL_UNKNOWN.
DoublingReport doubling_and_dimension_tests(const CuspLaw& law, double delta, bool tree_lineal, int terms = 200);

}  // namespace gromov
