#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gromov/groups.hpp"

namespace gromov {

struct Band {
    double value = 0;
    double lo = 0;
    double hi = 0;
    bool contains(double x) const { return lo <= x && x <= hi; }
};

struct ExponentFit {
    Band delta;
    double slope_se = 0;
    double window_lo = 0;
    double window_hi = 0;
    int samples = 0;
};

/// Orbit norms with counting function and Poincare series.
struct PoincareProfile {
    std::vector<double> norms;  // sorted

    long long count(double rho) const;  // N(rho) = #{norm <= rho}
    double series(double s) const;      // sum exp(-s norm)
    double max_norm() const { return norms.back(); }
};

/// Throws EMPTY_ORBIT (also when the identity is missing).
PoincareProfile build_profile(std::vector<double> norms);

/// Least-squares slope of log N(rho) over the upper half of [0, rho_max] (rho_max <= 0: largest norm).
/// The band is slope +- (3 standard errors + half the spread between the two half-window slopes).
/// Throws INSUFFICIENT_RANGE.
ExponentFit exponent_estimate(const PoincareProfile& p, double rho_max = 0);

struct NetProfile {
    double rho = 0;
    std::vector<int> members;  // indices into the sample, in sample order
    std::vector<double> norms;
    double delta = 0;
    Band band;
    bool fitted = false;
};

/// Greedy maximal rho-separated subset in sample order. Throws EMPTY.
NetProfile modified_exponent(const std::vector<double>& norms, const std::function<double(int, int)>& dist, double rho,
                             double rho_max = 0);

struct PoincareSet {
    double delta = 0;
    bool divergence_type = false;
    double criterion_at_root = 0;  // spectral radius at delta
    std::string set;               // "[0, d]", "[0, d)", "{0}" or "empty"
    bool root_from_criterion = false;
};

/// Off-diagonal matrix of Sigma_s(H_j) - 1; its spectral radius is the product criterion.
Mat schottky_matrix(const std::vector<Factor>& factors, double s);
double schottky_criterion(const std::vector<Factor>& factors, double s);
/// Exact exponent of a pure Schottky product by bisection on [1e-6, 50] to 1e-10.
/// Throws FACTOR_SERIES_UNKNOWN.
PoincareSet schottky_poincare_set(const std::vector<Factor>& factors);

struct GrowthFit {
    std::string group;
    std::vector<long long> ball;  // |B(R)|, R = 0..R_max
    Band alpha;
};

/// BFS ball growth of "Z^d" (d = 0 is the trivial group) or "heisenberg". Throws BUDGET_EXCEEDED.
GrowthFit growth_rate(const std::string& group, int r_max, size_t cap = 20'000'000);

struct BoundCheck {
    std::string group;
    Band delta;
    Band alpha;
    bool pass = false;
};

/// delta_hat + band >= alpha_hat / 2 - band. Throws MISMATCHED_GROUP.
BoundCheck parabolic_bound_check(const std::string& action_group, const ExponentFit& delta, const GrowthFit& growth);

/// Norms d(o, g o) of a lattice of translations x -> x + v (v in Z^d, |v|_inf <= k) on the half-space of dimension d+1.
std::vector<double> translation_lattice_norms(int d, int k);

}  // namespace gromov
