#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gromov/coarse.hpp"
#include "gromov/models.hpp"
#include "gromov/rtree.hpp"

namespace gromov {

enum class FactorKind {
    Integer,    ///< Z acting by translation of length r on a line
    Cyclic,     ///< Z/N with a norm per element
    Table,      ///< finite group from a multiplication table
    Counting,   ///< direct sum of Z/N_n with ultrametric norm max lambda_n
    Tabulated,  ///< norm sample without a known series
};

/// Factor group with int64 element ids; 0 is the identity.
struct Factor {
    FactorKind kind = FactorKind::Integer;
    std::string name;
    double r = 1;
    int order = 0;
    std::vector<double> norms;
    std::vector<std::vector<int>> table;
    CountingSpec counting;
    int counting_levels = 0;               // digits representable in an int64 id
    std::vector<long long> counting_place;  // mixed-radix place values

    bool finite() const;
    bool valid(int64_t a) const;
    int64_t mul(int64_t a, int64_t b) const;
    int64_t inv(int64_t a) const;
    double norm(int64_t a) const;
    /// Generator length of a letter: |k| for Z, 1 otherwise.
    int letter_length(int64_t a) const;
    /// Deterministic enumeration key.
    int64_t order_key(int64_t a) const;
    /// Non-identity elements with norm <= max_norm and letter length <= max_len, in key order.
    std::vector<int64_t> elements(double max_norm, int max_len) const;
    /// Sigma_s(H) - 1 in closed form; +inf where it diverges. Throws FACTOR_SERIES_UNKNOWN.
    double series_minus_one(double s) const;
    /// Critical exponent of the factor and whether the series diverges there.
    double exponent() const;
    bool divergence_type() const;
    std::string describe() const;
};

Factor factor_integer(double r);
Factor factor_cyclic(int n, double r);
Factor factor_cyclic(const std::vector<double>& norms);
Factor factor_table(const std::vector<std::vector<int>>& table, const std::vector<double>& norms);
Factor factor_counting(const CountingSpec& spec);
Factor factor_tabulated(const std::vector<double>& norms);

struct Letter {
    int factor = 0;
    int64_t elem = 0;

    bool operator==(const Letter& o) const { return factor == o.factor && elem == o.elem; }
};
using Word = std::vector<Letter>;

struct FreeProduct {
    std::vector<Factor> factors;

    void check(const Word& w) const;
    /// Free-product normal form. Throws BAD_FACTOR.
    Word reduce(const Word& w) const;
    Word multiply(const Word& a, const Word& b) const;
    Word inverse(const Word& w) const;
    int generator_length(const Word& w) const;
};

std::string word_to_string(const Word& w);

enum class ActionKind { PureSchottky, GeometricProduct };

/// Free product acting on a tree: either the pure Schottky product (norm = sum of letter norms)
/// or the geometric product over a base tree with one attachment point per factor.
struct TreeAction {
    ActionKind kind = ActionKind::PureSchottky;
    FreeProduct group;
    RTree base;
    TreePoint base_o;
    std::vector<TreePoint> attach;

    double norm(const Word& w) const;
    double dist(const Word& a, const Word& b) const { return norm(group.multiply(group.inverse(a), b)); }
    double letter_norm(const Letter& l) const;
};

TreeAction pure_schottky_action(const std::vector<Factor>& factors);
/// Throws P_NOT_IN_Y, EMPTY_FACTOR.
TreeAction geometric_product_action(const RTree& y, const TreePoint& o, const std::vector<TreePoint>& points,
                                    const std::vector<Factor>& groups);

struct OrbitEntry {
    Word word;
    double norm = 0;
};

struct OrbitCutoff {
    double max_norm = kInf;
    int max_length = -1;  // generator length; -1 = unbounded
    size_t cap = 5'000'000;
};

/// Complete duplicate-free enumeration in (length, factor, element) order. Throws BUDGET_EXCEEDED.
std::vector<OrbitEntry> orbit_enumerate(const TreeAction& action, const OrbitCutoff& cut);
/// Norms only (same multiset as orbit_enumerate), for large cutoffs.
std::vector<double> orbit_norms(const TreeAction& action, const OrbitCutoff& cut);

// ---------------------------------------------------------------- boundary addresses

/// Eventually periodic boundary address prefix * period^infinity.
struct WordAddress {
    Word prefix;
    Word period;
};

Word address_expansion(const FreeProduct& g, const WordAddress& a, int reps);
/// Throws NOT_LIMIT_POINT when the period has finite order.
void check_address(const FreeProduct& g, const WordAddress& a);
double address_gromov(const TreeAction& act, const WordAddress& a, const WordAddress& b);
double address_word_gromov(const TreeAction& act, const WordAddress& a, const Word& w);
double address_busemann(const TreeAction& act, const WordAddress& a, const Word& x, const Word& y);
/// Syllable cylinder membership: the address starts with the reduced word g.
bool in_cylinder(const TreeAction& act, const Word& g, const WordAddress& a);
/// Prefix order on reduced words (syllable-wise).
bool is_prefix(const Word& g, const Word& h);

struct CodedPoint {
    Word cylinder;
    double radius = 0;
    double fitted_c = 1;
};
/// pi(address) located in the cylinder of the first `depth` syllables. Throws NOT_SEPARATED.
CodedPoint coding_limit_point(const TreeAction& act, const Word& address, int depth);

// ---------------------------------------------------------------- classification

enum class IsometryClass { Elliptic, Parabolic, Loxodromic };
const char* class_name(IsometryClass c);

struct ModelClassification {
    IsometryClass kind = IsometryClass::Elliptic;
    double translation_length = 0;
    std::optional<ModelBoundary> attracting, repelling, fixed;
    double fixed_derivative = 1;
    double orbit_bound = 0;
    std::vector<double> orbit;        // d(o, g^n o), n = 1..n_max
    std::vector<double> doubling;     // d(o, g^(2^k) o)
    std::string evidence;
};
/// Throws INCONCLUSIVE.
ModelClassification classify_isometry(const ModelContext& ctx, const LorentzMap& g, int n_max = 32);

struct TreeClassification {
    IsometryClass kind = IsometryClass::Elliptic;
    double translation_length = 0;
    std::optional<WordAddress> attracting, repelling;
    Word conjugator, core;
    std::string evidence;
};
TreeClassification classify_isometry(const TreeAction& act, const Word& g);

// ---------------------------------------------------------------- Edelstein family

struct EdelsteinSpec {
    std::function<double(int)> a;  // k >= 1
    std::function<double(int)> b;
    int truncation = 30;
    std::string family;  // "factorial", "geometric" or "custom"
};

EdelsteinSpec edelstein_factorial(int truncation = 30);
EdelsteinSpec edelstein_geometric(int truncation = 60);

struct EdelsteinDisplacement {
    double squared = 0;       // ||g^n(0)||^2 = sum 4 b_k^2 sin^2(pi n a_k), partial sum
    double tail_bound = 0;    // sum_{k>K} 4 b_k^2 min(1, (pi n a_k)^2)
    double dist_form = 0;     // sum b_k^2 dist(n a_k, Z)^2 including its closed tail
    double hyperbolic = 0;    // arccosh(1 + squared/2)
};

/// Throws TAIL_TOO_LARGE when the certified tail exceeds tail_tol.
EdelsteinDisplacement edelstein_displacement(const EdelsteinSpec& spec, long long n, double tail_tol = 1e-9);
/// Finite truncation as a similarity of R^{2K} (rotation blocks plus translation).
Similarity edelstein_similarity(const EdelsteinSpec& spec);

// ---------------------------------------------------------------- tree realizations

struct RealizedAction {
    RTree tree;
    std::vector<OrbitEntry> orbit;   // enumerated words
    std::vector<int> orbit_vertex;   // tree vertex of w.o
};

/// Pure Schottky product realized by stapling truncated factor trees. Throws EMPTY_FACTOR.
RealizedAction pure_schottky_tree(const std::vector<Factor>& factors, int max_length);
/// Geometric product realized by stapling copies of the base tree.
RealizedAction geometric_product_tree(const TreeAction& act, int max_length);

/// Cone over the ultrametric group of a counting spec; orbit of o lies on a horosphere.
struct ParabolicTree {
    ConeTree cone;
    Factor group;
    std::vector<int64_t> elements;  // element of each cone point
    /// N(rho) from the realized orbit.
    long long orbit_count(double rho) const;
    /// Index of g*h.
    int act(int64_t g, int idx) const;
};
ParabolicTree parabolic_from_counting(const CountingSpec& spec, double max_norm);

}  // namespace gromov
