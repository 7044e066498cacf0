#pragma once

#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "gromov/groups.hpp"
#include "gromov/measures.hpp"

namespace gromov {

/// One cylinder P_w of a partition structure. The boundary carries the ultrametric
/// dist(x, y) = diam of the deepest node containing both.
struct PartitionNode {
    int parent = -1;
    int depth = 0;
    int symbol = 0;              // index among the parent's children
    std::vector<int> children;   // ordered; retained subsets are initial segments
    double diam = 0;             // D_w
    double sep = std::numeric_limits<double>::infinity();  // dist(P_w, Z \ P_parent)
};

struct PartitionStructure {
    std::vector<PartitionNode> nodes;  // nodes[0] is the root, parents precede children
    double kappa = 0.5;
    double lambda = 0.5;
    double s = 0;                      // declared thickness exponent, 0 = none declared
    int depth = 0;

    std::string label(int node) const;
    /// Nodes on the path root..node.
    std::vector<int> path(int node) const;
    int add(int parent, double diam, double sep);
};

/// b-ary tree with D_{wa} = ratio * D_w, D_root = 1.
PartitionStructure uniform_structure(int branching, double ratio, int depth);
/// Cylinders of a pure Schottky product of Integer factors, cut at generator length `depth`:
/// D_w = exp(-|w|), separation exp(-|parent of w|). Throws BAD_FACTOR.
PartitionStructure free_group_structure(const TreeAction& act, int depth, double s = 0);
/// Nested {"diam", "sep"?, "children"} tree; "kappa", "lambda", "s" at top level.
PartitionStructure structure_from_json(const nlohmann::json& j);
nlohmann::json structure_to_json(const PartitionStructure& p, int max_depth = 4);

struct ValidationReport {
    bool valid = true;
    int node = -1;
    std::string clause;  // nesting | kappa | lambda | thickness
    std::string detail;
    int checked = 0;
    double worst_kappa = std::numeric_limits<double>::infinity();  // min sep / D_parent
    double worst_low = std::numeric_limits<double>::infinity();    // min D_child / D_parent
    double worst_high = 0;                                         // max D_child / D_parent
    double worst_thickness = std::numeric_limits<double>::infinity();  // min sum D_child^s / D^s
};

/// Exhaustive check of every node; stops at the first violation.
ValidationReport validate(const PartitionStructure& p, double tol = 1e-12);

struct SubstructureMeasure {
    double s = 0;
    double c = 0;                    // 1 - lambda^s
    std::vector<double> weight;      // unnormalised mu_n(w); 0 off the retained tree
    std::vector<int> retained;       // N_w per node, -1 off the retained tree or at the cut
    AtomicMeasure leaves;            // normalised to total 1 over the retained cut nodes
    int retained_nodes = 0;
    int min_branching = 0;
    double regularity_low = 0;       // min mu / (c D^s)
    double regularity_high = 0;      // max mu / D^s
    bool regular = true;
    double consistency = 0;          // max |mu(w) - sum mu(wa)| / mu(w)
    bool initial_segments = true;
};

/// Throws NOT_THICK, DEGENERATE (structure fails another clause).
SubstructureMeasure thick_substructure_measure(const PartitionStructure& p, double s);

struct AhlforsReport {
    int k = 0;                       // ceil(log kappa^2 / log lambda)
    double c1 = 0, c2 = 0;           // constants of the probability measure
    double c1_raw = 0, c2_raw = 0;   // constants of the unnormalised weights
    double c1_bound = 0, c2_bound = 0;
    long samples = 0;
    bool sandwich = true;
    double leaf_sum = 0;
    double hd_lower = 0;             // mass distribution: HD(support) >= s
    bool pass = false;
};

/// Every closed ball B(z, r), r <= kappa D_root, that resolves above the cut. Throws BOUND_FAIL.
AhlforsReport ahlfors_check(const SubstructureMeasure& mu, const PartitionStructure& p);

}  // namespace gromov
