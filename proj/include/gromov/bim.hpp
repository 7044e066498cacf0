#pragma once

#include <vector>

#include "gromov/models.hpp"
#include "gromov/rtree.hpp"

namespace gromov {

/// Finite tree configuration to embed: pairwise tree distances and the base lambda > 1.
struct BimConfig {
    double lambda = M_E;
    std::vector<std::vector<double>> d;

    int size() const { return int(d.size()); }
};

BimConfig bim_config(const RTree& t, const std::vector<TreePoint>& points, double lambda = M_E);

struct BimForm {
    Mat b;               // b(i,j) = -lambda^d(i,j)
    Vec eigenvalues;     // ascending
    Mat eigenvectors;
    int negative = 0;
    int positive = 0;
    double min_abs_eigenvalue = 0;
};

/// Throws NOT_TREE_METRIC, SIGNATURE_FAIL (also when lambda^d would overflow).
BimForm build_form(const BimConfig& cfg);

struct BimEmbedding {
    BimForm form;
    /// Columns are hyperboloid coordinates (dimension m-1) of the points; the first point sits at o.
    Mat points;
    /// Linear map from coefficient space to hyperboloid coordinates: points = frame * I.
    Mat frame;

    ModelPoint point(int i) const { return make_point(Model::Hyperboloid, points.col(i)); }
    /// max |cosh d(psi_i, psi_j) - lambda^d(i,j)|
    double identity_residual(const BimConfig& cfg) const;
};

BimEmbedding embed(const BimConfig& cfg);

/// Lorentz map with M psi(i) = psi(sigma[i]) for every i with sigma[i] >= 0.
/// A partial sigma is extended across the orthogonal complement of the spanned subspace.
/// Throws NOT_ISOMETRY.
LorentzMap represent_isometry(const BimConfig& cfg, const BimEmbedding& emb, const std::vector<int>& sigma);

/// max |M psi(i) - psi(sigma[i])| over defined i.
double equivariance_residual(const BimEmbedding& emb, const LorentzMap& m, const std::vector<int>& sigma);

}  // namespace gromov
