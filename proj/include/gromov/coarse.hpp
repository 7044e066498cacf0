#pragma once

#include <utility>
#include <variant>

#include "gromov/models.hpp"
#include "gromov/rtree.hpp"

namespace gromov {

/// Gromov triple on a hyperbolic model; the base b is fixed to e.
struct ModelContext {
    Model model = Model::Hyperboloid;
    int n = 2;
    ModelPoint o;
};

/// Gromov triple on a finite metric tree; boundary points are rays.
struct TreeContext {
    const RTree* tree = nullptr;
    TreePoint o;
};

ModelContext model_context(Model model, int n);
ModelContext model_context(Model model, const ModelPoint& o);
TreeContext tree_context(const RTree& tree, const TreePoint& o);

using ModelBord = std::variant<ModelPoint, ModelBoundary>;
using TreeBord = std::variant<TreePoint, TreeRay>;

/// Busemann cocycle beta_xi(x, y) = lim d(z,x) - d(z,y), z -> xi.
double busemann(const ModelContext& ctx, const ModelBoundary& xi, const ModelPoint& x, const ModelPoint& y);
double busemann(const TreeContext& ctx, const TreeRay& xi, const TreePoint& x, const TreePoint& y);

/// <x|y>_z; infinite iff x = y is a boundary point.
double gromov_product(const ModelContext& ctx, const ModelBord& x, const ModelBord& y, const ModelPoint& z);
double gromov_product(const TreeContext& ctx, const TreeBord& x, const TreeBord& y, const TreePoint& z);

/// D_o(x,y) = exp(-<x|y>_o).
double visual_dist(const ModelContext& ctx, const ModelBord& x, const ModelBord& y);
double visual_dist(const TreeContext& ctx, const TreeBord& x, const TreeBord& y);

/// D_{xi,o}(x,y) = exp(-(<x|y>_o - <x|xi>_o - <y|xi>_o)). Throws EQUALS_XI.
double hamenstadt_dist(const ModelContext& ctx, const ModelBoundary& xi, const ModelBord& x, const ModelBord& y);
double hamenstadt_dist(const TreeContext& ctx, const TreeRay& xi, const TreeBord& x, const TreeBord& y);

template <class P>
struct Shadow {
    P z;
    P x;
    double sigma = 0;
};

/// <z|xi>_x <= sigma (inclusive).
bool in_shadow(const ModelContext& ctx, const Shadow<ModelPoint>& s, const ModelBoundary& xi);
bool in_shadow(const TreeContext& ctx, const Shadow<TreePoint>& s, const TreeRay& xi);

/// Metric derivative g'(xi) = exp(beta_xi(o, g^{-1} o)) of a Lorentz map at a boundary point.
double metric_derivative(const ModelContext& ctx, const LorentzMap& g, const ModelBoundary& xi);

/// lim ((g^n)'(xi))^{1/n} at a fixed point, from beta_xi(o, g^{-n} o) / n with n <= n_max
/// (fewer steps when the orbit runs far enough for the Lorentz form to lose precision).
/// Throws NOT_FIXED.
double dynamical_derivative(const ModelContext& ctx, const LorentzMap& g, const ModelBoundary& xi, int n_max = 32);

/// Generalized polar coordinates (r, theta). Throws DEGENERATE when xi1 = xi2.
std::pair<double, double> polar_coords(const ModelContext& ctx, const ModelBoundary& xi1, const ModelBoundary& xi2,
                                       const ModelPoint& x);
std::pair<double, double> polar_coords(const TreeContext& ctx, const TreeRay& xi1, const TreeRay& xi2, const TreePoint& x);

/// True when the two boundary points coincide (projectively, to tolerance).
bool same_boundary(const ModelBoundary& a, const ModelBoundary& b, double tol = 1e-9);

}  // namespace gromov
