#pragma once

#include <Eigen/Dense>
#include <string>

#include "gromov/error.hpp"

namespace gromov {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kTol = 1e-9;
constexpr double kFitTol = 1e-6;
constexpr int kMaxDim = 64;

enum class Model { Hyperboloid, Ball, HalfSpace };

const char* model_name(Model m);
Model model_from_name(const std::string& s);

/// A point of real hyperbolic n-space in one of three models.
/// Hyperboloid coordinates have length n+1 and are stored with Q = -1, x0 > 0.
/// Ball (Klein) and half-space coordinates have length n; the half-space height is coords[0].
struct ModelPoint {
    Model model = Model::Hyperboloid;
    Vec coords;

    int dim() const { return model == Model::Hyperboloid ? int(coords.size()) - 1 : int(coords.size()); }
};

/// Validates and normalizes. Throws INVALID_POINT.
ModelPoint make_point(Model model, const Vec& coords);
ModelPoint origin(Model model, int n);
void validate(const ModelPoint& p);

double lorentz_form(const Vec& x, const Vec& y);
double lorentz_quad(const Vec& x);
Vec normalize_hyperboloid(const Vec& x);

/// Hyperboloid coordinates of any model point.
Vec to_hyperboloid(const ModelPoint& p);
ModelPoint from_hyperboloid(const Vec& x, Model target);

double dist(const ModelPoint& p, const ModelPoint& q);
ModelPoint convert(const ModelPoint& p, Model target);
ModelPoint geodesic_point(const ModelPoint& p, const ModelPoint& q, double t);

/// Boundary point of a model. Ball: unit vector. Half-space: vector of length n-1, or infinity.
/// Hyperboloid: null vector with x0 = 1.
struct ModelBoundary {
    Model model = Model::Hyperboloid;
    Vec data;
    bool at_infinity = false;
};

ModelBoundary make_boundary(Model model, const Vec& data);
ModelBoundary halfspace_infinity(int n);
/// Null vector representative normalized to x0 = 1.
Vec boundary_null_vector(const ModelBoundary& xi);
ModelBoundary boundary_from_null(const Vec& v, Model target);
int boundary_dim(const ModelBoundary& xi);

struct LorentzMap {
    Mat m;

    int dim() const { return int(m.rows()) - 1; }
    Vec apply(const Vec& x) const { return m * x; }
    ModelPoint apply(const ModelPoint& p) const;
    ModelBoundary apply(const ModelBoundary& xi) const;
    LorentzMap compose(const LorentzMap& other) const { return {m * other.m}; }
    LorentzMap inverse() const;
    double op_norm() const;
    /// max |M^T J M - J|
    double lorentz_defect() const;
};

LorentzMap lorentz_identity(int n);
/// Boost in the (x0, xj) plane, 1 <= j <= n. Throws BAD_AXIS.
LorentzMap lorentz_boost(int n, int j, double t);
/// Rotation in the spatial (xi, xj) plane.
LorentzMap lorentz_rotation(int n, int i, int j, double angle);

/// g(x') = scale * orth * x' + shift on R^{n-1}.
struct Similarity {
    double scale = 1.0;
    Mat orth;
    Vec shift;

    Vec apply(const Vec& x) const { return scale * (orth * x) + shift; }
};

Similarity make_similarity(double scale, const Mat& orth, const Vec& shift);

/// Extension of a similarity of R^{n-1} to the half-space, with its Lorentz matrix.
struct HalfSpaceIsometry {
    Similarity g;
    LorentzMap lorentz;

    ModelPoint operator()(const ModelPoint& x) const;
};

HalfSpaceIsometry poincare_extension(const Similarity& g);

double busemann_halfspace(const ModelPoint& x, const ModelPoint& y);

/// Stable arccosh of 1 + 2 s^2 given s = sinh(d/2).
double dist_from_half_chord(double s);

}  // namespace gromov
