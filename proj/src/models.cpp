#include "gromov/models.hpp"

#include <cmath>

namespace gromov {

const char* model_name(Model m) {
    switch (m) {
        case Model::Hyperboloid: return "hyperboloid";
        case Model::Ball: return "ball";
        case Model::HalfSpace: return "halfspace";
    }
    return "?";
}

Model model_from_name(const std::string& s) {
    if (s == "hyperboloid") return Model::Hyperboloid;
    if (s == "ball") return Model::Ball;
    if (s == "halfspace" || s == "half-space") return Model::HalfSpace;
    throw Error(ErrorCode::INVALID_POINT, "unknown model '" + s + "'");
}

double lorentz_form(const Vec& x, const Vec& y) {
    return -x(0) * y(0) + x.tail(x.size() - 1).dot(y.tail(y.size() - 1));
}

double lorentz_quad(const Vec& x) { return lorentz_form(x, x); }

Vec normalize_hyperboloid(const Vec& x) {
    double q = lorentz_quad(x);
    if (!(q < 0)) throw Error(ErrorCode::INVALID_POINT, "vector is not timelike");
    Vec y = x / std::sqrt(-q);
    if (y(0) < 0) y = -y;
    return y;
}

void validate(const ModelPoint& p) {
    int n = p.dim();
    bool hyp = p.model == Model::Hyperboloid;
    if (n < (hyp ? 0 : 1) || n > kMaxDim)
        throw Error(ErrorCode::INVALID_POINT, "dimension out of range");
    if (!p.coords.allFinite()) throw Error(ErrorCode::INVALID_POINT, "non-finite coordinate");
    switch (p.model) {
        case Model::Hyperboloid:
            if (std::abs(lorentz_quad(p.coords) + 1) > 1e-7 || p.coords(0) <= 0)
                throw Error(ErrorCode::INVALID_POINT, "hyperboloid point not normalized");
            break;
        case Model::Ball:
            if (p.coords.squaredNorm() >= 1) throw Error(ErrorCode::INVALID_POINT, "ball point outside unit ball");
            break;
        case Model::HalfSpace:
            if (p.coords(0) <= 0) throw Error(ErrorCode::INVALID_POINT, "half-space height must be positive");
            break;
    }
}

ModelPoint make_point(Model model, const Vec& coords) {
    ModelPoint p{model, coords};
    if (model == Model::Hyperboloid) {
        if (coords.size() < 1 || !coords.allFinite())
            throw Error(ErrorCode::INVALID_POINT, "bad hyperboloid coordinates");
        if (!(lorentz_quad(coords) < 0) || coords(0) <= 0)
            throw Error(ErrorCode::INVALID_POINT, "hyperboloid point must be future timelike");
        p.coords = normalize_hyperboloid(coords);
    }
    validate(p);
    return p;
}

ModelPoint origin(Model model, int n) {
    switch (model) {
        case Model::Hyperboloid: {
            Vec x = Vec::Zero(n + 1);
            x(0) = 1;
            return make_point(model, x);
        }
        case Model::Ball: return make_point(model, Vec::Zero(n));
        case Model::HalfSpace: {
            Vec x = Vec::Zero(n);
            x(0) = 1;
            return make_point(model, x);
        }
    }
    throw Error(ErrorCode::INVALID_POINT, "bad model");
}

Vec to_hyperboloid(const ModelPoint& p) {
    int n = p.dim();
    switch (p.model) {
        case Model::Hyperboloid: return p.coords;
        case Model::Ball: {
            Vec x(n + 1);
            x(0) = 1;
            x.tail(n) = p.coords;
            return normalize_hyperboloid(x);
        }
        case Model::HalfSpace: {
            double r2 = p.coords.squaredNorm();
            Vec x(n + 1);
            x(0) = 1 + r2;
            x(1) = 1 - r2;
            x.tail(n - 1) = 2 * p.coords.tail(n - 1);
            return normalize_hyperboloid(x);
        }
    }
    return p.coords;
}

ModelPoint from_hyperboloid(const Vec& xin, Model target) {
    Vec x = normalize_hyperboloid(xin);
    int n = int(x.size()) - 1;
    switch (target) {
        case Model::Hyperboloid: return ModelPoint{target, x};
        case Model::Ball: return make_point(target, x.tail(n) / x(0));
        case Model::HalfSpace: {
            // representative with x0 + x1 = 2
            Vec y = x * (2.0 / (x(0) + x(1)));
            Vec h(n);
            h(0) = std::sqrt(-lorentz_quad(y)) / 2;
            h.tail(n - 1) = y.tail(n - 1) / 2;
            return make_point(target, h);
        }
    }
    throw Error(ErrorCode::INVALID_POINT, "bad model");
}

double dist_from_half_chord(double s) { return 2 * std::asinh(s); }

double dist(const ModelPoint& p, const ModelPoint& q) {
    if (p.model != q.model) throw Error(ErrorCode::MODEL_MISMATCH, "points in different models");
    if (p.coords.size() != q.coords.size()) throw Error(ErrorCode::MODEL_MISMATCH, "dimension mismatch");
    validate(p);
    validate(q);
    if (p.model == Model::HalfSpace) {
        double s = (q.coords - p.coords).norm() / (2 * std::sqrt(p.coords(0) * q.coords(0)));
        return dist_from_half_chord(s);
    }
    Vec x = to_hyperboloid(p), y = to_hyperboloid(q);
    // -B(x,y) - 1 = Q(x-y)/2 on the unit hyperboloid
    double qd = lorentz_quad(x - y);
    return dist_from_half_chord(std::sqrt(std::max(qd, 0.0)) / 2);
}

ModelPoint convert(const ModelPoint& p, Model target) {
    validate(p);
    if (p.model == target) return p;
    return from_hyperboloid(to_hyperboloid(p), target);
}

ModelPoint geodesic_point(const ModelPoint& p, const ModelPoint& q, double t) {
    double d = dist(p, q);
    if (d < 1e-15) throw Error(ErrorCode::DEGENERATE, "geodesic endpoints coincide");
    if (t < 0 || t > d * (1 + 1e-12) + 1e-15) throw Error(ErrorCode::OUT_OF_RANGE, "t outside [0, d(p,q)]");
    if (t == 0) return p;
    if (t >= d) return q;
    Vec z = to_hyperboloid(p), y = to_hyperboloid(q);
    Vec w = (y - std::cosh(d) * z) / std::sinh(d);
    Vec x = std::cosh(t) * z + std::sinh(t) * w;
    return from_hyperboloid(x, p.model);
}

ModelBoundary make_boundary(Model model, const Vec& data) {
    ModelBoundary xi{model, data, false};
    switch (model) {
        case Model::Ball:
            if (std::abs(data.norm() - 1) > 1e-9) throw Error(ErrorCode::INVALID_POINT, "ball boundary point must be a unit vector");
            xi.data = data / data.norm();
            break;
        case Model::HalfSpace:
            if (!data.allFinite()) throw Error(ErrorCode::INVALID_POINT, "non-finite boundary vector");
            break;
        case Model::Hyperboloid: {
            if (data.size() < 2 || data(0) <= 0) throw Error(ErrorCode::INVALID_POINT, "null vector needs positive time coordinate");
            Vec v = data / data(0);
            if (std::abs(lorentz_quad(v)) > 1e-9) throw Error(ErrorCode::INVALID_POINT, "vector is not null");
            xi.data = v;
            break;
        }
    }
    return xi;
}

ModelBoundary halfspace_infinity(int n) { return ModelBoundary{Model::HalfSpace, Vec::Zero(n - 1), true}; }

int boundary_dim(const ModelBoundary& xi) {
    switch (xi.model) {
        case Model::Ball: return int(xi.data.size());
        case Model::HalfSpace: return int(xi.data.size()) + 1;
        case Model::Hyperboloid: return int(xi.data.size()) - 1;
    }
    return 0;
}

Vec boundary_null_vector(const ModelBoundary& xi) {
    int n = boundary_dim(xi);
    Vec v(n + 1);
    switch (xi.model) {
        case Model::Hyperboloid: return xi.data;
        case Model::Ball:
            v(0) = 1;
            v.tail(n) = xi.data;
            return v;
        case Model::HalfSpace:
            if (xi.at_infinity) {
                v.setZero();
                v(0) = 1;
                v(1) = -1;
                return v;
            }
            {
                double b2 = xi.data.squaredNorm();
                v(0) = 1 + b2;
                v(1) = 1 - b2;
                v.tail(n - 1) = 2 * xi.data;
                return v / v(0);
            }
    }
    return v;
}

ModelBoundary boundary_from_null(const Vec& vin, Model target) {
    Vec v = vin / vin(0);
    int n = int(v.size()) - 1;
    switch (target) {
        case Model::Hyperboloid: return ModelBoundary{target, v, false};
        case Model::Ball: return ModelBoundary{target, v.tail(n) / v.tail(n).norm(), false};
        case Model::HalfSpace: {
            double s = v(0) + v(1);
            if (std::abs(s) < 1e-13) return halfspace_infinity(n);
            Vec y = v * (2.0 / s);
            return ModelBoundary{target, y.tail(n - 1) / 2, false};
        }
    }
    return ModelBoundary{target, v, false};
}

ModelPoint LorentzMap::apply(const ModelPoint& p) const {
    if (p.dim() != dim()) throw Error(ErrorCode::MODEL_MISMATCH, "dimension mismatch");
    return from_hyperboloid(m * to_hyperboloid(p), p.model);
}

ModelBoundary LorentzMap::apply(const ModelBoundary& xi) const {
    Vec v = m * boundary_null_vector(xi);
    if (v(0) < 0) v = -v;
    return boundary_from_null(v, xi.model);
}

LorentzMap LorentzMap::inverse() const {
    int n1 = int(m.rows());
    Mat j = Mat::Identity(n1, n1);
    j(0, 0) = -1;
    return {j * m.transpose() * j};
}

double LorentzMap::op_norm() const {
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(0);
}

double LorentzMap::lorentz_defect() const {
    int n1 = int(m.rows());
    Mat j = Mat::Identity(n1, n1);
    j(0, 0) = -1;
    return (m.transpose() * j * m - j).cwiseAbs().maxCoeff();
}

LorentzMap lorentz_identity(int n) { return {Mat::Identity(n + 1, n + 1)}; }

LorentzMap lorentz_boost(int n, int j, double t) {
    if (j < 1 || j > n) throw Error(ErrorCode::BAD_AXIS, "boost axis must satisfy 1 <= j <= n");
    Mat m = Mat::Identity(n + 1, n + 1);
    m(0, 0) = std::cosh(t);
    m(j, j) = std::cosh(t);
    m(0, j) = std::sinh(t);
    m(j, 0) = std::sinh(t);
    return {m};
}

LorentzMap lorentz_rotation(int n, int i, int j, double angle) {
    if (i < 1 || i > n || j < 1 || j > n || i == j) throw Error(ErrorCode::BAD_AXIS, "rotation axes must be distinct spatial axes");
    Mat m = Mat::Identity(n + 1, n + 1);
    m(i, i) = std::cos(angle);
    m(j, j) = std::cos(angle);
    m(i, j) = -std::sin(angle);
    m(j, i) = std::sin(angle);
    return {m};
}

Similarity make_similarity(double scale, const Mat& orth, const Vec& shift) {
    if (!(scale > 0)) throw Error(ErrorCode::INVALID_POINT, "similarity scale must be positive");
    if (orth.rows() != orth.cols() || orth.rows() != shift.size())
        throw Error(ErrorCode::INVALID_POINT, "similarity shape mismatch");
    Mat d = orth.transpose() * orth - Mat::Identity(orth.rows(), orth.rows());
    if (d.size() > 0 && d.cwiseAbs().maxCoeff() > kTol) throw Error(ErrorCode::INVALID_POINT, "matrix is not orthogonal");
    return {scale, orth, shift};
}

HalfSpaceIsometry poincare_extension(const Similarity& g) {
    int k = int(g.shift.size());  // n - 1
    int n = k + 1;
    double lam = g.scale;
    const Vec& b = g.shift;
    // light-cone coordinates u = x0 + x1, v = x0 - x1, y = (x2..xn):
    // u' = u/lam, v' = lam v + 2 b.T y + |b|^2 u/lam, y' = T y + b u/lam
    Mat m(n + 1, n + 1);
    for (int c = 0; c <= n; ++c) {
        Vec e = Vec::Zero(n + 1);
        e(c) = 1;
        double u = e(0) + e(1), v = e(0) - e(1);
        Vec y = e.tail(k);
        double u2 = u / lam;
        double v2 = lam * v + 2 * b.dot(g.orth * y) + b.squaredNorm() * u / lam;
        Vec y2 = g.orth * y + b * (u / lam);
        m(0, c) = (u2 + v2) / 2;
        m(1, c) = (u2 - v2) / 2;
        m.block(2, c, k, 1) = y2;
    }
    return {g, {m}};
}

ModelPoint HalfSpaceIsometry::operator()(const ModelPoint& x) const {
    if (x.model != Model::HalfSpace) throw Error(ErrorCode::MODEL_MISMATCH, "extension acts on half-space points");
    validate(x);
    int n = x.dim();
    Vec y(n);
    y(0) = g.scale * x.coords(0);
    y.tail(n - 1) = g.apply(x.coords.tail(n - 1));
    return make_point(Model::HalfSpace, y);
}

double busemann_halfspace(const ModelPoint& x, const ModelPoint& y) {
    if (x.model != Model::HalfSpace || y.model != Model::HalfSpace)
        throw Error(ErrorCode::MODEL_MISMATCH, "half-space Busemann function needs half-space points");
    validate(x);
    validate(y);
    return -std::log(x.coords(0) / y.coords(0));
}

}  // namespace gromov
