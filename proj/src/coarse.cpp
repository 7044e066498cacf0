#include "gromov/coarse.hpp"

#include <cmath>

namespace gromov {

ModelContext model_context(Model model, int n) { return ModelContext{model, n, origin(model, n)}; }

ModelContext model_context(Model model, const ModelPoint& o) {
    if (o.model != model) throw Error(ErrorCode::SPACE_MISMATCH, "basepoint in a different model");
    validate(o);
    return ModelContext{model, o.dim(), o};
}

TreeContext tree_context(const RTree& tree, const TreePoint& o) {
    tree.check_point(o);
    return TreeContext{&tree, tree.canonical(o)};
}

namespace {

void check(const ModelContext& ctx, const ModelPoint& p) {
    if (p.model != ctx.model || p.dim() != ctx.n) throw Error(ErrorCode::SPACE_MISMATCH, "point not in the context space");
}

void check(const ModelContext& ctx, const ModelBoundary& xi) {
    if (xi.model != ctx.model || boundary_dim(xi) != ctx.n)
        throw Error(ErrorCode::SPACE_MISMATCH, "boundary point not in the context space");
}

void check(const TreeContext& ctx, const TreePoint& p) {
    if (!ctx.tree) throw Error(ErrorCode::SPACE_MISMATCH, "tree context without tree");
    ctx.tree->check_point(p);
}

void check(const TreeContext& ctx, const TreeRay& r) {
    if (!ctx.tree || r.anchor < 0 || r.anchor >= ctx.tree->vertex_count())
        throw Error(ErrorCode::SPACE_MISMATCH, "ray anchor not in the tree");
}

double boundary_pair(const Vec& xi, const Vec& eta, const Vec& z) {
    double num = 0.5 * std::abs(lorentz_form(xi, eta));
    double den = std::abs(lorentz_form(xi, z)) * std::abs(lorentz_form(eta, z));
    if (num == 0) return kInf;
    return -0.5 * std::log(num / den);
}

}  // namespace

bool same_boundary(const ModelBoundary& a, const ModelBoundary& b, double tol) {
    Vec u = boundary_null_vector(a), v = boundary_null_vector(b);
    if (u.size() != v.size()) return false;
    return (u - v).cwiseAbs().maxCoeff() <= tol;
}

double busemann(const ModelContext& ctx, const ModelBoundary& xi, const ModelPoint& x, const ModelPoint& y) {
    check(ctx, xi);
    check(ctx, x);
    check(ctx, y);
    Vec v = boundary_null_vector(xi);
    return std::log(std::abs(lorentz_form(to_hyperboloid(x), v)) / std::abs(lorentz_form(to_hyperboloid(y), v)));
}

double busemann(const TreeContext& ctx, const TreeRay& xi, const TreePoint& x, const TreePoint& y) {
    check(ctx, xi);
    check(ctx, x);
    check(ctx, y);
    return ctx.tree->busemann(xi, x, y);
}

double gromov_product(const ModelContext& ctx, const ModelBord& x, const ModelBord& y, const ModelPoint& z) {
    check(ctx, z);
    const ModelPoint* px = std::get_if<ModelPoint>(&x);
    const ModelPoint* py = std::get_if<ModelPoint>(&y);
    if (px && py) {
        check(ctx, *px);
        check(ctx, *py);
        return 0.5 * (dist(z, *px) + dist(z, *py) - dist(*px, *py));
    }
    if (px || py) {
        const ModelPoint& p = px ? *px : *py;
        const ModelBoundary& xi = px ? std::get<ModelBoundary>(y) : std::get<ModelBoundary>(x);
        check(ctx, p);
        return 0.5 * (dist(z, p) + busemann(ctx, xi, z, p));
    }
    const auto& a = std::get<ModelBoundary>(x);
    const auto& b = std::get<ModelBoundary>(y);
    check(ctx, a);
    check(ctx, b);
    if (same_boundary(a, b, 1e-14)) return kInf;
    return boundary_pair(boundary_null_vector(a), boundary_null_vector(b), to_hyperboloid(z));
}

double gromov_product(const TreeContext& ctx, const TreeBord& x, const TreeBord& y, const TreePoint& z) {
    check(ctx, z);
    const RTree& t = *ctx.tree;
    const TreePoint* px = std::get_if<TreePoint>(&x);
    const TreePoint* py = std::get_if<TreePoint>(&y);
    if (px && py) {
        check(ctx, *px);
        check(ctx, *py);
        return t.gromov(*px, *py, z);
    }
    if (px || py) {
        const TreePoint& p = px ? *px : *py;
        const TreeRay& r = px ? std::get<TreeRay>(y) : std::get<TreeRay>(x);
        check(ctx, p);
        check(ctx, r);
        return t.gromov_ray(r, p, z);
    }
    const auto& a = std::get<TreeRay>(x);
    const auto& b = std::get<TreeRay>(y);
    check(ctx, a);
    check(ctx, b);
    return t.gromov_rays(a, b, z);
}

double visual_dist(const ModelContext& ctx, const ModelBord& x, const ModelBord& y) {
    return std::exp(-gromov_product(ctx, x, y, ctx.o));
}

double visual_dist(const TreeContext& ctx, const TreeBord& x, const TreeBord& y) {
    return std::exp(-gromov_product(ctx, x, y, ctx.o));
}

double hamenstadt_dist(const ModelContext& ctx, const ModelBoundary& xi, const ModelBord& x, const ModelBord& y) {
    for (const ModelBord* p : {&x, &y})
        if (auto b = std::get_if<ModelBoundary>(p); b && same_boundary(*b, xi, 1e-12))
            throw Error(ErrorCode::EQUALS_XI, "argument equals the base boundary point");
    double xy = gromov_product(ctx, x, y, ctx.o);
    if (std::isinf(xy)) return 0;
    double xx = gromov_product(ctx, x, ModelBord{xi}, ctx.o);
    double yy = gromov_product(ctx, y, ModelBord{xi}, ctx.o);
    return std::exp(-(xy - xx - yy));
}

double hamenstadt_dist(const TreeContext& ctx, const TreeRay& xi, const TreeBord& x, const TreeBord& y) {
    for (const TreeBord* p : {&x, &y})
        if (auto r = std::get_if<TreeRay>(p); r && r->anchor == xi.anchor && r->id == xi.id)
            throw Error(ErrorCode::EQUALS_XI, "argument equals the base boundary point");
    double xy = gromov_product(ctx, x, y, ctx.o);
    if (std::isinf(xy)) return 0;
    double xx = gromov_product(ctx, x, TreeBord{xi}, ctx.o);
    double yy = gromov_product(ctx, y, TreeBord{xi}, ctx.o);
    return std::exp(-(xy - xx - yy));
}

bool in_shadow(const ModelContext& ctx, const Shadow<ModelPoint>& s, const ModelBoundary& xi) {
    return gromov_product(ctx, s.z, xi, s.x) <= s.sigma + 1e-12;
}

bool in_shadow(const TreeContext& ctx, const Shadow<TreePoint>& s, const TreeRay& xi) {
    return gromov_product(ctx, s.z, xi, s.x) <= s.sigma + 1e-12;
}

double metric_derivative(const ModelContext& ctx, const LorentzMap& g, const ModelBoundary& xi) {
    ModelPoint back = g.inverse().apply(ctx.o);
    return std::exp(busemann(ctx, xi, ctx.o, back));
}

double dynamical_derivative(const ModelContext& ctx, const LorentzMap& g, const ModelBoundary& xi, int n_max) {
    check(ctx, xi);
    if (n_max < 1) throw Error(ErrorCode::OUT_OF_RANGE, "n_max must be positive");
    if (!same_boundary(g.apply(xi), xi, 1e-6)) throw Error(ErrorCode::NOT_FIXED, "boundary point is not fixed");
    // a Lorentz matrix keeps g^{-n} o on the hyperboloid, so no renormalization is needed
    LorentzMap inv = g.inverse();
    Vec o = to_hyperboloid(ctx.o), v = o;
    // stop early once cancellation in the Lorentz form would dominate
    Vec u = boundary_null_vector(xi);
    int n = 0;
    while (n < n_max) {
        Vec w = inv.apply(v);
        if (n > 0 && (w[0] > 1e6 || w[0] > 1e4 * std::abs(lorentz_form(w, u)))) break;
        v = w;
        ++n;
    }
    double beta = std::log(std::abs(lorentz_form(o, u)) / std::abs(lorentz_form(v, u)));
    return std::exp(beta / n);
}

std::pair<double, double> polar_coords(const ModelContext& ctx, const ModelBoundary& xi1, const ModelBoundary& xi2,
                                       const ModelPoint& x) {
    if (same_boundary(xi1, xi2)) throw Error(ErrorCode::DEGENERATE, "polar coordinates need distinct boundary points");
    double b1 = busemann(ctx, xi1, x, ctx.o), b2 = busemann(ctx, xi2, x, ctx.o);
    return {0.5 * (b1 - b2), 0.5 * (b1 + b2)};
}

std::pair<double, double> polar_coords(const TreeContext& ctx, const TreeRay& xi1, const TreeRay& xi2, const TreePoint& x) {
    if (xi1.anchor == xi2.anchor && xi1.id == xi2.id)
        throw Error(ErrorCode::DEGENERATE, "polar coordinates need distinct boundary points");
    double b1 = busemann(ctx, xi1, x, ctx.o), b2 = busemann(ctx, xi2, x, ctx.o);
    return {0.5 * (b1 - b2), 0.5 * (b1 + b2)};
}

}  // namespace gromov
