#include "gromov/bim.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace gromov {

namespace {

// Boost sending the unit timelike vector p to e0.
Mat boost_to_origin(const Vec& p) {
    int n = int(p.size());
    Vec s = p.tail(n - 1);
    Mat m = Mat::Identity(n, n);
    m(0, 0) = p[0];
    m.block(0, 1, 1, n - 1) = -s.transpose();
    m.block(1, 0, n - 1, 1) = -s;
    m.block(1, 1, n - 1, n - 1) += s * s.transpose() / (1 + p[0]);
    return m;
}

// Orthonormal basis (for the Lorentz form) of the complement of span(x); the complement is spacelike.
Mat spacelike_complement(const Mat& x) {
    int n = int(x.rows());
    Mat jx = x;
    jx.row(0) *= -1;
    Eigen::JacobiSVD<Mat> svd(jx.transpose(), Eigen::ComputeFullV);
    int rank = 0;
    double top = svd.singularValues().size() ? svd.singularValues()[0] : 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > 1e-12 * top) ++rank;
    Mat k = svd.matrixV().rightCols(n - rank);
    // Gram-Schmidt with the Lorentz form, which is positive on the complement
    for (int i = 0; i < k.cols(); ++i) {
        for (int j = 0; j < i; ++j) k.col(i) -= lorentz_form(k.col(i), k.col(j)) * k.col(j);
        double q = lorentz_form(k.col(i), k.col(i));
        if (!(q > 1e-14)) throw Error(ErrorCode::SIGNATURE_FAIL, "complement is not spacelike");
        k.col(i) /= std::sqrt(q);
    }
    return k;
}

}  // namespace

BimConfig bim_config(const RTree& t, const std::vector<TreePoint>& points, double lambda) {
    BimConfig c;
    c.lambda = lambda;
    int m = int(points.size());
    c.d.assign(m, std::vector<double>(m, 0));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) c.d[i][j] = t.dist(points[i], points[j]);
    return c;
}

BimForm build_form(const BimConfig& cfg) {
    if (!(cfg.lambda > 1)) throw Error(ErrorCode::SIGNATURE_FAIL, "lambda must exceed 1");
    int m = cfg.size();
    if (m == 0) throw Error(ErrorCode::NOT_TREE_METRIC, "no points");
    realize_tree_metric(cfg.d);
    BimForm f;
    f.b.resize(m, m);
    double loglam = std::log(cfg.lambda);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double e = cfg.d[i][j] * loglam;
            if (e > std::log(1e300)) throw Error(ErrorCode::SIGNATURE_FAIL, "lambda^d overflows; use a smaller lambda");
            f.b(i, j) = -std::exp(e);
        }
    Eigen::SelfAdjointEigenSolver<Mat> es(f.b);
    f.eigenvalues = es.eigenvalues();
    f.eigenvectors = es.eigenvectors();
    double scale = f.eigenvalues.cwiseAbs().maxCoeff();
    f.min_abs_eigenvalue = f.eigenvalues.cwiseAbs().minCoeff();
    for (int i = 0; i < m; ++i) {
        if (f.eigenvalues[i] < 0) ++f.negative;
        else ++f.positive;
    }
    if (f.negative != 1 || f.min_abs_eigenvalue <= 1e-13 * scale)
        throw Error(ErrorCode::SIGNATURE_FAIL, "form signature is not (m-1,1) to working precision (min |eigenvalue| " +
                                                   std::to_string(f.min_abs_eigenvalue) + ")");
    return f;
}

BimEmbedding embed(const BimConfig& cfg) {
    BimEmbedding e;
    e.form = build_form(cfg);
    int m = cfg.size();
    // b = V diag(ev) V^T; time axis from the negative eigenvalue (index 0 in ascending order)
    Mat frame(m, m);
    for (int k = 0; k < m; ++k) frame.row(k) = std::sqrt(std::abs(e.form.eigenvalues[k])) * e.form.eigenvectors.col(k).transpose();
    if (frame(0, 0) < 0) frame.row(0) *= -1;
    Mat pts = frame;
    Mat to_o = boost_to_origin(pts.col(0));
    e.frame = to_o * frame;
    e.points = e.frame;
    e.points.col(0) = Vec::Unit(m, 0);
    for (int i = 1; i < m; ++i) e.points.col(i) = normalize_hyperboloid(e.points.col(i));
    return e;
}

double BimEmbedding::identity_residual(const BimConfig& cfg) const {
    double worst = 0;
    int m = cfg.size();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double c = std::max(1.0, -lorentz_form(points.col(i), points.col(j)));
            worst = std::max(worst, std::abs(c - std::pow(cfg.lambda, cfg.d[i][j])));
        }
    return worst;
}

LorentzMap represent_isometry(const BimConfig& cfg, const BimEmbedding& emb, const std::vector<int>& sigma) {
    int m = cfg.size();
    if (int(sigma.size()) != m) throw Error(ErrorCode::NOT_ISOMETRY, "sigma must list an image (or -1) for every point");
    std::vector<int> dom;
    for (int i = 0; i < m; ++i) {
        if (sigma[i] < -1 || sigma[i] >= m) throw Error(ErrorCode::NOT_ISOMETRY, "image index out of range");
        if (sigma[i] >= 0) dom.push_back(i);
    }
    if (dom.empty()) throw Error(ErrorCode::NOT_ISOMETRY, "empty domain");
    for (int i : dom)
        for (int j : dom)
            if (std::abs(cfg.d[i][j] - cfg.d[sigma[i]][sigma[j]]) > 1e-9)
                throw Error(ErrorCode::NOT_ISOMETRY, "sigma does not preserve the distance between points " + std::to_string(i) +
                                                         " and " + std::to_string(j));
    int k = int(dom.size());
    Mat x(m, k), y(m, k);
    for (int c = 0; c < k; ++c) {
        x.col(c) = emb.points.col(dom[c]);
        y.col(c) = emb.points.col(sigma[dom[c]]);
    }
    Mat u = spacelike_complement(x), w = spacelike_complement(y);
    Mat src(m, m), dst(m, m);
    src << x, u;
    dst << y, w;
    Mat mm = dst * src.inverse();
    LorentzMap out{mm};
    if (out.lorentz_defect() > 1e-6) throw Error(ErrorCode::NOT_ISOMETRY, "extension failed to preserve the form");
    return out;
}

double equivariance_residual(const BimEmbedding& emb, const LorentzMap& m, const std::vector<int>& sigma) {
    double worst = 0;
    for (size_t i = 0; i < sigma.size(); ++i)
        if (sigma[i] >= 0) worst = std::max(worst, (m.m * emb.points.col(i) - emb.points.col(sigma[i])).cwiseAbs().maxCoeff());
    return worst;
}

}  // namespace gromov
