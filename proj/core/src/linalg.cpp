#include "wlrma/linalg.hpp"

#include "wlrma/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>

namespace wlrma {

void normalize_signs(Matrix &u, Matrix &v) {
    for (Index c = 0; c < u.cols(); ++c) {
        Index pivot = 0;
        u.col(c).cwiseAbs().maxCoeff(&pivot);
        if (u(pivot, c) < 0.0) {
            u.col(c) = -u.col(c);
            v.col(c) = -v.col(c);
        }
    }
}

Svd thin_svd(const Matrix &x) {
    if (!x.allFinite())
        throw NumericalError("SVD input contains non-finite values");
    Svd out;
    if (x.size() == 0) {
        out.u = Matrix::Zero(x.rows(), 0);
        out.v = Matrix::Zero(x.cols(), 0);
        return out;
    }
    Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
        throw NumericalError("SVD failed to converge");
    out.u = svd.matrixU();
    out.v = svd.matrixV();
    out.singular_values = svd.singularValues();
    normalize_signs(out.u, out.v);
    return out;
}

namespace {

Spectral rebuild(const Svd &svd, Vector kept, Index rows, Index cols) {
    Index active = 0;
    while (active < kept.size() && kept(active) > 0.0)
        ++active;
    Spectral out;
    if (active == 0) {
        out.x = Matrix::Zero(rows, cols);
    } else {
        out.x = svd.u.leftCols(active) * kept.head(active).asDiagonal() *
                svd.v.leftCols(active).transpose();
    }
    out.singular_values = std::move(kept);
    return out;
}

} // namespace

Spectral truncate_spectral(const Matrix &x, Index k) {
    if (k < 1)
        throw InputError("svd_truncate: k must be at least 1");
    const Index q = std::min(x.rows(), x.cols());
    if (k >= q) {
        // Nothing to drop; return the input unchanged rather than a reconstruction.
        return {x, thin_svd(x).singular_values};
    }
    const Svd svd = thin_svd(x);
    Vector kept = svd.singular_values;
    kept.tail(q - k).setZero();
    return rebuild(svd, std::move(kept), x.rows(), x.cols());
}

Spectral shrink_spectral(const Matrix &x, double lambda) {
    if (!(lambda >= 0.0))
        throw InputError("soft_threshold: lambda must be nonnegative");
    if (lambda == 0.0)
        return {x, thin_svd(x).singular_values};
    const Svd svd = thin_svd(x);
    Vector kept = (svd.singular_values.array() - lambda).cwiseMax(0.0).matrix();
    return rebuild(svd, std::move(kept), x.rows(), x.cols());
}

Matrix svd_truncate(const Matrix &x, Index k) { return truncate_spectral(x, k).x; }

Matrix soft_threshold(const Matrix &x, double lambda) { return shrink_spectral(x, lambda).x; }

double nuclear_norm(const Matrix &x) {
    if (x.size() == 0)
        return 0.0;
    return thin_svd(x).singular_values.sum();
}

Index numerical_rank(const Vector &singular_values, double tolerance) {
    if (singular_values.size() == 0)
        return 0;
    const double top = singular_values.maxCoeff();
    if (!(top > 0.0))
        return 0;
    return (singular_values.array() > tolerance * top).count();
}

} // namespace wlrma
