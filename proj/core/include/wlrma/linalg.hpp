#pragma once

#include "wlrma/types.hpp"

namespace wlrma {

/// Relative threshold for counting singular values as nonzero: #{i : d_i > tau * d_1}.
inline constexpr double kRankTolerance = 1e-9;

/// Thin singular value decomposition X = U diag(d) V^T with d in descending order.
///
/// Sign convention: the largest-magnitude entry of every column of U is
/// nonnegative (first such entry on ties), with the matching column of V
/// flipped alongside, so repeated runs on the same input give identical factors.
struct Svd {
    Matrix u;
    Vector singular_values;
    Matrix v;
};

/// Throws NumericalError if the decomposition does not converge or the input is non-finite.
Svd thin_svd(const Matrix &x);

/// Flip column signs of (u, v) to the convention described on Svd.
void normalize_signs(Matrix &u, Matrix &v);

/// Result of a spectral proximal kernel together with the singular values of that result.
struct Spectral {
    Matrix x;
    Vector singular_values;
};

/// Best rank-<=k approximation of x in Frobenius norm.
Spectral truncate_spectral(const Matrix &x, Index k);

/// Singular-value soft thresholding: U diag((d - lambda)_+) V^T.
Spectral shrink_spectral(const Matrix &x, double lambda);

Matrix svd_truncate(const Matrix &x, Index k);
Matrix soft_threshold(const Matrix &x, double lambda);
double nuclear_norm(const Matrix &x);

/// Counts singular values above kRankTolerance times the largest one; expects descending order.
Index numerical_rank(const Vector &singular_values, double tolerance = kRankTolerance);

} // namespace wlrma
