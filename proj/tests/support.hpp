#pragma once

// Random instances and independent reference computations shared by the test suites.

#include "wlrma/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdint>
#include <random>

namespace wlrma::testing {

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64 &rng, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
            m(i, j) = normal(rng);
    return m;
}

inline Matrix random_weights(Index rows, Index cols, std::mt19937_64 &rng, double lo = 0.0,
                             double hi = 1.0) {
    std::uniform_real_distribution<double> unif(lo, hi);
    Matrix w(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
            w(i, j) = unif(rng);
    return w;
}

inline Matrix binary_mask(Index rows, Index cols, double prob, std::mt19937_64 &rng) {
    std::bernoulli_distribution coin(prob);
    Matrix w(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
            w(i, j) = coin(rng) ? 1.0 : 0.0;
    return w;
}

inline Matrix low_rank(Index rows, Index cols, Index rank, std::mt19937_64 &rng) {
    const Matrix a = random_matrix(rows, rank, rng);
    const Matrix b = random_matrix(cols, rank, rng);
    return a * b.transpose();
}

/// Right singular structure from the symmetric eigenproblem of X^T X, descending.
struct GramOracle {
    Vector sigma; ///< singular values of X, descending
    Matrix v;     ///< matching right singular vectors
};

inline GramOracle gram_oracle(const Matrix &x) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(x.transpose() * x);
    const Index p = x.cols();
    GramOracle out{Vector(p), Matrix(p, p)};
    for (Index i = 0; i < p; ++i) {
        out.sigma(i) = std::sqrt(std::max(0.0, eig.eigenvalues()(p - 1 - i)));
        out.v.col(i) = eig.eigenvectors().col(p - 1 - i);
    }
    return out;
}

/// Best rank-k approximation as the projection onto the top-k right singular subspace.
inline Matrix truncate_oracle(const Matrix &x, Index k) {
    const GramOracle o = gram_oracle(x);
    const Matrix vk = o.v.leftCols(k);
    return x * vk * vk.transpose();
}

inline double max_abs(const Matrix &m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

} // namespace wlrma::testing
