#pragma once

#include "wlrma/types.hpp"

#include <Eigen/SparseCore>

namespace wlrma {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

/// sum w_ij (m_ij - x_ij)^2, over stored entries only for sparse storage.
double weighted_rss(const WeightedProblem &problem, const Matrix &x);

/// Half the weighted residual sum of squares; the differentiable part g(X).
double smooth_loss(const WeightedProblem &problem, const Matrix &x);

/// Rank mode: weighted RSS. Nuclear mode: RSS / 2 + lambda * ||X||_*.
double weighted_loss(const WeightedProblem &problem, const Matrix &x,
                     const Formulation &formulation);

/// Same as weighted_loss but reuses already known singular values of x.
double weighted_loss(const WeightedProblem &problem, const Matrix &x, const Vector &singular_values,
                     const Formulation &formulation);

/// -W * (M - X), dense n x p result for either storage kind.
Matrix weighted_gradient(const WeightedProblem &problem, const Matrix &x);

/// -W * (M - X) with support equal to the stored entries. Sparse storage only.
SparseMatrix weighted_gradient_sparse(const WeightedProblem &problem, const Matrix &x);

/// Gradient step t W * M + (1 - t W) * X, i.e. X - t * grad g(X).
Matrix blend(const WeightedProblem &problem, const Matrix &x, double step = 1.0);

} // namespace wlrma
