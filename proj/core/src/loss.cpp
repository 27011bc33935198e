#include "wlrma/loss.hpp"

#include "wlrma/errors.hpp"
#include "wlrma/linalg.hpp"

#include <string>

namespace wlrma {

namespace {

void require_shape(const WeightedProblem &problem, const Matrix &x, const char *what) {
    if (x.rows() != problem.rows() || x.cols() != problem.cols())
        throw DimensionError(std::string(what) + ": matrix is " + std::to_string(x.rows()) + "x" +
                             std::to_string(x.cols()) + ", problem is " +
                             std::to_string(problem.rows()) + "x" +
                             std::to_string(problem.cols()));
}

// Losses are accumulated in extended precision: near convergence successive losses differ by a
// few ulps, and a plain double sum would make the stopping rule and monotonicity checks see noise.
long double rss_extended(const WeightedProblem &problem, const Matrix &x) {
    require_shape(problem, x, "weighted_loss");
    long double total = 0.0L;
    if (problem.is_sparse()) {
        for (const auto &e : problem.entries()) {
            const long double r = static_cast<long double>(e.value) - x(e.row, e.col);
            total += e.weight * r * r;
        }
        return total;
    }
    const Index size = x.size();
    const double *m = problem.target().data();
    const double *w = problem.weights().data();
    const double *px = x.data();
    for (Index i = 0; i < size; ++i) {
        if (w[i] == 0.0)
            continue;
        const long double r = static_cast<long double>(m[i]) - px[i];
        total += w[i] * r * r;
    }
    return total;
}

double penalized(const WeightedProblem &problem, const Matrix &x, double lambda,
                 const Vector &singular_values) {
    long double nuclear = 0.0L;
    for (Index i = 0; i < singular_values.size(); ++i)
        nuclear += singular_values(i);
    return static_cast<double>(0.5L * rss_extended(problem, x) +
                               static_cast<long double>(lambda) * nuclear);
}

} // namespace

double weighted_rss(const WeightedProblem &problem, const Matrix &x) {
    return static_cast<double>(rss_extended(problem, x));
}

double smooth_loss(const WeightedProblem &problem, const Matrix &x) {
    return static_cast<double>(0.5L * rss_extended(problem, x));
}

double weighted_loss(const WeightedProblem &problem, const Matrix &x,
                     const Formulation &formulation) {
    if (formulation.is_rank())
        return weighted_rss(problem, x);
    require_shape(problem, x, "weighted_loss");
    if (formulation.lambda() == 0.0)
        return smooth_loss(problem, x);
    return penalized(problem, x, formulation.lambda(), thin_svd(x).singular_values);
}

double weighted_loss(const WeightedProblem &problem, const Matrix &x, const Vector &singular_values,
                     const Formulation &formulation) {
    if (formulation.is_rank())
        return weighted_rss(problem, x);
    return penalized(problem, x, formulation.lambda(), singular_values);
}

Matrix weighted_gradient(const WeightedProblem &problem, const Matrix &x) {
    require_shape(problem, x, "weighted_gradient");
    if (problem.is_sparse())
        return Matrix(weighted_gradient_sparse(problem, x));
    return -(problem.weights().array() * (problem.target() - x).array()).matrix();
}

SparseMatrix weighted_gradient_sparse(const WeightedProblem &problem, const Matrix &x) {
    require_shape(problem, x, "weighted_gradient");
    const auto entries = problem.entries();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(entries.size());
    for (const auto &e : entries)
        triplets.emplace_back(e.row, e.col, -e.weight * (e.value - x(e.row, e.col)));
    SparseMatrix g(problem.rows(), problem.cols());
    g.setFromTriplets(triplets.begin(), triplets.end());
    return g;
}

Matrix blend(const WeightedProblem &problem, const Matrix &x, double step) {
    require_shape(problem, x, "blend");
    if (problem.is_sparse()) {
        Matrix y = x;
        for (const auto &e : problem.entries())
            y(e.row, e.col) += step * e.weight * (e.value - x(e.row, e.col));
        return y;
    }
    const auto tw = step * problem.weights().array();
    return (tw * problem.target().array() + (1.0 - tw) * x.array()).matrix();
}

} // namespace wlrma
