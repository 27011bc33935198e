#include "wlrma/als.hpp"

#include "wlrma/errors.hpp"
#include "wlrma/linalg.hpp"
#include "wlrma/loss.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SparseCore>

#include <cmath>
#include <random>

namespace wlrma {

namespace {

double ridge(const Formulation &formulation) {
    return formulation.is_rank() ? 0.0 : formulation.step * formulation.lambda();
}

void require_factors(const WeightedProblem &problem, const FactorPair &factors) {
    if (factors.a.rows() != problem.rows() || factors.b.rows() != problem.cols())
        throw DimensionError("factor rows do not match the problem shape");
    if (factors.a.cols() != factors.b.cols())
        throw DimensionError("factors A and B have different column counts");
}

/// Cholesky of F^T F + lambda I; throws if the system is numerically singular.
Eigen::LLT<Matrix> normal_system(const Matrix &factor, double lambda, const char *name) {
    Matrix gram = factor.transpose() * factor;
    gram.diagonal().array() += lambda;
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success || !(llt.rcond() > kMinFactorRcond))
        throw DegenerateFactorError(name);
    return llt;
}

/// Solves X (F^T F + lambda I) = rhs for X, i.e. rhs * (F^T F + lambda I)^-1.
Matrix right_solve(const Eigen::LLT<Matrix> &llt, const Matrix &rhs) {
    return llt.solve(rhs.transpose()).transpose();
}

/// s_e = t w_e (m_e - a_i . b_j) with A^T, B^T given column-major (k x n, k x p).
Vector residual_values(std::span<const Entry> entries, const Matrix &at, const Matrix &bt,
                       double step) {
    Vector s(static_cast<Index>(entries.size()));
    Index e = 0;
    for (const auto &entry : entries) {
        const double fit = at.col(entry.row).dot(bt.col(entry.col));
        s(e++) = step * entry.weight * (entry.value - fit);
    }
    return s;
}

/// Accumulates (S^T H)^T into out_t (k x p) where H^T is given as ht (k x n).
void add_st_times(std::span<const Entry> entries, const Vector &s, const Matrix &ht,
                  Matrix &out_t) {
    Index e = 0;
    for (const auto &entry : entries)
        out_t.col(entry.col).noalias() += s(e++) * ht.col(entry.row);
}

/// Accumulates (S H)^T into out_t (k x n) where H^T is given as ht (k x p).
void add_s_times(std::span<const Entry> entries, const Vector &s, const Matrix &ht,
                 Matrix &out_t) {
    Index e = 0;
    for (const auto &entry : entries)
        out_t.col(entry.row).noalias() += s(e++) * ht.col(entry.col);
}

} // namespace

SparseResidual sparse_residual(const WeightedProblem &problem, const FactorPair &factors,
                               double step) {
    require_factors(problem, factors);
    const Matrix at = factors.a.transpose();
    const Matrix bt = factors.b.transpose();
    return {residual_values(problem.entries(), at, bt, step)};
}

FactorPair als_step_dense(const WeightedProblem &problem, const FactorPair &factors,
                          const Formulation &formulation, const AlsOptions &options) {
    require_factors(problem, factors);
    if (options.inner_iters < 1)
        throw InputError("ALS inner iteration count must be at least 1");
    const double lambda = ridge(formulation);
    const double t = formulation.step;

    Matrix a = factors.a;
    Matrix b = factors.b;
    Matrix y = blend(problem, a * b.transpose(), t);
    for (Index pass = 0; pass < options.inner_iters; ++pass) {
        {
            const auto llt = normal_system(a, lambda, "A");
            b = right_solve(llt, y.transpose() * a);
        }
        if (options.inner_iters == 1)
            y = blend(problem, a * b.transpose(), t);
        const auto llt = normal_system(b, lambda, "B");
        a = right_solve(llt, y * b);
    }
    return {std::move(a), std::move(b)};
}

FactorPair als_step_sparse(const WeightedProblem &problem, const FactorPair &factors,
                           const Formulation &formulation, const AlsOptions &options) {
    require_factors(problem, factors);
    if (options.inner_iters < 1)
        throw InputError("ALS inner iteration count must be at least 1");
    const auto entries = problem.entries();
    const double lambda = ridge(formulation);
    const double t = formulation.step;

    // Y = S0 + A0 B0^T is held in factored form throughout.
    const Matrix a0 = factors.a;
    const Matrix b0 = factors.b;
    const Matrix a0t = a0.transpose();
    Matrix bt = b0.transpose();
    Vector s = residual_values(entries, a0t, bt, t);

    Matrix a = a0;
    for (Index pass = 0; pass < options.inner_iters; ++pass) {
        // B = Y^T H_A = B0 (A0^T H_A) + S^T H_A with H_A = A (A^T A + lambda I)^-1.
        {
            const auto llt = normal_system(a, lambda, "A");
            const Matrix ha_t = llt.solve(a.transpose());
            const Matrix cross = a0t * ha_t.transpose(); // A0^T H_A, k x k
            bt = cross.transpose() * b0.transpose();
            add_st_times(entries, s, ha_t, bt);
        }
        const Matrix b = bt.transpose();

        // Single pass refreshes Y = S' + A0 B^T with S' taken at the new B.
        if (options.inner_iters == 1)
            s = residual_values(entries, a0t, bt, t);
        const Matrix &low_b = options.inner_iters == 1 ? b : b0;

        // A = Y H_B = A_low (B_low^T H_B) + S H_B with H_B = B (B^T B + lambda I)^-1.
        const auto llt = normal_system(b, lambda, "B");
        const Matrix hb_t = llt.solve(bt);
        const Matrix cross = low_b.transpose() * hb_t.transpose(); // k x k
        Matrix at = cross.transpose() * a0t;
        add_s_times(entries, s, hb_t, at);
        a = at.transpose();
    }
    return {std::move(a), bt.transpose()};
}

FactorPair als_step(const WeightedProblem &problem, const FactorPair &factors,
                    const Formulation &formulation, const AlsOptions &options) {
    return problem.is_sparse() ? als_step_sparse(problem, factors, formulation, options)
                               : als_step_dense(problem, factors, formulation, options);
}

double factor_objective(const WeightedProblem &problem, const FactorPair &factors,
                        const Formulation &formulation) {
    require_factors(problem, factors);
    // Extended-precision sums, as in weighted_loss.
    long double rss = 0.0L;
    if (problem.is_sparse()) {
        const Matrix at = factors.a.transpose();
        const Matrix bt = factors.b.transpose();
        for (const auto &e : problem.entries()) {
            const long double r =
                static_cast<long double>(e.value) - at.col(e.row).dot(bt.col(e.col));
            rss += e.weight * r * r;
        }
    } else {
        rss = weighted_rss(problem, factors.a * factors.b.transpose());
    }
    if (formulation.is_rank())
        return static_cast<double>(rss);
    auto squares = [](const Matrix &m) {
        long double total = 0.0L;
        for (Index i = 0; i < m.size(); ++i)
            total += static_cast<long double>(m.data()[i]) * m.data()[i];
        return total;
    };
    return static_cast<double>(0.5L * rss + 0.5L * formulation.lambda() *
                                                (squares(factors.a) + squares(factors.b)));
}

SolutionRank solution_rank(const FactorPair &factors) {
    if (factors.a.cols() != factors.b.cols())
        throw DimensionError("factors A and B have different column counts");
    SolutionRank out;
    if (factors.a.cols() == 0 || factors.a.rows() == 0 || factors.b.rows() == 0) {
        out.singular_values = Vector::Zero(0);
        return out;
    }
    const Svd sa = thin_svd(factors.a);
    const Matrix b_tilde = factors.b * sa.v * sa.singular_values.asDiagonal();
    out.singular_values = thin_svd(b_tilde).singular_values;
    out.rank = numerical_rank(out.singular_values);
    return out;
}

FactorPair als_nesterov_step(const WeightedProblem &problem, const FactorPair &curr,
                             const FactorPair &prev, Index i, const Formulation &formulation,
                             const AlsOptions &options) {
    const FactorPair v{nesterov_extrapolate(curr.a, prev.a, i),
                       nesterov_extrapolate(curr.b, prev.b, i)};
    return als_step(problem, v, formulation, options);
}

AlsAndersonResult als_anderson_step(AndersonState &state, const FactorPair &curr,
                                    const WeightedProblem &problem,
                                    const Formulation &formulation, Index iteration,
                                    const AlsOptions &options) {
    const FactorStack z = FactorStack::stack(curr);
    const Index rows = z.z.rows();
    const Index k = z.z.cols();
    AlsAndersonResult out;

    FactorPair mapped = als_step(problem, curr, formulation, options);
    const FactorStack f = FactorStack::stack(mapped);
    state.push(Eigen::Map<const Vector>(z.z.data(), z.z.size()),
               Eigen::Map<const Vector>(f.z.data(), f.z.size()));

    auto plain = [&] {
        out.loss = factor_objective(problem, mapped, formulation);
        out.plain_loss = out.loss;
        out.factors = std::move(mapped);
    };

    if (iteration < state.config().delay || state.size() < 2) {
        plain();
        return out;
    }
    std::optional<Vector> alpha = state.coefficients();
    if (!alpha) {
        out.fallback = true;
        plain();
        return out;
    }
    out.alpha = *alpha;
    state.remember(*alpha);

    FactorStack mixed{Eigen::Map<const Matrix>(state.combine(*alpha).data(), rows, k), z.split};
    if (!mixed.z.allFinite()) {
        state.clear();
        out.restarted = true;
        plain();
        return out;
    }
    FactorPair candidate = mixed.unstack();
    const double candidate_loss = factor_objective(problem, candidate, formulation);
    if (state.config().guarded) {
        const double plain_loss = factor_objective(problem, mapped, formulation);
        out.plain_loss = plain_loss;
        if (!(candidate_loss <= plain_loss)) {
            out.guard_used = true;
            out.loss = plain_loss;
            out.factors = std::move(mapped);
            return out;
        }
    }
    out.mixed = true;
    out.loss = candidate_loss;
    out.factors = std::move(candidate);
    return out;
}

FactorPair random_factors(Index rows, Index cols, Index k, std::uint64_t seed) {
    if (k < 1)
        throw InputError("factor rank must be at least 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(k));
    FactorPair out{Matrix(rows, k), Matrix(cols, k)};
    for (Index j = 0; j < k; ++j)
        for (Index i = 0; i < rows; ++i)
            out.a(i, j) = scale * normal(rng);
    for (Index j = 0; j < k; ++j)
        for (Index i = 0; i < cols; ++i)
            out.b(i, j) = scale * normal(rng);
    return out;
}

FactorPair factorize(const Matrix &x, Index k) {
    if (k < 1)
        throw InputError("factor rank must be at least 1");
    const Svd svd = thin_svd(x);
    const Index r = std::min<Index>(k, svd.singular_values.size());
    const Vector root = svd.singular_values.head(r).cwiseSqrt();
    return {svd.u.leftCols(r) * root.asDiagonal(), svd.v.leftCols(r) * root.asDiagonal()};
}

FactorPair unweighted_warm_start(const WeightedProblem &problem, Index k, double lambda,
                                 std::uint64_t seed, Index max_iters, double tolerance) {
    const WeightedProblem sparse = problem.is_sparse() ? problem : problem.to_sparse();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(sparse.entries().size());
    for (const auto &e : sparse.entries())
        triplets.emplace_back(e.row, e.col, e.value);
    SparseMatrix m0(problem.rows(), problem.cols());
    m0.setFromTriplets(triplets.begin(), triplets.end());
    const double m0_norm2 = m0.squaredNorm();

    FactorPair f = random_factors(problem.rows(), problem.cols(),
                                  std::min({k, problem.rows(), problem.cols()}), seed);
    // 1/2 ||M0 - AB^T||^2 + lambda/2 (||A||^2 + ||B||^2) without forming AB^T.
    auto objective = [&](const FactorPair &g) {
        const Matrix mb = m0 * g.b;
        const double cross = (g.a.array() * mb.array()).sum();
        const double fit = ((g.a.transpose() * g.a).array() * (g.b.transpose() * g.b).array()).sum();
        return 0.5 * (m0_norm2 - 2.0 * cross + fit) +
               0.5 * lambda * (g.a.squaredNorm() + g.b.squaredNorm());
    };
    double prev = objective(f);
    for (Index it = 0; it < max_iters; ++it) {
        f.b = right_solve(normal_system(f.a, lambda, "A"), Matrix(m0.transpose() * f.a));
        f.a = right_solve(normal_system(f.b, lambda, "B"), Matrix(m0 * f.b));
        const double curr = objective(f);
        const double change = prev == 0.0 ? 0.0 : std::abs(curr - prev) / std::abs(prev);
        prev = curr;
        if (change < tolerance)
            break;
    }
    return f;
}

} // namespace wlrma
