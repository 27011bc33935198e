#pragma once

#include "wlrma/accel.hpp"
#include "wlrma/types.hpp"

#include <cstdint>
#include <optional>

namespace wlrma {

/// Normal-equation systems whose reciprocal condition estimate falls below this are
/// reported as a rank-deficient factor.
inline constexpr double kMinFactorRcond = 1e-14;

struct AlsOptions {
    /// Number of B/A alternations per call. With 1 (the default) Y is refreshed between the
    /// B- and the A-update. With more, all alternations regress on the Y formed at the start
    /// of the call, approaching the exact proximal projection as the count grows.
    Index inner_iters = 1;
};

/// S = t W * (M - A B^T) on the stored entries, values aligned with problem.entries().
struct SparseResidual {
    Vector values;
};

SparseResidual sparse_residual(const WeightedProblem &problem, const FactorPair &factors,
                               double step = 1.0);

/// One pass of the Y-based ALS update on dense storage: Y = tW*M + (1-tW)*AB^T, then
/// B = Y^T A (A^T A + lambda I)^-1, Y refreshed, A = Y B (B^T B + lambda I)^-1.
/// lambda is t * lambda in nuclear mode and 0 in rank mode.
FactorPair als_step_dense(const WeightedProblem &problem, const FactorPair &factors,
                          const Formulation &formulation, const AlsOptions &options = {});

/// The same update computed from the sparse + low-rank form of Y, touching only stored
/// entries and k-column matrices. Requires sparse storage.
FactorPair als_step_sparse(const WeightedProblem &problem, const FactorPair &factors,
                           const Formulation &formulation, const AlsOptions &options = {});

/// Dispatches on the problem's storage.
FactorPair als_step(const WeightedProblem &problem, const FactorPair &factors,
                    const Formulation &formulation, const AlsOptions &options = {});

/// Rank mode: sum w (m - a_i . b_j)^2. Nuclear mode: half of that plus
/// lambda / 2 * (||A||_F^2 + ||B||_F^2). Never forms A B^T for sparse storage.
double factor_objective(const WeightedProblem &problem, const FactorPair &factors,
                        const Formulation &formulation);

struct SolutionRank {
    Index rank = 0;
    Vector singular_values; ///< singular values of A B^T (at most k), descending
};

/// Rank and spectrum of A B^T from two skinny SVDs.
SolutionRank solution_rank(const FactorPair &factors);

/// Momentum applied to A and B separately, followed by one ALS pass. i is the 1-based step.
FactorPair als_nesterov_step(const WeightedProblem &problem, const FactorPair &curr,
                             const FactorPair &prev, Index i, const Formulation &formulation,
                             const AlsOptions &options = {});

struct AlsAndersonResult {
    FactorPair factors;
    double loss = 0.0;
    Vector alpha;
    bool mixed = false;
    bool guard_used = false;
    bool fallback = false;
    bool restarted = false;
    std::optional<double> plain_loss;
};

/// Anderson mixing on the fixed point Z = Phi(Z) over the stacked factors Z = [A; B].
AlsAndersonResult als_anderson_step(AndersonState &state, const FactorPair &curr,
                                    const WeightedProblem &problem,
                                    const Formulation &formulation, Index iteration,
                                    const AlsOptions &options = {});

/// Standard normal entries scaled by 1/sqrt(k).
FactorPair random_factors(Index rows, Index cols, Index k, std::uint64_t seed);

/// Balanced split A = U_k sqrt(D_k), B = V_k sqrt(D_k) of a dense matrix; k is clipped
/// to min(n, p).
FactorPair factorize(const Matrix &x, Index k);

/// ALS on the zero-imputed, unit-weight version of the problem (the usual warm start for
/// sparse ratings data). Runs from random factors until the relative objective change drops
/// below `tolerance` or `max_iters` passes.
FactorPair unweighted_warm_start(const WeightedProblem &problem, Index k, double lambda,
                                 std::uint64_t seed, Index max_iters = 100,
                                 double tolerance = 1e-8);

} // namespace wlrma
