#pragma once

#include "wlrma/accel.hpp"
#include "wlrma/linalg.hpp"
#include "wlrma/types.hpp"

#include <optional>

namespace wlrma {

/// Proximal kernel of the formulation: SVD_k(y) in rank mode, S_{t lambda}(y) in nuclear mode.
Spectral apply_prox(const Matrix &y, const Formulation &formulation);

struct ProxStep {
    Matrix x;               ///< prox(Y)
    Matrix y;               ///< t W * M + (1 - t W) * X
    Vector singular_values; ///< singular values of x
};

/// One proximal gradient step from x.
ProxStep prox_step(const WeightedProblem &problem, const Matrix &x, const Formulation &formulation);

/// A primal iterate together with what the driver needs to score it.
struct ProxIterate {
    Matrix x;
    Vector singular_values;
    double loss = 0.0;
};

ProxIterate score(const WeightedProblem &problem, Spectral x, const Formulation &formulation);

struct AndersonStepResult {
    Matrix y;       ///< auxiliary iterate Y^(i+1) actually taken
    ProxIterate x;  ///< X^(i+1) = prox(Y^(i+1))
    Vector alpha;   ///< mixing coefficients in lag order; empty when no mixing was attempted
    bool mixed = false;      ///< Y^(i+1) came from F * alpha
    bool guard_used = false; ///< guard rejected the mixed candidate in favor of the plain step
    bool fallback = false;   ///< coefficient solve declined (singular or ill-conditioned Gram)
    bool restarted = false;  ///< mixed candidate was non-finite; buffers were cleared
    std::optional<double> plain_loss; ///< loss of the plain prox candidate when it was evaluated
};

/// One iteration of Anderson-accelerated proximal gradient on the fixed point
/// Y = t W * M + (1 - t W) * prox(Y), with vec() taken column-major.
///
/// `y_curr` is Y^(i), absent when the iterate did not come from a known Y (for
/// example an arbitrary warm start); the residual for this step is then skipped.
/// `iteration` is the 0-based step count and drives the delay.
AndersonStepResult anderson_step(AndersonState &state, const std::optional<Matrix> &y_curr,
                                 const ProxIterate &x_curr, const WeightedProblem &problem,
                                 const Formulation &formulation, Index iteration);

} // namespace wlrma
