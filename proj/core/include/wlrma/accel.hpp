#pragma once

#include "wlrma/types.hpp"

#include <deque>
#include <optional>

namespace wlrma {

/// Gram matrices whose (equilibrated) condition estimate exceeds this make the
/// coefficient solve report a fallback instead of returning coefficients.
inline constexpr double kMaxGramCondition = 1e12;

struct AndersonConfig {
    Index depth = 3;     ///< m: mixing uses up to m + 1 stored columns
    double gamma = 0.0;  ///< smoothing penalty toward alpha_prev
    Index reg_depth = 3; ///< d: number of past coefficient vectors averaged into alpha_prev
    bool guarded = true;
    Index delay = 0; ///< iterations of plain steps before mixing engages

    void validate() const;
};

/// V = X_curr + (i - 1) / (i + 2) * (X_curr - X_prev). Requires i >= 1.
Matrix nesterov_extrapolate(const Matrix &curr, const Matrix &prev, Index i);

/// Minimizer of ||R alpha|| subject to sum(alpha) = 1 given G = R^T R.
/// Returns nullopt when G is singular or too ill-conditioned to trust.
std::optional<Vector> solve_alpha(const Matrix &gram);

/// Minimizer of ||R alpha||^2 + gamma ||alpha - alpha_prev||^2 subject to sum(alpha) = 1,
/// solved through the bordered stationarity system
///
///     [ G + gamma I   1 ] [alpha]   [gamma alpha_prev]
///     [ 1^T           0 ] [ nu  ] = [       1        ]
///
/// gamma == 0 defers to solve_alpha.
std::optional<Vector> solve_alpha_regularized(const Matrix &gram, const Vector &alpha_prev,
                                              double gamma);

/// History of map outputs f and residuals r = f - y for Anderson mixing.
///
/// Columns live in a ring of m + 1 slots; the Gram matrix R^T R is kept per slot
/// and updated with one new row/column on every push. Public accessors return
/// everything in lag order: column 0 is the newest entry, column j the entry
/// pushed j pushes earlier. Coefficient vectors use the same order, so alpha(j)
/// weights the iterate from j steps back.
class AndersonState {
public:
    AndersonState() = default;
    AndersonState(Index dim, AndersonConfig config);

    Index dim() const noexcept { return outputs_.rows(); }
    Index size() const noexcept { return count_; }
    Index capacity() const noexcept { return outputs_.cols(); }
    const AndersonConfig &config() const noexcept { return config_; }

    /// Stores f and f - y, dropping the oldest column when all m + 1 slots are full.
    void push(const Eigen::Ref<const Vector> &y, const Eigen::Ref<const Vector> &f);

    /// Empties both buffers; the coefficient history is kept.
    void clear();

    Matrix gram() const;
    Matrix residuals() const;
    Matrix outputs() const;

    /// Coefficients for the current buffers (regularized when gamma > 0), or nullopt on fallback.
    std::optional<Vector> coefficients() const;

    /// F * alpha with alpha in lag order.
    Vector combine(const Vector &alpha) const;

    /// Appends alpha to the history used for alpha_prev, keeping the last d vectors.
    void remember(const Vector &alpha);

    /// Mean of the remembered vectors aligned to `length` lags (missing lags are 0, extra older
    /// lags are dropped), renormalized to sum 1. Uniform when nothing usable is remembered.
    Vector alpha_prev(Index length) const;

    const std::deque<Vector> &alpha_history() const noexcept { return history_; }

private:
    Index slot(Index lag) const noexcept;

    AndersonConfig config_;
    Matrix outputs_;
    Matrix residuals_;
    Matrix slot_gram_;
    Index head_ = -1;
    Index count_ = 0;
    std::deque<Vector> history_;
};

} // namespace wlrma
