#pragma once

#include "wlrma/accel.hpp"
#include "wlrma/als.hpp"
#include "wlrma/errors.hpp"
#include "wlrma/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace wlrma {

enum class Method {
    prox_baseline,
    prox_nesterov,
    prox_anderson,
    als_baseline,
    als_nesterov,
    als_anderson,
};

std::string_view to_string(Method method);
/// Accepts the names printed by to_string ("prox-baseline", ...). Throws InputError otherwise.
Method parse_method(std::string_view name);
bool is_als(Method method);

enum class InitKind {
    automatic,      ///< zeros for proximal methods, random factors for ALS
    zeros,          ///< X = 0 (proximal methods only)
    column_means,   ///< Y = W*M + (1-W)*colmean, X = prox(Y)
    random_factors, ///< X = A B^T with seeded normal factors
    warm_start,     ///< supplied matrix or factor pair
    unweighted_als, ///< ALS on the zero-imputed unit-weight problem
};

std::string_view to_string(InitKind kind);
InitKind parse_init(std::string_view name);

struct InitSpec {
    InitKind kind = InitKind::automatic;
    std::uint64_t seed = 0;
    std::optional<Matrix> matrix;      ///< warm start for either solver family
    std::optional<FactorPair> factors; ///< warm start for either solver family
};

struct SolverConfig {
    Formulation formulation;
    Method method = Method::prox_baseline;
    double epsilon = 1e-8;
    Index max_iters = 300;
    AndersonConfig anderson;
    InitSpec init;
    /// Column count of the factors in nuclear-norm ALS (clipped to min(n, p)); rank mode uses k.
    Index factor_rank = 100;
    AlsOptions als;
    /// When false every record's `seconds` is 0, making traces byte-reproducible.
    bool record_time = true;

    /// Throws InputError on any invalid setting.
    void validate() const;
};

struct IterationRecord {
    Index iter = 0;
    double loss = 0.0;
    double delta = 0.0;
    Index rank = 0;
    double seconds = 0.0;
    Vector alpha;                     ///< lag order; empty when no coefficients were computed
    std::optional<bool> guard_used;   ///< set for guarded Anderson iterations that compared
    std::optional<double> plain_loss; ///< loss of the plain candidate when it was evaluated
};

struct ConvergenceTrace {
    double initial_loss = 0.0;
    Index initial_rank = 0;
    std::vector<IterationRecord> records;
    bool converged = false;

    Index iterations() const noexcept { return static_cast<Index>(records.size()); }
    double final_loss() const noexcept {
        return records.empty() ? initial_loss : records.back().loss;
    }
    Index final_rank() const noexcept {
        return records.empty() ? initial_rank : records.back().rank;
    }
};

/// A non-finite loss was produced. The trace holds every iteration up to the failure.
class DivergedError : public NumericalError {
public:
    DivergedError(std::string what, ConvergenceTrace trace)
        : NumericalError(std::move(what)), trace_(std::move(trace)) {}
    const ConvergenceTrace &trace() const noexcept { return trace_; }

private:
    ConvergenceTrace trace_;
};

struct SolveResult {
    std::variant<Matrix, FactorPair> solution;
    ConvergenceTrace trace;

    bool has_factors() const noexcept { return std::holds_alternative<FactorPair>(solution); }
    /// Materializes A B^T for factor solutions.
    Matrix dense() const;
};

/// |l_next - l_curr| / |l_curr|, defined as 0 when both losses are below 1e-15.
double relative_change(double curr, double next);

/// Iterates the configured method until relative_change < epsilon or max_iters steps.
SolveResult run(const WeightedProblem &problem, const SolverConfig &config);

} // namespace wlrma
