#include "wlrma/solver.hpp"

#include "wlrma/linalg.hpp"
#include "wlrma/loss.hpp"
#include "wlrma/prox.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <utility>

namespace wlrma {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 6> kMethodNames{{
    {Method::prox_baseline, "prox-baseline"},
    {Method::prox_nesterov, "prox-nesterov"},
    {Method::prox_anderson, "prox-anderson"},
    {Method::als_baseline, "als-baseline"},
    {Method::als_nesterov, "als-nesterov"},
    {Method::als_anderson, "als-anderson"},
}};

constexpr std::array<std::pair<InitKind, std::string_view>, 6> kInitNames{{
    {InitKind::automatic, "auto"},
    {InitKind::zeros, "zeros"},
    {InitKind::column_means, "column-means"},
    {InitKind::random_factors, "random-factors"},
    {InitKind::warm_start, "warm-start"},
    {InitKind::unweighted_als, "unweighted-als"},
}};

using Clock = std::chrono::steady_clock;

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(Clock::now() - start_).count();
    }

private:
    Clock::time_point start_ = Clock::now();
};

/// Shared bookkeeping for every method: stopping rule, trace, divergence.
class Driver {
public:
    Driver(const SolverConfig &config, double initial_loss, Index initial_rank)
        : config_(config), prev_loss_(initial_loss) {
        trace_.initial_loss = initial_loss;
        trace_.initial_rank = initial_rank;
        if (!std::isfinite(initial_loss))
            throw DivergedError("initial loss is not finite", trace_);
    }

    /// Records one finished iteration; returns true when the run should stop.
    bool record(IterationRecord rec) {
        rec.iter = trace_.iterations() + 1;
        rec.seconds = config_.record_time ? clock_.seconds() : 0.0;
        if (!std::isfinite(rec.loss))
            throw DivergedError("loss became non-finite at iteration " + std::to_string(rec.iter),
                                trace_);
        rec.delta = relative_change(prev_loss_, rec.loss);
        prev_loss_ = rec.loss;
        trace_.records.push_back(std::move(rec));
        if (trace_.records.back().delta < config_.epsilon) {
            trace_.converged = true;
            return true;
        }
        return trace_.iterations() >= config_.max_iters;
    }

    ConvergenceTrace take() { return std::move(trace_); }

private:
    const SolverConfig &config_;
    double prev_loss_;
    ConvergenceTrace trace_;
    Stopwatch clock_;
};

Matrix column_mean_fill(const WeightedProblem &problem) {
    const Matrix m = problem.dense_target();
    const Matrix w = problem.dense_weights();
    Matrix fill(problem.rows(), problem.cols());
    for (Index j = 0; j < problem.cols(); ++j) {
        const double mass = w.col(j).sum();
        const double mean = mass > 0.0 ? w.col(j).dot(m.col(j)) / mass : 0.0;
        fill.col(j).setConstant(mean);
    }
    return blend(problem, fill, 1.0);
}

Index factor_columns(const WeightedProblem &problem, const SolverConfig &config) {
    const Index cap = std::min(problem.rows(), problem.cols());
    const Index k = config.formulation.is_rank() ? config.formulation.k() : config.factor_rank;
    return std::max<Index>(1, std::min(k, cap));
}

double als_ridge(const Formulation &formulation) {
    return formulation.is_rank() ? 0.0 : formulation.lambda();
}

struct ProxStart {
    ProxIterate x;
    std::optional<Matrix> y;
};

ProxStart prox_start(const WeightedProblem &problem, const SolverConfig &config) {
    const Formulation &form = config.formulation;
    ProxStart start;
    auto from_matrix = [&](Matrix x) {
        Vector sv = thin_svd(x).singular_values;
        start.x = score(problem, Spectral{std::move(x), std::move(sv)}, form);
    };
    switch (config.init.kind) {
    case InitKind::automatic:
    case InitKind::zeros: {
        Matrix zero = Matrix::Zero(problem.rows(), problem.cols());
        start.y = zero;
        const Vector sv = Vector::Zero(std::min(problem.rows(), problem.cols()));
        start.x = score(problem, Spectral{std::move(zero), sv}, form);
        break;
    }
    case InitKind::column_means: {
        Matrix y = column_mean_fill(problem);
        start.x = score(problem, apply_prox(y, form), form);
        start.y = std::move(y);
        break;
    }
    case InitKind::random_factors:
        from_matrix(random_factors(problem.rows(), problem.cols(), factor_columns(problem, config),
                                   config.init.seed)
                        .product());
        break;
    case InitKind::warm_start:
        if (config.init.matrix)
            from_matrix(*config.init.matrix);
        else
            from_matrix(config.init.factors->product());
        break;
    case InitKind::unweighted_als:
        from_matrix(unweighted_warm_start(problem, factor_columns(problem, config),
                                          als_ridge(form), config.init.seed)
                        .product());
        break;
    }
    if (start.x.x.rows() != problem.rows() || start.x.x.cols() != problem.cols())
        throw DimensionError("initial iterate does not match the problem shape");
    return start;
}

FactorPair als_start(const WeightedProblem &problem, const SolverConfig &config) {
    const Index k = factor_columns(problem, config);
    FactorPair f;
    switch (config.init.kind) {
    case InitKind::automatic:
    case InitKind::random_factors:
        f = random_factors(problem.rows(), problem.cols(), k, config.init.seed);
        break;
    case InitKind::zeros:
        throw InputError("zero initialization is a degenerate starting point for ALS");
    case InitKind::column_means:
        f = factorize(column_mean_fill(problem), k);
        break;
    case InitKind::warm_start:
        f = config.init.factors ? *config.init.factors : factorize(*config.init.matrix, k);
        break;
    case InitKind::unweighted_als:
        f = unweighted_warm_start(problem, k, als_ridge(config.formulation), config.init.seed);
        break;
    }
    if (f.a.rows() != problem.rows() || f.b.rows() != problem.cols() || f.a.cols() != f.b.cols())
        throw DimensionError("initial factors do not match the problem shape");
    return f;
}

IterationRecord record(double loss, Index rank) {
    IterationRecord rec;
    rec.loss = loss;
    rec.rank = rank;
    return rec;
}

Index prox_rank(const ProxIterate &x) { return numerical_rank(x.singular_values); }

SolveResult run_prox(const WeightedProblem &problem, const SolverConfig &config) {
    const Formulation &form = config.formulation;
    ProxStart start = prox_start(problem, config);
    Driver driver(config, start.x.loss, prox_rank(start.x));

    ProxIterate curr = std::move(start.x);
    if (config.method == Method::prox_baseline) {
        for (;;) {
            ProxStep step = prox_step(problem, curr.x, form);
            curr = score(problem, Spectral{std::move(step.x), std::move(step.singular_values)}, form);
            if (driver.record(record(curr.loss, prox_rank(curr))))
                break;
        }
    } else if (config.method == Method::prox_nesterov) {
        Matrix prev = curr.x;
        for (Index i = 1;; ++i) {
            const Matrix v = nesterov_extrapolate(curr.x, prev, i);
            ProxStep step = prox_step(problem, v, form);
            prev = std::move(curr.x);
            curr = score(problem, Spectral{std::move(step.x), std::move(step.singular_values)}, form);
            if (driver.record(record(curr.loss, prox_rank(curr))))
                break;
        }
    } else {
        AndersonState state(problem.rows() * problem.cols(), config.anderson);
        std::optional<Matrix> y = std::move(start.y);
        for (Index i = 0;; ++i) {
            AndersonStepResult step = anderson_step(state, y, curr, problem, form, i);
            IterationRecord rec = record(step.x.loss, prox_rank(step.x));
            rec.alpha = step.alpha;
            if (config.anderson.guarded && step.alpha.size() > 0 && !step.restarted)
                rec.guard_used = step.guard_used;
            rec.plain_loss = step.plain_loss;
            y = std::move(step.y);
            curr = std::move(step.x);
            if (driver.record(std::move(rec)))
                break;
        }
    }
    return {std::move(curr.x), driver.take()};
}

SolveResult run_als(const WeightedProblem &problem, const SolverConfig &config) {
    const Formulation &form = config.formulation;
    FactorPair curr = als_start(problem, config);
    Driver driver(config, factor_objective(problem, curr, form), solution_rank(curr).rank);

    if (config.method == Method::als_baseline) {
        for (;;) {
            curr = als_step(problem, curr, form, config.als);
            if (driver.record(
                    record(factor_objective(problem, curr, form), solution_rank(curr).rank)))
                break;
        }
    } else if (config.method == Method::als_nesterov) {
        FactorPair prev = curr;
        for (Index i = 1;; ++i) {
            FactorPair next = als_nesterov_step(problem, curr, prev, i, form, config.als);
            prev = std::move(curr);
            curr = std::move(next);
            if (driver.record(
                    record(factor_objective(problem, curr, form), solution_rank(curr).rank)))
                break;
        }
    } else {
        AndersonState state((problem.rows() + problem.cols()) * curr.a.cols(), config.anderson);
        for (Index i = 0;; ++i) {
            AlsAndersonResult step = als_anderson_step(state, curr, problem, form, i, config.als);
            IterationRecord rec = record(step.loss, solution_rank(step.factors).rank);
            rec.alpha = step.alpha;
            if (config.anderson.guarded && step.alpha.size() > 0 && !step.restarted)
                rec.guard_used = step.guard_used;
            rec.plain_loss = step.plain_loss;
            curr = std::move(step.factors);
            if (driver.record(std::move(rec)))
                break;
        }
    }
    return {std::move(curr), driver.take()};
}

} // namespace

std::string_view to_string(Method method) {
    for (const auto &[m, name] : kMethodNames)
        if (m == method)
            return name;
    return "unknown";
}

Method parse_method(std::string_view name) {
    for (const auto &[m, n] : kMethodNames)
        if (n == name)
            return m;
    throw InputError("unknown method '" + std::string(name) + "'");
}

bool is_als(Method method) {
    return method == Method::als_baseline || method == Method::als_nesterov ||
           method == Method::als_anderson;
}

std::string_view to_string(InitKind kind) {
    for (const auto &[k, name] : kInitNames)
        if (k == kind)
            return name;
    return "unknown";
}

InitKind parse_init(std::string_view name) {
    for (const auto &[k, n] : kInitNames)
        if (n == name)
            return k;
    throw InputError("unknown init '" + std::string(name) + "'");
}

void SolverConfig::validate() const {
    formulation.validate();
    anderson.validate();
    if (!(epsilon > 0.0))
        throw InputError("epsilon must be positive");
    if (max_iters < 1)
        throw InputError("max_iters must be at least 1");
    if (factor_rank < 1)
        throw InputError("factor_rank must be at least 1");
    if (als.inner_iters < 1)
        throw InputError("ALS inner iteration count must be at least 1");
    if (init.kind == InitKind::warm_start && !init.matrix && !init.factors)
        throw InputError("warm-start init requires a matrix or a factor pair");
    if (init.kind == InitKind::zeros && is_als(method))
        throw InputError("zero initialization is a degenerate starting point for ALS");
}

Matrix SolveResult::dense() const {
    if (const auto *f = std::get_if<FactorPair>(&solution))
        return f->product();
    return std::get<Matrix>(solution);
}

double relative_change(double curr, double next) {
    if (std::abs(curr) < 1e-15 && std::abs(next) < 1e-15)
        return 0.0;
    return std::abs((next - curr) / curr);
}

SolveResult run(const WeightedProblem &problem, const SolverConfig &config) {
    config.validate();
    return is_als(config.method) ? run_als(problem, config) : run_prox(problem, config);
}

} // namespace wlrma
