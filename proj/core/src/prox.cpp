#include "wlrma/prox.hpp"

#include "wlrma/loss.hpp"

namespace wlrma {

namespace {

Eigen::Map<const Vector> flat(const Matrix &m) { return {m.data(), m.size()}; }

} // namespace

Spectral apply_prox(const Matrix &y, const Formulation &formulation) {
    if (formulation.is_rank())
        return truncate_spectral(y, formulation.k());
    return shrink_spectral(y, formulation.step * formulation.lambda());
}

ProxStep prox_step(const WeightedProblem &problem, const Matrix &x,
                   const Formulation &formulation) {
    ProxStep out;
    out.y = blend(problem, x, formulation.step);
    Spectral next = apply_prox(out.y, formulation);
    out.x = std::move(next.x);
    out.singular_values = std::move(next.singular_values);
    return out;
}

ProxIterate score(const WeightedProblem &problem, Spectral x, const Formulation &formulation) {
    ProxIterate it;
    it.loss = weighted_loss(problem, x.x, x.singular_values, formulation);
    it.x = std::move(x.x);
    it.singular_values = std::move(x.singular_values);
    return it;
}

AndersonStepResult anderson_step(AndersonState &state, const std::optional<Matrix> &y_curr,
                                 const ProxIterate &x_curr, const WeightedProblem &problem,
                                 const Formulation &formulation, Index iteration) {
    const Index n = problem.rows();
    const Index p = problem.cols();
    AndersonStepResult out;

    // f^(i): the map output, which is also the plain step's auxiliary iterate.
    Matrix f = blend(problem, x_curr.x, formulation.step);
    if (y_curr)
        state.push(flat(*y_curr), flat(f));

    auto plain = [&] {
        out.y = f;
        out.x = score(problem, apply_prox(f, formulation), formulation);
        out.plain_loss = out.x.loss;
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

    Matrix mixed = Eigen::Map<const Matrix>(state.combine(*alpha).data(), n, p);
    if (!mixed.allFinite()) {
        state.clear();
        out.restarted = true;
        plain();
        return out;
    }

    ProxIterate candidate = score(problem, apply_prox(mixed, formulation), formulation);
    if (state.config().guarded) {
        ProxIterate simple = score(problem, apply_prox(f, formulation), formulation);
        out.plain_loss = simple.loss;
        if (!(candidate.loss <= simple.loss)) {
            out.guard_used = true;
            out.y = std::move(f);
            out.x = std::move(simple);
            return out;
        }
    }
    out.mixed = true;
    out.y = std::move(mixed);
    out.x = std::move(candidate);
    return out;
}

} // namespace wlrma
