#include "wlrma/simulate.hpp"

#include "wlrma/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>

namespace wlrma {

namespace {

double parse_param(std::string_view text, std::string_view law) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw InputError("cannot parse " + std::string(law) + " parameter '" + std::string(text) +
                         "'");
    return v;
}

} // namespace

WeightLaw parse_weight_law(std::string_view text) {
    auto unit = [&](std::string_view param, const char *law) {
        const double v = parse_param(param, law);
        if (!(v >= 0.0 && v <= 1.0))
            throw InputError(std::string(law) + " weight parameter must lie in [0, 1]");
        return v;
    };
    if (text == "uniform")
        return UniformWeights{};
    if (text.rfind("binary:", 0) == 0)
        return BinaryWeights{unit(text.substr(7), "binary")};
    if (text.rfind("constant:", 0) == 0)
        return ConstantWeights{unit(text.substr(9), "constant")};
    throw InputError("unknown weight law '" + std::string(text) +
                     "' (expected uniform, binary:<p> or constant:<w>)");
}

std::string to_string(const WeightLaw &law) {
    if (std::holds_alternative<UniformWeights>(law))
        return "uniform";
    if (const auto *b = std::get_if<BinaryWeights>(&law))
        return "binary:" + format_double(b->prob);
    return "constant:" + format_double(std::get<ConstantWeights>(law).value);
}

void SimulationSpec::validate() const {
    if (n < 1 || p < 1 || r < 1)
        throw InputError("simulation dimensions must be positive");
    if (r > std::min(n, p))
        throw InputError("true rank r exceeds min(n, p)");
    if (!(sigma >= 0.0))
        throw InputError("sigma must be nonnegative");
    if (const auto *b = std::get_if<BinaryWeights>(&weights)) {
        if (!(b->prob >= 0.0 && b->prob <= 1.0))
            throw InputError("binary weight probability must lie in [0, 1]");
    } else if (const auto *c = std::get_if<ConstantWeights>(&weights)) {
        if (!(c->value >= 0.0 && c->value <= 1.0))
            throw InputError("constant weight must lie in [0, 1]");
    }
}

WeightedProblem simulate(const SimulationSpec &spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&](Index rows, Index cols) {
        Matrix m(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i)
                m(i, j) = normal(rng);
        return m;
    };
    const Matrix a = draw(spec.n, spec.r);
    const Matrix b = draw(spec.p, spec.r);
    Matrix m = a * b.transpose();
    if (spec.sigma > 0.0)
        m += spec.sigma * draw(spec.n, spec.p);

    Matrix w(spec.n, spec.p);
    if (std::holds_alternative<UniformWeights>(spec.weights)) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (Index j = 0; j < spec.p; ++j)
            for (Index i = 0; i < spec.n; ++i)
                w(i, j) = unif(rng);
    } else if (const auto *bin = std::get_if<BinaryWeights>(&spec.weights)) {
        std::bernoulli_distribution coin(bin->prob);
        for (Index j = 0; j < spec.p; ++j)
            for (Index i = 0; i < spec.n; ++i)
                w(i, j) = coin(rng) ? 1.0 : 0.0;
    } else {
        w.setConstant(std::get<ConstantWeights>(spec.weights).value);
    }
    return WeightedProblem::dense(std::move(m), std::move(w));
}

void RatingsSpec::validate() const {
    if (users < 1 || items < 1 || rank < 1)
        throw InputError("ratings dimensions must be positive");
    if (!(density > 0.0 && density <= 1.0))
        throw InputError("ratings density must lie in (0, 1]");
    if (!(noise >= 0.0))
        throw InputError("ratings noise must be nonnegative");
}

TripletDataset simulate_ratings(const RatingsSpec &spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // Taste factors with decaying strength so that a few directions dominate.
    Matrix u(spec.users, spec.rank), v(spec.items, spec.rank);
    for (Index c = 0; c < spec.rank; ++c) {
        const double strength = std::pow(0.8, static_cast<double>(c));
        for (Index i = 0; i < spec.users; ++i)
            u(i, c) = strength * normal(rng);
        for (Index j = 0; j < spec.items; ++j)
            v(j, c) = normal(rng);
    }
    Vector user_bias(spec.users), item_bias(spec.items);
    for (Index i = 0; i < spec.users; ++i)
        user_bias(i) = 0.4 * normal(rng);
    for (Index j = 0; j < spec.items; ++j)
        item_bias(j) = 0.6 * normal(rng);

    // Activity follows a lognormal spread, normalized to the requested density.
    Vector user_act(spec.users), item_act(spec.items);
    for (Index i = 0; i < spec.users; ++i)
        user_act(i) = std::exp(0.8 * normal(rng));
    for (Index j = 0; j < spec.items; ++j)
        item_act(j) = std::exp(0.8 * normal(rng));
    const double scale = spec.density / (user_act.mean() * item_act.mean());

    TripletDataset data;
    data.rows = spec.users;
    data.cols = spec.items;
    for (Index j = 0; j < spec.items; ++j) {
        for (Index i = 0; i < spec.users; ++i) {
            const double prob = std::min(1.0, scale * user_act(i) * item_act(j));
            const double draw = unif(rng);
            const double noise = normal(rng);
            if (draw >= prob)
                continue;
            const double latent =
                3.6 + user_bias(i) + item_bias(j) + 0.5 * u.row(i).dot(v.row(j)) + spec.noise * noise;
            const double rating = std::clamp(std::round(latent), 1.0, 5.0);
            data.entries.push_back({i, j, rating, 1.0});
        }
    }
    return data;
}

} // namespace wlrma
