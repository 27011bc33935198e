#pragma once

#include "wlrma/io.hpp"
#include "wlrma/types.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

namespace wlrma {

struct UniformWeights {};
struct BinaryWeights {
    double prob = 0.5; ///< probability that a cell is observed (weight 1)
};
struct ConstantWeights {
    double value = 1.0;
};
using WeightLaw = std::variant<UniformWeights, BinaryWeights, ConstantWeights>;

/// "uniform", "binary:<prob>" or "constant:<w>".
WeightLaw parse_weight_law(std::string_view text);
std::string to_string(const WeightLaw &law);

/// M = A B^T + E with A (n x r), B (p x r) and E entrywise standard normal (E scaled by sigma),
/// weights drawn from the weight law.
struct SimulationSpec {
    Index n = 1000;
    Index p = 100;
    Index r = 70;
    double sigma = 1.0;
    WeightLaw weights = UniformWeights{};
    std::uint64_t seed = 0;

    void validate() const;
};

/// Dense weighted instance; identical output for identical specs.
WeightedProblem simulate(const SimulationSpec &spec);

/// Synthetic star-ratings data shaped like a ratings matrix: integer ratings in 1..5 from a
/// rank-r preference model plus noise, observed with skewed per-user and per-item activity.
struct RatingsSpec {
    Index users = 500;
    Index items = 300;
    Index rank = 10;
    double density = 0.3; ///< expected fraction of observed cells
    double noise = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

TripletDataset simulate_ratings(const RatingsSpec &spec);

} // namespace wlrma
