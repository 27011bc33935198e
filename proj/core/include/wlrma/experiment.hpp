#pragma once

#include "wlrma/io.hpp"
#include "wlrma/simulate.hpp"
#include "wlrma/solver.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace wlrma {

enum class DataSource {
    simulate,     ///< low-rank plus noise with random weights
    ratings_sim,  ///< synthetic 1..5 star ratings, binary weights
    triplets,     ///< triplet file (csv or matrix-market)
    movielens,    ///< ratings file with id remapping
};

enum class Storage { automatic, dense, sparse };

/// A grid of solver runs over one problem instance. Parsed from a flat `key = value` file;
/// README lists the keys.
struct ExperimentConfig {
    std::string name = "experiment";

    DataSource source = DataSource::simulate;
    SimulationSpec simulation;
    RatingsSpec ratings;
    std::filesystem::path data_path;
    TripletFormat format = TripletFormat::csv;
    std::optional<Shape> shape;
    Index subset_users = 0;  ///< keep only the most active users when > 0
    Index subset_movies = 0; ///< keep only the most active movies when > 0
    Storage storage = Storage::automatic;

    std::vector<Method> methods;
    std::vector<Index> ranks;    ///< rank-constrained cells
    std::vector<double> lambdas; ///< nuclear-norm cells
    std::vector<double> gammas;  ///< Anderson smoothing penalties; empty means {anderson.gamma}

    SolverConfig solver; ///< epsilon, max_iters, anderson, init, factor_rank, learning rate
    std::filesystem::path warm_a;
    std::filesystem::path warm_b;

    Index threads = 1;
    bool timing = true;

    /// Throws InputError, e.g. for an empty method list or an empty parameter grid.
    void validate() const;
};

ExperimentConfig parse_experiment_config(std::istream &in, std::string_view source = "<stream>");
ExperimentConfig load_experiment_config(const std::filesystem::path &path);

/// The instance described by the data keys.
WeightedProblem load_problem(const ExperimentConfig &config);

struct CellResult {
    std::string cell;
    Method method = Method::prox_baseline;
    Formulation formulation;
    double gamma = 0.0;
    ConvergenceTrace trace;
    std::string status = "ok"; ///< "ok" or the error message of a failed cell
    double seconds = 0.0;
};

/// Runs every (method x parameter [x gamma]) cell on `problem`. A failing cell is reported in its
/// status and does not stop the others.
std::vector<CellResult> run_grid(const WeightedProblem &problem, const ExperimentConfig &config);

/// Runs the grid and writes trace_<cell>.csv per cell plus summary.csv into out_dir.
std::vector<CellResult> run_experiment(const ExperimentConfig &config,
                                       const std::filesystem::path &out_dir);

/// Header cell,method,formulation,parameter,gamma,iterations,converged,iterations_to_eps,
/// final_loss,final_rank,seconds,status.
void write_summary_csv(std::ostream &out, const std::vector<CellResult> &cells);

/// Number of alpha_* columns a method's trace carries (m + 1 for Anderson, 0 otherwise).
Index alpha_columns(Method method, const AndersonConfig &anderson);

} // namespace wlrma
