// Command-line driver: simulate instances, run one solver, run an experiment grid,
// or report the rank of a factor pair.

#include "wlrma/als.hpp"
#include "wlrma/experiment.hpp"
#include "wlrma/io.hpp"
#include "wlrma/simulate.hpp"
#include "wlrma/solver.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace wlrma;

namespace {

struct SimulateArgs {
    std::string kind = "lowrank";
    SimulationSpec spec;
    std::string weights = "uniform";
    RatingsSpec ratings;
    std::uint64_t seed = 0;
    std::string out = "problem.csv";
};

struct SolveArgs {
    std::string data;
    std::string format = "csv";
    std::vector<Index> shape;
    std::string method = "prox-baseline";
    Index rank = 0;
    double lambda = -1.0;
    double epsilon = 1e-8;
    Index max_iters = 300;
    double learning_rate = 1.0;
    AndersonConfig anderson;
    bool no_guard = false;
    std::string init = "auto";
    std::uint64_t seed = 0;
    std::string warm_a, warm_b, warm_x;
    Index factor_rank = 100;
    Index inner_iters = 1;
    std::string storage = "auto";
    std::string out = "solve-out";
};

struct BenchArgs {
    std::string config;
    std::string out = "bench-out";
    std::optional<std::uint64_t> seed;
    Index threads = 0;
};

struct RankArgs {
    std::string a, b;
    std::uint64_t seed = 0;
    std::string out;
};

int do_simulate(const SimulateArgs &args) {
    TripletDataset data;
    if (args.kind == "ratings") {
        RatingsSpec spec = args.ratings;
        spec.seed = args.seed;
        data = simulate_ratings(spec);
    } else if (args.kind == "lowrank") {
        SimulationSpec spec = args.spec;
        spec.weights = parse_weight_law(args.weights);
        spec.seed = args.seed;
        data = to_triplets(simulate(spec));
    } else {
        throw InputError("unknown --kind '" + args.kind + "' (lowrank or ratings)");
    }
    write_triplets(args.out, data);
    std::cout << "wrote " << data.entries.size() << " entries of a " << data.rows << "x"
              << data.cols << " instance to " << args.out << "\n";
    return 0;
}

int do_solve(const SolveArgs &args) {
    std::optional<Shape> shape;
    if (!args.shape.empty()) {
        if (args.shape.size() != 2)
            throw InputError("--shape expects two values: rows cols");
        shape = Shape{args.shape[0], args.shape[1]};
    }
    const TripletFormat format = parse_triplet_format(args.format);
    fs::create_directories(args.out);
    TripletDataset data;
    if (format == TripletFormat::movielens) {
        RatingsData ratings = load_movielens(args.data);
        write_id_map(fs::path(args.out) / "users.csv", ratings.user_ids);
        write_id_map(fs::path(args.out) / "movies.csv", ratings.movie_ids);
        data = std::move(ratings.dataset);
    } else {
        data = load_triplets(args.data, format, shape);
    }

    SolverConfig config;
    config.method = parse_method(args.method);
    if ((args.rank > 0) == (args.lambda >= 0.0))
        throw InputError("give exactly one of --rank or --lambda");
    config.formulation = args.rank > 0 ? Formulation::rank(args.rank, args.learning_rate)
                                       : Formulation::nuclear(args.lambda, args.learning_rate);
    config.epsilon = args.epsilon;
    config.max_iters = args.max_iters;
    config.anderson = args.anderson;
    config.anderson.guarded = !args.no_guard;
    config.init.kind = parse_init(args.init);
    config.init.seed = args.seed;
    config.factor_rank = args.factor_rank;
    config.als.inner_iters = args.inner_iters;
    if (!args.warm_a.empty() || !args.warm_b.empty()) {
        if (args.warm_a.empty() || args.warm_b.empty())
            throw InputError("--warm-a and --warm-b go together");
        config.init.kind = InitKind::warm_start;
        config.init.factors = FactorPair{read_matrix_csv(args.warm_a), read_matrix_csv(args.warm_b)};
    } else if (!args.warm_x.empty()) {
        config.init.kind = InitKind::warm_start;
        config.init.matrix = read_matrix_csv(args.warm_x);
    }

    WeightedProblem problem = data.to_problem();
    const bool dense = args.storage == "dense" || (args.storage == "auto" && !is_als(config.method));
    if (args.storage != "auto" && args.storage != "dense" && args.storage != "sparse")
        throw InputError("--storage expects auto, dense or sparse");
    if (dense)
        problem = problem.to_dense();

    CellResult cell;
    cell.method = config.method;
    cell.formulation = config.formulation;
    cell.gamma = config.anderson.gamma;
    cell.cell = std::string(to_string(config.method));
    int status = 0;
    try {
        SolveResult result = run(problem, config);
        cell.trace = result.trace;
        if (const auto *f = std::get_if<FactorPair>(&result.solution)) {
            write_matrix_csv(fs::path(args.out) / "A.csv", f->a);
            write_matrix_csv(fs::path(args.out) / "B.csv", f->b);
        } else {
            write_matrix_csv(fs::path(args.out) / "X.csv", std::get<Matrix>(result.solution));
        }
    } catch (const DivergedError &e) {
        cell.trace = e.trace();
        cell.status = e.what();
        status = 2;
    }
    write_trace_csv(fs::path(args.out) / "trace.csv", cell.trace,
                    alpha_columns(config.method, config.anderson));
    cell.seconds = cell.trace.records.empty() ? 0.0 : cell.trace.records.back().seconds;
    std::ofstream summary(fs::path(args.out) / "summary.csv");
    write_summary_csv(summary, {cell});

    const auto &t = cell.trace;
    std::cout << to_string(config.method) << ": " << t.iterations() << " iterations, "
              << (t.converged ? "converged" : "not converged") << ", loss "
              << format_double(t.final_loss()) << ", rank " << t.final_rank() << "\n";
    if (status != 0)
        std::cerr << "error: " << cell.status << "\n";
    return status;
}

int do_bench(const BenchArgs &args) {
    ExperimentConfig config = load_experiment_config(args.config);
    if (args.seed) {
        config.simulation.seed = *args.seed;
        config.ratings.seed = *args.seed;
        config.solver.init.seed = *args.seed;
    }
    if (args.threads > 0)
        config.threads = args.threads;
    const auto cells = run_experiment(config, args.out);
    write_summary_csv(std::cout, cells);
    const bool all_ok = std::all_of(cells.begin(), cells.end(),
                                    [](const CellResult &c) { return c.status == "ok"; });
    return all_ok ? 0 : 2;
}

int do_rank(const RankArgs &args) {
    const FactorPair f{read_matrix_csv(args.a), read_matrix_csv(args.b)};
    const SolutionRank r = solution_rank(f);
    std::ostringstream os;
    os << "rank," << r.rank << "\n";
    for (Index i = 0; i < r.singular_values.size(); ++i)
        os << "sigma_" << i << ',' << format_double(r.singular_values(i)) << "\n";
    if (args.out.empty()) {
        std::cout << os.str();
    } else {
        std::ofstream out(args.out);
        out << os.str();
    }
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Weighted low-rank matrix approximation solvers"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto *simulate_cmd = app.add_subcommand("simulate", "Generate a synthetic instance as triplets");
    simulate_cmd->add_option("--kind", sim.kind, "lowrank or ratings")->capture_default_str();
    simulate_cmd->add_option("--n", sim.spec.n, "rows")->capture_default_str();
    simulate_cmd->add_option("--p", sim.spec.p, "columns")->capture_default_str();
    simulate_cmd->add_option("--r", sim.spec.r, "true rank")->capture_default_str();
    simulate_cmd->add_option("--sigma", sim.spec.sigma, "noise level")->capture_default_str();
    simulate_cmd->add_option("--weights", sim.weights, "uniform | binary:<p> | constant:<w>")
        ->capture_default_str();
    simulate_cmd->add_option("--users", sim.ratings.users)->capture_default_str();
    simulate_cmd->add_option("--items", sim.ratings.items)->capture_default_str();
    simulate_cmd->add_option("--ratings-rank", sim.ratings.rank)->capture_default_str();
    simulate_cmd->add_option("--density", sim.ratings.density)->capture_default_str();
    simulate_cmd->add_option("--seed", sim.seed)->capture_default_str();
    simulate_cmd->add_option("--out", sim.out, "output triplet CSV")->capture_default_str();

    SolveArgs solve;
    auto *solve_cmd = app.add_subcommand("solve", "Run one solver on a triplet file");
    solve_cmd->add_option("--data", solve.data, "input file")->required();
    solve_cmd->add_option("--format", solve.format, "csv | mm | movielens")->capture_default_str();
    solve_cmd->add_option("--shape", solve.shape, "rows cols")->expected(2);
    solve_cmd->add_option("--method", solve.method)->capture_default_str();
    solve_cmd->add_option("--rank", solve.rank, "rank-constrained formulation with this k");
    solve_cmd->add_option("--lambda", solve.lambda, "nuclear-norm formulation with this penalty");
    solve_cmd->add_option("--epsilon", solve.epsilon)->capture_default_str();
    solve_cmd->add_option("--max-iters", solve.max_iters)->capture_default_str();
    solve_cmd->add_option("--learning-rate", solve.learning_rate)->capture_default_str();
    solve_cmd->add_option("--depth", solve.anderson.depth)->capture_default_str();
    solve_cmd->add_option("--gamma", solve.anderson.gamma)->capture_default_str();
    solve_cmd->add_option("--reg-depth", solve.anderson.reg_depth)->capture_default_str();
    solve_cmd->add_option("--delay", solve.anderson.delay)->capture_default_str();
    solve_cmd->add_flag("--no-guard", solve.no_guard, "disable guarded Anderson");
    solve_cmd->add_option("--init", solve.init,
                          "auto | zeros | column-means | random-factors | unweighted-als")
        ->capture_default_str();
    solve_cmd->add_option("--seed", solve.seed)->capture_default_str();
    solve_cmd->add_option("--warm-a", solve.warm_a, "warm-start factor A (dense CSV)");
    solve_cmd->add_option("--warm-b", solve.warm_b, "warm-start factor B (dense CSV)");
    solve_cmd->add_option("--warm-x", solve.warm_x, "warm-start matrix X (dense CSV)");
    solve_cmd->add_option("--factor-rank", solve.factor_rank, "factor columns for nuclear ALS")
        ->capture_default_str();
    solve_cmd->add_option("--inner-iters", solve.inner_iters)->capture_default_str();
    solve_cmd->add_option("--storage", solve.storage, "auto | dense | sparse")
        ->capture_default_str();
    solve_cmd->add_option("--out", solve.out, "output directory")->capture_default_str();

    BenchArgs bench;
    auto *bench_cmd = app.add_subcommand("bench", "Run an experiment grid from a config file");
    bench_cmd->add_option("--config", bench.config)->required();
    bench_cmd->add_option("--out", bench.out, "output directory")->capture_default_str();
    bench_cmd->add_option("--seed", bench.seed, "override the config seed");
    bench_cmd->add_option("--threads", bench.threads, "override the config thread count");

    RankArgs rank;
    auto *rank_cmd = app.add_subcommand("rank", "Solution rank of a factor pair A B^T");
    rank_cmd->add_option("--a", rank.a)->required();
    rank_cmd->add_option("--b", rank.b)->required();
    rank_cmd->add_option("--seed", rank.seed, "accepted for uniformity; unused");
    rank_cmd->add_option("--out", rank.out, "write the report here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate_cmd)
            return do_simulate(sim);
        if (*solve_cmd)
            return do_solve(solve);
        if (*bench_cmd)
            return do_bench(bench);
        if (*rank_cmd)
            return do_rank(rank);
    } catch (const wlrma::Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
