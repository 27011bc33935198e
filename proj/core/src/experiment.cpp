#include "wlrma/experiment.hpp"

#include "wlrma/errors.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

namespace wlrma {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> list(const std::string &value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    for (std::string item; std::getline(ss, item, ',');) {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

template <class T> T as_number(const std::string &key, const std::string &value) {
    T out{};
    const char *begin = value.data();
    const char *end = begin + value.size();
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end)
        throw InputError("config key '" + key + "': cannot parse '" + value + "'");
    return out;
}

bool as_bool(const std::string &key, const std::string &value) {
    if (value == "true" || value == "on" || value == "yes" || value == "1")
        return true;
    if (value == "false" || value == "off" || value == "no" || value == "0")
        return false;
    throw InputError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

std::pair<Index, Index> as_pair(const std::string &key, const std::string &value) {
    const auto items = list(value);
    if (items.size() != 2)
        throw InputError("config key '" + key + "': expected 'a, b'");
    return {as_number<Index>(key, items[0]), as_number<Index>(key, items[1])};
}

using Setter = std::function<void(ExperimentConfig &, const std::string &, const std::string &)>;

const std::map<std::string, Setter> &setters() {
    static const std::map<std::string, Setter> table = {
        {"name", [](auto &c, auto &, auto &v) { c.name = v; }},
        {"data",
         [](auto &c, auto &k, auto &v) {
             if (v == "simulate")
                 c.source = DataSource::simulate;
             else if (v == "ratings-sim")
                 c.source = DataSource::ratings_sim;
             else if (v == "triplets")
                 c.source = DataSource::triplets;
             else if (v == "movielens")
                 c.source = DataSource::movielens;
             else
                 throw InputError("config key '" + k + "': unknown data source '" + v + "'");
         }},
        {"path", [](auto &c, auto &, auto &v) { c.data_path = v; }},
        {"format", [](auto &c, auto &, auto &v) { c.format = parse_triplet_format(v); }},
        {"shape",
         [](auto &c, auto &k, auto &v) {
             const auto [r, q] = as_pair(k, v);
             c.shape = Shape{r, q};
         }},
        {"subset",
         [](auto &c, auto &k, auto &v) {
             std::tie(c.subset_users, c.subset_movies) = as_pair(k, v);
         }},
        {"storage",
         [](auto &c, auto &k, auto &v) {
             if (v == "auto")
                 c.storage = Storage::automatic;
             else if (v == "dense")
                 c.storage = Storage::dense;
             else if (v == "sparse")
                 c.storage = Storage::sparse;
             else
                 throw InputError("config key '" + k + "': expected auto, dense or sparse");
         }},
        {"n", [](auto &c, auto &k, auto &v) { c.simulation.n = as_number<Index>(k, v); }},
        {"p", [](auto &c, auto &k, auto &v) { c.simulation.p = as_number<Index>(k, v); }},
        {"r", [](auto &c, auto &k, auto &v) { c.simulation.r = as_number<Index>(k, v); }},
        {"sigma", [](auto &c, auto &k, auto &v) { c.simulation.sigma = as_number<double>(k, v); }},
        {"weights", [](auto &c, auto &, auto &v) { c.simulation.weights = parse_weight_law(v); }},
        {"seed",
         [](auto &c, auto &k, auto &v) {
             const auto s = as_number<std::uint64_t>(k, v);
             c.simulation.seed = s;
             c.ratings.seed = s;
             c.solver.init.seed = s;
         }},
        {"init_seed",
         [](auto &c, auto &k, auto &v) { c.solver.init.seed = as_number<std::uint64_t>(k, v); }},
        {"ratings.users", [](auto &c, auto &k, auto &v) { c.ratings.users = as_number<Index>(k, v); }},
        {"ratings.items", [](auto &c, auto &k, auto &v) { c.ratings.items = as_number<Index>(k, v); }},
        {"ratings.rank", [](auto &c, auto &k, auto &v) { c.ratings.rank = as_number<Index>(k, v); }},
        {"ratings.density",
         [](auto &c, auto &k, auto &v) { c.ratings.density = as_number<double>(k, v); }},
        {"ratings.noise",
         [](auto &c, auto &k, auto &v) { c.ratings.noise = as_number<double>(k, v); }},
        {"methods",
         [](auto &c, auto &, auto &v) {
             c.methods.clear();
             for (const auto &m : list(v))
                 c.methods.push_back(parse_method(m));
         }},
        {"ranks",
         [](auto &c, auto &k, auto &v) {
             c.ranks.clear();
             for (const auto &x : list(v))
                 c.ranks.push_back(as_number<Index>(k, x));
         }},
        {"lambdas",
         [](auto &c, auto &k, auto &v) {
             c.lambdas.clear();
             for (const auto &x : list(v))
                 c.lambdas.push_back(as_number<double>(k, x));
         }},
        {"gammas",
         [](auto &c, auto &k, auto &v) {
             c.gammas.clear();
             for (const auto &x : list(v))
                 c.gammas.push_back(as_number<double>(k, x));
         }},
        {"epsilon", [](auto &c, auto &k, auto &v) { c.solver.epsilon = as_number<double>(k, v); }},
        {"max_iters",
         [](auto &c, auto &k, auto &v) { c.solver.max_iters = as_number<Index>(k, v); }},
        {"learning_rate",
         [](auto &c, auto &k, auto &v) { c.solver.formulation.step = as_number<double>(k, v); }},
        {"anderson.depth",
         [](auto &c, auto &k, auto &v) { c.solver.anderson.depth = as_number<Index>(k, v); }},
        {"anderson.gamma",
         [](auto &c, auto &k, auto &v) { c.solver.anderson.gamma = as_number<double>(k, v); }},
        {"anderson.reg_depth",
         [](auto &c, auto &k, auto &v) { c.solver.anderson.reg_depth = as_number<Index>(k, v); }},
        {"anderson.guarded",
         [](auto &c, auto &k, auto &v) { c.solver.anderson.guarded = as_bool(k, v); }},
        {"anderson.delay",
         [](auto &c, auto &k, auto &v) { c.solver.anderson.delay = as_number<Index>(k, v); }},
        {"init", [](auto &c, auto &, auto &v) { c.solver.init.kind = parse_init(v); }},
        {"factor_rank",
         [](auto &c, auto &k, auto &v) { c.solver.factor_rank = as_number<Index>(k, v); }},
        {"als.inner_iters",
         [](auto &c, auto &k, auto &v) { c.solver.als.inner_iters = as_number<Index>(k, v); }},
        {"warm_a", [](auto &c, auto &, auto &v) { c.warm_a = v; }},
        {"warm_b", [](auto &c, auto &, auto &v) { c.warm_b = v; }},
        {"threads", [](auto &c, auto &k, auto &v) { c.threads = as_number<Index>(k, v); }},
        {"timing", [](auto &c, auto &k, auto &v) { c.timing = as_bool(k, v); }},
    };
    return table;
}

std::string format_param(double v) { return format_double(v); }

std::string cell_name(Method method, const Formulation &f, std::optional<double> gamma) {
    std::string name(to_string(method));
    if (f.is_rank())
        name += "_k" + std::to_string(f.k());
    else
        name += "_lambda" + format_param(f.lambda());
    if (gamma)
        name += "_gamma" + format_param(*gamma);
    return name;
}

bool is_anderson(Method m) { return m == Method::prox_anderson || m == Method::als_anderson; }

} // namespace

void ExperimentConfig::validate() const {
    if (methods.empty())
        throw InputError("experiment lists no methods");
    if (ranks.empty() && lambdas.empty())
        throw InputError("experiment lists neither ranks nor lambdas");
    for (Index k : ranks)
        if (k < 1)
            throw InputError("ranks must be at least 1");
    for (double l : lambdas)
        if (!(l >= 0.0))
            throw InputError("lambdas must be nonnegative");
    for (double g : gammas)
        if (!(g >= 0.0))
            throw InputError("gammas must be nonnegative");
    if (threads < 1)
        throw InputError("threads must be at least 1");
    if ((source == DataSource::triplets || source == DataSource::movielens) && data_path.empty())
        throw InputError("data source needs a 'path'");
    if (warm_a.empty() != warm_b.empty())
        throw InputError("warm start needs both warm_a and warm_b");
    SolverConfig probe = solver;
    probe.formulation = Formulation{};
    if (probe.init.kind == InitKind::warm_start)
        probe.init.matrix = Matrix::Zero(1, 1);
    probe.validate();
    if (solver.formulation.step <= 0.0 || solver.formulation.step > 1.0)
        throw InputError("learning_rate must lie in (0, 1]");
    if (source == DataSource::simulate)
        simulation.validate();
    if (source == DataSource::ratings_sim)
        ratings.validate();
}

ExperimentConfig parse_experiment_config(std::istream &in, std::string_view source) {
    ExperimentConfig config;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string text = trim(std::string_view(raw).substr(0, hash));
        if (text.empty())
            continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw InputError(std::string(source) + ":" + std::to_string(line) +
                             ": expected 'key = value'");
        const std::string key = trim(std::string_view(text).substr(0, eq));
        const std::string value = trim(std::string_view(text).substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end())
            throw InputError(std::string(source) + ":" + std::to_string(line) +
                             ": unknown key '" + key + "'");
        try {
            it->second(config, key, value);
        } catch (const InputError &e) {
            throw InputError(std::string(source) + ":" + std::to_string(line) + ": " + e.what());
        }
    }
    if (!config.warm_a.empty())
        config.solver.init.kind = InitKind::warm_start;
    return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open " + path.string());
    ExperimentConfig config = parse_experiment_config(in, path.string());
    // Relative data and warm-start paths resolve against the config file's directory.
    const auto base = path.parent_path();
    for (auto *p : {&config.data_path, &config.warm_a, &config.warm_b})
        if (!p->empty() && p->is_relative())
            *p = base / *p;
    return config;
}

WeightedProblem load_problem(const ExperimentConfig &config) {
    TripletDataset data;
    switch (config.source) {
    case DataSource::simulate: {
        WeightedProblem p = simulate(config.simulation);
        return config.storage == Storage::sparse ? p.to_sparse() : p;
    }
    case DataSource::ratings_sim:
        data = simulate_ratings(config.ratings);
        break;
    case DataSource::triplets:
        data = load_triplets(config.data_path, config.format, config.shape);
        break;
    case DataSource::movielens:
        data = load_movielens(config.data_path).dataset;
        break;
    }
    if (config.subset_users > 0 || config.subset_movies > 0)
        data = most_active_subset(data,
                                  config.subset_users > 0 ? config.subset_users : data.rows,
                                  config.subset_movies > 0 ? config.subset_movies : data.cols);
    WeightedProblem p = data.to_problem();
    return config.storage == Storage::dense ? p.to_dense() : p;
}

Index alpha_columns(Method method, const AndersonConfig &anderson) {
    return is_anderson(method) ? anderson.depth + 1 : 0;
}

std::vector<CellResult> run_grid(const WeightedProblem &problem, const ExperimentConfig &config) {
    config.validate();
    struct Cell {
        CellResult result;
        SolverConfig solver;
    };
    std::vector<Cell> cells;
    std::optional<FactorPair> warm;
    if (!config.warm_a.empty())
        warm = FactorPair{read_matrix_csv(config.warm_a), read_matrix_csv(config.warm_b)};

    std::vector<Formulation> forms;
    for (Index k : config.ranks)
        forms.push_back(Formulation::rank(k, config.solver.formulation.step));
    for (double l : config.lambdas)
        forms.push_back(Formulation::nuclear(l, config.solver.formulation.step));

    for (Method m : config.methods) {
        for (const auto &f : forms) {
            std::vector<std::optional<double>> gammas{std::nullopt};
            if (is_anderson(m) && !config.gammas.empty())
                gammas.assign(config.gammas.begin(), config.gammas.end());
            for (const auto &g : gammas) {
                Cell c;
                c.solver = config.solver;
                c.solver.method = m;
                c.solver.formulation = f;
                c.solver.record_time = config.timing;
                if (g)
                    c.solver.anderson.gamma = *g;
                if (warm)
                    c.solver.init.factors = warm;
                c.result.cell = cell_name(m, f, g);
                c.result.method = m;
                c.result.formulation = f;
                c.result.gamma = c.solver.anderson.gamma;
                cells.push_back(std::move(c));
            }
        }
    }

    // Sparse storage only pays off for ALS; proximal cells get a dense copy when needed.
    std::optional<WeightedProblem> dense_copy;
    const bool needs_dense =
        problem.is_sparse() && std::any_of(cells.begin(), cells.end(),
                                           [](const Cell &c) { return !is_als(c.solver.method); });
    if (needs_dense)
        dense_copy = problem.to_dense();

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            Cell &c = cells[i];
            const WeightedProblem &instance =
                (!is_als(c.solver.method) && dense_copy) ? *dense_copy : problem;
            const auto start = std::chrono::steady_clock::now();
            try {
                c.result.trace = run(instance, c.solver).trace;
            } catch (const DivergedError &e) {
                c.result.trace = e.trace();
                c.result.status = e.what();
            } catch (const Error &e) {
                c.result.status = e.what();
            }
            c.result.seconds =
                config.timing
                    ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
                    : 0.0;
        }
    };
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config.threads), cells.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < workers; ++t)
            pool.emplace_back(worker);
    }

    std::vector<CellResult> out;
    out.reserve(cells.size());
    for (auto &c : cells)
        out.push_back(std::move(c.result));
    return out;
}

void write_summary_csv(std::ostream &out, const std::vector<CellResult> &cells) {
    out << "cell,method,formulation,parameter,gamma,iterations,converged,iterations_to_eps,"
           "final_loss,final_rank,seconds,status\n";
    for (const auto &c : cells) {
        const auto &t = c.trace;
        out << c.cell << ',' << to_string(c.method) << ','
            << (c.formulation.is_rank() ? "rank" : "nuclear") << ','
            << (c.formulation.is_rank() ? std::to_string(c.formulation.k())
                                        : format_double(c.formulation.lambda()))
            << ',' << format_double(c.gamma) << ',' << t.iterations() << ','
            << (t.converged ? 1 : 0) << ',';
        if (t.converged)
            out << t.iterations();
        std::string status = c.status;
        std::replace(status.begin(), status.end(), ',', ';');
        std::replace(status.begin(), status.end(), '\n', ' ');
        out << ',' << format_double(t.final_loss()) << ',' << t.final_rank() << ','
            << format_double(c.seconds) << ',' << status << '\n';
    }
}

std::vector<CellResult> run_experiment(const ExperimentConfig &config,
                                       const std::filesystem::path &out_dir) {
    config.validate();
    const WeightedProblem problem = load_problem(config);
    std::vector<CellResult> cells = run_grid(problem, config);
    std::filesystem::create_directories(out_dir);
    for (const auto &c : cells)
        write_trace_csv(out_dir / ("trace_" + c.cell + ".csv"), c.trace,
                        alpha_columns(c.method, config.solver.anderson));
    std::ofstream summary(out_dir / "summary.csv");
    if (!summary)
        throw InputError("cannot write " + (out_dir / "summary.csv").string());
    write_summary_csv(summary, cells);
    return cells;
}

} // namespace wlrma
