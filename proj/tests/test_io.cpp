#include "support.hpp"

#include "wlrma/errors.hpp"
#include "wlrma/experiment.hpp"
#include "wlrma/io.hpp"
#include "wlrma/linalg.hpp"
#include "wlrma/simulate.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace wlrma;
using namespace wlrma::testing;
namespace fs = std::filesystem;

namespace {

TripletDataset parse(const std::string &text, TripletFormat format = TripletFormat::csv,
                     std::optional<Shape> shape = std::nullopt) {
    std::istringstream in(text);
    return parse_triplets(in, format, shape, "data.csv");
}

std::string error_of(const std::string &text, std::optional<Shape> shape = std::nullopt) {
    try {
        parse(text, TripletFormat::csv, shape);
    } catch (const InputError &e) {
        return e.what();
    }
    return {};
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("wlrma_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path dir_;
};

ExperimentConfig small_config(const std::string &extra = "") {
    std::istringstream in("data = simulate\nn = 30\np = 12\nr = 4\nsigma = 0.5\nseed = 3\n"
                          "methods = prox-baseline, prox-anderson, als-baseline\n"
                          "ranks = 3\nlambdas = 2\nmax_iters = 40\ntiming = false\n" +
                          extra);
    return parse_experiment_config(in);
}

} // namespace

TEST(Triplets, SingleEntryOnDeclaredShape) {
    const auto d = parse("1,2,5.0\n", TripletFormat::csv, Shape{3, 3});
    const WeightedProblem p = d.to_problem().to_dense();
    EXPECT_EQ(p.rows(), 3);
    EXPECT_EQ(p.target()(1, 2), 5.0);
    EXPECT_EQ(p.weights()(1, 2), 1.0);
    EXPECT_EQ(p.weights().sum(), 1.0);
}

TEST(Triplets, HeaderCommentsAndWeights) {
    const auto d = parse("i,j,value,weight\n# note\n0,0,1.5,0.25\n2,1,-3e-1,1\n");
    EXPECT_TRUE(d.has_weights);
    EXPECT_EQ(d.rows, 3);
    EXPECT_EQ(d.cols, 2);
    ASSERT_EQ(d.entries.size(), 2u);
    EXPECT_EQ(d.entries[0].weight, 0.25);
    EXPECT_EQ(d.entries[1].value, -0.3);
}

TEST(Triplets, DuplicateNamesBothLines) {
    const std::string msg = error_of("0,0,1\n1,1,2\n0,0,3\n");
    EXPECT_NE(msg.find("data.csv:3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("lines 1 and 3"), std::string::npos) << msg;
}

TEST(Triplets, ErrorsCarryLineNumbers) {
    EXPECT_NE(error_of("0,0,1\n0,x,2\n").find("data.csv:2"), std::string::npos);
    EXPECT_NE(error_of("0,0,1\n5,0,2\n", Shape{3, 3}).find("data.csv:2"), std::string::npos);
    EXPECT_NE(error_of("0,0,1,0.5\n0,1,2,1.5\n").find("data.csv:2"), std::string::npos);
    EXPECT_NE(error_of("0,0,1,0.5\n0,1,2\n").find("data.csv:2"), std::string::npos);
    EXPECT_NE(error_of("0,0\n").find("data.csv:1"), std::string::npos);
    EXPECT_NE(error_of("-1,0,1\n").find("data.csv:1"), std::string::npos);
}

TEST(Triplets, MatrixMarketIsOneBased) {
    const auto d = parse("%%MatrixMarket matrix coordinate real general\n% c\n3 4 2\n1 1 2.5\n3 4 -1\n",
                         TripletFormat::matrix_market);
    EXPECT_EQ(d.rows, 3);
    EXPECT_EQ(d.cols, 4);
    EXPECT_EQ(d.entries[1].row, 2);
    EXPECT_EQ(d.entries[1].col, 3);
    EXPECT_THROW(parse("%%MatrixMarket matrix coordinate real general\n3 4 3\n1 1 2.5\n",
                       TripletFormat::matrix_market),
                 InputError);
    EXPECT_THROW(parse("%%MatrixMarket matrix array real general\n3 4\n", TripletFormat::matrix_market),
                 InputError);
}

TEST_F(TempDir, TripletRoundTrip) {
    std::mt19937_64 rng(1);
    TripletDataset d;
    d.rows = 9;
    d.cols = 7;
    d.has_weights = true;
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (Index j = 0; j < 7; ++j)
        for (Index i = 0; i < 9; ++i)
            if ((i + 2 * j) % 3 == 0)
                d.entries.push_back({i, j, random_matrix(1, 1, rng)(0, 0) * 1e3, u(rng)});
    const fs::path path = dir_ / "t.csv";
    write_triplets(path, d);
    const TripletDataset back = load_triplets(path, TripletFormat::csv, Shape{9, 7});
    ASSERT_EQ(back.entries.size(), d.entries.size());
    EXPECT_TRUE(back.has_weights);
    for (std::size_t i = 0; i < d.entries.size(); ++i) {
        EXPECT_EQ(back.entries[i].row, d.entries[i].row);
        EXPECT_EQ(back.entries[i].col, d.entries[i].col);
        EXPECT_EQ(back.entries[i].value, d.entries[i].value);
        EXPECT_EQ(back.entries[i].weight, d.entries[i].weight);
    }
}

TEST_F(TempDir, MatrixCsvRoundTrip) {
    std::mt19937_64 rng(2);
    const Matrix m = random_matrix(5, 3, rng);
    write_matrix_csv(dir_ / "m.csv", m);
    EXPECT_EQ(read_matrix_csv(dir_ / "m.csv"), m);
    std::istringstream ragged("1,2\n3\n");
    EXPECT_THROW(parse_matrix_csv(ragged), InputError);
}

TEST(MovieLens, RemapsIdsInBothFormats) {
    std::istringstream colons("10::500::4::978300760\n3::500::5::978302109\n10::7::3::1\n");
    const RatingsData a = parse_movielens(colons);
    EXPECT_EQ(a.user_ids, (std::vector<long long>{3, 10}));
    EXPECT_EQ(a.movie_ids, (std::vector<long long>{7, 500}));
    EXPECT_EQ(a.dataset.rows, 2);
    EXPECT_EQ(a.dataset.cols, 2);
    std::istringstream csv("userId,movieId,rating,timestamp\n10,500,4,1\n3,500,5,2\n10,7,3,3\n");
    const RatingsData b = parse_movielens(csv);
    ASSERT_EQ(a.dataset.entries.size(), b.dataset.entries.size());
    for (std::size_t i = 0; i < a.dataset.entries.size(); ++i) {
        EXPECT_EQ(a.dataset.entries[i].row, b.dataset.entries[i].row);
        EXPECT_EQ(a.dataset.entries[i].col, b.dataset.entries[i].col);
        EXPECT_EQ(a.dataset.entries[i].value, b.dataset.entries[i].value);
    }
    std::istringstream dup("1::1::4\n1::1::5\n");
    EXPECT_THROW(parse_movielens(dup), InputError);
}

TEST(MovieLens, MostActiveSubsetKeepsBusiestRowsAndColumns) {
    TripletDataset d;
    d.rows = 3;
    d.cols = 3;
    d.entries = {{0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {1, 2, 1}, {2, 0, 1}, {2, 1, 1}};
    const TripletDataset s = most_active_subset(d, 2, 2);
    EXPECT_EQ(s.rows, 2);
    EXPECT_EQ(s.cols, 2);
    EXPECT_EQ(s.entries.size(), 4u); // users 1,2 x movies 0,1
}

TEST(Simulate, RankOneWithoutNoise) {
    SimulationSpec spec;
    spec.n = spec.p = 3;
    spec.r = 1;
    spec.sigma = 0.0;
    const WeightedProblem p = simulate(spec);
    EXPECT_EQ(numerical_rank(thin_svd(p.target()).singular_values), 1);
}

TEST(Simulate, SeedDeterminesInstance) {
    SimulationSpec spec;
    spec.n = 50;
    spec.p = 20;
    spec.r = 5;
    spec.seed = 17;
    const WeightedProblem a = simulate(spec), b = simulate(spec);
    EXPECT_EQ(a.target(), b.target());
    EXPECT_EQ(a.weights(), b.weights());
    spec.seed = 18;
    EXPECT_NE(simulate(spec).target(), a.target());
}

TEST(Simulate, WeightLaws) {
    SimulationSpec spec;
    spec.n = 200;
    spec.p = 50;
    spec.r = 3;
    spec.weights = parse_weight_law("binary:0.3");
    const Matrix w = simulate(spec).weights();
    EXPECT_TRUE(((w.array() == 0.0) || (w.array() == 1.0)).all());
    EXPECT_NEAR(w.mean(), 0.3, 0.02);
    spec.weights = parse_weight_law("constant:0.4");
    EXPECT_TRUE((simulate(spec).weights().array() == 0.4).all());
    spec.weights = parse_weight_law("uniform");
    const Matrix u = simulate(spec).weights();
    EXPECT_GE(u.minCoeff(), 0.0);
    EXPECT_LE(u.maxCoeff(), 1.0);
    EXPECT_NEAR(u.mean(), 0.5, 0.02);
    EXPECT_THROW(parse_weight_law("binary:1.5"), InputError);
    EXPECT_THROW(parse_weight_law("gaussian"), InputError);
    spec.r = 60;
    EXPECT_THROW(spec.validate(), InputError);
}

TEST(Simulate, RatingsAreStarsOnSparseSupport) {
    RatingsSpec spec;
    spec.users = 100;
    spec.items = 60;
    spec.seed = 5;
    const TripletDataset d = simulate_ratings(spec);
    EXPECT_EQ(d.rows, 100);
    EXPECT_EQ(d.cols, 60);
    for (const auto &e : d.entries) {
        EXPECT_GE(e.value, 1.0);
        EXPECT_LE(e.value, 5.0);
        EXPECT_EQ(e.value, std::round(e.value));
    }
    const double density = static_cast<double>(d.entries.size()) / (100.0 * 60.0);
    EXPECT_NEAR(density, spec.density, 0.1);
}

TEST(ExperimentConfig, EmptyMethodListFailsValidation) {
    std::istringstream in("data = simulate\nranks = 3\n");
    const ExperimentConfig c = parse_experiment_config(in);
    EXPECT_THROW(c.validate(), InputError);
    EXPECT_THROW(run_grid(WeightedProblem::dense(Matrix::Zero(2, 2), Matrix::Ones(2, 2)), c),
                 InputError);
}

TEST(ExperimentConfig, ErrorsNameTheLine) {
    std::istringstream bad("methods = prox-baseline\nbogus = 1\n");
    try {
        parse_experiment_config(bad, "cfg.txt");
        FAIL();
    } catch (const InputError &e) {
        EXPECT_NE(std::string(e.what()).find("cfg.txt:2"), std::string::npos);
    }
    std::istringstream bad_method("methods = prox-baseline, sorcery\n");
    EXPECT_THROW(parse_experiment_config(bad_method), InputError);
}

TEST(ExperimentConfig, KeysPopulateFields) {
    const ExperimentConfig c = small_config("anderson.depth = 2\ngammas = 0.1, 1\nfactor_rank = 7\n"
                                            "init = column-means\nlearning_rate = 0.5\n");
    EXPECT_EQ(c.simulation.n, 30);
    EXPECT_EQ(c.methods.size(), 3u);
    EXPECT_EQ(c.solver.anderson.depth, 2);
    EXPECT_EQ(c.gammas, (std::vector<double>{0.1, 1.0}));
    EXPECT_EQ(c.solver.factor_rank, 7);
    EXPECT_EQ(c.solver.init.kind, InitKind::column_means);
    EXPECT_EQ(c.solver.formulation.step, 0.5);
    EXPECT_FALSE(c.timing);
    EXPECT_NO_THROW(c.validate());
}

TEST_F(TempDir, ExperimentWritesOneRecordPerIteration) {
    const ExperimentConfig config = small_config("gammas = 0, 1\n");
    const auto cells = run_experiment(config, dir_);
    // 3 methods x 2 parameters, Anderson cells doubled by the gamma grid.
    ASSERT_EQ(cells.size(), 8u);
    EXPECT_TRUE(fs::exists(dir_ / "summary.csv"));
    for (const auto &c : cells) {
        EXPECT_EQ(c.status, "ok") << c.cell;
        const fs::path trace = dir_ / ("trace_" + c.cell + ".csv");
        ASSERT_TRUE(fs::exists(trace)) << trace;
        std::ifstream in(trace);
        std::string header, line;
        std::getline(in, header);
        EXPECT_EQ(header.rfind("iter,loss,delta,rank,seconds", 0), 0u);
        EXPECT_EQ(header.find("alpha_") != std::string::npos,
                  c.method == Method::prox_anderson);
        Index rows = 0;
        while (std::getline(in, line))
            ++rows;
        EXPECT_EQ(rows, c.trace.iterations());
    }
    // Summary iterations column agrees with the traces.
    std::ifstream summary(dir_ / "summary.csv");
    std::string line;
    std::getline(summary, line);
    std::size_t i = 0;
    while (std::getline(summary, line)) {
        std::vector<std::string> fields;
        std::stringstream ss(line);
        for (std::string f; std::getline(ss, f, ',');)
            fields.push_back(f);
        ASSERT_GE(fields.size(), 8u);
        EXPECT_EQ(std::stoll(fields[5]), cells[i].trace.iterations());
        if (cells[i].trace.converged)
            EXPECT_EQ(std::stoll(fields[7]), cells[i].trace.iterations());
        ++i;
    }
    EXPECT_EQ(i, cells.size());
}

TEST_F(TempDir, IdenticalConfigsGiveIdenticalTraces) {
    ExperimentConfig config = small_config();
    config.threads = 3;
    run_experiment(config, dir_ / "a");
    config.threads = 1;
    run_experiment(config, dir_ / "b");
    std::size_t compared = 0;
    for (const auto &entry : fs::directory_iterator(dir_ / "a")) {
        const fs::path other = dir_ / "b" / entry.path().filename();
        ASSERT_TRUE(fs::exists(other));
        EXPECT_EQ(slurp(entry.path()), slurp(other)) << entry.path().filename();
        ++compared;
    }
    EXPECT_EQ(compared, 7u);
}

TEST_F(TempDir, FailingCellDoesNotStopOthers) {
    // ALS from a zero start is rejected; the proximal cell still runs.
    ExperimentConfig config = small_config("methods = prox-baseline, als-baseline\ninit = zeros\n");
    const auto cells = run_grid(load_problem(config), config);
    ASSERT_EQ(cells.size(), 4u);
    EXPECT_EQ(cells[0].status, "ok");
    EXPECT_NE(cells[2].status, "ok");
}

TEST(TraceCsv, BlankColumnsForMissingValues) {
    ConvergenceTrace t;
    IterationRecord a;
    a.iter = 1;
    a.loss = 2.5;
    a.delta = 0.5;
    a.rank = 3;
    IterationRecord b = a;
    b.iter = 2;
    b.alpha = Vector::Constant(2, 0.5);
    b.guard_used = true;
    t.records = {a, b};
    std::ostringstream out;
    write_trace_csv(out, t, 3);
    EXPECT_EQ(out.str(), "iter,loss,delta,rank,seconds,alpha_0,alpha_1,alpha_2,guard_used\n"
                         "1,2.5,0.5,3,0,,,,\n"
                         "2,2.5,0.5,3,0,0.5,0.5,,1\n");
}
