#include "support.hpp"

#include "wlrma/accel.hpp"
#include "wlrma/errors.hpp"
#include "wlrma/loss.hpp"
#include "wlrma/prox.hpp"
#include "wlrma/solver.hpp"

#include <Eigen/QR>
#include <gtest/gtest.h>

using namespace wlrma;
using namespace wlrma::testing;

namespace {

/// Substitutes alpha = e0 + D beta with D = [-1^T; I] so the sum constraint holds identically.
Matrix constraint_basis(Index q) {
    Matrix d = Matrix::Zero(q, q - 1);
    d.row(0).setConstant(-1.0);
    d.bottomRows(q - 1).setIdentity();
    return d;
}

/// argmin ||R a||^2 + gamma ||a - prev||^2 subject to sum(a) = 1, via reduced least squares.
Vector reduced_oracle(const Matrix &r, const Vector &prev, double gamma) {
    const Index q = r.cols();
    Matrix stacked(r.rows() + q, q);
    stacked << r, std::sqrt(gamma) * Matrix::Identity(q, q);
    Vector target = Vector::Zero(r.rows() + q);
    target.tail(q) = std::sqrt(gamma) * prev;
    const Vector e0 = Vector::Unit(q, 0);
    const Matrix d = constraint_basis(q);
    const Vector beta = (stacked * d).colPivHouseholderQr().solve(target - stacked * e0);
    return e0 + d * beta;
}

Matrix spd(Index q, std::mt19937_64 &rng) {
    const Matrix a = random_matrix(q + 2, q, rng);
    return a.transpose() * a;
}

Vector flat(const Matrix &m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

} // namespace

TEST(Nesterov, FirstIterationHasNoMomentum) {
    std::mt19937_64 rng(1);
    const Matrix a = random_matrix(3, 4, rng), b = random_matrix(3, 4, rng);
    EXPECT_EQ(nesterov_extrapolate(a, b, 1), a);
}

TEST(Nesterov, EqualIteratesGiveNoMomentum) {
    std::mt19937_64 rng(2);
    const Matrix a = random_matrix(3, 4, rng);
    for (Index i = 1; i < 10; ++i)
        EXPECT_EQ(nesterov_extrapolate(a, a, i), a);
}

TEST(Nesterov, SecondIterationCoefficient) {
    std::mt19937_64 rng(3);
    const Matrix prev = random_matrix(3, 4, rng);
    const Matrix curr = 2 * prev;
    EXPECT_LT(max_abs(nesterov_extrapolate(curr, prev, 2) - (curr + 0.25 * prev)), 1e-15);
}

TEST(Nesterov, ShapeMismatchThrows) {
    EXPECT_THROW(nesterov_extrapolate(Matrix::Zero(2, 2), Matrix::Zero(2, 3), 2), DimensionError);
}

TEST(SolveAlpha, SingleColumn) {
    const auto a = solve_alpha(Matrix::Constant(1, 1, 3.0));
    ASSERT_TRUE(a);
    EXPECT_EQ(a->size(), 1);
    EXPECT_EQ((*a)(0), 1.0);
}

TEST(SolveAlpha, IdentityGramIsUniform) {
    for (Index q = 1; q <= 5; ++q) {
        const auto a = solve_alpha(Matrix::Identity(q, q));
        ASSERT_TRUE(a);
        EXPECT_LT(max_abs(*a - Vector::Constant(q, 1.0 / q)), 1e-15);
    }
}

TEST(SolveAlpha, MatchesReducedNormalEquations) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix r = random_matrix(12, 3, rng);
        const auto a = solve_alpha(r.transpose() * r);
        ASSERT_TRUE(a);
        EXPECT_LT(max_abs(*a - reduced_oracle(r, Vector::Zero(3), 0.0)), 1e-6);
        EXPECT_LT(std::abs(a->sum() - 1.0), 1e-12);
    }
}

TEST(SolveAlpha, SingularGramSignalsFallback) {
    const Matrix r = Matrix::Ones(5, 2);
    EXPECT_FALSE(solve_alpha(r.transpose() * r));
    EXPECT_FALSE(solve_alpha(Matrix::Zero(3, 3)));
    Matrix near = Matrix::Identity(2, 2);
    near(1, 1) = 1e-14;
    near(0, 1) = near(1, 0) = 1e-7;
    EXPECT_FALSE(solve_alpha(near));
}

TEST(SolveAlphaRegularized, ZeroGammaEqualsPlainSolve) {
    std::mt19937_64 rng(5);
    const Matrix g = spd(4, rng);
    const auto plain = solve_alpha(g);
    const auto reg = solve_alpha_regularized(g, Vector::Unit(4, 0), 0.0);
    ASSERT_TRUE(plain && reg);
    EXPECT_LT(max_abs(*plain - *reg), 1e-10);
}

TEST(SolveAlphaRegularized, PreviousOptimumIsKept) {
    std::mt19937_64 rng(6);
    const Matrix g = spd(3, rng);
    const Vector opt = *solve_alpha(g);
    for (double gamma : {0.1, 1.0, 10.0}) {
        const auto a = solve_alpha_regularized(g, opt, gamma);
        ASSERT_TRUE(a);
        EXPECT_LT(max_abs(*a - opt), 1e-10);
    }
}

TEST(SolveAlphaRegularized, MatchesReducedLeastSquares) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix r = random_matrix(5, 3, rng);
        const Vector prev = Vector::Unit(3, 0);
        const auto a = solve_alpha_regularized(r.transpose() * r, prev, 1.0);
        ASSERT_TRUE(a);
        EXPECT_LT(max_abs(*a - reduced_oracle(r, prev, 1.0)), 1e-8);
        EXPECT_LT(std::abs(a->sum() - 1.0), 1e-12);
    }
}

// alpha_gamma = (I + gamma K) alpha*, K = (G + gamma I)^{-1} (prev 1^T - 1 prev^T). The identity
// holds when alpha* is the unregularized solution for the shifted Gram G + gamma I.
TEST(SolveAlphaRegularized, ClosedFormAgreesWithShiftedGram) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const Index q = 2 + trial % 3;
        const Matrix g = spd(q, rng);
        Vector prev = random_weights(q, 1, rng);
        prev /= prev.sum();
        const double gamma = std::pow(10.0, trial % 5 - 2);
        const Vector star = *solve_alpha(g + gamma * Matrix::Identity(q, q));
        const Vector ones = Vector::Ones(q);
        const Matrix k = (g + gamma * Matrix::Identity(q, q))
                             .ldlt()
                             .solve(prev * ones.transpose() - ones * prev.transpose());
        const Vector closed = (Matrix::Identity(q, q) + gamma * k) * star;
        const auto kkt = solve_alpha_regularized(g, prev, gamma);
        ASSERT_TRUE(kkt);
        EXPECT_LT(max_abs(closed - *kkt), 1e-8) << "trial " << trial;
    }
}

TEST(SolveAlphaRegularized, ClosedFormWithUnshiftedGramDiffers) {
    std::mt19937_64 rng(13);
    const Matrix g = spd(3, rng);
    const Vector prev = Vector::Unit(3, 0);
    const double gamma = 1.0;
    const Vector star = *solve_alpha(g);
    const Vector ones = Vector::Ones(3);
    const Matrix k = (g + gamma * Matrix::Identity(3, 3))
                         .ldlt()
                         .solve(prev * ones.transpose() - ones * prev.transpose());
    const Vector closed = (Matrix::Identity(3, 3) + gamma * k) * star;
    EXPECT_GT(max_abs(closed - *solve_alpha_regularized(g, prev, gamma)), 1e-6);
}

TEST(SolveAlphaRegularized, VanishingGammaIsContinuous) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix g = spd(4, rng);
        const auto plain = solve_alpha(g);
        const auto reg = solve_alpha_regularized(g, Vector::Constant(4, 0.25), 1e-12);
        ASSERT_TRUE(plain && reg);
        EXPECT_LT(max_abs(*plain - *reg), 1e-6);
    }
}

TEST(AndersonState, IncrementalGramMatchesRecomputation) {
    std::mt19937_64 rng(10);
    AndersonConfig cfg;
    cfg.depth = 3;
    AndersonState s(30, cfg);
    for (int step = 0; step < 25; ++step) {
        s.push(random_matrix(30, 1, rng), random_matrix(30, 1, rng));
        EXPECT_EQ(s.size(), std::min<Index>(step + 1, 4));
        const Matrix r = s.residuals();
        EXPECT_LT(max_abs(s.gram() - r.transpose() * r), 1e-10);
        if (s.size() >= 2) {
            const auto a = s.coefficients();
            ASSERT_TRUE(a);
            EXPECT_LT(std::abs(a->sum() - 1.0), 1e-12);
        }
    }
}

TEST(AndersonState, LagOrderAndCombination) {
    AndersonConfig cfg;
    cfg.depth = 1;
    AndersonState s(2, cfg);
    s.push(Vector::Zero(2), Vector::Constant(2, 1.0));
    s.push(Vector::Zero(2), Vector::Constant(2, 2.0));
    s.push(Vector::Zero(2), Vector::Constant(2, 3.0));
    const Matrix f = s.outputs();
    EXPECT_EQ(f(0, 0), 3.0);
    EXPECT_EQ(f(0, 1), 2.0);
    Vector alpha(2);
    alpha << 0.25, 0.75;
    EXPECT_DOUBLE_EQ(s.combine(alpha)(1), 0.25 * 3.0 + 0.75 * 2.0);
    s.clear();
    EXPECT_EQ(s.size(), 0);
}

TEST(AndersonState, AlphaPrevAveragesAlignedHistory) {
    AndersonConfig cfg;
    cfg.reg_depth = 2;
    AndersonState s(4, cfg);
    EXPECT_LT(max_abs(s.alpha_prev(3) - Vector::Constant(3, 1.0 / 3)), 1e-15);
    Vector a(2), b(3), c(3);
    a << 0.5, 0.5;
    b << 1.0, 0.0, 0.0;
    c << 0.0, 2.0, -1.0;
    s.remember(a);
    // A shorter vector is padded with zeros on the oldest lags.
    Vector expected(3);
    expected << 0.5, 0.5, 0.0;
    EXPECT_LT(max_abs(s.alpha_prev(3) - expected), 1e-15);
    s.remember(b);
    s.remember(c); // depth 2 drops a
    expected << 0.5, 1.0, -0.5;
    EXPECT_LT(max_abs(s.alpha_prev(3) - expected), 1e-15);
    EXPECT_EQ(s.alpha_history().size(), 2u);
    // Truncation to fewer lags renormalizes.
    Vector two(2);
    two << 0.5 / 1.5, 1.0 / 1.5;
    EXPECT_LT(max_abs(s.alpha_prev(2) - two), 1e-15);
}

TEST(AndersonConfig, Validation) {
    AndersonConfig c;
    c.depth = 0;
    EXPECT_THROW(c.validate(), InputError);
    c = {};
    c.gamma = -1;
    EXPECT_THROW(c.validate(), InputError);
    c = {};
    c.reg_depth = 0;
    EXPECT_THROW(c.validate(), InputError);
    c = {};
    c.delay = -1;
    EXPECT_THROW(c.validate(), InputError);
}

class AndersonStepTest : public ::testing::Test {
protected:
    void SetUp() override {
        std::mt19937_64 rng(11);
        m_ = low_rank(6, 5, 2, rng) + 0.3 * random_matrix(6, 5, rng);
        w_ = random_weights(6, 5, rng, 0.05, 1.0);
        problem_ = WeightedProblem::dense(m_, w_);
    }

    ProxIterate zero_iterate() const {
        return score(problem_, Spectral{Matrix::Zero(6, 5), Vector::Zero(5)}, form_);
    }

    Matrix m_, w_;
    WeightedProblem problem_;
    Formulation form_ = Formulation::rank(2);
};

TEST_F(AndersonStepTest, FirstIterationIsPlainProx) {
    AndersonConfig cfg;
    cfg.depth = 2;
    AndersonState state(30, cfg);
    const ProxIterate x0 = zero_iterate();
    const auto step = anderson_step(state, Matrix::Zero(6, 5), x0, problem_, form_, 0);
    const ProxStep plain = prox_step(problem_, x0.x, form_);
    EXPECT_EQ(step.alpha.size(), 0);
    EXPECT_FALSE(step.mixed);
    EXPECT_EQ(state.size(), 1);
    EXPECT_LT(max_abs(step.x.x - plain.x), 1e-15);
    EXPECT_LT(max_abs(step.y - plain.y), 1e-15);
}

TEST_F(AndersonStepTest, IdenticalResidualsFallBack) {
    AndersonConfig cfg;
    cfg.depth = 1;
    AndersonState state(30, cfg);
    std::mt19937_64 rng(12);
    const Matrix r = random_matrix(6, 5, rng);
    const Matrix y_old = random_matrix(6, 5, rng);
    state.push(flat(y_old), flat(y_old + r));
    const ProxIterate x = score(problem_, apply_prox(random_matrix(6, 5, rng), form_), form_);
    const Matrix y_curr = blend(problem_, x.x) - r;
    const auto step = anderson_step(state, y_curr, x, problem_, form_, 5);
    EXPECT_TRUE(step.fallback);
    EXPECT_FALSE(step.mixed);
    EXPECT_LT(max_abs(step.x.x - prox_step(problem_, x.x, form_).x), 1e-15);
    EXPECT_EQ(state.size(), 2); // nothing reset
}

TEST_F(AndersonStepTest, DelayRunsPlainStepsWhileFillingBuffers) {
    AndersonConfig cfg;
    cfg.depth = 2;
    cfg.delay = 3;
    AndersonState state(30, cfg);
    ProxIterate x = zero_iterate();
    std::optional<Matrix> y = Matrix::Zero(6, 5);
    for (Index i = 0; i < 5; ++i) {
        auto step = anderson_step(state, y, x, problem_, form_, i);
        if (i < 3)
            EXPECT_EQ(step.alpha.size(), 0) << i;
        else
            EXPECT_GT(step.alpha.size(), 0) << i;
        y = step.y;
        x = step.x;
    }
    EXPECT_EQ(state.size(), 3);
}

TEST_F(AndersonStepTest, MixedUpdateIsCombinationOfPastIterates) {
    AndersonConfig cfg;
    cfg.depth = 2;
    cfg.guarded = false;
    AndersonState state(30, cfg);
    std::vector<Matrix> xs{Matrix::Zero(6, 5)};
    ProxIterate x = zero_iterate();
    std::optional<Matrix> y = Matrix::Zero(6, 5);
    int mixed = 0;
    for (Index i = 0; i < 30; ++i) {
        auto step = anderson_step(state, y, x, problem_, form_, i);
        if (step.mixed) {
            ++mixed;
            Matrix combo = Matrix::Zero(6, 5);
            for (Index j = 0; j < step.alpha.size(); ++j)
                combo += step.alpha(j) * xs[xs.size() - 1 - j];
            const Matrix expected =
                (w_.array() * m_.array() + (1 - w_.array()) * combo.array()).matrix();
            EXPECT_LT(max_abs(step.y - expected), 1e-10) << "iteration " << i;
        }
        y = step.y;
        x = step.x;
        xs.push_back(x.x);
    }
    EXPECT_GT(mixed, 20);
}

TEST_F(AndersonStepTest, AcceleratedLossNotWorseThanBaseline) {
    auto final_loss = [&](Method method) {
        SolverConfig c;
        c.formulation = form_;
        c.method = method;
        c.anderson.depth = 2;
        c.max_iters = 30;
        c.epsilon = 1e-300;
        return run(problem_, c).trace.final_loss();
    };
    EXPECT_LE(final_loss(Method::prox_anderson), final_loss(Method::prox_baseline));
}

TEST_F(AndersonStepTest, GuardNeverWorseThanPlainCandidate) {
    for (const Formulation &f : {Formulation::rank(2), Formulation::nuclear(0.3)}) {
        SolverConfig c;
        c.formulation = f;
        c.method = Method::prox_anderson;
        c.max_iters = 60;
        c.epsilon = 1e-300;
        const auto trace = run(problem_, c).trace;
        for (const auto &rec : trace.records) {
            ASSERT_TRUE(rec.plain_loss);
            EXPECT_LE(rec.loss, *rec.plain_loss) << rec.iter;
            EXPECT_LT(std::abs(rec.alpha.sum() - 1.0), rec.alpha.size() ? 1e-12 : 1.1);
        }
    }
}

TEST_F(AndersonStepTest, NesterovFirstStepEqualsBaseline) {
    SolverConfig c;
    c.formulation = form_;
    c.max_iters = 1;
    c.method = Method::prox_baseline;
    const Matrix base = run(problem_, c).dense();
    c.method = Method::prox_nesterov;
    EXPECT_EQ(run(problem_, c).dense(), base);
}
