#include "wlrma/accel.hpp"

#include "wlrma/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <cmath>

namespace wlrma {

void AndersonConfig::validate() const {
    if (depth < 1)
        throw InputError("anderson depth must be at least 1");
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
        throw InputError("anderson gamma must be a finite nonnegative number");
    if (reg_depth < 1)
        throw InputError("anderson regularization depth must be at least 1");
    if (delay < 0)
        throw InputError("anderson delay must be nonnegative");
}

Matrix nesterov_extrapolate(const Matrix &curr, const Matrix &prev, Index i) {
    if (i < 1)
        throw InputError("nesterov_extrapolate: iteration index must be at least 1");
    if (curr.rows() != prev.rows() || curr.cols() != prev.cols())
        throw DimensionError("nesterov_extrapolate: iterates differ in shape");
    const double momentum = static_cast<double>(i - 1) / static_cast<double>(i + 2);
    if (momentum == 0.0)
        return curr;
    return curr + momentum * (curr - prev);
}

namespace {

std::optional<Vector> normalized(Vector alpha) {
    const double total = alpha.sum();
    if (!std::isfinite(total) || std::abs(total) < 1e-300)
        return std::nullopt;
    alpha /= total;
    // A second pass removes the rounding left by the first division.
    alpha /= alpha.sum();
    if (!alpha.allFinite())
        return std::nullopt;
    return alpha;
}

} // namespace

std::optional<Vector> solve_alpha(const Matrix &gram) {
    const Index n = gram.rows();
    if (n == 0 || gram.cols() != n)
        throw DimensionError("solve_alpha: Gram matrix must be square and nonempty");
    if (n == 1)
        return Vector::Ones(1);
    if (!gram.allFinite())
        return std::nullopt;

    // Equilibrate so that residual norms of very different size do not count as ill-conditioning.
    const Vector diag = gram.diagonal();
    if ((diag.array() <= 0.0).any())
        return std::nullopt;
    const Vector scale = diag.cwiseSqrt().cwiseInverse();
    const Matrix scaled = scale.asDiagonal() * gram * scale.asDiagonal();

    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (scaled + scaled.transpose()));
    if (eig.info() != Eigen::Success)
        return std::nullopt;
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > kMaxGramCondition)
        return std::nullopt;

    const Matrix &v = eig.eigenvectors();
    const Vector rhs = scale;
    const Vector theta_scaled =
        v * (v.transpose() * rhs).cwiseQuotient(eig.eigenvalues());
    return normalized(scale.cwiseProduct(theta_scaled));
}

std::optional<Vector> solve_alpha_regularized(const Matrix &gram, const Vector &alpha_prev,
                                              double gamma) {
    const Index n = gram.rows();
    if (n == 0 || gram.cols() != n)
        throw DimensionError("solve_alpha_regularized: Gram matrix must be square and nonempty");
    if (alpha_prev.size() != n)
        throw DimensionError("solve_alpha_regularized: alpha_prev length differs from Gram size");
    if (!(gamma >= 0.0))
        throw InputError("solve_alpha_regularized: gamma must be nonnegative");
    if (gamma == 0.0)
        return solve_alpha(gram);
    if (n == 1)
        return Vector::Ones(1);
    if (!gram.allFinite())
        return std::nullopt;

    // Scaling objective by 1/s leaves the minimizer unchanged.
    double s = gram.diagonal().mean();
    if (!(s > 0.0))
        s = 1.0;
    Matrix kkt = Matrix::Zero(n + 1, n + 1);
    kkt.topLeftCorner(n, n) = gram / s;
    kkt.topLeftCorner(n, n).diagonal().array() += gamma / s;
    kkt.topRightCorner(n, 1).setOnes();
    kkt.bottomLeftCorner(1, n).setOnes();

    Vector rhs(n + 1);
    rhs.head(n) = (gamma / s) * alpha_prev;
    rhs(n) = 1.0;

    const Vector sv = Eigen::JacobiSVD<Matrix>(kkt).singularValues();
    if (!(sv(sv.size() - 1) > 0.0) || sv(0) / sv(sv.size() - 1) > kMaxGramCondition)
        return std::nullopt;
    const Vector sol = kkt.fullPivLu().solve(rhs);
    return normalized(sol.head(n));
}

AndersonState::AndersonState(Index dim, AndersonConfig config) : config_(config) {
    config_.validate();
    const Index cap = config_.depth + 1;
    outputs_ = Matrix::Zero(dim, cap);
    residuals_ = Matrix::Zero(dim, cap);
    slot_gram_ = Matrix::Zero(cap, cap);
}

Index AndersonState::slot(Index lag) const noexcept {
    const Index cap = capacity();
    return ((head_ - lag) % cap + cap) % cap;
}

void AndersonState::push(const Eigen::Ref<const Vector> &y, const Eigen::Ref<const Vector> &f) {
    if (y.size() != dim() || f.size() != dim())
        throw DimensionError("AndersonState::push: vector length differs from state dimension");
    const Index cap = capacity();
    head_ = (head_ + 1) % cap;
    count_ = std::min(count_ + 1, cap);
    outputs_.col(head_) = f;
    residuals_.col(head_) = f - y;
    for (Index lag = 0; lag < count_; ++lag) {
        const Index s = slot(lag);
        const double g = residuals_.col(head_).dot(residuals_.col(s));
        slot_gram_(head_, s) = g;
        slot_gram_(s, head_) = g;
    }
}

void AndersonState::clear() {
    head_ = -1;
    count_ = 0;
    slot_gram_.setZero();
}

Matrix AndersonState::gram() const {
    Matrix g(count_, count_);
    for (Index i = 0; i < count_; ++i)
        for (Index j = 0; j < count_; ++j)
            g(i, j) = slot_gram_(slot(i), slot(j));
    return g;
}

Matrix AndersonState::residuals() const {
    Matrix r(dim(), count_);
    for (Index lag = 0; lag < count_; ++lag)
        r.col(lag) = residuals_.col(slot(lag));
    return r;
}

Matrix AndersonState::outputs() const {
    Matrix f(dim(), count_);
    for (Index lag = 0; lag < count_; ++lag)
        f.col(lag) = outputs_.col(slot(lag));
    return f;
}

std::optional<Vector> AndersonState::coefficients() const {
    if (count_ == 0)
        return std::nullopt;
    const Matrix g = gram();
    if (config_.gamma > 0.0)
        return solve_alpha_regularized(g, alpha_prev(count_), config_.gamma);
    return solve_alpha(g);
}

Vector AndersonState::combine(const Vector &alpha) const {
    if (alpha.size() != count_)
        throw DimensionError("AndersonState::combine: coefficient count differs from buffer width");
    Vector out = Vector::Zero(dim());
    for (Index lag = 0; lag < count_; ++lag)
        out.noalias() += alpha(lag) * outputs_.col(slot(lag));
    return out;
}

void AndersonState::remember(const Vector &alpha) {
    history_.push_back(alpha);
    while (static_cast<Index>(history_.size()) > config_.reg_depth)
        history_.pop_front();
}

Vector AndersonState::alpha_prev(Index length) const {
    const Vector uniform = Vector::Constant(length, 1.0 / static_cast<double>(length));
    if (history_.empty())
        return uniform;
    Vector mean = Vector::Zero(length);
    for (const Vector &a : history_) {
        const Index common = std::min(length, a.size());
        mean.head(common) += a.head(common);
    }
    mean /= static_cast<double>(history_.size());
    const double total = mean.sum();
    if (!std::isfinite(total) || std::abs(total) < 1e-12)
        return uniform;
    return mean / total;
}

} // namespace wlrma
