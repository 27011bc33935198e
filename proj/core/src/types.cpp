#include "wlrma/types.hpp"

#include "wlrma/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wlrma {

namespace {

std::string cell(Index i, Index j) {
    std::ostringstream os;
    os << "(" << i << ", " << j << ")";
    return os.str();
}

} // namespace

WeightedProblem WeightedProblem::dense(Matrix target, Matrix weights) {
    if (target.rows() != weights.rows() || target.cols() != weights.cols()) {
        std::ostringstream os;
        os << "target is " << target.rows() << "x" << target.cols() << " but weights are "
           << weights.rows() << "x" << weights.cols();
        throw DimensionError(os.str());
    }
    for (Index j = 0; j < weights.cols(); ++j) {
        for (Index i = 0; i < weights.rows(); ++i) {
            const double w = weights(i, j);
            if (!(w >= 0.0 && w <= 1.0))
                throw InputError("weight " + std::to_string(w) + " at " + cell(i, j) +
                                 " is outside [0, 1]");
            if (!std::isfinite(target(i, j)))
                throw InputError("non-finite target at " + cell(i, j));
        }
    }
    WeightedProblem p;
    p.sparse_ = false;
    p.rows_ = target.rows();
    p.cols_ = target.cols();
    p.target_ = std::move(target);
    p.weights_ = std::move(weights);
    return p;
}

WeightedProblem WeightedProblem::sparse(Index rows, Index cols, std::vector<Entry> entries) {
    if (rows < 0 || cols < 0)
        throw InputError("negative problem shape");
    for (const auto &e : entries) {
        if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols)
            throw InputError("entry " + cell(e.row, e.col) + " outside " + std::to_string(rows) +
                             "x" + std::to_string(cols) + " shape");
        if (!(e.weight > 0.0 && e.weight <= 1.0))
            throw InputError("weight " + std::to_string(e.weight) + " at " + cell(e.row, e.col) +
                             " is outside (0, 1]");
        if (!std::isfinite(e.value))
            throw InputError("non-finite target at " + cell(e.row, e.col));
    }
    std::sort(entries.begin(), entries.end(), [](const Entry &x, const Entry &y) {
        return x.col != y.col ? x.col < y.col : x.row < y.row;
    });
    for (std::size_t e = 1; e < entries.size(); ++e) {
        if (entries[e].row == entries[e - 1].row && entries[e].col == entries[e - 1].col)
            throw InputError("duplicate entry " + cell(entries[e].row, entries[e].col));
    }
    WeightedProblem p;
    p.sparse_ = true;
    p.rows_ = rows;
    p.cols_ = cols;
    p.entries_ = std::move(entries);
    return p;
}

Index WeightedProblem::observed() const noexcept {
    if (sparse_)
        return static_cast<Index>(entries_.size());
    return (weights_.array() > 0.0).count();
}

const Matrix &WeightedProblem::target() const {
    if (sparse_)
        throw InputError("target(): problem uses sparse storage");
    return target_;
}

const Matrix &WeightedProblem::weights() const {
    if (sparse_)
        throw InputError("weights(): problem uses sparse storage");
    return weights_;
}

std::span<const Entry> WeightedProblem::entries() const {
    if (!sparse_)
        throw InputError("entries(): problem uses dense storage");
    return entries_;
}

Matrix WeightedProblem::dense_target() const {
    if (!sparse_)
        return target_;
    Matrix m = Matrix::Zero(rows_, cols_);
    for (const auto &e : entries_)
        m(e.row, e.col) = e.value;
    return m;
}

Matrix WeightedProblem::dense_weights() const {
    if (!sparse_)
        return weights_;
    Matrix w = Matrix::Zero(rows_, cols_);
    for (const auto &e : entries_)
        w(e.row, e.col) = e.weight;
    return w;
}

WeightedProblem WeightedProblem::to_dense() const {
    if (!sparse_)
        return *this;
    return dense(dense_target(), dense_weights());
}

WeightedProblem WeightedProblem::to_sparse() const {
    if (sparse_)
        return *this;
    std::vector<Entry> entries;
    for (Index j = 0; j < cols_; ++j)
        for (Index i = 0; i < rows_; ++i)
            if (weights_(i, j) > 0.0)
                entries.push_back({i, j, target_(i, j), weights_(i, j)});
    return sparse(rows_, cols_, std::move(entries));
}

FactorStack FactorStack::stack(const FactorPair &factors) {
    if (factors.a.cols() != factors.b.cols())
        throw DimensionError("factor column counts differ");
    FactorStack s;
    s.split = factors.a.rows();
    s.z.resize(factors.a.rows() + factors.b.rows(), factors.a.cols());
    s.z.topRows(factors.a.rows()) = factors.a;
    s.z.bottomRows(factors.b.rows()) = factors.b;
    return s;
}

FactorPair FactorStack::unstack() const {
    return {z.topRows(split), z.bottomRows(z.rows() - split)};
}

Formulation Formulation::rank(Index k, double step) {
    Formulation f{RankConstrained{k}, step};
    f.validate();
    return f;
}

Formulation Formulation::nuclear(double lambda, double step) {
    Formulation f{NuclearNorm{lambda}, step};
    f.validate();
    return f;
}

Index Formulation::k() const {
    if (const auto *r = std::get_if<RankConstrained>(&kind))
        return r->k;
    throw InputError("formulation is not rank-constrained");
}

double Formulation::lambda() const {
    if (const auto *n = std::get_if<NuclearNorm>(&kind))
        return n->lambda;
    throw InputError("formulation is not nuclear-norm penalized");
}

void Formulation::validate() const {
    if (!(step > 0.0 && step <= 1.0))
        throw InputError("learning rate must lie in (0, 1]");
    if (const auto *r = std::get_if<RankConstrained>(&kind)) {
        if (r->k < 1)
            throw InputError("rank k must be at least 1");
    } else {
        const double lambda = std::get<NuclearNorm>(kind).lambda;
        if (!(lambda >= 0.0) || !std::isfinite(lambda))
            throw InputError("lambda must be a finite nonnegative number");
    }
}

} // namespace wlrma
