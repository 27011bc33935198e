#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace wlrma {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// One observed cell of a sparsely weighted problem.
struct Entry {
    Index row = 0;
    Index col = 0;
    double value = 0.0;
    double weight = 1.0;
};

/// Target matrix M together with elementwise weights W in [0,1].
///
/// Dense storage keeps both n x p matrices. Sparse storage keeps only cells
/// with w > 0 (the support Omega); every cell that is not stored has weight 0
/// and target 0. Entries are kept sorted column-major (by col, then row).
class WeightedProblem {
public:
    WeightedProblem() = default;

    /// Throws DimensionError if shapes differ, InputError if any weight is outside [0,1]
    /// or any value is non-finite.
    static WeightedProblem dense(Matrix target, Matrix weights);

    /// Throws InputError on out-of-range indices, duplicate cells, weights outside (0,1].
    static WeightedProblem sparse(Index rows, Index cols, std::vector<Entry> entries);

    bool is_sparse() const noexcept { return sparse_; }
    Index rows() const noexcept { return rows_; }
    Index cols() const noexcept { return cols_; }

    /// Number of cells with nonzero weight.
    Index observed() const noexcept;

    /// Dense storage only.
    const Matrix &target() const;
    const Matrix &weights() const;

    /// Sparse storage only.
    std::span<const Entry> entries() const;

    /// Materialized n x p copies; valid for both storage kinds.
    Matrix dense_target() const;
    Matrix dense_weights() const;

    WeightedProblem to_dense() const;

    /// Cells with w > 0 as entries; for dense storage this scans the full matrix.
    WeightedProblem to_sparse() const;

private:
    bool sparse_ = false;
    Index rows_ = 0;
    Index cols_ = 0;
    Matrix target_;
    Matrix weights_;
    std::vector<Entry> entries_;
};

/// X = A * B^T with A n x k and B p x k.
struct FactorPair {
    Matrix a;
    Matrix b;

    Index rank_bound() const noexcept { return a.cols(); }
    Matrix product() const { return a * b.transpose(); }
};

/// Vertical stack Z = [A; B] used as the acceleration variable for ALS.
struct FactorStack {
    Matrix z;
    Index split = 0; ///< row count of A

    static FactorStack stack(const FactorPair &factors);
    FactorPair unstack() const;
};

struct RankConstrained {
    Index k = 1;
};

struct NuclearNorm {
    double lambda = 0.0;
};

/// Problem formulation plus the fixed learning rate t in (0,1].
struct Formulation {
    std::variant<RankConstrained, NuclearNorm> kind = RankConstrained{};
    double step = 1.0;

    static Formulation rank(Index k, double step = 1.0);
    static Formulation nuclear(double lambda, double step = 1.0);

    bool is_rank() const noexcept { return std::holds_alternative<RankConstrained>(kind); }
    Index k() const;
    double lambda() const;

    /// Throws InputError if k < 1, lambda < 0 or t outside (0,1].
    void validate() const;
};

} // namespace wlrma
