#pragma once

#include "wlrma/solver.hpp"
#include "wlrma/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wlrma {

/// Observed cells read from disk, before conversion to a WeightedProblem.
struct TripletDataset {
    Index rows = 0;
    Index cols = 0;
    std::vector<Entry> entries; ///< weight is 1 unless the file carried a weight column
    bool has_weights = false;

    /// Binary weights on the observed cells unless weights were supplied.
    WeightedProblem to_problem() const;
};

enum class TripletFormat {
    csv,           ///< i,j,value[,weight] with 0-based indices
    matrix_market, ///< coordinate real general, 1-based
    movielens,     ///< user::movie::rating[::ts] or userId,movieId,rating[,ts]; ids remapped
};

TripletFormat parse_triplet_format(std::string_view name);

struct Shape {
    Index rows = 0;
    Index cols = 0;
};

/// Reads a triplet file. Without `shape` the shape is inferred as max index + 1 (or the
/// MatrixMarket size line). Throws InputError naming the line on parse errors, duplicates
/// (both line numbers) and out-of-range indices.
TripletDataset load_triplets(const std::filesystem::path &path, TripletFormat format,
                             std::optional<Shape> shape = std::nullopt);

/// Same, from a stream; `source` is used in error messages.
TripletDataset parse_triplets(std::istream &in, TripletFormat format,
                              std::optional<Shape> shape = std::nullopt,
                              std::string_view source = "<stream>");

/// Ratings file with user and movie ids remapped to dense 0-based indices in ascending id order.
struct RatingsData {
    TripletDataset dataset;
    std::vector<long long> user_ids;  ///< row index -> original user id
    std::vector<long long> movie_ids; ///< column index -> original movie id
};

RatingsData load_movielens(const std::filesystem::path &path);
RatingsData parse_movielens(std::istream &in, std::string_view source = "<stream>");

/// Writes "index,original_id" lines.
void write_id_map(const std::filesystem::path &path, const std::vector<long long> &ids);

/// Keeps the `users` most active rows and `movies` most active columns (ties broken by index)
/// and reindexes them densely in their original order.
TripletDataset most_active_subset(const TripletDataset &data, Index users, Index movies);

/// i,j,value[,weight] with 0-based indices, full double precision.
void write_triplets(const std::filesystem::path &path, const TripletDataset &data);
void write_triplets(std::ostream &out, const TripletDataset &data);

/// Stored cells of a problem as a weighted triplet dataset.
TripletDataset to_triplets(const WeightedProblem &problem);

/// Dense matrices as comma-separated rows, full double precision.
void write_matrix_csv(const std::filesystem::path &path, const Matrix &m);
Matrix read_matrix_csv(const std::filesystem::path &path);
Matrix parse_matrix_csv(std::istream &in, std::string_view source = "<stream>");

/// Header iter,loss,delta,rank,seconds,alpha_0..alpha_{alpha_columns-1},guard_used.
void write_trace_csv(std::ostream &out, const ConvergenceTrace &trace, Index alpha_columns);
void write_trace_csv(const std::filesystem::path &path, const ConvergenceTrace &trace,
                     Index alpha_columns);

/// Shortest round-trippable decimal form of a double.
std::string format_double(double v);

} // namespace wlrma
