#include "wlrma/io.hpp"

#include "wlrma/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace wlrma {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view line, std::string_view sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + sep.size();
    }
}

[[noreturn]] void fail(std::string_view source, std::size_t line, const std::string &msg) {
    std::ostringstream os;
    os << source << ":" << line << ": " << msg;
    throw InputError(os.str());
}

template <class T> bool parse_number(const std::string &text, T &out) {
    const char *begin = text.data();
    const char *end = begin + text.size();
    if (begin != end && *begin == '+')
        ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

template <class T> T number(const std::string &text, std::string_view source, std::size_t line,
                            const char *what) {
    T out{};
    if (!parse_number(text, out))
        fail(source, line, std::string("cannot parse ") + what + " '" + text + "'");
    return out;
}

bool skippable(const std::string &line) {
    return line.empty() || line[0] == '#';
}

bool looks_like_header(const std::string &line) {
    return std::any_of(line.begin(), line.end(), [](char c) {
        return std::isalpha(static_cast<unsigned char>(c)) && c != 'e' && c != 'E';
    });
}

struct Located {
    Entry entry;
    std::size_t line;
};

TripletDataset finish(std::vector<Located> cells, std::optional<Shape> shape, bool has_weights,
                      std::string_view source) {
    TripletDataset data;
    data.has_weights = has_weights;
    if (shape) {
        data.rows = shape->rows;
        data.cols = shape->cols;
    } else {
        for (const auto &c : cells) {
            data.rows = std::max(data.rows, c.entry.row + 1);
            data.cols = std::max(data.cols, c.entry.col + 1);
        }
    }
    std::map<std::pair<Index, Index>, std::size_t> seen;
    for (const auto &c : cells) {
        const auto &e = c.entry;
        if (e.row < 0 || e.col < 0 || e.row >= data.rows || e.col >= data.cols) {
            std::ostringstream os;
            os << "index (" << e.row << ", " << e.col << ") outside " << data.rows << "x"
               << data.cols << " shape";
            fail(source, c.line, os.str());
        }
        if (has_weights && !(e.weight > 0.0 && e.weight <= 1.0))
            fail(source, c.line, "weight " + format_double(e.weight) + " outside (0, 1]");
        const auto [it, inserted] = seen.emplace(std::make_pair(e.row, e.col), c.line);
        if (!inserted) {
            std::ostringstream os;
            os << "duplicate entry (" << e.row << ", " << e.col << ") on lines " << it->second
               << " and " << c.line;
            fail(source, c.line, os.str());
        }
        data.entries.push_back(e);
    }
    return data;
}

TripletDataset parse_csv(std::istream &in, std::optional<Shape> shape, std::string_view source) {
    std::vector<Located> cells;
    bool has_weights = false;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string text = trim(raw);
        if (skippable(text))
            continue;
        if (cells.empty() && looks_like_header(text))
            continue;
        const auto fields = split(text, ",");
        if (fields.size() != 3 && fields.size() != 4)
            fail(source, line, "expected i,j,value[,weight]");
        Entry e;
        e.row = number<Index>(fields[0], source, line, "row index");
        e.col = number<Index>(fields[1], source, line, "column index");
        e.value = number<double>(fields[2], source, line, "value");
        if (fields.size() == 4) {
            if (!cells.empty() && !has_weights)
                fail(source, line, "weight column appears on some lines only");
            has_weights = true;
            e.weight = number<double>(fields[3], source, line, "weight");
        } else if (has_weights) {
            fail(source, line, "weight column appears on some lines only");
        }
        cells.push_back({e, line});
    }
    return finish(std::move(cells), shape, has_weights, source);
}

TripletDataset parse_matrix_market(std::istream &in, std::optional<Shape> shape,
                                   std::string_view source) {
    std::string raw;
    std::size_t line = 0;
    if (!std::getline(in, raw))
        fail(source, 1, "empty MatrixMarket file");
    ++line;
    {
        std::string lower = raw;
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (lower.rfind("%%matrixmarket", 0) != 0 ||
            lower.find("coordinate") == std::string::npos ||
            lower.find("general") == std::string::npos ||
            (lower.find("real") == std::string::npos && lower.find("integer") == std::string::npos))
            fail(source, line, "expected '%%MatrixMarket matrix coordinate real general'");
    }
    std::optional<Shape> declared;
    long long expected = -1;
    std::vector<Located> cells;
    while (std::getline(in, raw)) {
        ++line;
        const std::string text = trim(raw);
        if (text.empty() || text[0] == '%')
            continue;
        std::istringstream fields(text);
        std::vector<std::string> tok;
        for (std::string t; fields >> t;)
            tok.push_back(t);
        if (!declared) {
            if (tok.size() != 3)
                fail(source, line, "expected size line 'rows cols nnz'");
            declared = Shape{number<Index>(tok[0], source, line, "row count"),
                             number<Index>(tok[1], source, line, "column count")};
            expected = number<long long>(tok[2], source, line, "entry count");
            continue;
        }
        if (tok.size() != 3)
            fail(source, line, "expected 'i j value'");
        Entry e;
        e.row = number<Index>(tok[0], source, line, "row index") - 1;
        e.col = number<Index>(tok[1], source, line, "column index") - 1;
        e.value = number<double>(tok[2], source, line, "value");
        cells.push_back({e, line});
    }
    if (!declared)
        fail(source, line, "missing size line");
    if (static_cast<long long>(cells.size()) != expected)
        fail(source, line,
             "size line declares " + std::to_string(expected) + " entries, found " +
                 std::to_string(cells.size()));
    return finish(std::move(cells), shape ? shape : declared, false, source);
}

} // namespace

WeightedProblem TripletDataset::to_problem() const {
    return WeightedProblem::sparse(rows, cols, entries);
}

TripletFormat parse_triplet_format(std::string_view name) {
    if (name == "csv" || name == "csv-triplet")
        return TripletFormat::csv;
    if (name == "mm" || name == "matrix-market")
        return TripletFormat::matrix_market;
    if (name == "movielens")
        return TripletFormat::movielens;
    throw InputError("unknown triplet format '" + std::string(name) + "'");
}

TripletDataset parse_triplets(std::istream &in, TripletFormat format, std::optional<Shape> shape,
                              std::string_view source) {
    switch (format) {
    case TripletFormat::csv:
        return parse_csv(in, shape, source);
    case TripletFormat::matrix_market:
        return parse_matrix_market(in, shape, source);
    case TripletFormat::movielens: {
        TripletDataset data = parse_movielens(in, source).dataset;
        if (shape) {
            if (shape->rows < data.rows || shape->cols < data.cols)
                throw InputError(std::string(source) + ": declared shape smaller than the data");
            data.rows = shape->rows;
            data.cols = shape->cols;
        }
        return data;
    }
    }
    throw InputError("unknown triplet format");
}

TripletDataset load_triplets(const std::filesystem::path &path, TripletFormat format,
                             std::optional<Shape> shape) {
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open " + path.string());
    return parse_triplets(in, format, shape, path.string());
}

RatingsData parse_movielens(std::istream &in, std::string_view source) {
    struct Raw {
        long long user, movie;
        double rating;
        std::size_t line;
    };
    std::vector<Raw> raw_rows;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string text = trim(raw);
        if (skippable(text))
            continue;
        const bool colons = text.find("::") != std::string::npos;
        if (!colons && raw_rows.empty() && looks_like_header(text))
            continue;
        const auto fields = split(text, colons ? "::" : ",");
        if (fields.size() < 3)
            fail(source, line, "expected user, movie, rating");
        raw_rows.push_back({number<long long>(fields[0], source, line, "user id"),
                            number<long long>(fields[1], source, line, "movie id"),
                            number<double>(fields[2], source, line, "rating"), line});
    }
    RatingsData out;
    for (const auto &r : raw_rows) {
        out.user_ids.push_back(r.user);
        out.movie_ids.push_back(r.movie);
    }
    auto dedupe = [](std::vector<long long> &ids) {
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    };
    dedupe(out.user_ids);
    dedupe(out.movie_ids);
    std::unordered_map<long long, Index> user_index, movie_index;
    for (std::size_t i = 0; i < out.user_ids.size(); ++i)
        user_index[out.user_ids[i]] = static_cast<Index>(i);
    for (std::size_t j = 0; j < out.movie_ids.size(); ++j)
        movie_index[out.movie_ids[j]] = static_cast<Index>(j);

    std::vector<Located> cells;
    cells.reserve(raw_rows.size());
    for (const auto &r : raw_rows)
        cells.push_back({Entry{user_index[r.user], movie_index[r.movie], r.rating, 1.0}, r.line});
    out.dataset = finish(std::move(cells),
                         Shape{static_cast<Index>(out.user_ids.size()),
                               static_cast<Index>(out.movie_ids.size())},
                         false, source);
    return out;
}

RatingsData load_movielens(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open " + path.string());
    return parse_movielens(in, path.string());
}

void write_id_map(const std::filesystem::path &path, const std::vector<long long> &ids) {
    std::ofstream out(path);
    if (!out)
        throw InputError("cannot write " + path.string());
    out << "index,id\n";
    for (std::size_t i = 0; i < ids.size(); ++i)
        out << i << ',' << ids[i] << '\n';
}

TripletDataset most_active_subset(const TripletDataset &data, Index users, Index movies) {
    std::vector<Index> row_count(data.rows, 0), col_count(data.cols, 0);
    for (const auto &e : data.entries) {
        ++row_count[e.row];
        ++col_count[e.col];
    }
    auto top = [](const std::vector<Index> &count, Index keep) {
        std::vector<Index> order(count.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](Index x, Index y) { return count[x] > count[y]; });
        order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(keep)));
        std::sort(order.begin(), order.end());
        std::vector<Index> remap(count.size(), -1);
        for (std::size_t i = 0; i < order.size(); ++i)
            remap[order[i]] = static_cast<Index>(i);
        return std::make_pair(remap, static_cast<Index>(order.size()));
    };
    const auto [row_map, rows] = top(row_count, users);
    const auto [col_map, cols] = top(col_count, movies);
    TripletDataset out;
    out.rows = rows;
    out.cols = cols;
    out.has_weights = data.has_weights;
    for (const auto &e : data.entries) {
        if (row_map[e.row] < 0 || col_map[e.col] < 0)
            continue;
        Entry copy = e;
        copy.row = row_map[e.row];
        copy.col = col_map[e.col];
        out.entries.push_back(copy);
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc())
        return "nan";
    return std::string(buf, ptr);
}

void write_triplets(std::ostream &out, const TripletDataset &data) {
    for (const auto &e : data.entries) {
        out << e.row << ',' << e.col << ',' << format_double(e.value);
        if (data.has_weights)
            out << ',' << format_double(e.weight);
        out << '\n';
    }
}

void write_triplets(const std::filesystem::path &path, const TripletDataset &data) {
    std::ofstream out(path);
    if (!out)
        throw InputError("cannot write " + path.string());
    write_triplets(out, data);
}

TripletDataset to_triplets(const WeightedProblem &problem) {
    const WeightedProblem sparse = problem.is_sparse() ? problem : problem.to_sparse();
    TripletDataset data;
    data.rows = sparse.rows();
    data.cols = sparse.cols();
    data.has_weights = true;
    data.entries.assign(sparse.entries().begin(), sparse.entries().end());
    return data;
}

void write_matrix_csv(const std::filesystem::path &path, const Matrix &m) {
    std::ofstream out(path);
    if (!out)
        throw InputError("cannot write " + path.string());
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j)
                out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

Matrix parse_matrix_csv(std::istream &in, std::string_view source) {
    std::vector<std::vector<double>> rows;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string text = trim(raw);
        if (skippable(text))
            continue;
        std::vector<double> row;
        for (const auto &field : split(text, ","))
            row.push_back(number<double>(field, source, line, "matrix entry"));
        if (!rows.empty() && row.size() != rows.front().size())
            fail(source, line,
                 "row has " + std::to_string(row.size()) + " columns, expected " +
                     std::to_string(rows.front().size()));
        rows.push_back(std::move(row));
    }
    Matrix m(static_cast<Index>(rows.size()),
             rows.empty() ? 0 : static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[i][j];
    return m;
}

Matrix read_matrix_csv(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open " + path.string());
    return parse_matrix_csv(in, path.string());
}

void write_trace_csv(std::ostream &out, const ConvergenceTrace &trace, Index alpha_columns) {
    out << "iter,loss,delta,rank,seconds";
    for (Index j = 0; j < alpha_columns; ++j)
        out << ",alpha_" << j;
    out << ",guard_used\n";
    for (const auto &r : trace.records) {
        out << r.iter << ',' << format_double(r.loss) << ',' << format_double(r.delta) << ','
            << r.rank << ',' << format_double(r.seconds);
        for (Index j = 0; j < alpha_columns; ++j) {
            out << ',';
            if (j < r.alpha.size())
                out << format_double(r.alpha(j));
        }
        out << ',';
        if (r.guard_used)
            out << (*r.guard_used ? 1 : 0);
        out << '\n';
    }
}

void write_trace_csv(const std::filesystem::path &path, const ConvergenceTrace &trace,
                     Index alpha_columns) {
    std::ofstream out(path);
    if (!out)
        throw InputError("cannot write " + path.string());
    write_trace_csv(out, trace, alpha_columns);
}

} // namespace wlrma
