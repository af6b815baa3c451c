#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mfp/errors.hpp"

namespace mfp {

enum class ColumnType { Continuous, Categorical };

/// Column kind: continuous, or categorical with a frozen level list.
/// Levels are stored in canonical (lexicographic) order and values are
/// indices into that list.
struct ColumnKind {
    ColumnType type = ColumnType::Continuous;
    std::vector<std::string> levels; // categorical only

    static ColumnKind continuous() { return {}; }
    /// Sorts the levels into canonical order; throws on empty or duplicates.
    static ColumnKind categorical(std::vector<std::string> levels);

    bool is_categorical() const { return type == ColumnType::Categorical; }
    std::int32_t n_levels() const { return static_cast<std::int32_t>(levels.size()); }
    /// Index of a level name, or -1 if unknown.
    std::int32_t level_index(const std::string& name) const;

    bool operator==(const ColumnKind&) const = default;
};

struct ColumnSpec {
    std::string name;
    ColumnKind kind;
    bool operator==(const ColumnSpec&) const = default;
};
using Schema = std::vector<ColumnSpec>;

/// Mixed-type tabular data with an explicit missingness mask.
/// Cells flagged missing are only reachable through the optional-returning
/// accessors; the raw vectors are for code paths that have checked
/// completeness first.
class Dataset {
public:
    struct Column {
        std::string name;
        ColumnKind kind;
        std::vector<double> cont;        // continuous storage
        std::vector<std::int32_t> cat;   // categorical storage (level indices)
        std::vector<std::uint8_t> miss;  // 1 = missing

        bool operator==(const Column&) const = default;
    };

    Dataset() = default;

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return cols_.size(); }
    bool empty() const { return cols_.empty(); }

    const Column& column(std::size_t j) const { return cols_[j]; }
    /// Index of a column by name, or -1.
    int find_column(const std::string& name) const;
    /// Like find_column but throws DataError when absent.
    std::size_t column_index(const std::string& name) const;

    Schema schema() const;

    bool is_missing(std::size_t col, std::size_t row) const {
        return cols_[col].miss[row] != 0;
    }
    std::optional<double> cont_at(std::size_t col, std::size_t row) const;
    std::optional<std::int32_t> cat_at(std::size_t col, std::size_t row) const;

    /// Appends a column; all columns must share n_rows.
    void add_continuous(std::string name, std::vector<double> values,
                        std::vector<std::uint8_t> miss = {});
    void add_categorical(std::string name, ColumnKind kind,
                         std::vector<std::int32_t> values,
                         std::vector<std::uint8_t> miss = {});

    /// Overwrites a cell and clears its missing flag.
    void set_cont(std::size_t col, std::size_t row, double v);
    void set_cat(std::size_t col, std::size_t row, std::int32_t level);
    void set_missing(std::size_t col, std::size_t row);

    /// True when no cell is masked.
    bool complete() const;

    Dataset subset_rows(std::span<const std::size_t> rows) const;
    Dataset select_columns(const std::vector<std::string>& names) const;
    /// Copies same-named columns of `src` over this dataset's columns.
    void overwrite_columns_from(const Dataset& src);

    bool operator==(const Dataset&) const = default;

private:
    std::vector<Column> cols_;
    std::size_t n_rows_ = 0;

    void check_rows(std::size_t n, const std::string& name) const;
};

/// Per-column fraction of masked cells.
std::vector<double> missing_proportions(const Dataset& d);

/// K-1 dummy coding of one categorical column. The excluded level is the
/// first in alphabetical order; the emitted binary columns follow level
/// order.
struct DummyCodec {
    std::string source;
    std::vector<std::string> levels;        // canonical order; levels[0] excluded
    std::vector<std::string> encoded_names; // size K-1

    const std::string& excluded_level() const { return levels.front(); }

    /// Back-transform one row of K-1 scores to a level index. The excluded
    /// level scores 1 - sum(probs); ties resolve to the lowest level index.
    std::int32_t decode_row(std::span<const double> probs) const;
};

std::pair<Dataset, std::vector<DummyCodec>>
dummy_encode(const Dataset& d, const std::vector<std::string>& columns);

/// Row-disjoint (train, test) partition, deterministic per seed.
std::pair<Dataset, Dataset> train_test_split(const Dataset& d, double test_fraction,
                                             std::uint64_t seed);

} // namespace mfp
