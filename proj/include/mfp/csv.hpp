#pragma once

#include <map>
#include <string>

#include "mfp/dataset.hpp"

namespace mfp {

struct CsvReadOptions {
    /// Explicit kinds for some or all columns, keyed by header name.
    /// Columns not listed are inferred (all-numeric -> continuous, otherwise
    /// categorical with lexicographic levels).
    std::map<std::string, ColumnKind> schema;
    /// When true, every schema entry must match a header column and vice versa.
    bool schema_is_exact = false;
    /// Unseen level in a schema'd categorical column: throw (default), or map
    /// the cell to the given level index per column.
    std::map<std::string, std::int32_t> map_unseen_to;
    /// Incremented for every cell mapped through map_unseen_to.
    std::size_t* unseen_mapped_out = nullptr;
};

/// Reads an RFC-4180 CSV with a header row. Cells equal to "" or "NA"
/// (exact, case-sensitive) are masked as missing.
Dataset read_csv(const std::string& path, const CsvReadOptions& opts = {});
Dataset read_csv_string(const std::string& text, const CsvReadOptions& opts = {});

/// Writes RFC-4180 CSV; missing cells are emitted as "NA". Continuous values
/// use shortest round-trip formatting.
void write_csv(const Dataset& d, const std::string& path);
std::string write_csv_string(const Dataset& d);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

} // namespace mfp
