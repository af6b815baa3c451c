#include "mfp/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "mfp/rng.hpp"

namespace mfp {

ColumnKind ColumnKind::categorical(std::vector<std::string> levels) {
    if (levels.empty()) throw DataError("categorical column needs at least one level");
    std::sort(levels.begin(), levels.end());
    if (std::adjacent_find(levels.begin(), levels.end()) != levels.end())
        throw DataError("duplicate level in categorical column");
    ColumnKind k;
    k.type = ColumnType::Categorical;
    k.levels = std::move(levels);
    return k;
}

std::int32_t ColumnKind::level_index(const std::string& name) const {
    auto it = std::lower_bound(levels.begin(), levels.end(), name);
    if (it == levels.end() || *it != name) return -1;
    return static_cast<std::int32_t>(it - levels.begin());
}

int Dataset::find_column(const std::string& name) const {
    for (std::size_t j = 0; j < cols_.size(); ++j)
        if (cols_[j].name == name) return static_cast<int>(j);
    return -1;
}

std::size_t Dataset::column_index(const std::string& name) const {
    int j = find_column(name);
    if (j < 0) throw DataError("no such column: " + name);
    return static_cast<std::size_t>(j);
}

Schema Dataset::schema() const {
    Schema s;
    s.reserve(cols_.size());
    for (const auto& c : cols_) s.push_back({c.name, c.kind});
    return s;
}

std::optional<double> Dataset::cont_at(std::size_t col, std::size_t row) const {
    const auto& c = cols_[col];
    if (c.miss[row]) return std::nullopt;
    return c.cont[row];
}

std::optional<std::int32_t> Dataset::cat_at(std::size_t col, std::size_t row) const {
    const auto& c = cols_[col];
    if (c.miss[row]) return std::nullopt;
    return c.cat[row];
}

void Dataset::check_rows(std::size_t n, const std::string& name) const {
    if (!cols_.empty() && n != n_rows_)
        throw DataError("column " + name + " has " + std::to_string(n) + " rows, expected " +
                        std::to_string(n_rows_));
}

void Dataset::add_continuous(std::string name, std::vector<double> values,
                             std::vector<std::uint8_t> miss) {
    if (miss.empty()) miss.assign(values.size(), 0);
    if (miss.size() != values.size()) throw DataError("mask/value size mismatch");
    check_rows(values.size(), name);
    n_rows_ = values.size();
    cols_.push_back({std::move(name), ColumnKind::continuous(), std::move(values), {},
                     std::move(miss)});
}

void Dataset::add_categorical(std::string name, ColumnKind kind,
                              std::vector<std::int32_t> values,
                              std::vector<std::uint8_t> miss) {
    if (!kind.is_categorical()) throw DataError("kind is not categorical");
    if (miss.empty()) miss.assign(values.size(), 0);
    if (miss.size() != values.size()) throw DataError("mask/value size mismatch");
    check_rows(values.size(), name);
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!miss[i] && (values[i] < 0 || values[i] >= kind.n_levels()))
            throw DataError("level index out of range in column " + name);
    n_rows_ = values.size();
    cols_.push_back({std::move(name), std::move(kind), {}, std::move(values),
                     std::move(miss)});
}

void Dataset::set_cont(std::size_t col, std::size_t row, double v) {
    auto& c = cols_[col];
    if (c.kind.is_categorical()) throw DataError("set_cont on categorical column " + c.name);
    c.cont[row] = v;
    c.miss[row] = 0;
}

void Dataset::set_cat(std::size_t col, std::size_t row, std::int32_t level) {
    auto& c = cols_[col];
    if (!c.kind.is_categorical()) throw DataError("set_cat on continuous column " + c.name);
    if (level < 0 || level >= c.kind.n_levels())
        throw DataError("level index out of range in column " + c.name);
    c.cat[row] = level;
    c.miss[row] = 0;
}

void Dataset::set_missing(std::size_t col, std::size_t row) {
    cols_[col].miss[row] = 1;
}

bool Dataset::complete() const {
    for (const auto& c : cols_)
        for (auto m : c.miss)
            if (m) return false;
    return true;
}

Dataset Dataset::subset_rows(std::span<const std::size_t> rows) const {
    Dataset out;
    for (const auto& c : cols_) {
        std::vector<std::uint8_t> miss(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) miss[i] = c.miss[rows[i]];
        if (c.kind.is_categorical()) {
            std::vector<std::int32_t> v(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) v[i] = c.cat[rows[i]];
            out.add_categorical(c.name, c.kind, std::move(v), std::move(miss));
        } else {
            std::vector<double> v(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) v[i] = c.cont[rows[i]];
            out.add_continuous(c.name, std::move(v), std::move(miss));
        }
    }
    out.n_rows_ = rows.size(); // covers the zero-column case
    return out;
}

Dataset Dataset::select_columns(const std::vector<std::string>& names) const {
    Dataset out;
    for (const auto& name : names) {
        const auto& c = cols_[column_index(name)];
        if (c.kind.is_categorical())
            out.add_categorical(c.name, c.kind, c.cat, c.miss);
        else
            out.add_continuous(c.name, c.cont, c.miss);
    }
    out.n_rows_ = n_rows_;
    return out;
}

void Dataset::overwrite_columns_from(const Dataset& src) {
    if (src.n_rows() != n_rows_) throw DataError("row count mismatch in overwrite");
    for (const auto& c : src.cols_) {
        auto& dst = cols_[column_index(c.name)];
        if (dst.kind != c.kind) throw DataError("column kind mismatch: " + c.name);
        dst = c;
    }
}

std::vector<double> missing_proportions(const Dataset& d) {
    std::vector<double> out(d.n_cols(), 0.0);
    if (d.n_rows() == 0) return out;
    for (std::size_t j = 0; j < d.n_cols(); ++j) {
        std::size_t n = 0;
        for (auto m : d.column(j).miss) n += (m != 0);
        out[j] = static_cast<double>(n) / static_cast<double>(d.n_rows());
    }
    return out;
}

std::int32_t DummyCodec::decode_row(std::span<const double> probs) const {
    if (probs.size() + 1 != levels.size())
        throw DataError("dummy decode: expected " + std::to_string(levels.size() - 1) +
                        " values, got " + std::to_string(probs.size()));
    double rest = 1.0;
    for (double p : probs) rest -= p;
    std::int32_t best = 0;
    double best_score = rest; // excluded level = index 0
    for (std::size_t j = 0; j < probs.size(); ++j) {
        if (probs[j] > best_score) {
            best_score = probs[j];
            best = static_cast<std::int32_t>(j + 1);
        }
    }
    return best;
}

std::pair<Dataset, std::vector<DummyCodec>>
dummy_encode(const Dataset& d, const std::vector<std::string>& columns) {
    std::vector<std::string> targets(columns.begin(), columns.end());
    Dataset out;
    std::vector<DummyCodec> codecs;
    for (std::size_t j = 0; j < d.n_cols(); ++j) {
        const auto& c = d.column(j);
        bool encode = std::find(targets.begin(), targets.end(), c.name) != targets.end();
        if (!encode) {
            if (c.kind.is_categorical())
                out.add_categorical(c.name, c.kind, c.cat, c.miss);
            else
                out.add_continuous(c.name, c.cont, c.miss);
            continue;
        }
        if (!c.kind.is_categorical())
            throw DataError("dummy_encode: column is not categorical: " + c.name);
        if (c.kind.n_levels() < 2)
            throw DataError("dummy_encode: column has fewer than 2 levels: " + c.name);
        DummyCodec codec;
        codec.source = c.name;
        codec.levels = c.kind.levels;
        for (std::size_t lvl = 1; lvl < codec.levels.size(); ++lvl) {
            std::string name = c.name + "_" + codec.levels[lvl];
            codec.encoded_names.push_back(name);
            std::vector<double> v(d.n_rows(), 0.0);
            for (std::size_t i = 0; i < d.n_rows(); ++i)
                if (!c.miss[i]) v[i] = c.cat[i] == static_cast<std::int32_t>(lvl) ? 1.0 : 0.0;
            out.add_continuous(std::move(name), std::move(v), c.miss);
        }
        codecs.push_back(std::move(codec));
    }
    for (const auto& name : targets)
        if (d.find_column(name) < 0) throw DataError("dummy_encode: no such column: " + name);
    return {std::move(out), std::move(codecs)};
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& d, double test_fraction,
                                             std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw DataError("test_fraction must be in (0, 1)");
    const std::size_t n = d.n_rows();
    auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(n)));
    if (n_test == 0 || n_test >= n)
        throw DataError("train_test_split would produce an empty partition");

    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(derive_seed(seed, 0x73706c6974ULL)); // "split" stream
    for (std::size_t i = n; i > 1; --i)
        std::swap(idx[i - 1], idx[rng.below(i)]);

    std::vector<std::size_t> test(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
    return {d.subset_rows(train), d.subset_rows(test)};
}

} // namespace mfp
