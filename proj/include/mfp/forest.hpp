#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mfp/errors.hpp"

namespace mfp {

enum class ForestMode { Regression, Probability };

struct ForestParams {
    int num_trees = 500;
    int mtry = 0;          // 0 = floor(sqrt(#predictors)), at least 1
    int min_node_size = 0; // 0 = default: 5 regression, 10 probability
    int max_depth = 0;     // 0 = unlimited
    std::uint64_t seed = 0;

    bool operator==(const ForestParams&) const = default;
};

/// One complete (no missing cells) predictor column.
struct FeatureColumn {
    bool categorical = false;
    std::int32_t n_levels = 0;      // categorical only
    std::vector<double> cont;
    std::vector<std::int32_t> cat;

    static FeatureColumn continuous(std::vector<double> v) {
        FeatureColumn c;
        c.cont = std::move(v);
        return c;
    }
    static FeatureColumn categorical_col(std::vector<std::int32_t> v, std::int32_t n_levels) {
        FeatureColumn c;
        c.categorical = true;
        c.n_levels = n_levels;
        c.cat = std::move(v);
        return c;
    }
    std::size_t size() const { return categorical ? cat.size() : cont.size(); }
};

struct FeatureTable {
    std::vector<FeatureColumn> cols;
    std::size_t n_rows = 0;

    void add(FeatureColumn c);
};

/// Response vector for fit_forest.
struct Response {
    ForestMode mode = ForestMode::Regression;
    std::vector<double> cont;
    std::vector<std::int32_t> classes;
    std::int32_t n_classes = 0;

    static Response regression(std::vector<double> y) {
        Response r;
        r.cont = std::move(y);
        return r;
    }
    static Response probability(std::vector<std::int32_t> y, std::int32_t n_classes) {
        Response r;
        r.mode = ForestMode::Probability;
        r.classes = std::move(y);
        r.n_classes = n_classes;
        return r;
    }
    std::size_t size() const { return mode == ForestMode::Regression ? cont.size() : classes.size(); }
};

struct TreeNode {
    std::int32_t feature = -1; // -1 = leaf
    double threshold = 0.0;    // continuous split: x <= threshold goes left
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t cat_begin = 0; // categorical split: range of left-going levels
    std::uint32_t cat_end = 0;
    std::uint32_t payload = 0;   // leaf: offset into payloads
};

struct Tree {
    std::vector<TreeNode> nodes;
    std::vector<std::int32_t> left_levels; // pooled, sorted per split
    std::vector<double> payloads;          // 1 value per leaf (regression) or R
};

/// Shape of one predictor column, kept for predict-time validation.
struct FeatureKind {
    bool categorical = false;
    std::int32_t n_levels = 0;
    bool operator==(const FeatureKind&) const = default;
};

struct Forest {
    ForestMode mode = ForestMode::Regression;
    std::int32_t n_classes = 0;
    ForestParams params;                 // as given; resolved values below
    int mtry_used = 0;
    int min_node_size_used = 0;
    std::vector<FeatureKind> feature_kinds;
    std::vector<Tree> trees;
    std::size_t n_train = 0;
    /// Per tree, per training row: bootstrap multiplicity. Empty after
    /// drop_inbag().
    std::vector<std::vector<std::uint32_t>> inbag;

    bool has_inbag() const { return !inbag.empty(); }
    void drop_inbag() {
        inbag.clear();
        inbag.shrink_to_fit();
    }
};

/// Trains a bagged forest. Each tree gets a with-replacement bootstrap of
/// size n and a deterministic RNG stream derived from (seed, tree index);
/// results are identical for any thread count. `inbag_override`, when
/// given, supplies each tree's bootstrap multiplicities instead of sampling.
Forest fit_forest(const FeatureTable& X, const Response& y, const ForestParams& params,
                  const std::vector<std::vector<std::uint32_t>>* inbag_override = nullptr);

/// Averaged leaf payloads over all trees. Regression: n values.
/// Probability: n x R row-major, rows summing to 1.
std::vector<double> predict(const Forest& f, const FeatureTable& X);

struct OobResult {
    std::vector<double> values;        // n (regression) or n x R (probability)
    std::vector<std::uint8_t> covered; // false where no tree excluded the row
};

/// Out-of-bag predictions on the training table: row i averages only trees
/// whose bootstrap excluded row i.
OobResult oob_predict(const Forest& f, const FeatureTable& X_train);

/// Worker threads used for tree building: MFP_THREADS when set, otherwise
/// hardware concurrency.
int thread_count();

} // namespace mfp
