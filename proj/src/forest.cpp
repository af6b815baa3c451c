#include "mfp/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <thread>

#include "mfp/rng.hpp"

namespace mfp {

void FeatureTable::add(FeatureColumn c) {
    if (!cols.empty() && c.size() != n_rows)
        throw DataError("feature column row count mismatch");
    n_rows = c.size();
    cols.push_back(std::move(c));
}

int thread_count() {
    if (const char* env = std::getenv("MFP_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct SplitChoice {
    double score = kNegInf; // sum of child scores, to maximize
    std::int32_t feature = -1;
    double threshold = 0.0; // continuous midpoint, or categorical prefix length
    bool categorical = false;
    std::vector<std::int32_t> left_levels; // sorted

    // Deterministic preference: higher score, then lower feature index,
    // then lower threshold.
    bool beats(const SplitChoice& o) const {
        if (score != o.score) return score > o.score;
        if (feature != o.feature) return feature < o.feature;
        return threshold < o.threshold;
    }
};

struct TreeBuilder {
    const FeatureTable& X;
    const Response& y;
    int mtry;
    int min_node_size;
    int max_depth;
    std::int32_t n_classes;

    std::vector<std::uint32_t> rows; // bootstrap sample, partitioned in place
    std::vector<std::int32_t> feature_ids;
    std::vector<std::pair<double, double>> sort_buf;        // regression (x, y)
    std::vector<std::pair<double, std::int32_t>> sort_bufc; // probability (x, class)
    std::vector<std::int64_t> hist_l, hist_r;

    bool regression() const { return y.mode == ForestMode::Regression; }

    Tree build(Rng& rng) {
        Tree tree;
        struct Item {
            std::uint32_t node, begin, end, depth;
        };
        std::vector<Item> stack;
        tree.nodes.emplace_back();
        stack.push_back({0, 0, static_cast<std::uint32_t>(rows.size()), 0});

        while (!stack.empty()) {
            Item it = stack.back();
            stack.pop_back();
            const std::uint32_t n_node = it.end - it.begin;

            bool force_leaf = n_node <= static_cast<std::uint32_t>(min_node_size) ||
                              (max_depth > 0 && it.depth >= static_cast<std::uint32_t>(max_depth)) ||
                              pure(it.begin, it.end);

            SplitChoice best;
            if (!force_leaf) best = find_best_split(it.begin, it.end, rng);
            if (force_leaf || best.feature < 0) {
                make_leaf(tree, it.node, it.begin, it.end);
                continue;
            }

            auto& nd = tree.nodes[it.node];
            nd.feature = best.feature;
            if (best.categorical) {
                nd.cat_begin = static_cast<std::uint32_t>(tree.left_levels.size());
                tree.left_levels.insert(tree.left_levels.end(), best.left_levels.begin(),
                                        best.left_levels.end());
                nd.cat_end = static_cast<std::uint32_t>(tree.left_levels.size());
            } else {
                nd.threshold = best.threshold;
            }

            const std::uint32_t mid = partition_rows(it.begin, it.end, best);
            const auto left = static_cast<std::uint32_t>(tree.nodes.size());
            const auto right = left + 1;
            tree.nodes[it.node].left = left;
            tree.nodes[it.node].right = right;
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            // push right first so the left subtree is processed (and draws
            // from the RNG) first
            stack.push_back({right, mid, it.end, it.depth + 1});
            stack.push_back({left, it.begin, mid, it.depth + 1});
        }
        return tree;
    }

    bool pure(std::uint32_t begin, std::uint32_t end) const {
        if (regression()) {
            double v = y.cont[rows[begin]];
            for (std::uint32_t i = begin + 1; i < end; ++i)
                if (y.cont[rows[i]] != v) return false;
            return true;
        }
        std::int32_t c = y.classes[rows[begin]];
        for (std::uint32_t i = begin + 1; i < end; ++i)
            if (y.classes[rows[i]] != c) return false;
        return true;
    }

    void make_leaf(Tree& tree, std::uint32_t node, std::uint32_t begin, std::uint32_t end) {
        auto& nd = tree.nodes[node];
        nd.feature = -1;
        nd.payload = static_cast<std::uint32_t>(tree.payloads.size());
        const double n = static_cast<double>(end - begin);
        if (regression()) {
            double s = 0.0;
            for (std::uint32_t i = begin; i < end; ++i) s += y.cont[rows[i]];
            tree.payloads.push_back(s / n);
        } else {
            std::vector<double> freq(static_cast<std::size_t>(n_classes), 0.0);
            for (std::uint32_t i = begin; i < end; ++i)
                freq[static_cast<std::size_t>(y.classes[rows[i]])] += 1.0;
            for (double& f : freq) f /= n;
            tree.payloads.insert(tree.payloads.end(), freq.begin(), freq.end());
        }
    }

    SplitChoice find_best_split(std::uint32_t begin, std::uint32_t end, Rng& rng) {
        const auto p = static_cast<std::int32_t>(X.cols.size());
        feature_ids.resize(static_cast<std::size_t>(p));
        for (std::int32_t j = 0; j < p; ++j) feature_ids[static_cast<std::size_t>(j)] = j;
        std::int32_t n_try = mtry;
        if (n_try < p) {
            for (std::int32_t j = 0; j < n_try; ++j) {
                auto pick = j + static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(p - j)));
                std::swap(feature_ids[static_cast<std::size_t>(j)],
                          feature_ids[static_cast<std::size_t>(pick)]);
            }
        } else {
            n_try = p;
        }

        SplitChoice best;
        const double parent = parent_score(begin, end);
        for (std::int32_t j = 0; j < n_try; ++j) {
            std::int32_t f = feature_ids[static_cast<std::size_t>(j)];
            SplitChoice cand;
            if (X.cols[static_cast<std::size_t>(f)].categorical)
                cand = scan_categorical(f, begin, end);
            else
                cand = scan_continuous(f, begin, end);
            if (cand.feature >= 0 && cand.score > parent && cand.beats(best)) best = cand;
        }
        return best;
    }

    double parent_score(std::uint32_t begin, std::uint32_t end) const {
        const double n = static_cast<double>(end - begin);
        if (regression()) {
            double s = 0.0;
            for (std::uint32_t i = begin; i < end; ++i) s += y.cont[rows[i]];
            return s * s / n;
        }
        std::vector<std::int64_t> cnt(static_cast<std::size_t>(n_classes), 0);
        for (std::uint32_t i = begin; i < end; ++i)
            ++cnt[static_cast<std::size_t>(y.classes[rows[i]])];
        std::int64_t ss = 0;
        for (auto c : cnt) ss += c * c;
        return static_cast<double>(ss) / n;
    }

    SplitChoice scan_continuous(std::int32_t f, std::uint32_t begin, std::uint32_t end) {
        const auto& xs = X.cols[static_cast<std::size_t>(f)].cont;
        const std::uint32_t m = end - begin;
        SplitChoice best;

        if (regression()) {
            sort_buf.resize(m);
            double total = 0.0;
            for (std::uint32_t i = 0; i < m; ++i) {
                auto r = rows[begin + i];
                sort_buf[i] = {xs[r], y.cont[r]};
                total += y.cont[r];
            }
            std::sort(sort_buf.begin(), sort_buf.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            double sl = 0.0;
            for (std::uint32_t i = 1; i < m; ++i) {
                sl += sort_buf[i - 1].second;
                if (sort_buf[i].first == sort_buf[i - 1].first) continue;
                double nl = i, nr = m - i;
                double sr = total - sl;
                SplitChoice cand;
                cand.score = sl * sl / nl + sr * sr / nr;
                cand.feature = f;
                cand.threshold = midpoint(sort_buf[i - 1].first, sort_buf[i].first);
                if (cand.beats(best)) best = cand;
            }
        } else {
            sort_bufc.resize(m);
            for (std::uint32_t i = 0; i < m; ++i) {
                auto r = rows[begin + i];
                sort_bufc[i] = {xs[r], y.classes[r]};
            }
            std::sort(sort_bufc.begin(), sort_bufc.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            hist_l.assign(static_cast<std::size_t>(n_classes), 0);
            hist_r.assign(static_cast<std::size_t>(n_classes), 0);
            for (std::uint32_t i = 0; i < m; ++i)
                ++hist_r[static_cast<std::size_t>(sort_bufc[i].second)];
            std::int64_t ssl = 0, ssr = 0;
            for (auto c : hist_r) ssr += c * c;
            for (std::uint32_t i = 1; i < m; ++i) {
                auto c = static_cast<std::size_t>(sort_bufc[i - 1].second);
                ssl += 2 * hist_l[c] + 1;
                ++hist_l[c];
                ssr += -2 * hist_r[c] + 1;
                --hist_r[c];
                if (sort_bufc[i].first == sort_bufc[i - 1].first) continue;
                double nl = i, nr = m - i;
                SplitChoice cand;
                cand.score = static_cast<double>(ssl) / nl + static_cast<double>(ssr) / nr;
                cand.feature = f;
                cand.threshold = midpoint(sort_bufc[i - 1].first, sort_bufc[i].first);
                if (cand.beats(best)) best = cand;
            }
        }
        return best;
    }

    SplitChoice scan_categorical(std::int32_t f, std::uint32_t begin, std::uint32_t end) {
        const auto& col = X.cols[static_cast<std::size_t>(f)];
        const auto k = static_cast<std::size_t>(col.n_levels);
        const std::uint32_t m = end - begin;
        SplitChoice best;

        std::vector<std::int64_t> cnt(k, 0);
        if (regression()) {
            std::vector<double> sum(k, 0.0);
            for (std::uint32_t i = begin; i < end; ++i) {
                auto r = rows[i];
                auto lvl = static_cast<std::size_t>(col.cat[r]);
                ++cnt[lvl];
                sum[lvl] += y.cont[r];
            }
            std::vector<std::int32_t> present;
            double total = 0.0;
            for (std::size_t lvl = 0; lvl < k; ++lvl) {
                if (cnt[lvl] > 0) {
                    present.push_back(static_cast<std::int32_t>(lvl));
                    total += sum[lvl];
                }
            }
            if (present.size() < 2) return best;
            std::sort(present.begin(), present.end(), [&](std::int32_t a, std::int32_t b) {
                double ma = sum[static_cast<std::size_t>(a)] / static_cast<double>(cnt[static_cast<std::size_t>(a)]);
                double mb = sum[static_cast<std::size_t>(b)] / static_cast<double>(cnt[static_cast<std::size_t>(b)]);
                if (ma != mb) return ma < mb;
                return a < b;
            });
            double sl = 0.0;
            std::int64_t nl = 0;
            for (std::size_t j = 0; j + 1 < present.size(); ++j) {
                auto lvl = static_cast<std::size_t>(present[j]);
                sl += sum[lvl];
                nl += cnt[lvl];
                double nr = static_cast<double>(m) - static_cast<double>(nl);
                double sr = total - sl;
                SplitChoice cand;
                cand.score = sl * sl / static_cast<double>(nl) + sr * sr / nr;
                cand.feature = f;
                cand.threshold = static_cast<double>(j + 1);
                cand.categorical = true;
                if (cand.beats(best)) {
                    cand.left_levels.assign(present.begin(),
                                            present.begin() + static_cast<std::ptrdiff_t>(j + 1));
                    std::sort(cand.left_levels.begin(), cand.left_levels.end());
                    best = std::move(cand);
                }
            }
        } else {
            const auto R = static_cast<std::size_t>(n_classes);
            std::vector<std::int64_t> class_cnt(k * R, 0);
            for (std::uint32_t i = begin; i < end; ++i) {
                auto r = rows[i];
                auto lvl = static_cast<std::size_t>(col.cat[r]);
                ++cnt[lvl];
                ++class_cnt[lvl * R + static_cast<std::size_t>(y.classes[r])];
            }
            std::vector<std::int32_t> present;
            for (std::size_t lvl = 0; lvl < k; ++lvl)
                if (cnt[lvl] > 0) present.push_back(static_cast<std::int32_t>(lvl));
            if (present.size() < 2) return best;
            std::sort(present.begin(), present.end(), [&](std::int32_t a, std::int32_t b) {
                auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
                double fa = static_cast<double>(class_cnt[ua * R]) / static_cast<double>(cnt[ua]);
                double fb = static_cast<double>(class_cnt[ub * R]) / static_cast<double>(cnt[ub]);
                if (fa != fb) return fa < fb;
                return a < b;
            });
            hist_l.assign(R, 0);
            hist_r.assign(R, 0);
            std::int64_t ssl = 0, ssr = 0, nl = 0;
            for (auto lvl : present)
                for (std::size_t c = 0; c < R; ++c)
                    hist_r[c] += class_cnt[static_cast<std::size_t>(lvl) * R + c];
            for (auto c : hist_r) ssr += c * c;
            for (std::size_t j = 0; j + 1 < present.size(); ++j) {
                auto lvl = static_cast<std::size_t>(present[j]);
                for (std::size_t c = 0; c < R; ++c) {
                    std::int64_t v = class_cnt[lvl * R + c];
                    if (v == 0) continue;
                    ssl += v * (2 * hist_l[c] + v);
                    hist_l[c] += v;
                    ssr += v * (-2 * hist_r[c] + v);
                    hist_r[c] -= v;
                }
                nl += cnt[lvl];
                double dnl = static_cast<double>(nl);
                double dnr = static_cast<double>(m) - dnl;
                SplitChoice cand;
                cand.score = static_cast<double>(ssl) / dnl + static_cast<double>(ssr) / dnr;
                cand.feature = f;
                cand.threshold = static_cast<double>(j + 1);
                cand.categorical = true;
                if (cand.beats(best)) {
                    cand.left_levels.assign(present.begin(),
                                            present.begin() + static_cast<std::ptrdiff_t>(j + 1));
                    std::sort(cand.left_levels.begin(), cand.left_levels.end());
                    best = std::move(cand);
                }
            }
        }
        return best;
    }

    static double midpoint(double lo, double hi) {
        double mid = lo + (hi - lo) / 2.0;
        // guard against degenerate rounding on adjacent doubles
        if (!(mid > lo)) return hi;
        return mid;
    }

    std::uint32_t partition_rows(std::uint32_t begin, std::uint32_t end, const SplitChoice& s) {
        auto first = rows.begin() + begin;
        auto last = rows.begin() + end;
        const auto& col = X.cols[static_cast<std::size_t>(s.feature)];
        std::vector<std::uint32_t>::iterator mid;
        if (s.categorical) {
            mid = std::partition(first, last, [&](std::uint32_t r) {
                return std::binary_search(s.left_levels.begin(), s.left_levels.end(),
                                          col.cat[r]);
            });
        } else {
            mid = std::partition(first, last,
                                 [&](std::uint32_t r) { return col.cont[r] <= s.threshold; });
        }
        return static_cast<std::uint32_t>(mid - rows.begin());
    }
};

void validate_features(const Forest& f, const FeatureTable& X) {
    if (X.cols.size() != f.feature_kinds.size())
        throw DataError("predict: feature count mismatch");
    for (std::size_t j = 0; j < X.cols.size(); ++j) {
        const auto& c = X.cols[j];
        const auto& k = f.feature_kinds[j];
        if (c.categorical != k.categorical)
            throw DataError("predict: feature kind mismatch at column " + std::to_string(j));
        if (c.categorical) {
            if (c.n_levels != k.n_levels)
                throw DataError("predict: level count mismatch at column " + std::to_string(j));
            for (auto v : c.cat)
                if (v < 0 || v >= k.n_levels)
                    throw DataError("predict: unseen categorical level in column " +
                                    std::to_string(j));
        }
    }
}

const double* traverse(const Tree& t, const FeatureTable& X, std::size_t row) {
    std::uint32_t idx = 0;
    while (t.nodes[idx].feature >= 0) {
        const auto& nd = t.nodes[idx];
        const auto& col = X.cols[static_cast<std::size_t>(nd.feature)];
        bool left;
        if (col.categorical) {
            left = std::binary_search(t.left_levels.begin() + nd.cat_begin,
                                      t.left_levels.begin() + nd.cat_end, col.cat[row]);
        } else {
            left = col.cont[row] <= nd.threshold;
        }
        idx = left ? nd.left : nd.right;
    }
    return &t.payloads[t.nodes[idx].payload];
}

} // namespace

Forest fit_forest(const FeatureTable& X, const Response& y, const ForestParams& params,
                  const std::vector<std::vector<std::uint32_t>>* inbag_override) {
    const std::size_t n = X.n_rows;
    const auto p = static_cast<int>(X.cols.size());
    if (p == 0) throw DataError("fit_forest: zero predictors");
    if (n < 2) throw DataError("fit_forest: need at least 2 rows");
    if (y.size() != n) throw DataError("fit_forest: response length mismatch");
    if (params.num_trees < 1 || params.mtry < 0 || params.mtry > p ||
        params.min_node_size < 0 || params.max_depth < 0)
        throw DataError("fit_forest: invalid parameters");
    if (y.mode == ForestMode::Probability) {
        if (y.n_classes < 1) throw DataError("fit_forest: invalid class count");
        for (auto c : y.classes)
            if (c < 0 || c >= y.n_classes) throw DataError("fit_forest: class out of range");
    }
    for (const auto& c : X.cols)
        if (c.categorical)
            for (auto v : c.cat)
                if (v < 0 || v >= c.n_levels)
                    throw DataError("fit_forest: level index out of range");
    if (inbag_override) {
        if (inbag_override->size() != static_cast<std::size_t>(params.num_trees))
            throw DataError("fit_forest: inbag override tree count mismatch");
        for (const auto& b : *inbag_override)
            if (b.size() != n) throw DataError("fit_forest: inbag override row count mismatch");
    }

    Forest f;
    f.mode = y.mode;
    f.n_classes = y.mode == ForestMode::Probability ? y.n_classes : 0;
    f.params = params;
    f.mtry_used = params.mtry > 0
                      ? params.mtry
                      : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(p)))));
    f.min_node_size_used =
        params.min_node_size > 0 ? params.min_node_size
                                 : (y.mode == ForestMode::Regression ? 5 : 10);
    f.n_train = n;
    f.feature_kinds.reserve(X.cols.size());
    for (const auto& c : X.cols) f.feature_kinds.push_back({c.categorical, c.n_levels});

    const auto n_trees = static_cast<std::size_t>(params.num_trees);
    f.trees.resize(n_trees);
    f.inbag.resize(n_trees);

    auto build_one = [&](TreeBuilder& builder, std::size_t t) {
        Rng rng(derive_seed(params.seed, 0x74726565ULL /* "tree" */, t));
        auto& counts = f.inbag[t];
        builder.rows.clear();
        builder.rows.reserve(n);
        if (inbag_override) {
            counts = (*inbag_override)[t];
            for (std::size_t i = 0; i < n; ++i)
                for (std::uint32_t c = 0; c < counts[i]; ++c)
                    builder.rows.push_back(static_cast<std::uint32_t>(i));
        } else {
            counts.assign(n, 0);
            for (std::size_t i = 0; i < n; ++i) {
                auto r = static_cast<std::uint32_t>(rng.below(n));
                ++counts[r];
                builder.rows.push_back(r);
            }
        }
        if (builder.rows.empty()) throw DataError("fit_forest: empty bootstrap sample");
        f.trees[t] = builder.build(rng);
    };

    const int workers = std::min<int>(thread_count(), static_cast<int>(n_trees));
    if (workers <= 1) {
        TreeBuilder builder{X, y, f.mtry_used, f.min_node_size_used, params.max_depth,
                            f.n_classes};
        for (std::size_t t = 0; t < n_trees; ++t) build_one(builder, t);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr err;
        std::mutex err_mutex;
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                TreeBuilder builder{X, y, f.mtry_used, f.min_node_size_used,
                                    params.max_depth, f.n_classes};
                try {
                    for (;;) {
                        std::size_t t = next.fetch_add(1);
                        if (t >= n_trees) break;
                        build_one(builder, t);
                    }
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!err) err = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        if (err) std::rethrow_exception(err);
    }
    return f;
}

std::vector<double> predict(const Forest& f, const FeatureTable& X) {
    validate_features(f, X);
    const std::size_t n = X.n_rows;
    const std::size_t width = f.mode == ForestMode::Regression
                                  ? 1
                                  : static_cast<std::size_t>(f.n_classes);
    std::vector<double> out(n * width, 0.0);
    const double inv = 1.0 / static_cast<double>(f.trees.size());
    for (std::size_t i = 0; i < n; ++i) {
        double* dst = out.data() + i * width;
        for (const auto& tree : f.trees) {
            const double* payload = traverse(tree, X, i);
            for (std::size_t j = 0; j < width; ++j) dst[j] += payload[j];
        }
        for (std::size_t j = 0; j < width; ++j) dst[j] *= inv;
    }
    return out;
}

OobResult oob_predict(const Forest& f, const FeatureTable& X_train) {
    if (!f.has_inbag()) throw DataError("oob_predict: in-bag records were dropped");
    if (X_train.n_rows != f.n_train)
        throw DataError("oob_predict: table is not the training table");
    validate_features(f, X_train);
    const std::size_t n = X_train.n_rows;
    const std::size_t width = f.mode == ForestMode::Regression
                                  ? 1
                                  : static_cast<std::size_t>(f.n_classes);
    OobResult res;
    res.values.assign(n * width, 0.0);
    res.covered.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        double* dst = res.values.data() + i * width;
        std::size_t used = 0;
        for (std::size_t t = 0; t < f.trees.size(); ++t) {
            if (f.inbag[t][i] != 0) continue;
            const double* payload = traverse(f.trees[t], X_train, i);
            for (std::size_t j = 0; j < width; ++j) dst[j] += payload[j];
            ++used;
        }
        if (used > 0) {
            res.covered[i] = 1;
            for (std::size_t j = 0; j < width; ++j) dst[j] /= static_cast<double>(used);
        }
    }
    return res;
}

} // namespace mfp
