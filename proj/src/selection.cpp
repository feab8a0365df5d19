#include "fire/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include "fire/error.hpp"
#include "fire/rng.hpp"
#include "json.hpp"

namespace fire {

std::string_view to_string(SelectionMode m) {
    switch (m) {
    case SelectionMode::top_k: return "top-k";
    case SelectionMode::sampled: return "sampled";
    case SelectionMode::progressive: return "progressive";
    }
    return "?";
}

SelectionMode parse_mode(std::string_view s) {
    if (s == "top-k" || s == "top_k") return SelectionMode::top_k;
    if (s == "sampled") return SelectionMode::sampled;
    if (s == "progressive") return SelectionMode::progressive;
    throw InputError("unknown selection mode '" + std::string(s) + "' (expected top-k|sampled|progressive)");
}

void SelectionPlan::validate() const {
    if (k == 0) throw ArgumentError("selection plan: k must be >= 1");
    if (mode == SelectionMode::sampled && !(tau > 0.0)) throw ArgumentError("selection plan: tau must be > 0");
    if (mode == SelectionMode::progressive) {
        if (!(eta > 0.0 && eta < 100.0)) throw ArgumentError("selection plan: eta must be in (0, 100)");
        if (!(beta >= 1.0)) throw ArgumentError("selection plan: beta must be >= 1");
        if (n_init == 0) throw ArgumentError("selection plan: n_init must be >= 1");
        if (n_max < n_init) throw ArgumentError("selection plan: n_max must be >= n_init");
    }
}

std::string plan_to_json(const SelectionPlan& plan) {
    nlohmann::ordered_json j;
    j["mode"] = to_string(plan.mode);
    j["k"] = plan.k;
    j["tau"] = plan.tau;
    j["eta"] = plan.eta;
    j["n_init"] = plan.n_init;
    j["beta"] = plan.beta;
    j["n_max"] = plan.n_max;
    j["seed"] = plan.seed;
    return j.dump();
}

std::vector<std::string> SelectionManifest::doc_ids() const {
    std::vector<std::string> ids;
    ids.reserve(entries.size());
    for (const auto& e : entries) ids.push_back(e.doc_id);
    return ids;
}

void write_manifest(const SelectionManifest& manifest, std::ostream& out) {
    for (const auto& e : manifest.entries) {
        nlohmann::ordered_json j;
        j["id"] = e.doc_id;
        j["integrated_rating"] = e.rating;
        out << j.dump() << '\n';
    }
}

SelectionManifest read_manifest(std::istream& in) {
    SelectionManifest m;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            m.entries.push_back({j.at("id").get<std::string>(), j.at("integrated_rating").get<double>()});
        } catch (const nlohmann::json::exception& e) {
            throw InputError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return m;
}

namespace {

void check_inputs(std::span<const double> ratings, std::span<const std::string> doc_ids, std::size_t k) {
    if (ratings.size() != doc_ids.size()) throw ArgumentError("selection: ratings and ids differ in length");
    if (k == 0) throw ArgumentError("selection: k must be >= 1");
    if (k > ratings.size())
        throw ArgumentError("selection: k = " + std::to_string(k) + " exceeds the " + std::to_string(ratings.size()) +
                            " available documents");
    for (double r : ratings) {
        if (std::isnan(r)) throw ArgumentError("selection: NaN rating");
    }
}

} // namespace

std::vector<std::size_t> rank_order(std::span<const double> ratings, std::span<const std::string> doc_ids) {
    std::vector<std::size_t> order(ratings.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (ratings[a] != ratings[b]) return ratings[a] > ratings[b];
        return doc_ids[a] < doc_ids[b];
    });
    return order;
}

SelectionManifest select_top_k(std::span<const double> ratings, std::span<const std::string> doc_ids, std::size_t k) {
    check_inputs(ratings, doc_ids, k);
    std::vector<std::size_t> order(ratings.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (ratings[a] != ratings[b]) return ratings[a] > ratings[b];
                          return doc_ids[a] < doc_ids[b];
                      });
    SelectionManifest m;
    m.entries.reserve(k);
    for (std::size_t i = 0; i < k; ++i) m.entries.push_back({doc_ids[order[i]], ratings[order[i]]});
    return m;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

/// Complete binary tree of log-sum-exp partial sums over the leaves.
class LogSumTree {
public:
    explicit LogSumTree(std::span<const double> log_weights) {
        while (width_ < log_weights.size()) width_ *= 2;
        nodes_.assign(2 * width_, kNegInf);
        std::copy(log_weights.begin(), log_weights.end(), nodes_.begin() + static_cast<std::ptrdiff_t>(width_));
        for (std::size_t i = width_ - 1; i >= 1; --i) nodes_[i] = log_add(nodes_[2 * i], nodes_[2 * i + 1]);
    }

    bool empty() const { return nodes_[1] == kNegInf; }

    /// Descends from the root choosing each child with its conditional
    /// probability, then removes the chosen leaf.
    std::size_t draw_and_remove(Rng& rng) {
        std::size_t node = 1;
        while (node < width_) {
            const double left = nodes_[2 * node], right = nodes_[2 * node + 1];
            if (right == kNegInf) {
                node = 2 * node;
            } else if (left == kNegInf) {
                node = 2 * node + 1;
            } else {
                const double p_left = 1.0 / (1.0 + std::exp(right - left));
                node = rng.uniform() < p_left ? 2 * node : 2 * node + 1;
            }
        }
        const std::size_t leaf = node - width_;
        nodes_[node] = kNegInf;
        for (node /= 2; node >= 1; node /= 2) nodes_[node] = log_add(nodes_[2 * node], nodes_[2 * node + 1]);
        return leaf;
    }

private:
    std::size_t width_ = 1;
    std::vector<double> nodes_;
};

} // namespace

SelectionManifest sample_with_temperature(std::span<const double> ratings, std::span<const std::string> doc_ids,
                                          std::size_t k, double tau, std::uint64_t seed) {
    if (!(tau > 0.0)) throw ArgumentError("sample_with_temperature: tau must be > 0");
    check_inputs(ratings, doc_ids, k);

    const double top = *std::max_element(ratings.begin(), ratings.end());
    std::vector<double> logits(ratings.size());
    for (std::size_t i = 0; i < ratings.size(); ++i) logits[i] = (ratings[i] - top) / tau;

    LogSumTree tree(logits);
    Rng rng(seed);
    SelectionManifest m;
    m.entries.reserve(k);
    for (std::size_t draw = 0; draw < k; ++draw) {
        const std::size_t i = tree.draw_and_remove(rng);
        m.entries.push_back({doc_ids[i], ratings[i]});
    }
    return m;
}

std::string_view to_string(BaselineMethod m) {
    switch (m) {
    case BaselineMethod::average: return "average";
    case BaselineMethod::max_criteria: return "max_criteria";
    case BaselineMethod::mix_criteria: return "mix_criteria";
    }
    return "?";
}

SelectionManifest baseline_select(const RatingMatrix& ratings, std::span<const std::string> doc_ids,
                                  BaselineMethod method, std::size_t k, std::uint64_t seed) {
    const std::size_t n = ratings.rows();
    if (ratings.cols() == 0) throw ArgumentError("baseline_select: no rater columns");
    if (doc_ids.size() != n) throw ArgumentError("baseline_select: ids and rows differ in length");

    std::vector<double> row_max(n, kNegInf);
    for (const auto& col : ratings.columns) {
        for (std::size_t i = 0; i < n; ++i) row_max[i] = std::max(row_max[i], col[i]);
    }

    switch (method) {
    case BaselineMethod::average: {
        std::vector<double> mean(n, 0.0);
        for (const auto& col : ratings.columns) {
            for (std::size_t i = 0; i < n; ++i) mean[i] += col[i];
        }
        for (double& v : mean) v /= static_cast<double>(ratings.cols());
        return select_top_k(mean, doc_ids, k);
    }
    case BaselineMethod::max_criteria: return select_top_k(row_max, doc_ids, k);
    case BaselineMethod::mix_criteria: {
        check_inputs(row_max, doc_ids, k);
        std::vector<bool> in_union(n, false);
        for (const auto& col : ratings.columns) {
            const auto order = rank_order(col, doc_ids);
            for (std::size_t i = 0; i < k; ++i) in_union[order[i]] = true;
        }
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < n; ++i) {
            if (in_union[i]) pool.push_back(i);
        }
        if (pool.size() < k)
            throw ArgumentError("mix_criteria: union of per-rater top lists has only " + std::to_string(pool.size()) +
                                " documents, fewer than k = " + std::to_string(k));
        // Partial Fisher-Yates; draw order is the selection order.
        Rng rng(seed);
        SelectionManifest m;
        for (std::size_t i = 0; i < k; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
            std::swap(pool[i], pool[j]);
            m.entries.push_back({doc_ids[pool[i]], row_max[pool[i]]});
        }
        return m;
    }
    }
    throw ArgumentError("baseline_select: unknown method");
}

} // namespace fire
