#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fire/alignment.hpp"
#include "fire/corpus.hpp"
#include "fire/integration.hpp"
#include "fire/matrix.hpp"

namespace fire {

enum class SelectionMode { top_k, sampled, progressive };

std::string_view to_string(SelectionMode m);
SelectionMode parse_mode(std::string_view s);

struct SelectionPlan {
    SelectionMode mode = SelectionMode::top_k;
    std::size_t k = 1;
    double tau = 1.0;       ///< sampled mode
    double eta = 60.0;      ///< progressive: percentage kept per reduction
    std::size_t n_init = 2; ///< progressive: initial part count
    double beta = 20.0;     ///< progressive: part multiplication factor
    std::size_t n_max = 64; ///< progressive: part count cap
    std::uint64_t seed = 0;

    /// Throws ArgumentError on k = 0, tau <= 0, eta outside (0, 100),
    /// beta < 1, n_init = 0 or n_max < n_init.
    void validate() const;
};

std::string plan_to_json(const SelectionPlan& plan);

struct ManifestEntry {
    std::string doc_id;
    double rating = 0.0;

    bool operator==(const ManifestEntry&) const = default;
};

struct SelectionManifest {
    std::vector<ManifestEntry> entries; ///< selection order
    std::string plan_hash;
    std::string model_hash;

    std::size_t size() const { return entries.size(); }
    std::vector<std::string> doc_ids() const;
};

/// One {"id", "integrated_rating"} object per line, selection order.
void write_manifest(const SelectionManifest& manifest, std::ostream& out);
SelectionManifest read_manifest(std::istream& in);

/// Order used everywhere: rating descending, then doc_id ascending.
std::vector<std::size_t> rank_order(std::span<const double> ratings, std::span<const std::string> doc_ids);

/// The k best rows under rank_order.
SelectionManifest select_top_k(std::span<const double> ratings, std::span<const std::string> doc_ids, std::size_t k);

/// k sequential draws without replacement, P(x) proportional to exp(I(x)/tau)
/// over the not-yet-drawn rows. Weights are kept as log-sum-exp partial sums
/// in a binary tree, so no draw ever exponentiates an unshifted I/tau.
SelectionManifest sample_with_temperature(std::span<const double> ratings, std::span<const std::string> doc_ids,
                                          std::size_t k, double tau, std::uint64_t seed);

struct ProgressiveTrace {
    std::vector<std::size_t> working_sizes; ///< after the initial reduction and after each round
    std::size_t rounds = 0;                 ///< refinement rounds inside the loop
    std::size_t degenerate_parts = 0;       ///< parts that kept their previous ratings
    /// Passes over the working set: initial rating + reduction, each round,
    /// and the final top-k cut.
    std::size_t passes() const { return rounds + 2; }
};

/// Progressive selection.
///
/// `aligned` provides A(x); `basis` provides the columns correlations are
/// computed on (the aligned matrix itself or normalized raw scores); both
/// share row order with `doc_ids` and column order with `gamma`.
///
/// 1. Rate everything with the global model and keep the top eta%.
/// 2. While more than k rows remain: split the working set into n rating
///    quantile parts; in each part recompute correlations, orthogonality and
///    o (gamma stays global) and re-rate the part's rows; sort all rows on the
///    new ratings, keep the top eta% (never fewer than k); n <- min(n beta, n_max).
/// 3. Return the top k.
///
/// Every reduction keeps max(k, floor(size * eta / 100)) rows. With a single
/// part (n = 1) the part spans the whole rating range and keeps the global
/// o. A part whose model cannot be built (fewer than 2 rows, a constant
/// column, all raters fully correlated) keeps its rows' current ratings.
SelectionManifest progressive_select(const RatingMatrix& aligned, const RatingMatrix& basis,
                                     std::span<const double> gamma, std::span<const std::string> doc_ids,
                                     const IntegrationParams& params, const SelectionPlan& plan,
                                     ProgressiveTrace* trace = nullptr, std::size_t threads = 1);

/// Convenience overload: aligns the corpus with `profiles`, picks the
/// correlation basis from params.basis and runs the above.
SelectionManifest progressive_select(const Corpus& corpus, std::span<const RaterProfile> profiles,
                                     const IntegrationParams& params, const SelectionPlan& plan,
                                     ProgressiveTrace* trace = nullptr);

enum class BaselineMethod { average, max_criteria, mix_criteria };

std::string_view to_string(BaselineMethod m);

/// average:      row mean, then top-k (pass min-max normalized raw scores)
/// max_criteria: row max, then top-k (pass aligned ratings)
/// mix_criteria: union of every column's top-k, deduplicated, then k drawn
///               uniformly without replacement; the rating reported is the
///               row max. Throws ArgumentError when the union has fewer than
///               k rows.
SelectionManifest baseline_select(const RatingMatrix& ratings, std::span<const std::string> doc_ids,
                                  BaselineMethod method, std::size_t k, std::uint64_t seed);

} // namespace fire
