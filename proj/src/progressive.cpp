#include <algorithm>
#include <cmath>

#include "fire/error.hpp"
#include "fire/parallel.hpp"
#include "fire/selection.hpp"

namespace fire {

namespace {

std::size_t reduced_size(std::size_t size, double eta, std::size_t k) {
    const auto kept = static_cast<std::size_t>(std::floor(static_cast<double>(size) * eta / 100.0));
    return std::max(k, kept);
}

/// Reorders `rows` best-first by `ratings` (indexed by corpus row) and
/// truncates to `keep`.
void sort_and_keep(std::vector<std::size_t>& rows, const std::vector<double>& ratings,
                   std::span<const std::string> doc_ids, std::size_t keep) {
    std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
        if (ratings[a] != ratings[b]) return ratings[a] > ratings[b];
        return doc_ids[a] < doc_ids[b];
    });
    rows.resize(std::min(keep, rows.size()));
}

} // namespace

SelectionManifest progressive_select(const RatingMatrix& aligned, const RatingMatrix& basis,
                                     std::span<const double> gamma, std::span<const std::string> doc_ids,
                                     const IntegrationParams& params, const SelectionPlan& plan,
                                     ProgressiveTrace* trace, std::size_t threads) {
    plan.validate();
    const std::size_t total = aligned.rows();
    if (doc_ids.size() != total || basis.rows() != total)
        throw ArgumentError("progressive_select: matrices and ids differ in row count");
    if (basis.rater_ids != aligned.rater_ids) throw ArgumentError("progressive_select: basis and aligned raters differ");
    if (plan.k > total)
        throw ArgumentError("progressive_select: k = " + std::to_string(plan.k) + " exceeds the " +
                            std::to_string(total) + " available documents");

    ProgressiveTrace local_trace;
    ProgressiveTrace& tr = trace ? *trace : local_trace;
    tr = {};

    // Global ratings and the initial reduction.
    const IntegrationModel global = build_model(basis, gamma, params);
    std::vector<double> ratings = integrate(aligned, global);
    std::vector<std::size_t> working(total);
    for (std::size_t i = 0; i < total; ++i) working[i] = i;
    sort_and_keep(working, ratings, doc_ids, reduced_size(total, plan.eta, plan.k));
    tr.working_sizes.push_back(working.size());

    std::size_t parts = plan.n_init;
    while (working.size() > plan.k) {
        const std::size_t n_parts = std::min(parts, working.size());
        if (n_parts > 1) {
            // `working` is already best-first, so contiguous blocks are
            // rating-quantile parts. Sizes differ by at most one.
            std::vector<std::pair<std::size_t, std::size_t>> bounds(n_parts);
            const std::size_t base = working.size() / n_parts, extra = working.size() % n_parts;
            std::size_t pos = 0;
            for (std::size_t p = 0; p < n_parts; ++p) {
                const std::size_t len = base + (p < extra ? 1 : 0);
                bounds[p] = {pos, pos + len};
                pos += len;
            }

            std::vector<std::vector<double>> refined(n_parts);
            std::vector<bool> degenerate(n_parts, false);
            parallel_for(n_parts, threads, [&](std::size_t p) {
                const std::span<const std::size_t> rows(working.data() + bounds[p].first,
                                                        bounds[p].second - bounds[p].first);
                try {
                    const auto model = build_model(basis.select_rows(rows), gamma, params);
                    refined[p] = integrate(aligned.select_rows(rows), model);
                } catch (const DegenerateError&) {
                    degenerate[p] = true;
                } catch (const ArgumentError&) {
                    degenerate[p] = true;
                }
            });
            for (std::size_t p = 0; p < n_parts; ++p) {
                if (degenerate[p]) {
                    ++tr.degenerate_parts;
                    continue;
                }
                for (std::size_t t = bounds[p].first; t < bounds[p].second; ++t)
                    ratings[working[t]] = refined[p][t - bounds[p].first];
            }
        }
        sort_and_keep(working, ratings, doc_ids, reduced_size(working.size(), plan.eta, plan.k));
        tr.working_sizes.push_back(working.size());
        ++tr.rounds;
        parts = std::min(static_cast<std::size_t>(std::floor(static_cast<double>(parts) * plan.beta)), plan.n_max);
    }

    SelectionManifest m;
    m.entries.reserve(plan.k);
    for (std::size_t i = 0; i < plan.k; ++i) m.entries.push_back({doc_ids[working[i]], ratings[working[i]]});
    return m;
}

SelectionManifest progressive_select(const Corpus& corpus, std::span<const RaterProfile> profiles,
                                     const IntegrationParams& params, const SelectionPlan& plan,
                                     ProgressiveTrace* trace) {
    const auto aligned = align_corpus(corpus, profiles);
    std::vector<std::string> ids;
    std::vector<double> gamma;
    for (const auto& p : profiles) {
        ids.push_back(p.rater_id);
        gamma.push_back(p.gamma);
    }
    const auto basis = params.basis == CorrelationBasis::aligned ? aligned : normalized_raw(corpus, ids);
    return progressive_select(aligned, basis, gamma, corpus.doc_ids(), params, plan, trace);
}

} // namespace fire
