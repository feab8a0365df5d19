#include "fire/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "fire/error.hpp"
#include "fire/parallel.hpp"
#include "fire/rng.hpp"
#include "json.hpp"

namespace fire {

WinRateCurve WinRateCurve::fit(std::vector<WinRatePoint> knots) {
    const std::size_t n = knots.size();
    if (n < 2) throw ArgumentError("win-rate curve needs at least 2 knots");
    for (std::size_t i = 0; i < n; ++i) {
        const auto& k = knots[i];
        if (!std::isfinite(k.percentile) || !std::isfinite(k.win_rate))
            throw ArgumentError("win-rate curve: non-finite knot");
        if (k.win_rate < 0.0 || k.win_rate > 1.0) throw ArgumentError("win-rate curve: win rate outside [0, 1]");
        if (i > 0 && !(k.percentile > knots[i - 1].percentile))
            throw ArgumentError("win-rate curve: knot percentiles must be strictly increasing");
    }

    std::vector<double> h(n - 1), slope(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = knots[i + 1].percentile - knots[i].percentile;
        slope[i] = (knots[i + 1].win_rate - knots[i].win_rate) / h[i];
    }

    // Second derivatives; natural ends m[0] = m[n-1] = 0. Interior rows form a
    // symmetric diagonally dominant tridiagonal system, solved by Thomas.
    std::vector<double> m(n, 0.0);
    if (n > 2) {
        const std::size_t inner = n - 2;
        std::vector<double> diag(inner), upper(inner), rhs(inner);
        for (std::size_t r = 0; r < inner; ++r) {
            diag[r] = 2.0 * (h[r] + h[r + 1]);
            upper[r] = h[r + 1];
            rhs[r] = 6.0 * (slope[r + 1] - slope[r]);
        }
        for (std::size_t r = 1; r < inner; ++r) {
            const double w = h[r] / diag[r - 1];
            diag[r] -= w * upper[r - 1];
            rhs[r] -= w * rhs[r - 1];
        }
        m[inner] = rhs[inner - 1] / diag[inner - 1];
        for (std::size_t r = inner - 1; r-- > 0;) m[r + 1] = (rhs[r] - upper[r] * m[r + 2]) / diag[r];
    }

    WinRateCurve curve;
    curve.segments_.resize(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        auto& s = curve.segments_[i];
        s.c0 = knots[i].win_rate;
        s.c1 = slope[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0;
        s.c2 = 0.5 * m[i];
        s.c3 = (m[i + 1] - m[i]) / (6.0 * h[i]);
    }
    curve.knots_ = std::move(knots);
    return curve;
}

double WinRateCurve::operator()(double p) const {
    if (knots_.empty()) throw ArgumentError("win-rate curve is empty");
    if (p <= knots_.front().percentile) return knots_.front().win_rate;
    if (p >= knots_.back().percentile) return knots_.back().win_rate;
    auto it = std::upper_bound(knots_.begin(), knots_.end(), p,
                               [](double v, const WinRatePoint& k) { return v < k.percentile; });
    const auto i = static_cast<std::size_t>(std::distance(knots_.begin(), it)) - 1;
    const auto& s = segments_[i];
    const double t = p - knots_[i].percentile;
    return s.c0 + t * (s.c1 + t * (s.c2 + t * s.c3));
}

double intrinsic_reliability(const WinRateCurve& curve) {
    if (curve.knots().empty()) throw ArgumentError("intrinsic_reliability: curve has no knots");
    return curve.knots().front().win_rate;
}

std::vector<std::size_t> sample_reference(std::size_t corpus_size, std::size_t size, std::uint64_t seed) {
    if (size > corpus_size)
        throw ArgumentError("sample size " + std::to_string(size) + " exceeds corpus size " +
                            std::to_string(corpus_size));
    // Floyd's algorithm: exactly `size` draws, uniform over all subsets.
    Rng rng(seed);
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(size * 2);
    for (std::size_t j = corpus_size - size; j < corpus_size; ++j) {
        const auto t = static_cast<std::size_t>(rng.below(j + 1));
        if (!chosen.insert(t).second) chosen.insert(j);
    }
    std::vector<std::size_t> out(chosen.begin(), chosen.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::vector<std::size_t>> partition_intervals(std::span<const double> percentiles, int k) {
    if (k < 2) throw ArgumentError("partition_intervals: k must be >= 2");
    const std::size_t n = percentiles.size();
    const auto kk = static_cast<std::size_t>(k);
    if (n < kk)
        throw ArgumentError("partition_intervals: k = " + std::to_string(k) + " exceeds corpus size " +
                            std::to_string(n));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return percentiles[a] < percentiles[b]; });

    std::vector<std::vector<std::size_t>> out(kk);
    const std::size_t base = n / kk, extra = n % kk;
    std::size_t pos = 0;
    for (std::size_t j = 0; j < kk; ++j) {
        const std::size_t len = base + (j < extra ? 1 : 0);
        out[j].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                      order.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
    }
    return out;
}

double interval_midpoint(int j, int k) { return 100.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(k); }

double estimate_win_rate(const Corpus& corpus, std::span<const std::size_t> interval_sample,
                         std::span<const std::size_t> reference, Judge& judge, std::uint64_t seed) {
    if (interval_sample.empty()) throw ArgumentError("estimate_win_rate: empty interval sample");
    if (interval_sample.size() != reference.size())
        throw ArgumentError("estimate_win_rate: interval sample size " + std::to_string(interval_sample.size()) +
                            " != reference size " + std::to_string(reference.size()));

    std::vector<std::size_t> partner(reference.begin(), reference.end());
    Rng rng(seed);
    for (std::size_t i = partner.size(); i > 1; --i) std::swap(partner[i - 1], partner[rng.below(i)]);

    std::size_t wins = 0;
    for (std::size_t i = 0; i < interval_sample.size(); ++i) {
        const auto& x = corpus.document(interval_sample[i]);
        const auto& y = corpus.document(partner[i]);
        try {
            if (judge.compare(x, y, derive_seed(seed, i)).winner == Side::A) ++wins;
        } catch (const JudgeError& e) {
            throw JudgeError("comparing '" + x.doc_id + "' against reference '" + y.doc_id + "': " + e.what());
        }
    }
    return static_cast<double>(wins) / static_cast<double>(interval_sample.size());
}

RaterProfile fit_profile(const Corpus& corpus, std::string_view rater_id, std::span<const std::size_t> reference,
                         Judge& judge, const AlignmentParams& params) {
    const auto& column = corpus.column(rater_id);
    if (reference.size() != params.per_interval)
        throw ArgumentError("reference size must equal per-interval sample size");
    const auto intervals = partition_intervals(column.percentiles, params.intervals);
    if (intervals.back().size() < params.per_interval)
        throw ArgumentError("per-interval sample of " + std::to_string(params.per_interval) +
                            " exceeds the smallest interval (" + std::to_string(intervals.back().size()) +
                            " documents)");

    // Keyed on the percentile column rather than the id: an exact duplicate
    // of a rater gets the same profile, so it can be collapsed later.
    const std::string_view pct_bytes(reinterpret_cast<const char*>(column.percentiles.data()),
                                     column.percentiles.size() * sizeof(double));
    const std::uint64_t rater_seed = derive_seed(params.seed, fnv1a(pct_bytes));
    std::vector<WinRatePoint> knots(intervals.size());
    parallel_for(intervals.size(), params.threads, [&](std::size_t j) {
        const auto& interval = intervals[j];
        auto picks = sample_reference(interval.size(), params.per_interval, derive_seed(rater_seed, 2 * j));
        for (auto& p : picks) p = interval[p];
        const double w = estimate_win_rate(corpus, picks, reference, judge, derive_seed(rater_seed, 2 * j + 1));
        knots[j] = {interval_midpoint(static_cast<int>(j), params.intervals), w};
    });

    RaterProfile profile;
    profile.rater_id = std::string(rater_id);
    profile.polarity = column.polarity;
    profile.curve = WinRateCurve::fit(std::move(knots));
    profile.gamma = intrinsic_reliability(profile.curve);
    return profile;
}

std::vector<RaterProfile> fit_profiles(const Corpus& corpus, Judge& judge, const AlignmentParams& params) {
    const auto reference =
        sample_reference(corpus.size(), params.per_interval, derive_seed(params.seed, "align/reference"));
    std::vector<RaterProfile> out;
    for (const auto& rater : corpus.raters()) out.push_back(fit_profile(corpus, rater.id, reference, judge, params));
    return out;
}

RatingMatrix align_corpus(const Corpus& corpus, std::span<const RaterProfile> profiles) {
    RatingMatrix m;
    for (const auto& profile : profiles) {
        const auto& column = corpus.column(profile.rater_id);
        if (column.percentiles.size() != corpus.size())
            throw ArgumentError("rater '" + profile.rater_id + "' has no percentile column");
        std::vector<double> aligned(corpus.size());
        for (std::size_t i = 0; i < corpus.size(); ++i) aligned[i] = profile.curve(column.percentiles[i]);
        m.rater_ids.push_back(profile.rater_id);
        m.columns.push_back(std::move(aligned));
    }
    return m;
}

RatingMatrix normalized_raw(const Corpus& corpus, std::span<const std::string> rater_ids) {
    RatingMatrix m;
    for (const auto& id : rater_ids) {
        const auto& column = corpus.column(id);
        const auto [lo, hi] = std::minmax_element(column.values.begin(), column.values.end());
        std::vector<double> out(column.values.size(), 0.5);
        if (lo != column.values.end() && *hi > *lo) {
            const double range = *hi - *lo;
            for (std::size_t i = 0; i < out.size(); ++i) {
                const double t = (column.values[i] - *lo) / range;
                out[i] = column.polarity == Polarity::higher_is_better ? t : 1.0 - t;
            }
        }
        m.rater_ids.push_back(id);
        m.columns.push_back(std::move(out));
    }
    return m;
}

std::string profiles_to_json(std::span<const RaterProfile> profiles) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& p : profiles) {
        nlohmann::ordered_json j;
        j["rater_id"] = p.rater_id;
        j["polarity"] = to_string(p.polarity);
        auto knots = nlohmann::ordered_json::array();
        for (const auto& k : p.curve.knots()) knots.push_back({k.percentile, k.win_rate});
        j["knots"] = std::move(knots);
        j["gamma"] = p.gamma;
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

std::vector<RaterProfile> profiles_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(std::string("profiles: malformed JSON (") + e.what() + ")");
    }
    if (!j.is_array()) throw InputError("profiles: expected a JSON array");
    std::vector<RaterProfile> out;
    try {
        for (const auto& item : j) {
            RaterProfile p;
            p.rater_id = item.at("rater_id").get<std::string>();
            if (item.contains("polarity")) p.polarity = parse_polarity(item["polarity"].get<std::string>());
            std::vector<WinRatePoint> knots;
            for (const auto& k : item.at("knots")) knots.push_back({k.at(0).get<double>(), k.at(1).get<double>()});
            p.curve = WinRateCurve::fit(std::move(knots));
            p.gamma = item.at("gamma").get<double>();
            if (p.gamma != intrinsic_reliability(p.curve))
                throw InputError("profiles: gamma of '" + p.rater_id + "' differs from its first knot");
            out.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("profiles: ") + e.what());
    } catch (const ArgumentError& e) {
        throw InputError(std::string("profiles: ") + e.what());
    }
    return out;
}

} // namespace fire
