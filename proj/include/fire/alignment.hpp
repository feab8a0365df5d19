#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fire/corpus.hpp"
#include "fire/judge.hpp"
#include "fire/matrix.hpp"

namespace fire {

/// One knot of a win-rate curve: the interval midpoint and its win rate.
struct WinRatePoint {
    double percentile = 0.0;
    double win_rate = 0.0;

    bool operator==(const WinRatePoint&) const = default;
};

/// Cubic piece on [p_k, p_{k+1}): c0 + c1 t + c2 t^2 + c3 t^3 with t = p - p_k.
struct CubicSegment {
    double c0 = 0.0, c1 = 0.0, c2 = 0.0, c3 = 0.0;
};

/// Natural cubic spline through win-rate knots, clamped to the end knot
/// values outside [first knot, last knot].
class WinRateCurve {
public:
    WinRateCurve() = default;

    /// Needs >= 2 knots with strictly increasing percentiles and win rates
    /// in [0, 1].
    static WinRateCurve fit(std::vector<WinRatePoint> knots);

    double operator()(double percentile) const;

    const std::vector<WinRatePoint>& knots() const { return knots_; }
    const std::vector<CubicSegment>& segments() const { return segments_; }

private:
    std::vector<WinRatePoint> knots_;
    std::vector<CubicSegment> segments_;
};

struct RaterProfile {
    std::string rater_id;
    Polarity polarity = Polarity::higher_is_better;
    WinRateCurve curve;
    double gamma = 0.0; ///< intrinsic reliability, the best interval's win rate
};

/// Win rate of the first (best) interval.
double intrinsic_reliability(const WinRateCurve& curve);

/// Uniform sample of `size` distinct row indices out of [0, corpus_size),
/// returned in ascending order.
std::vector<std::size_t> sample_reference(std::size_t corpus_size, std::size_t size, std::uint64_t seed);

/// Splits rows into k contiguous percentile intervals, best first. Interval
/// sizes differ by at most one; the first (N mod k) intervals get the extra
/// row. Equal percentiles are ordered by row index.
std::vector<std::vector<std::size_t>> partition_intervals(std::span<const double> percentiles, int k);

/// Knot abscissa of interval j out of k: 100 * (j + 0.5) / k.
double interval_midpoint(int j, int k);

/// Pairs interval_sample[i] with a distinct reference row (seeded shuffle)
/// and returns the fraction of pairs the interval side wins.
double estimate_win_rate(const Corpus& corpus, std::span<const std::size_t> interval_sample,
                         std::span<const std::size_t> reference, Judge& judge, std::uint64_t seed);

struct AlignmentParams {
    int intervals = 10;
    std::size_t per_interval = 1000;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

/// Runs the four alignment steps for one rater against a shared reference
/// sample. Per-rater randomness is derived from params.seed and the rater's
/// percentile column, so a profile does not depend on which other raters are
/// present, and two raters with identical rankings get identical profiles.
RaterProfile fit_profile(const Corpus& corpus, std::string_view rater_id, std::span<const std::size_t> reference,
                         Judge& judge, const AlignmentParams& params);

/// Draws the reference sample and fits every registered rater.
std::vector<RaterProfile> fit_profiles(const Corpus& corpus, Judge& judge, const AlignmentParams& params);

/// A_j(x) = curve_j(percentile_j(x)) for every document and profile.
RatingMatrix align_corpus(const Corpus& corpus, std::span<const RaterProfile> profiles);

/// Min-max normalized raw scores with polarity applied (1 = best). A constant
/// column maps to 0.5. Used where alignment is deliberately skipped.
RatingMatrix normalized_raw(const Corpus& corpus, std::span<const std::string> rater_ids);

std::string profiles_to_json(std::span<const RaterProfile> profiles);
std::vector<RaterProfile> profiles_from_json(std::string_view text);

} // namespace fire
