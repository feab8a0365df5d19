#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "fire/alignment.hpp"
#include "fire/error.hpp"
#include "fire/rng.hpp"
#include "support.hpp"

using namespace fire;

namespace {

/// Natural cubic spline by brute force: 4 unknowns per segment, one dense
/// linear system holding interpolation, C1 and C2 continuity and the two
/// natural end conditions.
struct DenseSpline {
    std::vector<double> x;
    Eigen::VectorXd coef; // per segment: a + b t + c t^2 + d t^3, t = p - x_i

    DenseSpline(const std::vector<double>& xs, const std::vector<double>& ys) : x(xs) {
        const int s = static_cast<int>(xs.size()) - 1, n = 4 * s;
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        int row = 0;
        for (int i = 0; i < s; ++i) {
            const double h = xs[i + 1] - xs[i];
            A(row, 4 * i) = 1;
            rhs(row++) = ys[i];
            A(row, 4 * i) = 1, A(row, 4 * i + 1) = h, A(row, 4 * i + 2) = h * h, A(row, 4 * i + 3) = h * h * h;
            rhs(row++) = ys[i + 1];
            if (i + 1 < s) {
                A(row, 4 * i + 1) = 1, A(row, 4 * i + 2) = 2 * h, A(row, 4 * i + 3) = 3 * h * h;
                A(row++, 4 * (i + 1) + 1) = -1;
                A(row, 4 * i + 2) = 2, A(row, 4 * i + 3) = 6 * h;
                A(row++, 4 * (i + 1) + 2) = -2;
            }
        }
        A(row++, 2) = 2;
        const double hl = xs[s] - xs[s - 1];
        A(row, 4 * (s - 1) + 2) = 2, A(row++, 4 * (s - 1) + 3) = 6 * hl;
        REQUIRE(row == n);
        coef = A.fullPivLu().solve(rhs);
    }

    double operator()(double p) const {
        std::size_t i = 0;
        while (i + 2 < x.size() && p >= x[i + 1]) ++i;
        const double t = p - x[i];
        const auto k = static_cast<Eigen::Index>(4 * i);
        return coef(k) + t * (coef(k + 1) + t * (coef(k + 2) + t * coef(k + 3)));
    }
};

std::vector<WinRatePoint> points(const std::vector<double>& p, const std::vector<double>& w) {
    std::vector<WinRatePoint> out;
    for (std::size_t i = 0; i < p.size(); ++i) out.push_back({p[i], w[i]});
    return out;
}

/// Judge that always prefers its first argument (the interval side).
class FirstWins final : public Judge {
public:
    std::string id() const override { return "first"; }
    ComparisonOutcome compare(const Document&, const Document&, std::uint64_t) override { return {Side::A, id(), 1}; }
};

} // namespace

TEST_CASE("curve through the published GPT-4o row hits the end knots exactly") {
    const auto t = testsupport::load_winrate_table();
    const auto curve = WinRateCurve::fit(points(t.percentile, t.gpt4o));
    CHECK(curve(10) == 0.773);
    CHECK(curve(100) == 0.273);
    for (std::size_t i = 0; i < t.percentile.size(); ++i) CHECK(curve(t.percentile[i]) == t.gpt4o[i]);
    CHECK(intrinsic_reliability(curve) == 0.773);
    // Clamped outside the knots.
    CHECK(curve(0) == 0.773);
    CHECK(curve(-5) == 0.773);
    CHECK(curve(250) == 0.273);
}

TEST_CASE("two knots give a straight line") {
    const auto curve = WinRateCurve::fit({{20, 0.8}, {60, 0.4}});
    CHECK(curve(40) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(curve(30) == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("spline matches a dense-solve oracle at 500 interior points") {
    Rng rng(99);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t k = 3 + trial * 3;
        std::vector<double> xs, ys;
        double x = 0;
        for (std::size_t i = 0; i < k; ++i) {
            x += 1 + 20 * rng.uniform();
            xs.push_back(x);
            ys.push_back(rng.uniform());
        }
        const auto curve = WinRateCurve::fit(points(xs, ys));
        const DenseSpline oracle(xs, ys);
        for (int i = 1; i <= 500; ++i) {
            const double p = xs.front() + (xs.back() - xs.front()) * i / 501.0;
            CHECK(curve(p) == doctest::Approx(oracle(p)).epsilon(1e-10).scale(1.0));
        }
    }
}

TEST_CASE("curve fit rejects bad knots") {
    CHECK_THROWS_AS(WinRateCurve::fit({{10, 0.5}}), ArgumentError);
    CHECK_THROWS_AS(WinRateCurve::fit({{10, 0.5}, {10, 0.6}}), ArgumentError);
    CHECK_THROWS_AS(WinRateCurve::fit({{10, 0.5}, {5, 0.6}}), ArgumentError);
    CHECK_THROWS_AS(WinRateCurve::fit({{10, 0.5}, {20, 1.2}}), ArgumentError);
}

TEST_CASE("reference sampling") {
    const auto all = sample_reference(50, 50, 3);
    std::vector<std::size_t> expect(50);
    std::iota(expect.begin(), expect.end(), std::size_t{0});
    CHECK(all == expect);

    const auto a = sample_reference(100000, 1000, 1), b = sample_reference(100000, 1000, 2);
    CHECK(a.size() == 1000);
    CHECK(b.size() == 1000);
    CHECK(a != b);
    CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 1000);
    CHECK(sample_reference(100000, 1000, 1) == a);
    CHECK_THROWS_AS(sample_reference(10, 11, 0), ArgumentError);
}

TEST_CASE("reference membership frequencies match the hypergeometric expectation") {
    const std::size_t N = 40, size = 10, runs = 10000;
    std::vector<int> hits(N, 0);
    for (std::size_t r = 0; r < runs; ++r)
        for (auto i : sample_reference(N, size, derive_seed(77, r))) ++hits[i];
    const double p = static_cast<double>(size) / N;
    const double sd = std::sqrt(runs * p * (1 - p));
    int within3 = 0;
    double chi2 = 0;
    for (int h : hits) {
        const double z = (h - runs * p) / sd;
        within3 += std::abs(z) <= 3.0;
        chi2 += z * z;
    }
    CHECK(within3 == static_cast<int>(N));
    // Sum of N squared z-scores; mean N, sd about sqrt(2N).
    CHECK(chi2 < N + 5 * std::sqrt(2.0 * N));
}

TEST_CASE("interval partition examples") {
    std::vector<double> pct(10);
    for (int i = 0; i < 10; ++i) pct[i] = 100.0 * (i + 0.5) / 10;
    auto two = partition_intervals(pct, 2);
    CHECK(two[0].size() == 5);
    CHECK(two[1].size() == 5);
    auto three = partition_intervals(pct, 3);
    CHECK(three[0].size() == 4);
    CHECK(three[1].size() == 3);
    CHECK(three[2].size() == 3);
    CHECK(three[0] == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK_THROWS_AS(partition_intervals(pct, 11), ArgumentError);
    CHECK_THROWS_AS(partition_intervals(pct, 1), ArgumentError);
}

TEST_CASE("interval partition matches a sort-based oracle") {
    const auto v = testsupport::normal_vector(1000, 8);
    const auto pct = percentile_rank(v, Polarity::higher_is_better);
    const auto parts = partition_intervals(pct, 10);

    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] > v[b]; });
    std::vector<int> seen(v.size(), 0);
    for (std::size_t j = 0; j < 10; ++j) {
        REQUIRE(parts[j].size() == 100);
        std::set<std::size_t> got(parts[j].begin(), parts[j].end());
        std::set<std::size_t> want(order.begin() + 100 * j, order.begin() + 100 * (j + 1));
        CHECK(got == want);
        for (auto i : parts[j]) ++seen[i];
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
}

TEST_CASE("win rate estimation") {
    std::vector<double> latent(20000);
    for (std::size_t i = 0; i < latent.size(); ++i) latent[i] = static_cast<double>(i % 97) / 97.0;
    const auto corpus = testsupport::make_corpus({"r"}, {latent}, latent);

    std::vector<std::size_t> sample(500), reference(500);
    std::iota(sample.begin(), sample.end(), std::size_t{0});
    std::iota(reference.begin(), reference.end(), std::size_t{1000});
    FirstWins always;
    CHECK(estimate_win_rate(corpus, sample, reference, always, 1) == 1.0);

    const auto ref = sample_reference(corpus.size(), 10000, 5);
    SyntheticJudge symmetric(0.2);
    CHECK(estimate_win_rate(corpus, ref, ref, symmetric, 9) == doctest::Approx(0.5).epsilon(0.04));

    std::vector<std::size_t> short_ref(reference.begin(), reference.begin() + 10);
    CHECK_THROWS_AS(estimate_win_rate(corpus, sample, short_ref, always, 0), ArgumentError);
}

TEST_CASE("judge failures carry pair context") {
    const auto corpus = testsupport::make_corpus({"r"}, {{1, 2, 3, 4}});
    SyntheticJudge needs_latent(0.1);
    std::vector<std::size_t> s{0, 1}, r{2, 3};
    CHECK_THROWS_WITH_AS(estimate_win_rate(corpus, s, r, needs_latent, 0), doctest::Contains("comparing 'd0000"),
                         JudgeError);
}

TEST_CASE("top interval of the published fixture has win rate 0.773") {
    const auto t = testsupport::load_winrate_table();
    auto fx = testsupport::fixture_corpus(t.rater, t.gpt4o, 1000);
    RecordedVerdictJudge judge(fx.verdicts);
    const auto intervals = partition_intervals(fx.corpus.column(t.rater).percentiles, 10);
    const auto reference = sample_reference(fx.corpus.size(), 1000, 3);
    CHECK(estimate_win_rate(fx.corpus, intervals[0], reference, judge, 4) == 0.773);
}

TEST_CASE("aligned ratings") {
    // Ten documents sit exactly on the ten interval midpoints.
    std::vector<double> scores(10);
    std::iota(scores.begin(), scores.end(), 1.0);
    const auto corpus = testsupport::make_corpus({"r"}, {scores});
    const auto t = testsupport::load_winrate_table();
    std::vector<double> mids;
    for (int j = 0; j < 10; ++j) mids.push_back(interval_midpoint(j, 10));
    RaterProfile p{"r", Polarity::higher_is_better, WinRateCurve::fit(points(mids, t.gpt4o)), 0.773};
    const auto m = align_corpus(corpus, std::vector<RaterProfile>{p});
    for (std::size_t i = 0; i < 10; ++i) CHECK(m.at(i, 0) == t.gpt4o[9 - i]); // highest score = best

    RaterProfile flat{"r", Polarity::higher_is_better, WinRateCurve::fit({{5, 0.5}, {95, 0.5}}), 0.5};
    const auto f = align_corpus(corpus, std::vector<RaterProfile>{flat});
    for (std::size_t i = 0; i < 10; ++i) CHECK(f.at(i, 0) == 0.5);
    CHECK(intrinsic_reliability(flat.curve) == 0.5);
}

TEST_CASE("a decreasing curve keeps raw-score order and stays within the knot range") {
    const auto raw = testsupport::normal_vector(1000, 12);
    const auto corpus = testsupport::make_corpus({"r"}, {raw});
    RaterProfile p{"r", Polarity::higher_is_better,
                   WinRateCurve::fit({{5, 0.9}, {25, 0.7}, {50, 0.5}, {75, 0.3}, {95, 0.1}}), 0.9};
    const auto m = align_corpus(corpus, std::vector<RaterProfile>{p});
    const auto& pct = corpus.column("r").percentiles;
    for (std::size_t i = 0; i < 1000; ++i) {
        CHECK(m.at(i, 0) >= 0.1);
        CHECK(m.at(i, 0) <= 0.9);
        for (std::size_t j = i + 1; j < std::min<std::size_t>(1000, i + 25); ++j) {
            if (raw[i] > raw[j]) CHECK(m.at(i, 0) >= m.at(j, 0));
            if (raw[i] < raw[j]) CHECK(m.at(i, 0) <= m.at(j, 0));
            // Strict between the outer knots; flat (clamped) outside them.
            const double pi = pct[i], pj = pct[j];
            if (pi > 5 && pi < 95 && pj > 5 && pj < 95 && raw[i] != raw[j])
                CHECK((m.at(i, 0) > m.at(j, 0)) == (raw[i] > raw[j]));
        }
    }
}

TEST_CASE("a perfect rater's reliability approaches 1 as intervals get finer") {
    const std::size_t n = 40000;
    const auto latent = testsupport::normal_vector(n, 21);
    const auto corpus = testsupport::make_corpus({"perfect"}, {latent}, latent);
    SyntheticJudge judge(0.0);
    double previous = 0.0;
    for (int k : {4, 10, 40}) {
        AlignmentParams params;
        params.intervals = k;
        params.per_interval = n / static_cast<std::size_t>(k);
        params.seed = 2;
        const auto profile = fit_profiles(corpus, judge, params).front();
        // Top interval vs a uniform opponent: loses only to better docs in the
        // same interval, so the expected win rate is 1 - 1 / (2k).
        const double expect = 1.0 - 1.0 / (2.0 * k);
        const double sd = std::sqrt(expect * (1 - expect) / static_cast<double>(params.per_interval));
        CHECK(std::abs(profile.gamma - expect) < 4 * sd + 1e-9);
        CHECK(profile.gamma > previous);
        previous = profile.gamma;
    }
    CHECK(previous > 0.98);
}

TEST_CASE("profiles are invariant to monotone score distortion and thread count") {
    const std::size_t n = 5000;
    const auto latent = testsupport::normal_vector(n, 31);
    auto noisy = testsupport::normal_vector(n, 32);
    for (std::size_t i = 0; i < n; ++i) noisy[i] = latent[i] + 0.5 * noisy[i];
    std::vector<double> warped(n);
    std::transform(noisy.begin(), noisy.end(), warped.begin(), [](double x) { return std::exp(2 * x) - 7; });

    SyntheticJudge judge(0.3);
    AlignmentParams params;
    params.per_interval = 200;
    params.seed = 17;
    const auto a = fit_profiles(testsupport::make_corpus({"r"}, {noisy}, latent), judge, params);
    params.threads = 4;
    const auto b = fit_profiles(testsupport::make_corpus({"r"}, {warped}, latent), judge, params);
    CHECK(profiles_to_json(a) == profiles_to_json(b));
}

TEST_CASE("a rater's profile does not depend on the other raters") {
    const std::size_t n = 3000;
    const auto latent = testsupport::normal_vector(n, 41);
    const auto other = testsupport::normal_vector(n, 42);
    SyntheticJudge judge(0.1);
    AlignmentParams params;
    params.per_interval = 100;
    params.seed = 5;
    const auto one = fit_profiles(testsupport::make_corpus({"a"}, {latent}, latent), judge, params);
    const auto two = fit_profiles(testsupport::make_corpus({"a", "b"}, {latent, other}, latent), judge, params);
    CHECK(one[0].curve.knots() == two[0].curve.knots());
}

TEST_CASE("profile JSON round trip and validation") {
    RaterProfile p{"x", Polarity::lower_is_better, WinRateCurve::fit({{5, 0.7}, {50, 0.5}, {95, 0.2}}), 0.7};
    const auto text = profiles_to_json(std::vector<RaterProfile>{p});
    const auto back = profiles_from_json(text);
    REQUIRE(back.size() == 1);
    CHECK(back[0].rater_id == "x");
    CHECK(back[0].polarity == Polarity::lower_is_better);
    CHECK(back[0].gamma == 0.7);
    CHECK(back[0].curve.knots() == p.curve.knots());
    CHECK(profiles_to_json(back) == text);

    CHECK_THROWS_AS(profiles_from_json("not json"), InputError);
    CHECK_THROWS_AS(profiles_from_json(R"([{"rater_id":"x","knots":[[5,0.7],[95,0.2]],"gamma":0.5}])"), InputError);

    const auto shipped = profiles_from_json(testsupport::read_file(testsupport::data_dir() / "fixtures" / "gpt4o_profile.json"));
    CHECK(shipped.at(0).gamma == 0.773);
}

TEST_CASE("fit_profile needs intervals at least as large as the sample") {
    const auto latent = testsupport::normal_vector(100, 1);
    const auto corpus = testsupport::make_corpus({"r"}, {latent}, latent);
    SyntheticJudge judge(0.1);
    AlignmentParams params;
    params.per_interval = 20;
    CHECK_THROWS_AS(fit_profiles(corpus, judge, params), ArgumentError);
}
