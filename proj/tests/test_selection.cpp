#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fire/error.hpp"
#include "fire/rng.hpp"
#include "fire/selection.hpp"
#include "support.hpp"

using namespace fire;

namespace {

std::vector<std::string> ids_for(std::size_t n) {
    std::vector<std::string> ids;
    char buf[24];
    for (std::size_t i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "d%06zu", i);
        ids.emplace_back(buf);
    }
    return ids;
}

/// Three correlated aligned columns in (0, 1).
RatingMatrix correlated_ratings(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    RatingMatrix m;
    m.rater_ids = {"a", "b", "c"};
    m.columns.assign(3, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double z0 = rng.normal(), z1 = rng.normal(), z2 = rng.normal(), z3 = rng.normal();
        const double raw[3] = {z0 + 0.6 * z1, z1 + 0.8 * z2, z2 + 0.3 * z0 + 0.5 * z3};
        for (int j = 0; j < 3; ++j) m.columns[j][i] = 1.0 / (1.0 + std::exp(-raw[j]));
    }
    return m;
}

/// Algorithm 1 written out directly on Eigen arrays: sym_gaussian kernel,
/// 50 renormalized power steps, gamma global, global sort after every
/// refinement, parts as contiguous rating-quantile blocks.
std::vector<std::string> reference_progressive(const RatingMatrix& a, const std::vector<double>& gamma,
                                               const std::vector<std::string>& ids, std::size_t k, double eta,
                                               std::size_t n, double beta, std::size_t n_max) {
    const auto cols = static_cast<Eigen::Index>(a.cols());
    const auto rows = static_cast<Eigen::Index>(a.rows());
    Eigen::MatrixXd A(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) A(i, j) = a.columns[j][i];
    const Eigen::Map<const Eigen::VectorXd> g(gamma.data(), cols);

    auto overall_o = [&](const std::vector<std::size_t>& part) {
        Eigen::MatrixXd X(static_cast<Eigen::Index>(part.size()), cols);
        for (std::size_t r = 0; r < part.size(); ++r) X.row(static_cast<Eigen::Index>(r)) = A.row(static_cast<Eigen::Index>(part[r]));
        const Eigen::MatrixXd C = X.rowwise() - X.colwise().mean();
        const Eigen::VectorXd sd = C.colwise().norm();
        Eigen::MatrixXd R = (C.transpose() * C).array() / (sd * sd.transpose()).array();
        Eigen::MatrixXd M(cols, cols);
        for (Eigen::Index i = 0; i < cols; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) {
                const double r = std::min(1.0, std::abs(R(i, j)));
                M(i, j) = i == j ? 0.0 : (1.5 - r) - std::pow(2.0, -r * r);
            }
        Eigen::VectorXd o = M * Eigen::VectorXd::Ones(cols);
        for (int s = 0; s < 50; ++s) o = M * o.normalized();
        return Eigen::VectorXd(o.normalized());
    };
    auto keep = [&](std::vector<std::size_t>& w, const std::vector<double>& ir, std::size_t size) {
        std::sort(w.begin(), w.end(), [&](auto x, auto y) { return ir[x] != ir[y] ? ir[x] > ir[y] : ids[x] < ids[y]; });
        w.resize(std::max(k, static_cast<std::size_t>(std::floor(static_cast<double>(size) * eta / 100.0))));
    };

    std::vector<std::size_t> w(a.rows());
    std::iota(w.begin(), w.end(), std::size_t{0});
    const Eigen::VectorXd all = A * overall_o(w).cwiseProduct(g);
    std::vector<double> ir(all.data(), all.data() + rows);
    keep(w, ir, w.size());
    while (w.size() > k) {
        if (n > 1) {
            const std::size_t base = w.size() / n, extra = w.size() % n;
            std::size_t pos = 0;
            for (std::size_t p = 0; p < n; ++p) {
                const std::size_t len = base + (p < extra ? 1 : 0);
                std::vector<std::size_t> part(w.begin() + static_cast<std::ptrdiff_t>(pos),
                                              w.begin() + static_cast<std::ptrdiff_t>(pos + len));
                const Eigen::VectorXd weight = overall_o(part).cwiseProduct(g);
                for (auto row : part) ir[row] = A.row(static_cast<Eigen::Index>(row)).dot(weight);
                pos += len;
            }
        }
        keep(w, ir, w.size());
        n = std::min(static_cast<std::size_t>(std::floor(static_cast<double>(n) * beta)), n_max);
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(ids[w[i]]);
    return out;
}

} // namespace

TEST_CASE("top-k examples") {
    const auto ids = ids_for(3);
    const auto m = select_top_k(std::vector<double>{3, 1, 2}, ids, 2);
    CHECK(m.doc_ids() == std::vector<std::string>{"d000000", "d000002"});
    CHECK(m.entries[1].rating == 2);

    const std::vector<std::string> shuffled{"zz", "bb", "aa", "cc"};
    const auto t = select_top_k(std::vector<double>{1, 1, 1, 1}, shuffled, 2);
    CHECK(t.doc_ids() == std::vector<std::string>{"aa", "bb"});

    CHECK_THROWS_AS(select_top_k(std::vector<double>{1, 2}, ids_for(2), 3), ArgumentError);
    CHECK_THROWS_AS(select_top_k(std::vector<double>{1, 2}, ids_for(2), 0), ArgumentError);
}

TEST_CASE("top-k on 100,000 ratings equals a full-sort oracle") {
    const std::size_t n = 100000;
    Rng rng(3);
    std::vector<double> r(n);
    // Rounded to create ties the doc_id rule has to settle.
    for (auto& x : r) x = std::round(rng.uniform() * 5000.0);
    const auto ids = ids_for(n);
    std::vector<std::pair<double, std::string>> all;
    for (std::size_t i = 0; i < n; ++i) all.emplace_back(-r[i], ids[i]);
    std::sort(all.begin(), all.end());
    const auto m = select_top_k(r, ids, 1000);
    REQUIRE(m.size() == 1000);
    for (std::size_t i = 0; i < 1000; ++i) CHECK(m.entries[i].doc_id == all[i].second);
}

TEST_CASE("temperature sampling: two documents, tau = 1") {
    const std::vector<double> r{1, 2};
    const auto ids = ids_for(2);
    int second = 0;
    const int trials = 100000;
    for (int t = 0; t < trials; ++t) second += sample_with_temperature(r, ids, 1, 1.0, derive_seed(1, t)).entries[0].doc_id == ids[1];
    const double e = std::exp(1.0);
    CHECK(std::abs(second / static_cast<double>(trials) - e / (1 + e)) < 0.005);
}

TEST_CASE("temperature sampling limits") {
    const std::size_t n = 200, k = 20;
    const auto ratings = testsupport::normal_vector(n, 44);
    const auto ids = ids_for(n);
    const auto top = select_top_k(ratings, ids, k).doc_ids();
    const std::set<std::string> top_set(top.begin(), top.end());
    int hits = 0;
    for (int t = 0; t < 2000; ++t) {
        const auto got = sample_with_temperature(ratings, ids, k, 1e-6, derive_seed(2, t)).doc_ids();
        hits += std::set<std::string>(got.begin(), got.end()) == top_set && got == top;
    }
    CHECK(hits / 2000.0 >= 0.999);

    // Extreme ratings must not overflow.
    const std::vector<double> huge{1e300, -1e300, 5e299};
    CHECK(sample_with_temperature(huge, ids_for(3), 3, 1e-3, 1).doc_ids() ==
          std::vector<std::string>{"d000000", "d000002", "d000001"});

    const std::size_t m = 10;
    const auto flat = testsupport::normal_vector(m, 45);
    std::vector<int> count(m, 0);
    const int trials = 100000;
    for (int t = 0; t < trials; ++t) {
        const auto id = sample_with_temperature(flat, ids_for(m), 1, 1e6, derive_seed(3, t)).entries[0].doc_id;
        ++count[static_cast<std::size_t>(std::stoi(id.substr(1)))];
    }
    for (int c : count) CHECK(std::abs(c / static_cast<double>(trials) - 0.1) < 0.01);

    CHECK_THROWS_AS(sample_with_temperature(flat, ids_for(m), 1, 0.0, 0), ArgumentError);
}

TEST_CASE("temperature sampling draws without replacement with renormalized weights") {
    // Three docs with weights 1 : 2 : 4 (ratings ln w, tau = 1). The chance
    // of drawing doc 2 then doc 1 is 4/7 * 2/3.
    const std::vector<double> r{0, std::log(2.0), std::log(4.0)};
    const auto ids = ids_for(3);
    int hits = 0;
    const int trials = 60000;
    for (int t = 0; t < trials; ++t) {
        const auto m = sample_with_temperature(r, ids, 3, 1.0, derive_seed(9, t));
        const auto drawn = m.doc_ids();
        CHECK(std::set<std::string>(drawn.begin(), drawn.end()).size() == 3);
        hits += m.entries[0].doc_id == ids[2] && m.entries[1].doc_id == ids[1];
    }
    const double p = 4.0 / 7.0 * 2.0 / 3.0;
    CHECK(std::abs(hits / static_cast<double>(trials) - p) < 4 * std::sqrt(p * (1 - p) / trials));
}

TEST_CASE("progressive with a single part equals top-k on the global ratings") {
    const std::size_t n = 3000;
    const auto a = correlated_ratings(n, 1);
    const std::vector<double> gamma{0.8, 0.7, 0.9};
    const auto ids = ids_for(n);
    IntegrationParams params;
    SelectionPlan plan;
    plan.mode = SelectionMode::progressive;
    plan.k = 150;
    plan.n_init = plan.n_max = 1;
    const auto prog = progressive_select(a, a, gamma, ids, params, plan);
    const auto flat = select_top_k(integrate(a, build_model(a, gamma, params)), ids, 150);
    CHECK(prog.entries == flat.entries);
}

TEST_CASE("progressive reduction sizes") {
    const std::size_t n = 1000;
    const auto a = correlated_ratings(n, 2);
    const std::vector<double> gamma{0.8, 0.7, 0.9};
    SelectionPlan plan;
    plan.mode = SelectionMode::progressive;
    plan.k = 50;
    ProgressiveTrace trace;
    const auto m = progressive_select(a, a, gamma, ids_for(n), IntegrationParams{}, plan, &trace);
    CHECK(trace.working_sizes.front() == 600);
    // 600 -> 360 -> 216 -> 129 -> 77 -> 50
    CHECK(trace.working_sizes == std::vector<std::size_t>{600, 360, 216, 129, 77, 50});
    CHECK(trace.passes() == static_cast<std::size_t>(std::ceil(std::log(50.0 / 1000.0) / std::log(0.6))) + 1);
    CHECK(m.size() == 50);
    for (std::size_t i = 1; i < trace.working_sizes.size(); ++i)
        CHECK(trace.working_sizes[i] < trace.working_sizes[i - 1]);
}

TEST_CASE("progressive iteration bound holds across sizes") {
    for (std::size_t n : {500, 2000, 7000})
        for (std::size_t k : {1, 37, 400}) {
            if (k >= n) continue;
            for (double eta : {30.0, 60.0, 90.0}) {
                const auto a = correlated_ratings(n, n + k);
                SelectionPlan plan;
                plan.mode = SelectionMode::progressive;
                plan.k = k;
                plan.eta = eta;
                plan.n_init = 1;
                plan.n_max = 1;
                ProgressiveTrace trace;
                progressive_select(a, a, std::vector<double>{1, 1, 1}, ids_for(n), IntegrationParams{}, plan, &trace);
                const double bound = std::ceil(std::log(static_cast<double>(k) / n) / std::log(eta / 100.0)) + 1;
                CHECK(static_cast<double>(trace.passes()) <= bound);
            }
        }
}

TEST_CASE("progressive matches a straight-line reference on 5,000 documents") {
    const std::size_t n = 5000;
    const auto a = correlated_ratings(n, 7);
    const std::vector<double> gamma{0.77, 0.81, 0.74};
    const auto ids = ids_for(n);
    SelectionPlan plan;
    plan.mode = SelectionMode::progressive;
    plan.k = 100;
    plan.eta = 60;
    plan.n_init = 2;
    plan.beta = 2;
    plan.n_max = 4;
    IntegrationParams params;
    params.collapse = false;
    ProgressiveTrace trace;
    const auto got = progressive_select(a, a, gamma, ids, params, plan, &trace, 3);
    CHECK(got.doc_ids() == reference_progressive(a, gamma, ids, 100, 60, 2, 2, 4));
    CHECK(trace.degenerate_parts == 0);
    CHECK(trace.rounds > 2);
}

TEST_CASE("degenerate parts keep their ratings") {
    // Column c is constant, so no part model can be built.
    const std::size_t n = 400;
    auto a = correlated_ratings(n, 5);
    std::fill(a.columns[2].begin(), a.columns[2].end(), 0.5);
    RatingMatrix two = a.select_columns(std::vector<std::size_t>{0, 1});
    SelectionPlan plan;
    plan.mode = SelectionMode::progressive;
    plan.k = 40;
    ProgressiveTrace trace;
    const auto ids = ids_for(n);
    // The global model also fails on a constant column.
    CHECK_THROWS_AS(progressive_select(a, a, std::vector<double>{1, 1, 1}, ids, IntegrationParams{}, plan),
                    DegenerateError);
    // Parts of identical rows are degenerate while the global model is fine.
    RatingMatrix blocky = two;
    for (auto& col : blocky.columns)
        for (std::size_t i = 0; i < n; ++i) col[i] = i < n / 2 ? 0.9 + 0.0001 * (i % 2) : col[i] * 0.5;
    for (std::size_t i = 0; i < n / 2; ++i) blocky.columns[1][i] = 0.9;
    const auto m = progressive_select(blocky, blocky, std::vector<double>{1, 1}, ids, IntegrationParams{}, plan, &trace);
    CHECK(m.size() == 40);
    CHECK(trace.degenerate_parts > 0);
}

TEST_CASE("plan validation") {
    SelectionPlan p;
    p.k = 0;
    CHECK_THROWS_AS(p.validate(), ArgumentError);
    p.k = 5;
    p.mode = SelectionMode::progressive;
    p.eta = 100;
    CHECK_THROWS_AS(p.validate(), ArgumentError);
    p.eta = 60;
    p.beta = 0.5;
    CHECK_THROWS_AS(p.validate(), ArgumentError);
    p.beta = 20;
    p.n_max = 1;
    CHECK_THROWS_AS(p.validate(), ArgumentError);
    p.n_max = 64;
    CHECK_NOTHROW(p.validate());
    p.mode = SelectionMode::sampled;
    p.tau = 0;
    CHECK_THROWS_AS(p.validate(), ArgumentError);
    CHECK(parse_mode("top-k") == SelectionMode::top_k);
    CHECK(parse_mode(to_string(SelectionMode::progressive)) == SelectionMode::progressive);
}

TEST_CASE("baseline examples") {
    RatingMatrix row{{"a", "b"}, {{0.2, 0.1}, {0.4, 0.0}}};
    const auto ids = ids_for(2);
    CHECK(baseline_select(row, ids, BaselineMethod::average, 1, 0).entries[0].rating == doctest::Approx(0.3));
    CHECK(baseline_select(row, ids, BaselineMethod::max_criteria, 1, 0).entries[0].rating == 0.4);

    // Identical orderings: the union is exactly the shared top-k.
    const auto v = testsupport::normal_vector(500, 3);
    std::vector<double> w(v.size());
    std::transform(v.begin(), v.end(), w.begin(), [](double x) { return 2 * x + 1; });
    RatingMatrix same{{"a", "b"}, {v, w}};
    const auto ids500 = ids_for(500);
    const auto mix = baseline_select(same, ids500, BaselineMethod::mix_criteria, 25, 4).doc_ids();
    const auto top = select_top_k(v, ids500, 25).doc_ids();
    CHECK(std::set<std::string>(mix.begin(), mix.end()) == std::set<std::string>(top.begin(), top.end()));
}

TEST_CASE("mix criteria matches a set-union oracle on 10,000 documents") {
    const std::size_t n = 10000, k = 500;
    RatingMatrix m;
    for (int j = 0; j < 4; ++j) {
        m.rater_ids.push_back("r" + std::to_string(j));
        m.columns.push_back(testsupport::normal_vector(n, 60 + static_cast<std::uint64_t>(j)));
    }
    const auto ids = ids_for(n);
    std::set<std::size_t> uni;
    for (const auto& col : m.columns) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return col[a] > col[b]; });
        uni.insert(order.begin(), order.begin() + k);
    }
    const auto got = baseline_select(m, ids, BaselineMethod::mix_criteria, k, 8);
    CHECK(got.size() == k);
    std::set<std::string> got_ids;
    for (const auto& e : got.entries) {
        got_ids.insert(e.doc_id);
        const auto row = static_cast<std::size_t>(std::stoul(e.doc_id.substr(1)));
        CHECK(uni.count(row) == 1);
        double mx = -1e300;
        for (const auto& col : m.columns) mx = std::max(mx, col[row]);
        CHECK(e.rating == mx);
    }
    CHECK(got_ids.size() == k);

    CHECK_THROWS_AS(baseline_select(m, ids, BaselineMethod::mix_criteria, n + 1, 0), ArgumentError);
}

TEST_CASE("manifest validity, round trip and determinism") {
    const std::size_t n = 2000;
    const auto a = correlated_ratings(n, 9);
    const auto ids = ids_for(n);
    SelectionPlan plan;
    plan.mode = SelectionMode::progressive;
    plan.k = 123;
    const auto m1 = progressive_select(a, a, std::vector<double>{0.6, 0.7, 0.8}, ids, IntegrationParams{}, plan);
    const auto m2 = progressive_select(a, a, std::vector<double>{0.6, 0.7, 0.8}, ids, IntegrationParams{}, plan, nullptr, 4);
    CHECK(m1.entries == m2.entries);
    CHECK(m1.size() == 123);
    const auto got = m1.doc_ids();
    CHECK(std::set<std::string>(got.begin(), got.end()).size() == 123);
    const std::set<std::string> all(ids.begin(), ids.end());
    for (const auto& id : got) CHECK(all.count(id) == 1);

    std::ostringstream out;
    write_manifest(m1, out);
    std::istringstream in(out.str());
    const auto back = read_manifest(in);
    CHECK(back.entries == m1.entries);
    std::ostringstream again;
    write_manifest(back, again);
    CHECK(again.str() == out.str());
}
