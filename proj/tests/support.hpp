#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "fire/corpus.hpp"
#include "fire/integration.hpp"
#include "fire/judge.hpp"
#include "fire/rng.hpp"
#include "json.hpp"

namespace testsupport {

inline std::filesystem::path data_dir() { return FIRE_DATA_DIR; }

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("fire-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Corpus with doc ids "d000", "d001", ... and one column per rater.
inline fire::Corpus make_corpus(const std::vector<std::string>& raters, const std::vector<std::vector<double>>& columns,
                                const std::vector<double>& latent = {}) {
    std::vector<fire::Document> docs;
    const std::size_t n = columns.empty() ? 0 : columns.front().size();
    for (std::size_t i = 0; i < n; ++i) {
        fire::Document d;
        char id[24];
        std::snprintf(id, sizeof id, "d%05zu", i);
        d.doc_id = id;
        d.text = "text " + std::to_string(i);
        for (std::size_t j = 0; j < raters.size(); ++j) d.raw_scores[raters[j]] = columns[j][i];
        if (!latent.empty()) d.latent_quality = latent[i];
        docs.push_back(std::move(d));
    }
    std::vector<fire::RaterSpec> specs;
    for (const auto& r : raters) specs.push_back({r, fire::Polarity::higher_is_better});
    return fire::Corpus(std::move(docs), std::move(specs));
}

inline std::vector<double> normal_vector(std::size_t n, std::uint64_t seed) {
    fire::Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
}

/// The published GPT-4o / human win-rate table.
struct WinRateTable {
    std::string rater;
    std::vector<double> percentile;
    std::vector<double> gpt4o;
    std::vector<double> human;
};

inline WinRateTable load_winrate_table() {
    const auto j = nlohmann::json::parse(read_file(data_dir() / "fixtures" / "winrate_table.json"));
    return {j.at("rater").get<std::string>(), j.at("percentile").get<std::vector<double>>(),
            j.at("judges").at("gpt-4o").get<std::vector<double>>(), j.at("judges").at("human").get<std::vector<double>>()};
}

/// A corpus and a verdict table that, fed through the ordinary alignment
/// path with k intervals of exactly `per_interval` documents each, yields
/// interval j win rate round(per_interval * rates[j]) / per_interval.
/// Within interval j the first `wins` documents (in score order) beat any
/// opponent; the rest lose.
struct FixtureCorpus {
    fire::Corpus corpus;
    std::unordered_map<std::string, bool> verdicts;
};

inline FixtureCorpus fixture_corpus(const std::string& rater, const std::vector<double>& rates, std::size_t per_interval) {
    const std::size_t k = rates.size(), n = k * per_interval;
    std::vector<double> scores(n);
    std::unordered_map<std::string, bool> verdicts;
    for (std::size_t i = 0; i < n; ++i) {
        scores[i] = static_cast<double>(n - i); // row 0 is the best
        const std::size_t j = i / per_interval, pos = i % per_interval;
        const auto wins = static_cast<std::size_t>(std::llround(rates[j] * static_cast<double>(per_interval)));
        char id[24];
        std::snprintf(id, sizeof id, "d%05zu", i);
        verdicts[id] = pos < wins;
    }
    return {make_corpus({rater}, {scores}), std::move(verdicts)};
}

/// Random symmetric nonnegative matrix with zero diagonal, entries in
/// (0.01, 0.5], hence irreducible.
inline std::vector<double> random_orthogonality(std::size_t n, fire::Rng& rng) {
    std::vector<double> m(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) m[i * n + j] = m[j * n + i] = 0.01 + 0.49 * rng.uniform();
    return m;
}

inline std::vector<std::string> rater_names(std::size_t n) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("r" + std::to_string(i));
    return ids;
}

} // namespace testsupport
