#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include "fire/corpus.hpp"

namespace fire {

enum class PromptTemplate { compare_quality, dimension_check };

std::string_view to_string(PromptTemplate t);

/// Pairwise comparison prompt; `text_a` / `text_b` fill the two option slots.
std::string render_compare_prompt(std::string_view text_a, std::string_view text_b);

/// Single-text yes/no check against a quality condition.
std::string render_dimension_prompt(std::string_view text, std::string_view condition);

/// For compare_quality `first`/`second` are the two texts; for
/// dimension_check they are the text and the condition. Empty inputs throw.
std::string render_prompt(PromptTemplate t, std::string_view first, std::string_view second);

enum class Side { A, B };

struct ComparisonOutcome {
    Side winner = Side::A; ///< relative to the argument order of compare()
    std::string judge_id;
    int repeats = 1;

    bool operator==(const ComparisonOutcome&) const = default;
};

/// Decides which of two documents is higher quality.
///
/// Implementations must be deterministic for a fixed (judge state, pair, seed)
/// and safe to call from several threads at once.
class Judge {
public:
    virtual ~Judge() = default;
    virtual std::string id() const = 0;
    virtual ComparisonOutcome compare(const Document& a, const Document& b, std::uint64_t seed) = 0;
};

/// Compares latent qualities perturbed by additive Gaussian noise.
/// Each of `repeats` (odd) votes draws fresh noise; the majority wins.
class SyntheticJudge final : public Judge {
public:
    explicit SyntheticJudge(double sigma, int repeats = 1);

    std::string id() const override;
    ComparisonOutcome compare(const Document& a, const Document& b, std::uint64_t seed) override;

private:
    double sigma_;
    int repeats_;
};

/// Replays recorded verdicts: each listed document either beats or loses to
/// whatever it is compared with. Used to feed published win-rate tables
/// through the alignment path.
class RecordedVerdictJudge final : public Judge {
public:
    explicit RecordedVerdictJudge(std::unordered_map<std::string, bool> wins,
                                  std::string name = "recorded");

    std::string id() const override { return name_; }
    ComparisonOutcome compare(const Document& a, const Document& b, std::uint64_t seed) override;

private:
    std::unordered_map<std::string, bool> wins_;
    std::string name_;
};

struct JudgeCacheEntry {
    std::string key;
    ComparisonOutcome outcome;
};

/// Cache key for one vote: hex FNV-1a of template, ordered pair, presentation
/// order and vote index.
std::string judge_cache_key(PromptTemplate t, std::string_view a_id, std::string_view b_id,
                            bool swapped, int vote);

/// Thread-safe outcome cache, optionally backed by an append-only JSONL file.
class JudgeCache {
public:
    JudgeCache() = default;
    /// Loads existing entries from `path` (if it exists) and appends new ones to it.
    explicit JudgeCache(std::filesystem::path path);

    std::optional<ComparisonOutcome> find(const std::string& key) const;
    void store(const JudgeCacheEntry& entry);
    std::size_t size() const;

private:
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, ComparisonOutcome> entries_;
    std::optional<std::filesystem::path> path_;
};

struct EndpointConfig {
    std::string url = "http://127.0.0.1:8080/judge"; ///< http://host[:port]/path
    std::string model = "gpt-4o";
    int max_in_flight = 8;
    int retries = 3;
    int timeout_seconds = 60;
    int repeats = 1;
    std::optional<std::filesystem::path> cache_path;
};

/// Remote judge speaking {"prompt": str} -> {"answer": "A"|"B"} over HTTP.
///
/// Presentation order is randomized per pair from the seed. Every vote is
/// cached; a cached vote never touches the network.
class EndpointJudge final : public Judge {
public:
    explicit EndpointJudge(EndpointConfig config);
    ~EndpointJudge() override;

    std::string id() const override;
    ComparisonOutcome compare(const Document& a, const Document& b, std::uint64_t seed) override;

    std::size_t requests_sent() const;
    const JudgeCache& cache() const { return *cache_; }

private:
    Side ask(const std::string& prompt, std::string_view context);

    EndpointConfig config_;
    std::string scheme_host_port_;
    std::string path_;
    std::unique_ptr<JudgeCache> cache_;
    std::unique_ptr<std::counting_semaphore<1024>> in_flight_;
    mutable std::mutex stats_mutex_;
    std::size_t requests_ = 0;
};

} // namespace fire
