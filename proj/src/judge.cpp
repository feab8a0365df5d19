#include "fire/judge.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <thread>

#include "fire/error.hpp"
#include "fire/rng.hpp"
#include "httplib.h"
#include "json.hpp"

namespace fire {

using nlohmann::json;

namespace {

std::uint64_t pair_hash(std::string_view a, std::string_view b) {
    std::uint64_t h = fnv1a(a);
    h = fnv1a(std::string_view("\x1f", 1), h);
    return fnv1a(b, h);
}

std::string_view side_name(Side s) { return s == Side::A ? "A" : "B"; }

Side parse_side(std::string_view s) {
    if (s == "A") return Side::A;
    if (s == "B") return Side::B;
    throw JudgeError("unrecognized judge answer '" + std::string(s) + "'");
}

Side flip(Side s) { return s == Side::A ? Side::B : Side::A; }

void check_repeats(int repeats) {
    if (repeats < 1 || repeats % 2 == 0) throw ArgumentError("judge repeats must be a positive odd number");
}

} // namespace

SyntheticJudge::SyntheticJudge(double sigma, int repeats) : sigma_(sigma), repeats_(repeats) {
    if (!(sigma >= 0.0)) throw ArgumentError("synthetic judge sigma must be >= 0");
    check_repeats(repeats);
}

std::string SyntheticJudge::id() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "synthetic(sigma=%g,repeats=%d)", sigma_, repeats_);
    return buf;
}

ComparisonOutcome SyntheticJudge::compare(const Document& a, const Document& b, std::uint64_t seed) {
    if (!a.latent_quality) throw JudgeError("synthetic judge: document '" + a.doc_id + "' has no latent quality");
    if (!b.latent_quality) throw JudgeError("synthetic judge: document '" + b.doc_id + "' has no latent quality");

    Rng rng(mix64(seed ^ pair_hash(a.doc_id, b.doc_id)));
    int votes_a = 0;
    for (int v = 0; v < repeats_; ++v) {
        const double qa = *a.latent_quality + sigma_ * rng.normal();
        const double qb = *b.latent_quality + sigma_ * rng.normal();
        // Exact ties (sigma = 0, equal latents) are settled by a fair coin.
        const bool a_wins = qa > qb || (qa == qb && (rng.next() & 1U));
        votes_a += a_wins ? 1 : 0;
    }
    return {2 * votes_a > repeats_ ? Side::A : Side::B, id(), repeats_};
}

RecordedVerdictJudge::RecordedVerdictJudge(std::unordered_map<std::string, bool> wins, std::string name)
    : wins_(std::move(wins)), name_(std::move(name)) {}

ComparisonOutcome RecordedVerdictJudge::compare(const Document& a, const Document& b, std::uint64_t) {
    if (auto it = wins_.find(a.doc_id); it != wins_.end()) return {it->second ? Side::A : Side::B, name_, 1};
    if (auto it = wins_.find(b.doc_id); it != wins_.end()) return {it->second ? Side::B : Side::A, name_, 1};
    throw JudgeError("recorded judge: no verdict for pair ('" + a.doc_id + "', '" + b.doc_id + "')");
}

std::string judge_cache_key(PromptTemplate t, std::string_view a_id, std::string_view b_id, bool swapped,
                            int vote) {
    std::uint64_t h = fnv1a(to_string(t));
    h = fnv1a(std::string_view("\x1f", 1), h);
    h = fnv1a(a_id, h);
    h = fnv1a(std::string_view("\x1f", 1), h);
    h = fnv1a(b_id, h);
    h = fnv1a(swapped ? std::string_view("|BA|") : std::string_view("|AB|"), h);
    h = fnv1a(std::to_string(vote), h);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

JudgeCache::JudgeCache(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(*path_);
    if (!in) return;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            ComparisonOutcome o;
            o.winner = parse_side(j.at("outcome").at("winner").get<std::string>());
            o.judge_id = j.at("outcome").at("judge_id").get<std::string>();
            o.repeats = j.at("outcome").at("repeats").get<int>();
            entries_.insert_or_assign(j.at("key").get<std::string>(), std::move(o));
        } catch (const std::exception& e) {
            throw InputError(path_->string() + ":" + std::to_string(line_no) + ": bad judge cache entry (" +
                             e.what() + ")");
        }
    }
}

std::optional<ComparisonOutcome> JudgeCache::find(const std::string& key) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void JudgeCache::store(const JudgeCacheEntry& entry) {
    std::unique_lock lock(mutex_);
    entries_.insert_or_assign(entry.key, entry.outcome);
    if (path_) {
        std::ofstream out(*path_, std::ios::app);
        if (!out) throw InputError("cannot append to judge cache '" + path_->string() + "'");
        nlohmann::ordered_json j;
        j["key"] = entry.key;
        j["outcome"] = {{"winner", side_name(entry.outcome.winner)},
                        {"judge_id", entry.outcome.judge_id},
                        {"repeats", entry.outcome.repeats}};
        out << j.dump() << '\n';
    }
}

std::size_t JudgeCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

EndpointJudge::EndpointJudge(EndpointConfig config) : config_(std::move(config)) {
    check_repeats(config_.repeats);
    if (config_.max_in_flight < 1 || config_.max_in_flight > 1024)
        throw ArgumentError("endpoint max_in_flight must be in [1, 1024]");
    if (config_.retries < 0) throw ArgumentError("endpoint retries must be >= 0");

    const auto scheme_end = config_.url.find("://");
    if (scheme_end == std::string::npos) throw ArgumentError("endpoint url needs a scheme: " + config_.url);
    const auto path_start = config_.url.find('/', scheme_end + 3);
    scheme_host_port_ = config_.url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : config_.url.substr(path_start);

    cache_ = config_.cache_path ? std::make_unique<JudgeCache>(*config_.cache_path) : std::make_unique<JudgeCache>();
    in_flight_ = std::make_unique<std::counting_semaphore<1024>>(config_.max_in_flight);
}

EndpointJudge::~EndpointJudge() = default;

std::string EndpointJudge::id() const { return "endpoint(" + config_.model + ")"; }

std::size_t EndpointJudge::requests_sent() const {
    std::lock_guard lock(stats_mutex_);
    return requests_;
}

Side EndpointJudge::ask(const std::string& prompt, std::string_view context) {
    const std::string body = json{{"prompt", prompt}, {"model", config_.model}}.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50 * (1 << std::min(attempt, 6))));
        in_flight_->acquire();
        httplib::Client client(scheme_host_port_);
        client.set_connection_timeout(config_.timeout_seconds);
        client.set_read_timeout(config_.timeout_seconds);
        auto res = client.Post(path_, body, "application/json");
        in_flight_->release();
        {
            std::lock_guard lock(stats_mutex_);
            ++requests_;
        }
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        try {
            return parse_side(json::parse(res->body).at("answer").get<std::string>());
        } catch (const std::exception& e) {
            last_error = std::string("bad response: ") + e.what();
        }
    }
    throw JudgeError("endpoint judge failed for " + std::string(context) + " after " +
                     std::to_string(config_.retries + 1) + " attempts: " + last_error);
}

ComparisonOutcome EndpointJudge::compare(const Document& a, const Document& b, std::uint64_t seed) {
    Rng rng(mix64(seed ^ pair_hash(a.doc_id, b.doc_id)));
    int votes_a = 0;
    for (int v = 0; v < config_.repeats; ++v) {
        const bool swapped = (rng.next() & 1U) != 0;
        const std::string key = judge_cache_key(PromptTemplate::compare_quality, a.doc_id, b.doc_id, swapped, v);
        Side winner;
        if (auto hit = cache_->find(key)) {
            winner = hit->winner;
        } else {
            const auto& first = swapped ? b : a;
            const auto& second = swapped ? a : b;
            const Side presented = ask(render_compare_prompt(first.text, second.text),
                                       "pair ('" + a.doc_id + "', '" + b.doc_id + "')");
            winner = swapped ? flip(presented) : presented;
            cache_->store({key, {winner, id(), 1}});
        }
        votes_a += winner == Side::A ? 1 : 0;
    }
    return {2 * votes_a > config_.repeats ? Side::A : Side::B, id(), config_.repeats};
}

} // namespace fire
