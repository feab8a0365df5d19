#include "fire/corpus.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "fire/error.hpp"
#include "fire/rng.hpp"
#include "json.hpp"

namespace fire {

using nlohmann::json;

std::string_view to_string(Polarity p) {
    return p == Polarity::higher_is_better ? "higher" : "lower";
}

Polarity parse_polarity(std::string_view s) {
    if (s == "higher" || s == "higher_is_better") return Polarity::higher_is_better;
    if (s == "lower" || s == "lower_is_better") return Polarity::lower_is_better;
    throw InputError("unknown polarity '" + std::string(s) + "' (expected higher|lower)");
}

std::vector<RaterSpec> parse_rater_list(std::string_view list) {
    std::vector<RaterSpec> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        auto end = list.find(',', start);
        if (end == std::string_view::npos) end = list.size();
        auto item = list.substr(start, end - start);
        if (!item.empty()) {
            RaterSpec spec;
            auto colon = item.find(':');
            spec.id = std::string(item.substr(0, colon));
            if (colon != std::string_view::npos) spec.polarity = parse_polarity(item.substr(colon + 1));
            if (spec.id.empty()) throw InputError("empty rater id in list '" + std::string(list) + "'");
            out.push_back(std::move(spec));
        }
        start = end + 1;
    }
    if (out.empty()) throw InputError("rater list is empty");
    return out;
}

std::vector<double> percentile_rank(std::span<const double> values, Polarity polarity) {
    const std::size_t n = values.size();
    if (n == 0) throw ArgumentError("percentile_rank: empty column");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Best first: descending for higher-is-better, ascending otherwise.
    if (polarity == Polarity::higher_is_better) {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    } else {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    }

    std::vector<double> out(n);
    const double scale = 100.0 / static_cast<double>(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && values[order[j]] == values[order[i]]) ++j;
        // ranks i+1 .. j, mean (i + 1 + j) / 2, shifted by half a rank
        const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
        const double pct = (mean_rank - 0.5) * scale;
        for (std::size_t t = i; t < j; ++t) out[order[t]] = pct;
        i = j;
    }
    return out;
}

ScoreColumn percentile_rank(ScoreColumn column) {
    column.percentiles = percentile_rank(column.values, column.polarity);
    return column;
}

namespace {

std::uint64_t hash_documents(const std::vector<Document>& docs) {
    std::uint64_t h = fnv1a("fire-corpus-v1");
    for (const auto& d : docs) {
        h = fnv1a(d.doc_id, h);
        h = fnv1a(std::string_view("\x1f", 1), h);
        h = fnv1a(d.text, h);
        for (const auto& [rater, score] : d.raw_scores) {
            h = fnv1a(rater, h);
            const auto bits = std::bit_cast<std::uint64_t>(score);
            h = fnv1a(std::string_view(reinterpret_cast<const char*>(&bits), sizeof bits), h);
        }
        h = fnv1a(std::string_view("\x1e", 1), h);
    }
    return h;
}

} // namespace

Corpus::Corpus(std::vector<Document> documents, std::vector<RaterSpec> raters)
    : documents_(std::move(documents)), raters_(std::move(raters)) {
    index_.reserve(documents_.size());
    for (std::size_t i = 0; i < documents_.size(); ++i) {
        auto [it, inserted] = index_.emplace(documents_[i].doc_id, i);
        if (!inserted) throw InputError("duplicate doc_id '" + documents_[i].doc_id + "'");
    }
    for (std::size_t r = 0; r < raters_.size(); ++r) {
        for (std::size_t s = 0; s < r; ++s) {
            if (raters_[s].id == raters_[r].id)
                throw InputError("rater '" + raters_[r].id + "' registered twice");
        }
    }

    columns_.reserve(raters_.size());
    for (const auto& rater : raters_) {
        ScoreColumn col;
        col.rater_id = rater.id;
        col.polarity = rater.polarity;
        col.values.reserve(documents_.size());
        for (const auto& d : documents_) {
            auto it = d.raw_scores.find(rater.id);
            if (it == d.raw_scores.end())
                throw InputError("document '" + d.doc_id + "' has no score for rater '" + rater.id + "'");
            col.values.push_back(it->second);
        }
        if (!documents_.empty()) col = percentile_rank(std::move(col));
        columns_.push_back(std::move(col));
    }
    hash_ = hash_documents(documents_);
}

const ScoreColumn& Corpus::column(std::string_view rater_id) const {
    for (const auto& c : columns_) {
        if (c.rater_id == rater_id) return c;
    }
    throw ArgumentError("rater '" + std::string(rater_id) + "' is not registered with the corpus");
}

bool Corpus::has_rater(std::string_view rater_id) const {
    return std::any_of(raters_.begin(), raters_.end(),
                       [&](const RaterSpec& r) { return r.id == rater_id; });
}

std::optional<std::size_t> Corpus::index_of(std::string_view doc_id) const {
    auto it = index_.find(std::string(doc_id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> Corpus::doc_ids() const {
    std::vector<std::string> ids;
    ids.reserve(documents_.size());
    for (const auto& d : documents_) ids.push_back(d.doc_id);
    return ids;
}

namespace {

Document parse_document(const std::string& line, std::span<const RaterSpec> raters,
                        std::string_view source, std::size_t line_no) {
    auto where = [&] { return std::string(source) + ":" + std::to_string(line_no) + ": "; };
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw InputError(where() + "malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw InputError(where() + "expected a JSON object");
    if (!j.contains("id") || !j["id"].is_string()) throw InputError(where() + "missing string field 'id'");
    if (!j.contains("text") || !j["text"].is_string()) throw InputError(where() + "missing string field 'text'");
    if (!j.contains("scores") || !j["scores"].is_object())
        throw InputError(where() + "missing object field 'scores'");

    Document doc;
    doc.doc_id = j["id"].get<std::string>();
    doc.text = j["text"].get<std::string>();
    for (const auto& [key, value] : j["scores"].items()) {
        if (!value.is_number())
            throw InputError(where() + "score for rater '" + key + "' is not a number");
        const double v = value.get<double>();
        if (!std::isfinite(v)) throw InputError(where() + "score for rater '" + key + "' is not finite");
        doc.raw_scores.emplace(key, v);
    }
    for (const auto& r : raters) {
        if (!doc.raw_scores.contains(r.id))
            throw InputError(where() + "document '" + doc.doc_id + "' is missing a score for rater '" + r.id + "'");
    }
    if (j.contains("latent")) {
        if (!j["latent"].is_number()) throw InputError(where() + "'latent' is not a number");
        doc.latent_quality = j["latent"].get<double>();
    }
    return doc;
}

} // namespace

Corpus parse_corpus(std::istream& in, std::span<const RaterSpec> raters, std::string_view source) {
    std::vector<std::pair<std::size_t, std::string>> lines;
    {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") == std::string::npos) continue;
            lines.emplace_back(line_no, std::move(line));
        }
    }

    // Lines are parsed in independent chunks; the first failing line (in
    // file order) determines the reported error.
    std::vector<Document> docs(lines.size());
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), lines.size() / 4096));
    std::vector<std::optional<std::pair<std::size_t, std::string>>> failures(workers);
    auto work = [&](std::size_t w) {
        const std::size_t lo = lines.size() * w / workers;
        const std::size_t hi = lines.size() * (w + 1) / workers;
        for (std::size_t i = lo; i < hi; ++i) {
            try {
                docs[i] = parse_document(lines[i].second, raters, source, lines[i].first);
            } catch (const InputError& e) {
                failures[w].emplace(lines[i].first, e.what());
                return;
            }
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    }
    for (const auto& f : failures) {
        if (f) throw InputError(f->second);
    }

    std::unordered_map<std::string, std::size_t> seen;
    seen.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        auto [it, inserted] = seen.emplace(docs[i].doc_id, lines[i].first);
        if (!inserted) {
            throw InputError(std::string(source) + ":" + std::to_string(lines[i].first) +
                             ": duplicate doc_id '" + docs[i].doc_id + "' (first seen on line " +
                             std::to_string(it->second) + ")");
        }
    }
    return Corpus(std::move(docs), std::vector<RaterSpec>(raters.begin(), raters.end()));
}

Corpus ingest(const std::filesystem::path& path, std::span<const RaterSpec> raters) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open corpus '" + path.string() + "'");
    return parse_corpus(in, raters, path.string());
}

void export_jsonl(const Corpus& corpus, std::ostream& out) {
    for (const auto& d : corpus.documents()) {
        nlohmann::ordered_json j;
        j["id"] = d.doc_id;
        j["text"] = d.text;
        j["scores"] = nlohmann::ordered_json::object();
        for (const auto& [rater, score] : d.raw_scores) j["scores"][rater] = score;
        if (d.latent_quality) j["latent"] = *d.latent_quality;
        out << j.dump() << '\n';
    }
}

} // namespace fire
