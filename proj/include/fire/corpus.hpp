#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fire {

/// Which end of a rater's raw scale means "better".
enum class Polarity { higher_is_better, lower_is_better };

std::string_view to_string(Polarity p);
Polarity parse_polarity(std::string_view s);

struct RaterSpec {
    std::string id;
    Polarity polarity = Polarity::higher_is_better;
};

/// Parses "a,b:lower,c:higher" into rater specs.
std::vector<RaterSpec> parse_rater_list(std::string_view list);

struct Document {
    std::string doc_id;
    std::string text;
    std::map<std::string, double> raw_scores;
    /// Ground-truth quality, only present in synthetic corpora. Drives the
    /// synthetic judge.
    std::optional<double> latent_quality;
};

/// One rater's scores in corpus order, plus percentile ranks where
/// percentile 0 is the best document under the rater's polarity.
struct ScoreColumn {
    std::string rater_id;
    Polarity polarity = Polarity::higher_is_better;
    std::vector<double> values;
    std::vector<double> percentiles;
};

/// Tie-averaged percentile ranks.
///
/// Documents are ranked best-first under `polarity` (rank 1 = best); a tie
/// group shares the mean of its ranks, and rank r maps to 100 * (r - 0.5) / N.
/// A single document therefore sits at 50.
std::vector<double> percentile_rank(std::span<const double> values, Polarity polarity);

/// Fills column.percentiles from column.values.
ScoreColumn percentile_rank(ScoreColumn column);

/// Immutable scored corpus. Documents keep input order; one score column per
/// registered rater is materialized at construction.
class Corpus {
public:
    Corpus(std::vector<Document> documents, std::vector<RaterSpec> raters);

    std::size_t size() const { return documents_.size(); }
    const std::vector<Document>& documents() const { return documents_; }
    const Document& document(std::size_t i) const { return documents_.at(i); }
    const std::vector<RaterSpec>& raters() const { return raters_; }
    const std::vector<ScoreColumn>& columns() const { return columns_; }

    /// Throws ArgumentError for an unregistered rater.
    const ScoreColumn& column(std::string_view rater_id) const;
    bool has_rater(std::string_view rater_id) const;

    std::optional<std::size_t> index_of(std::string_view doc_id) const;
    std::vector<std::string> doc_ids() const;

    /// FNV-1a over ids, texts and raw score bit patterns.
    std::uint64_t content_hash() const { return hash_; }

private:
    std::vector<Document> documents_;
    std::vector<RaterSpec> raters_;
    std::vector<ScoreColumn> columns_;
    std::unordered_map<std::string, std::size_t> index_;
    std::uint64_t hash_ = 0;
};

/// Reads line-delimited JSON: {"id": str, "text": str, "scores": {rater: num}}.
/// An optional numeric "latent" field is kept as Document::latent_quality.
/// Blank lines are skipped. Errors carry `source:line`.
Corpus parse_corpus(std::istream& in, std::span<const RaterSpec> raters,
                    std::string_view source = "<stream>");

Corpus ingest(const std::filesystem::path& path, std::span<const RaterSpec> raters);

/// Writes the corpus back as JSONL, one document per line, input order.
void export_jsonl(const Corpus& corpus, std::ostream& out);

} // namespace fire
