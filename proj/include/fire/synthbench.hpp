#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fire/alignment.hpp"
#include "fire/corpus.hpp"
#include "fire/integration.hpp"
#include "fire/selection.hpp"

namespace fire::synth {

/// Monotone map applied to a synthetic rater's linear score.
enum class Distortion { identity, cube, exp, logistic };

std::string_view to_string(Distortion d);
Distortion parse_distortion(std::string_view s);
double apply(Distortion d, double x);

struct SyntheticRater {
    std::string id;
    std::vector<double> weights; ///< one per latent dimension, nonnegative
    double sigma = 0.0;          ///< additive Gaussian noise before distortion
    Distortion distortion = Distortion::identity;
};

struct LatentSpec {
    std::size_t n_docs = 0;
    std::size_t n_dims = 0;
    std::vector<SyntheticRater> raters;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticCorpus {
    Corpus corpus;
    std::vector<double> truth; ///< mean of latent dims, corpus order
};

/// Latent dims ~ N(0, 1) per document; truth = their mean; each rater scores
/// distortion(weights . dims + sigma * noise). Truth is also stored as the
/// documents' latent quality so the synthetic judge can use it.
SyntheticCorpus generate(const LatentSpec& spec);

struct Metrics {
    double mean_true_quality = 0.0;
    double precision_at_frac = 0.0;
};

/// precision = |manifest ∩ true top ceil(k_frac N)| / |manifest|.
Metrics evaluate(const SelectionManifest& manifest, const Corpus& corpus, std::span<const double> truth,
                 double k_frac);

struct Scenario {
    std::string name = "default";
    LatentSpec latent;
    double judge_sigma = 0.25;
    AlignmentParams alignment;
    IntegrationParams integration;
    SelectionPlan progressive; ///< used by the "progressive" variant
    double k_frac = 0.1;
};

/// Four raters standing in for four quality dimensions, each a noisy partial
/// view of the latent space, with heterogeneous monotone distortions.
Scenario default_scenario();

Scenario scenario_from_json(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const Scenario& scenario);

/// Known variant names: full, no_align, no_orth, no_rel, average,
/// max_criteria, mix_criteria, progressive, single (expands to one row per
/// rater, named single:<id>).
std::vector<std::string> all_variants();

struct ReportRow {
    std::string variant;
    std::uint64_t seed = 0;
    Metrics metrics;
    std::size_t selected = 0;
};

struct AblationReport {
    std::string scenario;
    std::vector<std::uint64_t> seeds;
    std::vector<ReportRow> rows; ///< one per (seed, variant)

    /// Mean precision / quality per variant, in first-seen variant order.
    std::vector<ReportRow> means() const;
    std::vector<double> precisions(std::string_view variant) const;
};

/// Generates the scenario corpus for `seed`, aligns with a synthetic judge,
/// and evaluates every requested variant at k = round(k_frac N).
///   no_align  min-max normalized raw scores replace A(x)
///   no_orth   o = 1 / sqrt(n) for every rater, no collapse
///   no_rel    gamma = 1 for every rater
AblationReport run_ablation(const Scenario& scenario, std::span<const std::string> variants, std::uint64_t seed);

/// run_ablation over several seeds, rows concatenated.
AblationReport run_benchmark(const Scenario& scenario, std::span<const std::string> variants,
                             std::span<const std::uint64_t> seeds);

std::string report_table(const AblationReport& report);
std::string report_json(const AblationReport& report);

} // namespace fire::synth
