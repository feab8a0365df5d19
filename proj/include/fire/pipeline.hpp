#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fire/alignment.hpp"
#include "fire/corpus.hpp"
#include "fire/error.hpp"
#include "fire/integration.hpp"
#include "fire/judge.hpp"
#include "fire/selection.hpp"

namespace fire {

/// Pipeline stages. Each failing stage maps to its own exit status.
enum class Stage { config, ingest, align, integrate, select, bench, inspect, write };

std::string_view to_string(Stage s);
int exit_code(Stage s);

/// A failure tagged with the stage it happened in.
class StageError : public Error {
public:
    StageError(Stage stage, const std::string& what) : Error(tagged(stage, what)), stage_(stage) {}
    Stage stage() const { return stage_; }

private:
    static std::string tagged(Stage stage, const std::string& what) {
        const std::string tag = std::string(to_string(stage)) + ": ";
        return what.starts_with(tag) ? what : tag + what;
    }

    Stage stage_;
};

struct JudgeConfig {
    std::string kind = "synthetic"; ///< synthetic | endpoint
    double sigma = 0.25;
    int repeats = 1;
    EndpointConfig endpoint;
};

std::unique_ptr<Judge> make_judge(const JudgeConfig& config);

struct OutputPaths {
    std::filesystem::path dir = ".";
    std::string profiles = "profiles.json";
    std::string model = "model.json";
    std::string manifest = "manifest.jsonl";
    std::string report = "report.json";

    std::filesystem::path resolve(const std::string& name) const { return dir / name; }
};

struct PipelineConfig {
    std::filesystem::path corpus;
    std::vector<RaterSpec> raters;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    JudgeConfig judge;
    AlignmentParams alignment;
    IntegrationParams integration;
    SelectionPlan selection;
    OutputPaths output;
};

/// The full default configuration as JSON, sections corpus / run / judge /
/// alignment / integration / selection / output.
std::string default_config_json();

/// Overlays `text` on the defaults, then every FIRE_<SECTION>_<KEY> entry of
/// `env` (values parsed with the type of the default). Unknown sections or
/// keys are errors in both places.
PipelineConfig config_from_json(std::string_view text, const std::map<std::string, std::string>& env = {});

/// FIRE_* variables of the current process environment.
std::map<std::string, std::string> fire_environment();

std::string config_to_json(const PipelineConfig& config);

/// Per-stage seeds, each derived from the root seed by a stage label.
struct StageSeeds {
    std::uint64_t align = 0;
    std::uint64_t integrate = 0;
    std::uint64_t select = 0;
};

StageSeeds stage_seeds(std::uint64_t root);

/// Aligned ratings plus the matrix correlations are computed on.
struct AlignedView {
    RatingMatrix aligned;
    RatingMatrix basis;
    std::vector<double> gamma;
};

AlignedView aligned_view(const Corpus& corpus, std::span<const RaterProfile> profiles, CorrelationBasis basis);

/// Runs `plan` over an aligned view. `model` is the global model used for
/// top-k and sampled modes; progressive mode rebuilds it from `params`.
SelectionManifest run_selection(const AlignedView& view, std::span<const std::string> doc_ids,
                                const IntegrationModel& model, const IntegrationParams& params,
                                const SelectionPlan& plan, ProgressiveTrace* trace = nullptr,
                                std::size_t threads = 1);

/// Writes `content` to a sibling temp file, then renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// Several artifacts that become visible together: every file is written to
/// a temp path first and only renamed into place by commit(). Anything not
/// committed is removed on destruction.
class ArtifactSet {
public:
    ArtifactSet() = default;
    ArtifactSet(const ArtifactSet&) = delete;
    ArtifactSet& operator=(const ArtifactSet&) = delete;
    ~ArtifactSet();

    void stage(const std::filesystem::path& path, std::string_view content);
    void commit();

private:
    std::vector<std::pair<std::filesystem::path, std::filesystem::path>> pending_; // temp, final
};

/// Hex FNV-1a of a byte string; the artifact hash recorded in reports.
std::string content_hash(std::string_view bytes);

struct PipelineResult {
    std::vector<RaterProfile> profiles;
    IntegrationModel model;
    SelectionManifest manifest;
    std::string report_json;
};

/// align -> integrate -> select, then writes profiles, model, manifest and
/// report atomically. Throws StageError; on failure no artifact reaches its
/// final path.
PipelineResult run_pipeline(const PipelineConfig& config);

struct InspectOptions {
    bool curve_csv = false;
    std::size_t resolution = 0; ///< > 0: evaluate the spline at this many evenly spaced percentiles
    std::string rater;          ///< restrict profile output to one rater
};

/// Human-readable summary of profiles.json, model.json, manifest.jsonl, a
/// run report or a bench report; or win-rate curve CSV for profiles.
std::string inspect_artifact(const std::filesystem::path& path, const InspectOptions& options = {});

} // namespace fire
