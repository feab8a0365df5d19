#include "fire/pipeline.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fire/log.hpp"
#include "fire/rng.hpp"
#include "fire/synthbench.hpp"
#include "json.hpp"

extern char** environ;

namespace fire {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Stage s) {
    switch (s) {
    case Stage::config: return "config";
    case Stage::ingest: return "ingest";
    case Stage::align: return "align";
    case Stage::integrate: return "integrate";
    case Stage::select: return "select";
    case Stage::bench: return "bench";
    case Stage::inspect: return "inspect";
    case Stage::write: return "write";
    }
    return "?";
}

int exit_code(Stage s) {
    switch (s) {
    case Stage::config: return 3;
    case Stage::ingest: return 4;
    case Stage::align: return 5;
    case Stage::integrate: return 6;
    case Stage::select: return 7;
    case Stage::bench: return 8;
    case Stage::inspect: return 9;
    case Stage::write: return 10;
    }
    return 1;
}

std::unique_ptr<Judge> make_judge(const JudgeConfig& config) {
    if (config.kind == "synthetic") return std::make_unique<SyntheticJudge>(config.sigma, config.repeats);
    if (config.kind == "endpoint") {
        EndpointConfig ec = config.endpoint;
        ec.repeats = config.repeats;
        return std::make_unique<EndpointJudge>(ec);
    }
    throw InputError("judge.kind must be synthetic or endpoint, got '" + config.kind + "'");
}

// ---------------------------------------------------------------------------
// Config

namespace {

ordered_json defaults_json() {
    const PipelineConfig d;
    ordered_json j;
    j["corpus"] = {{"path", ""}, {"raters", ""}};
    j["run"] = {{"seed", d.seed}, {"threads", d.threads}, {"log_level", "info"}};
    j["judge"] = {{"kind", d.judge.kind},
                  {"sigma", d.judge.sigma},
                  {"repeats", d.judge.repeats},
                  {"url", d.judge.endpoint.url},
                  {"model", d.judge.endpoint.model},
                  {"max_in_flight", d.judge.endpoint.max_in_flight},
                  {"retries", d.judge.endpoint.retries},
                  {"timeout_seconds", d.judge.endpoint.timeout_seconds},
                  {"cache", ""}};
    j["alignment"] = {{"intervals", d.alignment.intervals}, {"per_interval", d.alignment.per_interval}};
    j["integration"] = {{"kernel", to_string(d.integration.kernel)},
                        {"alpha", d.integration.alpha},
                        {"damping", d.integration.damping},
                        {"correlation_basis", to_string(d.integration.basis)},
                        {"correlation_sample", d.integration.correlation_sample},
                        {"collapse", d.integration.collapse},
                        {"collapse_threshold", d.integration.collapse_threshold}};
    j["selection"] = {{"mode", to_string(d.selection.mode)},
                      {"k", 0},
                      {"tau", d.selection.tau},
                      {"eta", d.selection.eta},
                      {"n_init", d.selection.n_init},
                      {"beta", d.selection.beta},
                      {"n_max", d.selection.n_max}};
    j["output"] = {{"dir", "."},
                   {"profiles", d.output.profiles},
                   {"model", d.output.model},
                   {"manifest", d.output.manifest},
                   {"report", d.output.report}};
    return j;
}

bool same_kind(const ordered_json& def, const ordered_json& v) {
    if (def.is_boolean()) return v.is_boolean();
    if (def.is_number_float()) return v.is_number();
    if (def.is_number_unsigned()) return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
    if (def.is_number_integer()) return v.is_number_integer();
    if (def.is_string()) return v.is_string();
    return false;
}

ordered_json parse_env_value(const ordered_json& def, const std::string& raw, const std::string& var) {
    try {
        std::size_t used = 0;
        if (def.is_boolean()) {
            if (raw == "true" || raw == "1") return true;
            if (raw == "false" || raw == "0") return false;
        } else if (def.is_number_float()) {
            const double v = std::stod(raw, &used);
            if (used == raw.size()) return v;
        } else if (def.is_number_unsigned()) {
            if (!raw.empty() && raw[0] != '-') {
                const auto v = std::stoull(raw, &used);
                if (used == raw.size()) return v;
            }
        } else if (def.is_number_integer()) {
            const auto v = std::stoll(raw, &used);
            if (used == raw.size()) return v;
        } else {
            return raw;
        }
    } catch (const std::logic_error&) {
    }
    throw InputError(var + "='" + raw + "' does not parse as " + std::string(def.type_name()));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

template <class T>
T get(const ordered_json& j, const char* section, const char* key) {
    return j.at(section).at(key).get<T>();
}

} // namespace

std::string default_config_json() { return defaults_json().dump(2) + "\n"; }

std::map<std::string, std::string> fire_environment() {
    std::map<std::string, std::string> out;
    for (char** e = environ; e && *e; ++e) {
        const std::string_view entry(*e);
        if (!entry.starts_with("FIRE_")) continue;
        const auto eq = entry.find('=');
        if (eq == std::string_view::npos) continue;
        out.emplace(std::string(entry.substr(0, eq)), std::string(entry.substr(eq + 1)));
    }
    return out;
}

PipelineConfig config_from_json(std::string_view text, const std::map<std::string, std::string>& env) {
    ordered_json j = defaults_json();

    ordered_json file;
    try {
        file = text.empty() ? ordered_json::object() : ordered_json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("config: malformed JSON (") + e.what() + ")");
    }
    if (!file.is_object()) throw InputError("config: top level must be an object");
    for (const auto& [section, body] : file.items()) {
        if (!j.contains(section)) throw InputError("config: unknown section '" + section + "'");
        if (!body.is_object()) throw InputError("config: section '" + section + "' must be an object");
        for (const auto& [key, value] : body.items()) {
            if (!j[section].contains(key)) throw InputError("config: unknown key '" + section + "." + key + "'");
            if (!same_kind(j[section][key], value))
                throw InputError("config: '" + section + "." + key + "' should be " +
                                 std::string(j[section][key].type_name()));
            j[section][key] = value;
        }
    }

    for (const auto& [var, raw] : env) {
        if (!var.starts_with("FIRE_")) continue;
        const std::string rest = var.substr(5);
        const auto us = rest.find('_');
        if (us == std::string::npos) throw InputError("config: environment variable " + var + " has no key part");
        const std::string section = lower(rest.substr(0, us)), key = lower(rest.substr(us + 1));
        if (!j.contains(section) || !j[section].contains(key))
            throw InputError("config: environment variable " + var + " names no config key");
        j[section][key] = parse_env_value(j[section][key], raw, var);
    }

    PipelineConfig c;
    try {
        c.corpus = get<std::string>(j, "corpus", "path");
        c.raters = parse_rater_list(get<std::string>(j, "corpus", "raters"));
        c.seed = get<std::uint64_t>(j, "run", "seed");
        c.threads = get<std::size_t>(j, "run", "threads");

        c.judge.kind = get<std::string>(j, "judge", "kind");
        c.judge.sigma = get<double>(j, "judge", "sigma");
        c.judge.repeats = get<int>(j, "judge", "repeats");
        c.judge.endpoint.url = get<std::string>(j, "judge", "url");
        c.judge.endpoint.model = get<std::string>(j, "judge", "model");
        c.judge.endpoint.max_in_flight = get<int>(j, "judge", "max_in_flight");
        c.judge.endpoint.retries = get<int>(j, "judge", "retries");
        c.judge.endpoint.timeout_seconds = get<int>(j, "judge", "timeout_seconds");
        if (const auto cache = get<std::string>(j, "judge", "cache"); !cache.empty()) c.judge.endpoint.cache_path = cache;

        c.alignment.intervals = get<int>(j, "alignment", "intervals");
        c.alignment.per_interval = get<std::size_t>(j, "alignment", "per_interval");

        c.integration.kernel = parse_kernel(get<std::string>(j, "integration", "kernel"));
        c.integration.alpha = get<int>(j, "integration", "alpha");
        c.integration.damping = get<double>(j, "integration", "damping");
        c.integration.basis = parse_basis(get<std::string>(j, "integration", "correlation_basis"));
        c.integration.correlation_sample = get<std::size_t>(j, "integration", "correlation_sample");
        c.integration.collapse = get<bool>(j, "integration", "collapse");
        c.integration.collapse_threshold = get<double>(j, "integration", "collapse_threshold");

        c.selection.mode = parse_mode(get<std::string>(j, "selection", "mode"));
        c.selection.k = get<std::size_t>(j, "selection", "k");
        c.selection.tau = get<double>(j, "selection", "tau");
        c.selection.eta = get<double>(j, "selection", "eta");
        c.selection.n_init = get<std::size_t>(j, "selection", "n_init");
        c.selection.beta = get<double>(j, "selection", "beta");
        c.selection.n_max = get<std::size_t>(j, "selection", "n_max");

        c.output.dir = get<std::string>(j, "output", "dir");
        c.output.profiles = get<std::string>(j, "output", "profiles");
        c.output.model = get<std::string>(j, "output", "model");
        c.output.manifest = get<std::string>(j, "output", "manifest");
        c.output.report = get<std::string>(j, "output", "report");
    } catch (const json::exception& e) {
        throw InputError(std::string("config: ") + e.what());
    }

    if (c.corpus.empty()) throw InputError("config: corpus.path is not set (FIRE_CORPUS_PATH)");
    if (c.raters.empty()) throw InputError("config: corpus.raters is not set (FIRE_CORPUS_RATERS)");
    if (c.selection.k == 0) throw InputError("config: selection.k must be >= 1 (FIRE_SELECTION_K)");
    if (c.judge.kind != "synthetic" && c.judge.kind != "endpoint")
        throw InputError("config: judge.kind must be synthetic or endpoint, got '" + c.judge.kind + "'");
    if (c.threads == 0) throw InputError("config: run.threads must be >= 1");
    if (c.alignment.intervals < 2) throw InputError("config: alignment.intervals must be >= 2");
    if (!(c.integration.collapse_threshold > 0.99 && c.integration.collapse_threshold <= 1.0))
        throw InputError("config: integration.collapse_threshold must be in (0.99, 1]");
    try {
        c.selection.validate();
    } catch (const ArgumentError& e) {
        throw InputError(std::string("config: ") + e.what());
    }
    set_log_level(parse_log_level(get<std::string>(j, "run", "log_level")));
    return c;
}

namespace {

std::string rater_list(std::span<const RaterSpec> raters) {
    std::string out;
    for (const auto& r : raters) {
        if (!out.empty()) out += ',';
        out += r.id;
        if (r.polarity == Polarity::lower_is_better) out += ":lower";
    }
    return out;
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace

std::string config_to_json(const PipelineConfig& c) {
    ordered_json j = defaults_json();
    j["corpus"] = {{"path", c.corpus.string()}, {"raters", rater_list(c.raters)}};
    j["run"]["seed"] = c.seed;
    j["run"]["threads"] = c.threads;
    j["judge"] = {{"kind", c.judge.kind},
                  {"sigma", c.judge.sigma},
                  {"repeats", c.judge.repeats},
                  {"url", c.judge.endpoint.url},
                  {"model", c.judge.endpoint.model},
                  {"max_in_flight", c.judge.endpoint.max_in_flight},
                  {"retries", c.judge.endpoint.retries},
                  {"timeout_seconds", c.judge.endpoint.timeout_seconds},
                  {"cache", c.judge.endpoint.cache_path ? c.judge.endpoint.cache_path->string() : ""}};
    j["alignment"] = {{"intervals", c.alignment.intervals}, {"per_interval", c.alignment.per_interval}};
    j["integration"] = {{"kernel", to_string(c.integration.kernel)},
                        {"alpha", c.integration.alpha},
                        {"damping", c.integration.damping},
                        {"correlation_basis", to_string(c.integration.basis)},
                        {"correlation_sample", c.integration.correlation_sample},
                        {"collapse", c.integration.collapse},
                        {"collapse_threshold", c.integration.collapse_threshold}};
    j["selection"] = {{"mode", to_string(c.selection.mode)}, {"k", c.selection.k},       {"tau", c.selection.tau},
                      {"eta", c.selection.eta},               {"n_init", c.selection.n_init},
                      {"beta", c.selection.beta},             {"n_max", c.selection.n_max}};
    j["output"] = {{"dir", c.output.dir.string()},
                   {"profiles", c.output.profiles},
                   {"model", c.output.model},
                   {"manifest", c.output.manifest},
                   {"report", c.output.report}};
    return j.dump(2) + "\n";
}

StageSeeds stage_seeds(std::uint64_t root) {
    return {derive_seed(root, "stage/align"), derive_seed(root, "stage/integrate"), derive_seed(root, "stage/select")};
}

// ---------------------------------------------------------------------------
// Stages

AlignedView aligned_view(const Corpus& corpus, std::span<const RaterProfile> profiles, CorrelationBasis basis) {
    AlignedView v;
    v.aligned = align_corpus(corpus, profiles);
    std::vector<std::string> ids;
    for (const auto& p : profiles) {
        ids.push_back(p.rater_id);
        v.gamma.push_back(p.gamma);
    }
    v.basis = basis == CorrelationBasis::aligned ? v.aligned : normalized_raw(corpus, ids);
    return v;
}

std::string content_hash(std::string_view bytes) { return hex64(fnv1a(bytes)); }

SelectionManifest run_selection(const AlignedView& view, std::span<const std::string> doc_ids,
                                const IntegrationModel& model, const IntegrationParams& params,
                                const SelectionPlan& plan, ProgressiveTrace* trace, std::size_t threads) {
    plan.validate();
    SelectionManifest m;
    switch (plan.mode) {
    case SelectionMode::top_k: m = select_top_k(integrate(view.aligned, model), doc_ids, plan.k); break;
    case SelectionMode::sampled:
        m = sample_with_temperature(integrate(view.aligned, model), doc_ids, plan.k, plan.tau, plan.seed);
        break;
    case SelectionMode::progressive:
        m = progressive_select(view.aligned, view.basis, view.gamma, doc_ids, params, plan, trace, threads);
        break;
    }
    m.plan_hash = content_hash(plan_to_json(plan));
    m.model_hash = content_hash(model_to_json(model));
    return m;
}

// ---------------------------------------------------------------------------
// Artifacts

namespace {

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
    static std::atomic<unsigned> counter{0};
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
    return tmp;
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("write to '" + path.string() + "' failed");
}

} // namespace

void write_atomic(const std::filesystem::path& path, std::string_view content) {
    ArtifactSet set;
    set.stage(path, content);
    set.commit();
}

ArtifactSet::~ArtifactSet() {
    std::error_code ec;
    for (const auto& [tmp, final_path] : pending_) std::filesystem::remove(tmp, ec);
}

void ArtifactSet::stage(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = temp_sibling(path);
    pending_.emplace_back(tmp, path);
    write_file(tmp, content);
}

void ArtifactSet::commit() {
    for (const auto& [tmp, final_path] : pending_) {
        std::error_code ec;
        std::filesystem::rename(tmp, final_path, ec);
        if (ec) throw Error("cannot move '" + tmp.string() + "' to '" + final_path.string() + "': " + ec.message());
    }
    pending_.clear();
}

// ---------------------------------------------------------------------------
// Full pipeline

namespace {

template <class F>
auto in_stage(Stage stage, F&& f) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) { return json(v).dump(); }

} // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
    using clock = std::chrono::steady_clock;
    const StageSeeds seeds = stage_seeds(config.seed);
    ordered_json timings;

    auto t0 = clock::now();
    const Corpus corpus = in_stage(Stage::ingest, [&] {
        if (!std::filesystem::exists(config.corpus))
            throw InputError("corpus file '" + config.corpus.string() + "' does not exist");
        return ingest(config.corpus, config.raters);
    });
    timings["ingest"] = seconds_since(t0);
    log(LogLevel::info, "ingest", "corpus loaded",
        {{"path", config.corpus.string()}, {"documents", std::to_string(corpus.size())},
         {"raters", std::to_string(corpus.raters().size())}, {"seconds", fmt(timings["ingest"].get<double>())}});

    PipelineResult result;

    t0 = clock::now();
    result.profiles = in_stage(Stage::align, [&] {
        auto judge = make_judge(config.judge);
        AlignmentParams params = config.alignment;
        params.seed = seeds.align;
        params.threads = config.threads;
        return fit_profiles(corpus, *judge, params);
    });
    timings["align"] = seconds_since(t0);
    for (const auto& p : result.profiles)
        log(LogLevel::info, "align", "profile fitted", {{"rater", p.rater_id}, {"gamma", fmt(p.gamma)}});

    IntegrationParams iparams = config.integration;
    iparams.seed = seeds.integrate;

    t0 = clock::now();
    const AlignedView view =
        in_stage(Stage::integrate, [&] { return aligned_view(corpus, result.profiles, iparams.basis); });
    result.model = in_stage(Stage::integrate, [&] { return build_model(view.basis, view.gamma, iparams); });
    timings["integrate"] = seconds_since(t0);
    for (std::size_t j = 0; j < result.model.rater_ids.size(); ++j)
        log(LogLevel::info, "integrate", "weight",
            {{"rater", result.model.rater_ids[j]}, {"o", fmt(result.model.o[j])}, {"gamma", fmt(result.model.gamma[j])}});
    for (const auto& [dup, rep] : result.model.merged)
        log(LogLevel::warn, "integrate", "rater collapsed", {{"rater", dup}, {"into", rep}});

    SelectionPlan plan = config.selection;
    plan.seed = seeds.select;
    ProgressiveTrace trace;
    t0 = clock::now();
    const auto doc_ids = corpus.doc_ids();
    result.manifest = in_stage(Stage::select, [&] {
        return run_selection(view, doc_ids, result.model, iparams, plan, &trace, config.threads);
    });
    timings["select"] = seconds_since(t0);
    log(LogLevel::info, "select", "selection done",
        {{"mode", std::string(to_string(plan.mode))}, {"selected", std::to_string(result.manifest.size())},
         {"seconds", fmt(timings["select"].get<double>())}});

    const std::string profiles_text = profiles_to_json(result.profiles);
    const std::string model_text = model_to_json(result.model);
    std::ostringstream manifest_out;
    write_manifest(result.manifest, manifest_out);
    const std::string manifest_text = manifest_out.str();

    ordered_json report;
    report["seed"] = config.seed;
    report["stage_seeds"] = {{"align", seeds.align}, {"integrate", seeds.integrate}, {"select", seeds.select}};
    report["corpus"] = {{"path", config.corpus.string()},
                        {"documents", corpus.size()},
                        {"content_hash", hex64(corpus.content_hash())}};
    report["raters"] = rater_list(config.raters);
    report["rater_ids"] = result.model.rater_ids;
    report["o"] = result.model.o;
    report["gamma"] = result.model.gamma;
    report["merged"] = result.model.merged;
    report["plan"] = ordered_json::parse(plan_to_json(plan));
    report["selected"] = result.manifest.size();
    if (plan.mode == SelectionMode::progressive) {
        report["progressive"] = {{"working_sizes", trace.working_sizes},
                                 {"rounds", trace.rounds},
                                 {"passes", trace.passes()},
                                 {"degenerate_parts", trace.degenerate_parts}};
    }
    report["hashes"] = {{"profiles", content_hash(profiles_text)},
                        {"model", content_hash(model_text)},
                        {"manifest", content_hash(manifest_text)},
                        {"plan", result.manifest.plan_hash}};
    report["timings_seconds"] = timings;
    report["config"] = ordered_json::parse(config_to_json(config));
    result.report_json = report.dump(2) + "\n";

    in_stage(Stage::write, [&] {
        ArtifactSet set;
        set.stage(config.output.resolve(config.output.profiles), profiles_text);
        set.stage(config.output.resolve(config.output.model), model_text);
        set.stage(config.output.resolve(config.output.manifest), manifest_text);
        set.stage(config.output.resolve(config.output.report), result.report_json);
        set.commit();
        return 0;
    });
    log(LogLevel::info, "write", "artifacts written",
        {{"dir", config.output.dir.string()}, {"manifest_hash", content_hash(manifest_text)},
         {"model_hash", content_hash(model_text)}});
    return result;
}

// ---------------------------------------------------------------------------
// Inspect

namespace {

std::string read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

std::string inspect_profiles(const std::vector<RaterProfile>& all, const InspectOptions& opt) {
    std::vector<const RaterProfile*> profiles;
    for (const auto& p : all) {
        if (opt.rater.empty() || p.rater_id == opt.rater) profiles.push_back(&p);
    }
    if (profiles.empty()) throw InputError("profiles: no rater named '" + opt.rater + "'");

    std::ostringstream out;
    if (opt.curve_csv) {
        out << "rater_id,percentile,win_rate\n";
        for (const auto* p : profiles) {
            if (opt.resolution > 0) {
                for (std::size_t i = 0; i < opt.resolution; ++i) {
                    const double pct =
                        opt.resolution == 1 ? 50.0 : 100.0 * static_cast<double>(i) / static_cast<double>(opt.resolution - 1);
                    out << p->rater_id << ',' << fmt(pct) << ',' << fmt(p->curve(pct)) << '\n';
                }
            } else {
                for (const auto& k : p->curve.knots())
                    out << p->rater_id << ',' << fmt(k.percentile) << ',' << fmt(k.win_rate) << '\n';
            }
        }
        return out.str();
    }

    out << "profiles: " << profiles.size() << " rater(s)\n";
    out << pad("rater_id", 24) << pad("polarity", 10) << pad("gamma", 10) << "knots\n";
    for (const auto* p : profiles) {
        out << pad(p->rater_id, 24) << pad(std::string(to_string(p->polarity)), 10) << pad(fmt(p->gamma), 10)
            << p->curve.knots().size() << '\n';
    }
    for (const auto* p : profiles) {
        out << "\n" << p->rater_id << "\n  " << pad("percentile", 12) << "win_rate\n";
        for (const auto& k : p->curve.knots()) out << "  " << pad(fmt(k.percentile), 12) << fmt(k.win_rate) << '\n';
    }
    return out.str();
}

std::string inspect_model(const IntegrationModel& m) {
    std::ostringstream out;
    out << "model: " << m.rater_ids.size() << " rater(s), kernel=" << to_string(m.kernel) << " alpha=" << m.alpha
        << " damping=" << fmt(m.damping) << " basis=" << to_string(m.basis) << "\n";
    out << pad("rater_id", 24) << pad("o", 22) << pad("gamma", 12) << "o*gamma\n";
    double sumsq = 0.0;
    for (std::size_t j = 0; j < m.rater_ids.size(); ++j) {
        out << pad(m.rater_ids[j], 24) << pad(fmt(m.o[j]), 22) << pad(fmt(m.gamma[j]), 12) << fmt(m.o[j] * m.gamma[j])
            << '\n';
        sumsq += m.o[j] * m.o[j];
    }
    out << "sum of o^2: " << fmt(sumsq) << '\n';
    const std::size_t n = m.rater_ids.size();
    auto matrix = [&](const char* title, const std::vector<double>& w) {
        if (w.size() != n * n) return;
        out << '\n' << title << '\n' << pad("", 24);
        for (const auto& id : m.rater_ids) out << pad(id.substr(0, 11), 12);
        out << '\n';
        for (std::size_t i = 0; i < n; ++i) {
            out << pad(m.rater_ids[i], 24);
            for (std::size_t j = 0; j < n; ++j) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.6f", w[i * n + j]);
                out << pad(buf, 12);
            }
            out << '\n';
        }
    };
    matrix("orthogonality M", m.orthogonality);
    matrix("pearson r", m.correlations);
    for (const auto& [dup, rep] : m.merged) out << "merged: " << dup << " -> " << rep << '\n';
    return out.str();
}

std::string inspect_manifest(const SelectionManifest& m) {
    std::ostringstream out;
    out << "manifest: " << m.size() << " document(s)\n";
    if (m.entries.empty()) return out.str();
    double lo = m.entries.front().rating, hi = lo, sum = 0.0;
    for (const auto& e : m.entries) {
        lo = std::min(lo, e.rating);
        hi = std::max(hi, e.rating);
        sum += e.rating;
    }
    out << "integrated_rating: max=" << fmt(hi) << " min=" << fmt(lo)
        << " mean=" << fmt(sum / static_cast<double>(m.size())) << '\n';
    const std::size_t shown = std::min<std::size_t>(10, m.size());
    out << pad("rank", 6) << pad("id", 28) << "integrated_rating\n";
    for (std::size_t i = 0; i < shown; ++i)
        out << pad(std::to_string(i + 1), 6) << pad(m.entries[i].doc_id, 28) << fmt(m.entries[i].rating) << '\n';
    if (shown < m.size()) out << "... " << m.size() - shown << " more\n";
    return out.str();
}

std::string inspect_run_report(const json& r) {
    std::ostringstream out;
    out << "run report\n";
    out << "seed: " << r.at("seed").dump() << "  stage seeds: " << r.at("stage_seeds").dump() << '\n';
    out << "corpus: " << r.at("corpus").dump() << '\n';
    out << "plan: " << r.at("plan").dump() << '\n';
    out << pad("rater_id", 24) << pad("o", 22) << "gamma\n";
    const auto ids = r.at("rater_ids").get<std::vector<std::string>>();
    for (std::size_t j = 0; j < ids.size(); ++j)
        out << pad(ids[j], 24) << pad(r.at("o").at(j).dump(), 22) << r.at("gamma").at(j).dump() << '\n';
    if (r.contains("progressive")) out << "progressive: " << r["progressive"].dump() << '\n';
    out << "hashes: " << r.at("hashes").dump() << '\n';
    out << "timings_seconds: " << r.at("timings_seconds").dump() << '\n';
    return out.str();
}

std::string inspect_bench_report(const json& r) {
    std::ostringstream out;
    out << "bench report: scenario=" << r.at("scenario").get<std::string>() << " seeds=" << r.at("seeds").dump() << '\n';
    out << pad("variant", 24) << pad("precision@k", 14) << "mean_true_quality\n";
    for (const auto& m : r.at("means")) {
        char p[32], q[32];
        std::snprintf(p, sizeof p, "%.4f", m.at("precision_at_frac").get<double>());
        std::snprintf(q, sizeof q, "%.4f", m.at("mean_true_quality").get<double>());
        out << pad(m.at("variant").get<std::string>(), 24) << pad(p, 14) << q << '\n';
    }
    return out.str();
}

} // namespace

std::string inspect_artifact(const std::filesystem::path& path, const InspectOptions& options) {
    const std::string text = read_all(path);
    json j;
    bool whole = true;
    try {
        j = json::parse(text);
    } catch (const json::parse_error&) {
        whole = false;
    }

    try {
        if (whole && j.is_array() && (j.empty() || j.front().contains("knots")))
            return inspect_profiles(profiles_from_json(text), options);
        if (options.curve_csv) throw InputError("curve CSV needs a profiles artifact");
        if (whole && j.is_object() && j.contains("o") && j.contains("rater_ids") && j.contains("kernel"))
            return inspect_model(model_from_json(text));
        if (whole && j.is_object() && j.contains("stage_seeds")) return inspect_run_report(j);
        if (whole && j.is_object() && j.contains("means") && j.contains("scenario")) return inspect_bench_report(j);
        if (!whole || (j.is_object() && j.contains("integrated_rating"))) {
            std::istringstream in(text);
            return inspect_manifest(read_manifest(in));
        }
    } catch (const json::exception& e) {
        throw InputError("'" + path.string() + "': " + e.what());
    }
    throw InputError("'" + path.string() + "' is not a profiles, model, manifest or report artifact");
}

} // namespace fire
