// fire: command-line front end for alignment, integration, selection and the
// synthetic benchmark.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fire/log.hpp"
#include "fire/pipeline.hpp"
#include "fire/synthbench.hpp"
#include "json.hpp"

using namespace fire;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Runs `body` and maps failures to the stage's exit status.
template <class F>
int guarded(Stage stage, F&& body) {
    try {
        body();
        return 0;
    } catch (const StageError& e) {
        log(LogLevel::error, to_string(e.stage()), e.what());
        return exit_code(e.stage());
    } catch (const std::exception& e) {
        log(LogLevel::error, to_string(stage), e.what());
        return exit_code(stage);
    }
}

template <class F>
auto stage(Stage s, F&& f) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(s, e.what());
    }
}

struct JudgeOptions {
    JudgeConfig config;
    std::string cache;

    void add(CLI::App* cmd) {
        cmd->add_option("--judge", config.kind, "judge kind")->check(CLI::IsMember({"synthetic", "endpoint"}));
        cmd->add_option("--judge-sigma", config.sigma, "synthetic judge noise sigma");
        cmd->add_option("--judge-repeats", config.repeats, "votes per comparison (odd)");
        cmd->add_option("--endpoint-url", config.endpoint.url, "endpoint judge URL");
        cmd->add_option("--endpoint-model", config.endpoint.model, "model name sent to the endpoint");
        cmd->add_option("--max-in-flight", config.endpoint.max_in_flight, "concurrent endpoint requests");
        cmd->add_option("--retries", config.endpoint.retries, "endpoint retries per request");
        cmd->add_option("--timeout", config.endpoint.timeout_seconds, "endpoint timeout in seconds");
        cmd->add_option("--cache", cache, "endpoint verdict cache (JSONL)");
    }

    JudgeConfig resolved() const {
        JudgeConfig c = config;
        if (!cache.empty()) c.endpoint.cache_path = cache;
        return c;
    }
};

struct IntegrationOptions {
    IntegrationParams params;
    std::string kernel = "sym_gaussian";
    std::string basis = "aligned";
    bool no_collapse = false;

    void add(CLI::App* cmd) {
        cmd->add_option("--kernel", kernel, "orthogonality kernel")
            ->check(CLI::IsMember({"linear", "gaussian", "sym_gaussian"}));
        cmd->add_option("--alpha", params.alpha, "power iteration steps");
        cmd->add_option("--damping", params.damping, "damping factor d");
        cmd->add_option("--basis", basis, "ratings the correlations are computed on")
            ->check(CLI::IsMember({"aligned", "raw"}));
        cmd->add_option("--correlation-sample", params.correlation_sample, "rows sampled for correlations");
        cmd->add_option("--collapse-threshold", params.collapse_threshold, "|r| at which raters are merged");
        cmd->add_flag("--no-collapse", no_collapse, "keep fully correlated raters separate");
    }

    IntegrationParams resolved(std::uint64_t seed) const {
        IntegrationParams p = params;
        p.kernel = parse_kernel(kernel);
        p.basis = parse_basis(basis);
        p.collapse = !no_collapse;
        p.seed = seed;
        return p;
    }
};

std::vector<RaterSpec> raters_of(std::span<const RaterProfile> profiles) {
    std::vector<RaterSpec> out;
    for (const auto& p : profiles) out.push_back({p.rater_id, p.polarity});
    return out;
}

std::string manifest_text(const SelectionManifest& m) {
    std::ostringstream out;
    write_manifest(m, out);
    return out.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fire: align multiple quality raters, integrate them and select data"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "debug|info|warn|error")
        ->check(CLI::IsMember({"debug", "info", "warn", "error"}));

    int status = 0;

    // align ------------------------------------------------------------------
    auto* align = app.add_subcommand("align", "fit a win-rate curve per rater");
    std::string corpus_path, raters_arg;
    std::string align_out = "profiles.json", model_out = "model.json", manifest_out = "manifest.jsonl",
                bench_out, corpus_out = "corpus.jsonl";
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    AlignmentParams aparams;
    JudgeOptions judge_opts;
    align->add_option("--corpus", corpus_path, "corpus JSONL")->required();
    align->add_option("--raters", raters_arg, "comma list, id[:higher|:lower]")->required();
    align->add_option("--intervals", aparams.intervals, "percentile intervals");
    align->add_option("--per-interval", aparams.per_interval, "comparisons per interval");
    judge_opts.add(align);
    align->add_option("--seed", seed, "root seed");
    align->add_option("--threads", threads, "worker threads");
    align->add_option("--out", align_out, "profiles output");
    align->callback([&] {
        status = guarded(Stage::align, [&] {
            const auto raters = stage(Stage::config, [&] { return parse_rater_list(raters_arg); });
            const auto corpus = stage(Stage::ingest, [&] { return ingest(corpus_path, raters); });
            const auto profiles = stage(Stage::align, [&] {
                auto judge = make_judge(judge_opts.resolved());
                AlignmentParams p = aparams;
                p.seed = stage_seeds(seed).align;
                p.threads = threads;
                return fit_profiles(corpus, *judge, p);
            });
            stage(Stage::write, [&] {
                write_atomic(align_out, profiles_to_json(profiles));
                return 0;
            });
            for (const auto& p : profiles)
                log(LogLevel::info, "align", "profile fitted",
                    {{"rater", p.rater_id}, {"gamma", nlohmann::json(p.gamma).dump()}});
            log(LogLevel::info, "align", "wrote profiles", {{"path", align_out}});
        });
    });

    // integrate --------------------------------------------------------------
    auto* integ = app.add_subcommand("integrate", "build the orthogonality/reliability model");
    std::string profiles_path;
    IntegrationOptions iopts;
    integ->add_option("--corpus", corpus_path, "corpus JSONL")->required();
    integ->add_option("--profiles", profiles_path, "profiles from fire align")->required();
    iopts.add(integ);
    integ->add_option("--seed", seed, "root seed");
    integ->add_option("--out", model_out, "model output");
    integ->callback([&] {
        status = guarded(Stage::integrate, [&] {
            const auto profiles = stage(Stage::config, [&] { return profiles_from_json(read_file(profiles_path)); });
            const auto corpus = stage(Stage::ingest, [&] { return ingest(corpus_path, raters_of(profiles)); });
            const auto model = stage(Stage::integrate, [&] {
                const auto params = iopts.resolved(stage_seeds(seed).integrate);
                const auto view = aligned_view(corpus, profiles, params.basis);
                return build_model(view.basis, view.gamma, params);
            });
            stage(Stage::write, [&] {
                write_atomic(model_out, model_to_json(model));
                return 0;
            });
            log(LogLevel::info, "integrate", "wrote model", {{"path", model_out}});
        });
    });

    // select -----------------------------------------------------------------
    auto* sel = app.add_subcommand("select", "select k documents");
    std::string model_path, mode = "top-k";
    SelectionPlan plan;
    sel->add_option("--corpus", corpus_path, "corpus JSONL")->required();
    sel->add_option("--profiles", profiles_path, "profiles from fire align")->required();
    sel->add_option("--model", model_path, "model from fire integrate (default: rebuilt from the profiles)");
    iopts.add(sel);
    sel->add_option("--mode", mode, "selection mode")->check(CLI::IsMember({"top-k", "sampled", "progressive"}));
    sel->add_option("--k", plan.k, "documents to select")->required();
    sel->add_option("--tau", plan.tau, "sampling temperature");
    sel->add_option("--eta", plan.eta, "progressive: percent kept per reduction");
    sel->add_option("--n-init", plan.n_init, "progressive: initial parts");
    sel->add_option("--beta", plan.beta, "progressive: part growth factor");
    sel->add_option("--n-max", plan.n_max, "progressive: part cap");
    sel->add_option("--seed", seed, "root seed");
    sel->add_option("--threads", threads, "worker threads");
    sel->add_option("--out", manifest_out, "manifest output");
    sel->callback([&] {
        status = guarded(Stage::select, [&] {
            const auto profiles = stage(Stage::config, [&] { return profiles_from_json(read_file(profiles_path)); });
            const auto corpus = stage(Stage::ingest, [&] { return ingest(corpus_path, raters_of(profiles)); });
            const auto seeds = stage_seeds(seed);
            const auto params = stage(Stage::config, [&] { return iopts.resolved(seeds.integrate); });
            const auto view = stage(Stage::integrate, [&] { return aligned_view(corpus, profiles, params.basis); });
            const auto model = stage(Stage::integrate, [&] {
                return model_path.empty() ? build_model(view.basis, view.gamma, params)
                                          : model_from_json(read_file(model_path));
            });
            SelectionPlan p = plan;
            p.mode = parse_mode(mode);
            p.seed = seeds.select;
            ProgressiveTrace trace;
            const auto ids = corpus.doc_ids();
            const auto manifest =
                stage(Stage::select, [&] { return run_selection(view, ids, model, params, p, &trace, threads); });
            stage(Stage::write, [&] {
                write_atomic(manifest_out, manifest_text(manifest));
                return 0;
            });
            if (p.mode == SelectionMode::progressive)
                log(LogLevel::info, "select", "progressive",
                    {{"rounds", std::to_string(trace.rounds)}, {"passes", std::to_string(trace.passes())}});
            log(LogLevel::info, "select", "wrote manifest",
                {{"path", manifest_out}, {"selected", std::to_string(manifest.size())}});
        });
    });

    // bench ------------------------------------------------------------------
    auto* bench = app.add_subcommand("bench", "synthetic ablation benchmark");
    std::string scenario_path, variants_arg = "full,no_align,no_orth,no_rel,average,max_criteria,mix_criteria,progressive,single";
    std::size_t n_seeds = 10;
    bench->add_option("--scenario", scenario_path, "scenario JSON (default: built-in 4-rater scenario)");
    bench->add_option("--variants", variants_arg, "comma list of variants");
    bench->add_option("--seed", seed, "first seed");
    bench->add_option("--seeds", n_seeds, "number of consecutive seeds")->check(CLI::PositiveNumber);
    bench->add_option("--out", bench_out, "report JSON (optional)");
    bench->callback([&] {
        status = guarded(Stage::bench, [&] {
            const auto scenario = stage(Stage::config, [&] {
                return scenario_path.empty() ? synth::default_scenario() : synth::load_scenario(scenario_path);
            });
            std::vector<std::string> variants;
            std::stringstream ss(variants_arg);
            for (std::string v; std::getline(ss, v, ',');) {
                if (!v.empty()) variants.push_back(v);
            }
            std::vector<std::uint64_t> seeds;
            for (std::size_t i = 0; i < n_seeds; ++i) seeds.push_back(seed + i);
            log(LogLevel::info, "bench", "running",
                {{"scenario", scenario.name}, {"seeds", std::to_string(n_seeds)},
                 {"documents", std::to_string(scenario.latent.n_docs)}});
            const auto report = synth::run_benchmark(scenario, variants, seeds);
            std::cout << synth::report_table(report);
            if (!bench_out.empty()) {
                stage(Stage::write, [&] {
                    write_atomic(bench_out, synth::report_json(report));
                    return 0;
                });
                log(LogLevel::info, "bench", "wrote report", {{"path", bench_out}});
            }
        });
    });

    // generate ---------------------------------------------------------------
    auto* gen = app.add_subcommand("generate", "write a synthetic scored corpus");
    std::size_t n_docs = 0;
    gen->add_option("--scenario", scenario_path, "scenario JSON (default: built-in 4-rater scenario)");
    gen->add_option("--n-docs", n_docs, "documents (0: the scenario's count)");
    gen->add_option("--seed", seed, "generator seed");
    gen->add_option("--out", corpus_out, "corpus output");
    gen->callback([&] {
        status = guarded(Stage::bench, [&] {
            auto scenario = stage(Stage::config, [&] {
                return scenario_path.empty() ? synth::default_scenario() : synth::load_scenario(scenario_path);
            });
            if (n_docs > 0) scenario.latent.n_docs = n_docs;
            scenario.latent.seed = seed;
            const auto data = synth::generate(scenario.latent);
            std::ostringstream out;
            export_jsonl(data.corpus, out);
            stage(Stage::write, [&] {
                write_atomic(corpus_out, out.str());
                return 0;
            });
            std::string raters;
            for (const auto& r : scenario.latent.raters) raters += (raters.empty() ? "" : ",") + r.id;
            log(LogLevel::info, "generate", "wrote corpus",
                {{"path", corpus_out}, {"documents", std::to_string(data.corpus.size())}, {"raters", raters}});
        });
    });

    // inspect ----------------------------------------------------------------
    auto* insp = app.add_subcommand("inspect", "summarize an artifact");
    std::string artifact;
    InspectOptions iopt;
    insp->add_option("artifact", artifact, "profiles.json, model.json, manifest.jsonl or report.json")->required();
    insp->add_flag("--curve-csv", iopt.curve_csv, "emit win-rate curve points as CSV (profiles only)");
    insp->add_option("--resolution", iopt.resolution, "CSV: evaluate the curve at this many points instead of the knots");
    insp->add_option("--rater", iopt.rater, "restrict profile output to one rater");
    insp->callback([&] {
        status = guarded(Stage::inspect, [&] { std::cout << inspect_artifact(artifact, iopt); });
    });

    // run --------------------------------------------------------------------
    auto* run = app.add_subcommand("run", "align, integrate and select from one config");
    std::string config_path;
    bool print_config = false;
    run->add_option("--config", config_path, "config JSON; FIRE_<SECTION>_<KEY> variables override it");
    run->add_flag("--print-config", print_config, "print the effective config and exit");
    run->footer("Config defaults:\n" + default_config_json());
    run->callback([&] {
        status = guarded(Stage::config, [&] {
            const auto config = stage(Stage::config, [&] {
                return config_from_json(config_path.empty() ? std::string() : read_file(config_path),
                                        fire_environment());
            });
            if (print_config) {
                std::cout << config_to_json(config);
                return;
            }
            run_pipeline(config);
        });
    });

    app.parse_complete_callback([&] { set_log_level(parse_log_level(log_level)); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return status;
}
