#include "fire/synthbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "fire/error.hpp"
#include "fire/rng.hpp"
#include "json.hpp"

namespace fire::synth {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Distortion d) {
    switch (d) {
    case Distortion::identity: return "identity";
    case Distortion::cube: return "cube";
    case Distortion::exp: return "exp";
    case Distortion::logistic: return "logistic";
    }
    return "?";
}

Distortion parse_distortion(std::string_view s) {
    if (s == "identity") return Distortion::identity;
    if (s == "cube") return Distortion::cube;
    if (s == "exp") return Distortion::exp;
    if (s == "logistic") return Distortion::logistic;
    throw InputError("unknown distortion '" + std::string(s) + "'");
}

double apply(Distortion d, double x) {
    switch (d) {
    case Distortion::identity: return x;
    case Distortion::cube: return x * x * x;
    case Distortion::exp: return std::exp(x);
    case Distortion::logistic: return 1.0 / (1.0 + std::exp(-x));
    }
    return x;
}

void LatentSpec::validate() const {
    if (n_docs == 0) throw InputError("latent spec: n_docs must be >= 1");
    if (n_dims == 0) throw InputError("latent spec: n_dims must be >= 1");
    if (raters.empty()) throw InputError("latent spec: at least one rater is required");
    std::unordered_set<std::string> ids;
    for (const auto& r : raters) {
        if (!ids.insert(r.id).second) throw InputError("latent spec: duplicate rater '" + r.id + "'");
        if (r.weights.size() != n_dims)
            throw InputError("latent spec: rater '" + r.id + "' needs " + std::to_string(n_dims) + " weights");
        for (double w : r.weights) {
            if (!(w >= 0.0)) throw InputError("latent spec: rater '" + r.id + "' has a negative weight");
        }
        if (!(r.sigma >= 0.0)) throw InputError("latent spec: rater '" + r.id + "' has negative sigma");
    }
}

SyntheticCorpus generate(const LatentSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const std::size_t width = std::max<std::size_t>(7, std::to_string(spec.n_docs).size());

    std::vector<Document> docs(spec.n_docs);
    std::vector<double> truth(spec.n_docs);
    std::vector<double> dims(spec.n_dims);
    for (std::size_t i = 0; i < spec.n_docs; ++i) {
        for (auto& z : dims) z = rng.normal();
        truth[i] = std::accumulate(dims.begin(), dims.end(), 0.0) / static_cast<double>(spec.n_dims);

        auto& d = docs[i];
        const auto num = std::to_string(i);
        d.doc_id = "doc-" + std::string(width - std::min(width, num.size()), '0') + num;
        d.text = "synthetic document " + std::to_string(i);
        d.latent_quality = truth[i];
        for (const auto& r : spec.raters) {
            double s = 0.0;
            for (std::size_t k = 0; k < spec.n_dims; ++k) s += r.weights[k] * dims[k];
            if (r.sigma > 0.0) s += r.sigma * rng.normal(); // noiseless raters draw nothing
            d.raw_scores[r.id] = apply(r.distortion, s);
        }
    }
    std::vector<RaterSpec> raters;
    for (const auto& r : spec.raters) raters.push_back({r.id, Polarity::higher_is_better});
    return {Corpus(std::move(docs), std::move(raters)), std::move(truth)};
}

Metrics evaluate(const SelectionManifest& manifest, const Corpus& corpus, std::span<const double> truth,
                 double k_frac) {
    if (truth.size() != corpus.size()) throw ArgumentError("evaluate: truth and corpus differ in size");
    if (!(k_frac > 0.0 && k_frac <= 1.0)) throw ArgumentError("evaluate: k_frac must be in (0, 1]");
    if (manifest.entries.empty()) throw ArgumentError("evaluate: empty manifest");

    const auto ids = corpus.doc_ids();
    const auto top_n = static_cast<std::size_t>(std::ceil(k_frac * static_cast<double>(corpus.size())));
    const auto order = rank_order(truth, ids);
    std::vector<bool> in_top(corpus.size(), false);
    for (std::size_t i = 0; i < top_n; ++i) in_top[order[i]] = true;

    Metrics m;
    std::size_t hits = 0;
    for (const auto& e : manifest.entries) {
        const auto idx = corpus.index_of(e.doc_id);
        if (!idx) throw ArgumentError("evaluate: unknown doc_id '" + e.doc_id + "'");
        hits += in_top[*idx] ? 1 : 0;
        m.mean_true_quality += truth[*idx];
    }
    const auto n = static_cast<double>(manifest.entries.size());
    m.mean_true_quality /= n;
    m.precision_at_frac = static_cast<double>(hits) / n;
    return m;
}

Scenario default_scenario() {
    Scenario s;
    s.name = "default";
    s.latent.n_docs = 100000;
    s.latent.n_dims = 4;
    s.latent.seed = 0;
    // writing_style and facts_trivia share most of their signal (dims 0-1);
    // expertise and educational each lean on one dimension of their own.
    s.latent.raters = {
        {"writing_style", {1.0, 0.828, 0.143, 0.143}, 1.182, Distortion::identity},
        {"facts_trivia", {0.335, 0.404, 0.029, 0.029}, 0.411, Distortion::exp},
        {"expertise", {0.317, 0.317, 1.0, 0.3}, 0.654, Distortion::cube},
        {"educational", {0.317, 0.317, 0.4, 1.0}, 1.102, Distortion::logistic},
    };
    s.judge_sigma = 0.25;
    s.alignment.intervals = 10;
    s.alignment.per_interval = 1000;
    s.k_frac = 0.1;
    s.progressive.mode = SelectionMode::progressive;
    return s;
}

namespace {

template <class T>
void read_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

Scenario scenario_from_json(std::string_view text) {
    Scenario s = default_scenario();
    try {
        const auto j = json::parse(text);
        if (!j.is_object()) throw InputError("scenario must be a JSON object");
        read_if(j, "name", s.name);
        read_if(j, "judge_sigma", s.judge_sigma);
        read_if(j, "k_frac", s.k_frac);
        if (j.contains("latent")) {
            const auto& l = j["latent"];
            read_if(l, "n_docs", s.latent.n_docs);
            read_if(l, "n_dims", s.latent.n_dims);
            read_if(l, "seed", s.latent.seed);
            if (l.contains("raters")) {
                s.latent.raters.clear();
                for (const auto& r : l["raters"]) {
                    SyntheticRater rater;
                    rater.id = r.at("id").get<std::string>();
                    rater.weights = r.at("weights").get<std::vector<double>>();
                    read_if(r, "sigma", rater.sigma);
                    if (r.contains("distortion")) rater.distortion = parse_distortion(r["distortion"].get<std::string>());
                    s.latent.raters.push_back(std::move(rater));
                }
            }
        }
        if (j.contains("alignment")) {
            const auto& a = j["alignment"];
            read_if(a, "intervals", s.alignment.intervals);
            read_if(a, "per_interval", s.alignment.per_interval);
        }
        if (j.contains("integration")) {
            const auto& i = j["integration"];
            if (i.contains("kernel")) s.integration.kernel = parse_kernel(i["kernel"].get<std::string>());
            read_if(i, "alpha", s.integration.alpha);
            read_if(i, "damping", s.integration.damping);
            if (i.contains("correlation_basis"))
                s.integration.basis = parse_basis(i["correlation_basis"].get<std::string>());
            read_if(i, "correlation_sample", s.integration.correlation_sample);
            read_if(i, "collapse", s.integration.collapse);
            read_if(i, "collapse_threshold", s.integration.collapse_threshold);
        }
        if (j.contains("progressive")) {
            const auto& p = j["progressive"];
            read_if(p, "eta", s.progressive.eta);
            read_if(p, "n_init", s.progressive.n_init);
            read_if(p, "beta", s.progressive.beta);
            read_if(p, "n_max", s.progressive.n_max);
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("scenario: ") + e.what());
    }
    s.latent.validate();
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open scenario '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return scenario_from_json(buf.str());
}

std::string scenario_to_json(const Scenario& s) {
    ordered_json j;
    j["name"] = s.name;
    j["judge_sigma"] = s.judge_sigma;
    j["k_frac"] = s.k_frac;
    auto raters = ordered_json::array();
    for (const auto& r : s.latent.raters) {
        raters.push_back(
            {{"id", r.id}, {"weights", r.weights}, {"sigma", r.sigma}, {"distortion", to_string(r.distortion)}});
    }
    j["latent"] = {{"n_docs", s.latent.n_docs}, {"n_dims", s.latent.n_dims}, {"seed", s.latent.seed},
                   {"raters", raters}};
    j["alignment"] = {{"intervals", s.alignment.intervals}, {"per_interval", s.alignment.per_interval}};
    j["integration"] = {{"kernel", to_string(s.integration.kernel)},
                        {"alpha", s.integration.alpha},
                        {"damping", s.integration.damping},
                        {"correlation_basis", to_string(s.integration.basis)},
                        {"correlation_sample", s.integration.correlation_sample},
                        {"collapse", s.integration.collapse},
                        {"collapse_threshold", s.integration.collapse_threshold}};
    j["progressive"] = {{"eta", s.progressive.eta},
                        {"n_init", s.progressive.n_init},
                        {"beta", s.progressive.beta},
                        {"n_max", s.progressive.n_max}};
    return j.dump(2) + "\n";
}

std::vector<std::string> all_variants() {
    return {"full", "no_align", "no_orth", "no_rel", "average", "max_criteria", "mix_criteria", "progressive", "single"};
}

std::vector<ReportRow> AblationReport::means() const {
    std::vector<ReportRow> out;
    std::vector<std::size_t> counts;
    for (const auto& row : rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const ReportRow& r) { return r.variant == row.variant; });
        if (it == out.end()) {
            out.push_back({row.variant, 0, {}, row.selected});
            counts.push_back(0);
            it = out.end() - 1;
        }
        const auto idx = static_cast<std::size_t>(it - out.begin());
        it->metrics.mean_true_quality += row.metrics.mean_true_quality;
        it->metrics.precision_at_frac += row.metrics.precision_at_frac;
        ++counts[idx];
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].metrics.mean_true_quality /= static_cast<double>(counts[i]);
        out[i].metrics.precision_at_frac /= static_cast<double>(counts[i]);
    }
    return out;
}

std::vector<double> AblationReport::precisions(std::string_view variant) const {
    std::vector<double> out;
    for (const auto& row : rows) {
        if (row.variant == variant) out.push_back(row.metrics.precision_at_frac);
    }
    return out;
}

AblationReport run_ablation(const Scenario& scenario, std::span<const std::string> variants, std::uint64_t seed) {
    const auto known = all_variants();
    for (const auto& v : variants) {
        if (std::find(known.begin(), known.end(), v) == known.end())
            throw InputError("unknown ablation variant '" + v + "'");
    }

    LatentSpec spec = scenario.latent;
    spec.seed = derive_seed(seed, "bench/generate");
    const auto data = generate(spec);
    const Corpus& corpus = data.corpus;
    const auto ids = corpus.doc_ids();

    SyntheticJudge judge(scenario.judge_sigma);
    AlignmentParams align = scenario.alignment;
    align.seed = derive_seed(seed, "bench/align");
    const auto profiles = fit_profiles(corpus, judge, align);

    std::vector<std::string> rater_ids;
    std::vector<double> gamma;
    for (const auto& p : profiles) {
        rater_ids.push_back(p.rater_id);
        gamma.push_back(p.gamma);
    }
    const auto aligned = align_corpus(corpus, profiles);
    const auto raw = normalized_raw(corpus, rater_ids);

    IntegrationParams integ = scenario.integration;
    integ.seed = derive_seed(seed, "bench/integrate");
    const auto k = static_cast<std::size_t>(std::llround(scenario.k_frac * static_cast<double>(corpus.size())));
    if (k == 0) throw InputError("scenario: k_frac * n_docs rounds to zero");

    const auto& basis = integ.basis == CorrelationBasis::aligned ? aligned : raw;

    AblationReport report;
    report.scenario = scenario.name;
    report.seeds = {seed};
    auto record = [&](const std::string& name, const SelectionManifest& m) {
        report.rows.push_back({name, seed, evaluate(m, corpus, data.truth, scenario.k_frac), m.size()});
    };

    for (const auto& v : variants) {
        if (v == "full") {
            const auto model = build_model(basis, gamma, integ);
            record(v, select_top_k(integrate(aligned, model), ids, k));
        } else if (v == "no_align") {
            const auto model = build_model(raw, gamma, integ);
            record(v, select_top_k(integrate(raw, model), ids, k));
        } else if (v == "no_orth") {
            IntegrationModel model;
            model.rater_ids = rater_ids;
            model.gamma = gamma;
            model.o.assign(rater_ids.size(), 1.0 / std::sqrt(static_cast<double>(rater_ids.size())));
            record(v, select_top_k(integrate(aligned, model), ids, k));
        } else if (v == "no_rel") {
            const std::vector<double> ones(rater_ids.size(), 1.0);
            const auto model = build_model(basis, ones, integ);
            record(v, select_top_k(integrate(aligned, model), ids, k));
        } else if (v == "average") {
            record(v, baseline_select(raw, ids, BaselineMethod::average, k, derive_seed(seed, "bench/average")));
        } else if (v == "max_criteria") {
            record(v, baseline_select(aligned, ids, BaselineMethod::max_criteria, k, derive_seed(seed, "bench/max")));
        } else if (v == "mix_criteria") {
            record(v, baseline_select(raw, ids, BaselineMethod::mix_criteria, k, derive_seed(seed, "bench/mix")));
        } else if (v == "progressive") {
            SelectionPlan plan = scenario.progressive;
            plan.mode = SelectionMode::progressive;
            plan.k = k;
            plan.seed = derive_seed(seed, "bench/progressive");
            record(v, progressive_select(aligned, basis, gamma, ids, integ, plan));
        } else if (v == "single") {
            for (std::size_t j = 0; j < rater_ids.size(); ++j)
                record("single:" + rater_ids[j], select_top_k(raw.columns[j], ids, k));
        }
    }
    return report;
}

AblationReport run_benchmark(const Scenario& scenario, std::span<const std::string> variants,
                             std::span<const std::uint64_t> seeds) {
    AblationReport out;
    out.scenario = scenario.name;
    for (auto seed : seeds) {
        auto one = run_ablation(scenario, variants, seed);
        out.seeds.push_back(seed);
        out.rows.insert(out.rows.end(), one.rows.begin(), one.rows.end());
    }
    return out;
}

std::string report_table(const AblationReport& report) {
    const auto rows = report.means();
    std::size_t width = 7;
    for (const auto& r : rows) width = std::max(width, r.variant.size());
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-*s  %12s  %17s  %9s\n", static_cast<int>(width), "variant", "precision@k",
                  "mean_true_quality", "selected");
    out << line;
    out << std::string(width + 46, '-') << '\n';
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-*s  %12.4f  %17.4f  %9zu\n", static_cast<int>(width), r.variant.c_str(),
                      r.metrics.precision_at_frac, r.metrics.mean_true_quality, r.selected);
        out << line;
    }
    out << "(means over " << report.seeds.size() << " seed" << (report.seeds.size() == 1 ? "" : "s") << ")\n";
    return out.str();
}

std::string report_json(const AblationReport& report) {
    ordered_json j;
    j["scenario"] = report.scenario;
    j["seeds"] = report.seeds;
    auto rows = ordered_json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"variant", r.variant},
                        {"seed", r.seed},
                        {"precision_at_frac", r.metrics.precision_at_frac},
                        {"mean_true_quality", r.metrics.mean_true_quality},
                        {"selected", r.selected}});
    }
    j["rows"] = rows;
    auto means = ordered_json::array();
    for (const auto& r : report.means()) {
        means.push_back({{"variant", r.variant},
                         {"precision_at_frac", r.metrics.precision_at_frac},
                         {"mean_true_quality", r.metrics.mean_true_quality}});
    }
    j["means"] = means;
    return j.dump(2) + "\n";
}

} // namespace fire::synth
