#include "fire/integration.hpp"

#include <algorithm>
#include <cmath>

#include "fire/error.hpp"
#include "fire/rng.hpp"
#include "json.hpp"

namespace fire {

std::string_view to_string(Kernel k) {
    switch (k) {
    case Kernel::linear: return "linear";
    case Kernel::gaussian: return "gaussian";
    case Kernel::sym_gaussian: return "sym_gaussian";
    }
    return "?";
}

Kernel parse_kernel(std::string_view s) {
    if (s == "linear") return Kernel::linear;
    if (s == "gaussian") return Kernel::gaussian;
    if (s == "sym_gaussian" || s == "sym-gaussian") return Kernel::sym_gaussian;
    throw InputError("unknown kernel '" + std::string(s) + "' (expected linear|gaussian|sym_gaussian)");
}

std::string_view to_string(CorrelationBasis b) { return b == CorrelationBasis::raw ? "raw" : "aligned"; }

CorrelationBasis parse_basis(std::string_view s) {
    if (s == "raw") return CorrelationBasis::raw;
    if (s == "aligned") return CorrelationBasis::aligned;
    throw InputError("unknown correlation basis '" + std::string(s) + "' (expected raw|aligned)");
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw ArgumentError("pearson: length mismatch");
    const std::size_t n = xs.size();
    if (n < 2) throw ArgumentError("pearson: need at least 2 values");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateError("pearson: constant vector has no correlation");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double orthogonality(double r, Kernel kernel) {
    if (!(std::abs(r) <= 1.0)) throw ArgumentError("orthogonality: |r| must be <= 1");
    const double a = std::abs(r);
    switch (kernel) {
    case Kernel::linear: return 0.5 * (1.0 - a);
    case Kernel::gaussian: return std::exp2(-r * r) - 0.5;
    case Kernel::sym_gaussian: return (1.5 - a) - std::exp2(-r * r);
    }
    throw ArgumentError("orthogonality: unknown kernel");
}

OrthogonalityGraph graph_from_weights(std::vector<std::string> rater_ids, std::vector<double> weights, Kernel kernel) {
    const std::size_t n = rater_ids.size();
    if (weights.size() != n * n) throw ArgumentError("orthogonality graph: weight matrix is not n x n");
    for (std::size_t i = 0; i < n; ++i) {
        weights[i * n + i] = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double w = weights[i * n + j];
            if (!(w >= 0.0 && w <= 0.5)) throw ArgumentError("orthogonality graph: weight outside [0, 0.5]");
            if (w != weights[j * n + i]) throw ArgumentError("orthogonality graph: weights not symmetric");
        }
    }
    OrthogonalityGraph g;
    g.rater_ids = std::move(rater_ids);
    g.weights = std::move(weights);
    g.correlations.assign(n * n, 0.0);
    g.kernel = kernel;
    return g;
}

OrthogonalityGraph build_graph(const RatingMatrix& ratings, Kernel kernel) {
    const std::size_t n = ratings.cols();
    if (n < 2) throw ArgumentError("build_graph: need at least 2 raters");
    if (ratings.rows() < 2) throw ArgumentError("build_graph: need at least 2 rows");

    OrthogonalityGraph g;
    g.rater_ids = ratings.rater_ids;
    g.kernel = kernel;
    g.weights.assign(n * n, 0.0);
    g.correlations.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        g.correlations[i * n + i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double r;
            try {
                r = pearson(ratings.columns[i], ratings.columns[j]);
            } catch (const DegenerateError&) {
                const auto& which = std::all_of(ratings.columns[i].begin(), ratings.columns[i].end(),
                                                [&](double v) { return v == ratings.columns[i][0]; })
                                        ? ratings.rater_ids[i]
                                        : ratings.rater_ids[j];
                throw DegenerateError("build_graph: rater '" + which + "' has constant ratings");
            }
            const double w = orthogonality(r, kernel);
            g.correlations[i * n + j] = g.correlations[j * n + i] = r;
            g.weights[i * n + j] = g.weights[j * n + i] = w;
        }
    }
    return g;
}

CollapseResult collapse_correlated(const OrthogonalityGraph& graph, const RatingMatrix& ratings, double threshold) {
    if (!(threshold > 0.99 && threshold <= 1.0)) throw ArgumentError("collapse threshold must be in (0.99, 1]");
    const std::size_t n = graph.size();
    if (ratings.rater_ids != graph.rater_ids) throw ArgumentError("collapse: matrix and graph raters differ");

    std::vector<std::size_t> by_id(n);
    for (std::size_t i = 0; i < n; ++i) by_id[i] = i;
    std::sort(by_id.begin(), by_id.end(),
              [&](std::size_t a, std::size_t b) { return graph.rater_ids[a] < graph.rater_ids[b]; });

    std::vector<bool> absorbed(n, false);
    CollapseResult out;
    for (std::size_t a = 0; a < n; ++a) {
        const std::size_t rep = by_id[a];
        if (absorbed[rep]) continue;
        for (std::size_t b = a + 1; b < n; ++b) {
            const std::size_t other = by_id[b];
            if (!absorbed[other] && std::abs(graph.correlation(rep, other)) >= threshold) {
                absorbed[other] = true;
                out.merged.emplace(graph.rater_ids[other], graph.rater_ids[rep]);
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!absorbed[i]) out.survivors.push_back(i);
    }

    if (out.merged.empty()) {
        out.graph = graph;
    } else if (out.survivors.size() == 1) {
        out.single_survivor = true;
        out.graph.rater_ids = {graph.rater_ids[out.survivors[0]]};
        out.graph.weights = {0.0};
        out.graph.correlations = {1.0};
        out.graph.kernel = graph.kernel;
    } else {
        out.graph = build_graph(ratings.select_columns(out.survivors), graph.kernel);
    }
    return out;
}

std::vector<double> degree_centrality(const OrthogonalityGraph& graph) {
    const std::size_t n = graph.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) out[i] += graph.weight(i, j);
    }
    return out;
}

namespace {

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace

std::vector<double> power_iterate(const OrthogonalityGraph& graph, int alpha, double damping) {
    if (alpha < 0) throw ArgumentError("power_iterate: alpha must be >= 0");
    if (!(damping > 0.0 && damping <= 1.0)) throw ArgumentError("power_iterate: damping must be in (0, 1]");
    const std::size_t n = graph.size();
    if (n == 0) throw ArgumentError("power_iterate: empty graph");

    std::vector<double> o = degree_centrality(graph);
    if (norm2(o) == 0.0)
        throw DegenerateError("orthogonality graph has no positive edge: raters are fully correlated "
                              "and should be collapsed into one");

    const bool renormalize = damping == 1.0;
    std::vector<double> next(n);
    for (int step = 0; step < alpha; ++step) {
        if (renormalize) {
            const double s = norm2(o);
            for (double& x : o) x /= s;
        }
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += graph.weight(i, j) * o[j];
            next[i] = damping * acc + (1.0 - damping);
        }
        o.swap(next);
        if (norm2(o) == 0.0) throw DegenerateError("power iteration collapsed to the zero vector");
    }
    const double s = norm2(o);
    for (double& x : o) x /= s;
    return o;
}

double integrated_rating(std::span<const double> aligned_row, const IntegrationModel& model) {
    const std::size_t n = model.rater_ids.size();
    if (aligned_row.size() != n || model.o.size() != n || model.gamma.size() != n)
        throw ArgumentError("integrated_rating: dimension mismatch");
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += aligned_row[j] * model.o[j] * model.gamma[j];
    return acc;
}

std::vector<double> integrate(const RatingMatrix& aligned, const IntegrationModel& model) {
    const std::size_t n = model.rater_ids.size();
    if (model.o.size() != n || model.gamma.size() != n) throw ArgumentError("integrate: malformed model");
    std::vector<const std::vector<double>*> cols;
    for (std::size_t j = 0; j < n; ++j) {
        auto it = std::find(aligned.rater_ids.begin(), aligned.rater_ids.end(), model.rater_ids[j]);
        if (it == aligned.rater_ids.end())
            throw ArgumentError("integrate: no ratings for rater '" + model.rater_ids[j] + "'");
        cols.push_back(&aligned.columns[static_cast<std::size_t>(it - aligned.rater_ids.begin())]);
    }
    std::vector<double> out(aligned.rows(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += (*cols[j])[i] * model.o[j] * model.gamma[j];
        out[i] = acc;
    }
    return out;
}

IntegrationModel build_model(const RatingMatrix& basis, std::span<const double> gamma, const IntegrationParams& params) {
    if (gamma.size() != basis.cols()) throw ArgumentError("build_model: gamma size differs from rater count");

    RatingMatrix sample;
    const RatingMatrix* source = &basis;
    if (params.correlation_sample > 0 && basis.rows() > params.correlation_sample) {
        const auto rows = sample_reference(basis.rows(), params.correlation_sample,
                                           derive_seed(params.seed, "integrate/correlation-sample"));
        sample = basis.select_rows(rows);
        source = &sample;
    }

    IntegrationModel model;
    model.alpha = params.alpha;
    model.damping = params.damping;
    model.kernel = params.kernel;
    model.basis = params.basis;

    if (basis.cols() == 1) {
        model.rater_ids = basis.rater_ids;
        model.o = {1.0};
        model.gamma = {gamma[0]};
        return model;
    }

    auto graph = build_graph(*source, params.kernel);
    std::vector<std::size_t> survivors(basis.cols());
    for (std::size_t j = 0; j < survivors.size(); ++j) survivors[j] = j;
    if (params.collapse) {
        auto collapsed = collapse_correlated(graph, *source, params.collapse_threshold);
        survivors = collapsed.survivors;
        model.merged = collapsed.merged;
        graph = std::move(collapsed.graph);
    }

    for (auto s : survivors) {
        model.rater_ids.push_back(basis.rater_ids[s]);
        model.gamma.push_back(gamma[s]);
    }
    if (survivors.size() > 1) {
        model.orthogonality = graph.weights;
        model.correlations = graph.correlations;
    }
    model.o = survivors.size() == 1 ? std::vector<double>{1.0} : power_iterate(graph, params.alpha, params.damping);
    return model;
}

IntegrationModel build_model(const RatingMatrix& basis, std::span<const RaterProfile> profiles,
                             const IntegrationParams& params) {
    if (profiles.size() != basis.cols()) throw ArgumentError("build_model: profile count differs from rater count");
    std::vector<double> gamma;
    for (std::size_t j = 0; j < profiles.size(); ++j) {
        if (profiles[j].rater_id != basis.rater_ids[j])
            throw ArgumentError("build_model: profile order differs from rating columns");
        gamma.push_back(profiles[j].gamma);
    }
    return build_model(basis, gamma, params);
}

std::string model_to_json(const IntegrationModel& model) {
    nlohmann::ordered_json j;
    j["rater_ids"] = model.rater_ids;
    j["o"] = model.o;
    j["gamma"] = model.gamma;
    j["alpha"] = model.alpha;
    j["damping"] = model.damping;
    j["kernel"] = to_string(model.kernel);
    j["correlation_basis"] = to_string(model.basis);
    j["merged"] = model.merged;
    j["orthogonality"] = model.orthogonality;
    j["correlations"] = model.correlations;
    return j.dump(2) + "\n";
}

IntegrationModel model_from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        IntegrationModel m;
        m.rater_ids = j.at("rater_ids").get<std::vector<std::string>>();
        m.o = j.at("o").get<std::vector<double>>();
        m.gamma = j.at("gamma").get<std::vector<double>>();
        m.alpha = j.at("alpha").get<int>();
        m.damping = j.at("damping").get<double>();
        m.kernel = parse_kernel(j.at("kernel").get<std::string>());
        m.basis = parse_basis(j.at("correlation_basis").get<std::string>());
        if (j.contains("merged")) m.merged = j["merged"].get<std::map<std::string, std::string>>();
        if (j.contains("orthogonality")) m.orthogonality = j["orthogonality"].get<std::vector<double>>();
        if (j.contains("correlations")) m.correlations = j["correlations"].get<std::vector<double>>();
        const std::size_t n = m.rater_ids.size();
        if (!m.orthogonality.empty() && m.orthogonality.size() != n * n)
            throw InputError("model: orthogonality is not rater_count squared");
        if (!m.correlations.empty() && m.correlations.size() != n * n)
            throw InputError("model: correlations is not rater_count squared");
        if (m.o.size() != m.rater_ids.size() || m.gamma.size() != m.rater_ids.size())
            throw InputError("model: vector lengths differ from rater count");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("model: ") + e.what());
    }
}

} // namespace fire
