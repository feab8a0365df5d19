#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fire/alignment.hpp"
#include "fire/matrix.hpp"

namespace fire {

/// Maps a correlation coefficient to an orthogonality in [0, 0.5]; every
/// kernel gives 0.5 at r = 0 and 0 at |r| = 1.
enum class Kernel { linear, gaussian, sym_gaussian };

/// Which ratings feed the rater-to-rater correlations.
enum class CorrelationBasis { raw, aligned };

std::string_view to_string(Kernel k);
Kernel parse_kernel(std::string_view s);
std::string_view to_string(CorrelationBasis b);
CorrelationBasis parse_basis(std::string_view s);

/// Pearson correlation. Throws DegenerateError if either vector is constant.
double pearson(std::span<const double> xs, std::span<const double> ys);

/// linear:       (1 - |r|) / 2
/// gaussian:     2^(-r^2) - 1/2
/// sym_gaussian: (3/2 - |r|) - 2^(-r^2)
/// 2^(-r^2) is exp(-r^2 / (2 c^2)) with c^2 = 1 / (2 ln 2).
double orthogonality(double r, Kernel kernel);

/// Complete graph over raters; weights[i * n + j] = O(i, j).
struct OrthogonalityGraph {
    std::vector<std::string> rater_ids;
    std::vector<double> weights;
    std::vector<double> correlations;
    Kernel kernel = Kernel::sym_gaussian;

    std::size_t size() const { return rater_ids.size(); }
    double weight(std::size_t i, std::size_t j) const { return weights[i * size() + j]; }
    double correlation(std::size_t i, std::size_t j) const { return correlations[i * size() + j]; }
};

/// Builds the graph from already-known edge weights (zero diagonal is
/// enforced; symmetry and [0, 0.5] range are validated).
OrthogonalityGraph graph_from_weights(std::vector<std::string> rater_ids, std::vector<double> weights,
                                      Kernel kernel);

/// Needs >= 2 raters, >= 2 rows and no constant column.
OrthogonalityGraph build_graph(const RatingMatrix& ratings, Kernel kernel);

struct CollapseResult {
    OrthogonalityGraph graph;
    std::vector<std::size_t> survivors;           ///< column indices kept, input order
    std::map<std::string, std::string> merged;    ///< duplicate id -> representative id
    bool single_survivor = false;
};

/// Merges raters whose |r| >= threshold into one representative, the
/// lexicographically smallest id of the group, and rebuilds the graph on the
/// survivors. When only one rater survives the returned graph has one vertex
/// and `single_survivor` is set.
CollapseResult collapse_correlated(const OrthogonalityGraph& graph, const RatingMatrix& ratings, double threshold);

/// Row sums of M, i.e. o^(0) = M 1.
std::vector<double> degree_centrality(const OrthogonalityGraph& graph);

/// o = M^alpha M 1 normalized to unit L2 norm (damping = 1), or the damped
/// recursion o <- d M o + (1 - d) 1 for damping < 1. With damping = 1 the
/// iterate is renormalized after every multiplication.
std::vector<double> power_iterate(const OrthogonalityGraph& graph, int alpha, double damping = 1.0);

/// Everything needed to score a document: I(x) = sum_j A_j(x) o_j gamma_j.
struct IntegrationModel {
    std::vector<std::string> rater_ids;
    std::vector<double> o;
    std::vector<double> gamma;
    int alpha = 50;
    double damping = 1.0;
    Kernel kernel = Kernel::sym_gaussian;
    CorrelationBasis basis = CorrelationBasis::aligned;
    std::map<std::string, std::string> merged;
    /// Survivor-by-survivor M and Pearson r, row-major; empty for one rater.
    std::vector<double> orthogonality;
    std::vector<double> correlations;
};

double integrated_rating(std::span<const double> aligned_row, const IntegrationModel& model);

/// Integrated rating for every row; matrix columns are matched to the model
/// by rater id, so extra (e.g. collapsed) columns are ignored.
std::vector<double> integrate(const RatingMatrix& aligned, const IntegrationModel& model);

struct IntegrationParams {
    Kernel kernel = Kernel::sym_gaussian;
    int alpha = 50;
    double damping = 1.0;
    CorrelationBasis basis = CorrelationBasis::aligned;
    std::size_t correlation_sample = 100000;
    bool collapse = true;
    double collapse_threshold = 0.999;
    std::uint64_t seed = 0;
};

/// Correlations on `basis` (row-sampled to params.correlation_sample), then
/// optional collapse, then power iteration. `gamma` is matched to
/// basis.rater_ids by position.
IntegrationModel build_model(const RatingMatrix& basis, std::span<const double> gamma, const IntegrationParams& params);

/// Convenience: gammas taken from profiles (same order as basis columns).
IntegrationModel build_model(const RatingMatrix& basis, std::span<const RaterProfile> profiles,
                             const IntegrationParams& params);

std::string model_to_json(const IntegrationModel& model);
IntegrationModel model_from_json(std::string_view text);

} // namespace fire
