#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "shapesig/descriptor.hpp"
#include "shapesig/mesh.hpp"

namespace shapesig {

/// L1 distance between two descriptor rows of equal length. The constant
/// time-increment factor of the underlying integral is omitted; argmin
/// matching is invariant to it.
double descriptor_distance(const Eigen::RowVectorXd& f, const Eigen::RowVectorXd& g);

/// Point-to-point matches: for each reference vertex the target vertex with
/// the smallest feature distance.
struct Assignment {
    std::vector<int> target_of;
    std::vector<double> distance;

    int size() const { return static_cast<int>(target_of.size()); }
};

/// argmin over target rows of the L1 feature distance; ties resolve to the
/// lowest target index. Throws DataError when the fields are incompatible
/// (different method, PDE, or sample grid).
Assignment match_p2p(const DescriptorField& f_ref, const DescriptorField& f_trg, int threads = 1);

/// Row-stochastic soft correspondence: S(j, i) is the probability that
/// reference vertex i corresponds to target vertex j; each row j sums to 1.
struct SoftMap {
    Eigen::MatrixXd probabilities; // N_target x N_ref

    Eigen::Index target_count() const { return probabilities.rows(); }
    Eigen::Index ref_count() const { return probabilities.cols(); }
    double density() const;
};

enum class BandwidthMode { MedianPerRow, MeanPerRow };

/// S(j, i) = exp(-d_f(x_i, x~_j) / s_j), normalized per row; the bandwidth
/// s_j is the median (or mean) feature distance of row j. Rows with zero
/// bandwidth fall back to the uniform distribution.
SoftMap soft_map(const DescriptorField& f_ref, const DescriptorField& f_trg,
                 BandwidthMode bandwidth = BandwidthMode::MedianPerRow, int threads = 1);

/// h~ = S h for a binary indicator vector h on the reference shape.
Eigen::VectorXd apply_soft_map(const SoftMap& s, const Eigen::VectorXd& h);

struct SparsifyResult {
    /// (density, soft hit rate in percent), density decreasing along the sweep.
    std::vector<std::pair<double, double>> curve;
    /// Smallest density that still keeps the soft hit rate at 100%; absent
    /// when some ground-truth entry is zero from the start.
    std::optional<double> minimum_density;
};

/// Zeroes entries in ascending value order (ties by row-major position) and
/// tracks how many reference vertices keep a surviving ground-truth entry.
/// The sweep is sampled at `density_levels` (defaults to percent steps) plus
/// the exact 100%-survival transition.
SparsifyResult sparsify_sweep(const SoftMap& s, const GroundTruth& gt,
                              const std::vector<double>& density_levels = {});

/// Variant where vertex i counts as hit while any entry of `acceptable[i]`
/// survives (e.g. targets within a geodesic tolerance ball around the
/// ground truth).
SparsifyResult sparsify_sweep_sets(const SoftMap& s,
                                   const std::vector<std::vector<int>>& acceptable,
                                   const std::vector<double>& density_levels = {});

/// Target vertices within normalized geodesic distance `tolerance` of each
/// ground-truth vertex; feeds sparsify_sweep_sets.
std::vector<std::vector<int>> geodesic_tolerance_sets(const GroundTruth& gt,
                                                      const TriangleMesh& target_mesh,
                                                      double tolerance, int threads = 1);

/// Copy of the map with the smallest entries zeroed (same ordering rule as
/// the sweep) until the density drops to `density`. Optionally renormalizes
/// the surviving rows to sum 1.
SoftMap sparsify_to_density(const SoftMap& s, double density, bool renormalize = false);

/// Percentage of reference vertices matched exactly to their ground truth.
double hit_rate(const Assignment& a, const GroundTruth& gt);

/// Shortest-path distances from `source` over the mesh edge graph with
/// Euclidean edge lengths. Unreachable vertices get +infinity (with a
/// warning on stderr).
Eigen::VectorXd geodesic_distances(const TriangleMesh& mesh, int source);

/// Correspondence-benchmark evaluation: per-vertex normalized geodesic
/// error d(j(i), gt(i)) / sqrt(A) on the target shape and its cumulative
/// curve.
struct GeodesicErrorCurve {
    Eigen::VectorXd errors; // per reference vertex; +inf for disconnected
    std::vector<double> thresholds;
    std::vector<double> fractions; // fraction with error <= threshold

    double fraction_at(double threshold) const;
};

GeodesicErrorCurve geodesic_error_curve(const Assignment& a, const GroundTruth& gt,
                                        const TriangleMesh& target_mesh,
                                        const std::vector<double>& thresholds = {},
                                        int threads = 1);

// File outputs used by the CLI.
void save_assignment_csv(const Assignment& a, const std::string& path);
void save_curve_csv(const GeodesicErrorCurve& curve, const std::string& path);
void save_density_sweep_csv(const SparsifyResult& result, const std::string& path);
void save_softmap_triplets(const SoftMap& s, const std::string& path);

} // namespace shapesig
