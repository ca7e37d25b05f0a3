#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "shapesig/descriptor.hpp"
#include "shapesig/solvers.hpp"

namespace shapesig {

/// One invocation's worth of settings, shared by all subcommands. Unused
/// fields are ignored by commands that do not need them.
struct RunConfig {
    Pde pde = Pde::Heat;
    Method method = Method::Mcr;
    int modes = 100;  // retained eigenpairs r (mcr, hks, wks)
    int krylov = 2;   // subspace dimension q (ksmor)
    double sigma = 0.1;
    double t_end = 25.0; // stopping time t_M
    int levels = 100;    // time/energy samples M
    bool direct_solver = true;
    double cg_eps = 1e-6;
    int cg_max_iters = 1000;
    bool adapt_time = false;
    EigenMode eig_mode = EigenMode::Symmetric;

    std::string reference_mesh;
    std::string target_mesh;
    std::string ground_truth;          // empty: identity
    std::string reference_descriptor;  // signature: inherit the reference grid
    std::string descriptor_ref;        // match/softmap: precomputed fields
    std::string descriptor_trg;

    std::string output_dir = ".";
    std::string cache_dir;  // empty: SHAPESIG_CACHE_DIR, else caching off
    int threads = 1;
    bool write_csv = false;

    double softmap_density = 1.0;      // sparsify the written map to this density
    bool softmap_renormalize = false;
    double geodesic_tolerance = -1.0;  // >= 0: tolerance-ball soft hit rate

    // benchmark sweeps
    std::vector<int> sweep_modes = {5, 10, 50, 100, 300};
    std::vector<double> sweep_eps = {1e-1, 1e-2, 1e-4, 1e-6};
    std::vector<int> sweep_iters = {3, 5, 10, 25};
};

struct SignatureResult {
    std::string descriptor_path;
    std::string cache_path; // empty when caching is off or unused
};

/// Computes the configured descriptor field for config.reference_mesh and
/// writes the binary container (plus CSV on request). MCR eigendata is
/// cached keyed by (mesh hash, modes, eigenvalue mode).
SignatureResult run_signature(const RunConfig& config);

struct MatchResult {
    double hit_rate_percent = 0.0;
    double fraction_at_025 = 0.0;
    std::string assignment_path;
    std::string curve_path;
    std::string report_path;
};

/// Matches reference against target descriptors (loading or computing them
/// as configured), evaluates hit rate and the geodesic-error curve on the
/// target mesh, and writes assignment/curve CSVs plus a JSON report echoing
/// the configuration.
MatchResult run_match(const RunConfig& config);

struct SoftmapResult {
    double minimum_density = std::numeric_limits<double>::quiet_NaN();
    std::string softmap_path;
    std::string sweep_path;
    std::string report_path;
};

/// Builds the soft correspondence map, runs the sparsification sweep against
/// ground truth, and writes the (optionally sparsified) map as triplets plus
/// the density/soft-hit-rate curve.
SoftmapResult run_softmap(const RunConfig& config);

enum class BenchmarkSuite { ModesSweep, SolverSweep, DensitySweep };

BenchmarkSuite benchmark_suite_from_string(const std::string& name);

/// Runs the chosen sweep over every (reference, transformed) pair found in
/// `dataset_dir` and appends one CSV row per (pair, method, parameter
/// point). Per-row failures are recorded and the run continues.
std::string run_benchmark(const RunConfig& config, BenchmarkSuite suite,
                          const std::string& dataset_dir);

/// Dataset pairing: poses grouped by class prefix, each transformed pose
/// matched against the lowest-numbered (null) pose of its class. A
/// `pairs.csv` file in the directory overrides the scan.
struct MeshPair {
    std::string reference;
    std::string target;
    std::string ground_truth; // empty: identity
};

std::vector<MeshPair> discover_pairs(const std::string& dataset_dir);

} // namespace shapesig
