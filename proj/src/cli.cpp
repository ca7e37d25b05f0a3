#include "shapesig/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "shapesig/correspond.hpp"
#include "shapesig/errors.hpp"
#include "shapesig/integrator.hpp"
#include "shapesig/laplacian.hpp"
#include "shapesig/mesh.hpp"
#include "shapesig/mor.hpp"
#include "shapesig/parallel.hpp"
#include "shapesig/spectral.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace shapesig {

namespace {

int effective_threads(const RunConfig& cfg) {
    return cfg.threads > 0 ? cfg.threads : default_thread_count();
}

TriangleMesh load_and_preprocess(const std::string& path) {
    TriangleMesh mesh = load_mesh(path);
    return remove_degenerate_triangles(mesh, default_area_tolerance(mesh));
}

std::string cache_dir_for(const RunConfig& cfg) {
    if (!cfg.cache_dir.empty()) return cfg.cache_dir;
    const char* env = std::getenv("SHAPESIG_CACHE_DIR");
    return env ? std::string(env) : std::string();
}

std::string hex_hash(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ReducedModelMCR obtain_model(const RunConfig& cfg, const LaplaceOperator& op,
                             const TriangleMesh& mesh, std::string* cache_path_out) {
    const std::string dir = cache_dir_for(cfg);
    if (dir.empty()) return mcr_reduce(op, cfg.modes, cfg.eig_mode);

    const std::string key = hex_hash(mesh_content_hash(mesh)) + "-r" + std::to_string(cfg.modes) +
                            (cfg.eig_mode == EigenMode::Symmetric ? "-sym" : "-gen") + ".mcr";
    const fs::path path = fs::path(dir) / key;
    if (cache_path_out) *cache_path_out = path.string();
    if (fs::exists(path)) {
        ReducedModelMCR model = load_mcr_binary(path.string());
        if (model.vertex_count() == op.size() && model.order() == cfg.modes) return model;
        // Stale entry (hash collision or truncation); recompute below.
    }
    ReducedModelMCR model = mcr_reduce(op, cfg.modes, cfg.eig_mode);
    fs::create_directories(dir);
    save_mcr_binary(model, path.string());
    return model;
}

EigenPairs pairs_from_model(const ReducedModelMCR& model, const LaplaceOperator& op,
                            EigenMode mode) {
    EigenPairs pairs;
    pairs.values = model.eigenvalues;
    pairs.vectors = model.modes;
    pairs.mass = op.cell_areas;
    pairs.mode = mode;
    return pairs;
}

// The kernel descriptors fix their own PDE tag regardless of the configured
// one.
Pde effective_pde(const RunConfig& cfg) {
    if (cfg.method == Method::Hks) return Pde::Heat;
    if (cfg.method == Method::Wks) return Pde::Wave;
    return cfg.pde;
}

// Descriptor field for one mesh. When ref_field is present its grid (and for
// WKS its energy variance) is reused so the two shapes live on the same
// scale; the reference shape itself passes nullptr.
DescriptorField compute_field(const RunConfig& raw_cfg, const std::string& mesh_path,
                              const DescriptorField* ref_field, std::string* cache_path_out) {
    RunConfig cfg = raw_cfg;
    cfg.pde = effective_pde(raw_cfg);
    if (mesh_path.empty()) throw UsageError("no mesh path given");
    TriangleMesh mesh = load_and_preprocess(mesh_path);
    LaplaceOperator op = assemble_laplacian(mesh);
    const int threads = effective_threads(cfg);

    if (ref_field) {
        if (ref_field->method != cfg.method || ref_field->pde != cfg.pde) {
            throw DataError("reference descriptor was computed with " +
                            std::string(to_string(ref_field->method)) + "/" +
                            to_string(ref_field->pde) + " but the configuration asks for " +
                            to_string(cfg.method) + "/" + to_string(cfg.pde));
        }
    }

    TimeGrid base{cfg.t_end, cfg.levels};
    std::optional<TimeGrid> inherited;
    if (ref_field && (cfg.method == Method::Full || cfg.method == Method::Mcr ||
                      cfg.method == Method::Ksmor)) {
        inherited = TimeGrid{ref_field->t_end(), static_cast<int>(ref_field->sample_count())};
    }

    const StepSolver solver = cfg.direct_solver
                                  ? StepSolver(DirectSolver{})
                                  : StepSolver(CgSolver{cfg.cg_eps, cfg.cg_max_iters});

    switch (cfg.method) {
    case Method::Full: {
        const TimeGrid grid = inherited ? *inherited : base;
        return cfg.pde == Pde::Heat ? heat_full(op, grid, solver, threads)
                                    : wave_full(op, grid, solver, threads);
    }
    case Method::Mcr: {
        ReducedModelMCR model = obtain_model(cfg, op, mesh, cache_path_out);
        if (inherited) return mcr_descriptors(model, base, cfg.pde, true, inherited);
        return mcr_descriptors(model, base, cfg.pde, cfg.adapt_time);
    }
    case Method::Ksmor: {
        const TimeGrid grid = inherited ? *inherited : base;
        return ksmor_descriptors(op, cfg.sigma, cfg.krylov, grid, cfg.pde, threads);
    }
    case Method::Hks: {
        ReducedModelMCR model = obtain_model(cfg, op, mesh, cache_path_out);
        EigenPairs pairs = pairs_from_model(model, op, cfg.eig_mode);
        SpectralGrid grid;
        if (ref_field) {
            grid.samples = ref_field->samples;
        } else {
            grid = hks_default_grid(pairs, cfg.levels);
        }
        return hks(pairs, grid);
    }
    case Method::Wks: {
        ReducedModelMCR model = obtain_model(cfg, op, mesh, cache_path_out);
        EigenPairs pairs = pairs_from_model(model, op, cfg.eig_mode);
        SpectralGrid grid;
        if (ref_field) {
            grid.samples = ref_field->samples;
            grid.sigma = ref_field->energy_sigma;
        } else {
            grid = wks_default_grid(pairs, cfg.levels);
        }
        return wks(pairs, grid);
    }
    }
    throw UsageError("unknown method");
}

std::string descriptor_output_path(const RunConfig& cfg, const std::string& mesh_path) {
    const std::string stem = fs::path(mesh_path).stem().string();
    fs::path out = fs::path(cfg.output_dir) / (stem + "-" + to_string(cfg.method) + "-" +
                                               to_string(effective_pde(cfg)) + ".sdf");
    return out.string();
}

json config_to_json(const RunConfig& cfg) {
    json j;
    j["pde"] = to_string(cfg.pde);
    j["method"] = to_string(cfg.method);
    j["modes"] = cfg.modes;
    j["krylov"] = cfg.krylov;
    j["sigma"] = cfg.sigma;
    j["t_end"] = cfg.t_end;
    j["levels"] = cfg.levels;
    j["solver"] = cfg.direct_solver ? "direct" : "cg";
    j["cg_eps"] = cfg.cg_eps;
    j["cg_max_iters"] = cfg.cg_max_iters;
    j["adapt_time"] = cfg.adapt_time;
    j["eig_mode"] = cfg.eig_mode == EigenMode::Symmetric ? "symmetric" : "generalised";
    j["reference_mesh"] = cfg.reference_mesh;
    j["target_mesh"] = cfg.target_mesh;
    j["ground_truth"] = cfg.ground_truth;
    j["reference_descriptor"] = cfg.reference_descriptor;
    j["descriptor_ref"] = cfg.descriptor_ref;
    j["descriptor_trg"] = cfg.descriptor_trg;
    j["output_dir"] = cfg.output_dir;
    j["threads"] = cfg.threads;
    j["softmap_density"] = cfg.softmap_density;
    j["softmap_renormalize"] = cfg.softmap_renormalize;
    j["geodesic_tolerance"] = cfg.geodesic_tolerance;
    return j;
}

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << "\n";
}

// Loads or computes both descriptor fields, reference first.
std::pair<DescriptorField, DescriptorField> obtain_field_pair(const RunConfig& cfg) {
    DescriptorField ref;
    if (!cfg.descriptor_ref.empty()) {
        ref = load_descriptor_binary(cfg.descriptor_ref);
    } else {
        ref = compute_field(cfg, cfg.reference_mesh, nullptr, nullptr);
    }
    DescriptorField trg;
    if (!cfg.descriptor_trg.empty()) {
        trg = load_descriptor_binary(cfg.descriptor_trg);
    } else {
        trg = compute_field(cfg, cfg.target_mesh, &ref, nullptr);
    }
    return {std::move(ref), std::move(trg)};
}

GroundTruth obtain_ground_truth(const RunConfig& cfg, Eigen::Index n_ref, Eigen::Index n_trg) {
    if (cfg.ground_truth.empty()) {
        if (n_ref != n_trg)
            throw DataError("identity ground truth needs equal vertex counts; pass --ground-truth");
        return GroundTruth::identity(static_cast<int>(n_ref));
    }
    return load_ground_truth(cfg.ground_truth, static_cast<int>(n_ref), static_cast<int>(n_trg));
}

} // namespace

SignatureResult run_signature(const RunConfig& config) {
    if (config.reference_mesh.empty()) throw UsageError("signature needs --mesh");
    fs::create_directories(config.output_dir);

    const DescriptorField ref_field = config.reference_descriptor.empty()
                                          ? DescriptorField{}
                                          : load_descriptor_binary(config.reference_descriptor);
    SignatureResult result;
    DescriptorField field =
        compute_field(config, config.reference_mesh,
                      config.reference_descriptor.empty() ? nullptr : &ref_field,
                      &result.cache_path);

    result.descriptor_path = descriptor_output_path(config, config.reference_mesh);
    save_descriptor_binary(field, result.descriptor_path);
    if (config.write_csv) {
        save_descriptor_csv(field, result.descriptor_path + ".csv");
    }
    return result;
}

MatchResult run_match(const RunConfig& config) {
    if (config.target_mesh.empty()) throw UsageError("match needs --target-mesh for the geodesic metric");
    fs::create_directories(config.output_dir);

    auto [ref, trg] = obtain_field_pair(config);
    TriangleMesh target = load_and_preprocess(config.target_mesh);
    if (target.vertex_count() != trg.vertex_count())
        throw DataError("target descriptor and target mesh disagree on vertex count");

    const int threads = effective_threads(config);
    Assignment assignment = match_p2p(ref, trg, threads);
    GroundTruth gt = obtain_ground_truth(config, ref.vertex_count(), trg.vertex_count());

    MatchResult result;
    result.hit_rate_percent = hit_rate(assignment, gt);
    GeodesicErrorCurve curve = geodesic_error_curve(assignment, gt, target, {}, threads);
    result.fraction_at_025 = curve.fraction_at(0.25);

    result.assignment_path = (fs::path(config.output_dir) / "assignment.csv").string();
    result.curve_path = (fs::path(config.output_dir) / "geodesic_error.csv").string();
    result.report_path = (fs::path(config.output_dir) / "match_report.json").string();
    save_assignment_csv(assignment, result.assignment_path);
    save_curve_csv(curve, result.curve_path);

    json report;
    report["config"] = config_to_json(config);
    report["results"]["hit_rate_percent"] = result.hit_rate_percent;
    report["results"]["fraction_at_0.25"] = result.fraction_at_025;
    report["results"]["assignment_csv"] = result.assignment_path;
    report["results"]["curve_csv"] = result.curve_path;
    write_json(report, result.report_path);
    return result;
}

SoftmapResult run_softmap(const RunConfig& config) {
    fs::create_directories(config.output_dir);
    auto [ref, trg] = obtain_field_pair(config);

    const int threads = effective_threads(config);
    SoftMap map = soft_map(ref, trg, BandwidthMode::MedianPerRow, threads);
    GroundTruth gt = obtain_ground_truth(config, ref.vertex_count(), trg.vertex_count());

    SparsifyResult sweep;
    if (config.geodesic_tolerance >= 0.0) {
        if (config.target_mesh.empty())
            throw UsageError("geodesic-tolerance soft hit rate needs --target-mesh");
        TriangleMesh target = load_and_preprocess(config.target_mesh);
        sweep = sparsify_sweep_sets(
            map, geodesic_tolerance_sets(gt, target, config.geodesic_tolerance, threads));
    } else {
        sweep = sparsify_sweep(map, gt);
    }

    SoftmapResult result;
    if (sweep.minimum_density) result.minimum_density = *sweep.minimum_density;
    result.softmap_path = (fs::path(config.output_dir) / "softmap.txt").string();
    result.sweep_path = (fs::path(config.output_dir) / "density_sweep.csv").string();
    result.report_path = (fs::path(config.output_dir) / "softmap_report.json").string();

    SoftMap to_write = config.softmap_density < 1.0
                           ? sparsify_to_density(map, config.softmap_density,
                                                 config.softmap_renormalize)
                           : map;
    save_softmap_triplets(to_write, result.softmap_path);
    save_density_sweep_csv(sweep, result.sweep_path);

    json report;
    report["config"] = config_to_json(config);
    if (sweep.minimum_density) {
        report["results"]["minimum_density"] = *sweep.minimum_density;
    } else {
        report["results"]["minimum_density"] = nullptr;
    }
    report["results"]["softmap"] = result.softmap_path;
    report["results"]["density_sweep_csv"] = result.sweep_path;
    write_json(report, result.report_path);
    return result;
}

BenchmarkSuite benchmark_suite_from_string(const std::string& name) {
    if (name == "modes-sweep") return BenchmarkSuite::ModesSweep;
    if (name == "solver-sweep") return BenchmarkSuite::SolverSweep;
    if (name == "density-sweep") return BenchmarkSuite::DensitySweep;
    throw UsageError("unknown benchmark suite '" + name +
                     "' (expected modes-sweep|solver-sweep|density-sweep)");
}

std::vector<MeshPair> discover_pairs(const std::string& dataset_dir) {
    if (!fs::is_directory(dataset_dir)) throw DataError(dataset_dir + " is not a directory");

    const fs::path manifest = fs::path(dataset_dir) / "pairs.csv";
    std::vector<MeshPair> pairs;
    if (fs::exists(manifest)) {
        std::ifstream in(manifest);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ls(line);
            std::string ref, trg, gt;
            if (!std::getline(ls, ref, ',') || !std::getline(ls, trg, ',')) {
                throw DataError("pairs.csv: expected 'reference,target[,ground_truth]'");
            }
            std::getline(ls, gt, ',');
            auto resolve = [&](const std::string& p) {
                return p.empty() ? p : (fs::path(dataset_dir) / p).string();
            };
            pairs.push_back({resolve(ref), resolve(trg), resolve(gt)});
        }
        return pairs;
    }

    // TOSCA-style layout: <class><number>.{off,vert}; the lowest number is
    // the null pose all other poses of the class are matched against.
    const std::regex stem_re("^(.*?)([0-9]+)$");
    struct Pose {
        long number;
        std::string path;
    };
    std::map<std::string, std::vector<Pose>> classes;
    for (const auto& entry : fs::directory_iterator(dataset_dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = entry.path().extension().string();
        if (ext != ".off" && ext != ".vert") continue;
        std::smatch m;
        const std::string stem = entry.path().stem().string();
        if (!std::regex_match(stem, m, stem_re)) continue;
        classes[m[1].str()].push_back({std::stol(m[2].str()), entry.path().string()});
    }
    for (auto& [cls, poses] : classes) {
        std::sort(poses.begin(), poses.end(), [](const Pose& a, const Pose& b) {
            return a.number < b.number || (a.number == b.number && a.path < b.path);
        });
        for (std::size_t k = 1; k < poses.size(); ++k) {
            fs::path gt = fs::path(poses[k].path);
            gt.replace_extension(".gt");
            pairs.push_back({poses[0].path, poses[k].path,
                             fs::exists(gt) ? gt.string() : std::string()});
        }
    }
    return pairs;
}

namespace {

struct BenchmarkRow {
    std::string reference;
    std::string target;
    std::string method;
    std::string param_name;
    std::string param_value;
    double hit = std::numeric_limits<double>::quiet_NaN();
    double frac25 = std::numeric_limits<double>::quiet_NaN();
    double min_density = std::numeric_limits<double>::quiet_NaN();
    double wall_ms = 0.0;
    std::string error;
};

struct MethodChoice {
    Method method;
    Pde pde;
};

// The comparison set of the evaluation: reduced heat/wave plus both kernel
// descriptors.
const std::vector<MethodChoice> kComparisonMethods = {
    {Method::Mcr, Pde::Heat},
    {Method::Mcr, Pde::Wave},
    {Method::Hks, Pde::Heat},
    {Method::Wks, Pde::Wave},
};

BenchmarkRow evaluate_pair(const RunConfig& cfg, const MeshPair& pair, bool with_density) {
    BenchmarkRow row;
    row.reference = pair.reference;
    row.target = pair.target;
    row.method = std::string(to_string(cfg.method)) + "-" + to_string(cfg.pde);

    const auto start = std::chrono::steady_clock::now();
    RunConfig local = cfg;
    local.reference_mesh = pair.reference;
    local.target_mesh = pair.target;
    local.ground_truth = pair.ground_truth;
    local.descriptor_ref.clear();
    local.descriptor_trg.clear();

    auto [ref, trg] = obtain_field_pair(local);
    TriangleMesh target = load_and_preprocess(pair.target);
    GroundTruth gt = obtain_ground_truth(local, ref.vertex_count(), trg.vertex_count());

    const int threads = effective_threads(cfg);
    Assignment assignment = match_p2p(ref, trg, threads);
    row.hit = hit_rate(assignment, gt);
    row.frac25 = geodesic_error_curve(assignment, gt, target, {}, threads).fraction_at(0.25);
    if (with_density) {
        SoftMap map = soft_map(ref, trg, BandwidthMode::MedianPerRow, threads);
        SparsifyResult sweep = sparsify_sweep(map, gt);
        if (sweep.minimum_density) row.min_density = *sweep.minimum_density;
    }
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                      .count();
    return row;
}

void write_rows(const std::vector<BenchmarkRow>& rows, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw DataError("cannot write " + path);
    std::fprintf(f, "reference,target,method,param,value,hit_rate,fraction_at_025,min_density,"
                    "wall_ms,error\n");
    for (const auto& r : rows) {
        std::fprintf(f, "%s,%s,%s,%s,%s,%.6g,%.6g,%.6g,%.6g,%s\n", r.reference.c_str(),
                     r.target.c_str(), r.method.c_str(), r.param_name.c_str(),
                     r.param_value.c_str(), r.hit, r.frac25, r.min_density, r.wall_ms,
                     r.error.c_str());
    }
    std::fclose(f);
}

} // namespace

std::string run_benchmark(const RunConfig& config, BenchmarkSuite suite,
                          const std::string& dataset_dir) {
    std::vector<MeshPair> pairs = discover_pairs(dataset_dir);
    if (pairs.empty()) throw DataError("no mesh pairs found in " + dataset_dir);
    fs::create_directories(config.output_dir);

    std::vector<BenchmarkRow> rows;
    auto guarded = [&rows](BenchmarkRow seed, auto&& fn) {
        try {
            rows.push_back(fn());
        } catch (const std::exception& e) {
            seed.error = e.what();
            std::replace(seed.error.begin(), seed.error.end(), ',', ';');
            rows.push_back(seed);
        }
    };

    for (const MeshPair& pair : pairs) {
        switch (suite) {
        case BenchmarkSuite::ModesSweep:
            for (int r : config.sweep_modes) {
                for (const MethodChoice& mc : kComparisonMethods) {
                    RunConfig cfg = config;
                    cfg.method = mc.method;
                    cfg.pde = mc.pde;
                    cfg.modes = r;
                    BenchmarkRow seed;
                    seed.reference = pair.reference;
                    seed.target = pair.target;
                    seed.method = std::string(to_string(mc.method)) + "-" + to_string(mc.pde);
                    seed.param_name = "modes";
                    seed.param_value = std::to_string(r);
                    guarded(seed, [&] {
                        BenchmarkRow row = evaluate_pair(cfg, pair, /*with_density=*/true);
                        row.param_name = "modes";
                        row.param_value = std::to_string(r);
                        return row;
                    });
                }
            }
            break;
        case BenchmarkSuite::SolverSweep: {
            RunConfig direct_cfg = config;
            direct_cfg.method = Method::Full;
            direct_cfg.direct_solver = true;
            BenchmarkRow seed;
            seed.reference = pair.reference;
            seed.target = pair.target;
            seed.method = std::string("full-") + to_string(config.pde);
            seed.param_name = "solver";
            seed.param_value = "direct";
            guarded(seed, [&] {
                BenchmarkRow row = evaluate_pair(direct_cfg, pair, /*with_density=*/true);
                row.param_name = "solver";
                row.param_value = "direct";
                return row;
            });
            for (double eps : config.sweep_eps) {
                for (int iters : config.sweep_iters) {
                    RunConfig cfg = config;
                    cfg.method = Method::Full;
                    cfg.direct_solver = false;
                    cfg.cg_eps = eps;
                    cfg.cg_max_iters = iters;
                    std::ostringstream value;
                    value << "eps=" << eps << ";l=" << iters;
                    BenchmarkRow s2 = seed;
                    s2.param_name = "cg";
                    s2.param_value = value.str();
                    guarded(s2, [&] {
                        BenchmarkRow row = evaluate_pair(cfg, pair, /*with_density=*/true);
                        row.param_name = "cg";
                        row.param_value = value.str();
                        return row;
                    });
                }
            }
            break;
        }
        case BenchmarkSuite::DensitySweep:
            for (const MethodChoice& mc : kComparisonMethods) {
                RunConfig cfg = config;
                cfg.method = mc.method;
                cfg.pde = mc.pde;
                BenchmarkRow seed;
                seed.reference = pair.reference;
                seed.target = pair.target;
                seed.method = std::string(to_string(mc.method)) + "-" + to_string(mc.pde);
                seed.param_name = "modes";
                seed.param_value = std::to_string(config.modes);
                guarded(seed, [&] {
                    BenchmarkRow row = evaluate_pair(cfg, pair, /*with_density=*/true);
                    row.param_name = "modes";
                    row.param_value = std::to_string(config.modes);
                    return row;
                });
            }
            break;
        }
    }

    const char* suite_name = suite == BenchmarkSuite::ModesSweep     ? "modes-sweep"
                             : suite == BenchmarkSuite::SolverSweep ? "solver-sweep"
                                                                    : "density-sweep";
    const std::string out =
        (fs::path(config.output_dir) / (std::string("benchmark-") + suite_name + ".csv")).string();
    write_rows(rows, out);
    return out;
}

} // namespace shapesig
