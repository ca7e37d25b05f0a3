#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "shapesig/cli.hpp"
#include "shapesig/errors.hpp"

namespace {

using shapesig::RunConfig;

void add_common_options(CLI::App* cmd, RunConfig& cfg, std::string& pde, std::string& method,
                        std::string& eig_mode, std::string& solver) {
    cmd->add_option("--pde", pde, "PDE: heat|wave")->capture_default_str();
    cmd->add_option("--method", method, "Descriptor method: full|mcr|ksmor|hks|wks")
        ->capture_default_str();
    cmd->add_option("-r,--modes", cfg.modes, "Retained eigenpairs (mcr/hks/wks)")
        ->capture_default_str();
    cmd->add_option("-q,--krylov", cfg.krylov, "Krylov subspace dimension (ksmor)")
        ->capture_default_str();
    cmd->add_option("--sigma", cfg.sigma, "Krylov expansion point (ksmor)")->capture_default_str();
    cmd->add_option("--t-end", cfg.t_end, "Stopping time t_M")->capture_default_str();
    cmd->add_option("-M,--levels", cfg.levels, "Time/energy sample count")->capture_default_str();
    cmd->add_option("--solver", solver, "Linear solver for full integration: direct|cg")
        ->capture_default_str();
    cmd->add_option("--eps", cfg.cg_eps, "CG relative-residual tolerance")->capture_default_str();
    cmd->add_option("--max-iters", cfg.cg_max_iters, "CG iteration cap")->capture_default_str();
    cmd->add_flag("--adapt-time", cfg.adapt_time, "Rescale the integration domain (mcr)");
    cmd->add_option("--eig-mode", eig_mode, "Eigenproblem route: symmetric|generalised")
        ->capture_default_str();
    cmd->add_option("-o,--output-dir", cfg.output_dir, "Output directory")->capture_default_str();
    cmd->add_option("--cache-dir", cfg.cache_dir,
                    "Eigendata cache directory (default: $SHAPESIG_CACHE_DIR)");
    cmd->add_option("-t,--threads", cfg.threads, "Worker threads (0 = hardware)")
        ->capture_default_str();
    cmd->set_config("--config", "", "Read options from a config file (flags win)");
}

void finalize_config(RunConfig& cfg, const std::string& pde, const std::string& method,
                     const std::string& eig_mode, const std::string& solver) {
    cfg.pde = shapesig::pde_from_string(pde);
    cfg.method = shapesig::method_from_string(method);
    if (eig_mode == "symmetric") {
        cfg.eig_mode = shapesig::EigenMode::Symmetric;
    } else if (eig_mode == "generalised" || eig_mode == "generalized") {
        cfg.eig_mode = shapesig::EigenMode::Generalised;
    } else {
        throw shapesig::UsageError("unknown eig-mode '" + eig_mode + "'");
    }
    if (solver == "direct") {
        cfg.direct_solver = true;
    } else if (solver == "cg") {
        cfg.direct_solver = false;
    } else {
        throw shapesig::UsageError("unknown solver '" + solver + "' (expected direct|cg)");
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PDE-based shape descriptors and correspondence evaluation"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string pde = "heat", method = "mcr", eig_mode = "symmetric", solver = "direct";
    std::string suite = "modes-sweep";
    std::string dataset_dir;

    CLI::App* sig = app.add_subcommand("signature", "Compute a descriptor field for one shape");
    sig->add_option("--mesh", cfg.reference_mesh, "Shape to process")->required();
    sig->add_option("--ref-descriptor", cfg.reference_descriptor,
                    "Reference descriptor whose time/energy grid this shape inherits");
    sig->add_flag("--csv", cfg.write_csv, "Also write the field as CSV");
    add_common_options(sig, cfg, pde, method, eig_mode, solver);

    CLI::App* match = app.add_subcommand("match", "Point-to-point matching and geodesic metrics");
    match->add_option("--ref-mesh", cfg.reference_mesh, "Reference shape");
    match->add_option("--target-mesh", cfg.target_mesh, "Transformed shape")->required();
    match->add_option("--ref-descriptor", cfg.descriptor_ref, "Precomputed reference descriptor");
    match->add_option("--trg-descriptor", cfg.descriptor_trg, "Precomputed target descriptor");
    match->add_option("--ground-truth", cfg.ground_truth,
                      "Ground-truth file ('identity' keyword or two index columns)");
    add_common_options(match, cfg, pde, method, eig_mode, solver);

    CLI::App* softmap = app.add_subcommand("softmap", "Soft correspondence map and sparsification");
    softmap->add_option("--ref-mesh", cfg.reference_mesh, "Reference shape");
    softmap->add_option("--target-mesh", cfg.target_mesh, "Transformed shape");
    softmap->add_option("--ref-descriptor", cfg.descriptor_ref, "Precomputed reference descriptor");
    softmap->add_option("--trg-descriptor", cfg.descriptor_trg, "Precomputed target descriptor");
    softmap->add_option("--ground-truth", cfg.ground_truth, "Ground-truth file");
    softmap->add_option("--density", cfg.softmap_density,
                        "Sparsify the written map to this density")
        ->capture_default_str();
    softmap->add_flag("--renormalize", cfg.softmap_renormalize,
                      "Renormalize rows after sparsification");
    softmap->add_option("--geodesic-tolerance", cfg.geodesic_tolerance,
                        "Count survival within this normalized geodesic radius instead of the "
                        "exact entry");
    add_common_options(softmap, cfg, pde, method, eig_mode, solver);

    CLI::App* bench = app.add_subcommand("benchmark", "Sweeps over a dataset directory");
    bench->add_option("--suite", suite, "modes-sweep|solver-sweep|density-sweep")
        ->capture_default_str();
    bench->add_option("--dataset", dataset_dir, "Directory of mesh pairs")->required();
    bench->add_option("--sweep-modes", cfg.sweep_modes, "Mode counts for modes-sweep")
        ->delimiter(',');
    bench->add_option("--sweep-eps", cfg.sweep_eps, "CG tolerances for solver-sweep")
        ->delimiter(',');
    bench->add_option("--sweep-iters", cfg.sweep_iters, "CG iteration caps for solver-sweep")
        ->delimiter(',');
    add_common_options(bench, cfg, pde, method, eig_mode, solver);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        finalize_config(cfg, pde, method, eig_mode, solver);
        if (sig->parsed()) {
            shapesig::SignatureResult r = shapesig::run_signature(cfg);
            std::printf("descriptor: %s\n", r.descriptor_path.c_str());
            if (!r.cache_path.empty()) std::printf("cache: %s\n", r.cache_path.c_str());
        } else if (match->parsed()) {
            shapesig::MatchResult r = shapesig::run_match(cfg);
            std::printf("hit_rate: %.4f%%\n", r.hit_rate_percent);
            std::printf("fraction_at_0.25: %.6f\n", r.fraction_at_025);
            std::printf("report: %s\n", r.report_path.c_str());
        } else if (softmap->parsed()) {
            shapesig::SoftmapResult r = shapesig::run_softmap(cfg);
            std::printf("minimum_density: %.6f\n", r.minimum_density);
            std::printf("report: %s\n", r.report_path.c_str());
        } else if (bench->parsed()) {
            std::string out =
                shapesig::run_benchmark(cfg, shapesig::benchmark_suite_from_string(suite), dataset_dir);
            std::printf("benchmark: %s\n", out.c_str());
        }
    } catch (const shapesig::UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const shapesig::DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const shapesig::NumericalError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
