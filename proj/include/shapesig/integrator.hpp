#pragma once

#include <functional>
#include <variant>

#include <Eigen/Core>

#include "shapesig/descriptor.hpp"
#include "shapesig/laplacian.hpp"

namespace shapesig {

/// Solver backing each implicit Euler step: one shared sparse LU of the
/// stepping matrix, or conjugate gradients with the stated stopping pair.
struct DirectSolver {};
struct CgSolver {
    double eps = 1e-6;
    int max_iters = 1000;
};
using StepSolver = std::variant<DirectSolver, CgSolver>;

/// Heat descriptors by full-order implicit Euler: for every vertex i the
/// delta initial state |Omega_i|^{-1} e_i is stepped through
/// (D - tau W) u^k = D u^{k-1}; row i collects u^k at vertex i for
/// k = 1..M. CG steps warm-start from the previous level.
DescriptorField heat_full(const LaplaceOperator& op, const TimeGrid& grid,
                          const StepSolver& solver = DirectSolver{}, int threads = 1);

/// Wave descriptors via the two-step recurrence
/// (D - tau^2 W) u^k = 2 D u^{k-1} - D u^{k-2}, zero initial velocity,
/// first step (D - tau^2 W) u^1 = D u^0.
DescriptorField wave_full(const LaplaceOperator& op, const TimeGrid& grid,
                          const StepSolver& solver = DirectSolver{}, int threads = 1);

/// Full solution trajectory for one initial vertex: column k-1 holds u^k.
/// Diagnostic companion to heat_full/wave_full (conservation checks and the
/// like); same stepping code.
Eigen::MatrixXd heat_trajectory(const LaplaceOperator& op, const TimeGrid& grid, int vertex,
                                const StepSolver& solver = DirectSolver{});
Eigen::MatrixXd wave_trajectory(const LaplaceOperator& op, const TimeGrid& grid, int vertex,
                                const StepSolver& solver = DirectSolver{});

} // namespace shapesig
