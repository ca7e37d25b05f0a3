#include "shapesig/integrator.hpp"

#include <cmath>
#include <optional>
#include <string>

#include "shapesig/errors.hpp"
#include "shapesig/parallel.hpp"
#include "shapesig/solvers.hpp"

namespace shapesig {

namespace {

SparseMat stepping_matrix(const LaplaceOperator& op, double tau, Pde pde) {
    const double factor = pde == Pde::Heat ? tau : tau * tau;
    SparseMat a = -factor * op.weights;
    for (Eigen::Index i = 0; i < op.size(); ++i) a.coeffRef(i, i) += op.cell_areas[i];
    a.makeCompressed();
    return a;
}

// Steps one initial vertex through all M levels, handing each new state to
// on_step. The per-step system is (D - tau^alpha W) u^k = rhs in symmetric
// form, so both solver kinds see an SPD matrix.
void integrate(const LaplaceOperator& op, const TimeGrid& grid, Pde pde, int vertex,
               const SparseMat& a, const Factorization* lu, const CgSolver* cg,
               const std::function<void(int, const Eigen::VectorXd&)>& on_step) {
    const Eigen::VectorXd& d = op.cell_areas;
    Eigen::VectorXd u_prev = op.delta_initial(vertex);
    Eigen::VectorXd u_prev2;
    Eigen::VectorXd u(op.size());
    for (int k = 1; k <= grid.levels; ++k) {
        Eigen::VectorXd rhs;
        if (pde == Pde::Heat || k == 1) {
            rhs = d.cwiseProduct(u_prev);
        } else {
            rhs = d.cwiseProduct(2.0 * u_prev - u_prev2);
        }
        try {
            if (lu) {
                u = lu->solve(rhs);
            } else {
                u = cg_solve(a, rhs, cg->eps, cg->max_iters, u_prev).x;
            }
        } catch (const NumericalError& e) {
            throw NumericalError("integrator: vertex " + std::to_string(vertex) + ", step " +
                                 std::to_string(k) + ": " + e.what());
        }
        on_step(k, u);
        if (pde == Pde::Wave) u_prev2 = u_prev;
        u_prev = u;
    }
}

DescriptorField run_full(const LaplaceOperator& op, const TimeGrid& grid, Pde pde,
                         const StepSolver& solver, int threads) {
    validate(grid);
    if (op.size() < 1) throw DataError("integrator: empty operator");

    const SparseMat a = stepping_matrix(op, grid.dt(), pde);
    std::optional<Factorization> lu;
    const CgSolver* cg = std::get_if<CgSolver>(&solver);
    if (!cg) lu = Factorization(a);

    DescriptorField field;
    field.pde = pde;
    field.method = Method::Full;
    field.samples = grid.sample_times();
    field.values.resize(op.size(), grid.levels);

    const Factorization* lu_ptr = lu ? &*lu : nullptr;
    parallel_for(static_cast<std::size_t>(op.size()), threads, [&](std::size_t i) {
        const int vertex = static_cast<int>(i);
        integrate(op, grid, pde, vertex, a, lu_ptr, cg,
                  [&](int k, const Eigen::VectorXd& u) { field.values(vertex, k - 1) = u[vertex]; });
    });
    return field;
}

Eigen::MatrixXd run_trajectory(const LaplaceOperator& op, const TimeGrid& grid, Pde pde, int vertex,
                               const StepSolver& solver) {
    validate(grid);
    if (vertex < 0 || vertex >= op.size()) throw DataError("integrator: vertex index out of range");

    const SparseMat a = stepping_matrix(op, grid.dt(), pde);
    std::optional<Factorization> lu;
    const CgSolver* cg = std::get_if<CgSolver>(&solver);
    if (!cg) lu = Factorization(a);

    Eigen::MatrixXd out(op.size(), grid.levels);
    integrate(op, grid, pde, vertex, a, lu ? &*lu : nullptr, cg,
              [&](int k, const Eigen::VectorXd& u) { out.col(k - 1) = u; });
    return out;
}

} // namespace

DescriptorField heat_full(const LaplaceOperator& op, const TimeGrid& grid, const StepSolver& solver,
                          int threads) {
    return run_full(op, grid, Pde::Heat, solver, threads);
}

DescriptorField wave_full(const LaplaceOperator& op, const TimeGrid& grid, const StepSolver& solver,
                          int threads) {
    return run_full(op, grid, Pde::Wave, solver, threads);
}

Eigen::MatrixXd heat_trajectory(const LaplaceOperator& op, const TimeGrid& grid, int vertex,
                                const StepSolver& solver) {
    return run_trajectory(op, grid, Pde::Heat, vertex, solver);
}

Eigen::MatrixXd wave_trajectory(const LaplaceOperator& op, const TimeGrid& grid, int vertex,
                                const StepSolver& solver) {
    return run_trajectory(op, grid, Pde::Wave, vertex, solver);
}

} // namespace shapesig
