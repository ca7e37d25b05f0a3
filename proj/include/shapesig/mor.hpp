#pragma once

#include <optional>
#include <string>

#include <Eigen/Core>

#include "shapesig/descriptor.hpp"
#include "shapesig/laplacian.hpp"
#include "shapesig/solvers.hpp"

namespace shapesig {

/// Modal reduction data: the r smallest-magnitude eigenpairs of L = D^{-1} W
/// plus the fastest mode of the full operator (used for time rescaling).
struct ReducedModelMCR {
    Eigen::VectorXd eigenvalues; // increasing magnitude, zero mode first
    Eigen::MatrixXd modes;       // V_r, N x r, D-orthonormal
    double fastest_mode = 0.0;   // largest-magnitude eigenvalue of L

    int order() const { return static_cast<int>(eigenvalues.size()); }
    Eigen::Index vertex_count() const { return modes.rows(); }
};

/// Eigensolve for the r retained modes plus a separate largest-magnitude run
/// for the fastest mode.
ReducedModelMCR mcr_reduce(const LaplaceOperator& op, int r,
                           EigenMode mode = EigenMode::Symmetric, double tol = 1e-10);

/// Rescaled stopping time t* for a reduced model whose slowest retained rate
/// is lambda_r: t_M * sqrt(|lambda_N| / |lambda_r|) for heat, fourth roots
/// for wave. lambda_r = lambda_N gives back t_M exactly.
/// Throws DataError when lambda_r is zero (callers must pass the largest
/// retained nonzero eigenvalue).
double adapted_time(double lambda_r, double lambda_n, double t_m, Pde pde);

/// Descriptors for all vertices from the reduced diagonal recurrence
/// W^k = P W^{k-1} (heat) or W^1 = P W^0, W^k = P (2 W^{k-1} - W^{k-2})
/// (wave) with W^0 = V_r^T; entries are recovered per vertex by the
/// row-wise product-and-sum with V_r.
///
/// With adapt set, the integration domain becomes [0, t*]: a reference
/// shape (no reference_grid) computes t* from its own spectrum, a
/// transformed shape reuses the reference's grid. A model that retains only
/// the zero mode keeps the original domain.
DescriptorField mcr_descriptors(const ReducedModelMCR& model, const TimeGrid& grid, Pde pde,
                                bool adapt = false,
                                const std::optional<TimeGrid>& reference_grid = std::nullopt);

/// Binary cache format: {N, r, eigenvalues, V_r column-major, lambda_N}.
void save_mcr_binary(const ReducedModelMCR& model, const std::string& path);
ReducedModelMCR load_mcr_binary(const std::string& path);

/// Factorization of W - sigma D, the symmetric form of the shifted systems
/// (L - sigma I) x = y behind the Krylov reduction. Shared by all vertices
/// of one shape.
Factorization ksmor_shift_factorization(const LaplaceOperator& op, double sigma);

/// Orthonormal basis of K_q((L - sigma I)^{-1}, (L - sigma I)^{-1} u_{i,0})
/// built by Arnoldi with modified Gram-Schmidt, plus the projected operator
/// L_q = V^T L V.
struct KrylovBasis {
    Eigen::MatrixXd basis;      // V, N x q_achieved, orthonormal
    Eigen::MatrixXd reduced_op; // L_q, dense
    double sigma = 0.0;
    int vertex = 0;
    bool complete = true; // false when the recurrence broke down early

    int order() const { return static_cast<int>(basis.cols()); }
};

KrylovBasis ksmor_basis(const LaplaceOperator& op, int vertex, double sigma, int q,
                        const Factorization& shifted);

/// Descriptor row for one vertex: the reduced q x q system integrated by
/// implicit Euler (dense LU), sampled at the vertex through V.
Eigen::VectorXd ksmor_descriptor_row(const LaplaceOperator& op, int vertex, double sigma, int q,
                                     const TimeGrid& grid, Pde pde, const Factorization& shifted);

/// Full N x M field: independent per-vertex reductions sharing one shifted
/// factorization.
DescriptorField ksmor_descriptors(const LaplaceOperator& op, double sigma, int q,
                                  const TimeGrid& grid, Pde pde, int threads = 1);

/// Transfer-function moments m_0..m_{k-1} of the full system around sigma:
/// m_j = e_out^T (L - sigma I)^{-(j+1)} u_{in,0}. Oracle-sized meshes only.
Eigen::VectorXd moments(const LaplaceOperator& op, int out_vertex, int in_vertex, double sigma,
                        int k);

/// Matching moments of a reduced model, for checking against moments().
Eigen::VectorXd reduced_moments(const KrylovBasis& basis, const LaplaceOperator& op,
                                int out_vertex, int k);

} // namespace shapesig
