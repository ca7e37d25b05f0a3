#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "shapesig/mesh.hpp"

namespace shapesig {

using SparseMat = Eigen::SparseMatrix<double>;

/// Finite-volume discrete Laplace-Beltrami operator L = D^{-1} W built from
/// cotangent edge weights and barycentric cell areas. W is symmetric with
/// zero row sums and negative semi-definite; D holds the strictly positive
/// cell areas |Omega_i|.
struct LaplaceOperator {
    SparseMat weights;          // W, N x N
    Eigen::VectorXd cell_areas; // diagonal of D
    double total_area = 0.0;

    Eigen::Index size() const { return weights.rows(); }

    /// y = L x = D^{-1} W x
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
        return (weights * x).cwiseQuotient(cell_areas);
    }

    /// Discrete delta initial condition |Omega_i|^{-1} e_i.
    Eigen::VectorXd delta_initial(int vertex) const;

    /// B = D^{-1/2} W D^{-1/2}, the symmetric similarity transform of L.
    SparseMat symmetrized() const;
};

/// Assembles W and D for a preprocessed mesh. Each undirected edge gets
/// (cot a + cot b)/2 on interior edges and cot a / 2 on boundary edges;
/// diagonal entries close each row to zero sum. Throws NumericalError if a
/// cotangent comes out non-finite (a needle triangle survived preprocessing)
/// and DataError if a vertex has no incident triangle (D must stay positive).
LaplaceOperator assemble_laplacian(const TriangleMesh& mesh);

} // namespace shapesig
