#pragma once

#include <memory>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "shapesig/laplacian.hpp"

namespace shapesig {

/// Reusable sparse LU factorization with fill-reducing column ordering.
/// Factor once, then solve against any number of right-hand sides. Solves
/// are const and safe to issue concurrently from multiple threads.
class Factorization {
public:
    /// Throws NumericalError when a pivot is singular.
    explicit Factorization(const SparseMat& a);
    ~Factorization();
    Factorization(Factorization&&) noexcept;
    Factorization& operator=(Factorization&&) noexcept;
    Factorization(const Factorization&) = delete;
    Factorization& operator=(const Factorization&) = delete;

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
    Eigen::Index size() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct CgResult {
    Eigen::VectorXd x;
    int iterations = 0;
};

/// Conjugate gradients for symmetric positive definite systems. Stops as
/// soon as ||b - A x||_2 / ||b||_2 <= eps or the iteration cap is hit,
/// whichever comes first. An empty x0 means a zero start.
/// Throws NumericalError if the iteration produces non-finite values.
CgResult cg_solve(const SparseMat& a, const Eigen::VectorXd& b, double eps, int max_iters,
                  const Eigen::VectorXd& x0 = Eigen::VectorXd());

enum class EigenMode { Symmetric, Generalised };

/// Eigenpairs of L = D^{-1} W, ordered by increasing magnitude (the zero
/// mode of a closed mesh comes first). Eigenvectors are D-orthonormal:
/// V^T D V = I.
struct EigenPairs {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors; // N x r
    Eigen::VectorXd mass;    // diagonal of D used for orthogonality
    EigenMode mode = EigenMode::Symmetric;

    int count() const { return static_cast<int>(values.size()); }
};

/// Computes the r smallest-magnitude eigenpairs of L = D^{-1} W by
/// shift-invert Lanczos with full reorthogonalization.
///
/// Symmetric mode works on B = D^{-1/2} W D^{-1/2} and back-transforms the
/// eigenvectors; Generalised mode iterates on the pencil W v = lambda D v
/// directly using D-inner products. Both return D-orthonormal vectors and
/// guarantee the residual ||W v - lambda D v||_2 <= tol * ||W||_inf.
/// Throws NumericalError (reporting the converged count) when the iteration
/// budget runs out first.
EigenPairs eig_smallest(const SparseMat& w, const Eigen::VectorXd& d, int r, EigenMode mode,
                        double tol = 1e-10);

/// Largest-magnitude eigenvalue of L = D^{-1} W (the fastest mode), via
/// plain Lanczos on the symmetrized operator.
double eig_largest_magnitude(const SparseMat& w, const Eigen::VectorXd& d, double tol = 1e-9);

} // namespace shapesig
