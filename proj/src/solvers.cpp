#include "shapesig/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "shapesig/errors.hpp"

namespace shapesig {

// --- Factorization ---------------------------------------------------------

struct Factorization::Impl {
    SparseMat matrix; // SparseLU keeps internal references; own the storage
    Eigen::SparseLU<SparseMat, Eigen::COLAMDOrdering<int>> lu;
};

Factorization::Factorization(const SparseMat& a) : impl_(std::make_unique<Impl>()) {
    if (a.rows() != a.cols()) throw DataError("factorize: matrix must be square");
    impl_->matrix = a;
    impl_->matrix.makeCompressed();
    impl_->lu.compute(impl_->matrix);
    if (impl_->lu.info() != Eigen::Success) {
        throw NumericalError("sparse LU factorization failed (singular pivot)");
    }
}

Factorization::~Factorization() = default;
Factorization::Factorization(Factorization&&) noexcept = default;
Factorization& Factorization::operator=(Factorization&&) noexcept = default;

Eigen::VectorXd Factorization::solve(const Eigen::VectorXd& b) const {
    if (b.size() != impl_->matrix.rows()) throw DataError("solve: right-hand side size mismatch");
    return impl_->lu.solve(b);
}

Eigen::MatrixXd Factorization::solve(const Eigen::MatrixXd& b) const {
    if (b.rows() != impl_->matrix.rows()) throw DataError("solve: right-hand side size mismatch");
    return impl_->lu.solve(b);
}

Eigen::Index Factorization::size() const { return impl_->matrix.rows(); }

// --- Conjugate gradients ----------------------------------------------------

CgResult cg_solve(const SparseMat& a, const Eigen::VectorXd& b, double eps, int max_iters,
                  const Eigen::VectorXd& x0) {
    if (eps <= 0) throw DataError("cg_solve: eps must be positive");
    if (max_iters < 1) throw DataError("cg_solve: max_iters must be at least 1");
    if (a.rows() != a.cols() || a.rows() != b.size()) throw DataError("cg_solve: dimension mismatch");

    Eigen::VectorXd x;
    if (x0.size() == 0) {
        x = Eigen::VectorXd::Zero(b.size());
    } else {
        if (x0.size() != b.size()) throw DataError("cg_solve: x0 size mismatch");
        x = x0;
    }

    const double b_norm = b.norm();
    if (b_norm == 0.0) return {Eigen::VectorXd::Zero(b.size()), 0};

    Eigen::VectorXd r = b - a * x;
    double rs = r.squaredNorm();
    if (std::sqrt(rs) <= eps * b_norm) return {std::move(x), 0};

    Eigen::VectorXd p = r;
    Eigen::VectorXd ap(b.size());
    for (int it = 1; it <= max_iters; ++it) {
        ap.noalias() = a * p;
        double p_ap = p.dot(ap);
        if (!(p_ap > 0.0)) {
            throw NumericalError("cg_solve: breakdown at iteration " + std::to_string(it) +
                                 " (matrix not positive definite or non-finite values)");
        }
        double alpha = rs / p_ap;
        x += alpha * p;
        r -= alpha * ap;
        double rs_new = r.squaredNorm();
        if (!std::isfinite(rs_new)) {
            throw NumericalError("cg_solve: divergence at iteration " + std::to_string(it));
        }
        if (std::sqrt(rs_new) <= eps * b_norm) return {std::move(x), it};
        p = r + (rs_new / rs) * p;
        rs = rs_new;
    }
    return {std::move(x), max_iters};
}

// --- Lanczos ----------------------------------------------------------------

namespace {

double inf_norm(const SparseMat& a) {
    Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(a.rows());
    for (int k = 0; k < a.outerSize(); ++k) {
        for (SparseMat::InnerIterator it(a, k); it; ++it) row_sums[it.row()] += std::abs(it.value());
    }
    return a.rows() == 0 ? 0.0 : row_sums.maxCoeff();
}

SparseMat scale_symmetric(const SparseMat& w, const Eigen::VectorXd& d) {
    Eigen::VectorXd inv_sqrt = d.cwiseSqrt().cwiseInverse();
    SparseMat b = w;
    for (int k = 0; k < b.outerSize(); ++k) {
        for (SparseMat::InnerIterator it(b, k); it; ++it) {
            it.valueRef() *= inv_sqrt[it.row()] * inv_sqrt[it.col()];
        }
    }
    return b;
}

using ApplyFn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;
using DotFn = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

// Lanczos iteration with full reorthogonalization for a self-adjoint
// operator under a caller-supplied inner product. Breakdowns close the
// current Krylov block and restart from a fresh random direction in the
// orthogonal complement, so degenerate eigenspaces are eventually exhausted.
class Lanczos {
public:
    Lanczos(ApplyFn apply, DotFn dot, Eigen::Index n, Eigen::Index max_dim, std::uint64_t seed)
        : apply_(std::move(apply)),
          dot_(std::move(dot)),
          n_(n),
          max_dim_(std::min(n, max_dim)),
          rng_(seed) {
        basis_.resize(n_, max_dim_ + 1);
        alpha_.reserve(static_cast<std::size_t>(max_dim_));
        beta_.reserve(static_cast<std::size_t>(max_dim_));
        if (!start_block()) stuck_ = true;
    }

    int dim() const { return static_cast<int>(alpha_.size()); }
    bool exhausted() const { return stuck_ || dim() >= max_dim_; }

    // Runs up to `steps` more iterations; returns false once no progress is
    // possible.
    bool extend(int steps) {
        for (int s = 0; s < steps; ++s) {
            if (exhausted()) return false;
            const Eigen::Index j = dim();
            Eigen::VectorXd z(n_);
            apply_(basis_.col(j), z);
            double a = dot_(basis_.col(j), z);
            scale_ = std::max(scale_, std::abs(a));
            z -= a * basis_.col(j);
            if (j > 0 && beta_.back() != 0.0) z -= beta_.back() * basis_.col(j - 1);
            orthogonalize(z, j + 1);
            alpha_.push_back(a);
            double bnorm = std::sqrt(std::max(0.0, dot_(z, z)));
            scale_ = std::max(scale_, bnorm);
            double breakdown = 1e-13 * std::max(scale_, 1e-300);
            if (bnorm <= breakdown) {
                beta_.push_back(0.0);
                if (dim() < max_dim_ && !start_block()) stuck_ = true;
            } else {
                beta_.push_back(bnorm);
                basis_.col(j + 1) = z / bnorm;
            }
        }
        return !exhausted();
    }

    struct Ritz {
        Eigen::VectorXd theta;      // selected Ritz values, largest |theta| first
        Eigen::MatrixXd coeff;      // tridiagonal eigenvector columns
        Eigen::VectorXd residual;   // |beta_pending * last coefficient|
    };

    Ritz select_largest(int nev) const {
        const int j = dim();
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(j, j);
        for (int i = 0; i < j; ++i) t(i, i) = alpha_[static_cast<std::size_t>(i)];
        for (int i = 0; i + 1 < j; ++i) {
            t(i, i + 1) = beta_[static_cast<std::size_t>(i)];
            t(i + 1, i) = beta_[static_cast<std::size_t>(i)];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        const Eigen::VectorXd& ev = es.eigenvalues();

        std::vector<int> order(static_cast<std::size_t>(j));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return std::abs(ev[a]) > std::abs(ev[b]); });

        const int take = std::min(nev, j);
        const double pending = beta_.empty() ? 0.0 : beta_.back();
        Ritz out;
        out.theta.resize(take);
        out.coeff.resize(j, take);
        out.residual.resize(take);
        for (int k = 0; k < take; ++k) {
            int idx = order[static_cast<std::size_t>(k)];
            out.theta[k] = ev[idx];
            out.coeff.col(k) = es.eigenvectors().col(idx);
            out.residual[k] = std::abs(pending * es.eigenvectors()(j - 1, idx));
        }
        return out;
    }

    Eigen::MatrixXd assemble(const Eigen::MatrixXd& coeff) const {
        return basis_.leftCols(dim()) * coeff;
    }

    // Projection Q^T A Q of a (symmetric) operator onto the current basis,
    // for Rayleigh-Ritz extraction in the original problem.
    Eigen::MatrixXd project(const ApplyFn& apply_orig) const {
        const int j = dim();
        Eigen::MatrixXd aq(n_, j);
        Eigen::VectorXd tmp(n_);
        for (int k = 0; k < j; ++k) {
            apply_orig(basis_.col(k), tmp);
            aq.col(k) = tmp;
        }
        Eigen::MatrixXd t = basis_.leftCols(j).transpose() * aq;
        return 0.5 * (t + t.transpose());
    }

private:
    // Two classical Gram-Schmidt passes against the first `count` basis
    // vectors.
    void orthogonalize(Eigen::VectorXd& z, Eigen::Index count) const {
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index k = 0; k < count; ++k) {
                double c = dot_(basis_.col(k), z);
                z -= c * basis_.col(k);
            }
        }
    }

    bool start_block() {
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        for (int attempt = 0; attempt < 5; ++attempt) {
            Eigen::VectorXd z(n_);
            for (Eigen::Index i = 0; i < n_; ++i) z[i] = uni(rng_);
            orthogonalize(z, dim());
            double nz = std::sqrt(std::max(0.0, dot_(z, z)));
            if (nz > 1e-8 * std::sqrt(static_cast<double>(n_))) {
                basis_.col(dim()) = z / nz;
                return true;
            }
        }
        return false;
    }

    ApplyFn apply_;
    DotFn dot_;
    Eigen::Index n_;
    Eigen::Index max_dim_;
    Eigen::MatrixXd basis_;
    std::vector<double> alpha_;
    std::vector<double> beta_;
    double scale_ = 0.0;
    bool stuck_ = false;
    std::mt19937_64 rng_;
};

constexpr std::uint64_t kLanczosSeed = 0x5ca1ab1e;

void check_spectral_inputs(const SparseMat& w, const Eigen::VectorXd& d) {
    if (w.rows() != w.cols()) throw DataError("eigensolver: W must be square");
    if (d.size() != w.rows()) throw DataError("eigensolver: D size mismatch");
    if (d.size() > 0 && !(d.minCoeff() > 0.0)) throw DataError("eigensolver: D must be strictly positive");
#ifndef NDEBUG
    SparseMat diff = SparseMat(w.transpose()) - w;
    if (inf_norm(diff) > 1e-12 * std::max(1.0, inf_norm(w)))
        throw DataError("eigensolver: W is not symmetric");
#endif
}

} // namespace

EigenPairs eig_smallest(const SparseMat& w, const Eigen::VectorXd& d, int r, EigenMode mode,
                        double tol) {
    check_spectral_inputs(w, d);
    const Eigen::Index n = w.rows();
    if (r < 1 || r > n) throw DataError("eig_smallest: r must lie in [1, N]");

    const SparseMat b = scale_symmetric(w, d);
    const double b_inf = inf_norm(b);
    const double w_inf = inf_norm(w);
    const double sigma = 1e-8 * (b_inf > 0.0 ? b_inf : 1.0);

    Eigen::SimplicialLDLT<SparseMat> shifted;
    ApplyFn apply;
    DotFn dot;
    if (mode == EigenMode::Symmetric) {
        SparseMat c = b;
        SparseMat eye(n, n);
        eye.setIdentity();
        c -= sigma * eye;
        shifted.compute(c);
        if (shifted.info() != Eigen::Success)
            throw NumericalError("eig_smallest: shifted factorization failed");
        apply = [&shifted](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = shifted.solve(x); };
        dot = [](const Eigen::VectorXd& a, const Eigen::VectorXd& c2) { return a.dot(c2); };
    } else {
        SparseMat k = w;
        SparseMat dm(n, n);
        dm.setIdentity();
        for (Eigen::Index i = 0; i < n; ++i) dm.coeffRef(i, i) = d[i];
        k -= sigma * dm;
        shifted.compute(k);
        if (shifted.info() != Eigen::Success)
            throw NumericalError("eig_smallest: shifted factorization failed");
        apply = [&shifted, &d](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
            y = shifted.solve(d.cwiseProduct(x));
        };
        dot = [&d](const Eigen::VectorXd& a, const Eigen::VectorXd& c2) {
            return a.dot(d.cwiseProduct(c2));
        };
    }

    const Eigen::Index max_dim = std::min<Eigen::Index>(n, std::max(3 * r + 60, 120));
    Lanczos lanczos(apply, dot, n, max_dim, kLanczosSeed);
    const Eigen::VectorXd inv_sqrt_d = d.cwiseSqrt().cwiseInverse();

    // The shifted solves steer the subspace toward the slow end; eigenpairs
    // are extracted by Rayleigh-Ritz in the original operator, which stays
    // accurate across the whole selected window.
    ApplyFn apply_orig;
    if (mode == EigenMode::Symmetric) {
        apply_orig = [&b](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y.noalias() = b * x; };
    } else {
        apply_orig = [&w](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y.noalias() = w * x; };
    }

    double inner_tol = 1e-11;
    int best_converged = 0;
    for (;;) {
        bool can_grow = lanczos.extend(16);
        if (lanczos.dim() >= r) {
            Lanczos::Ritz ritz = lanczos.select_largest(std::min(r, lanczos.dim()));
            bool inner_ok = ritz.theta.size() >= r;
            for (int i = 0; inner_ok && i < ritz.theta.size(); ++i) {
                if (ritz.residual[i] > inner_tol * std::abs(ritz.theta[i])) inner_ok = false;
            }
            if (inner_ok || !can_grow) {
                Eigen::MatrixXd t = lanczos.project(apply_orig);
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
                std::vector<int> pick(static_cast<std::size_t>(t.rows()));
                std::iota(pick.begin(), pick.end(), 0);
                std::stable_sort(pick.begin(), pick.end(), [&](int a, int c2) {
                    return std::abs(es.eigenvalues()[a]) < std::abs(es.eigenvalues()[c2]);
                });
                Eigen::MatrixXd coeff(t.rows(), r);
                for (int i = 0; i < r; ++i) coeff.col(i) = es.eigenvectors().col(pick[i]);
                Eigen::MatrixXd y = lanczos.assemble(coeff);

                EigenPairs pairs;
                pairs.mode = mode;
                pairs.mass = d;
                pairs.values.resize(r);
                pairs.vectors.resize(n, r);
                int converged = 0;
                for (int i = 0; i < r; ++i) {
                    Eigen::VectorXd v = mode == EigenMode::Symmetric
                                            ? Eigen::VectorXd(inv_sqrt_d.cwiseProduct(y.col(i)))
                                            : Eigen::VectorXd(y.col(i));
                    double d_norm = std::sqrt(v.dot(d.cwiseProduct(v)));
                    v /= d_norm;
                    double lambda = v.dot(w * v);
                    double res = (w * v - lambda * d.cwiseProduct(v)).norm();
                    pairs.values[i] = lambda;
                    pairs.vectors.col(i) = v;
                    if (res <= tol * std::max(w_inf, 1e-300)) ++converged;
                }
                best_converged = std::max(best_converged, converged);
                if (converged == r) {
                    // Order by increasing magnitude; stable on ties.
                    std::vector<int> order(static_cast<std::size_t>(r));
                    std::iota(order.begin(), order.end(), 0);
                    std::stable_sort(order.begin(), order.end(), [&](int a, int c2) {
                        return std::abs(pairs.values[a]) < std::abs(pairs.values[c2]);
                    });
                    EigenPairs sorted;
                    sorted.mode = mode;
                    sorted.mass = d;
                    sorted.values.resize(r);
                    sorted.vectors.resize(n, r);
                    for (int i = 0; i < r; ++i) {
                        sorted.values[i] = pairs.values[order[static_cast<std::size_t>(i)]];
                        sorted.vectors.col(i) = pairs.vectors.col(order[static_cast<std::size_t>(i)]);
                    }
                    return sorted;
                }
                if (!can_grow) {
                    throw NumericalError("eig_smallest: only " + std::to_string(best_converged) +
                                         " of " + std::to_string(r) +
                                         " eigenpairs converged within the iteration budget");
                }
                inner_tol = std::max(inner_tol * 1e-2, 1e-16);
            }
        } else if (!can_grow) {
            throw NumericalError("eig_smallest: Krylov space exhausted after " +
                                 std::to_string(lanczos.dim()) + " steps; " +
                                 std::to_string(best_converged) + " of " + std::to_string(r) +
                                 " eigenpairs converged");
        }
    }
}

double eig_largest_magnitude(const SparseMat& w, const Eigen::VectorXd& d, double tol) {
    check_spectral_inputs(w, d);
    const Eigen::Index n = w.rows();
    const SparseMat b = scale_symmetric(w, d);

    ApplyFn apply = [&b](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y.noalias() = b * x; };
    DotFn dot = [](const Eigen::VectorXd& a, const Eigen::VectorXd& c2) { return a.dot(c2); };

    const Eigen::Index max_dim = std::min<Eigen::Index>(n, 400);
    Lanczos lanczos(apply, dot, n, max_dim, kLanczosSeed + 1);
    double prev_theta = 0.0;
    int stable_checks = 0;
    for (;;) {
        bool can_grow = lanczos.extend(8);
        if (lanczos.dim() >= 1) {
            Lanczos::Ritz ritz = lanczos.select_largest(1);
            double theta = ritz.theta[0];
            double mag = std::max(std::abs(theta), 1e-300);
            if (ritz.residual[0] <= tol * mag) return theta;
            // The fast end of the spectrum is densely clustered; accept once
            // the value itself has stopped moving.
            if (std::abs(theta - prev_theta) <= 1e-9 * mag) {
                if (++stable_checks >= 4) return theta;
            } else {
                stable_checks = 0;
            }
            prev_theta = theta;
            if (!can_grow) {
                if (ritz.residual[0] <= 1e-4 * mag || stable_checks > 0) return theta;
                throw NumericalError("eig_largest_magnitude: no convergence within budget");
            }
        } else if (!can_grow) {
            throw NumericalError("eig_largest_magnitude: no convergence within budget");
        }
    }
}

} // namespace shapesig
