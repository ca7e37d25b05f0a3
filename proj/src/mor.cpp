#include "shapesig/mor.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <Eigen/Dense>

#include "shapesig/errors.hpp"
#include "shapesig/parallel.hpp"

namespace shapesig {

ReducedModelMCR mcr_reduce(const LaplaceOperator& op, int r, EigenMode mode, double tol) {
    if (r < 1 || r > op.size())
        throw DataError("mcr_reduce: r must lie in [1, N], got " + std::to_string(r));
    EigenPairs pairs = eig_smallest(op.weights, op.cell_areas, r, mode, tol);
    ReducedModelMCR model;
    model.eigenvalues = pairs.values;
    model.modes = pairs.vectors;
    model.fastest_mode = eig_largest_magnitude(op.weights, op.cell_areas);
    return model;
}

double adapted_time(double lambda_r, double lambda_n, double t_m, Pde pde) {
    if (!(t_m > 0.0)) throw DataError("adapted_time: stopping time must be positive");
    if (lambda_r == 0.0)
        throw DataError("adapted_time: lambda_r is zero; pass the largest retained nonzero eigenvalue");
    if (lambda_n == 0.0) throw DataError("adapted_time: lambda_N is zero");
    const double ratio = std::abs(lambda_n) / std::abs(lambda_r);
    return pde == Pde::Heat ? t_m * std::sqrt(ratio) : t_m * std::sqrt(std::sqrt(ratio));
}

DescriptorField mcr_descriptors(const ReducedModelMCR& model, const TimeGrid& grid, Pde pde,
                                bool adapt, const std::optional<TimeGrid>& reference_grid) {
    validate(grid);
    const int r = model.order();
    if (r < 1) throw DataError("mcr_descriptors: empty reduced model");

    TimeGrid used = grid;
    if (adapt) {
        if (reference_grid) {
            used = *reference_grid;
            validate(used);
        } else {
            const double lambda_r = model.eigenvalues[r - 1];
            // A lone (numerically) zero mode keeps the original domain.
            if (std::abs(lambda_r) > 1e-12 * std::max(std::abs(model.fastest_mode), 1e-300)) {
                used.t_end = adapted_time(lambda_r, model.fastest_mode, grid.t_end, pde);
            }
        }
    }

    const double tau = used.dt();
    const double factor = pde == Pde::Heat ? tau : tau * tau;
    Eigen::VectorXd p(r);
    for (int j = 0; j < r; ++j) {
        const double denom = 1.0 - factor * model.eigenvalues[j];
        if (denom == 0.0)
            throw NumericalError("mcr_descriptors: singular recurrence at mode " + std::to_string(j));
        p[j] = 1.0 / denom;
    }

    DescriptorField field;
    field.pde = pde;
    field.method = Method::Mcr;
    field.samples = used.sample_times();
    field.values.resize(model.vertex_count(), used.levels);

    Eigen::MatrixXd w_cur = model.modes.transpose(); // W^0 = V_r^T
    Eigen::MatrixXd w_prev;
    for (int k = 1; k <= used.levels; ++k) {
        if (pde == Pde::Heat || k == 1) {
            Eigen::MatrixXd next = p.asDiagonal() * w_cur;
            w_prev = std::move(w_cur);
            w_cur = std::move(next);
        } else {
            Eigen::MatrixXd next = p.asDiagonal() * (2.0 * w_cur - w_prev);
            w_prev = std::move(w_cur);
            w_cur = std::move(next);
        }
        field.values.col(k - 1) = (model.modes.array() * w_cur.transpose().array()).rowwise().sum();
    }
    return field;
}

namespace {

constexpr char kMcrMagic[8] = {'S', 'S', 'M', 'C', 'R', '0', '0', '1'};

} // namespace

void save_mcr_binary(const ReducedModelMCR& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out.write(kMcrMagic, sizeof(kMcrMagic));
    const std::int64_t n = model.vertex_count();
    const std::int64_t r = model.order();
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(&r), sizeof(r));
    out.write(reinterpret_cast<const char*>(model.eigenvalues.data()),
              static_cast<std::streamsize>(sizeof(double) * model.eigenvalues.size()));
    out.write(reinterpret_cast<const char*>(model.modes.data()),
              static_cast<std::streamsize>(sizeof(double) * model.modes.size()));
    out.write(reinterpret_cast<const char*>(&model.fastest_mode), sizeof(double));
    if (!out) throw DataError("write failed for " + path);
}

ReducedModelMCR load_mcr_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMcrMagic, sizeof(magic)) != 0)
        throw DataError(path + ": not a reduced-model file");
    std::int64_t n = 0, r = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    in.read(reinterpret_cast<char*>(&r), sizeof(r));
    if (!in || n < 1 || r < 1 || r > n) throw DataError(path + ": invalid reduced-model header");
    ReducedModelMCR model;
    model.eigenvalues.resize(r);
    model.modes.resize(n, r);
    in.read(reinterpret_cast<char*>(model.eigenvalues.data()),
            static_cast<std::streamsize>(sizeof(double) * r));
    in.read(reinterpret_cast<char*>(model.modes.data()),
            static_cast<std::streamsize>(sizeof(double) * n * r));
    in.read(reinterpret_cast<char*>(&model.fastest_mode), sizeof(double));
    if (!in) throw DataError(path + ": truncated reduced-model file");
    return model;
}

// --- KSMOR -------------------------------------------------------------------

namespace {

void check_sigma(double sigma) {
    if (sigma == 0.0)
        throw DataError("ksmor: sigma = 0 is forbidden (zero is an eigenvalue of L)");
}

// x = (L - sigma I)^{-1} y, solved in the symmetric form (W - sigma D) x = D y.
Eigen::VectorXd shift_solve(const Factorization& shifted, const Eigen::VectorXd& d,
                            const Eigen::VectorXd& y) {
    Eigen::VectorXd x = shifted.solve(Eigen::VectorXd(d.cwiseProduct(y)));
    if (!x.allFinite()) throw NumericalError("ksmor: shifted solve produced non-finite values");
    return x;
}

} // namespace

Factorization ksmor_shift_factorization(const LaplaceOperator& op, double sigma) {
    check_sigma(sigma);
    SparseMat k = op.weights;
    for (Eigen::Index i = 0; i < op.size(); ++i) k.coeffRef(i, i) -= sigma * op.cell_areas[i];
    k.makeCompressed();
    return Factorization(k);
}

KrylovBasis ksmor_basis(const LaplaceOperator& op, int vertex, double sigma, int q,
                        const Factorization& shifted) {
    check_sigma(sigma);
    const Eigen::Index n = op.size();
    if (vertex < 0 || vertex >= n) throw DataError("ksmor_basis: vertex index out of range");
    if (q < 1 || q > n) throw DataError("ksmor_basis: q must lie in [1, N]");

    KrylovBasis out;
    out.sigma = sigma;
    out.vertex = vertex;
    out.basis.resize(n, q);

    Eigen::VectorXd z = shift_solve(shifted, op.cell_areas, op.delta_initial(vertex));
    double nz = z.norm();
    if (!(nz > 0.0)) throw NumericalError("ksmor_basis: zero starting vector");
    out.basis.col(0) = z / nz;

    int achieved = 1;
    for (int k = 1; k < q; ++k) {
        z = shift_solve(shifted, op.cell_areas, out.basis.col(k - 1));
        const double pre_norm = z.norm();
        for (int j = 0; j < achieved; ++j) {
            z -= out.basis.col(j).dot(z) * out.basis.col(j);
        }
        // Second orthogonalization pass when the first left visible residue.
        Eigen::VectorXd c = out.basis.leftCols(achieved).transpose() * z;
        if (c.cwiseAbs().maxCoeff() > 1e-8 * std::max(z.norm(), 1e-300)) {
            z -= out.basis.leftCols(achieved) * c;
        }
        nz = z.norm();
        if (nz <= 1e-12 * std::max(pre_norm, 1e-300)) {
            out.complete = false;
            break;
        }
        out.basis.col(k) = z / nz;
        ++achieved;
    }
    if (achieved < q) out.basis.conservativeResize(n, achieved);

    // L_q = V^T D^{-1} W V on the achieved columns.
    Eigen::MatrixXd lv = op.weights * out.basis;
    lv.array().colwise() /= op.cell_areas.array();
    out.reduced_op = out.basis.transpose() * lv;
    return out;
}

namespace {

Eigen::VectorXd integrate_reduced(const KrylovBasis& basis, const LaplaceOperator& op,
                                  const TimeGrid& grid, Pde pde) {
    const int q = basis.order();
    const double tau = grid.dt();
    const double factor = pde == Pde::Heat ? tau : tau * tau;
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(q, q) - factor * basis.reduced_op;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);

    Eigen::VectorXd u_prev = basis.basis.transpose() * op.delta_initial(basis.vertex);
    Eigen::VectorXd u_prev2;
    Eigen::RowVectorXd sample_row = basis.basis.row(basis.vertex);

    Eigen::VectorXd row(grid.levels);
    for (int k = 1; k <= grid.levels; ++k) {
        Eigen::VectorXd u;
        if (pde == Pde::Heat || k == 1) {
            u = lu.solve(u_prev);
        } else {
            u = lu.solve(2.0 * u_prev - u_prev2);
        }
        if (!u.allFinite())
            throw NumericalError("ksmor: reduced integration diverged at step " + std::to_string(k));
        row[k - 1] = sample_row * u;
        if (pde == Pde::Wave) u_prev2 = u_prev;
        u_prev = u;
    }
    return row;
}

} // namespace

Eigen::VectorXd ksmor_descriptor_row(const LaplaceOperator& op, int vertex, double sigma, int q,
                                     const TimeGrid& grid, Pde pde, const Factorization& shifted) {
    validate(grid);
    KrylovBasis basis = ksmor_basis(op, vertex, sigma, q, shifted);
    return integrate_reduced(basis, op, grid, pde);
}

DescriptorField ksmor_descriptors(const LaplaceOperator& op, double sigma, int q,
                                  const TimeGrid& grid, Pde pde, int threads) {
    validate(grid);
    Factorization shifted = ksmor_shift_factorization(op, sigma);

    DescriptorField field;
    field.pde = pde;
    field.method = Method::Ksmor;
    field.samples = grid.sample_times();
    field.values.resize(op.size(), grid.levels);
    parallel_for(static_cast<std::size_t>(op.size()), threads, [&](std::size_t i) {
        field.values.row(i) =
            ksmor_descriptor_row(op, static_cast<int>(i), sigma, q, grid, pde, shifted);
    });
    return field;
}

Eigen::VectorXd moments(const LaplaceOperator& op, int out_vertex, int in_vertex, double sigma,
                        int k) {
    check_sigma(sigma);
    if (k < 1) throw DataError("moments: k must be at least 1");
    if (out_vertex < 0 || out_vertex >= op.size() || in_vertex < 0 || in_vertex >= op.size())
        throw DataError("moments: vertex index out of range");

    Factorization shifted = ksmor_shift_factorization(op, sigma);
    Eigen::VectorXd w = op.delta_initial(in_vertex);
    Eigen::VectorXd out(k);
    for (int j = 0; j < k; ++j) {
        w = shift_solve(shifted, op.cell_areas, w);
        out[j] = w[out_vertex];
    }
    return out;
}

Eigen::VectorXd reduced_moments(const KrylovBasis& basis, const LaplaceOperator& op,
                                int out_vertex, int k) {
    if (k < 1) throw DataError("reduced_moments: k must be at least 1");
    const int q = basis.order();
    Eigen::MatrixXd shifted = basis.reduced_op - basis.sigma * Eigen::MatrixXd::Identity(q, q);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(shifted);

    Eigen::VectorXd e_r = basis.basis.row(out_vertex);
    Eigen::VectorXd w = basis.basis.transpose() * op.delta_initial(basis.vertex);
    Eigen::VectorXd out(k);
    for (int j = 0; j < k; ++j) {
        w = lu.solve(w);
        out[j] = e_r.dot(w);
    }
    return out;
}

} // namespace shapesig
