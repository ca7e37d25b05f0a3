#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "shapesig/errors.hpp"
#include "shapesig/integrator.hpp"
#include "shapesig/laplacian.hpp"
#include "shapesig/mor.hpp"
#include "support.hpp"

using namespace shapesig;
using namespace testsupport;

TEST_SUITE_BEGIN("mor");

TEST_CASE("mcr_reduce on the toy pair") {
    LaplaceOperator op = toy_pair_operator();
    ReducedModelMCR model = mcr_reduce(op, 1);
    REQUIRE(model.order() == 1);
    CHECK(std::abs(model.eigenvalues[0]) <= 1e-10);
    const double c = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(std::abs(model.modes(0, 0)) - c) <= 1e-10);
    CHECK(std::abs(std::abs(model.modes(1, 0)) - c) <= 1e-10);
    CHECK(std::abs(model.fastest_mode + 2.0) <= 1e-8);

    CHECK_THROWS_AS(mcr_reduce(op, 0), DataError);
}

TEST_CASE("full-order reduction recovers the dense spectrum") {
    LaplaceOperator op = assemble_laplacian(grid_patch(6, 6, 0.05, 41)); // 49 vertices
    const int n = static_cast<int>(op.size());
    ReducedModelMCR model = mcr_reduce(op, n);
    Eigen::MatrixXd w = dense(op.weights);
    Eigen::MatrixXd d = op.cell_areas.asDiagonal();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(w, d);
    Eigen::VectorXd expected = es.eigenvalues();
    std::sort(expected.data(), expected.data() + n,
              [](double a, double b) { return std::abs(a) < std::abs(b); });
    const double scale = expected.cwiseAbs().maxCoeff();
    for (int k = 0; k < n; ++k) CHECK(std::abs(model.eigenvalues[k] - expected[k]) <= 1e-8 * scale);
    CHECK(std::abs(model.fastest_mode - expected[n - 1]) <= 1e-6 * scale);
}

TEST_CASE("adapted time formulas") {
    CHECK(adapted_time(-1.0, -4.0, 25.0, Pde::Heat) == doctest::Approx(50.0).epsilon(1e-14));
    CHECK(adapted_time(-1.0, -4.0, 25.0, Pde::Wave) ==
          doctest::Approx(25.0 * std::sqrt(2.0)).epsilon(1e-14));
    CHECK(adapted_time(-4.0, -4.0, 25.0, Pde::Heat) == 25.0); // full order keeps the domain
    CHECK(adapted_time(-4.0, -4.0, 25.0, Pde::Wave) == 25.0);
    CHECK_THROWS_AS(adapted_time(0.0, -4.0, 25.0, Pde::Heat), DataError);
    CHECK_THROWS_AS(adapted_time(-1.0, 0.0, 25.0, Pde::Heat), DataError);

    SUBCASE("monotone non-increasing in |lambda_r|") {
        double prev = adapted_time(-0.25, -16.0, 25.0, Pde::Heat);
        for (double mag : {0.5, 1.0, 2.0, 4.0, 16.0}) {
            double t = adapted_time(-mag, -16.0, 25.0, Pde::Heat);
            CHECK(t <= prev + 1e-12);
            prev = t;
        }
    }
}

TEST_CASE("mcr at full order reproduces the integrator") {
    LaplaceOperator op = assemble_laplacian(grid_patch(6, 5, 0.05, 42)); // 42 vertices
    const int n = static_cast<int>(op.size());
    ReducedModelMCR model = mcr_reduce(op, n);
    TimeGrid grid{5.0, 8};
    for (Pde pde : {Pde::Heat, Pde::Wave}) {
        DescriptorField full = pde == Pde::Heat ? heat_full(op, grid) : wave_full(op, grid);
        DescriptorField reduced = mcr_descriptors(model, grid, pde);
        CHECK((full.values - reduced.values).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK(reduced.method == Method::Mcr);
    }
}

TEST_CASE("two-cell reduced heat matches the full-order first step") {
    LaplaceOperator op = toy_pair_operator();
    ReducedModelMCR model = mcr_reduce(op, 2);
    DescriptorField field = mcr_descriptors(model, TimeGrid{1.0, 1}, Pde::Heat);
    CHECK(std::abs(field.values(0, 0) - 2.0 / 3.0) <= 1e-10);
}

TEST_CASE("single zero mode gives a time-constant descriptor") {
    LaplaceOperator op = assemble_laplacian(icosphere(1));
    ReducedModelMCR model = mcr_reduce(op, 1);
    DescriptorField field = mcr_descriptors(model, TimeGrid{25.0, 6}, Pde::Heat, /*adapt=*/true);
    // Adaptation is skipped for the lone zero mode; the domain stays [0, t_M].
    CHECK(field.t_end() == doctest::Approx(25.0));
    for (Eigen::Index i = 0; i < field.values.rows(); ++i) {
        const double expected = model.modes(i, 0) * model.modes(i, 0);
        for (Eigen::Index k = 0; k < field.values.cols(); ++k) {
            CHECK(std::abs(field.values(i, k) - expected) <= 1e-12);
        }
    }
}

TEST_CASE("reduced heat trajectories never grow") {
    LaplaceOperator op = assemble_laplacian(bumpy_sphere(1, 0.15, 43));
    ReducedModelMCR model = mcr_reduce(op, 6);
    DescriptorField field = mcr_descriptors(model, TimeGrid{10.0, 10}, Pde::Heat);
    for (Eigen::Index i = 0; i < field.values.rows(); ++i) {
        for (Eigen::Index k = 1; k < field.values.cols(); ++k) {
            CHECK(field.values(i, k) <= field.values(i, k - 1) + 1e-12);
        }
    }
}

TEST_CASE("adapted reference grid is reused by the transformed shape") {
    LaplaceOperator op = assemble_laplacian(bumpy_sphere(1, 0.1, 44));
    ReducedModelMCR model = mcr_reduce(op, 5);
    TimeGrid base{25.0, 10};
    DescriptorField ref = mcr_descriptors(model, base, Pde::Heat, /*adapt=*/true);
    const double expected =
        adapted_time(model.eigenvalues[4], model.fastest_mode, base.t_end, Pde::Heat);
    CHECK(ref.t_end() == doctest::Approx(expected).epsilon(1e-12));

    TimeGrid ref_grid{ref.t_end(), static_cast<int>(ref.sample_count())};
    DescriptorField trg = mcr_descriptors(model, base, Pde::Heat, /*adapt=*/true, ref_grid);
    CHECK(trg.samples == ref.samples);
}

TEST_CASE("mcr binary round trip") {
    LaplaceOperator op = assemble_laplacian(bumpy_sphere(1, 0.1, 45));
    ReducedModelMCR model = mcr_reduce(op, 4);
    TempDir tmp;
    save_mcr_binary(model, tmp.file("model.mcr"));
    ReducedModelMCR loaded = load_mcr_binary(tmp.file("model.mcr"));
    CHECK(loaded.eigenvalues == model.eigenvalues);
    CHECK(loaded.modes == model.modes);
    CHECK(loaded.fastest_mode == model.fastest_mode);
}

TEST_CASE("krylov basis is orthonormal and spans the shifted solves") {
    LaplaceOperator op = toy_pair_operator();
    Factorization shifted = ksmor_shift_factorization(op, 0.1);

    SUBCASE("q = 1 is the normalized shifted solve") {
        KrylovBasis basis = ksmor_basis(op, 0, 0.1, 1, shifted);
        Eigen::MatrixXd l = op.cell_areas.cwiseInverse().asDiagonal() * dense(op.weights);
        Eigen::MatrixXd shifted_dense = l - 0.1 * Eigen::MatrixXd::Identity(2, 2);
        Eigen::VectorXd expected = shifted_dense.partialPivLu().solve(op.delta_initial(0));
        expected.normalize();
        if (expected.dot(basis.basis.col(0)) < 0) expected = -expected;
        CHECK((basis.basis.col(0) - expected).norm() <= 1e-12);
    }

    SUBCASE("q = 2 basis is orthonormal") {
        KrylovBasis basis = ksmor_basis(op, 0, 0.1, 2, shifted);
        Eigen::MatrixXd gram = basis.basis.transpose() * basis.basis;
        CHECK((gram - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(basis.complete);
    }
}

TEST_CASE("ksmor at full order reproduces the integrator") {
    LaplaceOperator op = assemble_laplacian(grid_patch(5, 4, 0.05, 46)); // 30 vertices
    const int n = static_cast<int>(op.size());
    TimeGrid grid{5.0, 6};
    Factorization shifted = ksmor_shift_factorization(op, 0.1);
    DescriptorField full = heat_full(op, grid);
    for (int vertex : {0, 7, 29}) {
        Eigen::VectorXd row = ksmor_descriptor_row(op, vertex, 0.1, n, grid, Pde::Heat, shifted);
        CHECK((row.transpose() - full.values.row(vertex)).cwiseAbs().maxCoeff() <= 1e-6);
    }

    DescriptorField wave = wave_full(op, grid);
    Eigen::VectorXd wave_row = ksmor_descriptor_row(op, 3, 0.1, n, grid, Pde::Wave, shifted);
    CHECK((wave_row.transpose() - wave.values.row(3)).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("two-cell ksmor heat first value") {
    LaplaceOperator op = toy_pair_operator();
    Factorization shifted = ksmor_shift_factorization(op, 0.1);
    Eigen::VectorXd row = ksmor_descriptor_row(op, 0, 0.1, 2, TimeGrid{1.0, 1}, Pde::Heat, shifted);
    CHECK(std::abs(row[0] - 2.0 / 3.0) <= 1e-10);
}

TEST_CASE("sigma at an eigenvalue fails, sigma zero is rejected") {
    LaplaceOperator op = toy_pair_operator();
    CHECK_THROWS_AS(ksmor_shift_factorization(op, 0.0), DataError);
    CHECK_THROWS(ksmor_shift_factorization(op, -2.0)); // exactly an eigenvalue of L
}

TEST_CASE("arnoldi breakdown on a disconnected shape returns a flagged basis") {
    // Two disjoint squares: the Krylov space from a delta stays inside one
    // component of 4 vertices.
    TriangleMesh mesh = unit_square();
    TriangleMesh other = unit_square();
    for (auto& v : other.vertices) v.x() += 10.0;
    for (auto t : other.triangles) {
        mesh.triangles.push_back({t[0] + 4, t[1] + 4, t[2] + 4});
    }
    mesh.vertices.insert(mesh.vertices.end(), other.vertices.begin(), other.vertices.end());
    LaplaceOperator op = assemble_laplacian(mesh);
    Factorization shifted = ksmor_shift_factorization(op, 0.1);
    KrylovBasis basis = ksmor_basis(op, 0, 0.1, 8, shifted);
    CHECK_FALSE(basis.complete);
    CHECK(basis.order() <= 4);
}

TEST_CASE("moments of the 2x2 system") {
    LaplaceOperator op = toy_pair_operator();
    Eigen::VectorXd m = moments(op, 0, 0, 0.1, 2);
    // (L - 0.1 I)^{-1} for L = [[-1,1],[1,-1]] has (0,0) entry -1.1/0.21.
    CHECK(std::abs(m[0] - (-1.1 / 0.21)) <= 1e-10);
    Eigen::MatrixXd l = dense(op.weights); // D = I
    Eigen::MatrixXd inv = (l - 0.1 * Eigen::MatrixXd::Identity(2, 2)).inverse();
    CHECK(std::abs(m[1] - (inv * inv)(0, 0)) <= 1e-10);
    CHECK_THROWS_AS(moments(op, 0, 0, 0.1, 0), DataError);
}

TEST_CASE("reduced moments match full moments at q = 2 on the toy pair") {
    LaplaceOperator op = toy_pair_operator();
    Factorization shifted = ksmor_shift_factorization(op, 0.1);
    KrylovBasis basis = ksmor_basis(op, 0, 0.1, 2, shifted);
    Eigen::VectorXd full = moments(op, 0, 0, 0.1, 2);
    Eigen::VectorXd reduced = reduced_moments(basis, op, 0, 2);
    CHECK(std::abs(full[0] - reduced[0]) <= 1e-10);
    CHECK(std::abs(full[1] - reduced[1]) <= 1e-10);
}

TEST_CASE("moment matching on random meshes") {
    for (unsigned seed : {1u, 2u, 3u, 4u, 5u}) {
        LaplaceOperator op = assemble_laplacian(grid_patch(7, 6, 0.06, seed)); // 56 vertices
        Factorization shifted = ksmor_shift_factorization(op, 0.1);
        const int vertex = static_cast<int>(seed) % static_cast<int>(op.size());
        Eigen::VectorXd full = moments(op, vertex, vertex, 0.1, 5);
        for (int q = 1; q <= 5; ++q) {
            KrylovBasis basis = ksmor_basis(op, vertex, 0.1, q, shifted);
            Eigen::VectorXd reduced = reduced_moments(basis, op, vertex, q);
            for (int k = 0; k < q; ++k) {
                CHECK(std::abs(full[k] - reduced[k]) <=
                      1e-8 * std::max(1.0, std::abs(full[k])));
            }
        }
    }
}

TEST_CASE("projected operator stays stable") {
    LaplaceOperator op = assemble_laplacian(icosphere(1));
    Factorization shifted = ksmor_shift_factorization(op, 0.1);
    KrylovBasis basis = ksmor_basis(op, 5, 0.1, 5, shifted);
    Eigen::EigenSolver<Eigen::MatrixXd> es(basis.reduced_op);
    const double scale = basis.reduced_op.cwiseAbs().maxCoeff();
    for (int k = 0; k < es.eigenvalues().size(); ++k) {
        CHECK(es.eigenvalues()[k].real() <= 1e-8 * scale);
    }
}

TEST_CASE("ksmor full field by parallel map") {
    LaplaceOperator op = assemble_laplacian(grid_patch(4, 3, 0.05, 47)); // 20 vertices
    TimeGrid grid{4.0, 5};
    DescriptorField field = ksmor_descriptors(op, 0.1, 3, grid, Pde::Heat, 2);
    CHECK(field.values.rows() == op.size());
    CHECK(field.method == Method::Ksmor);
    Factorization shifted = ksmor_shift_factorization(op, 0.1);
    Eigen::VectorXd row = ksmor_descriptor_row(op, 11, 0.1, 3, grid, Pde::Heat, shifted);
    CHECK((row.transpose() - field.values.row(11)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_SUITE_END();
