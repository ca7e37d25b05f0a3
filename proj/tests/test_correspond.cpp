#include <doctest.h>

#include <fstream>
#include <random>

#include <Eigen/Dense>

#include "shapesig/correspond.hpp"
#include "shapesig/errors.hpp"
#include "shapesig/integrator.hpp"
#include "shapesig/laplacian.hpp"
#include "support.hpp"

using namespace shapesig;
using namespace testsupport;

namespace {

DescriptorField field_from(const Eigen::MatrixXd& values) {
    DescriptorField f;
    f.values = values;
    f.pde = Pde::Heat;
    f.method = Method::Full;
    f.samples.resize(values.cols());
    for (Eigen::Index k = 0; k < values.cols(); ++k) f.samples[k] = k + 1.0;
    return f;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = uni(rng);
    }
    return m;
}

// Removal-order oracle: zero entries one at a time (ascending value, ties by
// row-major position) and recount ground-truth survival after every removal.
std::pair<std::vector<std::pair<double, double>>, double>
brute_force_sweep(Eigen::MatrixXd s, const GroundTruth& gt) {
    const Eigen::Index n_trg = s.rows(), n_ref = s.cols();
    const double total = static_cast<double>(n_trg * n_ref);
    auto hit_percent = [&]() {
        int hits = 0;
        for (int i = 0; i < gt.size(); ++i) {
            if (s(gt(i), i) != 0.0) ++hits;
        }
        return 100.0 * hits / static_cast<double>(n_ref);
    };
    auto nnz = [&]() {
        int c = 0;
        for (Eigen::Index j = 0; j < n_trg; ++j) {
            for (Eigen::Index i = 0; i < n_ref; ++i) {
                if (s(j, i) != 0.0) ++c;
            }
        }
        return c;
    };
    std::vector<std::pair<double, double>> curve;
    double min_density = std::numeric_limits<double>::quiet_NaN();
    for (;;) {
        const double density = nnz() / total;
        const double rate = hit_percent();
        curve.emplace_back(density, rate);
        if (rate == 100.0) min_density = density;
        // Find the smallest surviving entry (row-major tie break).
        Eigen::Index bj = -1, bi = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n_trg; ++j) {
            for (Eigen::Index i = 0; i < n_ref; ++i) {
                if (s(j, i) != 0.0 && s(j, i) < best) {
                    best = s(j, i);
                    bj = j;
                    bi = i;
                }
            }
        }
        if (bj < 0) break;
        s(bj, bi) = 0.0;
    }
    return {curve, min_density};
}

} // namespace

TEST_SUITE_BEGIN("correspond");

TEST_CASE("descriptor distance") {
    Eigen::RowVectorXd f(2), g(2);
    f << 1, 2;
    g << 0, 0;
    CHECK(descriptor_distance(f, f) == 0.0);
    CHECK(descriptor_distance(f, g) == 3.0);

    Eigen::RowVectorXd a = random_matrix(1, 9, 61).row(0);
    Eigen::RowVectorXd b = random_matrix(1, 9, 62).row(0);
    double expected = 0.0;
    for (int k = 0; k < 9; ++k) expected += std::abs(a[k] - b[k]);
    CHECK(descriptor_distance(a, b) == doctest::Approx(expected).epsilon(1e-15));

    Eigen::RowVectorXd short_row(1);
    CHECK_THROWS_AS(descriptor_distance(f, short_row), DataError);
}

TEST_CASE("self-matching distinct rows is the identity") {
    Eigen::MatrixXd values(4, 3);
    values << 0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3;
    DescriptorField f = field_from(values);
    Assignment a = match_p2p(f, f);
    for (int i = 0; i < 4; ++i) {
        CHECK(a.target_of[i] == i);
        CHECK(a.distance[i] == 0.0);
    }
}

TEST_CASE("ties resolve to the lowest target index") {
    Eigen::MatrixXd ref(1, 1), trg(6, 1);
    ref << 0;
    trg << 9, 8, 1, 7, 6, -1; // rows 2 and 5 both at distance 1
    Assignment a = match_p2p(field_from(ref), field_from(trg));
    CHECK(a.target_of[0] == 2);
    CHECK(a.distance[0] == 1.0);
}

TEST_CASE("match_p2p equals the exhaustive argmin") {
    for (unsigned seed = 0; seed < 20; ++seed) {
        Eigen::MatrixXd ref = random_matrix(5, 4, 100 + seed);
        Eigen::MatrixXd trg = random_matrix(5, 4, 200 + seed);
        Assignment a = match_p2p(field_from(ref), field_from(trg));
        for (int i = 0; i < 5; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int k = 0; k < 5; ++k) {
                double d = (ref.row(i) - trg.row(k)).cwiseAbs().sum();
                if (d < best_d) {
                    best_d = d;
                    best = k;
                }
            }
            CHECK(a.target_of[i] == best);
        }
    }
}

TEST_CASE("argmin is invariant under a uniform positive scaling") {
    Eigen::MatrixXd ref = random_matrix(6, 5, 63);
    Eigen::MatrixXd trg = random_matrix(7, 5, 64);
    Assignment base = match_p2p(field_from(ref), field_from(trg));
    Assignment scaled = match_p2p(field_from(3.7 * ref), field_from(3.7 * trg));
    CHECK(base.target_of == scaled.target_of);
}

TEST_CASE("incompatible fields are refused") {
    DescriptorField a = field_from(random_matrix(3, 4, 65));
    DescriptorField b = field_from(random_matrix(3, 5, 66));
    CHECK_THROWS_AS(match_p2p(a, b), DataError);
    DescriptorField c = field_from(random_matrix(3, 4, 67));
    c.method = Method::Hks;
    CHECK_THROWS_AS(match_p2p(a, c), DataError);
    DescriptorField d = field_from(random_matrix(3, 4, 68));
    d.samples[0] += 0.5;
    CHECK_THROWS_AS(match_p2p(a, d), DataError);
}

TEST_CASE("soft map rows are stochastic") {
    DescriptorField ref = field_from(random_matrix(6, 4, 69));
    DescriptorField trg = field_from(random_matrix(5, 4, 70));
    SoftMap s = soft_map(ref, trg);
    CHECK(s.target_count() == 5);
    CHECK(s.ref_count() == 6);
    for (Eigen::Index j = 0; j < 5; ++j) {
        CHECK(std::abs(s.probabilities.row(j).sum() - 1.0) <= 1e-10);
        CHECK(s.probabilities.row(j).minCoeff() >= 0.0);
    }
}

TEST_CASE("equidistant rows become uniform") {
    // Target row 0 at L1 distance 2 from every reference row.
    Eigen::MatrixXd ref(4, 1), trg(1, 1);
    ref << 2, 2, 2, 2;
    trg << 0;
    SoftMap s = soft_map(field_from(ref), field_from(trg));
    for (int i = 0; i < 4; ++i) CHECK(s.probabilities(0, i) == doctest::Approx(0.25));
}

TEST_CASE("zero bandwidth falls back to the uniform row") {
    // Over half the reference rows coincide with the target row.
    Eigen::MatrixXd ref(4, 1), trg(1, 1);
    ref << 1, 1, 1, 5;
    trg << 1;
    SoftMap s = soft_map(field_from(ref), field_from(trg));
    for (int i = 0; i < 4; ++i) CHECK(s.probabilities(0, i) == doctest::Approx(0.25));
}

TEST_CASE("exact matches dominate the soft row") {
    // One zero distance, two at the median, two far out in the kernel tail.
    Eigen::MatrixXd ref(5, 1), trg(1, 1);
    ref << 0, 50, 50, 5000, 5000;
    trg << 0;
    SoftMap s = soft_map(field_from(ref), field_from(trg));
    CHECK(s.probabilities(0, 0) > 0.5);
    for (int i = 1; i < 5; ++i) CHECK(s.probabilities(0, 0) > s.probabilities(0, i));
    // Monotone: larger distance, smaller probability (up to one ulp from the
    // vectorized exp).
    for (int i = 2; i < 5; ++i) {
        CHECK(s.probabilities(0, i - 1) >= s.probabilities(0, i) * (1.0 - 1e-12));
    }
    // The far entries are gone for practical purposes.
    CHECK(s.probabilities(0, 4) <= 1e-6);
}

TEST_CASE("soft map matches the frozen kernel formula") {
    Eigen::MatrixXd ref(3, 1), trg(1, 1);
    ref << 0, 1, 4;
    trg << 0;
    SoftMap s = soft_map(field_from(ref), field_from(trg));
    const double bandwidth = 1.0; // median of {0, 1, 4}
    Eigen::Vector3d raw(std::exp(0.0), std::exp(-1.0 / bandwidth), std::exp(-4.0 / bandwidth));
    Eigen::Vector3d expected = raw / raw.sum();
    for (int i = 0; i < 3; ++i) {
        CHECK(s.probabilities(0, i) == doctest::Approx(expected[i]).epsilon(1e-14));
    }
}

TEST_CASE("apply_soft_map") {
    DescriptorField ref = field_from(random_matrix(5, 3, 71));
    DescriptorField trg = field_from(random_matrix(4, 3, 72));
    SoftMap s = soft_map(ref, trg);

    Eigen::VectorXd ones = Eigen::VectorXd::Ones(5);
    CHECK((apply_soft_map(s, ones).array() - 1.0).abs().maxCoeff() <= 1e-10);

    Eigen::VectorXd e2 = Eigen::VectorXd::Zero(5);
    e2[2] = 1.0;
    CHECK((apply_soft_map(s, e2) - s.probabilities.col(2)).norm() == 0.0);

    Eigen::VectorXd h(5);
    h << 1, 0, 1, 0, 1;
    CHECK((apply_soft_map(s, h) - s.probabilities * h).norm() == 0.0);

    CHECK_THROWS_AS(apply_soft_map(s, Eigen::VectorXd::Ones(4)), DataError);
    Eigen::VectorXd bad = Eigen::VectorXd::Constant(5, 0.5);
    CHECK_THROWS_AS(apply_soft_map(s, bad), DataError);
}

TEST_CASE("sparsify sweep on the 2x2 example") {
    SoftMap s;
    s.probabilities.resize(2, 2);
    s.probabilities << 0.9, 0.1, 0.1, 0.9;
    SparsifyResult result = sparsify_sweep(s, GroundTruth::identity(2));
    REQUIRE(result.minimum_density.has_value());
    CHECK(*result.minimum_density == 0.5);
    // Removing one 0.9 afterwards drops the rate to 50%.
    bool saw_half = false;
    for (const auto& [density, rate] : result.curve) {
        if (density == doctest::Approx(0.25)) {
            CHECK(rate == doctest::Approx(50.0));
            saw_half = true;
        }
    }
    CHECK(saw_half);
}

TEST_CASE("a permutation matrix has minimum density 1/N") {
    const int n = 6;
    SoftMap s;
    s.probabilities = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) s.probabilities(i, i) = 1.0;
    SparsifyResult result = sparsify_sweep(s, GroundTruth::identity(n));
    REQUIRE(result.minimum_density.has_value());
    CHECK(*result.minimum_density == doctest::Approx(1.0 / n));
}

TEST_CASE("sweep agrees with the brute-force oracle") {
    for (unsigned seed : {81u, 82u, 83u}) {
        Eigen::MatrixXd raw = random_matrix(30, 20, seed);
        for (Eigen::Index j = 0; j < raw.rows(); ++j) raw.row(j) /= raw.row(j).sum();
        SoftMap s;
        s.probabilities = raw;
        std::mt19937 rng(seed + 1000);
        std::uniform_int_distribution<int> pick(0, 29);
        GroundTruth gt;
        gt.target_of.resize(20);
        for (int i = 0; i < 20; ++i) gt.target_of[i] = pick(rng);

        SparsifyResult fast = sparsify_sweep(s, gt);
        auto [curve, min_density] = brute_force_sweep(raw, gt);
        REQUIRE(fast.minimum_density.has_value());
        CHECK(*fast.minimum_density == doctest::Approx(min_density).epsilon(1e-14));

        // Soft hit rate is non-increasing as density decreases.
        for (std::size_t k = 1; k < fast.curve.size(); ++k) {
            CHECK(fast.curve[k].second <= fast.curve[k - 1].second + 1e-12);
        }
        // Every sampled point sits on the oracle curve.
        for (const auto& [density, rate] : fast.curve) {
            bool found = false;
            for (const auto& [od, orate] : curve) {
                if (std::abs(od - density) <= 1e-14 && std::abs(orate - rate) <= 1e-12) {
                    found = true;
                    break;
                }
            }
            CHECK(found);
        }
    }
}

TEST_CASE("missing ground-truth entries leave the minimum density undefined") {
    SoftMap s;
    s.probabilities.resize(2, 2);
    s.probabilities << 0.0, 1.0, 1.0, 0.0; // anti-diagonal support
    SparsifyResult result = sparsify_sweep(s, GroundTruth::identity(2));
    CHECK_FALSE(result.minimum_density.has_value());
}

TEST_CASE("sparsify_to_density keeps the largest entries") {
    SoftMap s;
    s.probabilities.resize(2, 3);
    s.probabilities << 0.5, 0.3, 0.2, 0.6, 0.1, 0.3;
    SoftMap cut = sparsify_to_density(s, 0.5);
    CHECK(cut.probabilities(0, 0) == 0.5);
    CHECK(cut.probabilities(1, 0) == 0.6);
    // The 0.3 tie resolves by row-major position: (0,1) goes first.
    CHECK(cut.probabilities(0, 1) == 0.0);
    CHECK(cut.probabilities(1, 1) == 0.0);
    CHECK(cut.probabilities(0, 2) == 0.0);
    CHECK(cut.probabilities(1, 2) == 0.3);
    SoftMap renorm = sparsify_to_density(s, 0.5, /*renormalize=*/true);
    CHECK(std::abs(renorm.probabilities.row(0).sum() - 1.0) <= 1e-12);
}

TEST_CASE("hit rate") {
    Assignment a;
    a.target_of = {0, 1, 2};
    a.distance = {0, 0, 0};
    CHECK(hit_rate(a, GroundTruth::identity(3)) == 100.0);
    a.target_of = {0, 1, 0};
    CHECK(hit_rate(a, GroundTruth::identity(3)) == doctest::Approx(200.0 / 3.0));

    std::mt19937 rng(90);
    std::uniform_int_distribution<int> pick(0, 9);
    Assignment random_a;
    GroundTruth gt;
    for (int i = 0; i < 50; ++i) {
        random_a.target_of.push_back(pick(rng));
        random_a.distance.push_back(0.0);
        gt.target_of.push_back(pick(rng));
    }
    int correct = 0;
    for (int i = 0; i < 50; ++i) {
        if (random_a.target_of[i] == gt.target_of[i]) ++correct;
    }
    CHECK(hit_rate(random_a, gt) == doctest::Approx(100.0 * correct / 50.0));
}

TEST_CASE("geodesic distances on a guarded path") {
    // Vertices 0-1-2 collinear with unit edges; vertex 3 sits far off so the
    // triangles add no shortcut.
    TriangleMesh mesh;
    mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {1, 5, 0}};
    mesh.triangles = {{0, 1, 3}, {1, 2, 3}};
    Eigen::VectorXd d = geodesic_distances(mesh, 0);
    CHECK(d[0] == 0.0);
    CHECK(d[1] == doctest::Approx(1.0));
    CHECK(d[2] == doctest::Approx(2.0));
}

TEST_CASE("geodesic distances match Floyd-Warshall") {
    TriangleMesh mesh = bumpy_sphere(1, 0.15, 91); // 42 vertices
    const int n = mesh.vertex_count();
    Eigen::MatrixXd fw =
        Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::infinity());
    for (int i = 0; i < n; ++i) fw(i, i) = 0.0;
    for (const auto& e : build_edges(mesh)) {
        const double len = (mesh.vertices[e.a] - mesh.vertices[e.b]).norm();
        fw(e.a, e.b) = fw(e.b, e.a) = len;
    }
    for (int k = 0; k < n; ++k) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                fw(i, j) = std::min(fw(i, j), fw(i, k) + fw(k, j));
            }
        }
    }
    for (int s = 0; s < n; s += 7) {
        Eigen::VectorXd d = geodesic_distances(mesh, s);
        CHECK((d - fw.row(s).transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    }

    SUBCASE("triangle inequality on sampled triples") {
        for (int a = 0; a < n; a += 11) {
            for (int b = 1; b < n; b += 13) {
                for (int c = 2; c < n; c += 17) {
                    CHECK(fw(a, c) <= fw(a, b) + fw(b, c) + 1e-12);
                }
            }
        }
    }
}

TEST_CASE("geodesic error curve") {
    TriangleMesh mesh = bumpy_sphere(1, 0.1, 92);
    GroundTruth gt = GroundTruth::identity(mesh.vertex_count());

    SUBCASE("perfect assignment") {
        Assignment a;
        for (int i = 0; i < mesh.vertex_count(); ++i) {
            a.target_of.push_back(i);
            a.distance.push_back(0.0);
        }
        GeodesicErrorCurve curve = geodesic_error_curve(a, gt, mesh);
        CHECK(curve.errors.maxCoeff() == 0.0);
        CHECK(curve.fraction_at(0.25) == 1.0);
        CHECK(curve.fraction_at(0.0) == 1.0);
    }

    SUBCASE("constant offset is a step function") {
        // Match every vertex to a neighbour of its ground truth.
        auto edges = build_edges(mesh);
        std::vector<int> neighbour(mesh.vertex_count(), -1);
        for (const auto& e : edges) {
            if (neighbour[e.a] < 0) neighbour[e.a] = e.b;
            if (neighbour[e.b] < 0) neighbour[e.b] = e.a;
        }
        Assignment a;
        for (int i = 0; i < mesh.vertex_count(); ++i) {
            a.target_of.push_back(neighbour[i]);
            a.distance.push_back(0.0);
        }
        GeodesicErrorCurve curve = geodesic_error_curve(a, gt, mesh);
        const double max_err = curve.errors.maxCoeff();
        const double min_err = curve.errors.minCoeff();
        CHECK(min_err > 0.0);
        CHECK(curve.fraction_at(min_err / 2.0) == 0.0);
        CHECK(curve.fraction_at(max_err) == 1.0);
    }

    SUBCASE("curve is monotone non-decreasing") {
        std::mt19937 rng(93);
        std::uniform_int_distribution<int> pick(0, mesh.vertex_count() - 1);
        Assignment a;
        for (int i = 0; i < mesh.vertex_count(); ++i) {
            a.target_of.push_back(pick(rng));
            a.distance.push_back(0.0);
        }
        GeodesicErrorCurve curve = geodesic_error_curve(a, gt, mesh);
        for (std::size_t k = 1; k < curve.fractions.size(); ++k) {
            CHECK(curve.fractions[k] >= curve.fractions[k - 1]);
        }
    }
}

TEST_CASE("disconnected targets count as misses at every threshold") {
    TriangleMesh mesh = unit_square();
    TriangleMesh far = unit_square();
    for (auto& v : far.vertices) v.x() += 100.0;
    for (auto t : far.triangles) mesh.triangles.push_back({t[0] + 4, t[1] + 4, t[2] + 4});
    mesh.vertices.insert(mesh.vertices.end(), far.vertices.begin(), far.vertices.end());

    Assignment a;
    GroundTruth gt;
    a.target_of = {4};
    a.distance = {0.0};
    gt.target_of = {0};
    GeodesicErrorCurve curve = geodesic_error_curve(a, gt, mesh);
    CHECK(std::isinf(curve.errors[0]));
    CHECK(curve.fraction_at(1e9) == 0.0);
}

TEST_CASE("geodesic tolerance sets grow with the radius") {
    TriangleMesh mesh = bumpy_sphere(1, 0.1, 94);
    GroundTruth gt = GroundTruth::identity(mesh.vertex_count());
    auto tight = geodesic_tolerance_sets(gt, mesh, 0.0);
    auto loose = geodesic_tolerance_sets(gt, mesh, 0.25);
    for (int i = 0; i < mesh.vertex_count(); ++i) {
        CHECK(tight[i] == std::vector<int>{i});
        CHECK(loose[i].size() >= tight[i].size());
    }
}

TEST_CASE("output files are written") {
    TempDir tmp;
    Assignment a;
    a.target_of = {1, 0};
    a.distance = {0.5, 0.25};
    save_assignment_csv(a, tmp.file("a.csv"));
    std::ifstream in(tmp.file("a.csv"));
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    CHECK(header == "ref_index,target_index");
    CHECK(first == "0,1");
}

TEST_SUITE_END();
