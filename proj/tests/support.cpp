#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>

#include <unistd.h>

namespace testsupport {

TriangleMesh unit_square() {
    TriangleMesh mesh;
    mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
    mesh.triangles = {{0, 1, 2}, {0, 2, 3}};
    return mesh;
}

TriangleMesh icosphere(int level) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    TriangleMesh mesh;
    mesh.vertices = {{-1, phi, 0}, {1, phi, 0},   {-1, -phi, 0}, {1, -phi, 0},
                     {0, -1, phi}, {0, 1, phi},   {0, -1, -phi}, {0, 1, -phi},
                     {phi, 0, -1}, {phi, 0, 1},   {-phi, 0, -1}, {-phi, 0, 1}};
    for (auto& v : mesh.vertices) v.normalize();
    mesh.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

    for (int l = 0; l < level; ++l) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Eigen::Vector3d m = (mesh.vertices[static_cast<std::size_t>(a)] +
                                 mesh.vertices[static_cast<std::size_t>(b)])
                                    .normalized();
            mesh.vertices.push_back(m);
            int idx = static_cast<int>(mesh.vertices.size()) - 1;
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(mesh.triangles.size() * 4);
        for (const auto& t : mesh.triangles) {
            int ab = mid(t[0], t[1]);
            int bc = mid(t[1], t[2]);
            int ca = mid(t[2], t[0]);
            next.push_back({t[0], ab, ca});
            next.push_back({t[1], bc, ab});
            next.push_back({t[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        mesh.triangles = std::move(next);
    }
    return mesh;
}

TriangleMesh bumpy_sphere(int level, double amplitude, unsigned seed) {
    TriangleMesh mesh = icosphere(level);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (auto& v : mesh.vertices) v *= 1.0 + amplitude * uni(rng);
    return mesh;
}

TriangleMesh grid_patch(int nx, int ny, double jitter, unsigned seed) {
    TriangleMesh mesh;
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    auto index = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            mesh.vertices.push_back(
                {static_cast<double>(i) / nx, static_cast<double>(j) / ny, jitter * uni(rng)});
        }
    }
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            mesh.triangles.push_back({index(i, j), index(i + 1, j), index(i + 1, j + 1)});
            mesh.triangles.push_back({index(i, j), index(i + 1, j + 1), index(i, j + 1)});
        }
    }
    return mesh;
}

LaplaceOperator toy_pair_operator() {
    Eigen::MatrixXd w(2, 2);
    w << -1, 1, 1, -1;
    return operator_from_dense(w, Eigen::VectorXd::Ones(2));
}

LaplaceOperator operator_from_dense(const Eigen::MatrixXd& w, const Eigen::VectorXd& d) {
    LaplaceOperator op;
    op.weights = w.sparseView();
    op.weights.makeCompressed();
    op.cell_areas = d;
    op.total_area = d.sum();
    return op;
}

Eigen::MatrixXd dense(const SparseMat& a) { return Eigen::MatrixXd(a); }

namespace {
std::atomic<unsigned> temp_counter{0};
}

TempDir::TempDir() {
    namespace fs = std::filesystem;
    const unsigned id = temp_counter.fetch_add(1);
    fs::path base = fs::temp_directory_path() /
                    ("shapesig-test-" + std::to_string(::getpid()) + "-" + std::to_string(id));
    fs::create_directories(base);
    path_ = base.string();
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

std::string TempDir::file(const std::string& name) const {
    return (std::filesystem::path(path_) / name).string();
}

} // namespace testsupport
