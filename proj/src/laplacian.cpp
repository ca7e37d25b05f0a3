#include "shapesig/laplacian.hpp"

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "shapesig/errors.hpp"

namespace shapesig {

Eigen::VectorXd LaplaceOperator::delta_initial(int vertex) const {
    Eigen::VectorXd u0 = Eigen::VectorXd::Zero(size());
    u0[vertex] = 1.0 / cell_areas[vertex];
    return u0;
}

SparseMat LaplaceOperator::symmetrized() const {
    Eigen::VectorXd inv_sqrt = cell_areas.cwiseSqrt().cwiseInverse();
    SparseMat b = weights;
    for (int k = 0; k < b.outerSize(); ++k) {
        for (SparseMat::InnerIterator it(b, k); it; ++it) {
            it.valueRef() *= inv_sqrt[it.row()] * inv_sqrt[it.col()];
        }
    }
    return b;
}

LaplaceOperator assemble_laplacian(const TriangleMesh& mesh) {
    validate_mesh(mesh);
    const int n = mesh.vertex_count();

    // Cotangent of the angle at c opposite edge (a, b), from edge vectors.
    auto cotangent = [](const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
        Eigen::Vector3d u = a - c;
        Eigen::Vector3d v = b - c;
        return u.dot(v) / u.cross(v).norm();
    };

    // One accumulator per undirected edge keeps W bit-exactly symmetric.
    std::map<std::pair<int, int>, double> edge_weight;
    Eigen::VectorXd areas = Eigen::VectorXd::Zero(n);
    double total_area = 0.0;

    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
        const Eigen::Vector3d& p0 = mesh.vertices[static_cast<std::size_t>(tri[0])];
        const Eigen::Vector3d& p1 = mesh.vertices[static_cast<std::size_t>(tri[1])];
        const Eigen::Vector3d& p2 = mesh.vertices[static_cast<std::size_t>(tri[2])];

        double area = 0.5 * (p1 - p0).cross(p2 - p0).norm();
        total_area += area;
        for (int k = 0; k < 3; ++k) areas[tri[static_cast<std::size_t>(k)]] += area / 3.0;

        for (int k = 0; k < 3; ++k) {
            int i = tri[static_cast<std::size_t>(k)];
            int j = tri[static_cast<std::size_t>((k + 1) % 3)];
            int opp = tri[static_cast<std::size_t>((k + 2) % 3)];
            double cot = cotangent(mesh.vertices[static_cast<std::size_t>(i)],
                                   mesh.vertices[static_cast<std::size_t>(j)],
                                   mesh.vertices[static_cast<std::size_t>(opp)]);
            if (!std::isfinite(cot)) {
                throw NumericalError("non-finite cotangent in triangle " + std::to_string(t) +
                                     " (" + std::to_string(tri[0]) + "," + std::to_string(tri[1]) +
                                     "," + std::to_string(tri[2]) + ")");
            }
            if (i > j) std::swap(i, j);
            edge_weight[{i, j}] += 0.5 * cot;
        }
    }

    for (int i = 0; i < n; ++i) {
        if (!(areas[i] > 0.0)) {
            throw DataError("vertex " + std::to_string(i) +
                            " has no incident triangle; cell area would be zero");
        }
    }

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(edge_weight.size() * 2 + static_cast<std::size_t>(n));
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    for (const auto& [edge, w] : edge_weight) {
        triplets.emplace_back(edge.first, edge.second, w);
        triplets.emplace_back(edge.second, edge.first, w);
        diag[edge.first] -= w;
        diag[edge.second] -= w;
    }
    for (int i = 0; i < n; ++i) triplets.emplace_back(i, i, diag[i]);

    LaplaceOperator op;
    op.weights.resize(n, n);
    op.weights.setFromTriplets(triplets.begin(), triplets.end());
    op.weights.makeCompressed();
    op.cell_areas = std::move(areas);
    op.total_area = total_area;
    return op;
}

} // namespace shapesig
