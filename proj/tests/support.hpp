#pragma once

#include <random>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "shapesig/laplacian.hpp"
#include "shapesig/mesh.hpp"

namespace testsupport {

using shapesig::LaplaceOperator;
using shapesig::SparseMat;
using shapesig::TriangleMesh;

/// Unit square split along the diagonal (0,2): triangles (0,1,2), (0,2,3).
TriangleMesh unit_square();

/// Unit icosphere: subdivided icosahedron projected to the unit sphere.
/// Vertex counts: 12, 42, 162, 642, 2562 for levels 0..4.
TriangleMesh icosphere(int level);

/// Icosphere with deterministic radial perturbation; stays closed and
/// non-degenerate for moderate amplitudes.
TriangleMesh bumpy_sphere(int level, double amplitude, unsigned seed);

/// Open rectangular patch of (nx+1) x (ny+1) vertices on [0,1]^2 with
/// deterministic z-jitter.
TriangleMesh grid_patch(int nx, int ny, double jitter, unsigned seed);

/// Two-cell system with W = [[-1, 1], [1, -1]] and unit cell areas.
LaplaceOperator toy_pair_operator();

LaplaceOperator operator_from_dense(const Eigen::MatrixXd& w, const Eigen::VectorXd& d);

Eigen::MatrixXd dense(const SparseMat& a);

/// Unique directory removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::string& path() const { return path_; }
    std::string file(const std::string& name) const;

private:
    std::string path_;
};

} // namespace testsupport
