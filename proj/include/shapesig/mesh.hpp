#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace shapesig {

enum class MeshFormat { Off, VertTri };

/// Triangle mesh: vertex positions plus connectivity. Indices are 0-based
/// everywhere after loading; VERT_TRI files are converted from their 1-based
/// convention on the way in.
struct TriangleMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> triangles;

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int triangle_count() const { return static_cast<int>(triangles.size()); }
};

/// Undirected edge with its incident-triangle count. count == 1 marks a
/// boundary edge.
struct MeshEdge {
    int a = 0;
    int b = 0; // a < b
    int count = 0;
    bool boundary() const { return count == 1; }
};

double triangle_area(const TriangleMesh& mesh, int t);

/// Diagonal of the axis-aligned bounding box; 0 for an empty mesh.
double bounding_box_diagonal(const TriangleMesh& mesh);

/// Unique undirected edges with incident-triangle counts, sorted by (a, b).
/// Throws DataError if an edge has more than two incident triangles.
std::vector<MeshEdge> build_edges(const TriangleMesh& mesh);

/// Validates index ranges and rejects triangles with repeated vertices.
/// Throws DataError on violation.
void validate_mesh(const TriangleMesh& mesh);

/// Reads an OFF file (0-based indices) or a .vert/.tri pair (1-based).
/// For VertTri, `path` may point at either file of the pair or at the
/// common stem. Parse failures report the offending line.
TriangleMesh load_mesh(const std::string& path, MeshFormat format);

/// Infers the format from the file extension (.off vs .vert/.tri).
TriangleMesh load_mesh(const std::string& path);

void save_mesh_off(const TriangleMesh& mesh, const std::string& path);

/// Default degenerate-area tolerance: 1e-12 * (bounding-box diagonal)^2.
double default_area_tolerance(const TriangleMesh& mesh);

/// Keeps exactly the triangles with area > area_tol. The vertex set is left
/// untouched so indices stay aligned with ground-truth files.
TriangleMesh remove_degenerate_triangles(const TriangleMesh& mesh, double area_tol);

/// Content hash over vertex and triangle data (FNV-1a), for cache keys.
std::uint64_t mesh_content_hash(const TriangleMesh& mesh);

/// Reference-to-target index map loaded from a ground-truth file: either the
/// single keyword `identity` or two whitespace-separated index columns
/// (0-based on disk).
struct GroundTruth {
    std::vector<int> target_of;

    int size() const { return static_cast<int>(target_of.size()); }
    int operator()(int i) const { return target_of[static_cast<std::size_t>(i)]; }

    static GroundTruth identity(int n);
};

GroundTruth load_ground_truth(const std::string& path, int n_ref, int n_target);

} // namespace shapesig
