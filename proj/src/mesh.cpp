#include "shapesig/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <Eigen/Geometry>

#include "shapesig/errors.hpp"

namespace shapesig {

namespace {

std::string line_error(const std::string& path, int line, const std::string& what) {
    return path + ":" + std::to_string(line) + ": " + what;
}

// Reads the next line that carries content, skipping blanks and '#' comments.
bool next_content_line(std::istream& in, std::string& line, int& line_no) {
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t pos = line.find_first_not_of(" \t\r\n");
        if (pos == std::string::npos) continue;
        if (line[pos] == '#') continue;
        return true;
    }
    return false;
}

} // namespace

double triangle_area(const TriangleMesh& mesh, int t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    const Eigen::Vector3d& a = mesh.vertices[static_cast<std::size_t>(tri[0])];
    const Eigen::Vector3d& b = mesh.vertices[static_cast<std::size_t>(tri[1])];
    const Eigen::Vector3d& c = mesh.vertices[static_cast<std::size_t>(tri[2])];
    return 0.5 * (b - a).cross(c - a).norm();
}

double bounding_box_diagonal(const TriangleMesh& mesh) {
    if (mesh.vertices.empty()) return 0.0;
    Eigen::Vector3d lo = mesh.vertices.front();
    Eigen::Vector3d hi = mesh.vertices.front();
    for (const auto& v : mesh.vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    return (hi - lo).norm();
}

std::vector<MeshEdge> build_edges(const TriangleMesh& mesh) {
    std::map<std::pair<int, int>, int> counts;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int e = 0; e < 3; ++e) {
            int a = tri[static_cast<std::size_t>(e)];
            int b = tri[static_cast<std::size_t>((e + 1) % 3)];
            if (a > b) std::swap(a, b);
            int c = ++counts[{a, b}];
            if (c > 2) {
                throw DataError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                                ") has more than two incident triangles");
            }
        }
    }
    std::vector<MeshEdge> edges;
    edges.reserve(counts.size());
    for (const auto& [key, count] : counts) edges.push_back({key.first, key.second, count});
    return edges;
}

void validate_mesh(const TriangleMesh& mesh) {
    const int n = mesh.vertex_count();
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int k = 0; k < 3; ++k) {
            int v = tri[static_cast<std::size_t>(k)];
            if (v < 0 || v >= n) {
                throw DataError("triangle " + std::to_string(t) + " references vertex " +
                                std::to_string(v) + " outside [0," + std::to_string(n) + ")");
            }
        }
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
            throw DataError("triangle " + std::to_string(t) + " has a repeated vertex");
        }
    }
}

namespace {

TriangleMesh load_off(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);

    std::string line;
    int line_no = 0;
    if (!next_content_line(in, line, line_no)) throw DataError(line_error(path, line_no, "empty file"));

    // Header may be "OFF" alone or "OFF n m e" on one line.
    std::istringstream head(line);
    std::string tag;
    head >> tag;
    if (tag != "OFF") throw DataError(line_error(path, line_no, "missing OFF header"));

    long nv = -1, nf = -1, ne = -1;
    if (!(head >> nv >> nf >> ne)) {
        if (!next_content_line(in, line, line_no))
            throw DataError(line_error(path, line_no, "missing element counts"));
        std::istringstream counts(line);
        if (!(counts >> nv >> nf >> ne))
            throw DataError(line_error(path, line_no, "malformed element counts"));
    }
    if (nv < 0 || nf < 0) throw DataError(line_error(path, line_no, "negative element count"));

    TriangleMesh mesh;
    mesh.vertices.reserve(static_cast<std::size_t>(nv));
    for (long i = 0; i < nv; ++i) {
        if (!next_content_line(in, line, line_no))
            throw DataError(line_error(path, line_no, "unexpected end of vertex list"));
        std::istringstream ls(line);
        Eigen::Vector3d v;
        if (!(ls >> v.x() >> v.y() >> v.z()))
            throw DataError(line_error(path, line_no, "malformed vertex"));
        mesh.vertices.push_back(v);
    }
    mesh.triangles.reserve(static_cast<std::size_t>(nf));
    for (long i = 0; i < nf; ++i) {
        if (!next_content_line(in, line, line_no))
            throw DataError(line_error(path, line_no, "unexpected end of face list"));
        std::istringstream ls(line);
        int count = 0;
        if (!(ls >> count)) throw DataError(line_error(path, line_no, "malformed face"));
        if (count != 3)
            throw DataError(line_error(path, line_no, "face with " + std::to_string(count) +
                                                          " vertices; only triangles supported"));
        std::array<int, 3> tri{};
        if (!(ls >> tri[0] >> tri[1] >> tri[2]))
            throw DataError(line_error(path, line_no, "malformed face indices"));
        mesh.triangles.push_back(tri);
    }
    return mesh;
}

std::pair<std::string, std::string> vert_tri_paths(const std::string& path) {
    namespace fs = std::filesystem;
    fs::path p(path);
    std::string ext = p.extension().string();
    fs::path stem = p;
    if (ext == ".vert" || ext == ".tri") stem.replace_extension();
    fs::path vert = stem;
    vert += ".vert";
    fs::path tri = stem;
    tri += ".tri";
    return {vert.string(), tri.string()};
}

TriangleMesh load_vert_tri(const std::string& path) {
    auto [vert_path, tri_path] = vert_tri_paths(path);
    std::ifstream vin(vert_path);
    if (!vin) throw DataError("cannot open " + vert_path);
    std::ifstream tin(tri_path);
    if (!tin) throw DataError("cannot open " + tri_path);

    TriangleMesh mesh;
    std::string line;
    int line_no = 0;
    while (next_content_line(vin, line, line_no)) {
        std::istringstream ls(line);
        Eigen::Vector3d v;
        if (!(ls >> v.x() >> v.y() >> v.z()))
            throw DataError(line_error(vert_path, line_no, "malformed vertex"));
        mesh.vertices.push_back(v);
    }

    const int n = mesh.vertex_count();
    line_no = 0;
    while (next_content_line(tin, line, line_no)) {
        std::istringstream ls(line);
        std::array<int, 3> tri{};
        if (!(ls >> tri[0] >> tri[1] >> tri[2]))
            throw DataError(line_error(tri_path, line_no, "malformed triangle"));
        for (int& v : tri) {
            if (v < 1 || v > n)
                throw DataError(line_error(tri_path, line_no,
                                           "vertex index " + std::to_string(v) +
                                               " outside 1-based range [1," + std::to_string(n) + "]"));
            v -= 1;
        }
        mesh.triangles.push_back(tri);
    }
    return mesh;
}

} // namespace

TriangleMesh load_mesh(const std::string& path, MeshFormat format) {
    TriangleMesh mesh = format == MeshFormat::Off ? load_off(path) : load_vert_tri(path);
    if (mesh.vertex_count() < 3) throw DataError(path + ": mesh has fewer than 3 vertices");
    validate_mesh(mesh);
    return mesh;
}

TriangleMesh load_mesh(const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".off") return load_mesh(path, MeshFormat::Off);
    if (ext == ".vert" || ext == ".tri" || ext.empty()) return load_mesh(path, MeshFormat::VertTri);
    throw DataError("cannot infer mesh format from extension '" + ext + "'");
}

void save_mesh_off(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "OFF\n" << mesh.vertex_count() << " " << mesh.triangle_count() << " 0\n";
    char buf[128];
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", v.x(), v.y(), v.z());
        out << buf;
    }
    for (const auto& t : mesh.triangles) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
}

double default_area_tolerance(const TriangleMesh& mesh) {
    double d = bounding_box_diagonal(mesh);
    return 1e-12 * d * d;
}

TriangleMesh remove_degenerate_triangles(const TriangleMesh& mesh, double area_tol) {
    if (area_tol < 0) throw DataError("area tolerance must be non-negative");
    TriangleMesh out;
    out.vertices = mesh.vertices;
    out.triangles.reserve(mesh.triangles.size());
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        if (triangle_area(mesh, t) > area_tol) out.triangles.push_back(mesh.triangles[static_cast<std::size_t>(t)]);
    }
    if (out.triangles.empty() && !mesh.triangles.empty()) {
        std::fprintf(stderr, "shapesig: warning: all %d triangles fell below the area tolerance\n",
                     mesh.triangle_count());
    }
    return out;
}

std::uint64_t mesh_content_hash(const TriangleMesh& mesh) {
    std::uint64_t h = 1469598103934665603ull; // FNV offset basis
    auto mix = [&h](const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& v : mesh.vertices) mix(v.data(), 3 * sizeof(double));
    for (const auto& t : mesh.triangles) mix(t.data(), 3 * sizeof(int));
    return h;
}

GroundTruth GroundTruth::identity(int n) {
    GroundTruth gt;
    gt.target_of.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) gt.target_of[static_cast<std::size_t>(i)] = i;
    return gt;
}

GroundTruth load_ground_truth(const std::string& path, int n_ref, int n_target) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    int line_no = 0;
    if (!next_content_line(in, line, line_no)) throw DataError(line_error(path, line_no, "empty ground truth"));

    std::istringstream first(line);
    std::string word;
    first >> word;
    if (word == "identity") {
        if (n_ref != n_target)
            throw DataError(path + ": identity ground truth requires equal vertex counts");
        return GroundTruth::identity(n_ref);
    }

    GroundTruth gt;
    gt.target_of.assign(static_cast<std::size_t>(n_ref), -1);
    auto parse_pair = [&](const std::string& text, int lno) {
        std::istringstream ls(text);
        long i = -1, j = -1;
        if (!(ls >> i >> j)) throw DataError(line_error(path, lno, "expected two indices"));
        if (i < 0 || i >= n_ref)
            throw DataError(line_error(path, lno, "reference index " + std::to_string(i) + " out of range"));
        if (j < 0 || j >= n_target)
            throw DataError(line_error(path, lno, "target index " + std::to_string(j) + " out of range"));
        gt.target_of[static_cast<std::size_t>(i)] = static_cast<int>(j);
    };
    parse_pair(line, line_no);
    while (next_content_line(in, line, line_no)) parse_pair(line, line_no);
    for (std::size_t i = 0; i < gt.target_of.size(); ++i) {
        if (gt.target_of[i] < 0)
            throw DataError(path + ": no ground-truth entry for reference vertex " + std::to_string(i));
    }
    return gt;
}

} // namespace shapesig
