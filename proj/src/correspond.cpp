#include "shapesig/correspond.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <unordered_map>

#include "shapesig/errors.hpp"
#include "shapesig/parallel.hpp"

namespace shapesig {

double descriptor_distance(const Eigen::RowVectorXd& f, const Eigen::RowVectorXd& g) {
    if (f.size() != g.size())
        throw DataError("descriptor_distance: rows have different lengths (" +
                        std::to_string(f.size()) + " vs " + std::to_string(g.size()) + ")");
    return (f - g).lpNorm<1>();
}

namespace {

void require_compatible(const DescriptorField& a, const DescriptorField& b) {
    if (!a.compatible_with(b)) {
        throw DataError(std::string("descriptor fields are incompatible: ") + to_string(a.method) +
                        "/" + to_string(a.pde) + " with " + std::to_string(a.sample_count()) +
                        " samples (t_end " + std::to_string(a.t_end()) + ") vs " +
                        to_string(b.method) + "/" + to_string(b.pde) + " with " +
                        std::to_string(b.sample_count()) + " samples (t_end " +
                        std::to_string(b.t_end()) + ")");
    }
}

} // namespace

Assignment match_p2p(const DescriptorField& f_ref, const DescriptorField& f_trg, int threads) {
    require_compatible(f_ref, f_trg);
    const Eigen::Index n_ref = f_ref.vertex_count();
    const Eigen::Index n_trg = f_trg.vertex_count();
    if (n_trg < 1) throw DataError("match_p2p: empty target field");

    // Column-wise layout makes the inner scan contiguous.
    const Eigen::MatrixXd ref_t = f_ref.values.transpose();
    const Eigen::MatrixXd trg_t = f_trg.values.transpose();

    Assignment out;
    out.target_of.resize(static_cast<std::size_t>(n_ref));
    out.distance.resize(static_cast<std::size_t>(n_ref));
    parallel_for(static_cast<std::size_t>(n_ref), threads, [&](std::size_t i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < n_trg; ++k) {
            double d = (ref_t.col(static_cast<Eigen::Index>(i)) - trg_t.col(k)).lpNorm<1>();
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(k);
            }
        }
        out.target_of[i] = best;
        out.distance[i] = best_d;
    });
    return out;
}

double SoftMap::density() const {
    const Eigen::Index total = probabilities.size();
    if (total == 0) return 0.0;
    Eigen::Index nnz = 0;
    for (Eigen::Index i = 0; i < total; ++i) {
        if (probabilities.data()[i] != 0.0) ++nnz;
    }
    return static_cast<double>(nnz) / static_cast<double>(total);
}

SoftMap soft_map(const DescriptorField& f_ref, const DescriptorField& f_trg,
                 BandwidthMode bandwidth, int threads) {
    require_compatible(f_ref, f_trg);
    const Eigen::Index n_ref = f_ref.vertex_count();
    const Eigen::Index n_trg = f_trg.vertex_count();
    if (n_ref < 1 || n_trg < 1) throw DataError("soft_map: empty descriptor field");

    const Eigen::MatrixXd ref_t = f_ref.values.transpose();
    const Eigen::MatrixXd trg_t = f_trg.values.transpose();

    SoftMap s;
    s.probabilities.resize(n_trg, n_ref);
    parallel_for(static_cast<std::size_t>(n_trg), threads, [&](std::size_t j) {
        Eigen::VectorXd dist(n_ref);
        for (Eigen::Index i = 0; i < n_ref; ++i) {
            dist[i] = (ref_t.col(i) - trg_t.col(static_cast<Eigen::Index>(j))).lpNorm<1>();
        }
        double scale = 0.0;
        if (bandwidth == BandwidthMode::MedianPerRow) {
            Eigen::VectorXd sorted = dist;
            std::sort(sorted.data(), sorted.data() + sorted.size());
            const Eigen::Index m = sorted.size();
            scale = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
        } else {
            scale = dist.mean();
        }
        Eigen::RowVectorXd row(n_ref);
        if (scale > 0.0) {
            row = (-dist.transpose().array() / scale).exp();
            const double sum = row.sum();
            if (sum > 0.0) {
                row /= sum;
            } else {
                row.setConstant(1.0 / static_cast<double>(n_ref));
            }
        } else {
            // Zero bandwidth (at least half the row at distance zero).
            row.setConstant(1.0 / static_cast<double>(n_ref));
        }
        s.probabilities.row(static_cast<Eigen::Index>(j)) = row;
    });
    return s;
}

Eigen::VectorXd apply_soft_map(const SoftMap& s, const Eigen::VectorXd& h) {
    if (h.size() != s.ref_count()) throw DataError("apply_soft_map: indicator length mismatch");
    for (Eigen::Index i = 0; i < h.size(); ++i) {
        if (h[i] != 0.0 && h[i] != 1.0)
            throw DataError("apply_soft_map: indicator entries must be 0 or 1");
    }
    return s.probabilities * h;
}

namespace {

std::vector<double> default_density_levels() {
    std::vector<double> levels;
    for (int p = 100; p >= 0; --p) levels.push_back(p / 100.0);
    return levels;
}

} // namespace

SparsifyResult sparsify_sweep_sets(const SoftMap& s, const std::vector<std::vector<int>>& acceptable,
                                   const std::vector<double>& density_levels) {
    const Eigen::Index n_trg = s.target_count();
    const Eigen::Index n_ref = s.ref_count();
    if (static_cast<Eigen::Index>(acceptable.size()) != n_ref)
        throw DataError("sparsify_sweep: acceptable-set count must match reference vertices");

    struct Entry {
        double value;
        Eigen::Index pos; // row-major position, the tie-break order
    };
    std::vector<Entry> entries;
    entries.reserve(static_cast<std::size_t>(s.probabilities.size()));
    for (Eigen::Index j = 0; j < n_trg; ++j) {
        for (Eigen::Index i = 0; i < n_ref; ++i) {
            const double v = s.probabilities(j, i);
            if (v != 0.0) entries.push_back({v, j * n_ref + i});
        }
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.value != b.value) return a.value < b.value;
        return a.pos < b.pos;
    });
    const std::size_t nnz = entries.size();
    const double total = static_cast<double>(n_trg) * static_cast<double>(n_ref);

    // Removal ranks are only needed for the acceptable entries.
    std::unordered_map<long long, long> rank_of;
    for (Eigen::Index i = 0; i < n_ref; ++i) {
        for (int j : acceptable[static_cast<std::size_t>(i)]) {
            if (j < 0 || j >= n_trg) throw DataError("sparsify_sweep: ground-truth index out of range");
            rank_of.emplace(static_cast<long long>(j) * n_ref + i, -1);
        }
    }
    for (std::size_t r = 0; r < nnz; ++r) {
        auto it = rank_of.find(static_cast<long long>(entries[r].pos));
        if (it != rank_of.end()) it->second = static_cast<long>(r);
    }

    // Vertex i stays hit while its longest-surviving acceptable entry lives:
    // survival_rank[i] = max removal rank over acceptable nonzero entries.
    std::vector<long> survival_rank(static_cast<std::size_t>(n_ref), -1);
    for (Eigen::Index i = 0; i < n_ref; ++i) {
        for (int j : acceptable[static_cast<std::size_t>(i)]) {
            auto it = rank_of.find(static_cast<long long>(j) * n_ref + i);
            if (it != rank_of.end()) {
                survival_rank[static_cast<std::size_t>(i)] =
                    std::max(survival_rank[static_cast<std::size_t>(i)], it->second);
            }
        }
    }

    // hit_count(m) = #{i : survival_rank[i] >= m} for m entries removed.
    std::vector<long> sorted_ranks(survival_rank);
    std::sort(sorted_ranks.begin(), sorted_ranks.end());
    auto hit_percent = [&](std::size_t removed) {
        auto it = std::lower_bound(sorted_ranks.begin(), sorted_ranks.end(), static_cast<long>(removed));
        const auto hits = static_cast<double>(sorted_ranks.end() - it);
        return 100.0 * hits / static_cast<double>(n_ref);
    };
    auto density_after = [&](std::size_t removed) {
        return static_cast<double>(nnz - removed) / total;
    };

    SparsifyResult result;
    const std::vector<double>& levels = density_levels.empty()
                                            ? default_density_levels()
                                            : density_levels;
    std::vector<std::pair<double, double>> curve;
    for (double level : levels) {
        const double keep_exact = level * total;
        std::size_t keep = static_cast<std::size_t>(std::min<double>(
            static_cast<double>(nnz), std::max(0.0, std::ceil(keep_exact - 1e-12))));
        std::size_t removed = nnz - keep;
        curve.emplace_back(density_after(removed), hit_percent(removed));
    }

    const long min_rank = *std::min_element(sorted_ranks.begin(), sorted_ranks.end());
    if (min_rank >= 0) {
        // All ground-truth entries present: the exact transition keeps
        // everything up to removal count min_rank.
        const std::size_t removed = static_cast<std::size_t>(min_rank);
        result.minimum_density = density_after(removed);
        curve.emplace_back(density_after(removed), hit_percent(removed));
        if (removed + 1 <= nnz) curve.emplace_back(density_after(removed + 1), hit_percent(removed + 1));
    }

    std::sort(curve.begin(), curve.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    curve.erase(std::unique(curve.begin(), curve.end()), curve.end());
    result.curve = std::move(curve);
    return result;
}

SparsifyResult sparsify_sweep(const SoftMap& s, const GroundTruth& gt,
                              const std::vector<double>& density_levels) {
    if (gt.size() != s.ref_count())
        throw DataError("sparsify_sweep: ground truth size must match reference vertices");
    std::vector<std::vector<int>> acceptable(static_cast<std::size_t>(gt.size()));
    for (int i = 0; i < gt.size(); ++i) acceptable[static_cast<std::size_t>(i)] = {gt(i)};
    return sparsify_sweep_sets(s, acceptable, density_levels);
}

std::vector<std::vector<int>> geodesic_tolerance_sets(const GroundTruth& gt,
                                                      const TriangleMesh& target_mesh,
                                                      double tolerance, int threads) {
    if (tolerance < 0) throw DataError("geodesic_tolerance_sets: tolerance must be non-negative");
    double area = 0.0;
    for (int t = 0; t < target_mesh.triangle_count(); ++t) area += triangle_area(target_mesh, t);
    const double radius = tolerance * std::sqrt(area);

    std::vector<int> unique_sources(gt.target_of);
    std::sort(unique_sources.begin(), unique_sources.end());
    unique_sources.erase(std::unique(unique_sources.begin(), unique_sources.end()),
                         unique_sources.end());
    std::map<int, std::vector<int>> ball;
    for (int s : unique_sources) ball[s] = {};
    parallel_for(unique_sources.size(), threads, [&](std::size_t k) {
        const int source = unique_sources[k];
        Eigen::VectorXd dist = geodesic_distances(target_mesh, source);
        std::vector<int>& members = ball[source];
        for (Eigen::Index j = 0; j < dist.size(); ++j) {
            if (dist[j] <= radius) members.push_back(static_cast<int>(j));
        }
    });

    std::vector<std::vector<int>> acceptable(static_cast<std::size_t>(gt.size()));
    for (int i = 0; i < gt.size(); ++i) acceptable[static_cast<std::size_t>(i)] = ball[gt(i)];
    return acceptable;
}

SoftMap sparsify_to_density(const SoftMap& s, double density, bool renormalize) {
    if (density < 0.0 || density > 1.0)
        throw DataError("sparsify_to_density: density must lie in [0, 1]");
    const Eigen::Index n_trg = s.target_count();
    const Eigen::Index n_ref = s.ref_count();
    struct Entry {
        double value;
        Eigen::Index j, i;
    };
    std::vector<Entry> entries;
    for (Eigen::Index j = 0; j < n_trg; ++j) {
        for (Eigen::Index i = 0; i < n_ref; ++i) {
            if (s.probabilities(j, i) != 0.0) entries.push_back({s.probabilities(j, i), j, i});
        }
    }
    std::sort(entries.begin(), entries.end(), [n_ref](const Entry& a, const Entry& b) {
        if (a.value != b.value) return a.value < b.value;
        return a.j * n_ref + a.i < b.j * n_ref + b.i;
    });
    const double total = static_cast<double>(n_trg) * static_cast<double>(n_ref);
    const auto keep = static_cast<std::size_t>(std::min<double>(
        static_cast<double>(entries.size()), std::max(0.0, std::ceil(density * total - 1e-12))));
    const std::size_t remove = entries.size() - keep;

    SoftMap out = s;
    for (std::size_t k = 0; k < remove; ++k) out.probabilities(entries[k].j, entries[k].i) = 0.0;
    if (renormalize) {
        for (Eigen::Index j = 0; j < n_trg; ++j) {
            const double sum = out.probabilities.row(j).sum();
            if (sum > 0.0) out.probabilities.row(j) /= sum;
        }
    }
    return out;
}

double hit_rate(const Assignment& a, const GroundTruth& gt) {
    if (a.size() != gt.size()) throw DataError("hit_rate: assignment and ground truth sizes differ");
    if (a.size() == 0) return 0.0;
    int correct = 0;
    for (int i = 0; i < a.size(); ++i) {
        if (a.target_of[static_cast<std::size_t>(i)] == gt(i)) ++correct;
    }
    return 100.0 * correct / a.size();
}

namespace {

struct EdgeGraph {
    std::vector<std::vector<std::pair<int, double>>> adjacency;

    static EdgeGraph build(const TriangleMesh& mesh) {
        EdgeGraph g;
        g.adjacency.resize(static_cast<std::size_t>(mesh.vertex_count()));
        for (const MeshEdge& e : build_edges(mesh)) {
            const double len = (mesh.vertices[static_cast<std::size_t>(e.a)] -
                                mesh.vertices[static_cast<std::size_t>(e.b)])
                                   .norm();
            g.adjacency[static_cast<std::size_t>(e.a)].emplace_back(e.b, len);
            g.adjacency[static_cast<std::size_t>(e.b)].emplace_back(e.a, len);
        }
        return g;
    }
};

Eigen::VectorXd dijkstra(const EdgeGraph& graph, int source, bool warn_unreached) {
    const auto n = static_cast<Eigen::Index>(graph.adjacency.size());
    Eigen::VectorXd dist = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    dist[source] = 0.0;
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    queue.emplace(0.0, source);
    while (!queue.empty()) {
        auto [d, v] = queue.top();
        queue.pop();
        if (d > dist[v]) continue;
        for (const auto& [w, len] : graph.adjacency[static_cast<std::size_t>(v)]) {
            const double nd = d + len;
            if (nd < dist[w]) {
                dist[w] = nd;
                queue.emplace(nd, w);
            }
        }
    }
    if (warn_unreached && !dist.allFinite()) {
        std::fprintf(stderr, "shapesig: warning: vertices unreachable from %d get infinite distance\n",
                     source);
    }
    return dist;
}

} // namespace

Eigen::VectorXd geodesic_distances(const TriangleMesh& mesh, int source) {
    if (source < 0 || source >= mesh.vertex_count())
        throw DataError("geodesic_distances: source index out of range");
    return dijkstra(EdgeGraph::build(mesh), source, /*warn_unreached=*/true);
}

double GeodesicErrorCurve::fraction_at(double threshold) const {
    if (errors.size() == 0) return 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < errors.size(); ++i) {
        if (errors[i] <= threshold) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(errors.size());
}

GeodesicErrorCurve geodesic_error_curve(const Assignment& a, const GroundTruth& gt,
                                        const TriangleMesh& target_mesh,
                                        const std::vector<double>& thresholds, int threads) {
    if (a.size() != gt.size())
        throw DataError("geodesic_error_curve: assignment and ground truth sizes differ");
    const int n_trg = target_mesh.vertex_count();
    for (int i = 0; i < a.size(); ++i) {
        if (a.target_of[static_cast<std::size_t>(i)] < 0 ||
            a.target_of[static_cast<std::size_t>(i)] >= n_trg)
            throw DataError("geodesic_error_curve: assignment target out of range");
        if (gt(i) < 0 || gt(i) >= n_trg)
            throw DataError("geodesic_error_curve: ground-truth target out of range");
    }

    double area = 0.0;
    for (int t = 0; t < target_mesh.triangle_count(); ++t) area += triangle_area(target_mesh, t);
    const double sqrt_area = std::sqrt(area);
    if (!(sqrt_area > 0.0)) throw DataError("geodesic_error_curve: target mesh has zero area");

    const EdgeGraph graph = EdgeGraph::build(target_mesh);

    std::vector<int> unique_sources(gt.target_of);
    std::sort(unique_sources.begin(), unique_sources.end());
    unique_sources.erase(std::unique(unique_sources.begin(), unique_sources.end()),
                         unique_sources.end());
    std::map<int, std::size_t> source_slot;
    for (std::size_t k = 0; k < unique_sources.size(); ++k) source_slot[unique_sources[k]] = k;

    std::vector<Eigen::VectorXd> dist(unique_sources.size());
    parallel_for(unique_sources.size(), threads, [&](std::size_t k) {
        dist[k] = dijkstra(graph, unique_sources[k], /*warn_unreached=*/false);
    });

    GeodesicErrorCurve curve;
    curve.errors.resize(a.size());
    for (int i = 0; i < a.size(); ++i) {
        const Eigen::VectorXd& d = dist[source_slot[gt(i)]];
        curve.errors[i] = d[a.target_of[static_cast<std::size_t>(i)]] / sqrt_area;
    }

    if (thresholds.empty()) {
        for (int p = 0; p <= 100; ++p) curve.thresholds.push_back(p / 100.0);
    } else {
        curve.thresholds = thresholds;
    }
    curve.fractions.reserve(curve.thresholds.size());
    for (double t : curve.thresholds) curve.fractions.push_back(curve.fraction_at(t));
    return curve;
}

void save_assignment_csv(const Assignment& a, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw DataError("cannot write " + path);
    std::fprintf(f, "ref_index,target_index\n");
    for (int i = 0; i < a.size(); ++i) {
        std::fprintf(f, "%d,%d\n", i, a.target_of[static_cast<std::size_t>(i)]);
    }
    std::fclose(f);
}

void save_curve_csv(const GeodesicErrorCurve& curve, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw DataError("cannot write " + path);
    std::fprintf(f, "threshold,fraction\n");
    for (std::size_t k = 0; k < curve.thresholds.size(); ++k) {
        std::fprintf(f, "%.17g,%.17g\n", curve.thresholds[k], curve.fractions[k]);
    }
    std::fclose(f);
}

void save_density_sweep_csv(const SparsifyResult& result, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw DataError("cannot write " + path);
    std::fprintf(f, "density,soft_hit_rate\n");
    for (const auto& [density, rate] : result.curve) {
        std::fprintf(f, "%.17g,%.17g\n", density, rate);
    }
    std::fclose(f);
}

void save_softmap_triplets(const SoftMap& s, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw DataError("cannot write " + path);
    std::fprintf(f, "%lld %lld %.17g\n", static_cast<long long>(s.target_count()),
                 static_cast<long long>(s.ref_count()), s.density());
    for (Eigen::Index j = 0; j < s.target_count(); ++j) {
        for (Eigen::Index i = 0; i < s.ref_count(); ++i) {
            const double v = s.probabilities(j, i);
            if (v != 0.0) {
                std::fprintf(f, "%lld %lld %.17g\n", static_cast<long long>(j),
                             static_cast<long long>(i), v);
            }
        }
    }
    std::fclose(f);
}

} // namespace shapesig
