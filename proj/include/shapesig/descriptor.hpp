#pragma once

#include <string>

#include <Eigen/Core>

namespace shapesig {

enum class Pde : int { Heat = 0, Wave = 1 };
enum class Method : int { Full = 0, Mcr = 1, Ksmor = 2, Hks = 3, Wks = 4 };

const char* to_string(Pde pde);
const char* to_string(Method method);
Pde pde_from_string(const std::string& name);
Method method_from_string(const std::string& name);

/// Uniform time grid t_k = k * dt for k = 1..levels with dt = t_end / levels.
struct TimeGrid {
    double t_end = 0.0;
    int levels = 0;

    double dt() const { return t_end / levels; }
    Eigen::VectorXd sample_times() const;
};

/// Throws DataError unless t_end > 0 and levels >= 1.
void validate(const TimeGrid& grid);

/// Per-vertex descriptor matrix: row i holds the descriptor of vertex i
/// sampled at `samples` (time levels t_1..t_M, or energies for WKS).
struct DescriptorField {
    Eigen::MatrixXd values; // N x M
    Pde pde = Pde::Heat;
    Method method = Method::Full;
    Eigen::VectorXd samples;
    double energy_sigma = 0.0; // WKS energy variance; 0 elsewhere

    Eigen::Index vertex_count() const { return values.rows(); }
    Eigen::Index sample_count() const { return values.cols(); }
    double t_end() const { return samples.size() ? samples[samples.size() - 1] : 0.0; }

    /// Same method, PDE, and sample grid; required before descriptors from
    /// two shapes may be compared.
    bool compatible_with(const DescriptorField& other) const;
};

/// CSV: one row per vertex, one column per sample level.
void save_descriptor_csv(const DescriptorField& field, const std::string& path);

/// Binary container: header {N, M, pde, method, t_M} followed by the sample
/// grid and the row-major value matrix. Round-trips bit-exactly.
void save_descriptor_binary(const DescriptorField& field, const std::string& path);
DescriptorField load_descriptor_binary(const std::string& path);

} // namespace shapesig
