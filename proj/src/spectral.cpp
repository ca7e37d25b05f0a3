#include "shapesig/spectral.hpp"

#include <cmath>

#include "shapesig/errors.hpp"

namespace shapesig {

namespace {

// Modes at (numerically) zero eigenvalue, relative to the spectrum scale.
bool is_zero_mode(double lambda, double scale) { return std::abs(lambda) <= 1e-10 * scale; }

double spectrum_scale(const EigenPairs& pairs) {
    return pairs.count() ? pairs.values.cwiseAbs().maxCoeff() : 0.0;
}

// Smallest and largest nonzero eigenvalue magnitudes.
std::pair<double, double> nonzero_range(const EigenPairs& pairs) {
    const double scale = spectrum_scale(pairs);
    double lo = 0.0, hi = 0.0;
    for (int k = 0; k < pairs.count(); ++k) {
        const double mag = std::abs(pairs.values[k]);
        if (is_zero_mode(pairs.values[k], scale)) continue;
        if (lo == 0.0 || mag < lo) lo = mag;
        if (mag > hi) hi = mag;
    }
    if (lo == 0.0) throw DataError("spectral grid: no nonzero eigenvalues available");
    return {lo, hi};
}

Eigen::VectorXd linspace(double a, double b, int m) {
    Eigen::VectorXd out(m);
    if (m == 1) {
        out[0] = 0.5 * (a + b);
        return out;
    }
    for (int i = 0; i < m; ++i) out[i] = a + (b - a) * i / (m - 1);
    return out;
}

} // namespace

void validate(const SpectralGrid& grid, bool needs_sigma) {
    if (grid.count() < 1) throw DataError("spectral grid needs at least one sample");
    for (int i = 1; i < grid.count(); ++i) {
        if (!(grid.samples[i] > grid.samples[i - 1]))
            throw DataError("spectral grid samples must be strictly increasing");
    }
    if (needs_sigma && !(grid.sigma > 0.0))
        throw DataError("spectral grid needs a positive energy variance");
}

SpectralGrid hks_default_grid(const EigenPairs& pairs, int m) {
    if (m < 1) throw DataError("hks_default_grid: need at least one sample");
    auto [lo, hi] = nonzero_range(pairs);
    const double t_min = 4.0 * std::log(10.0) / hi;
    const double t_max = 4.0 * std::log(10.0) / lo;
    if (!(t_min < t_max) && m > 1)
        throw DataError("hks_default_grid: spectrum too narrow for " + std::to_string(m) + " samples");
    SpectralGrid grid;
    grid.samples = linspace(std::log(t_min), std::log(t_max), m).array().exp();
    return grid;
}

SpectralGrid wks_default_grid(const EigenPairs& pairs, int m) {
    if (m < 1) throw DataError("wks_default_grid: need at least one sample");
    auto [lo, hi] = nonzero_range(pairs);
    const double e_min_raw = std::log(lo);
    const double e_max_raw = std::log(hi);
    const double sigma = 7.0 * (e_max_raw - e_min_raw) / m;
    if (!(sigma > 0.0)) throw DataError("wks_default_grid: spectrum too narrow");
    const double e_min = e_min_raw + 2.0 * sigma;
    const double e_max = e_max_raw - 2.0 * sigma;
    if (!(e_min < e_max) && m > 1)
        throw DataError("wks_default_grid: padded energy interval is empty; increase the sample "
                        "count or the mode count");
    SpectralGrid grid;
    grid.samples = linspace(e_min, e_max, m);
    grid.sigma = sigma;
    return grid;
}

DescriptorField hks(const EigenPairs& pairs, const SpectralGrid& grid) {
    validate(grid, /*needs_sigma=*/false);
    if (pairs.count() < 1) throw DataError("hks: empty eigendecomposition");

    const Eigen::MatrixXd squared = pairs.vectors.array().square();
    Eigen::MatrixXd coeff(pairs.count(), grid.count());
    for (int k = 0; k < pairs.count(); ++k) {
        const double mag = std::abs(pairs.values[k]);
        for (int j = 0; j < grid.count(); ++j) coeff(k, j) = std::exp(-mag * grid.samples[j]);
    }

    DescriptorField field;
    field.pde = Pde::Heat;
    field.method = Method::Hks;
    field.samples = grid.samples;
    field.values = squared * coeff;
    return field;
}


DescriptorField wks(const EigenPairs& pairs, const SpectralGrid& grid, bool normalize) {
    validate(grid, /*needs_sigma=*/true);
    if (pairs.count() < 1) throw DataError("wks: empty eigendecomposition");
    const double scale = spectrum_scale(pairs);
    if (scale == 0.0) throw DataError("wks: all eigenvalues are zero");

    const Eigen::MatrixXd squared = pairs.vectors.array().square();
    // ||phi_k||_D^2; equals 1 for D-orthonormal modes and tracks any uniform
    // rescaling of the eigenvectors so normalized values stay invariant.
    Eigen::VectorXd mode_mass(pairs.count());
    for (int k = 0; k < pairs.count(); ++k) {
        mode_mass[k] = pairs.vectors.col(k).dot(pairs.mass.cwiseProduct(pairs.vectors.col(k)));
    }

    bool any_nonzero = false;
    Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(pairs.count(), grid.count());
    for (int k = 0; k < pairs.count(); ++k) {
        if (is_zero_mode(pairs.values[k], scale)) continue;
        any_nonzero = true;
        const double log_mag = std::log(std::abs(pairs.values[k]));
        for (int j = 0; j < grid.count(); ++j) {
            const double d = grid.samples[j] - log_mag;
            coeff(k, j) = std::exp(-d * d / (2.0 * grid.sigma * grid.sigma));
        }
    }
    if (!any_nonzero) throw DataError("wks: no nonzero eigenvalues in the spectrum");

    DescriptorField field;
    field.pde = Pde::Wave;
    field.method = Method::Wks;
    field.samples = grid.samples;
    field.energy_sigma = grid.sigma;
    field.values = squared * coeff;
    if (normalize) {
        for (int j = 0; j < grid.count(); ++j) {
            const double den = coeff.col(j).dot(mode_mass);
            if (den > 0.0) field.values.col(j) /= den;
        }
    }
    return field;
}

} // namespace shapesig
