#pragma once

#include <Eigen/Core>

#include "shapesig/descriptor.hpp"
#include "shapesig/solvers.hpp"

namespace shapesig {

/// Sample grid for the kernel descriptors: diffusion times for HKS, energy
/// levels plus the distribution variance for WKS. Samples must be strictly
/// increasing (a single sample is allowed).
struct SpectralGrid {
    Eigen::VectorXd samples;
    double sigma = 0.0; // WKS energy variance; unused by HKS

    int count() const { return static_cast<int>(samples.size()); }
};

void validate(const SpectralGrid& grid, bool needs_sigma);

/// M logarithmically spaced times on [4 ln10 / |lambda_r|, 4 ln10 / |lambda_2|],
/// the usual sampling for heat-kernel descriptors.
SpectralGrid hks_default_grid(const EigenPairs& pairs, int m);

/// M linearly spaced energies on [log|lambda_2| + 2 sigma, log|lambda_r| - 2 sigma]
/// with sigma = 7 (e_max - e_min) / M. Throws DataError when the padded
/// interval is empty (too few samples for the spectrum width).
SpectralGrid wks_default_grid(const EigenPairs& pairs, int m);

/// HKS(x, t) = sum_k exp(-|lambda_k| t) phi_k(x)^2. The operator's
/// non-positive eigenvalues enter by magnitude so the sum decays.
DescriptorField hks(const EigenPairs& pairs, const SpectralGrid& grid);

/// WKS(x, e) = sum_k alpha_k(e)^2 phi_k(x)^2 with log-normal weights
/// alpha_k(e)^2 = exp(-(e - log|lambda_k|)^2 / (2 sigma^2)); zero modes are
/// skipped. Each energy level is normalized by sum_k alpha_k^2 ||phi_k||_D^2
/// (equal to sum_k alpha_k^2 for D-orthonormal modes), which keeps the
/// descriptor invariant under a uniform rescaling of the eigenvectors.
DescriptorField wks(const EigenPairs& pairs, const SpectralGrid& grid, bool normalize = true);

} // namespace shapesig
