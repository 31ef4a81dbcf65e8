// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pget/common.hpp"
#include "pget/forward.hpp"

namespace pget {

/// Column-stacked copies of the ground-truth views at the sampled angles.
struct SnapshotDatabase {
    Matrix matrix; // N x N_s
    std::vector<double> sampled_angles; // degrees, ascending, distinct
    std::vector<int> sampled_indices;   // positions in the source sinogram

    int n_samples() const { return static_cast<int>(matrix.cols()); }
    void validate() const;
};

/// Left singular vectors of the database with the full singular-value
/// spectrum. Mode signs are fixed (largest-magnitude entry positive) so
/// results are reproducible across linear-algebra backends.
struct PodBasis {
    Matrix modes;               // N x k, orthonormal columns
    Vector singular_values;     // full spectrum, descending
    Vector normalized_spectrum; // sums to one
    int k = 0;
};

enum class CoefficientSource { sampled_projection, physics_aware, interpolated_linear, interpolated_rbf };

std::string to_string(CoefficientSource source);

struct CoefficientMatrix {
    Matrix values; // k x n_views
    CoefficientSource source = CoefficientSource::sampled_projection;
    std::vector<double> angles_deg;
};

/// Draw n_s distinct views uniformly without replacement (deterministic for
/// a fixed seed) and copy them into a database.
SnapshotDatabase sample_views(const Sinogram& sinogram, int n_s, std::uint64_t seed);

/// Thin SVD of the database; keeps the first k modes and the whole spectrum.
/// k above the numerical rank is reduced with a note.
PodBasis build_basis(const SnapshotDatabase& db, int k);

/// Fraction of total data variability captured by the first j modes.
double information_variance(const PodBasis& basis, int j);

/// Smallest mode count whose information variance reaches the target.
int modes_for_variance(const PodBasis& basis, double target);

/// Same spectrum, first k modes only.
PodBasis truncated(const PodBasis& basis, int k);

/// C = U^T * database, one column per sampled angle.
CoefficientMatrix sampled_projection(const PodBasis& basis, const SnapshotDatabase& db);

/// Physics-aware coefficients: project the real-time sinogram onto the POD
/// space, then scale each row by the least-squares fit against the sampled
/// projections at the sampled angles.
CoefficientMatrix papod_coefficients(const PodBasis& basis, const Sinogram& realtime,
                                     const SnapshotDatabase& db);

/// S_tilde = U * C.
Sinogram reconstruct(const PodBasis& basis, const CoefficientMatrix& coeffs);

enum class InterpScheme { linear, rbf };

/// Interpolate the sampled projections row-by-row over the view angle,
/// periodic across the 0/360 seam.
CoefficientMatrix podi_coefficients(const PodBasis& basis, const SnapshotDatabase& db,
                                    const std::vector<double>& target_angles, InterpScheme scheme);

/// Non-POD baseline: interpolate each detector row of the database linearly
/// over the view angle, periodic.
Sinogram linear_data_interpolation(const SnapshotDatabase& db,
                                   const std::vector<double>& target_angles);

} // namespace pget
