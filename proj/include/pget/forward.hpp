// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <vector>

#include "pget/common.hpp"
#include "pget/geometry.hpp"

namespace pget {

/// Linear detector bank at fixed standoff on the +x side, faces normal to -x.
/// The two staggered physical heads are folded into one merged array of
/// n_detectors effective rows at the effective pitch.
struct DetectorArray {
    int n_detectors = 182;
    double pitch = 2.0;        // mm, effective merged pitch
    double head_offset = 0.0;  // mm, shift of the whole bank along y
    double face_width = 4.0;   // mm, along y
    double face_height = 5.0;  // mm, along z
    double standoff_radius = 300.0; // mm, face centre distance from the axis

    void validate() const;
    double detector_y(int i) const {
        return (i - 0.5 * (n_detectors - 1)) * pitch + head_offset;
    }
    Eigen::Vector3d face_center(int i) const {
        return {standoff_radius, detector_y(i), 0.0};
    }
};

/// Angle-independent geometric factors: r (solid-angle response) and
/// c (out-of-plane attenuation correction), both N x N_pix.
struct ResponseTables {
    GridSpec grid;
    int n_detectors = 0;
    Matrix r; // entries in (0, 1)
    Matrix c; // entries >= 1
};

/// Detector readings (rows) versus rotation angles (columns).
struct Sinogram {
    Matrix values; // N x n_views
    std::vector<double> angles_deg;
    bool normalized = false;

    int n_detectors() const { return static_cast<int>(values.rows()); }
    int n_views() const { return static_cast<int>(values.cols()); }
    void validate() const;
};

/// Solid angle of the detector's rectangular face at a point, divided by 4*pi.
double solid_angle_fraction(const Eigen::Vector3d& voxel_center, int detector,
                            const DetectorArray& array);

/// Mean solid-angle fraction over the pixel's voxel column.
double detector_response(int detector, long pixel, const GridSpec& grid, const DetectorArray& array);

/// Response-weighted mean of 1/cos(elevation) over the voxel column; >= 1.
double correction_factor(int detector, long pixel, const GridSpec& grid, const DetectorArray& array);

/// Exact optical depth along the segment from the pixel centre to the
/// detector face centre: sum of per-pixel chord lengths times attenuation.
double line_integral(int detector, long pixel, const MaterialMap& mu_map, const DetectorArray& array);

ResponseTables make_response_tables(const GridSpec& grid, const DetectorArray& array, int threads = 0);

/// flux_i = sum_p r_ip * exp(-c_ip * depth_ip) * lambda_p
Vector view_flux(const MaterialMap& material, const ResponseTables& tables, const DetectorArray& array);

/// One column per angle via rasterize + view_flux; response tables built once.
Sinogram full_sinogram(const AssemblySpec& spec, const GridSpec& grid, const DetectorArray& array,
                       const std::vector<double>& angles_deg, int threads = 0);

/// Global min-max rescale to [0, 1].
Sinogram min_max_normalize(const Sinogram& s);

std::vector<double> degree_angles(int n_views = 360); // 0, 1, ..., n_views-1

/// Knobs that make the synthetic ground truth strictly richer than the
/// real-time model output: finer grid, detector-face sub-sampling,
/// Poisson counting noise and a detector-row blur.
struct SynthFidelity {
    double dx = 0.25;          // mm, must be <= 0.25
    double dz = 10.0;          // mm
    double half_extent_z = 50.0;
    int face_subsample = 1;    // rays across the face width per pair
    double count_scale = 1e4;  // expected counts at unit normalized flux
    bool poisson = true;
    double blur_sigma_rows = 0.5; // 0 disables
};

/// Deterministic-for-seed stand-in for a measured sinogram at all 360 views,
/// min-max normalized.
Sinogram synthesize_ground_truth(const AssemblySpec& spec, const DetectorArray& array,
                                 const SynthFidelity& fidelity, std::uint64_t seed, int threads = 0);

} // namespace pget
