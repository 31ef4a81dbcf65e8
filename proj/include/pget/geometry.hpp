// SPDX-License-Identifier: MIT
#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pget/common.hpp"

namespace pget {

/// Square pin lattice with a set of removed pins and the two-material
/// emission/attenuation constants. The assembly is centred at the origin.
struct AssemblySpec {
    int lattice_rows = 0;
    int lattice_cols = 0;
    double pin_pitch = 0.0;  // mm
    double pin_radius = 0.0; // mm
    std::set<std::pair<int, int>> missing_pins; // (row, col), row 0 at top

    double emission_fuel = 100.0;
    double emission_background = 0.0;
    double attenuation_fuel = 0.1356;      // mm^-1
    double attenuation_background = 0.0085; // mm^-1

    void validate() const;

    /// Centres of the present pins, lattice centred at the origin,
    /// row 0 at the top (+y), column 0 at the left (-x).
    std::vector<Eigen::Vector2d> pin_centers() const;

    /// Radius of the smallest origin-centred disk containing every pin.
    double circumscribed_radius() const;

    /// 10x10 lattice with a 3x3 block of pins removed below and left of centre.
    static AssemblySpec pwr_10x10_3x3gap();

    static AssemblySpec from_file(const std::string& path);
    void save(const std::string& path) const;
};

/// Uniform pixel/voxel discretisation of the investigation domain,
/// centred at the origin. Pixels are square (dx = dy).
struct GridSpec {
    double dx = 0.5;  // mm
    double dy = 0.5;  // mm, must equal dx
    double dz = 10.0; // mm
    double half_extent_xy = 80.0; // mm
    double half_extent_z = 50.0;  // mm

    void validate() const;

    int pixels_per_axis() const;  // ceil(2*half_extent_xy / dx)
    long pixel_count() const;     // pixels_per_axis()^2
    int voxels_per_pixel() const; // ceil(2*half_extent_z / dz), >= 1
    double span_xy() const { return pixels_per_axis() * dx; }
    double span_z() const { return voxels_per_pixel() * dz; }

    double pixel_center_coord(int i) const; // centre of cell i along either axis
    Eigen::Vector2d pixel_center(long pixel) const;
    long pixel_index(int ix, int iy) const { return static_cast<long>(iy) * pixels_per_axis() + ix; }

    /// Grid sized to enclose the assembly plus one pin pitch of margin.
    static GridSpec for_assembly(const AssemblySpec& spec, double dx, double dz = 10.0,
                                 double half_extent_z = 50.0);
};

/// Piecewise-constant emission/attenuation values over the grid pixels for
/// one rotation angle. When uniform_mu_half_side >= 0, every pixel whose
/// centre lies outside the square of that half side (axis-aligned in the
/// assembly frame, i.e. rotated by angle_deg in the lab frame) is guaranteed
/// to hold uniform_mu_value; rasterize() maintains this.
struct MaterialMap {
    GridSpec grid;
    Vector lambda; // emission per pixel
    Vector mu;     // attenuation per pixel, mm^-1
    double angle_deg = 0.0;
    double uniform_mu_half_side = -1.0;
    double uniform_mu_value = 0.0;
};

/// Rotate the pin centres counter-clockwise by angle_deg, then classify each
/// pixel by its centre: inside any pin disk -> fuel values, else background.
MaterialMap rasterize(const AssemblySpec& spec, const GridSpec& grid, double angle_deg);

/// The N_vox voxel centres stacked above/below a pixel, z at voxel mid-heights.
std::vector<Eigen::Vector3d> voxel_centers(const GridSpec& grid, long pixel);

} // namespace pget
