// SPDX-License-Identifier: MIT
#include "pget/geometry.hpp"

#include <cmath>

#include "pget/kv.hpp"

namespace pget {

void AssemblySpec::validate() const {
    if (lattice_rows < 0 || lattice_cols < 0) throw config_error("lattice dimensions must be non-negative");
    if (lattice_rows > 0 || lattice_cols > 0) {
        if (pin_pitch <= 0 || pin_radius <= 0) throw config_error("pin pitch and radius must be positive");
        if (!(pin_pitch > 2.0 * pin_radius)) throw config_error("pin pitch must exceed twice the pin radius");
    }
    for (const auto& [r, c] : missing_pins) {
        if (r < 0 || r >= lattice_rows || c < 0 || c >= lattice_cols) {
            throw config_error("missing pin (" + std::to_string(r) + "," + std::to_string(c) +
                               ") outside the lattice");
        }
    }
    if (emission_fuel < 0 || emission_background < 0) throw config_error("emission values must be non-negative");
    if (attenuation_fuel < 0 || attenuation_background < 0) {
        throw config_error("attenuation values must be non-negative");
    }
}

std::vector<Eigen::Vector2d> AssemblySpec::pin_centers() const {
    std::vector<Eigen::Vector2d> centers;
    centers.reserve(static_cast<std::size_t>(lattice_rows) * lattice_cols);
    const double cx = 0.5 * (lattice_cols - 1);
    const double cy = 0.5 * (lattice_rows - 1);
    for (int r = 0; r < lattice_rows; ++r) {
        for (int c = 0; c < lattice_cols; ++c) {
            if (missing_pins.count({r, c})) continue;
            centers.emplace_back((c - cx) * pin_pitch, (cy - r) * pin_pitch);
        }
    }
    return centers;
}

double AssemblySpec::circumscribed_radius() const {
    double max_center = 0.0;
    bool any = false;
    for (const auto& p : pin_centers()) {
        max_center = std::max(max_center, p.norm());
        any = true;
    }
    return any ? max_center + pin_radius : 0.0;
}

AssemblySpec AssemblySpec::pwr_10x10_3x3gap() {
    AssemblySpec spec;
    spec.lattice_rows = 10;
    spec.lattice_cols = 10;
    spec.pin_pitch = 12.6;
    spec.pin_radius = 4.75;
    for (int r = 5; r <= 7; ++r) {
        for (int c = 2; c <= 4; ++c) spec.missing_pins.insert({r, c});
    }
    spec.validate();
    return spec;
}

AssemblySpec AssemblySpec::from_file(const std::string& path) {
    const kv::Document doc = kv::parse_file(path);
    AssemblySpec spec;
    spec.lattice_rows = static_cast<int>(doc.get_int("lattice_rows"));
    spec.lattice_cols = static_cast<int>(doc.get_int("lattice_cols"));
    spec.pin_pitch = doc.get_double("pin_pitch");
    spec.pin_radius = doc.get_double("pin_radius");
    spec.emission_fuel = doc.get_double_or("emission_fuel", spec.emission_fuel);
    spec.emission_background = doc.get_double_or("emission_background", spec.emission_background);
    spec.attenuation_fuel = doc.get_double_or("attenuation_fuel", spec.attenuation_fuel);
    spec.attenuation_background = doc.get_double_or("attenuation_background", spec.attenuation_background);
    if (doc.has("missing_pins")) {
        for (const auto& rc : doc.get_index_pairs("missing_pins")) spec.missing_pins.insert(rc);
    }
    spec.validate();
    return spec;
}

void AssemblySpec::save(const std::string& path) const {
    kv::Document doc;
    doc.set_int("lattice_rows", lattice_rows);
    doc.set_int("lattice_cols", lattice_cols);
    doc.set_double("pin_pitch", pin_pitch);
    doc.set_double("pin_radius", pin_radius);
    doc.set_double("emission_fuel", emission_fuel);
    doc.set_double("emission_background", emission_background);
    doc.set_double("attenuation_fuel", attenuation_fuel);
    doc.set_double("attenuation_background", attenuation_background);
    if (!missing_pins.empty()) {
        std::string pairs;
        for (const auto& [r, c] : missing_pins) {
            if (!pairs.empty()) pairs += ' ';
            pairs += "(" + std::to_string(r) + "," + std::to_string(c) + ")";
        }
        doc.set("missing_pins", pairs);
    }
    kv::write_file(doc, path);
}

void GridSpec::validate() const {
    if (dx != dy) throw config_error("grid pixels must be square (dx = dy)");
    if (dx <= 0 || dz <= 0) throw config_error("grid spacings must be positive");
    if (half_extent_xy <= 0 || half_extent_z <= 0) throw config_error("grid extents must be positive");
}

int GridSpec::pixels_per_axis() const {
    return static_cast<int>(std::ceil(2.0 * half_extent_xy / dx));
}

long GridSpec::pixel_count() const {
    const long n = pixels_per_axis();
    return n * n;
}

int GridSpec::voxels_per_pixel() const {
    return std::max(1, static_cast<int>(std::ceil(2.0 * half_extent_z / dz)));
}

double GridSpec::pixel_center_coord(int i) const {
    return -0.5 * span_xy() + (i + 0.5) * dx;
}

Eigen::Vector2d GridSpec::pixel_center(long pixel) const {
    const int n = pixels_per_axis();
    const int iy = static_cast<int>(pixel / n);
    const int ix = static_cast<int>(pixel % n);
    return {pixel_center_coord(ix), pixel_center_coord(iy)};
}

GridSpec GridSpec::for_assembly(const AssemblySpec& spec, double dx, double dz, double half_extent_z) {
    GridSpec grid;
    grid.dx = dx;
    grid.dy = dx;
    grid.dz = dz;
    // cover the lattice at every rotation angle, plus one pitch of water margin
    grid.half_extent_xy = spec.circumscribed_radius() + spec.pin_pitch;
    grid.half_extent_z = half_extent_z;
    grid.validate();
    return grid;
}

MaterialMap rasterize(const AssemblySpec& spec, const GridSpec& grid, double angle_deg) {
    spec.validate();
    grid.validate();
    if (!(angle_deg >= 0.0 && angle_deg < 360.0)) throw config_error("rotation angle must lie in [0, 360)");

    const double circ = spec.circumscribed_radius();
    if (circ > 0.5 * grid.span_xy()) {
        throw config_error("grid does not cover the rotated lattice (circumscribed radius " +
                           std::to_string(circ) + " mm exceeds the grid half-span)");
    }

    const int n = grid.pixels_per_axis();
    MaterialMap map;
    map.grid = grid;
    map.angle_deg = angle_deg;
    map.lambda = Vector::Constant(grid.pixel_count(), spec.emission_background);
    map.mu = Vector::Constant(grid.pixel_count(), spec.attenuation_background);
    // every pin disk fits inside this square in the assembly frame
    double half_side = 0.0;
    for (const auto& c : spec.pin_centers()) {
        half_side = std::max(half_side, std::max(std::abs(c.x()), std::abs(c.y())) + spec.pin_radius);
    }
    map.uniform_mu_half_side = half_side;
    map.uniform_mu_value = spec.attenuation_background;

    const double rad = angle_deg * M_PI / 180.0;
    const double cs = std::cos(rad), sn = std::sin(rad);
    const double r2 = spec.pin_radius * spec.pin_radius;
    const double origin = -0.5 * grid.span_xy();

    for (const auto& center : spec.pin_centers()) {
        const double px = cs * center.x() - sn * center.y();
        const double py = sn * center.x() + cs * center.y();
        // bounding box of the disk in cell indices
        int ix0 = static_cast<int>(std::floor((px - spec.pin_radius - origin) / grid.dx));
        int ix1 = static_cast<int>(std::floor((px + spec.pin_radius - origin) / grid.dx));
        int iy0 = static_cast<int>(std::floor((py - spec.pin_radius - origin) / grid.dx));
        int iy1 = static_cast<int>(std::floor((py + spec.pin_radius - origin) / grid.dx));
        ix0 = std::max(ix0, 0);
        iy0 = std::max(iy0, 0);
        ix1 = std::min(ix1, n - 1);
        iy1 = std::min(iy1, n - 1);
        for (int iy = iy0; iy <= iy1; ++iy) {
            const double dy = grid.pixel_center_coord(iy) - py;
            for (int ix = ix0; ix <= ix1; ++ix) {
                const double dx_ = grid.pixel_center_coord(ix) - px;
                if (dx_ * dx_ + dy * dy <= r2) {
                    const long p = map.grid.pixel_index(ix, iy);
                    map.lambda[p] = spec.emission_fuel;
                    map.mu[p] = spec.attenuation_fuel;
                }
            }
        }
    }
    return map;
}

std::vector<Eigen::Vector3d> voxel_centers(const GridSpec& grid, long pixel) {
    grid.validate();
    if (pixel < 0 || pixel >= grid.pixel_count()) throw config_error("pixel index out of range");
    const Eigen::Vector2d c = grid.pixel_center(pixel);
    const int nvox = grid.voxels_per_pixel();
    const double z0 = -0.5 * grid.span_z();
    std::vector<Eigen::Vector3d> out;
    out.reserve(nvox);
    for (int s = 0; s < nvox; ++s) {
        out.emplace_back(c.x(), c.y(), z0 + (s + 0.5) * grid.dz);
    }
    return out;
}

} // namespace pget
