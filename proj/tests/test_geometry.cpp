#include <doctest.h>

#include <cmath>

#include "pget/geometry.hpp"

using namespace pget;

namespace {

AssemblySpec small_assembly() {
    AssemblySpec spec;
    spec.lattice_rows = 3;
    spec.lattice_cols = 3;
    spec.pin_pitch = 10.0;
    spec.pin_radius = 4.0;
    return spec;
}

} // namespace

TEST_CASE("assembly validation") {
    AssemblySpec spec = small_assembly();
    CHECK_NOTHROW(spec.validate());

    SUBCASE("overlapping pins rejected") {
        spec.pin_radius = 5.0; // pitch == 2r
        CHECK_THROWS_AS(spec.validate(), config_error);
    }
    SUBCASE("missing pin outside lattice rejected") {
        spec.missing_pins.insert({3, 0});
        CHECK_THROWS_AS(spec.validate(), config_error);
    }
    SUBCASE("negative attenuation rejected") {
        spec.attenuation_background = -1.0;
        CHECK_THROWS_AS(spec.validate(), config_error);
    }
}

TEST_CASE("pwr layout has 91 pins and the gap is empty") {
    const AssemblySpec spec = AssemblySpec::pwr_10x10_3x3gap();
    CHECK(spec.pin_centers().size() == 91);

    const GridSpec grid = GridSpec::for_assembly(spec, 0.5);
    const MaterialMap map = rasterize(spec, grid, 0.0);

    // every present pin covers its own centre pixel with fuel values
    const int n = grid.pixels_per_axis();
    const double origin = -0.5 * grid.span_xy();
    for (const auto& c : spec.pin_centers()) {
        const int ix = static_cast<int>(std::floor((c.x() - origin) / grid.dx));
        const int iy = static_cast<int>(std::floor((c.y() - origin) / grid.dx));
        const long p = grid.pixel_index(ix, iy);
        CHECK(map.lambda[p] == spec.emission_fuel);
        CHECK(map.mu[p] == spec.attenuation_fuel);
    }
    // removed pins leave background at their centres
    for (int r = 5; r <= 7; ++r) {
        for (int col = 2; col <= 4; ++col) {
            const double x = (col - 4.5) * spec.pin_pitch;
            const double y = (4.5 - r) * spec.pin_pitch;
            const int ix = static_cast<int>(std::floor((x - origin) / grid.dx));
            const int iy = static_cast<int>(std::floor((y - origin) / grid.dx));
            const long p = grid.pixel_index(ix, iy);
            CHECK(map.lambda[p] == spec.emission_background);
            CHECK(map.mu[p] == spec.attenuation_background);
        }
    }
    CHECK(n == grid.pixels_per_axis());
}

TEST_CASE("empty lattice rasterizes to background everywhere") {
    AssemblySpec spec = small_assembly();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) spec.missing_pins.insert({r, c});
    }
    const GridSpec grid = GridSpec::for_assembly(spec, 1.0);
    const MaterialMap map = rasterize(spec, grid, 123.0);
    CHECK((map.lambda.array() == spec.emission_background).all());
    CHECK((map.mu.array() == spec.attenuation_background).all());
}

TEST_CASE("single centered pin is rotation invariant") {
    AssemblySpec spec;
    spec.lattice_rows = 1;
    spec.lattice_cols = 1;
    spec.pin_pitch = 10.0;
    spec.pin_radius = 4.0;
    const GridSpec grid = GridSpec::for_assembly(spec, 0.5);
    const MaterialMap a = rasterize(spec, grid, 0.0);
    const MaterialMap b = rasterize(spec, grid, 90.0);
    CHECK(a.lambda == b.lambda);
    CHECK(a.mu == b.mu);
}

TEST_CASE("rasterization matches brute-force point-in-disk classification at angle 0") {
    const AssemblySpec spec = AssemblySpec::pwr_10x10_3x3gap();
    const GridSpec grid = GridSpec::for_assembly(spec, 1.0);
    const MaterialMap map = rasterize(spec, grid, 0.0);
    const auto centers = spec.pin_centers();
    const int n = grid.pixels_per_axis();
    for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
            const double x = grid.pixel_center_coord(ix);
            const double y = grid.pixel_center_coord(iy);
            bool fuel = false;
            for (const auto& c : centers) {
                const double dx = x - c.x(), dy = y - c.y();
                if (dx * dx + dy * dy <= spec.pin_radius * spec.pin_radius) {
                    fuel = true;
                    break;
                }
            }
            const long p = grid.pixel_index(ix, iy);
            CHECK(map.lambda[p] == (fuel ? spec.emission_fuel : spec.emission_background));
        }
    }
}

TEST_CASE("fuel pixel count is stable under rotation") {
    const AssemblySpec spec = AssemblySpec::pwr_10x10_3x3gap();
    const GridSpec grid = GridSpec::for_assembly(spec, 0.5);
    const auto fuel_count = [&](double angle) {
        const MaterialMap map = rasterize(spec, grid, angle);
        return (map.lambda.array() == spec.emission_fuel).count();
    };
    const double reference = static_cast<double>(fuel_count(0.0));
    for (int a = 0; a < 360; a += 1) {
        const double count = static_cast<double>(fuel_count(a));
        CHECK(std::abs(count - reference) / reference <= 0.02);
    }
}

TEST_CASE("rasterization is deterministic") {
    const AssemblySpec spec = AssemblySpec::pwr_10x10_3x3gap();
    const GridSpec grid = GridSpec::for_assembly(spec, 1.0);
    const MaterialMap a = rasterize(spec, grid, 37.0);
    const MaterialMap b = rasterize(spec, grid, 37.0);
    CHECK(a.lambda == b.lambda);
    CHECK(a.mu == b.mu);
}

TEST_CASE("grid too small for the lattice is a coverage error") {
    const AssemblySpec spec = AssemblySpec::pwr_10x10_3x3gap();
    GridSpec grid = GridSpec::for_assembly(spec, 1.0);
    grid.half_extent_xy = 30.0; // lattice half-diagonal is ~89 mm
    CHECK_THROWS_AS(rasterize(spec, grid, 0.0), config_error);
}

TEST_CASE("voxel centers") {
    GridSpec grid;
    grid.dx = grid.dy = 1.0;
    grid.half_extent_xy = 5.0;

    SUBCASE("degenerate axial grid collapses to z = 0") {
        grid.dz = 100.0;
        grid.half_extent_z = 50.0;
        const auto centers = voxel_centers(grid, 0);
        REQUIRE(centers.size() == 1);
        CHECK(centers[0].z() == 0.0);
    }
    SUBCASE("uniform ten-voxel column") {
        grid.dz = 10.0;
        grid.half_extent_z = 50.0;
        const auto centers = voxel_centers(grid, 3);
        REQUIRE(centers.size() == 10);
        CHECK(centers.front().z() == doctest::Approx(-45.0));
        CHECK(centers.back().z() == doctest::Approx(45.0));
        double sum = 0.0;
        for (const auto& v : centers) sum += v.z();
        CHECK(sum == doctest::Approx(0.0).epsilon(1e-12));
        // all voxels share the pixel centre in-plane
        for (const auto& v : centers) {
            CHECK(v.x() == centers.front().x());
            CHECK(v.y() == centers.front().y());
        }
    }
    SUBCASE("out-of-range pixel rejected") {
        CHECK_THROWS_AS(voxel_centers(grid, grid.pixel_count()), config_error);
    }
}

TEST_CASE("layout file round trip") {
    const AssemblySpec spec = AssemblySpec::pwr_10x10_3x3gap();
    const std::string path = "layout_roundtrip.txt";
    spec.save(path);
    const AssemblySpec loaded = AssemblySpec::from_file(path);
    CHECK(loaded.lattice_rows == spec.lattice_rows);
    CHECK(loaded.lattice_cols == spec.lattice_cols);
    CHECK(loaded.pin_pitch == spec.pin_pitch);
    CHECK(loaded.pin_radius == spec.pin_radius);
    CHECK(loaded.missing_pins == spec.missing_pins);
    CHECK(loaded.attenuation_fuel == spec.attenuation_fuel);
    std::remove(path.c_str());
}
