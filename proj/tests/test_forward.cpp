#include <doctest.h>

#include <cmath>
#include <random>

#include "pget/forward.hpp"
#include "pget/rng.hpp"

using namespace pget;

namespace {

DetectorArray small_array() {
    DetectorArray array;
    array.n_detectors = 16;
    array.pitch = 4.0;
    array.face_width = 4.0;
    array.face_height = 5.0;
    array.standoff_radius = 120.0;
    return array;
}

AssemblySpec small_assembly() {
    AssemblySpec spec;
    spec.lattice_rows = 3;
    spec.lattice_cols = 3;
    spec.pin_pitch = 12.0;
    spec.pin_radius = 4.5;
    return spec;
}

/// Monte Carlo estimate of the face solid angle: sample points on the
/// rectangle, average cos(gamma)/r^2, multiply by the face area.
double mc_solid_angle_fraction(const Eigen::Vector3d& p, int det, const DetectorArray& array,
                               int rays, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double yc = array.detector_y(det);
    double acc = 0.0;
    for (int i = 0; i < rays; ++i) {
        const double fy = yc + (unit(gen) - 0.5) * array.face_width;
        const double fz = (unit(gen) - 0.5) * array.face_height;
        const Eigen::Vector3d q(array.standoff_radius, fy, fz);
        const Eigen::Vector3d d = q - p;
        const double r2 = d.squaredNorm();
        const double cos_gamma = std::abs(d.x()) / std::sqrt(r2);
        acc += cos_gamma / r2;
    }
    const double area = array.face_width * array.face_height;
    return acc / rays * area / (4.0 * M_PI);
}

/// Midpoint-rule reference for the optical depth along pixel centre -> face
/// centre, sampling only the in-grid portion of the segment.
double dense_line_integral(int det, long pixel, const MaterialMap& map, const DetectorArray& array,
                           int samples) {
    const GridSpec& grid = map.grid;
    const Eigen::Vector2d s = grid.pixel_center(pixel);
    const Eigen::Vector2d e(array.standoff_radius, array.detector_y(det));
    const Eigen::Vector2d d = e - s;
    const double len = d.norm();
    const int n = grid.pixels_per_axis();
    const double origin = -0.5 * grid.span_xy();
    const double hi = origin + grid.span_xy();
    // clip [0, len] to the grid box
    double t0 = 0.0, t1 = len;
    const Eigen::Vector2d u = d / len;
    for (int axis = 0; axis < 2; ++axis) {
        if (u[axis] == 0.0) continue;
        const double ta = (origin - s[axis]) / u[axis];
        const double tb = (hi - s[axis]) / u[axis];
        t0 = std::max(t0, std::min(ta, tb));
        t1 = std::min(t1, std::max(ta, tb));
    }
    if (t0 >= t1) return 0.0;
    double acc = 0.0;
    for (int i = 0; i < samples; ++i) {
        const Eigen::Vector2d q = s + (t0 + (i + 0.5) / samples * (t1 - t0)) * u;
        const int ix = static_cast<int>(std::floor((q.x() - origin) / grid.dx));
        const int iy = static_cast<int>(std::floor((q.y() - origin) / grid.dx));
        if (ix < 0 || ix >= n || iy < 0 || iy >= n) continue;
        acc += map.mu[grid.pixel_index(ix, iy)];
    }
    return acc * (t1 - t0) / samples;
}

} // namespace

TEST_CASE("solid angle far-field limit and inverse-square scaling") {
    DetectorArray array = small_array();
    const int det = array.n_detectors / 2;
    const double yc = array.detector_y(det);
    const double d1 = 300.0;
    const Eigen::Vector3d p1(array.standoff_radius - d1, yc, 0.0);
    const double f1 = solid_angle_fraction(p1, det, array);
    const double far_field = array.face_width * array.face_height / (4.0 * M_PI * d1 * d1);
    CHECK(f1 == doctest::Approx(far_field).epsilon(0.01));

    const Eigen::Vector3d p2(array.standoff_radius - 2.0 * d1, yc, 0.0);
    const double f2 = solid_angle_fraction(p2, det, array);
    CHECK(f1 / f2 == doctest::Approx(4.0).epsilon(0.01));
}

TEST_CASE("solid angle matches a Monte Carlo ray-sampling oracle") {
    DetectorArray array = small_array();
    const int det = 3;
    const double yc = array.detector_y(det);
    // on-axis at 300 mm, 4 mm x 5 mm face (the documented oracle case)
    {
        DetectorArray far = small_array();
        far.standoff_radius = 300.0;
        const Eigen::Vector3d p(0.0, far.detector_y(det), 0.0);
        const double analytic = solid_angle_fraction(p, det, far);
        const double mc = mc_solid_angle_fraction(p, det, far, 1000000, 12345);
        CHECK(std::abs(analytic - mc) / mc < 0.005);
    }
    // strongly off-axis points
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::Vector3d p(array.standoff_radius - (30.0 + 150.0 * unit(gen)),
                                yc + (unit(gen) - 0.5) * 80.0, (unit(gen) - 0.5) * 60.0);
        const double analytic = solid_angle_fraction(p, det, array);
        const double mc = mc_solid_angle_fraction(p, det, array, 1000000, 1000 + trial);
        CHECK(std::abs(analytic - mc) / mc < 0.005);
    }
}

TEST_CASE("solid angle rejects a point on the face plane") {
    DetectorArray array = small_array();
    CHECK_THROWS_AS(solid_angle_fraction({array.standoff_radius, 0.0, 0.0}, 0, array), config_error);
}

TEST_CASE("detector response basics") {
    DetectorArray array = small_array();
    GridSpec grid;
    grid.dx = grid.dy = 2.0;
    grid.half_extent_xy = 30.0;
    grid.half_extent_z = 50.0;

    SUBCASE("single voxel collapses to the solid-angle fraction") {
        grid.dz = 120.0; // one voxel at z = 0
        const long p = grid.pixel_count() / 2;
        const auto centers = voxel_centers(grid, p);
        REQUIRE(centers.size() == 1);
        CHECK(detector_response(0, p, grid, array) ==
              doctest::Approx(solid_angle_fraction(centers[0], 0, array)).epsilon(1e-14));
    }
    SUBCASE("response decreases along the detector axis") {
        grid.dz = 10.0;
        const int det = array.n_detectors / 2;
        const int n = grid.pixels_per_axis();
        const int iy = n / 2;
        double prev = -1.0;
        for (int ix = n - 1; ix >= 0; --ix) { // walking away from the +x detector
            const double r = detector_response(det, grid.pixel_index(ix, iy), grid, array);
            if (prev >= 0.0) CHECK(r < prev);
            prev = r;
        }
    }
    SUBCASE("axial refinement changes the response by under 2%") {
        GridSpec coarse = grid;
        coarse.dz = 10.0; // 10 voxels
        GridSpec fine = grid;
        fine.dz = 1.0; // 100 voxels
        const long p = 3;
        const double r_coarse = detector_response(2, p, coarse, array);
        const double r_fine = detector_response(2, p, fine, array);
        CHECK(std::abs(r_coarse - r_fine) / r_fine < 0.02);
    }
}

TEST_CASE("correction factor") {
    DetectorArray array = small_array();
    GridSpec grid;
    grid.dx = grid.dy = 2.0;
    grid.half_extent_xy = 30.0;
    grid.half_extent_z = 50.0;

    SUBCASE("in-plane limit gives exactly one") {
        grid.dz = 120.0; // single voxel at z = 0
        CHECK(correction_factor(1, 5, grid, array) == 1.0);
    }
    SUBCASE("45-degree elevation weighs in as sqrt(2)") {
        const long p = grid.pixel_count() / 2;
        const Eigen::Vector2d c = grid.pixel_center(p);
        const double planar = std::hypot(array.standoff_radius - c.x(), array.detector_y(0) - c.y());
        const double sec = std::sqrt(planar * planar + planar * planar) / planar;
        CHECK(sec == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    }
    SUBCASE("matches an independent direct summation") {
        grid.dz = 10.0;
        DetectorArray far = small_array();
        far.standoff_radius = 300.0;
        const int det = 4;
        for (long p : {0L, 7L, grid.pixel_count() / 2, grid.pixel_count() - 1}) {
            const auto centers = voxel_centers(grid, p);
            double sum_r = 0.0, sum_rsec = 0.0;
            for (const auto& v : centers) {
                const double r3 = solid_angle_fraction(v, det, far);
                const double planar =
                    std::hypot(far.standoff_radius - v.x(), far.detector_y(det) - v.y());
                sum_r += r3;
                sum_rsec += r3 * std::sqrt(planar * planar + v.z() * v.z()) / planar;
            }
            CHECK(correction_factor(det, p, grid, far) ==
                  doctest::Approx(sum_rsec / sum_r).epsilon(1e-15));
            CHECK(correction_factor(det, p, grid, far) >= 1.0);
        }
    }
}

TEST_CASE("line integral") {
    DetectorArray array = small_array();
    AssemblySpec spec = small_assembly();
    const GridSpec grid = GridSpec::for_assembly(spec, 1.0);

    SUBCASE("uniform medium reduces to mu times the in-grid length") {
        MaterialMap map = rasterize(spec, grid, 0.0);
        const double mu0 = 0.01;
        map.mu.setConstant(mu0);
        map.uniform_mu_half_side = -1.0;
        const long p = grid.pixel_count() / 2; // centre pixel
        const double depth = line_integral(3, p, map, array);
        const Eigen::Vector2d s = grid.pixel_center(p);
        const Eigen::Vector2d e(array.standoff_radius, array.detector_y(3));
        const Eigen::Vector2d d = (e - s).normalized();
        const double t_exit = (0.5 * grid.span_xy() - s.x()) / d.x(); // +x face exit
        CHECK(depth == doctest::Approx(mu0 * t_exit).epsilon(1e-10));
    }
    SUBCASE("vacuum gives zero") {
        MaterialMap map = rasterize(spec, grid, 0.0);
        map.mu.setZero();
        map.uniform_mu_half_side = -1.0;
        CHECK(line_integral(0, 12, map, array) == 0.0);
    }
    SUBCASE("random maps agree with a dense-sampling quadrature oracle") {
        MaterialMap map = rasterize(spec, grid, 0.0);
        std::mt19937_64 gen(7);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (long p = 0; p < map.mu.size(); ++p) map.mu[p] = 0.05 + 0.2 * unit(gen);
        map.uniform_mu_half_side = -1.0;
        int tested = 0;
        while (tested < 50) {
            const int det = static_cast<int>(rng::uniform_below(gen, array.n_detectors));
            const long pixel = static_cast<long>(rng::uniform_below(gen, grid.pixel_count()));
            if (grid.pixel_center(pixel).norm() > 0.5 * spec.circumscribed_radius() + 10.0) continue;
            ++tested;
            const double exact = line_integral(det, pixel, map, array);
            const double approx = dense_line_integral(det, pixel, map, array, 100000);
            CHECK(std::abs(exact - approx) / exact < 1e-4);
        }
    }
}

TEST_CASE("view flux") {
    DetectorArray array = small_array();
    AssemblySpec spec = small_assembly();
    const GridSpec grid = GridSpec::for_assembly(spec, 1.0);
    const ResponseTables tables = make_response_tables(grid, array, 2);

    SUBCASE("no emission, no flux") {
        MaterialMap map = rasterize(spec, grid, 0.0);
        map.lambda.setZero();
        CHECK(view_flux(map, tables, array).isZero(0.0));
    }
    SUBCASE("unattenuated point source returns the response entry exactly") {
        MaterialMap map = rasterize(spec, grid, 0.0);
        map.lambda.setZero();
        map.mu.setZero();
        map.uniform_mu_half_side = 0.0;
        map.uniform_mu_value = 0.0;
        const long p0 = grid.pixel_count() / 2 + 5;
        map.lambda[p0] = 1.0;
        const Vector flux = view_flux(map, tables, array);
        for (int i = 0; i < array.n_detectors; ++i) CHECK(flux[i] == tables.r(i, p0));
    }
    SUBCASE("flux is linear in emission, exactly") {
        MaterialMap map = rasterize(spec, grid, 0.0);
        const Vector flux1 = view_flux(map, tables, array);
        map.lambda *= 2.0;
        const Vector flux2 = view_flux(map, tables, array);
        CHECK(flux2 == 2.0 * flux1);
    }
    SUBCASE("increasing attenuation never increases any flux") {
        MaterialMap map = rasterize(spec, grid, 0.0);
        const Vector before = view_flux(map, tables, array);
        std::mt19937_64 gen(11);
        MaterialMap bumped = map;
        for (int b = 0; b < 40; ++b) {
            bumped.mu[static_cast<long>(rng::uniform_below(gen, grid.pixel_count()))] += 0.05;
        }
        bumped.uniform_mu_half_side = -1.0; // hint no longer valid
        const Vector after = view_flux(bumped, tables, array);
        for (int i = 0; i < array.n_detectors; ++i) CHECK(after[i] <= before[i]);
    }
    SUBCASE("centre source contributes less than an edge source facing the bank") {
        const MaterialMap geometry = rasterize(spec, grid, 0.0);
        MaterialMap center = geometry;
        center.lambda.setZero();
        MaterialMap edge = geometry;
        edge.lambda.setZero();
        const int n = grid.pixels_per_axis();
        const double origin = -0.5 * grid.span_xy();
        const int iy = n / 2;
        const int ix_center = n / 2;
        const int ix_edge = static_cast<int>(std::floor((spec.pin_pitch + 3.0 - origin) / grid.dx));
        center.lambda[grid.pixel_index(ix_center, iy)] = 1.0;
        edge.lambda[grid.pixel_index(ix_edge, iy)] = 1.0;
        CHECK(view_flux(center, tables, array).sum() < view_flux(edge, tables, array).sum());
    }
    SUBCASE("tail shortcut agrees with full traversal") {
        MaterialMap map = rasterize(spec, grid, 0.0);
        MaterialMap no_hint = map;
        no_hint.uniform_mu_half_side = -1.0;
        const Vector with_hint = view_flux(map, tables, array);
        const Vector without = view_flux(no_hint, tables, array);
        for (int i = 0; i < array.n_detectors; ++i) {
            CHECK(with_hint[i] == doctest::Approx(without[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("full sinogram") {
    DetectorArray array = small_array();
    AssemblySpec spec = small_assembly();
    const GridSpec grid = GridSpec::for_assembly(spec, 1.0);

    SUBCASE("single angle equals one view flux") {
        const Sinogram s = full_sinogram(spec, grid, array, {0.0});
        const ResponseTables tables = make_response_tables(grid, array);
        const Vector flux = view_flux(rasterize(spec, grid, 0.0), tables, array);
        CHECK(s.values.col(0) == flux);
    }
    SUBCASE("full lattice has 90-degree symmetry") {
        std::vector<double> angles;
        for (int a = 0; a < 360; a += 15) angles.push_back(a);
        const Sinogram s = min_max_normalize(full_sinogram(spec, grid, array, angles, 2));
        const int quarter = 6; // 90 / 15
        for (std::size_t m = 0; m + quarter < angles.size(); ++m) {
            const double diff =
                (s.values.col(static_cast<long>(m)) - s.values.col(static_cast<long>(m + quarter)))
                    .cwiseAbs()
                    .mean();
            CHECK(diff < 0.02);
        }
    }
    SUBCASE("parallel evaluation is bit-identical to sequential") {
        std::vector<double> angles = {0.0, 30.0, 60.0, 90.0, 120.0};
        const Sinogram seq = full_sinogram(spec, grid, array, angles, 1);
        const Sinogram par = full_sinogram(spec, grid, array, angles, 4);
        CHECK(seq.values == par.values);
    }
    SUBCASE("angle validation") {
        CHECK_THROWS_AS(full_sinogram(spec, grid, array, {}), config_error);
        CHECK_THROWS_AS(full_sinogram(spec, grid, array, {10.0, 370.0}), config_error);
        CHECK_THROWS_AS(full_sinogram(spec, grid, array, {20.0, 10.0}), config_error);
    }
}

TEST_CASE("response tables are angle independent and reproducible") {
    DetectorArray array = small_array();
    AssemblySpec spec = small_assembly();
    const GridSpec grid = GridSpec::for_assembly(spec, 2.0);
    const ResponseTables a = make_response_tables(grid, array, 1);
    const ResponseTables b = make_response_tables(grid, array, 3);
    CHECK(a.r == b.r);
    CHECK(a.c == b.c);
    CHECK((a.r.array() > 0.0).all());
    CHECK((a.r.array() < 1.0).all());
    CHECK((a.c.array() >= 1.0).all());
}

TEST_CASE("normalization") {
    Sinogram s;
    s.values = Matrix(2, 2);
    s.values << 1.0, 3.0, 2.0, 5.0;
    s.angles_deg = {0.0, 1.0};
    const Sinogram n = min_max_normalize(s);
    CHECK(n.values.minCoeff() == 0.0);
    CHECK(n.values.maxCoeff() == 1.0);
    CHECK(n.normalized);

    Sinogram constant;
    constant.values = Matrix::Constant(2, 2, 3.0);
    constant.angles_deg = {0.0, 1.0};
    CHECK_THROWS_AS(min_max_normalize(constant), numeric_error);
}

TEST_CASE("synthetic ground truth") {
    DetectorArray array = small_array();
    AssemblySpec spec;
    spec.lattice_rows = 2;
    spec.lattice_cols = 2;
    spec.pin_pitch = 12.0;
    spec.pin_radius = 4.5;

    SynthFidelity fidelity;
    fidelity.dx = 0.25;
    fidelity.face_subsample = 1;
    fidelity.poisson = false;
    fidelity.blur_sigma_rows = 0.0;

    SUBCASE("degenerate fidelity reproduces the real-time model exactly") {
        const GridSpec grid =
            GridSpec::for_assembly(spec, fidelity.dx, fidelity.dz, fidelity.half_extent_z);
        const Sinogram truth = synthesize_ground_truth(spec, array, fidelity, 1, 2);
        const Sinogram model =
            min_max_normalize(full_sinogram(spec, grid, array, degree_angles(360), 2));
        CHECK(truth.values == model.values);
    }
    SUBCASE("fixed seed is bit-identical; noise obeys Poisson statistics") {
        SynthFidelity noisy = fidelity;
        noisy.poisson = true;
        noisy.count_scale = 1e4;
        const Sinogram a = synthesize_ground_truth(spec, array, noisy, 42, 2);
        const Sinogram b = synthesize_ground_truth(spec, array, noisy, 42, 2);
        CHECK(a.values == b.values);

        const Sinogram clean = synthesize_ground_truth(spec, array, fidelity, 42, 2);
        // the final renormalization shifts every entry by a common factor,
        // so centre the relative deviations before comparing spreads
        std::vector<double> rel, pred;
        double mean_rel = 0.0;
        for (long j = 0; j < clean.values.cols(); ++j) {
            for (long i = 0; i < clean.values.rows(); ++i) {
                const double v = clean.values(i, j);
                if (v <= 0.1) continue;
                rel.push_back((a.values(i, j) - v) / v);
                pred.push_back(1.0 / std::sqrt(noisy.count_scale * v));
                mean_rel += rel.back();
            }
        }
        REQUIRE(rel.size() > 100);
        mean_rel /= static_cast<double>(rel.size());
        double ss = 0.0, expected_ss = 0.0;
        for (std::size_t e = 0; e < rel.size(); ++e) {
            ss += (rel[e] - mean_rel) * (rel[e] - mean_rel);
            expected_ss += pred[e] * pred[e];
        }
        const double observed = std::sqrt(ss / static_cast<double>(rel.size()));
        const double predicted = std::sqrt(expected_ss / static_cast<double>(rel.size()));
        CHECK(std::abs(observed - predicted) / predicted < 0.2);
    }
    SUBCASE("bad fidelity is rejected") {
        SynthFidelity bad = fidelity;
        bad.count_scale = 0.0;
        CHECK_THROWS_AS(synthesize_ground_truth(spec, array, bad, 1), config_error);
        bad = fidelity;
        bad.dx = 0.5;
        CHECK_THROWS_AS(synthesize_ground_truth(spec, array, bad, 1), config_error);
    }
}
