// SPDX-License-Identifier: MIT
#include "pget/forward.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "pget/parallel.hpp"

namespace pget {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// 2D cell-by-cell traversal state over a square grid.
struct TraceGrid {
    const double* mu;
    int n;
    double origin; // low corner of the grid on both axes
    double dx;
};

/// Optical depth along start + t * unit_dir for t in [0, tmax], zero outside
/// the grid. Chord lengths come from exact boundary-crossing parameters, so
/// piecewise-constant attenuation is integrated exactly.
double trace_depth(const TraceGrid& g, double sx, double sy, double ux, double uy, double tmax) {
    if (tmax <= 0.0) return 0.0;
    const double lo = g.origin;
    const double hi = g.origin + g.n * g.dx;

    double t0 = 0.0, t1 = tmax;
    if (ux != 0.0) {
        const double ta = (lo - sx) / ux, tb = (hi - sx) / ux;
        t0 = std::max(t0, std::min(ta, tb));
        t1 = std::min(t1, std::max(ta, tb));
    } else if (sx < lo || sx > hi) {
        return 0.0;
    }
    if (uy != 0.0) {
        const double ta = (lo - sy) / uy, tb = (hi - sy) / uy;
        t0 = std::max(t0, std::min(ta, tb));
        t1 = std::min(t1, std::max(ta, tb));
    } else if (sy < lo || sy > hi) {
        return 0.0;
    }
    if (t0 >= t1) return 0.0;

    const double inv_dx = 1.0 / g.dx;
    const double px = sx + t0 * ux, py = sy + t0 * uy;
    int ix = std::clamp(static_cast<int>(std::floor((px - lo) * inv_dx)), 0, g.n - 1);
    int iy = std::clamp(static_cast<int>(std::floor((py - lo) * inv_dx)), 0, g.n - 1);

    const int step_x = ux > 0.0 ? 1 : -1;
    const int step_y = uy > 0.0 ? 1 : -1;
    const double tdx = ux != 0.0 ? g.dx / std::abs(ux) : kInf;
    const double tdy = uy != 0.0 ? g.dx / std::abs(uy) : kInf;
    double tmx = ux != 0.0 ? (lo + (ix + (step_x > 0 ? 1 : 0)) * g.dx - sx) / ux : kInf;
    double tmy = uy != 0.0 ? (lo + (iy + (step_y > 0 ? 1 : 0)) * g.dx - sy) / uy : kInf;

    const int dix = step_x;
    const int diy = step_y * g.n;
    long idx = static_cast<long>(iy) * g.n + ix;
    double t = t0;
    double acc = 0.0;
    for (;;) {
        const bool advance_x = tmx < tmy;
        const double tn = advance_x ? tmx : tmy;
        const double tc = tn < t1 ? tn : t1;
        if (tc > t) acc += (tc - t) * g.mu[idx];
        t = tc;
        if (tn >= t1) break;
        if (advance_x) {
            ix += step_x;
            if (ix < 0 || ix >= g.n) break;
            idx += dix;
            tmx += tdx;
        } else {
            iy += step_y;
            if (iy < 0 || iy >= g.n) break;
            idx += diy;
            tmy += tdy;
        }
    }
    return acc;
}

/// Per-row prefix counts of fuel pixels for a two-valued attenuation map.
/// prefix[iy * (n + 1) + ix] is the number of fuel cells in row iy at
/// columns [0, ix).
struct TwoLevelMap {
    bool valid = false;
    double mu_background = 0.0;
    double mu_delta = 0.0; // fuel minus background
    std::vector<std::uint16_t> prefix;
};

/// Fuel cell-lengths (in fractional-column units) crossed along the segment
/// start + s * (dxp, dy), s in [0, s_cut], via row marching over the prefix
/// table. Requires dxp > 0; inv_dy must equal 1/|dy| (unused when dy == 0).
double fuel_cells_crossed(const TwoLevelMap& two, const TraceGrid& g, double sx, double sy,
                          double dxp, double dy, double inv_dy, double s_cut) {
    if (s_cut <= 0.0) return 0.0;
    const double lo = g.origin;
    const double inv_dx = 1.0 / g.dx;
    const int n = g.n;
    const double fmax = static_cast<double>(n);
    const int iy0 = std::clamp(static_cast<int>(std::floor((sy - lo) * inv_dx)), 0, n - 1);

    double fa = std::max((sx - lo) * inv_dx, 0.0);
    const double f_end = std::min((sx - lo + s_cut * dxp) * inv_dx, fmax);

    long rows = 0;
    double f1 = f_end, df = 0.0;
    if (dy != 0.0) {
        const int step_up = dy > 0.0 ? 1 : 0;
        const double y_first = lo + (iy0 + step_up) * g.dx;
        const double s1 = (y_first - sy) * (dy > 0.0 ? inv_dy : -inv_dy);
        const double ds = g.dx * inv_dy;
        if (s1 <= s_cut) {
            rows = 1 + static_cast<long>((s_cut - s1) / ds);
            f1 = std::min((sx - lo + s1 * dxp) * inv_dx, fmax);
            df = dxp * inv_dy * g.dx * inv_dx;
        }
    }
    // never march past the grid edge
    const int step_y = dy > 0.0 ? 1 : -1;
    rows = std::min(rows, static_cast<long>(step_y > 0 ? n - 1 - iy0 : iy0));

    const std::uint16_t* row = two.prefix.data() + static_cast<std::size_t>(iy0) * (n + 1);
    const long drow = static_cast<long>(step_y) * (n + 1);
    double fuel_cells = 0.0;
    // full cells strictly between ia and ib plus fuel-weighted partials;
    // the algebra also covers ia == ib
    const auto span = [&](const std::uint16_t* r, double fa_, double fb_) {
        const int ia = std::min(static_cast<int>(fa_), n - 1);
        const int ib = std::min(static_cast<int>(fb_), n - 1);
        const int pa = r[ia], pa1 = r[ia + 1];
        const int pb = r[ib], pb1 = r[ib + 1];
        fuel_cells += static_cast<double>(pb - pa1) + (pa1 - pa) * ((ia + 1) - fa_) +
                      (pb1 - pb) * (fb_ - ib);
    };
    if (rows > 0) {
        double fb = f1;
        for (long k = 0;;) {
            span(row, fa, fb);
            row += drow;
            fa = fb;
            if (++k == rows) break;
            fb = std::min(fb + df, fmax);
        }
    }
    span(row, fa, f_end);
    return fuel_cells;
}

struct ResponsePair {
    double r;
    double c;
};

ResponsePair detector_pixel_response(int detector, long pixel, const GridSpec& grid,
                                     const DetectorArray& array) {
    const Eigen::Vector2d center = grid.pixel_center(pixel);
    const int nvox = grid.voxels_per_pixel();
    const double z0 = -0.5 * grid.span_z();
    const double dy = center.y() - array.detector_y(detector);
    const double dxp = array.standoff_radius - center.x();
    const double planar = std::sqrt(dxp * dxp + dy * dy);
    if (planar <= 0.0) {
        throw config_error("voxel column sits on the detector axis (elevation angle of 90 degrees)");
    }
    // the voxel column is symmetric about z = 0 and the face is centred there,
    // so +-z voxels contribute identical terms
    double sum_r = 0.0, sum_r_sec = 0.0;
    for (int s = nvox / 2; s < nvox; ++s) {
        const double z = z0 + (s + 0.5) * grid.dz;
        const double r3d =
            solid_angle_fraction(Eigen::Vector3d(center.x(), center.y(), z), detector, array);
        const double sec = std::sqrt(planar * planar + z * z) / planar; // 1/cos(alpha)
        const double mult = (2 * s + 1 == nvox) ? 1.0 : 2.0;
        sum_r += mult * r3d;
        sum_r_sec += mult * r3d * sec;
    }
    return {sum_r / nvox, sum_r_sec / sum_r};
}

/// Shared flux kernel. face_subsample = 1 reproduces the plain view flux;
/// larger values average the attenuation over rays to equispaced points
/// across the detector face width.
Vector view_flux_impl(const MaterialMap& material, const ResponseTables& tables,
                      const DetectorArray& array, int face_subsample) {
    const GridSpec& grid = material.grid;
    if (tables.grid.pixels_per_axis() != grid.pixels_per_axis() || tables.grid.dx != grid.dx) {
        throw config_error("response tables were built for a different grid");
    }
    if (tables.n_detectors != array.n_detectors) {
        throw config_error("response tables were built for a different detector array");
    }
    if (material.lambda.size() != grid.pixel_count() || material.mu.size() != grid.pixel_count()) {
        throw config_error("material map size does not match its grid");
    }
    const int n = grid.pixels_per_axis();
    const int n_det = array.n_detectors;
    const TraceGrid tgrid{material.mu.data(), n, -0.5 * grid.span_xy(), grid.dx};

    // Validate the uniform-tail hint and classify the map in one scan; any
    // disagreement falls back to plain per-cell traversal.
    const double rad = material.angle_deg * M_PI / 180.0;
    const double cs = std::cos(rad), sn = std::sin(rad);
    bool tail_ok = material.uniform_mu_half_side >= 0.0;
    TwoLevelMap two;
    two.mu_background = material.uniform_mu_value;
    if (tail_ok) {
        two.valid = true;
        two.prefix.assign(static_cast<std::size_t>(n) * (n + 1), 0);
        bool has_fuel = false;
        for (int iy = 0; iy < n && tail_ok; ++iy) {
            const double y = grid.pixel_center_coord(iy);
            std::uint16_t* row = two.prefix.data() + static_cast<std::size_t>(iy) * (n + 1);
            int count = 0;
            for (int ix = 0; ix < n; ++ix) {
                row[ix] = static_cast<std::uint16_t>(count);
                const double mu = material.mu[grid.pixel_index(ix, iy)];
                if (mu != two.mu_background) {
                    const double x = grid.pixel_center_coord(ix);
                    const double a = cs * x + sn * y;
                    const double b = -sn * x + cs * y;
                    if (std::max(std::abs(a), std::abs(b)) > material.uniform_mu_half_side) {
                        tail_ok = false; // hint violated
                        break;
                    }
                    if (!has_fuel) {
                        two.mu_delta = mu - two.mu_background;
                        has_fuel = true;
                    } else if (mu != two.mu_background + two.mu_delta) {
                        two.valid = false; // more than two attenuation levels
                    }
                    ++count;
                }
            }
            row[n] = static_cast<std::uint16_t>(count);
        }
        if (!tail_ok) two.valid = false;
    }
    // Cells crossed beyond this half side have centres outside the hint square.
    const double cutoff_half_side = material.uniform_mu_half_side + grid.dx;

    const double lo = tgrid.origin;
    const double hi = tgrid.origin + n * grid.dx;

    Vector flux = Vector::Zero(n_det);
    const double inv_sub = 1.0 / face_subsample;
    for (long p = 0; p < grid.pixel_count(); ++p) {
        const double lam = material.lambda[p];
        if (lam == 0.0) continue;
        const int ix = static_cast<int>(p % n);
        const int iy = static_cast<int>(p / n);
        const double sx = grid.pixel_center_coord(ix);
        const double sy = grid.pixel_center_coord(iy);
        // start position in the assembly frame
        const double a0 = cs * sx + sn * sy;
        const double b0 = -sn * sx + cs * sy;
        const double dxp = array.standoff_radius - sx; // > 0 given the standoff check
        const double inv_dxp = 1.0 / dxp;
        const double s_grid_x = (hi - sx) * inv_dxp;
        const bool inside_cutoff =
            tail_ok && dxp > 0.0 && std::max(std::abs(a0), std::abs(b0)) < cutoff_half_side;
        const double* r_col = tables.r.data() + p * n_det;
        const double* c_col = tables.c.data() + p * n_det;
        for (int i = 0; i < n_det; ++i) {
            const double ey = array.detector_y(i);
            double weight = 0.0;
            for (int j = 0; j < face_subsample; ++j) {
                const double off = ((j + 0.5) * inv_sub - 0.5) * array.face_width;
                const double dy_ = ey + off - sy;
                const double len = std::sqrt(dxp * dxp + dy_ * dy_);
                if (len == 0.0) continue;
                double depth;
                if (inside_cutoff) {
                    // ray in the unnormalized parameter s in [0, 1]
                    const double inv_dy = dy_ != 0.0 ? 1.0 / std::abs(dy_) : kInf;
                    double s_grid = std::min(1.0, s_grid_x);
                    if (dy_ > 0.0) {
                        s_grid = std::min(s_grid, (hi - sy) * inv_dy);
                    } else if (dy_ < 0.0) {
                        s_grid = std::min(s_grid, (sy - lo) * inv_dy);
                    }
                    // exit from the uniform-tail square, assembly frame
                    const double da = cs * dxp + sn * dy_;
                    const double db = -sn * dxp + cs * dy_;
                    double s_cut = s_grid;
                    if (da > 0.0) s_cut = std::min(s_cut, (cutoff_half_side - a0) / da);
                    if (da < 0.0) s_cut = std::min(s_cut, (-cutoff_half_side - a0) / da);
                    if (db > 0.0) s_cut = std::min(s_cut, (cutoff_half_side - b0) / db);
                    if (db < 0.0) s_cut = std::min(s_cut, (-cutoff_half_side - b0) / db);
                    const double t_grid = s_grid * len;
                    if (two.valid) {
                        const double cells =
                            fuel_cells_crossed(two, tgrid, sx, sy, dxp, dy_, inv_dy, s_cut);
                        depth = material.uniform_mu_value * t_grid +
                                two.mu_delta * cells * grid.dx * len * inv_dxp;
                    } else {
                        const double inv_len = 1.0 / len;
                        depth = trace_depth(tgrid, sx, sy, dxp * inv_len, dy_ * inv_len, s_cut * len);
                        if (s_grid > s_cut) {
                            depth += material.uniform_mu_value * (s_grid - s_cut) * len;
                        }
                    }
                } else {
                    const double inv_len = 1.0 / len;
                    depth = trace_depth(tgrid, sx, sy, dxp * inv_len, dy_ * inv_len, len);
                }
                weight += std::exp(-c_col[i] * depth);
            }
            flux[i] += r_col[i] * weight * inv_sub * lam;
        }
    }
    return flux;
}

Matrix assemble_sinogram(const AssemblySpec& spec, const GridSpec& grid, const DetectorArray& array,
                         const std::vector<double>& angles_deg, const ResponseTables& tables,
                         int face_subsample, int threads) {
    Matrix values(array.n_detectors, static_cast<long>(angles_deg.size()));
    parallel_for_chunks(static_cast<std::int64_t>(angles_deg.size()), threads,
                        [&](std::int64_t begin, std::int64_t end) {
                            for (std::int64_t m = begin; m < end; ++m) {
                                const MaterialMap map = rasterize(spec, grid, angles_deg[m]);
                                values.col(m) = view_flux_impl(map, tables, array, face_subsample);
                            }
                        });
    return values;
}

void validate_angles(const std::vector<double>& angles_deg) {
    if (angles_deg.empty()) throw config_error("angle list is empty");
    for (std::size_t i = 0; i < angles_deg.size(); ++i) {
        if (!(angles_deg[i] >= 0.0 && angles_deg[i] < 360.0)) {
            throw config_error("view angles must lie in [0, 360)");
        }
        if (i > 0 && !(angles_deg[i] > angles_deg[i - 1])) {
            throw config_error("view angles must be strictly increasing");
        }
    }
}

void blur_rows(Matrix& m, double sigma_rows) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma_rows));
    if (radius < 1) return;
    std::vector<double> kernel(2 * radius + 1);
    for (int k = -radius; k <= radius; ++k) {
        kernel[k + radius] = std::exp(-0.5 * (k / sigma_rows) * (k / sigma_rows));
    }
    const int rows = static_cast<int>(m.rows());
    Vector col(rows);
    for (int j = 0; j < m.cols(); ++j) {
        for (int i = 0; i < rows; ++i) {
            double acc = 0.0, wsum = 0.0;
            const int klo = std::max(-radius, -i);
            const int khi = std::min(radius, rows - 1 - i);
            for (int k = klo; k <= khi; ++k) {
                const double w = kernel[k + radius];
                acc += w * m(i + k, j);
                wsum += w;
            }
            col[i] = acc / wsum;
        }
        m.col(j) = col;
    }
}

} // namespace

void DetectorArray::validate() const {
    if (n_detectors <= 0) throw config_error("detector count must be positive");
    if (pitch <= 0) throw config_error("detector pitch must be positive");
    if (face_width <= 0 || face_height <= 0) throw config_error("detector face must have positive area");
    if (standoff_radius <= 0) throw config_error("detector standoff must be positive");
}

void Sinogram::validate() const {
    if (values.rows() < 1 || values.cols() < 1) throw config_error("sinogram is empty");
    if (static_cast<long>(angles_deg.size()) != values.cols()) {
        throw config_error("sinogram angle list does not match its column count");
    }
    validate_angles(angles_deg);
}

double solid_angle_fraction(const Eigen::Vector3d& voxel_center, int detector,
                            const DetectorArray& array) {
    if (detector < 0 || detector >= array.n_detectors) throw config_error("detector index out of range");
    const double d = std::abs(array.standoff_radius - voxel_center.x());
    if (d < 1e-12) throw config_error("voxel lies on the detector face plane");
    const double pu = voxel_center.y() - array.detector_y(detector);
    const double pv = voxel_center.z();
    const double a1 = 0.5 * array.face_width - pu;
    const double a2 = 0.5 * array.face_width + pu;
    const double b1 = 0.5 * array.face_height - pv;
    const double b2 = 0.5 * array.face_height + pv;
    const auto corner = [d](double a, double b) {
        return std::atan(a * b / (d * std::sqrt(a * a + b * b + d * d)));
    };
    const double omega = (corner(a1, b1) + corner(a1, b2)) + (corner(a2, b1) + corner(a2, b2));
    return omega / (4.0 * M_PI);
}

double detector_response(int detector, long pixel, const GridSpec& grid, const DetectorArray& array) {
    grid.validate();
    array.validate();
    if (pixel < 0 || pixel >= grid.pixel_count()) throw config_error("pixel index out of range");
    return detector_pixel_response(detector, pixel, grid, array).r;
}

double correction_factor(int detector, long pixel, const GridSpec& grid, const DetectorArray& array) {
    grid.validate();
    array.validate();
    if (pixel < 0 || pixel >= grid.pixel_count()) throw config_error("pixel index out of range");
    return detector_pixel_response(detector, pixel, grid, array).c;
}

double line_integral(int detector, long pixel, const MaterialMap& mu_map, const DetectorArray& array) {
    const GridSpec& grid = mu_map.grid;
    if (pixel < 0 || pixel >= grid.pixel_count()) throw config_error("pixel index out of range");
    if (detector < 0 || detector >= array.n_detectors) throw config_error("detector index out of range");
    const Eigen::Vector2d s = grid.pixel_center(pixel);
    const double ex = array.standoff_radius;
    const double ey = array.detector_y(detector);
    const double dx_ = ex - s.x(), dy_ = ey - s.y();
    const double len = std::sqrt(dx_ * dx_ + dy_ * dy_);
    if (len == 0.0) return 0.0;
    const TraceGrid tgrid{mu_map.mu.data(), grid.pixels_per_axis(), -0.5 * grid.span_xy(), grid.dx};
    return trace_depth(tgrid, s.x(), s.y(), dx_ / len, dy_ / len, len);
}

ResponseTables make_response_tables(const GridSpec& grid, const DetectorArray& array, int threads) {
    grid.validate();
    array.validate();
    if (array.standoff_radius <= 0.5 * grid.span_xy()) {
        throw config_error("detector standoff must exceed the grid half-span");
    }
    ResponseTables tables;
    tables.grid = grid;
    tables.n_detectors = array.n_detectors;
    const long n_pix = grid.pixel_count();
    tables.r.resize(array.n_detectors, n_pix);
    tables.c.resize(array.n_detectors, n_pix);
    parallel_for_chunks(n_pix, threads, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t p = begin; p < end; ++p) {
            for (int i = 0; i < array.n_detectors; ++i) {
                const ResponsePair rc = detector_pixel_response(i, p, grid, array);
                tables.r(i, p) = rc.r;
                tables.c(i, p) = rc.c;
            }
        }
    });
    return tables;
}

Vector view_flux(const MaterialMap& material, const ResponseTables& tables, const DetectorArray& array) {
    return view_flux_impl(material, tables, array, 1);
}

Sinogram full_sinogram(const AssemblySpec& spec, const GridSpec& grid, const DetectorArray& array,
                       const std::vector<double>& angles_deg, int threads) {
    spec.validate();
    grid.validate();
    array.validate();
    validate_angles(angles_deg);
    if (array.standoff_radius <= spec.circumscribed_radius()) {
        throw config_error("detector standoff must exceed the assembly circumscribed radius");
    }
    const ResponseTables tables = make_response_tables(grid, array, threads);
    Sinogram s;
    s.values = assemble_sinogram(spec, grid, array, angles_deg, tables, 1, threads);
    s.angles_deg = angles_deg;
    s.normalized = false;
    return s;
}

Sinogram min_max_normalize(const Sinogram& s) {
    const double lo = s.values.minCoeff();
    const double hi = s.values.maxCoeff();
    if (!(hi > lo)) throw numeric_error("constant sinogram cannot be min-max normalized");
    Sinogram out;
    out.values = (s.values.array() - lo) / (hi - lo);
    out.angles_deg = s.angles_deg;
    out.normalized = true;
    return out;
}

std::vector<double> degree_angles(int n_views) {
    if (n_views < 1 || n_views > 360) throw config_error("view count must lie in [1, 360]");
    std::vector<double> angles(n_views);
    for (int i = 0; i < n_views; ++i) angles[i] = i;
    return angles;
}

Sinogram synthesize_ground_truth(const AssemblySpec& spec, const DetectorArray& array,
                                 const SynthFidelity& fidelity, std::uint64_t seed, int threads) {
    spec.validate();
    array.validate();
    if (fidelity.count_scale <= 0) throw config_error("count scale must be positive");
    if (fidelity.dx > 0.25) throw config_error("ground-truth fidelity requires dx <= 0.25 mm");
    if (fidelity.face_subsample < 1) throw config_error("face subsample factor must be >= 1");
    if (fidelity.blur_sigma_rows < 0) throw config_error("blur width must be non-negative");

    const GridSpec grid = GridSpec::for_assembly(spec, fidelity.dx, fidelity.dz, fidelity.half_extent_z);
    const ResponseTables tables = make_response_tables(grid, array, threads);
    const std::vector<double> angles = degree_angles(360);

    Sinogram raw;
    raw.values = assemble_sinogram(spec, grid, array, angles, tables, fidelity.face_subsample, threads);
    raw.angles_deg = angles;
    Sinogram out = min_max_normalize(raw);

    if (fidelity.blur_sigma_rows > 0) blur_rows(out.values, fidelity.blur_sigma_rows);

    if (fidelity.poisson) {
        std::mt19937_64 gen(seed);
        for (long j = 0; j < out.values.cols(); ++j) {
            for (long i = 0; i < out.values.rows(); ++i) {
                const double mean = fidelity.count_scale * out.values(i, j);
                if (mean > 0.0) {
                    std::poisson_distribution<long long> dist(mean);
                    out.values(i, j) = static_cast<double>(dist(gen)) / fidelity.count_scale;
                } else {
                    out.values(i, j) = 0.0;
                }
            }
        }
    }
    return min_max_normalize(out);
}

} // namespace pget
