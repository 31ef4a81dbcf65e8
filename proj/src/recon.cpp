// SPDX-License-Identifier: MIT
#include "pget/recon.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>

#include "pget/kv.hpp"
#include "pget/parallel.hpp"

namespace pget {

namespace {

/// In-place iterative radix-2 FFT; size must be a power of two.
void fft_pow2(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const std::complex<double> u = a[i + j];
                const std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        for (auto& x : a) x /= static_cast<double>(n);
    }
}

/// Discrete ramp filter in the frequency domain, built from the band-limited
/// real-space kernel (value 1/4 at zero lag, -1/(pi k)^2 at odd lags) to avoid
/// the DC bias of the naive |f| ramp.
std::vector<double> ramp_filter(int size) {
    std::vector<std::complex<double>> kernel(size, 0.0);
    kernel[0] = 0.25;
    for (int i = 1; i < size; i += 2) {
        const int m = std::min(i, size - i);
        kernel[i] = -1.0 / (M_PI * m * M_PI * m);
    }
    fft_pow2(kernel, false);
    std::vector<double> filter(size);
    for (int i = 0; i < size; ++i) filter[i] = 2.0 * kernel[i].real();
    return filter;
}

bool is_full_degree_grid(const std::vector<double>& angles) {
    if (angles.size() != 360) return false;
    for (int i = 0; i < 360; ++i) {
        if (angles[i] != static_cast<double>(i)) return false;
    }
    return true;
}

std::vector<double> default_thresholds() {
    std::vector<double> t(101);
    for (int i = 0; i <= 100; ++i) t[i] = i * 0.01;
    return t;
}

std::vector<std::pair<double, double>> fraction_curve(const Matrix& error_map, const MaskArray& mask) {
    std::vector<double> errors;
    errors.reserve(static_cast<std::size_t>(mask.count()));
    for (long j = 0; j < error_map.cols(); ++j) {
        for (long i = 0; i < error_map.rows(); ++i) {
            if (mask(i, j)) errors.push_back(error_map(i, j));
        }
    }
    std::sort(errors.begin(), errors.end());
    std::vector<std::pair<double, double>> curve;
    for (double th : default_thresholds()) {
        const auto it = std::upper_bound(errors.begin(), errors.end(), th);
        curve.emplace_back(th, static_cast<double>(it - errors.begin()) / errors.size());
    }
    return curve;
}

} // namespace

ReconImage fbp(const Sinogram& sinogram, double pixel_size, int threads) {
    sinogram.validate();
    const int n = sinogram.n_detectors();
    const int n_views = sinogram.n_views();
    if (n_views < 2) throw config_error("filtered backprojection needs at least two views");
    if (!is_full_degree_grid(sinogram.angles_deg)) {
        static bool flagged = false;
        if (!flagged) {
            flagged = true;
            detail::note("backprojecting a non-standard angle set (not the full 1-degree grid)");
        }
    }

    int padded = 64;
    while (padded < 2 * n) padded <<= 1;
    const std::vector<double> filter = ramp_filter(padded);

    Matrix filtered(n, n_views);
    std::vector<std::complex<double>> buf(padded);
    for (int v = 0; v < n_views; ++v) {
        std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
        for (int i = 0; i < n; ++i) buf[i] = sinogram.values(i, v);
        fft_pow2(buf, false);
        for (int i = 0; i < padded; ++i) buf[i] *= filter[i];
        fft_pow2(buf, true);
        for (int i = 0; i < n; ++i) filtered(i, v) = buf[i].real();
    }

    std::vector<double> sin_t(n_views), cos_t(n_views);
    for (int v = 0; v < n_views; ++v) {
        const double rad = sinogram.angles_deg[v] * M_PI / 180.0;
        sin_t[v] = std::sin(rad);
        cos_t[v] = std::cos(rad);
    }

    ReconImage image;
    image.pixel_size = pixel_size;
    image.pixels = Matrix::Zero(n, n);
    const double center = 0.5 * (n - 1);
    const double scale = M_PI / (2.0 * n_views);

    parallel_for_chunks(n, threads, [&](std::int64_t row_begin, std::int64_t row_end) {
        for (std::int64_t r = row_begin; r < row_end; ++r) {
            const double y = center - static_cast<double>(r);
            for (int c = 0; c < n; ++c) {
                const double x = static_cast<double>(c) - center;
                double acc = 0.0;
                for (int v = 0; v < n_views; ++v) {
                    const double pos = x * sin_t[v] + y * cos_t[v] + center;
                    const int i0 = static_cast<int>(std::floor(pos));
                    if (i0 < 0 || i0 >= n - 1) continue;
                    const double w = pos - i0;
                    acc += (1.0 - w) * filtered(i0, v) + w * filtered(i0 + 1, v);
                }
                image.pixels(r, c) = acc * scale;
            }
        }
    });
    return image;
}

ErrorReport error_map(const ReconImage& approx, const ReconImage& truth) {
    if (approx.pixels.rows() != truth.pixels.rows() || approx.pixels.cols() != truth.pixels.cols()) {
        throw config_error("error map requires images of identical dimensions");
    }
    const double peak = truth.pixels.maxCoeff();
    if (!(peak > 0.0)) throw numeric_error("truth image has no positive pixels; the mask is empty");

    ErrorReport report;
    report.mask = truth.pixels.array() > 0.15 * peak;
    report.error_map = Matrix::Constant(truth.pixels.rows(), truth.pixels.cols(),
                                        std::numeric_limits<double>::quiet_NaN());
    for (long j = 0; j < truth.pixels.cols(); ++j) {
        for (long i = 0; i < truth.pixels.rows(); ++i) {
            if (report.mask(i, j)) {
                report.error_map(i, j) =
                    std::abs((approx.pixels(i, j) - truth.pixels(i, j)) / truth.pixels(i, j));
            }
        }
    }
    report.curve = fraction_curve(report.error_map, report.mask);
    return report;
}

double pixel_fraction(const ErrorReport& report, double threshold) {
    if (threshold < 0.0) throw config_error("error threshold must be non-negative");
    const long total = report.mask.count();
    if (total == 0) throw numeric_error("pixel fraction is undefined on an empty mask");
    long within = 0;
    for (long j = 0; j < report.error_map.cols(); ++j) {
        for (long i = 0; i < report.error_map.rows(); ++i) {
            if (report.mask(i, j) && report.error_map(i, j) <= threshold) ++within;
        }
    }
    return static_cast<double>(within) / static_cast<double>(total);
}

ErrorReport median_error_map(const std::vector<ErrorReport>& reports) {
    if (reports.empty()) throw config_error("median needs at least one error report");
    for (const auto& rep : reports) {
        if ((rep.mask != reports.front().mask).any()) {
            throw config_error("median requires identical masks across reports");
        }
    }
    ErrorReport out;
    out.mask = reports.front().mask;
    out.error_map = Matrix::Constant(out.mask.rows(), out.mask.cols(),
                                     std::numeric_limits<double>::quiet_NaN());
    std::vector<double> samples(reports.size());
    for (long j = 0; j < out.mask.cols(); ++j) {
        for (long i = 0; i < out.mask.rows(); ++i) {
            if (!out.mask(i, j)) continue;
            for (std::size_t t = 0; t < reports.size(); ++t) samples[t] = reports[t].error_map(i, j);
            std::sort(samples.begin(), samples.end());
            const std::size_t half = samples.size() / 2;
            out.error_map(i, j) = samples.size() % 2 == 1
                                      ? samples[half]
                                      : 0.5 * (samples[half - 1] + samples[half]);
        }
    }
    out.curve = fraction_curve(out.error_map, out.mask);
    return out;
}

void write_pgm_heatmap(const Matrix& image, const std::string& path) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (long j = 0; j < image.cols(); ++j) {
        for (long i = 0; i < image.rows(); ++i) {
            const double v = image(i, j);
            if (std::isnan(v)) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!(hi > lo)) {
        lo = 0.0;
        hi = 1.0;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write '" + path + "'");
    out << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
    for (long i = 0; i < image.rows(); ++i) {
        for (long j = 0; j < image.cols(); ++j) {
            const double v = image(i, j);
            unsigned char byte = 0;
            if (!std::isnan(v)) {
                const double t = (v - lo) / (hi - lo);
                byte = static_cast<unsigned char>(std::clamp(t * 255.0 + 0.5, 0.0, 255.0));
            }
            out.put(static_cast<char>(byte));
        }
    }
    if (!out) throw io_error("write failed for '" + path + "'");

    kv::Document side;
    side.set("kind", "heatmap");
    side.set_int("rows", image.rows());
    side.set_int("cols", image.cols());
    side.set_double("tone_min", lo);
    side.set_double("tone_max", hi);
    const std::size_t dot = path.find_last_of('.');
    kv::write_file(side, (dot == std::string::npos ? path : path.substr(0, dot)) + ".meta");
}

} // namespace pget
