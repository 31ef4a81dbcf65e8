// SPDX-License-Identifier: MIT
#pragma once

#include <utility>
#include <vector>

#include "pget/common.hpp"
#include "pget/forward.hpp"

namespace pget {

/// Square reconstructed cross-section; side length equals the sinogram's
/// detector-row count, row 0 at +y.
struct ReconImage {
    Matrix pixels; // M x M
    double pixel_size = 1.0; // mm
};

/// Masked pixel-wise relative error with its cumulative pixel-fraction curve.
/// error_map holds NaN outside the mask.
struct ErrorReport {
    Matrix error_map;
    MaskArray mask;
    std::vector<std::pair<double, double>> curve; // (threshold, pixel fraction)
};

/// Ramp-filtered backprojection: each view is zero-padded to the next power
/// of two >= 2N, filtered in the frequency domain, backprojected with linear
/// interpolation along the detector coordinate, and the image is scaled by
/// pi / (2 * n_views).
ReconImage fbp(const Sinogram& sinogram, double pixel_size = 1.0, int threads = 0);

/// Mask the truth at 15% of its maximum, then take |approx - truth| / |truth|
/// on the masked pixels.
ErrorReport error_map(const ReconImage& approx, const ReconImage& truth);

/// Fraction of masked pixels with error <= threshold.
double pixel_fraction(const ErrorReport& report, double threshold);

/// Per-pixel median across reports sharing one mask; the curve is recomputed
/// from the median map.
ErrorReport median_error_map(const std::vector<ErrorReport>& reports);

/// 8-bit grayscale heatmap with linear min-max tone mapping; NaNs map to 0.
/// Writes `path` (binary PGM) plus a sidecar recording the tone mapping.
void write_pgm_heatmap(const Matrix& image, const std::string& path);

} // namespace pget
