// SPDX-License-Identifier: MIT
#pragma once

#include <string>

#include "pget/common.hpp"
#include "pget/forward.hpp"
#include "pget/kv.hpp"
#include "pget/recon.hpp"
#include "pget/rom.hpp"

namespace pget::io {

/// On-disk artifact: `<base>.bin` holds row-major 64-bit little-endian floats,
/// `<base>.meta` is a key-value sidecar (kind, rows, cols, dtype, extras).
/// save + load round-trips bit for bit.

void save_matrix(const Matrix& m, const std::string& kind, const std::string& payload_path,
                 kv::Document extra = {}, const std::string& provenance = "");
Matrix load_matrix(const std::string& payload_path, kv::Document* sidecar_out = nullptr);

void save_sinogram(const Sinogram& s, const std::string& payload_path,
                   const std::string& provenance = "");
Sinogram load_sinogram(const std::string& payload_path);

void save_basis(const PodBasis& basis, const std::string& payload_path,
                const std::string& provenance = "");
PodBasis load_basis(const std::string& payload_path);

void save_coefficients(const CoefficientMatrix& coeffs, const std::string& payload_path,
                       const std::string& provenance = "");
CoefficientMatrix load_coefficients(const std::string& payload_path);

void save_image(const ReconImage& image, const std::string& payload_path,
                const std::string& provenance = "");
ReconImage load_image(const std::string& payload_path);

void save_error_map(const ErrorReport& report, const std::string& payload_path,
                    const std::string& provenance = "");
ErrorReport load_error_map(const std::string& payload_path);

/// CSV at 17 significant digits (re-import agrees to the last bit in practice).
void export_csv(const Matrix& m, const std::string& path, char delimiter = ',');
Matrix import_csv_matrix(const std::string& path, char delimiter = ',', int skip_rows = 0);

/// Rectangular numeric table -> sinogram; angles default to 0..cols-1 degrees.
Sinogram import_csv_sinogram(const std::string& path, char delimiter = ',', int skip_rows = 0);

/// Loads .bin (binary+sidecar) or anything else as CSV.
Sinogram load_sinogram_any(const std::string& path);

std::string sidecar_path(const std::string& payload_path);

} // namespace pget::io
