// SPDX-License-Identifier: MIT
#include "pget/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace pget::io {

namespace {

constexpr const char* kDtype = "float64-le";

void byteswap_doubles(std::vector<double>& data) {
    for (double& d : data) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, 8);
        bits = __builtin_bswap64(bits);
        std::memcpy(&d, &bits, 8);
    }
}

std::vector<double> to_row_major(const Matrix& m) {
    std::vector<double> flat(static_cast<std::size_t>(m.rows()) * m.cols());
    std::size_t k = 0;
    for (long i = 0; i < m.rows(); ++i) {
        for (long j = 0; j < m.cols(); ++j) flat[k++] = m(i, j);
    }
    return flat;
}

Matrix from_row_major(const std::vector<double>& flat, long rows, long cols) {
    Matrix m(rows, cols);
    std::size_t k = 0;
    for (long i = 0; i < rows; ++i) {
        for (long j = 0; j < cols; ++j) m(i, j) = flat[k++];
    }
    return m;
}

} // namespace

std::string sidecar_path(const std::string& payload_path) {
    const std::size_t slash = payload_path.find_last_of("/\\");
    const std::size_t dot = payload_path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
        return payload_path + ".meta";
    }
    return payload_path.substr(0, dot) + ".meta";
}

void save_matrix(const Matrix& m, const std::string& kind, const std::string& payload_path,
                 kv::Document extra, const std::string& provenance) {
    std::vector<double> flat = to_row_major(m);
    if constexpr (std::endian::native == std::endian::big) byteswap_doubles(flat);

    std::ofstream out(payload_path, std::ios::binary);
    if (!out) throw io_error("cannot write '" + payload_path + "'");
    out.write(reinterpret_cast<const char*>(flat.data()),
              static_cast<std::streamsize>(flat.size() * sizeof(double)));
    if (!out) throw io_error("write failed for '" + payload_path + "'");
    out.close();

    kv::Document side;
    side.set("kind", kind);
    side.set_int("rows", m.rows());
    side.set_int("cols", m.cols());
    side.set("dtype", kDtype);
    for (const auto& [k, v] : extra.entries()) side.set(k, v);
    if (!provenance.empty()) side.set("provenance", provenance);
    kv::write_file(side, sidecar_path(payload_path));
}

Matrix load_matrix(const std::string& payload_path, kv::Document* sidecar_out) {
    const kv::Document side = kv::parse_file(sidecar_path(payload_path));
    const long rows = side.get_int("rows");
    const long cols = side.get_int("cols");
    if (side.get("dtype") != kDtype) throw io_error("unsupported dtype in '" + payload_path + "'");
    if (rows < 1 || cols < 1) throw io_error("invalid dimensions in sidecar of '" + payload_path + "'");

    std::ifstream in(payload_path, std::ios::binary | std::ios::ate);
    if (!in) throw io_error("cannot open '" + payload_path + "'");
    const std::streamsize bytes = in.tellg();
    const std::size_t expected = static_cast<std::size_t>(rows) * cols * sizeof(double);
    if (static_cast<std::size_t>(bytes) != expected) {
        throw io_error("payload size of '" + payload_path + "' does not match its sidecar");
    }
    in.seekg(0);
    std::vector<double> flat(static_cast<std::size_t>(rows) * cols);
    in.read(reinterpret_cast<char*>(flat.data()), bytes);
    if (!in) throw io_error("read failed for '" + payload_path + "'");
    if constexpr (std::endian::native == std::endian::big) byteswap_doubles(flat);
    if (sidecar_out) *sidecar_out = side;
    return from_row_major(flat, rows, cols);
}

void save_sinogram(const Sinogram& s, const std::string& payload_path, const std::string& provenance) {
    kv::Document extra;
    extra.set_doubles("angles", s.angles_deg);
    extra.set_bool("normalized", s.normalized);
    save_matrix(s.values, "sinogram", payload_path, extra, provenance);
}

Sinogram load_sinogram(const std::string& payload_path) {
    kv::Document side;
    Sinogram s;
    s.values = load_matrix(payload_path, &side);
    s.angles_deg = side.has("angles") ? side.get_doubles("angles") : degree_angles(s.n_views());
    s.normalized = side.get_bool_or("normalized", false);
    s.validate();
    return s;
}

void save_basis(const PodBasis& basis, const std::string& payload_path, const std::string& provenance) {
    kv::Document extra;
    std::vector<double> sv(basis.singular_values.data(),
                           basis.singular_values.data() + basis.singular_values.size());
    extra.set_doubles("singular_values", sv);
    extra.set_int("k", basis.k);
    save_matrix(basis.modes, "basis", payload_path, extra, provenance);
}

PodBasis load_basis(const std::string& payload_path) {
    kv::Document side;
    PodBasis basis;
    basis.modes = load_matrix(payload_path, &side);
    const std::vector<double> sv = side.get_doubles("singular_values");
    basis.singular_values = Eigen::Map<const Vector>(sv.data(), static_cast<long>(sv.size()));
    basis.normalized_spectrum = basis.singular_values / basis.singular_values.sum();
    basis.k = static_cast<int>(side.get_int("k"));
    return basis;
}

void save_coefficients(const CoefficientMatrix& coeffs, const std::string& payload_path,
                       const std::string& provenance) {
    kv::Document extra;
    extra.set_doubles("angles", coeffs.angles_deg);
    extra.set("source", to_string(coeffs.source));
    save_matrix(coeffs.values, "coefficients", payload_path, extra, provenance);
}

CoefficientMatrix load_coefficients(const std::string& payload_path) {
    kv::Document side;
    CoefficientMatrix coeffs;
    coeffs.values = load_matrix(payload_path, &side);
    coeffs.angles_deg = side.get_doubles("angles");
    const std::string source = side.get_or("source", "sampled-projection");
    if (source == "physics-aware") {
        coeffs.source = CoefficientSource::physics_aware;
    } else if (source == "interpolated-linear") {
        coeffs.source = CoefficientSource::interpolated_linear;
    } else if (source == "interpolated-rbf") {
        coeffs.source = CoefficientSource::interpolated_rbf;
    } else {
        coeffs.source = CoefficientSource::sampled_projection;
    }
    return coeffs;
}

void save_image(const ReconImage& image, const std::string& payload_path, const std::string& provenance) {
    kv::Document extra;
    extra.set_double("pixel_size", image.pixel_size);
    save_matrix(image.pixels, "image", payload_path, extra, provenance);
}

ReconImage load_image(const std::string& payload_path) {
    kv::Document side;
    ReconImage image;
    image.pixels = load_matrix(payload_path, &side);
    image.pixel_size = side.get_double_or("pixel_size", 1.0);
    return image;
}

void save_error_map(const ErrorReport& report, const std::string& payload_path,
                    const std::string& provenance) {
    // NaN outside the mask doubles as the mask encoding.
    save_matrix(report.error_map, "error-map", payload_path, {}, provenance);
}

ErrorReport load_error_map(const std::string& payload_path) {
    ErrorReport report;
    report.error_map = load_matrix(payload_path);
    report.mask = report.error_map.array().unaryExpr([](double v) { return !std::isnan(v); });
    std::vector<double> errors;
    for (long j = 0; j < report.error_map.cols(); ++j) {
        for (long i = 0; i < report.error_map.rows(); ++i) {
            if (report.mask(i, j)) errors.push_back(report.error_map(i, j));
        }
    }
    std::sort(errors.begin(), errors.end());
    report.curve.clear();
    for (int t = 0; t <= 100; ++t) {
        const double th = t * 0.01;
        const auto it = std::upper_bound(errors.begin(), errors.end(), th);
        report.curve.emplace_back(
            th, errors.empty() ? 0.0 : static_cast<double>(it - errors.begin()) / errors.size());
    }
    return report;
}

void export_csv(const Matrix& m, const std::string& path, char delimiter) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path + "'");
    for (long i = 0; i < m.rows(); ++i) {
        for (long j = 0; j < m.cols(); ++j) {
            if (j) out << delimiter;
            out << kv::format_double(m(i, j));
        }
        out << '\n';
    }
    if (!out) throw io_error("write failed for '" + path + "'");
}

Matrix import_csv_matrix(const std::string& path, char delimiter, int skip_rows) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno <= skip_rows) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        int col = 0;
        while (std::getline(ls, cell, delimiter)) {
            ++col;
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
                if (used != cell.size()) throw std::invalid_argument(cell);
                row.push_back(v);
            } catch (const std::exception&) {
                throw io_error(path + ": non-numeric cell at row " + std::to_string(lineno) +
                               ", column " + std::to_string(col));
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw io_error(path + ": ragged row at line " + std::to_string(lineno) + " (expected " +
                           std::to_string(rows.front().size()) + " cells, got " +
                           std::to_string(row.size()) + ")");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw io_error(path + ": no numeric rows");
    Matrix m(static_cast<long>(rows.size()), static_cast<long>(rows.front().size()));
    for (long i = 0; i < m.rows(); ++i) {
        for (long j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return m;
}

Sinogram import_csv_sinogram(const std::string& path, char delimiter, int skip_rows) {
    Sinogram s;
    s.values = import_csv_matrix(path, delimiter, skip_rows);
    s.angles_deg = degree_angles(s.n_views());
    s.normalized = false;
    if (s.values.rows() == 1 && s.values.cols() == 1) {
        detail::note("imported a degenerate 1x1 sinogram from '" + path + "'");
    }
    s.validate();
    return s;
}

Sinogram load_sinogram_any(const std::string& path) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".bin") return load_sinogram(path);
    return import_csv_sinogram(path);
}

} // namespace pget::io
