// SPDX-License-Identifier: MIT
#include "pget/rom.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "pget/rng.hpp"

namespace pget {

namespace {

/// Match each query angle to a knot index, exact within a tight tolerance.
int find_angle_index(const std::vector<double>& angles, double target) {
    for (std::size_t i = 0; i < angles.size(); ++i) {
        if (std::abs(angles[i] - target) < 1e-9) return static_cast<int>(i);
    }
    return -1;
}

double periodic_distance(double a, double b) {
    double d = std::abs(a - b);
    d = std::fmod(d, 360.0);
    return std::min(d, 360.0 - d);
}

/// Piecewise-linear interpolation of the columns of `knot_values` over the
/// knot angles, periodic with period 360. Targets that coincide with a knot
/// reproduce the knot column exactly.
Matrix periodic_linear_interp(const std::vector<double>& knot_angles, const Matrix& knot_values,
                              const std::vector<double>& targets) {
    const int m = static_cast<int>(knot_angles.size());
    if (m < 2) throw config_error("periodic interpolation needs at least two sampled angles");
    for (int i = 1; i < m; ++i) {
        if (!(knot_angles[i] > knot_angles[i - 1])) {
            throw config_error("sampled angles must be distinct and ascending");
        }
    }
    Matrix out(knot_values.rows(), static_cast<long>(targets.size()));
    for (std::size_t t = 0; t < targets.size(); ++t) {
        const double theta = targets[t];
        const int exact = find_angle_index(knot_angles, theta);
        if (exact >= 0) {
            out.col(static_cast<long>(t)) = knot_values.col(exact);
            continue;
        }
        // first knot strictly greater than theta
        const auto it = std::upper_bound(knot_angles.begin(), knot_angles.end(), theta);
        int hi = static_cast<int>(it - knot_angles.begin());
        int lo = hi - 1;
        double theta_lo, theta_hi;
        if (hi == 0) { // before the first knot: wrap the last one backwards
            lo = m - 1;
            hi = 0;
            theta_lo = knot_angles[lo] - 360.0;
            theta_hi = knot_angles[hi];
        } else if (hi == m) { // after the last knot: wrap the first one forwards
            lo = m - 1;
            hi = 0;
            theta_lo = knot_angles[lo];
            theta_hi = knot_angles[hi] + 360.0;
        } else {
            theta_lo = knot_angles[lo];
            theta_hi = knot_angles[hi];
        }
        const double w = (theta - theta_lo) / (theta_hi - theta_lo);
        out.col(static_cast<long>(t)) =
            (1.0 - w) * knot_values.col(lo) + w * knot_values.col(hi);
    }
    return out;
}

void check_targets(const std::vector<double>& targets) {
    if (targets.empty()) throw config_error("target angle list is empty");
    for (double a : targets) {
        if (!(a >= 0.0 && a < 360.0)) throw config_error("target angles must lie in [0, 360)");
    }
}

} // namespace

std::string to_string(CoefficientSource source) {
    switch (source) {
        case CoefficientSource::sampled_projection: return "sampled-projection";
        case CoefficientSource::physics_aware: return "physics-aware";
        case CoefficientSource::interpolated_linear: return "interpolated-linear";
        case CoefficientSource::interpolated_rbf: return "interpolated-rbf";
    }
    return "unknown";
}

void SnapshotDatabase::validate() const {
    if (matrix.cols() < 1) throw config_error("snapshot database is empty");
    if (static_cast<long>(sampled_angles.size()) != matrix.cols()) {
        throw config_error("database angle list does not match its column count");
    }
    for (std::size_t i = 1; i < sampled_angles.size(); ++i) {
        if (!(sampled_angles[i] > sampled_angles[i - 1])) {
            throw config_error("sampled angles must be distinct and ascending");
        }
    }
}

SnapshotDatabase sample_views(const Sinogram& sinogram, int n_s, std::uint64_t seed) {
    sinogram.validate();
    if (n_s < 1 || n_s > sinogram.n_views()) {
        throw config_error("sample count must lie in [1, n_views]");
    }
    SnapshotDatabase db;
    db.sampled_indices = rng::sample_without_replacement(sinogram.n_views(), n_s, seed);
    db.matrix.resize(sinogram.values.rows(), n_s);
    db.sampled_angles.resize(n_s);
    for (int j = 0; j < n_s; ++j) {
        db.matrix.col(j) = sinogram.values.col(db.sampled_indices[j]);
        db.sampled_angles[j] = sinogram.angles_deg[db.sampled_indices[j]];
    }
    return db;
}

PodBasis build_basis(const SnapshotDatabase& db, int k) {
    db.validate();
    const int max_k = static_cast<int>(std::min(db.matrix.rows(), db.matrix.cols()));
    if (k < 1 || k > max_k) throw config_error("mode count must lie in [1, min(N, N_s)]");

    Eigen::BDCSVD<Matrix> svd(db.matrix, Eigen::ComputeThinU);
    const Vector sv = svd.singularValues();
    const double total = sv.sum();
    if (!(total > 0.0)) throw numeric_error("snapshot database has rank zero");

    // numerical rank
    const double tol = sv[0] * std::max(db.matrix.rows(), db.matrix.cols()) *
                       std::numeric_limits<double>::epsilon();
    int rank = 0;
    while (rank < sv.size() && sv[rank] > tol) ++rank;
    if (k > rank) {
        detail::note("requested " + std::to_string(k) + " modes but the database has numerical rank " +
                     std::to_string(rank) + "; truncating");
        k = rank;
    }

    PodBasis basis;
    basis.k = k;
    basis.modes = svd.matrixU().leftCols(k);
    basis.singular_values = sv;
    basis.normalized_spectrum = sv / total;
    for (int j = 0; j < k; ++j) {
        int imax = 0;
        basis.modes.col(j).cwiseAbs().maxCoeff(&imax);
        if (basis.modes(imax, j) < 0) basis.modes.col(j) = -basis.modes.col(j);
    }
    return basis;
}

double information_variance(const PodBasis& basis, int j) {
    if (j < 0 || j > basis.singular_values.size()) throw config_error("mode index out of range");
    if (j == basis.singular_values.size()) return 1.0;
    const double total = basis.singular_values.sum();
    return basis.singular_values.head(j).sum() / total;
}

int modes_for_variance(const PodBasis& basis, double target) {
    if (!(target >= 0.0 && target <= 1.0)) throw config_error("variance target must lie in [0, 1]");
    for (int j = 0; j <= basis.singular_values.size(); ++j) {
        if (information_variance(basis, j) >= target) return j;
    }
    return static_cast<int>(basis.singular_values.size());
}

PodBasis truncated(const PodBasis& basis, int k) {
    if (k < 1 || k > basis.k) throw config_error("truncation count must lie in [1, k]");
    PodBasis out;
    out.modes = basis.modes.leftCols(k);
    out.singular_values = basis.singular_values;
    out.normalized_spectrum = basis.normalized_spectrum;
    out.k = k;
    return out;
}

CoefficientMatrix sampled_projection(const PodBasis& basis, const SnapshotDatabase& db) {
    db.validate();
    if (basis.modes.rows() != db.matrix.rows()) throw config_error("basis/database row mismatch");
    CoefficientMatrix out;
    out.values = basis.modes.transpose() * db.matrix;
    out.source = CoefficientSource::sampled_projection;
    out.angles_deg = db.sampled_angles;
    return out;
}

CoefficientMatrix papod_coefficients(const PodBasis& basis, const Sinogram& realtime,
                                     const SnapshotDatabase& db) {
    realtime.validate();
    db.validate();
    if (basis.modes.rows() != realtime.values.rows() || basis.modes.rows() != db.matrix.rows()) {
        throw config_error("basis, real-time sinogram and database row counts disagree");
    }
    std::vector<int> sample_cols(db.sampled_angles.size());
    for (std::size_t n = 0; n < db.sampled_angles.size(); ++n) {
        const int idx = find_angle_index(realtime.angles_deg, db.sampled_angles[n]);
        if (idx < 0) {
            throw config_error("real-time sinogram does not cover sampled angle " +
                               std::to_string(db.sampled_angles[n]));
        }
        sample_cols[n] = idx;
    }

    CoefficientMatrix out;
    out.values = basis.modes.transpose() * realtime.values; // k x n_views
    out.source = CoefficientSource::physics_aware;
    out.angles_deg = realtime.angles_deg;

    const Matrix sampled = basis.modes.transpose() * db.matrix; // k x N_s
    for (int i = 0; i < out.values.rows(); ++i) {
        double num = 0.0, den = 0.0;
        for (std::size_t n = 0; n < sample_cols.size(); ++n) {
            const double proxy = out.values(i, sample_cols[n]);
            num += proxy * sampled(i, static_cast<long>(n));
            den += proxy * proxy;
        }
        const double scale = den > 0.0 ? num / den : 1.0;
        out.values.row(i) *= scale;
    }
    return out;
}

Sinogram reconstruct(const PodBasis& basis, const CoefficientMatrix& coeffs) {
    if (coeffs.values.rows() != basis.modes.cols()) {
        throw config_error("coefficient row count does not match the basis mode count");
    }
    if (static_cast<long>(coeffs.angles_deg.size()) != coeffs.values.cols()) {
        throw config_error("coefficient angle list does not match its column count");
    }
    Sinogram s;
    s.values = basis.modes * coeffs.values;
    s.angles_deg = coeffs.angles_deg;
    s.normalized = false;
    return s;
}

CoefficientMatrix podi_coefficients(const PodBasis& basis, const SnapshotDatabase& db,
                                    const std::vector<double>& target_angles, InterpScheme scheme) {
    db.validate();
    check_targets(target_angles);
    if (db.n_samples() < 2) throw config_error("PODI needs at least two sampled views");
    const CoefficientMatrix sampled = sampled_projection(basis, db);

    CoefficientMatrix out;
    out.angles_deg = target_angles;
    if (scheme == InterpScheme::linear) {
        out.source = CoefficientSource::interpolated_linear;
        out.values = periodic_linear_interp(db.sampled_angles, sampled.values, target_angles);
        return out;
    }

    // Gaussian radial basis functions over the periodic angular distance,
    // shape parameter equal to the mean angular gap, small ridge for stability.
    out.source = CoefficientSource::interpolated_rbf;
    const int m = db.n_samples();
    const double h = 360.0 / m;
    Matrix kernel(m, m);
    for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
            const double d = periodic_distance(db.sampled_angles[a], db.sampled_angles[b]) / h;
            kernel(a, b) = std::exp(-d * d);
        }
    }
    kernel.diagonal().array() += 1e-8;
    const Eigen::LDLT<Matrix> solver(kernel);
    if (solver.info() != Eigen::Success) throw numeric_error("RBF kernel factorization failed");
    const Matrix weights = solver.solve(sampled.values.transpose()); // m x k

    Matrix eval(static_cast<long>(target_angles.size()), m);
    for (std::size_t t = 0; t < target_angles.size(); ++t) {
        for (int b = 0; b < m; ++b) {
            const double d = periodic_distance(target_angles[t], db.sampled_angles[b]) / h;
            eval(static_cast<long>(t), b) = std::exp(-d * d);
        }
    }
    out.values = (eval * weights).transpose(); // k x n_targets
    return out;
}

Sinogram linear_data_interpolation(const SnapshotDatabase& db,
                                   const std::vector<double>& target_angles) {
    db.validate();
    check_targets(target_angles);
    if (db.n_samples() < 2) throw config_error("data interpolation needs at least two sampled views");
    Sinogram s;
    s.values = periodic_linear_interp(db.sampled_angles, db.matrix, target_angles);
    s.angles_deg = target_angles;
    s.normalized = false;
    return s;
}

} // namespace pget
