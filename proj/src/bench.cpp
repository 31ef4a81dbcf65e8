// SPDX-License-Identifier: MIT
#include "pget/bench.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "pget/io.hpp"
#include "pget/parallel.hpp"
#include "pget/rng.hpp"

namespace pget::bench {

const std::vector<Method>& all_methods() {
    static const std::vector<Method> methods = {Method::papod, Method::realtime, Method::podi_linear,
                                                Method::podi_rbf, Method::data_linear};
    return methods;
}

std::string to_string(Method m) {
    switch (m) {
        case Method::papod: return "pa-pod";
        case Method::realtime: return "realtime";
        case Method::podi_linear: return "podi-linear";
        case Method::podi_rbf: return "podi-rbf";
        case Method::data_linear: return "data-linear";
    }
    return "unknown";
}

void ExperimentConfig::validate() const {
    assembly.validate();
    realtime_grid.validate();
    array.validate();
    if (trials < 1) throw config_error("trial count must be at least 1");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw config_error("threshold must lie in [0, 1]");
    if (n_s < 1 || n_s > 360) throw config_error("n_s must lie in [1, 360]");
    for (int v : n_s_values) {
        if (v < 1 || v > 360) throw config_error("n_s sweep values must lie in [1, 360]");
    }
    if (k_policy == KPolicy::fixed && k_fixed < 1) throw config_error("fixed mode count must be positive");
    if (k_policy == KPolicy::variance_target && !(variance_target > 0.0 && variance_target <= 1.0)) {
        throw config_error("variance target must lie in (0, 1]");
    }
}

int ExperimentConfig::modes_for(int n_s_used, const PodBasis& basis) const {
    int k = basis.k;
    switch (k_policy) {
        case KPolicy::equal_to_ns: k = std::min(n_s_used, basis.k); break;
        case KPolicy::fixed: k = std::min(k_fixed, basis.k); break;
        case KPolicy::variance_target:
            k = std::min(std::max(1, modes_for_variance(basis, variance_target)), basis.k);
            break;
    }
    return k;
}

std::uint64_t trial_seed(std::uint64_t master, int trial) {
    return rng::derive_seed(master, static_cast<std::uint64_t>(trial));
}

ExperimentInputs prepare_inputs(const ExperimentConfig& config) {
    config.validate();
    ExperimentInputs inputs;
    if (config.source == GroundTruthSource::file) {
        std::ifstream probe(config.truth_path);
        if (!probe) {
            throw io_error("ground-truth sinogram '" + config.truth_path +
                           "' is not readable; pass a measured sinogram or switch to the synthetic source");
        }
        probe.close();
        inputs.truth = io::load_sinogram_any(config.truth_path);
        if (inputs.truth.n_detectors() != config.array.n_detectors) {
            throw config_error("ground-truth row count " + std::to_string(inputs.truth.n_detectors()) +
                               " does not match the detector array");
        }
    } else {
        inputs.truth = synthesize_ground_truth(config.assembly, config.array, config.fidelity,
                                               config.seed, config.threads);
    }
    if (!inputs.truth.normalized) inputs.truth = min_max_normalize(inputs.truth);

    Sinogram realtime = full_sinogram(config.assembly, config.realtime_grid, config.array,
                                      inputs.truth.angles_deg, config.threads);
    inputs.realtime = min_max_normalize(realtime);
    return inputs;
}

namespace {

struct TrialReports {
    std::map<Method, ErrorReport> reports;
    std::map<Method, double> fractions;
};

/// Run every method for one sampled database and report against F(truth).
TrialReports evaluate_trial(const ExperimentInputs& inputs, const ExperimentConfig& config, int n_s,
                            std::uint64_t seed, const ReconImage& truth_recon,
                            const ErrorReport& realtime_report, bool papod_only) {
    const SnapshotDatabase db = sample_views(inputs.truth, n_s, seed);
    PodBasis basis = build_basis(db, std::min<long>(db.matrix.rows(), db.matrix.cols()));
    const int k = config.modes_for(n_s, basis);
    if (k < basis.k) basis = truncated(basis, k);

    TrialReports out;
    const auto add = [&](Method m, const Sinogram& s) {
        const ReconImage recon = fbp(s, 1.0, 1);
        ErrorReport report = error_map(recon, truth_recon);
        out.fractions[m] = pixel_fraction(report, config.threshold);
        out.reports.emplace(m, std::move(report));
    };

    add(Method::papod, reconstruct(basis, papod_coefficients(basis, inputs.realtime, db)));
    if (papod_only) return out;

    out.fractions[Method::realtime] = pixel_fraction(realtime_report, config.threshold);
    add(Method::podi_linear,
        reconstruct(basis, podi_coefficients(basis, db, inputs.truth.angles_deg, InterpScheme::linear)));
    add(Method::podi_rbf,
        reconstruct(basis, podi_coefficients(basis, db, inputs.truth.angles_deg, InterpScheme::rbf)));
    add(Method::data_linear, linear_data_interpolation(db, inputs.truth.angles_deg));
    return out;
}

} // namespace

ComparisonResult run_comparison(const ExperimentInputs& inputs, const ExperimentConfig& config) {
    config.validate();
    inputs.truth.validate();
    inputs.realtime.validate();

    ComparisonResult result;
    result.truth_recon = fbp(inputs.truth, 1.0, config.threads);
    const ErrorReport realtime_report =
        error_map(fbp(inputs.realtime, 1.0, config.threads), result.truth_recon);

    result.trials.resize(config.trials);
    std::vector<TrialReports> trial_reports(config.trials);
    parallel_for_chunks(config.trials, config.threads, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t t = begin; t < end; ++t) {
            const std::uint64_t seed = trial_seed(config.seed, static_cast<int>(t));
            trial_reports[t] = evaluate_trial(inputs, config, config.n_s, seed, result.truth_recon,
                                              realtime_report, false);
            TrialResult& tr = result.trials[t];
            tr.trial = static_cast<int>(t);
            tr.n_s = config.n_s;
            tr.seed = seed;
            tr.fraction = trial_reports[t].fractions;
        }
    });

    for (Method m : all_methods()) {
        if (m == Method::realtime) {
            result.median_reports.emplace(m, realtime_report);
        } else {
            std::vector<ErrorReport> stack;
            stack.reserve(config.trials);
            for (auto& tr : trial_reports) stack.push_back(std::move(tr.reports.at(m)));
            result.median_reports.emplace(m, median_error_map(stack));
        }
        result.median_fraction[m] = pixel_fraction(result.median_reports.at(m), config.threshold);
    }
    return result;
}

std::vector<ConvergencePoint> run_convergence(const ExperimentInputs& inputs,
                                              const ExperimentConfig& config) {
    config.validate();
    const ReconImage truth_recon = fbp(inputs.truth, 1.0, config.threads);
    const ErrorReport realtime_report =
        error_map(fbp(inputs.realtime, 1.0, config.threads), truth_recon);

    std::vector<ConvergencePoint> points;
    for (int n_s : config.n_s_values) {
        std::vector<double> fractions(config.trials);
        parallel_for_chunks(config.trials, config.threads, [&](std::int64_t begin, std::int64_t end) {
            for (std::int64_t t = begin; t < end; ++t) {
                const std::uint64_t seed = trial_seed(config.seed, static_cast<int>(t));
                const TrialReports reports = evaluate_trial(inputs, config, n_s, seed, truth_recon,
                                                            realtime_report, true);
                fractions[t] = reports.fractions.at(Method::papod);
            }
        });
        ConvergencePoint p;
        p.n_s = n_s;
        for (double f : fractions) p.mean += f;
        p.mean /= config.trials;
        if (config.trials > 1) {
            double ss = 0.0;
            for (double f : fractions) ss += (f - p.mean) * (f - p.mean);
            p.stddev = std::sqrt(ss / (config.trials - 1));
        }
        points.push_back(p);
    }
    return points;
}

SpectrumReport run_spectrum(const Sinogram& ground_truth) {
    ground_truth.validate();
    SnapshotDatabase db;
    db.matrix = ground_truth.values;
    db.sampled_angles = ground_truth.angles_deg;
    db.sampled_indices.resize(ground_truth.n_views());
    for (int i = 0; i < ground_truth.n_views(); ++i) db.sampled_indices[i] = i;

    const PodBasis basis =
        build_basis(db, static_cast<int>(std::min(db.matrix.rows(), db.matrix.cols())));
    SpectrumReport report;
    report.singular_values = basis.singular_values;
    report.normalized_spectrum = basis.normalized_spectrum;
    report.cumulative_variance.resize(basis.singular_values.size());
    for (int j = 0; j < basis.singular_values.size(); ++j) {
        report.cumulative_variance[j] = information_variance(basis, j + 1);
    }
    report.modes_80 = modes_for_variance(basis, 0.80);
    report.modes_90 = modes_for_variance(basis, 0.90);
    report.modes_95 = modes_for_variance(basis, 0.95);
    return report;
}

void write_trials_csv(const std::vector<TrialResult>& trials, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path + "'");
    out << "trial,n_s,seed";
    for (Method m : all_methods()) out << ',' << to_string(m);
    out << '\n';
    for (const auto& tr : trials) {
        out << tr.trial << ',' << tr.n_s << ',' << tr.seed;
        for (Method m : all_methods()) {
            out << ',';
            const auto it = tr.fraction.find(m);
            if (it != tr.fraction.end()) out << kv::format_double(it->second);
        }
        out << '\n';
    }
    if (!out) throw io_error("write failed for '" + path + "'");
}

std::vector<TrialResult> read_trials_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw io_error(path + ": empty trials table");
    std::vector<TrialResult> trials;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        TrialResult tr;
        std::getline(ls, cell, ',');
        tr.trial = std::stoi(cell);
        std::getline(ls, cell, ',');
        tr.n_s = std::stoi(cell);
        std::getline(ls, cell, ',');
        tr.seed = std::stoull(cell);
        for (Method m : all_methods()) {
            if (!std::getline(ls, cell, ',')) break;
            if (!cell.empty()) tr.fraction[m] = std::stod(cell);
        }
        trials.push_back(tr);
    }
    return trials;
}

void write_convergence_csv(const std::vector<ConvergencePoint>& points, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path + "'");
    out << "n_s,mean,std\n";
    for (const auto& p : points) {
        out << p.n_s << ',' << kv::format_double(p.mean) << ',' << kv::format_double(p.stddev) << '\n';
    }
}

void write_spectrum_csv(const SpectrumReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path + "'");
    out << "mode,singular_value,normalized,cumulative_variance\n";
    for (int j = 0; j < report.singular_values.size(); ++j) {
        out << j << ',' << kv::format_double(report.singular_values[j]) << ','
            << kv::format_double(report.normalized_spectrum[j]) << ','
            << kv::format_double(report.cumulative_variance[j]) << '\n';
    }
}

void write_curve_csv(const ErrorReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path + "'");
    out << "threshold,pixel_fraction\n";
    for (const auto& [th, frac] : report.curve) {
        out << kv::format_double(th) << ',' << kv::format_double(frac) << '\n';
    }
}

} // namespace pget::bench
