// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pget/forward.hpp"
#include "pget/recon.hpp"
#include "pget/rom.hpp"

namespace pget::bench {

enum class Method { papod, realtime, podi_linear, podi_rbf, data_linear };
const std::vector<Method>& all_methods();
std::string to_string(Method m);

enum class GroundTruthSource { file, synthetic };
enum class KPolicy { equal_to_ns, fixed, variance_target };

struct ExperimentConfig {
    GroundTruthSource source = GroundTruthSource::synthetic;
    std::string truth_path; // used when source == file

    AssemblySpec assembly = AssemblySpec::pwr_10x10_3x3gap();
    GridSpec realtime_grid = GridSpec::for_assembly(assembly, 0.5);
    DetectorArray array;
    SynthFidelity fidelity;

    int n_s = 60; // database size for single-size experiments
    std::vector<int> n_s_values = {30, 40, 50, 60, 70, 80, 90, 100, 110, 120};
    int trials = 100;
    std::uint64_t seed = 42;
    double threshold = 0.10;
    KPolicy k_policy = KPolicy::equal_to_ns;
    int k_fixed = 60;
    double variance_target = 0.95;
    int threads = 0;

    void validate() const;
    int modes_for(int n_s, const PodBasis& basis) const;
};

/// Ground truth plus real-time proxy, both min-max normalized over the same
/// angle grid.
struct ExperimentInputs {
    Sinogram truth;
    Sinogram realtime;
};

/// Load or synthesize the ground truth and evaluate the real-time model.
ExperimentInputs prepare_inputs(const ExperimentConfig& config);

struct TrialResult {
    int trial = 0;
    int n_s = 0;
    std::uint64_t seed = 0;
    std::map<Method, double> fraction; // pixel fraction at config.threshold
};

struct ComparisonResult {
    std::vector<TrialResult> trials;
    std::map<Method, ErrorReport> median_reports;
    std::map<Method, double> median_fraction; // from the median maps
    ReconImage truth_recon;
};

/// The headline experiment: repeat the view sampling, run every method,
/// collect per-trial pixel fractions and the per-pixel median error maps.
ComparisonResult run_comparison(const ExperimentInputs& inputs, const ExperimentConfig& config);

struct ConvergencePoint {
    int n_s = 0;
    double mean = 0.0;
    double stddev = 0.0;
};

/// Sweep n_s with k = n_s, tracking the physics-aware pixel fraction.
std::vector<ConvergencePoint> run_convergence(const ExperimentInputs& inputs,
                                              const ExperimentConfig& config);

struct SpectrumReport {
    Vector singular_values;
    Vector normalized_spectrum;
    Vector cumulative_variance;
    int modes_80 = 0;
    int modes_90 = 0;
    int modes_95 = 0;
};

SpectrumReport run_spectrum(const Sinogram& ground_truth);

std::uint64_t trial_seed(std::uint64_t master, int trial);

/// CSV writers for persisted experiment outputs.
void write_trials_csv(const std::vector<TrialResult>& trials, const std::string& path);
std::vector<TrialResult> read_trials_csv(const std::string& path);
void write_convergence_csv(const std::vector<ConvergencePoint>& points, const std::string& path);
void write_spectrum_csv(const SpectrumReport& report, const std::string& path);
void write_curve_csv(const ErrorReport& report, const std::string& path);

} // namespace pget::bench
