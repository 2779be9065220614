#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mlasg/adaptive.hpp"
#include "mlasg/kmc.hpp"

namespace mlasg {

struct ModeSpec {
    std::string label;
    RefinementConfig refine;
};

/*!
 * One comparison: a model, the refinement modes to run on it and the seeds.
 *
 * reference is "oracle" (sparse grid cross-checked by QMC), "radial" (kink
 * only), a number, or empty for no error column.
 */
struct ExperimentConfig {
    std::string model = "kink";
    std::size_t dimension = 2;
    double constant = 0.0;
    std::vector<ModeSpec> modes;
    std::vector<std::uint64_t> seeds{0};
    std::string reference;
    double reference_rel_tol = 1e-5;
    kmc::ChainConfig chain = kmc::ChainConfig::desk_scale();
    unsigned threads = 1;
    std::filesystem::path output_dir = "out";
    std::filesystem::path oracle_cache;

    //! Throws std::invalid_argument naming the offending field.
    void validate() const;
};

ExperimentConfig parse_experiment_config(std::istream& in);
//! MLASG_OUT, when set, replaces output_dir.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/*!
 * The model a mode samples. Synthetic models get their noise law from the
 * mode: MLASG the variance schedule, ASG and FSG a fixed sigma0, with the
 * cost of a draw in units of a level-0 MLASG draw. kMC models ignore the mode.
 */
std::unique_ptr<McModel> make_model(const ExperimentConfig& config, const RefinementConfig& mode);

//! Distinct per label, independent of the other modes in the config.
std::uint64_t mode_stream(const std::string& label);

struct RunOutcome {
    std::string mode;
    std::uint64_t seed = 0;
    RunReport report;
    std::optional<SparseGrid> grid;
    std::string failure;

    bool ok() const { return failure.empty(); }
};

struct ModeSummary {
    std::string mode;
    std::size_t runs = 0;
    std::size_t failures = 0;
    std::optional<double> median_final_error;
    double median_final_cost = 0.0;
    double median_final_points = 0.0;
    double median_final_estimate = 0.0;
};

struct ComparisonReport {
    std::string model;
    std::size_t dimension = 0;
    std::optional<double> reference;
    std::vector<RunOutcome> runs;
    std::vector<ModeSummary> summary;
};

double median(std::vector<double> values);

std::vector<ModeSummary> summarize(const std::vector<RunOutcome>& runs);

//! Throws OracleFailure when the reference cannot be established.
std::optional<double> resolve_reference(const ExperimentConfig& config);

using ModelFactory = std::function<std::unique_ptr<McModel>(const ExperimentConfig&, const RefinementConfig&)>;

/*!
 * Every (mode, seed) pair in config order. A run that throws is recorded with
 * its message and the others proceed.
 */
ComparisonReport run_experiment(const ExperimentConfig& config, const ModelFactory& factory = make_model);

/*!
 * Per run: run_<mode>_s<seed>.csv (full report), error_vs_points_*.csv,
 * error_vs_cost_*.csv and grid_*.csv (coordinates and level per node);
 * summary.json for the whole report.
 */
void emit_figures_data(const ComparisonReport& report, const std::filesystem::path& out);

std::string summary_json(const ComparisonReport& report);

//! Writes to a sibling temporary and renames it over path.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

//! Mean |u - f| over the cell midpoints of an n^D grid (D <= 3) or over
//! qmc_points Sobol points otherwise.
double l1_interpolation_error(const SparseGrid& grid, const ScalarFunction& f, std::size_t midpoints_per_axis = 512,
                              std::size_t qmc_points = 1'000'000);

struct SweepConfig {
    std::size_t dimension = 2;
    std::vector<double> tols{2.0, 1.0, 0.5, 0.2, 0.1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4};
    //! 0 is the noise-free ASG curve.
    std::vector<double> sigma0s{0.0, 1e-2, 1e-3, 1e-4};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::size_t midpoints_per_axis = 512;
    std::uint64_t max_points = 2'000'000;
    unsigned threads = 1;
};

struct SweepPoint {
    double sigma0 = 0.0;
    double tol = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t points = 0;
    double l1_error = 0.0;
};

struct SweepReport {
    std::vector<SweepPoint> points;

    //! Median over seeds; NaN when the pair was not run.
    double median_error(double sigma0, double tol) const;
};

/*!
 * Kink model: MLASG with c = sigma0^2 / tol^2 for each (sigma0, tol), or
 * noise-free ASG for sigma0 = 0, scored by the 1-norm interpolation error.
 */
SweepReport sweep_tolerance(const SweepConfig& config);

//! `sigma0,tol,seed,points,l1_error`
void write_sweep_csv(std::ostream& out, const SweepReport& report);

}  // namespace mlasg
