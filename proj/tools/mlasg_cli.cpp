#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlasg/experiment.hpp"
#include "mlasg/kink.hpp"
#include "mlasg/kmc.hpp"
#include "mlasg/variance_analysis.hpp"

using namespace mlasg;
using json = nlohmann::json;

namespace {

struct Common {
    std::optional<std::uint64_t> seed;
    std::string out;
    unsigned threads = 1;
    bool desk = false;
    bool full = false;
};

void add_common(CLI::App* app, Common& c)
{
    app->add_option("--seed", c.seed, "Single seed (overrides the config)");
    app->add_option("--out", c.out, "Output directory");
    app->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
    auto* desk = app->add_flag("--desk-scale", c.desk, "kMC trajectories of 1e5 + 1e5 steps");
    app->add_flag("--full-scale", c.full, "kMC trajectories of 1e7 + 1e7 steps")->excludes(desk);
}

kmc::ChainConfig chain_for(const Common& c, kmc::ChainConfig chain)
{
    const std::uint64_t seed = chain.seed;
    if (c.full) {
        chain = kmc::ChainConfig::full_scale();
    } else if (c.desk) {
        chain = kmc::ChainConfig::desk_scale();
    }
    chain.seed = seed;
    return chain;
}

int cmd_run(const std::string& path, const Common& common)
{
    ExperimentConfig config = load_experiment_config(path);
    if (common.seed) {
        config.seeds = {*common.seed};
    }
    if (!common.out.empty()) {
        config.output_dir = common.out;
    }
    config.threads = common.threads;
    config.chain = chain_for(common, config.chain);

    const ComparisonReport report = run_experiment(config);
    emit_figures_data(report, config.output_dir);
    std::printf("%-16s %5s %8s %14s %14s %12s\n", "mode", "runs", "failed", "median_cost", "median_points",
                "median_error");
    for (const ModeSummary& s : report.summary) {
        std::printf("%-16s %5zu %8zu %14.6g %14.6g %12s\n", s.mode.c_str(), s.runs, s.failures, s.median_final_cost,
                    s.median_final_points,
                    s.median_final_error ? format_real(*s.median_final_error).c_str() : "-");
    }
    for (const RunOutcome& r : report.runs) {
        if (!r.ok()) {
            std::fprintf(stderr, "run %s seed %llu failed: %s\n", r.mode.c_str(),
                         static_cast<unsigned long long>(r.seed), r.failure.c_str());
        }
    }
    std::printf("wrote %s\n", config.output_dir.string().c_str());
    return 0;
}

int cmd_sweep(SweepConfig config, const Common& common)
{
    if (common.seed) {
        config.seeds = {*common.seed};
    }
    config.threads = common.threads;
    const SweepReport report = sweep_tolerance(config);
    const std::filesystem::path out = common.out.empty() ? "out/sweep" : common.out;
    std::ostringstream raw;
    write_sweep_csv(raw, report);
    write_file_atomic(out / "sweep.csv", raw.str());

    std::ostringstream med;
    med << "sigma0,tol,median_l1_error\n";
    for (double s : config.sigma0s) {
        for (double t : config.tols) {
            med << format_real(s) << ',' << format_real(t) << ',' << format_real(report.median_error(s, t)) << '\n';
        }
    }
    write_file_atomic(out / "sweep_median.csv", med.str());
    std::cout << med.str();
    return 0;
}

int cmd_verify_b(std::size_t dimension, int max_level, double base)
{
    const BaseCheck check = verify_B(dimension, max_level, base);
    json j;
    j["dimension"] = dimension;
    j["max_level"] = max_level;
    j["base"] = base;
    j["passed"] = check.passed;
    j["worst_ratio"] = check.worst_ratio;
    j["worst_ratio_by_level"] = check.worst_ratio_by_level;
    j["keys_checked"] = check.keys_checked;
    std::cout << j.dump(2) << '\n';
    return check.passed ? 0 : 1;
}

int cmd_oracle(ExperimentConfig config)
{
    config.modes = {ModeSpec{"none", RefinementConfig{}}};
    const auto value = resolve_reference(config);
    std::printf("%s\n", format_real(*value).c_str());
    return 0;
}

int cmd_kmc_sample(const std::vector<double>& u, const std::string& model, int replicas,
                   const std::string& trace, const Common& common)
{
    const kmc::ParameterBox box = model == "co-oxidation-13" ? kmc::ParameterBox::extended() : kmc::ParameterBox::base();
    const kmc::RateSet rates = u.empty() ? kmc::RateSet{} : kmc::params_from_unit_cube(box, u);
    kmc::ChainConfig chain = kmc::ChainConfig::desk_scale();
    chain.seed = common.seed.value_or(0);
    chain = chain_for(common, chain);

    if (!trace.empty()) {
        std::ofstream out(trace);
        if (!out) {
            throw std::runtime_error("cannot write " + trace);
        }
        kmc::ssa_run(chain, rates, &out);
    }
    const kmc::CoverageEstimate est = kmc::coverage_estimator(chain, rates, replicas, common.threads);
    json j;
    j["replicas"] = est.acc.count();
    j["mean_coverage"] = est.acc.mean();
    j["sample_variance"] = est.acc.count() > 1 ? json(est.acc.sample_variance()) : json(nullptr);
    j["cost_steps"] = est.acc.cost();
    j["absorbed_replicas"] = est.absorbed_replicas;
    j["relax_steps"] = chain.relax_steps;
    j["average_steps"] = chain.average_steps;
    std::cout << j.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multilevel adaptive sparse grid quadrature for Monte Carlo models"};
    app.require_subcommand(1);

    Common run_common;
    std::string config_path;
    auto* run = app.add_subcommand("run", "Run the modes and seeds of an experiment config");
    run->add_option("config", config_path, "INI experiment config")->required()->check(CLI::ExistingFile);
    add_common(run, run_common);

    Common sweep_common;
    SweepConfig sweep;
    auto* sw = app.add_subcommand("sweep", "1-norm interpolation error of the kink model over tol and sigma0");
    sw->add_option("--dimension", sweep.dimension);
    sw->add_option("--tols", sweep.tols, "Descending tolerances")->delimiter(',');
    sw->add_option("--sigma0s", sweep.sigma0s, "Initial standard deviations (0 = noise-free ASG)")->delimiter(',');
    sw->add_option("--seeds", sweep.seeds)->delimiter(',');
    sw->add_option("--midpoints", sweep.midpoints_per_axis, "Validation midpoints per axis");
    add_common(sw, sweep_common);

    std::size_t vb_dim = 2;
    int vb_level = 8;
    double vb_base = 2.0;
    auto* vb = app.add_subcommand("verify-b", "Check the variance base B on a full sparse grid");
    vb->add_option("--dimension", vb_dim)->required();
    vb->add_option("--max-level", vb_level)->required();
    vb->add_option("--base", vb_base);

    ExperimentConfig oracle;
    oracle.model = "kink";
    oracle.reference = "oracle";
    std::string cache;
    auto* orc = app.add_subcommand("oracle", "Compute (and cache) a reference integral");
    orc->add_option("--model", oracle.model)->check(CLI::IsMember({"kink", "zero", "constant"}));
    orc->add_option("--dimension", oracle.dimension);
    orc->add_option("--constant", oracle.constant);
    orc->add_option("--method", oracle.reference)->check(CLI::IsMember({"oracle", "radial"}));
    orc->add_option("--rel-tol", oracle.reference_rel_tol);
    orc->add_option("--cache", cache, "JSON cache file");

    Common kmc_common;
    std::vector<double> u;
    std::string kmc_model = "co-oxidation";
    int replicas = 8;
    std::string trace;
    auto* ks = app.add_subcommand("kmc-sample", "Coverage estimate at one parameter point");
    ks->add_option("--u", u, "Point in the unit cube (7 or 13 values); Table I defaults if omitted");
    ks->add_option("--model", kmc_model)->check(CLI::IsMember({"co-oxidation", "co-oxidation-13"}));
    ks->add_option("--replicas", replicas)->check(CLI::PositiveNumber);
    ks->add_option("--trace", trace, "CSV trace of one trajectory");
    add_common(ks, kmc_common);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            return cmd_run(config_path, run_common);
        }
        if (*sw) {
            return cmd_sweep(sweep, sweep_common);
        }
        if (*vb) {
            return cmd_verify_b(vb_dim, vb_level, vb_base);
        }
        if (*orc) {
            oracle.oracle_cache = cache;
            return cmd_oracle(oracle);
        }
        if (*ks) {
            return cmd_kmc_sample(u, kmc_model, replicas, trace, kmc_common);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
