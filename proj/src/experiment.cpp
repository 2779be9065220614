#include "mlasg/experiment.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <boost/random/sobol.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "mlasg/kink.hpp"

namespace mlasg {

namespace {

namespace pt = boost::property_tree;
using json = nlohmann::json;

template <class T>
std::vector<T> parse_list(const std::string& text)
{
    std::istringstream in(text);
    std::vector<T> out;
    T v;
    while (in >> v) {
        out.push_back(v);
    }
    if (!in.eof()) {
        throw std::invalid_argument("cannot parse list '" + text + "'");
    }
    return out;
}

bool is_kmc(const std::string& model)
{
    return model == "co-oxidation" || model == "co-oxidation-13";
}

std::optional<double> parse_number(const std::string& text)
{
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size()) {
        return std::nullopt;
    }
    return v;
}

ScalarFunction toy_function(const ExperimentConfig& config)
{
    if (config.model == "kink") {
        return KinkModel{config.dimension};
    }
    if (config.model == "zero") {
        return [](std::span<const double>) { return 0.0; };
    }
    if (config.model == "constant") {
        return [v = config.constant](std::span<const double>) { return v; };
    }
    throw std::invalid_argument("unknown model '" + config.model + "'");
}

std::string run_stem(const RunOutcome& run)
{
    return run.mode + "_s" + std::to_string(run.seed);
}

}  // namespace

void ExperimentConfig::validate() const
{
    if (model != "kink" && model != "zero" && model != "constant" && !is_kmc(model)) {
        throw std::invalid_argument("model: unknown name '" + model + "'");
    }
    if (model == "co-oxidation" && dimension != 7) {
        throw std::invalid_argument("dimension: co-oxidation has 7 parameters");
    }
    if (model == "co-oxidation-13" && dimension != 13) {
        throw std::invalid_argument("dimension: co-oxidation-13 has 13 parameters");
    }
    if (dimension < 1) {
        throw std::invalid_argument("dimension must be >= 1");
    }
    if (modes.empty()) {
        throw std::invalid_argument("modes: at least one mode is required");
    }
    for (std::size_t i = 0; i < modes.size(); ++i) {
        if (modes[i].label.empty() || modes[i].label.find_first_of("/\\ ,") != std::string::npos) {
            throw std::invalid_argument("modes: bad label '" + modes[i].label + "'");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (modes[j].label == modes[i].label) {
                throw std::invalid_argument("modes: duplicate label '" + modes[i].label + "'");
            }
        }
        modes[i].refine.validate();
    }
    if (seeds.empty()) {
        throw std::invalid_argument("seeds: at least one seed is required");
    }
    if (!reference.empty() && reference != "oracle" && reference != "radial" && !parse_number(reference)) {
        throw std::invalid_argument("reference: expected oracle, radial or a number");
    }
    if (reference == "radial" && model != "kink") {
        throw std::invalid_argument("reference: radial is only available for the kink model");
    }
    if ((reference == "oracle" || reference == "radial") && is_kmc(model)) {
        throw std::invalid_argument("reference: no oracle for kMC models, give a number");
    }
    if (chain.num_sites < 2) {
        throw std::invalid_argument("kmc.num_sites must be >= 2");
    }
}

ExperimentConfig parse_experiment_config(std::istream& in)
{
    pt::ptree tree;
    pt::read_ini(in, tree);
    const pt::ptree& e = tree.get_child("experiment");
    ExperimentConfig c;
    c.model = e.get("model", c.model);
    c.dimension = e.get("dimension", is_kmc(c.model) ? (c.model == "co-oxidation" ? 7 : 13) : c.dimension);
    c.constant = e.get("constant", c.constant);
    if (auto s = e.get_optional<std::string>("seeds")) {
        c.seeds = parse_list<std::uint64_t>(*s);
    }
    c.reference = e.get("reference", c.reference);
    c.reference_rel_tol = e.get("reference_rel_tol", c.reference_rel_tol);
    c.threads = e.get("threads", c.threads);
    c.output_dir = e.get("output_dir", c.output_dir.string());
    c.oracle_cache = e.get("oracle_cache", std::string());

    if (auto k = tree.get_child_optional("kmc")) {
        if (k->get("scale", std::string("desk")) == "full") {
            c.chain = kmc::ChainConfig::full_scale();
        }
        c.chain.num_sites = k->get("num_sites", c.chain.num_sites);
        c.chain.relax_steps = k->get("relax_steps", c.chain.relax_steps);
        c.chain.average_steps = k->get("average_steps", c.chain.average_steps);
    }

    for (const std::string& label : parse_list<std::string>(e.get<std::string>("modes"))) {
        auto section = tree.get_child_optional(pt::ptree::path_type("mode." + label, '/'));
        if (!section) {
            throw std::invalid_argument("modes: no [mode." + label + "] section");
        }
        ModeSpec m;
        m.label = label;
        RefinementConfig& r = m.refine;
        r.mode = parse_mode(section->get<std::string>("type"));
        r.tol = section->get("tol", r.tol);
        r.c = section->get("c", r.c);
        r.B = section->get("B", r.B);
        r.sigma0 = section->get("sigma0", r.mode == RefinementMode::AsgFixedVariance ? std::sqrt(r.c) * r.tol : 0.0);
        r.max_level = section->get("max_level", r.max_level);
        r.min_level = section->get("min_level", r.min_level);
        r.max_points = section->get("max_points", r.max_points);
        r.limits.min_samples = section->get("min_samples", r.limits.min_samples);
        r.limits.max_samples = section->get("max_samples", r.limits.max_samples);
        c.modes.push_back(m);
    }
    c.validate();
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config " + path.string());
    }
    ExperimentConfig c;
    try {
        c = parse_experiment_config(in);
    } catch (const std::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    if (const char* out = std::getenv("MLASG_OUT"); out && *out) {
        c.output_dir = out;
    }
    return c;
}

std::unique_ptr<McModel> make_model(const ExperimentConfig& config, const RefinementConfig& mode)
{
    if (config.model == "co-oxidation") {
        return std::make_unique<kmc::CoOxidationModel>(kmc::ParameterBox::base(), config.chain);
    }
    if (config.model == "co-oxidation-13") {
        return std::make_unique<kmc::CoOxidationModel>(kmc::ParameterBox::extended(), config.chain);
    }
    const double level0 = mode.c * mode.tol * mode.tol;
    const NoiseLaw law = mode.mode == RefinementMode::Mlasg
                             ? NoiseLaw::scheduled(VarianceSchedule(mode.c, mode.tol, mode.B))
                             : NoiseLaw::fixed(mode.sigma0, level0);
    return std::make_unique<NoisyWrapper>(config.dimension, toy_function(config), law, config.model);
}

std::uint64_t mode_stream(const std::string& label)
{
    // FNV-1a
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : label) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

double median(std::vector<double> values)
{
    if (values.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<ModeSummary> summarize(const std::vector<RunOutcome>& runs)
{
    std::vector<ModeSummary> out;
    for (const RunOutcome& run : runs) {
        if (std::none_of(out.begin(), out.end(), [&](const ModeSummary& s) { return s.mode == run.mode; })) {
            ModeSummary fresh;
            fresh.mode = run.mode;
            out.push_back(fresh);
        }
    }
    for (ModeSummary& s : out) {
        std::vector<double> errors, costs, points, estimates;
        for (const RunOutcome& run : runs) {
            if (run.mode != s.mode) {
                continue;
            }
            ++s.runs;
            if (!run.ok() || run.report.iterations.empty()) {
                ++s.failures;
                continue;
            }
            const IterationRecord& last = run.report.iterations.back();
            if (last.error) {
                errors.push_back(*last.error);
            }
            costs.push_back(last.cumulative_cost);
            points.push_back(static_cast<double>(last.num_points));
            estimates.push_back(last.integral_estimate);
        }
        if (!errors.empty()) {
            s.median_final_error = median(errors);
        }
        s.median_final_cost = median(costs);
        s.median_final_points = median(points);
        s.median_final_estimate = median(estimates);
    }
    return out;
}

std::optional<double> resolve_reference(const ExperimentConfig& config)
{
    if (config.reference.empty()) {
        return std::nullopt;
    }
    if (auto v = parse_number(config.reference)) {
        return v;
    }
    const std::string key = config.model + "/" + std::to_string(config.dimension) + "/" + config.reference;
    json cache = json::object();
    if (!config.oracle_cache.empty() && std::filesystem::exists(config.oracle_cache)) {
        std::ifstream in(config.oracle_cache);
        cache = json::parse(in);
        if (cache.contains(key)) {
            return cache[key].get<double>();
        }
    }

    const ScalarFunction f = toy_function(config);
    double value = 0.0;
    if (config.reference == "radial") {
        value = kink_radial_integral(config.dimension);
        const double qmc = qmc_mean(f, config.dimension, 10'000'000);
        const double rel = std::abs(value - qmc) / std::abs(value);
        if (rel > config.reference_rel_tol) {
            throw OracleFailure("radial reference " + format_real(value) + " and QMC " + format_real(qmc)
                                + " differ by " + format_real(rel));
        }
    } else {
        value = reference_integral(f, config.dimension, config.reference_rel_tol).value;
    }
    if (!config.oracle_cache.empty()) {
        cache[key] = value;
        write_file_atomic(config.oracle_cache, cache.dump(2) + "\n");
    }
    return value;
}

ComparisonReport run_experiment(const ExperimentConfig& config, const ModelFactory& factory)
{
    config.validate();
    ComparisonReport report;
    report.model = config.model;
    report.dimension = config.dimension;
    report.reference = resolve_reference(config);
    for (const ModeSpec& mode : config.modes) {
        const auto model = factory(config, mode.refine);
        for (std::uint64_t seed : config.seeds) {
            RunOutcome run;
            run.mode = mode.label;
            run.seed = seed;
            try {
                RefineResult r = refine_loop(*model, mode.refine,
                                             RunOptions{seed, mode_stream(mode.label), config.threads, report.reference});
                run.report = std::move(r.report);
                run.grid = std::move(r.grid);
            } catch (const std::exception& e) {
                run.failure = e.what();
            }
            report.runs.push_back(std::move(run));
        }
    }
    report.summary = summarize(report.runs);
    return report;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        out.flush();
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

std::string summary_json(const ComparisonReport& report)
{
    json j;
    j["model"] = report.model;
    j["dimension"] = report.dimension;
    j["reference"] = report.reference ? json(*report.reference) : json(nullptr);
    j["aggregate"] = "median over seeds";
    for (const ModeSummary& s : report.summary) {
        json m;
        m["mode"] = s.mode;
        m["runs"] = s.runs;
        m["failures"] = s.failures;
        m["median_final_error"] = s.median_final_error ? json(*s.median_final_error) : json(nullptr);
        m["median_final_cost"] = s.median_final_cost;
        m["median_final_points"] = s.median_final_points;
        m["median_final_estimate"] = s.median_final_estimate;
        j["modes"].push_back(m);
    }
    for (const RunOutcome& run : report.runs) {
        json r;
        r["mode"] = run.mode;
        r["seed"] = run.seed;
        if (!run.ok()) {
            r["failure"] = run.failure;
        } else if (!run.report.iterations.empty()) {
            const IterationRecord& last = run.report.iterations.back();
            r["final_level"] = last.level;
            r["final_points"] = last.num_points;
            r["final_cost"] = last.cumulative_cost;
            r["final_estimate"] = last.integral_estimate;
            r["final_error"] = last.error ? json(*last.error) : json(nullptr);
            r["cap_reason"] = run.report.cap_reason;
            r["unmet_targets"] = run.report.unmet_targets;
        }
        j["runs"].push_back(r);
    }
    return j.dump(2) + "\n";
}

void emit_figures_data(const ComparisonReport& report, const std::filesystem::path& out)
{
    for (const RunOutcome& run : report.runs) {
        if (!run.ok()) {
            continue;
        }
        const std::string stem = run_stem(run);
        std::ostringstream full;
        write_run_report_csv(full, run.report);
        write_file_atomic(out / ("run_" + stem + ".csv"), full.str());

        std::ostringstream by_points;
        std::ostringstream by_cost;
        by_points << "num_points,error\n";
        by_cost << "cumulative_cost,error\n";
        for (const IterationRecord& r : run.report.iterations) {
            const std::string err = r.error ? format_real(*r.error) : "";
            by_points << r.num_points << ',' << err << '\n';
            by_cost << format_real(r.cumulative_cost) << ',' << err << '\n';
        }
        write_file_atomic(out / ("error_vs_points_" + stem + ".csv"), by_points.str());
        write_file_atomic(out / ("error_vs_cost_" + stem + ".csv"), by_cost.str());

        if (run.grid) {
            std::ostringstream grid;
            for (std::size_t d = 0; d < run.grid->dimension(); ++d) {
                grid << 'x' << d << ',';
            }
            grid << "level\n";
            for (const GridNode& n : run.grid->nodes()) {
                for (double x : n.coords) {
                    grid << format_real(x) << ',';
                }
                grid << n.key.total_level() << '\n';
            }
            write_file_atomic(out / ("grid_" + stem + ".csv"), grid.str());
        }
    }
    write_file_atomic(out / "summary.json", summary_json(report));
}

double l1_interpolation_error(const SparseGrid& grid, const ScalarFunction& f, std::size_t midpoints_per_axis,
                              std::size_t qmc_points)
{
    const std::size_t dim = grid.dimension();
    std::vector<double> x(dim);
    double sum = 0.0;
    std::size_t count = 0;
    if (dim <= 3) {
        std::vector<std::size_t> idx(dim, 0);
        const double h = 1.0 / static_cast<double>(midpoints_per_axis);
        while (true) {
            for (std::size_t d = 0; d < dim; ++d) {
                x[d] = (static_cast<double>(idx[d]) + 0.5) * h;
            }
            sum += std::abs(interpolate(grid, x) - f(x));
            ++count;
            std::size_t d = 0;
            while (d < dim && ++idx[d] == midpoints_per_axis) {
                idx[d++] = 0;
            }
            if (d == dim) {
                break;
            }
        }
    } else {
        boost::random::sobol engine(static_cast<unsigned>(dim));
        for (; count < qmc_points; ++count) {
            for (double& xj : x) {
                xj = std::ldexp(static_cast<double>(engine()), -64);
            }
            sum += std::abs(interpolate(grid, x) - f(x));
        }
    }
    return sum / static_cast<double>(count);
}

double SweepReport::median_error(double sigma0, double tol) const
{
    std::vector<double> e;
    for (const SweepPoint& p : points) {
        if (p.sigma0 == sigma0 && p.tol == tol) {
            e.push_back(p.l1_error);
        }
    }
    return median(e);
}

SweepReport sweep_tolerance(const SweepConfig& config)
{
    if (!std::is_sorted(config.tols.begin(), config.tols.end(), std::greater<>())) {
        throw std::invalid_argument("sweep tolerances must be descending");
    }
    const KinkModel kink{config.dimension};
    SweepReport report;
    for (double sigma0 : config.sigma0s) {
        for (double tol : config.tols) {
            RefinementConfig refine;
            refine.tol = tol;
            refine.max_points = config.max_points;
            std::unique_ptr<McModel> model;
            if (sigma0 == 0.0) {
                refine.mode = RefinementMode::AsgFixedVariance;
                model = std::make_unique<DeterministicModel>(config.dimension, kink, "kink");
            } else {
                refine.c = sigma0 * sigma0 / (tol * tol);
                model = std::make_unique<NoisyWrapper>(
                    config.dimension, kink, NoiseLaw::scheduled(VarianceSchedule(refine.c, tol)), "kink");
            }
            const std::vector<std::uint64_t> seeds =
                sigma0 == 0.0 ? std::vector<std::uint64_t>{config.seeds.front()} : config.seeds;
            for (std::uint64_t seed : seeds) {
                const RefineResult r = refine_loop(*model, refine, RunOptions{seed, 0, config.threads, std::nullopt});
                report.points.push_back(
                    {sigma0, tol, seed, r.grid.size(), l1_interpolation_error(r.grid, kink, config.midpoints_per_axis)});
            }
        }
    }
    return report;
}

void write_sweep_csv(std::ostream& out, const SweepReport& report)
{
    out << "sigma0,tol,seed,points,l1_error\n";
    for (const SweepPoint& p : report.points) {
        out << format_real(p.sigma0) << ',' << format_real(p.tol) << ',' << p.seed << ',' << p.points << ','
            << format_real(p.l1_error) << '\n';
    }
}

}  // namespace mlasg
