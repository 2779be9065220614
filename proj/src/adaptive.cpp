#include "mlasg/adaptive.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "mlasg/parallel.hpp"

namespace mlasg {

std::string to_string(RefinementMode mode)
{
    switch (mode) {
    case RefinementMode::AsgFixedVariance:
        return "ASG_FIXED_VARIANCE";
    case RefinementMode::Mlasg:
        return "MLASG";
    case RefinementMode::FsgSingleSample:
        return "FSG_SINGLE_SAMPLE";
    }
    return "unknown";
}

RefinementMode parse_mode(const std::string& text)
{
    std::string upper;
    for (char ch : text) {
        upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    }
    if (upper == "MLASG") {
        return RefinementMode::Mlasg;
    }
    if (upper == "ASG" || upper == "ASG_FIXED_VARIANCE") {
        return RefinementMode::AsgFixedVariance;
    }
    if (upper == "FSG" || upper == "FSG_SINGLE_SAMPLE") {
        return RefinementMode::FsgSingleSample;
    }
    throw std::invalid_argument("unknown refinement mode '" + text + "'");
}

void RefinementConfig::validate() const
{
    if (!(tol > 0.0)) {
        throw std::invalid_argument("tol must be positive");
    }
    if (max_level < 1 || max_level > kMaxLevel) {
        throw std::invalid_argument("max_level must be in [1, 30]");
    }
    if (min_level < 0 || min_level > max_level) {
        throw std::invalid_argument("min_level must be in [0, max_level]");
    }
    if (max_points < 1) {
        throw std::invalid_argument("max_points must be positive");
    }
    if (mode == RefinementMode::Mlasg && (!(c > 0.0) || !(B > 1.0))) {
        throw std::invalid_argument("MLASG needs c > 0 and B > 1");
    }
    if (mode == RefinementMode::AsgFixedVariance && !(sigma0 >= 0.0)) {
        throw std::invalid_argument("ASG_FIXED_VARIANCE needs sigma0 >= 0");
    }
}

namespace {

NodeEstimate to_estimate(const SamplingResult& r)
{
    return {r.acc.mean(), r.variance_of_mean, r.acc.count(), r.acc.cost(), r.target_met};
}

}  // namespace

void write_run_report_csv(std::ostream& out, const RunReport& report)
{
    out << "iteration,level,num_points,cumulative_cost,integral_estimate,error\n";
    for (const IterationRecord& r : report.iterations) {
        out << r.iteration << ',' << r.level << ',' << r.num_points << ',' << format_real(r.cumulative_cost)
            << ',' << format_real(r.integral_estimate) << ',';
        if (r.error) {
            out << format_real(*r.error);
        }
        out << '\n';
    }
}

RunReport read_run_report_csv(std::istream& in)
{
    RunReport report;
    std::string line;
    if (!std::getline(in, line) || line != "iteration,level,num_points,cumulative_cost,integral_estimate,error") {
        throw std::runtime_error("run report: unexpected header");
    }
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> f;
        std::string item;
        std::istringstream stream(line);
        while (std::getline(stream, item, ',')) {
            f.push_back(item);
        }
        if (line.back() == ',') {
            f.emplace_back();
        }
        if (f.size() != 6) {
            throw std::runtime_error("run report: malformed row '" + line + "'");
        }
        IterationRecord r;
        r.iteration = std::stoi(f[0]);
        r.level = std::stoi(f[1]);
        r.num_points = std::stoull(f[2]);
        r.cumulative_cost = std::strtod(f[3].c_str(), nullptr);
        r.integral_estimate = std::strtod(f[4].c_str(), nullptr);
        if (!f[5].empty()) {
            r.error = std::strtod(f[5].c_str(), nullptr);
        }
        report.iterations.push_back(r);
    }
    return report;
}

ScheduledSampler::ScheduledSampler(VarianceSchedule schedule, SamplingLimits limits)
    : schedule_(schedule), limits_(limits)
{
}

NodeEstimate ScheduledSampler::evaluate(const McModel& model, const SamplePoint& point, Rng& rng) const
{
    const double target = schedule_.target(point.key.total_level());
    return to_estimate(sample_to_target(model, point, target, {}, rng, limits_));
}

FixedVarianceSampler::FixedVarianceSampler(double sigma0, SamplingLimits limits)
    : sigma0_(sigma0), limits_(limits)
{
    if (!(sigma0 >= 0.0)) {
        throw std::invalid_argument("sigma0 must be non-negative");
    }
}

NodeEstimate FixedVarianceSampler::evaluate(const McModel& model, const SamplePoint& point, Rng& rng) const
{
    return to_estimate(sample_to_target(model, point, sigma0_ * sigma0_, {}, rng, limits_));
}

NodeEstimate SingleSampleSampler::evaluate(const McModel& model, const SamplePoint& point, Rng& rng) const
{
    const Draw d = model.draw(point, rng);
    NodeEstimate e;
    e.estimate = d.value;
    e.variance_of_mean = model.draw_variance(point).value_or(std::numeric_limits<double>::quiet_NaN());
    e.sample_count = 1;
    e.cost = d.cost;
    return e;
}

std::unique_ptr<Sampler> make_sampler(const RefinementConfig& config)
{
    config.validate();
    switch (config.mode) {
    case RefinementMode::Mlasg:
        return std::make_unique<ScheduledSampler>(VarianceSchedule(config.c, config.tol, config.B),
                                                  config.limits);
    case RefinementMode::AsgFixedVariance:
        return std::make_unique<FixedVarianceSampler>(config.sigma0, config.limits);
    case RefinementMode::FsgSingleSample:
        return std::make_unique<SingleSampleSampler>();
    }
    throw std::invalid_argument("unknown refinement mode");
}

std::vector<MultiIndex> select_refinement(const SparseGrid& grid, double tol)
{
    std::vector<MultiIndex> out;
    const int frontier = grid.current_level();
    for (const GridNode& node : grid.nodes()) {
        if (node.key.total_level() != frontier || !(indicator(node) > tol)) {
            continue;
        }
        for (MultiIndex& child : children(node.key)) {
            out.push_back(std::move(child));
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<MultiIndex> ancestor_closure(const SparseGrid& grid, const std::vector<MultiIndex>& fresh)
{
    std::unordered_set<MultiIndex, MultiIndexHash> seen;
    std::vector<MultiIndex> out;
    std::vector<MultiIndex> stack;
    for (const MultiIndex& key : fresh) {
        if (!grid.contains(key) && seen.insert(key).second) {
            stack.push_back(key);
        }
    }
    while (!stack.empty()) {
        MultiIndex key = stack.back();
        stack.pop_back();
        for (MultiIndex& p : parents(key)) {
            if (!grid.contains(p) && seen.insert(p).second) {
                stack.push_back(p);
            }
        }
        out.push_back(std::move(key));
    }
    std::sort(out.begin(), out.end(), ancestor_first_less);
    return out;
}

ModelError::ModelError(const MultiIndex& key, const std::string& what)
    : std::runtime_error([&] {
          std::string text = "model failure at node levels (";
          for (std::size_t j = 0; j < key.dimension(); ++j) {
              text += (j ? "," : "") + std::to_string(key.level(j));
          }
          text += ") positions (";
          for (std::size_t j = 0; j < key.dimension(); ++j) {
              text += (j ? "," : "") + std::to_string(key.position(j));
          }
          return text + "): " + what;
      }()),
      key_(key)
{
}

RefineResult refine_loop(const McModel& model, const RefinementConfig& config, const Sampler& sampler,
                         const RunOptions& options)
{
    config.validate();
    const std::size_t dim = model.dimension();
    RefineResult result{SparseGrid(dim), {}};
    SparseGrid& grid = result.grid;
    RunReport& report = result.report;

    std::vector<MultiIndex> batch{MultiIndex(dim)};
    double cumulative_cost = 0.0;

    for (int iteration = 0;; ++iteration) {
        std::vector<NodeEstimate> estimates(batch.size());
        parallel_for(batch.size(), options.threads, [&](std::size_t n) {
            const MultiIndex& key = batch[n];
            const std::vector<double> x = coordinates(key);
            Rng rng = make_rng(derive_seed(options.seed, {options.stream, key.hash()}));
            try {
                estimates[n] = sampler.evaluate(model, SamplePoint{key, x}, rng);
            } catch (const ModelError&) {
                throw;
            } catch (const std::exception& e) {
                throw ModelError(key, e.what());
            }
        });

        for (std::size_t n = 0; n < batch.size(); ++n) {
            GridNode& node = grid.insert(batch[n]);
            node.estimate = estimates[n].estimate;
            node.variance_of_mean = estimates[n].variance_of_mean;
            node.sample_count = estimates[n].sample_count;
            node.cost_spent = estimates[n].cost;
            cumulative_cost += estimates[n].cost;
            if (!estimates[n].target_met) {
                ++report.unmet_targets;
            }
        }
        // batch is ancestor-first, so each surplus sees its finished ancestors
        for (const MultiIndex& key : batch) {
            GridNode& node = grid.at(key);
            node.surplus = compute_surplus(grid, key, node.estimate);
            node.has_surplus = true;
        }

        IterationRecord record;
        record.iteration = iteration;
        record.level = grid.current_level();
        record.num_points = grid.size();
        record.cumulative_cost = cumulative_cost;
        record.integral_estimate = integrate(grid);
        if (options.reference) {
            record.error = std::abs(record.integral_estimate - *options.reference);
        }
        report.iterations.push_back(record);

        if (grid.current_level() >= config.max_level) {
            report.cap_tripped = true;
            report.cap_reason = "max_level";
            break;
        }
        const bool full_level =
            config.mode == RefinementMode::FsgSingleSample || grid.current_level() < config.min_level;
        std::vector<MultiIndex> fresh = full_level ? keys_on_level(dim, grid.current_level() + 1)
                                                   : select_refinement(grid, config.tol);
        if (fresh.empty()) {
            break;
        }
        batch = ancestor_closure(grid, fresh);
        if (grid.size() + batch.size() > config.max_points) {
            report.cap_tripped = true;
            report.cap_reason = "max_points";
            break;
        }
    }
    return result;
}

RefineResult refine_loop(const McModel& model, const RefinementConfig& config, const RunOptions& options)
{
    const auto sampler = make_sampler(config);
    return refine_loop(model, config, *sampler, options);
}

}  // namespace mlasg
