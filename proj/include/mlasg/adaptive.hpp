#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlasg/mc_model.hpp"
#include "mlasg/sampling.hpp"
#include "mlasg/sparse_grid.hpp"

namespace mlasg {

enum class RefinementMode { AsgFixedVariance, Mlasg, FsgSingleSample };

std::string to_string(RefinementMode mode);
//! Accepts ASG_FIXED_VARIANCE / MLASG / FSG_SINGLE_SAMPLE (case-insensitive, also asg / fsg).
RefinementMode parse_mode(const std::string& text);

struct RefinementConfig {
    RefinementMode mode = RefinementMode::Mlasg;
    double tol = 1e-4;
    int max_level = 20;
    //! Levels up to this one are added in full before adaptive selection starts.
    int min_level = 0;
    std::uint64_t max_points = 10'000'000;
    double c = 1.0;
    double B = 2.0;
    double sigma0 = 0.0;
    SamplingLimits limits{};

    //! Throws std::invalid_argument when a field required by the mode is out of range.
    void validate() const;
};

struct IterationRecord {
    int iteration = 0;
    int level = 0;
    std::uint64_t num_points = 0;
    double cumulative_cost = 0.0;
    double integral_estimate = 0.0;
    std::optional<double> error;
};

struct RunReport {
    std::vector<IterationRecord> iterations;
    bool cap_tripped = false;
    std::string cap_reason;
    //! Nodes whose sampling stopped at max_samples before reaching the target.
    std::size_t unmet_targets = 0;
};

//! CSV `iteration,level,num_points,cumulative_cost,integral_estimate,error`.
void write_run_report_csv(std::ostream& out, const RunReport& report);
RunReport read_run_report_csv(std::istream& in);

struct NodeEstimate {
    double estimate = 0.0;
    double variance_of_mean = 0.0;
    std::uint64_t sample_count = 0;
    double cost = 0.0;
    bool target_met = true;
};

//! Decides how much effort one node's estimate gets.
class Sampler {
public:
    virtual ~Sampler() = default;
    virtual NodeEstimate evaluate(const McModel& model, const SamplePoint& point, Rng& rng) const = 0;
};

//! MLASG: target variance c tol^2 B^{|l|}.
class ScheduledSampler final : public Sampler {
public:
    ScheduledSampler(VarianceSchedule schedule, SamplingLimits limits = {});
    NodeEstimate evaluate(const McModel& model, const SamplePoint& point, Rng& rng) const override;
    const VarianceSchedule& schedule() const { return schedule_; }

private:
    VarianceSchedule schedule_;
    SamplingLimits limits_;
};

//! Single-level ASG: the same target sigma0^2 on every node.
class FixedVarianceSampler final : public Sampler {
public:
    explicit FixedVarianceSampler(double sigma0, SamplingLimits limits = {});
    NodeEstimate evaluate(const McModel& model, const SamplePoint& point, Rng& rng) const override;

private:
    double sigma0_;
    SamplingLimits limits_;
};

//! FSG baseline: one draw per node. The variance is the model's exact draw
//! variance when it reports one, NaN otherwise.
class SingleSampleSampler final : public Sampler {
public:
    NodeEstimate evaluate(const McModel& model, const SamplePoint& point, Rng& rng) const override;
};

std::unique_ptr<Sampler> make_sampler(const RefinementConfig& config);

//! |surplus * weight|
inline double indicator(const GridNode& node)
{
    return std::abs(node.surplus * node.weight);
}

//! Children (total level L+1) of frontier nodes whose indicator exceeds tol.
std::vector<MultiIndex> select_refinement(const SparseGrid& grid, double tol);

//! fresh plus every ancestor of its members that is not yet in the grid,
//! minus keys already present, in ancestor-first order.
std::vector<MultiIndex> ancestor_closure(const SparseGrid& grid, const std::vector<MultiIndex>& fresh);

//! A model draw failed; carries the node for context.
class ModelError : public std::runtime_error {
public:
    ModelError(const MultiIndex& key, const std::string& what);
    const MultiIndex& key() const { return key_; }

private:
    MultiIndex key_;
};

struct RunOptions {
    std::uint64_t seed = 0;
    //! Separates RNG streams of different runs sharing a seed (e.g. modes).
    std::uint64_t stream = 0;
    unsigned threads = 1;
    std::optional<double> reference;
};

struct RefineResult {
    SparseGrid grid;
    RunReport report;
};

/*!
 * Locally adaptive refinement from the level-0 node.
 *
 * Each iteration samples the new nodes (in parallel, one RNG stream per node
 * derived from seed, stream and key), computes their surpluses ancestor-first,
 * records the iteration and selects the next level. FSG mode instead adds
 * every key of the next level until max_level.
 */
RefineResult refine_loop(const McModel& model, const RefinementConfig& config, const Sampler& sampler,
                         const RunOptions& options = {});

RefineResult refine_loop(const McModel& model, const RefinementConfig& config,
                         const RunOptions& options = {});

}  // namespace mlasg
