#pragma once

#include <cstdint>
#include <limits>
#include <optional>

#include "mlasg/mc_model.hpp"

namespace mlasg {

//! Per-node target Var(Y_bar) = c * tol^2 * B^level.
class VarianceSchedule {
public:
    VarianceSchedule(double c, double tol, double base = 2.0);

    double c() const { return c_; }
    double tol() const { return tol_; }
    double base() const { return base_; }

    double target(int level) const;

private:
    double c_;
    double tol_;
    double base_;
};

inline double target_variance(const VarianceSchedule& schedule, int level)
{
    return schedule.target(level);
}

//! Running mean / sum of squared deviations (Welford) plus accumulated cost.
class SampleAccumulator {
public:
    void add(double value, double cost);
    //! Chan et al. pairwise combination.
    void merge(const SampleAccumulator& other);

    std::uint64_t count() const { return count_; }
    double mean() const { return mean_; }
    double m2() const { return m2_; }
    double cost() const { return cost_; }

    //! m2 / (M - 1); NaN for M < 2.
    double sample_variance() const;
    //! m2 / (M (M - 1)); NaN for M < 2.
    double variance_of_mean() const;

private:
    std::uint64_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
    double cost_ = 0.0;
};

struct SamplingLimits {
    std::uint64_t min_samples = 4;
    std::uint64_t max_samples = 100'000'000;
    double batch_growth = 1.3;
};

struct SamplingResult {
    SampleAccumulator acc;
    //! Exact when the model reports its draw variance, estimated otherwise.
    double variance_of_mean = std::numeric_limits<double>::quiet_NaN();
    bool target_met = false;
};

/*!
 * Draw until the variance of the mean is at most target_var.
 *
 * With an unknown draw variance the estimate m2/(M(M-1)) is re-checked after
 * geometrically growing batches, never stopping below min_samples. A model
 * that reports its draw variance v gets exactly ceil(v / target_var) draws.
 * Reaching max_samples first returns with target_met == false.
 */
SamplingResult sample_to_target(const McModel& model, const SamplePoint& point, double target_var,
                                SampleAccumulator acc, Rng& rng, const SamplingLimits& limits = {});

}  // namespace mlasg
