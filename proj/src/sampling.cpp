#include "mlasg/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mlasg {

DeterministicModel::DeterministicModel(std::size_t dimension, ScalarFunction f, std::string name)
    : dimension_(dimension), f_(std::move(f)), name_(std::move(name))
{
}

Draw DeterministicModel::draw(const SamplePoint& point, Rng&) const
{
    return {f_(point.x), 1.0};
}

VarianceSchedule::VarianceSchedule(double c, double tol, double base) : c_(c), tol_(tol), base_(base)
{
    if (!(c > 0.0) || !(tol > 0.0)) {
        throw std::invalid_argument("variance schedule needs c > 0 and tol > 0");
    }
    if (!(base > 1.0)) {
        throw std::invalid_argument("variance schedule needs B > 1");
    }
}

double VarianceSchedule::target(int level) const
{
    return c_ * tol_ * tol_ * std::pow(base_, level);
}

void SampleAccumulator::add(double value, double cost)
{
    ++count_;
    const double delta = value - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (value - mean_);
    cost_ += cost;
}

void SampleAccumulator::merge(const SampleAccumulator& other)
{
    if (other.count_ == 0) {
        cost_ += other.cost_;
        return;
    }
    if (count_ == 0) {
        const double cost = cost_;
        *this = other;
        cost_ += cost;
        return;
    }
    const double n_a = static_cast<double>(count_);
    const double n_b = static_cast<double>(other.count_);
    const double n = n_a + n_b;
    const double delta = other.mean_ - mean_;
    mean_ = (n_a * mean_ + n_b * other.mean_) / n;
    m2_ += other.m2_ + delta * delta * n_a * n_b / n;
    count_ += other.count_;
    cost_ += other.cost_;
}

double SampleAccumulator::sample_variance() const
{
    if (count_ < 2) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return m2_ / static_cast<double>(count_ - 1);
}

double SampleAccumulator::variance_of_mean() const
{
    if (count_ < 2) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return sample_variance() / static_cast<double>(count_);
}

namespace {

void draw_into(const McModel& model, const SamplePoint& point, std::uint64_t n, SampleAccumulator& acc,
               Rng& rng)
{
    for (std::uint64_t k = 0; k < n; ++k) {
        const Draw d = model.draw(point, rng);
        acc.add(d.value, d.cost);
    }
}

SamplingResult sample_known_variance(const McModel& model, const SamplePoint& point, double draw_var,
                                     double target_var, SampleAccumulator acc, Rng& rng,
                                     const SamplingLimits& limits)
{
    std::uint64_t needed = 1;
    if (draw_var > 0.0) {
        if (!(target_var > 0.0)) {
            throw std::invalid_argument("target variance must be positive for a noisy model");
        }
        // the relative slack keeps v / target == 1 from rounding up to 2 draws
        const double ratio = draw_var / target_var * (1.0 - 1e-12);
        needed = static_cast<std::uint64_t>(std::max(1.0, std::ceil(ratio)));
    }
    const std::uint64_t capped = std::min(needed, limits.max_samples);
    if (acc.count() < capped) {
        draw_into(model, point, capped - acc.count(), acc, rng);
    }
    SamplingResult result;
    result.acc = acc;
    result.variance_of_mean = draw_var / static_cast<double>(acc.count());
    result.target_met = result.variance_of_mean <= target_var;
    return result;
}

}  // namespace

SamplingResult sample_to_target(const McModel& model, const SamplePoint& point, double target_var,
                                SampleAccumulator acc, Rng& rng, const SamplingLimits& limits)
{
    if (std::optional<double> v = model.draw_variance(point)) {
        return sample_known_variance(model, point, *v, target_var, acc, rng, limits);
    }
    if (!(target_var > 0.0)) {
        throw std::invalid_argument("target variance must be positive");
    }
    const std::uint64_t min_samples = std::max<std::uint64_t>(limits.min_samples, 2);

    std::uint64_t batch = 0;
    if (acc.count() < min_samples) {
        std::uint64_t first = min_samples;
        if (std::optional<double> bound = model.variance_bound()) {
            const double hinted = std::ceil(*bound / target_var);
            first = std::max<std::uint64_t>(
                first, static_cast<std::uint64_t>(std::min(hinted, static_cast<double>(limits.max_samples))));
        }
        batch = first > acc.count() ? first - acc.count() : 0;
    }

    while (true) {
        batch = std::min(batch, limits.max_samples - acc.count());
        draw_into(model, point, batch, acc, rng);
        const double v = acc.variance_of_mean();
        if (v <= target_var) {
            return {acc, v, true};
        }
        if (acc.count() >= limits.max_samples) {
            return {acc, v, false};
        }
        const double grown = std::ceil(static_cast<double>(acc.count()) * (limits.batch_growth - 1.0));
        batch = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(grown));
    }
}

}  // namespace mlasg
