#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "mlasg/multi_index.hpp"
#include "mlasg/rng.hpp"

namespace mlasg {

//! Where a sample is requested: the node key and its coordinates in [0,1]^D.
struct SamplePoint {
    const MultiIndex& key;
    std::span<const double> x;
};

//! One realisation y of Y_x and the model cost it took.
struct Draw {
    double value;
    double cost;
};

/*!
 * Parametric Monte Carlo model: f(x) = E(Y_x) is only reachable through
 * independent draws. Implementations must be safe to call concurrently with
 * distinct generators.
 */
class McModel {
public:
    virtual ~McModel() = default;

    virtual std::size_t dimension() const = 0;
    virtual std::string name() const = 0;
    virtual Draw draw(const SamplePoint& point, Rng& rng) const = 0;

    //! Exact Var(Y_x) when the model knows it (synthetic noise); the sampler
    //! then sizes M directly instead of estimating the variance.
    virtual std::optional<double> draw_variance(const SamplePoint&) const { return std::nullopt; }

    //! Uniform bound C* on Var(Y_x), if one is known.
    virtual std::optional<double> variance_bound() const { return std::nullopt; }
};

using ScalarFunction = std::function<double(std::span<const double>)>;

//! Noise-free model: every draw returns f(x) at unit cost.
class DeterministicModel final : public McModel {
public:
    DeterministicModel(std::size_t dimension, ScalarFunction f, std::string name = "deterministic");

    std::size_t dimension() const override { return dimension_; }
    std::string name() const override { return name_; }
    Draw draw(const SamplePoint& point, Rng& rng) const override;
    std::optional<double> draw_variance(const SamplePoint&) const override { return 0.0; }

private:
    std::size_t dimension_;
    ScalarFunction f_;
    std::string name_;
};

}  // namespace mlasg
