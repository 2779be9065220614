#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

#include "mlasg/mc_model.hpp"
#include "mlasg/sampling.hpp"

namespace mlasg {

/*!
 * Radial test function with a kink on the sphere r = 0.6:
 *   g1(r) = 10 / (exp((0.35 - r) / 0.086) + 1)   for r < 0.6
 *   g2(r) = g1(0.6) * 0.005^(r - 0.6)             for r >= 0.6
 * evaluated at r = |x| for x in [0,1]^D (the [-0.5,0.5]^D cube shifted by 0.5).
 */
struct KinkModel {
    std::size_t dimension = 2;

    double operator()(std::span<const double> x) const;
};

inline constexpr double kKinkRadius = 0.6;

double kink_g1(double r);
double kink_g(double r);
double kink_eval(const KinkModel& model, std::span<const double> x);

/*!
 * Integral of kink_g(|x|) over [0,1]^D as a one-dimensional integral against
 * the distribution of S = sum x_j^2 for uniform x. The CDF of S is tabulated
 * by repeated convolution, so this is independent of any cubature rule.
 */
double kink_radial_integral(std::size_t dimension, std::size_t table_points = 10'000);

//! Variance and cost of one synthetic draw as a function of the node level.
class NoiseLaw {
public:
    //! Var = c tol^2 B^{|l|}, cost = B^{-|l|} (a level-0 draw costs 1).
    static NoiseLaw scheduled(const VarianceSchedule& schedule);
    //! Var = sigma^2 everywhere, cost = reference_variance / sigma^2 (1 if sigma == 0).
    static NoiseLaw fixed(double sigma, double reference_variance);

    double variance(int level) const;
    double cost(int level) const;

private:
    NoiseLaw() = default;

    bool scheduled_ = false;
    double c_tol2_ = 0.0;
    double base_ = 2.0;
    double sigma2_ = 0.0;
    double fixed_cost_ = 1.0;
};

//! Adds zero-mean normal noise s_{l,i} to a deterministic function.
class NoisyWrapper final : public McModel {
public:
    NoisyWrapper(std::size_t dimension, ScalarFunction inner, NoiseLaw law, std::string name = "noisy");

    std::size_t dimension() const override { return dimension_; }
    std::string name() const override { return name_; }
    Draw draw(const SamplePoint& point, Rng& rng) const override;
    std::optional<double> draw_variance(const SamplePoint& point) const override;

    const NoiseLaw& law() const { return law_; }
    double inner(std::span<const double> x) const { return inner_(x); }

private:
    std::size_t dimension_;
    ScalarFunction inner_;
    NoiseLaw law_;
    std::string name_;
};

inline Draw noisy_draw(const NoisyWrapper& wrapper, std::span<const double> x, const MultiIndex& key, Rng& rng)
{
    return wrapper.draw(SamplePoint{key, x}, rng);
}

//! The two reference methods disagreed.
class OracleFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ReferenceOptions {
    //! Refinement threshold of the noise-free adaptive sparse grid.
    double sg_tol = 1e-8;
    int sg_max_level = 30;
    std::size_t sg_max_points = 5'000'000;
    std::size_t qmc_points = 10'000'000;
};

struct ReferenceIntegral {
    double value = 0.0;  //!< sparse-grid value (returned as the reference)
    double qmc_value = 0.0;
    std::size_t sg_points = 0;
    std::size_t qmc_points = 0;
    double relative_difference = 0.0;
};

//! Sobol quasi-Monte Carlo mean of f over [0,1]^D.
double qmc_mean(const ScalarFunction& f, std::size_t dimension, std::size_t points);

/*!
 * Noise-free reference integral over [0,1]^D from an adaptive sparse grid,
 * cross-checked against Sobol QMC. Throws OracleFailure when the two differ
 * by more than rel_tol relative to the sparse-grid value.
 */
ReferenceIntegral reference_integral(const ScalarFunction& f, std::size_t dimension, double rel_tol,
                                     const ReferenceOptions& options = {});

inline ReferenceIntegral reference_integral(const KinkModel& model, double rel_tol,
                                            const ReferenceOptions& options = {})
{
    return reference_integral(ScalarFunction(model), model.dimension, rel_tol, options);
}

}  // namespace mlasg
