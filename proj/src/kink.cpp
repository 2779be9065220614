#include "mlasg/kink.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/random/sobol.hpp>
#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "mlasg/adaptive.hpp"

namespace mlasg {

double kink_g1(double r)
{
    return 10.0 / (std::exp((0.35 - r) / 0.086) + 1.0);
}

double kink_g(double r)
{
    if (r < kKinkRadius) {
        return kink_g1(r);
    }
    // written as g1(0.6) * 0.005^(r - 0.6) so both branches agree bitwise at 0.6
    return kink_g1(kKinkRadius) * std::pow(0.005, r - kKinkRadius);
}

double kink_eval(const KinkModel& model, std::span<const double> x)
{
    double r2 = 0.0;
    for (std::size_t j = 0; j < model.dimension; ++j) {
        r2 += x[j] * x[j];
    }
    return kink_g(std::sqrt(r2));
}

double KinkModel::operator()(std::span<const double> x) const
{
    return kink_eval(*this, x);
}

namespace {

// CDF of a sum of k squared uniforms, tabulated on [0, k] with linear interpolation.
class SquareSumCdf {
public:
    SquareSumCdf(int k, std::size_t points, const SquareSumCdf* previous) : k_(k), values_(points + 1)
    {
        using boost::math::quadrature::gauss_kronrod;
        const double h = static_cast<double>(k) / static_cast<double>(points);
        for (std::size_t n = 0; n <= points; ++n) {
            const double s = h * static_cast<double>(n);
            if (k == 1) {
                values_[n] = std::sqrt(std::min(s, 1.0));
                continue;
            }
            // F_k(s) = int_0^1 F_{k-1}(s - u^2) du, split where s - u^2 crosses an integer
            std::vector<double> cuts{0.0};
            for (int j = 0; j < k; ++j) {
                const double c = s - j;
                if (c > 0.0 && c < 1.0) {
                    cuts.push_back(std::sqrt(c));
                }
            }
            cuts.push_back(1.0);
            std::sort(cuts.begin(), cuts.end());
            double total = 0.0;
            for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
                if (cuts[c + 1] > cuts[c]) {
                    total += gauss_kronrod<double, 61>::integrate(
                        [&](double u) { return previous->operator()(s - u * u); }, cuts[c], cuts[c + 1], 8, 1e-13);
                }
            }
            values_[n] = std::clamp(total, 0.0, 1.0);
        }
    }

    double operator()(double s) const
    {
        if (s <= 0.0) {
            return 0.0;
        }
        if (s >= k_) {
            return 1.0;
        }
        if (k_ == 1) {
            return std::sqrt(std::min(s, 1.0));
        }
        const double pos = s / k_ * static_cast<double>(values_.size() - 1);
        const auto n = std::min(static_cast<std::size_t>(pos), values_.size() - 2);
        const double t = pos - static_cast<double>(n);
        return values_[n] + t * (values_[n + 1] - values_[n]);
    }

private:
    int k_;
    std::vector<double> values_;
};

}  // namespace

double kink_radial_integral(std::size_t dimension, std::size_t table_points)
{
    using boost::math::quadrature::gauss_kronrod;
    if (dimension < 1) {
        throw std::invalid_argument("dimension must be positive");
    }
    std::vector<std::unique_ptr<SquareSumCdf>> cdfs;
    for (std::size_t k = 1; k <= dimension; ++k) {
        cdfs.push_back(std::make_unique<SquareSumCdf>(static_cast<int>(k), table_points,
                                                      k > 1 ? cdfs.back().get() : nullptr));
    }
    const SquareSumCdf& F = *cdfs.back();
    const double D = static_cast<double>(dimension);
    // E g(sqrt S) = g(sqrt D) - int_0^D F(s) d/ds g(sqrt s) ds
    auto dg = [](double s) {
        const double r = std::sqrt(s);
        double slope = 0.0;
        if (r < kKinkRadius) {
            const double e = std::exp((0.35 - r) / 0.086);
            slope = 10.0 * e / (0.086 * (e + 1.0) * (e + 1.0));
        } else {
            slope = kink_g(r) * std::log(0.005);
        }
        return slope / (2.0 * r);
    };
    const double kink = kKinkRadius * kKinkRadius;
    std::vector<double> cuts{0.0, kink};
    for (std::size_t j = 1; j < dimension; ++j) {
        cuts.push_back(static_cast<double>(j));
    }
    cuts.push_back(D);
    std::sort(cuts.begin(), cuts.end());
    double integral = 0.0;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        if (cuts[c + 1] > cuts[c]) {
            integral += gauss_kronrod<double, 61>::integrate([&](double s) { return F(s) * dg(s); }, cuts[c],
                                                             cuts[c + 1], 10, 1e-13);
        }
    }
    return kink_g(std::sqrt(D)) - integral;
}

NoiseLaw NoiseLaw::scheduled(const VarianceSchedule& schedule)
{
    NoiseLaw law;
    law.scheduled_ = true;
    law.c_tol2_ = schedule.c() * schedule.tol() * schedule.tol();
    law.base_ = schedule.base();
    return law;
}

NoiseLaw NoiseLaw::fixed(double sigma, double reference_variance)
{
    if (!(sigma >= 0.0) || !(reference_variance > 0.0)) {
        throw std::invalid_argument("fixed noise law needs sigma >= 0 and a positive reference variance");
    }
    NoiseLaw law;
    law.sigma2_ = sigma * sigma;
    law.fixed_cost_ = sigma > 0.0 ? reference_variance / law.sigma2_ : 1.0;
    return law;
}

double NoiseLaw::variance(int level) const
{
    return scheduled_ ? c_tol2_ * std::pow(base_, level) : sigma2_;
}

double NoiseLaw::cost(int level) const
{
    return scheduled_ ? std::pow(base_, -level) : fixed_cost_;
}

NoisyWrapper::NoisyWrapper(std::size_t dimension, ScalarFunction inner, NoiseLaw law, std::string name)
    : dimension_(dimension), inner_(std::move(inner)), law_(law), name_(std::move(name))
{
}

Draw NoisyWrapper::draw(const SamplePoint& point, Rng& rng) const
{
    const int level = point.key.total_level();
    const double variance = law_.variance(level);
    double value = inner_(point.x);
    if (variance > 0.0) {
        std::normal_distribution<double> noise(0.0, std::sqrt(variance));
        value += noise(rng);
    }
    return {value, law_.cost(level)};
}

std::optional<double> NoisyWrapper::draw_variance(const SamplePoint& point) const
{
    return law_.variance(point.key.total_level());
}

double qmc_mean(const ScalarFunction& f, std::size_t dimension, std::size_t points)
{
    boost::random::sobol engine(static_cast<unsigned>(dimension));
    std::vector<double> x(dimension);
    // Kahan-compensated running sum
    double sum = 0.0;
    double carry = 0.0;
    for (std::size_t n = 0; n < points; ++n) {
        for (double& xj : x) {
            xj = std::ldexp(static_cast<double>(engine()), -64);
        }
        const double y = f(x) - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    return sum / static_cast<double>(points);
}

ReferenceIntegral reference_integral(const ScalarFunction& f, std::size_t dimension, double rel_tol,
                                     const ReferenceOptions& options)
{
    if (!(rel_tol >= 1e-10)) {
        throw std::invalid_argument("reference rel_tol must be >= 1e-10");
    }
    const DeterministicModel model(dimension, f, "reference");
    RefinementConfig config;
    config.mode = RefinementMode::Mlasg;
    config.tol = options.sg_tol;
    config.max_level = options.sg_max_level;
    config.max_points = options.sg_max_points;
    const RefineResult sg = refine_loop(model, config);

    ReferenceIntegral ref;
    ref.value = sg.report.iterations.back().integral_estimate;
    ref.sg_points = sg.grid.size();
    ref.qmc_points = options.qmc_points;
    ref.qmc_value = qmc_mean(f, dimension, options.qmc_points);
    const double scale = std::max(std::abs(ref.value), std::numeric_limits<double>::min());
    ref.relative_difference = std::abs(ref.value - ref.qmc_value) / scale;
    if (ref.relative_difference > rel_tol) {
        throw OracleFailure("reference methods disagree: sparse grid " + std::to_string(ref.value) + " vs QMC "
                            + std::to_string(ref.qmc_value) + " (relative difference "
                            + std::to_string(ref.relative_difference) + ")");
    }
    return ref;
}

}  // namespace mlasg
