#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <iomanip>
#include <random>

#include "doctest.h"
#include "mlasg/kink.hpp"
#include "mlasg/sampling.hpp"

using namespace mlasg;

namespace {

const MultiIndex kLevel2({1, 1}, {0, 1});
const MultiIndex kLevel5({3, 2}, {1, 0});

}  // namespace

TEST_SUITE("analytic_models")
{
    TEST_CASE("kink values")
    {
        const KinkModel k{2};
        const double origin[] = {0.0, 0.0};
        // 10 / (exp(0.35 / 0.086) + 1) to 17 digits, evaluated with 50-digit arithmetic
        CHECK(k(origin) == doctest::Approx(0.16794487756002960).epsilon(1e-14));
        const double far[] = {0.6, 0.8};
        CHECK(k(far) == doctest::Approx(0.005 * kink_g1(0.6) / std::pow(0.005, 0.6)).epsilon(1e-13));
        CHECK(kink_g1(0.6) == doctest::Approx(9.4819024665472268).epsilon(1e-14));
    }

    TEST_CASE("kink is continuous and has a real kink")
    {
        for (std::size_t d : {1u, 3u, 7u}) {
            std::vector<double> x(d, 0.0);
            x[0] = 0.6;
            CHECK(kink_eval(KinkModel{d}, x) == kink_g1(0.6));
        }
        CHECK(std::abs(kink_g(0.6 - 1e-13) - kink_g(0.6)) < 1e-12);
        const double h = 1e-6;
        const double left = (kink_g(0.6 - h) - kink_g(0.6 - 2 * h)) / h;
        const double right = (kink_g(0.6 + 2 * h) - kink_g(0.6 + h)) / h;
        CHECK(std::abs(left - right) > 0.01);
    }

    TEST_CASE("kink profile is decreasing past the origin's logistic peak")
    {
        // g1 is an increasing logistic up to the kink; g2 decays after it
        double prev = kink_g(0.0);
        for (int k = 1; k <= 5000; ++k) {
            const double r = 0.6 * k / 5000.0;
            CHECK(kink_g(r) >= prev);
            prev = kink_g(r);
        }
        for (int k = 1; k <= 5000; ++k) {
            const double r = 0.6 + 2.0 * k / 5000.0;
            CHECK(kink_g(r) <= prev);
            prev = kink_g(r);
        }
    }

    TEST_CASE("noisy draws")
    {
        const auto f = [](std::span<const double> x) { return 1.0 + x[0]; };
        const double x[] = {0.25, 0.5};
        Rng rng = make_rng(1);
        const NoisyWrapper silent(2, f, NoiseLaw::fixed(0.0, 1.0));
        CHECK(noisy_draw(silent, x, kLevel2, rng).value == 1.25);
        CHECK(noisy_draw(silent, x, kLevel2, rng).cost == 1.0);

        const NoisyWrapper scheduled(2, f, NoiseLaw::scheduled(VarianceSchedule(1.0, 1e-2)));
        CHECK(noisy_draw(scheduled, x, kLevel5, rng).cost == 0.03125);
        CHECK(*scheduled.draw_variance({kLevel2, x}) == doctest::Approx(4e-4).epsilon(1e-14));

        SampleAccumulator acc;
        for (int k = 0; k < 10000; ++k) {
            const Draw d = noisy_draw(scheduled, x, kLevel2, rng);
            acc.add(d.value, d.cost);
        }
        CHECK(acc.sample_variance() == doctest::Approx(4e-4).epsilon(0.1));
        CHECK(acc.cost() == doctest::Approx(10000 * 0.25));
    }

    TEST_CASE("noisy draws are unbiased")
    {
        const NoisyWrapper w(1, [](std::span<const double>) { return 3.0; }, NoiseLaw::fixed(0.5, 1.0));
        const double x[] = {0.5};
        Rng rng = make_rng(8);
        SampleAccumulator acc;
        for (int k = 0; k < 1000000; ++k) {
            acc.add(noisy_draw(w, x, MultiIndex(1), rng).value, 0.0);
        }
        CHECK(std::abs(acc.mean() - 3.0) <= 4.0 * 0.5 / 1000.0);
        CHECK(w.law().cost(3) == 4.0);
    }

    TEST_CASE("reference integral in 1D against adaptive Gauss-Kronrod")
    {
        using boost::math::quadrature::gauss_kronrod;
        const auto g = [](double r) { return kink_g(r); };
        const double exact = gauss_kronrod<double, 61>::integrate(g, 0.0, 0.6, 15, 1e-14)
                             + gauss_kronrod<double, 61>::integrate(g, 0.6, 1.0, 15, 1e-14);
        ReferenceOptions o;
        o.qmc_points = 1'000'000;
        o.sg_tol = 1e-10;
        const ReferenceIntegral ref = reference_integral(KinkModel{1}, 1e-6, o);
        MESSAGE(std::setprecision(17) << ref.value << " vs " << exact);
        CHECK(ref.value == doctest::Approx(exact).epsilon(1e-7));
        CHECK(kink_radial_integral(1) == doctest::Approx(exact).epsilon(1e-10));
    }

    TEST_CASE("reference integral in 2D")
    {
        const ReferenceIntegral ref = reference_integral(KinkModel{2}, 1e-5);
        // frozen from the radial-distribution oracle
        CHECK(ref.value == doctest::Approx(3.68204681).epsilon(1e-6));
        CHECK(kink_radial_integral(2) == doctest::Approx(3.68204681).epsilon(1e-8));
        CHECK(ref.qmc_points == 10'000'000);
    }

    TEST_CASE("reference integral of a constant")
    {
        ReferenceOptions o;
        o.qmc_points = 10'000;
        const ReferenceIntegral ref =
            reference_integral([](std::span<const double>) { return 2.5; }, 3, 1e-10, o);
        CHECK(ref.value == 2.5);
        CHECK(ref.qmc_value == 2.5);
    }

    TEST_CASE("disagreeing methods are an oracle failure")
    {
        // a spike between sparse-grid nodes that QMC sees
        const auto spike = [](std::span<const double> x) { return std::abs(x[0] - 0.3) < 0.01 ? 100.0 : 0.0; };
        ReferenceOptions o;
        o.qmc_points = 100'000;
        o.sg_tol = 1e-3;
        CHECK_THROWS_AS(reference_integral(spike, 1, 1e-3, o), OracleFailure);
        CHECK_THROWS_AS(reference_integral(spike, 1, 1e-11, o), std::invalid_argument);
    }
}
