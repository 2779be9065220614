#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "doctest.h"
#include "mlasg/kmc.hpp"

using namespace mlasg;
using namespace mlasg::kmc;

namespace {

using S = SiteState;

std::size_t count_kind(const std::vector<Event>& table, EventKind kind)
{
    return static_cast<std::size_t>(
        std::count_if(table.begin(), table.end(), [&](const Event& e) { return e.kind == kind; }));
}

int occupied(const Chain& c)
{
    return static_cast<int>(std::count_if(c.begin(), c.end(), [](S s) { return s != S::Empty; }));
}

ChainConfig small(std::uint64_t seed, std::uint64_t steps = 20'000)
{
    return {20, steps, steps, seed};
}

}  // namespace

TEST_SUITE("kmc_lattice")
{
    TEST_CASE("unit cube to rates")
    {
        const ParameterBox box = ParameterBox::base();
        REQUIRE(box.dimension() == 7);
        const std::vector<double> mid(7, 0.5);
        const RateSet r = params_from_unit_cube(box, mid);
        const RateSet table;
        CHECK(r.k_reac == doctest::Approx(1.7e5).epsilon(1e-13));
        CHECK(r.K_CO == doctest::Approx(table.K_CO).epsilon(1e-13));
        CHECK(r.K_O2 == doctest::Approx(table.K_O2).epsilon(1e-13));
        CHECK(r.k_ads_CO == doctest::Approx(table.k_ads_CO).epsilon(1e-13));
        CHECK(r.k_ads_O2 == doctest::Approx(table.k_ads_O2).epsilon(1e-13));
        CHECK(r.k_diff_CO == doctest::Approx(table.k_diff_CO).epsilon(1e-13));
        CHECK(r.k_diff_O == doctest::Approx(table.k_diff_O).epsilon(1e-13));
        CHECK(r.k_des_CO() == r.k_ads_CO / r.K_CO);

        const RateSet lo = params_from_unit_cube(box, std::vector<double>(7, 0.0));
        const RateSet hi = params_from_unit_cube(box, std::vector<double>(7, 1.0));
        CHECK(lo.K_CO == box.ranges[0].low);
        CHECK(lo.k_reac == 1.7e3);
        CHECK(hi.K_O2 == box.ranges[1].high);
        CHECK(hi.k_reac == 1.7e7);
        CHECK(hi.k_diff_O == 6.6);

        CHECK_THROWS_AS(params_from_unit_cube(box, std::vector<double>(6, 0.5)), std::domain_error);
        CHECK_THROWS_AS(params_from_unit_cube(box, std::vector<double>{0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 1.5}),
                        std::domain_error);
    }

    TEST_CASE("log-uniform map stays in the box")
    {
        const ParameterBox box = ParameterBox::extended();
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int k = 0; k < 1000; ++k) {
            for (std::size_t j = 0; j < box.dimension(); ++j) {
                const double v = box.map(j, u(rng));
                CHECK(v >= box.ranges[j].low);
                CHECK(v <= box.ranges[j].high);
            }
        }
    }

    TEST_CASE("extended model adds three dummy species")
    {
        const ParameterBox box = ParameterBox::extended();
        REQUIRE(box.dimension() == 13);
        const RateSet r = params_from_unit_cube(box, std::vector<double>(13, 0.5));
        REQUIRE(r.dummies.size() == 3);
        for (const DummyRates& d : r.dummies) {
            CHECK(d.K == doctest::Approx(100.0).epsilon(1e-13));
            CHECK(d.k_des() == doctest::Approx(std::sqrt(1e5)).epsilon(1e-13));
        }
        const Chain empty(20, S::Empty);
        const auto table = build_event_table(empty, r);
        CHECK(table.size() == 20 + 60 + 20);
        CHECK(count_kind(table, EventKind::AdsB) == 60);

        Chain c(20, S::Empty);
        c[4] = S::B2;
        const auto t2 = build_event_table(c, r);
        CHECK(count_kind(t2, EventKind::DesB) == 1);
        // dummies neither hop nor react
        CHECK(count_kind(t2, EventKind::DiffCORight) + count_kind(t2, EventKind::DiffCOLeft) == 0);
        CHECK(CoOxidationModel::extended().name() == "co-oxidation-13");
        CHECK(CoOxidationModel::base().name() == "co-oxidation");
    }

    TEST_CASE("event table examples")
    {
        const RateSet r;
        const auto empty = build_event_table(Chain(20, S::Empty), r);
        CHECK(empty.size() == 40);
        CHECK(count_kind(empty, EventKind::AdsCO) == 20);
        CHECK(count_kind(empty, EventKind::AdsO2) == 20);

        const auto full = build_event_table(Chain(20, S::CO), r);
        CHECK(full.size() == 20);
        CHECK(count_kind(full, EventKind::DesCO) == 20);
        CHECK(full.front().propensity == r.k_des_CO());

        Chain alt(20);
        for (int l = 0; l < 20; ++l) {
            alt[l] = l % 2 == 0 ? S::CO : S::O;
        }
        const auto reac = build_event_table(alt, r);
        CHECK(count_kind(reac, EventKind::ReacCOO) == 10);
        CHECK(count_kind(reac, EventKind::ReacOCO) == 10);
        CHECK(count_kind(reac, EventKind::DesCO) == 10);
        CHECK(reac.size() == 20 + 10);
    }

    TEST_CASE("periodic wrap")
    {
        const RateSet r;
        Chain c(5, S::Empty);
        c[4] = S::CO;
        c[0] = S::O;
        const auto t = build_event_table(c, r);
        bool wrap_reaction = false;
        for (const Event& e : t) {
            wrap_reaction |= e.kind == EventKind::ReacCOO && e.site == 4;
        }
        CHECK(wrap_reaction);
    }

    TEST_CASE("stoichiometry")
    {
        const RateSet r;
        std::mt19937_64 rng(11);
        Chain c(20, S::Empty);
        for (int k = 0; k < 2000; ++k) {
            const auto table = build_event_table(c, r);
            REQUIRE_FALSE(table.empty());
            const Event e = table[rng() % table.size()];
            const Chain before = c;
            apply_event(c, e);
            int changed = 0;
            for (std::size_t l = 0; l < c.size(); ++l) {
                changed += before[l] != c[l];
            }
            CHECK(changed <= 2);
            const int delta = occupied(c) - occupied(before);
            switch (e.kind) {
            case EventKind::AdsCO: CHECK(delta == 1); break;
            case EventKind::DesCO: CHECK(delta == -1); break;
            case EventKind::AdsO2: CHECK(delta == 2); break;
            case EventKind::DesO2:
            case EventKind::ReacCOO:
            case EventKind::ReacOCO: CHECK(delta == -2); break;
            default:
                CHECK(delta == 0);
                CHECK(changed == 2);
            }
        }
        Chain full(4, S::CO);
        CHECK_THROWS_AS(apply_event(full, Event{EventKind::AdsCO, 0, 0, 1.0}), std::logic_error);
    }

    TEST_CASE("incremental table equals a rebuild")
    {
        RateSet r = params_from_unit_cube(ParameterBox::extended(), std::vector<double>(13, 0.3));
        Lattice lattice(Chain(20, S::Empty), r);
        std::mt19937_64 rng(5);
        for (int k = 0; k < 10000; ++k) {
            const auto rebuilt = build_event_table(lattice.chain(), r);
            const auto incremental = lattice.table();
            REQUIRE(incremental == rebuilt);
            double total = 0.0;
            for (const Event& e : rebuilt) {
                CHECK(e.propensity > 0.0);
                total += e.propensity;
            }
            CHECK(lattice.total_propensity() == doctest::Approx(total).epsilon(1e-12));
            const Event e = rebuilt[rng() % rebuilt.size()];
            lattice.fire(e);
            CHECK(lattice.co_count() == std::count(lattice.chain().begin(), lattice.chain().end(), S::CO));
        }
    }

    TEST_CASE("selection follows the cumulative propensities")
    {
        const RateSet r;
        Lattice lattice(Chain(20, S::Empty), r);
        const auto table = lattice.table();
        double acc = 0.0;
        for (const Event& e : table) {
            CHECK(lattice.select(acc + 0.5 * e.propensity) == e);
            acc += e.propensity;
        }
    }

    TEST_CASE("Langmuir coverage without oxygen")
    {
        RateSet r;
        r.k_reac = 0.0;
        r.k_ads_O2 = 0.0;
        r.K_CO = 1.5;
        r.k_ads_CO = 3.0;
        const auto est = coverage_estimator(small(21), r, 16);
        const double theta = r.K_CO / (1.0 + r.K_CO);
        const double se = std::sqrt(est.acc.variance_of_mean());
        MESSAGE("coverage " << est.acc.mean() << " +- " << se << ", expected " << theta);
        CHECK(std::abs(est.acc.mean() - theta) <= 3.0 * se);
        CHECK(est.absorbed_replicas == 0);
    }

    TEST_CASE("CO poisoning limit")
    {
        RateSet r;
        r.k_ads_CO = 1e8;
        r.K_CO = 1e12;
        r.k_ads_O2 = 1e-3;
        r.K_O2 = 1.0;
        r.k_reac = 1e-3;
        const SsaResult run = ssa_run(small(1), r);
        CHECK(run.coverage == doctest::Approx(1.0).epsilon(0.05));
        const auto est = coverage_estimator(small(2, 2000), r, 4);
        CHECK(est.acc.sample_variance() < 1e-6);
    }

    TEST_CASE("O poisoning limit")
    {
        RateSet r;
        r.k_ads_O2 = 1e8;
        r.K_O2 = 1e12;
        r.k_ads_CO = 1e-3;
        r.K_CO = 1.0;
        r.k_reac = 1e-3;
        const SsaResult run = ssa_run(small(1), r);
        CHECK(run.coverage <= 0.05);
    }

    TEST_CASE("same seed, same trajectory")
    {
        const RateSet r;
        const SsaResult a = ssa_run(small(77), r);
        const SsaResult b = ssa_run(small(77), r);
        CHECK(a.coverage == b.coverage);
        CHECK(a.steps == b.steps);
        CHECK(a.averaging_time == b.averaging_time);
        const SsaResult c = ssa_run(small(78), r);
        CHECK(c.averaging_time != a.averaging_time);
    }

    TEST_CASE("coverage bounds over random parameters")
    {
        const ParameterBox box = ParameterBox::base();
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int k = 0; k < 20; ++k) {
            std::vector<double> x(7);
            for (double& v : x) {
                v = u(rng);
            }
            const SsaResult run = ssa_run(small(k, 2000), params_from_unit_cube(box, x));
            CHECK(run.coverage >= 0.0);
            CHECK(run.coverage <= 1.0);
            CHECK(run.coverage >= run.min_coverage);
            CHECK(run.coverage <= run.max_coverage);
            CHECK(run.steps == 4000);
        }
    }

    TEST_CASE("coverage estimator")
    {
        const RateSet r;
        const auto one = coverage_estimator(small(5), r, 1);
        CHECK(one.acc.count() == 1);
        ChainConfig replica = small(5);
        replica.seed = derive_seed(5, {0});
        CHECK(one.acc.mean() == ssa_run(replica, r).coverage);
        CHECK(one.acc.cost() == 40'000.0);

        const auto many = coverage_estimator(ChainConfig::desk_scale(), r, 8, 2);
        MESSAGE("default rates: mean " << many.acc.mean() << ", sd " << std::sqrt(many.acc.sample_variance()));
        CHECK(many.acc.mean() > 0.0);
        CHECK(many.acc.mean() < 1.0);
        CHECK(std::isfinite(many.acc.sample_variance()));
        const auto serial = coverage_estimator(ChainConfig::desk_scale(), r, 8, 1);
        CHECK(serial.acc.mean() == many.acc.mean());
        CHECK_THROWS_AS(coverage_estimator(small(1), r, 0), std::invalid_argument);
    }

    TEST_CASE("trace CSV")
    {
        const RateSet r;
        std::ostringstream out;
        const SsaResult run = ssa_run({20, 100, 50, 3}, r, &out);
        std::istringstream in(out.str());
        std::string line;
        std::getline(in, line);
        CHECK(line == "event,time,coverage");
        int rows = 0;
        double last_time = 0.0;
        while (std::getline(in, line)) {
            ++rows;
            const double t = std::stod(line.substr(line.find(',') + 1));
            CHECK(t > last_time);
            last_time = t;
        }
        CHECK(rows == 50);
        CHECK(last_time == doctest::Approx(run.averaging_time).epsilon(1e-12));
    }

    TEST_CASE("model draws")
    {
        const CoOxidationModel model = CoOxidationModel::base(small(0, 1000));
        const std::vector<double> x(7, 0.5);
        const MultiIndex key(7);
        Rng a = make_rng(4);
        Rng b = make_rng(4);
        const Draw da = model.draw({key, x}, a);
        const Draw db = model.draw({key, x}, b);
        CHECK(da.value == db.value);
        CHECK(da.cost == 2000.0);
        CHECK_FALSE(model.draw_variance({key, x}).has_value());
        CHECK_THROWS_AS(model.draw({key, std::vector<double>(6, 0.5)}, a), std::domain_error);
    }
}
