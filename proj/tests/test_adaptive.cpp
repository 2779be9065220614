#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "mlasg/adaptive.hpp"
#include "mlasg/kink.hpp"

using namespace mlasg;

namespace {

GridNode node_with(double surplus, double weight)
{
    GridNode n;
    n.surplus = surplus;
    n.weight = weight;
    return n;
}

class Throwing final : public McModel {
public:
    std::size_t dimension() const override { return 2; }
    std::string name() const override { return "throwing"; }
    Draw draw(const SamplePoint& p, Rng&) const override
    {
        if (p.key.total_level() == 2) {
            throw std::runtime_error("solver diverged");
        }
        return {1.0 + p.x[0], 1.0};
    }
    std::optional<double> draw_variance(const SamplePoint&) const override { return 0.0; }
};

double distance_to_kink(std::span<const double> x)
{
    double r2 = 0.0;
    for (double v : x) {
        r2 += v * v;
    }
    return std::abs(std::sqrt(r2) - kKinkRadius);
}

NoisyWrapper kink_mlasg(std::size_t dim, double tol, double c = 1.0)
{
    return NoisyWrapper(dim, KinkModel{dim}, NoiseLaw::scheduled(VarianceSchedule(c, tol)));
}

}  // namespace

TEST_SUITE("adaptive_driver")
{
    TEST_CASE("indicator")
    {
        CHECK(indicator(node_with(2e-4, 0.25)) == doctest::Approx(5e-5).epsilon(1e-14));
        CHECK(indicator(node_with(0.0, 0.5)) == 0.0);
        CHECK(indicator(node_with(-0.5, 0.25)) == 0.125);
    }

    TEST_CASE("select_refinement")
    {
        SparseGrid g(1);
        GridNode& root = g.insert(MultiIndex(1));
        root.surplus = 1.0;
        CHECK(select_refinement(g, 1e-4) == std::vector{MultiIndex({1}, {0}), MultiIndex({1}, {1})});
        CHECK(select_refinement(g, 1.0).empty());  // strict comparison

        SparseGrid g2 = full_sparse_grid(2, 1);
        g2.at(MultiIndex({1, 0}, {0, 0})).surplus = 1.0;
        CHECK(select_refinement(g2, 1e-3) == children(MultiIndex({1, 0}, {0, 0})));
        CHECK(select_refinement(full_sparse_grid(2, 1), 1e-3).empty());
    }

    TEST_CASE("ancestor_closure")
    {
        SparseGrid g(1);
        g.insert(MultiIndex(1));
        CHECK(ancestor_closure(g, {MultiIndex({3}, {0})}) ==
              std::vector{MultiIndex({1}, {0}), MultiIndex({2}, {0}), MultiIndex({3}, {0})});

        SparseGrid g2(2);
        g2.insert(MultiIndex(2));
        CHECK(ancestor_closure(g2, {MultiIndex({1, 1}, {0, 0})}) ==
              std::vector{MultiIndex({0, 1}, {0, 0}), MultiIndex({1, 0}, {0, 0}), MultiIndex({1, 1}, {0, 0})});

        const SparseGrid closed = full_sparse_grid(2, 2);
        const std::vector fresh{MultiIndex({2, 1}, {0, 1})};
        CHECK(ancestor_closure(closed, fresh) == fresh);
        CHECK(ancestor_closure(closed, {MultiIndex({1, 1}, {0, 0})}).empty());
    }

    TEST_CASE("constant model stops after level 1")
    {
        const DeterministicModel five(3, [](std::span<const double>) { return 5.0; });
        RefinementConfig config;
        config.tol = 1e-4;
        const auto r = refine_loop(five, config);
        CHECK(r.grid.current_level() == 1);
        CHECK(r.grid.size() == 7);
        CHECK(r.report.iterations.back().integral_estimate == 5.0);
        CHECK_FALSE(r.report.cap_tripped);
        for (const GridNode& n : r.grid.nodes()) {
            if (n.key.total_level() == 1) {
                CHECK(n.surplus == 0.0);
            }
        }
    }

    TEST_CASE("MLASG refinement concentrates at the kink")
    {
        const auto model = kink_mlasg(2, 1e-4);
        RefinementConfig config;
        config.tol = 1e-4;
        const auto r = refine_loop(model, config, RunOptions{7});
        const int top = r.grid.current_level();
        std::size_t near = 0;
        std::size_t total = 0;
        for (const GridNode& n : r.grid.nodes()) {
            if (n.key.total_level() == top) {
                ++total;
                near += distance_to_kink(n.coords) < 0.1;
            }
        }
        MESSAGE("final level " << top << ": " << near << " of " << total << " nodes near the kink");
        CHECK(static_cast<double>(near) >= 0.6 * static_cast<double>(total));
    }

    TEST_CASE("large fixed noise spreads the refinement")
    {
        // sigma0 = 1e-2 = 100 tol
        const NoisyWrapper model(2, KinkModel{2}, NoiseLaw::fixed(1e-2, 1e-8));
        RefinementConfig config;
        config.mode = RefinementMode::AsgFixedVariance;
        config.tol = 1e-4;
        config.sigma0 = 1e-2;
        config.max_points = 200'000;
        const auto noisy = refine_loop(model, config, RunOptions{7});
        RefinementConfig exact = config;
        exact.sigma0 = 0.0;
        const auto clean = refine_loop(DeterministicModel(2, KinkModel{2}), exact);
        // deep nodes away from the kink only come from noise
        auto deep_far = [](const SparseGrid& g) {
            std::size_t far = 0;
            for (const GridNode& n : g.nodes()) {
                far += n.key.total_level() >= 8 && distance_to_kink(n.coords) > 0.2;
            }
            return far;
        };
        MESSAGE("deep nodes far from the kink: noisy " << deep_far(noisy.grid) << ", clean " << deep_far(clean.grid));
        CHECK(noisy.grid.size() > clean.grid.size());
        CHECK(deep_far(noisy.grid) > 3 * deep_far(clean.grid));
    }

    TEST_CASE("invariants along a run")
    {
        const auto model = kink_mlasg(3, 1e-3);
        RefinementConfig config;
        config.tol = 1e-3;
        const auto r = refine_loop(model, config, RunOptions{3});
        CHECK(r.grid.is_ancestor_closed());
        const auto& it = r.report.iterations;
        for (std::size_t k = 1; k < it.size(); ++k) {
            CHECK(it[k].num_points > it[k - 1].num_points);
            CHECK(it[k].cumulative_cost >= it[k - 1].cumulative_cost);
            CHECK(it[k].level == it[k - 1].level + 1);
        }
        double cost = 0.0;
        for (const GridNode& n : r.grid.nodes()) {
            cost += n.cost_spent;
            CHECK(n.has_surplus);
        }
        CHECK(cost == doctest::Approx(it.back().cumulative_cost).epsilon(1e-12));
    }

    TEST_CASE("noise-free MLASG and ASG coincide")
    {
        const DeterministicModel model(2, KinkModel{2});
        RefinementConfig ml;
        ml.tol = 1e-3;
        RefinementConfig asg = ml;
        asg.mode = RefinementMode::AsgFixedVariance;
        asg.sigma0 = 0.0;
        const auto a = refine_loop(model, ml);
        const auto b = refine_loop(model, asg);
        REQUIRE(a.grid.size() == b.grid.size());
        for (const GridNode& n : a.grid.nodes()) {
            CHECK(b.grid.at(n.key).surplus == n.surplus);
        }
        CHECK(a.report.iterations.back().integral_estimate == b.report.iterations.back().integral_estimate);
    }

    TEST_CASE("adaptive surpluses agree with the full sparse grid")
    {
        const DeterministicModel model(2, KinkModel{2});
        RefinementConfig config;
        config.tol = 1e-5;
        config.max_level = 6;
        const auto adaptive = refine_loop(model, config);
        RefinementConfig fsg = config;
        fsg.mode = RefinementMode::FsgSingleSample;
        const auto full = refine_loop(model, fsg);
        CHECK(full.grid.size() == full_sparse_grid(2, 6).size());
        for (const GridNode& n : adaptive.grid.nodes()) {
            CHECK(n.surplus == doctest::Approx(full.grid.at(n.key).surplus).epsilon(1e-12).scale(1.0));
        }
    }

    TEST_CASE("FSG evaluates every key level by level")
    {
        const DeterministicModel model(3, [](std::span<const double> x) { return x[0]; });
        RefinementConfig config;
        config.mode = RefinementMode::FsgSingleSample;
        config.max_level = 4;
        const auto r = refine_loop(model, config);
        CHECK(r.grid.size() == full_sparse_grid(3, 4).size());
        CHECK(r.report.iterations.size() == 5);
        CHECK(r.report.cap_reason == "max_level");
    }

    TEST_CASE("results do not depend on the thread count")
    {
        const auto model = kink_mlasg(2, 1e-3);
        RefinementConfig config;
        config.tol = 1e-3;
        const auto one = refine_loop(model, config, RunOptions{11, 0, 1});
        const auto four = refine_loop(model, config, RunOptions{11, 0, 4});
        std::ostringstream a;
        std::ostringstream b;
        write_run_report_csv(a, one.report);
        write_run_report_csv(b, four.report);
        CHECK(a.str() == b.str());
        std::ostringstream ga;
        std::ostringstream gb;
        write_checkpoint(ga, one.grid);
        write_checkpoint(gb, four.grid);
        CHECK(ga.str() == gb.str());
        const auto other = refine_loop(model, config, RunOptions{11, 1, 1});
        CHECK(other.report.iterations.back().integral_estimate != one.report.iterations.back().integral_estimate);
    }

    TEST_CASE("max_points cap is reported")
    {
        const DeterministicModel model(2, KinkModel{2});
        RefinementConfig config;
        config.tol = 1e-6;
        config.max_points = 100;
        const auto r = refine_loop(model, config);
        CHECK(r.report.cap_tripped);
        CHECK(r.report.cap_reason == "max_points");
        CHECK(r.grid.size() <= 100);
    }

    TEST_CASE("model failures carry the node")
    {
        const Throwing model;
        RefinementConfig config;
        config.tol = 1e-9;
        try {
            refine_loop(model, config);
            FAIL("expected ModelError");
        } catch (const ModelError& e) {
            CHECK(e.key().total_level() == 2);
            CHECK(std::string(e.what()).find("solver diverged") != std::string::npos);
        }
    }

    TEST_CASE("run report CSV round trip")
    {
        RunReport report;
        report.iterations.push_back({0, 0, 1, 1.0, 0.1 + 0.2, std::nullopt});
        report.iterations.push_back({1, 1, 5, 1.0 / 3.0, 2.0 / 7.0, 1e-17 / 3.0});
        std::stringstream s;
        write_run_report_csv(s, report);
        CHECK(s.str().rfind("iteration,level,num_points,cumulative_cost,integral_estimate,error\n", 0) == 0);
        const RunReport back = read_run_report_csv(s);
        REQUIRE(back.iterations.size() == 2);
        CHECK_FALSE(back.iterations[0].error.has_value());
        CHECK(back.iterations[0].integral_estimate == 0.1 + 0.2);
        CHECK(back.iterations[1].cumulative_cost == 1.0 / 3.0);
        CHECK(*back.iterations[1].error == 1e-17 / 3.0);
    }

    TEST_CASE("config validation")
    {
        RefinementConfig bad;
        bad.tol = 0.0;
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
        bad = {};
        bad.max_level = 0;
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
        bad = {};
        bad.B = 1.0;
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
        CHECK(parse_mode("asg") == RefinementMode::AsgFixedVariance);
        CHECK(parse_mode("MLASG") == RefinementMode::Mlasg);
        CHECK(parse_mode("fsg_single_sample") == RefinementMode::FsgSingleSample);
        CHECK_THROWS_AS(parse_mode("smolyak"), std::invalid_argument);
    }
}
