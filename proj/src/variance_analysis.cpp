#include "mlasg/variance_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace mlasg {

namespace {

// Rows of coarse keys are shared by many descendants; drop the memo once it
// grows past this many rows to bound memory on large grids.
constexpr std::size_t kMemoLimit = 200'000;

}  // namespace

BaseCheck verify_B(std::size_t dimension, int max_level, double base)
{
    const SparseGrid grid = full_sparse_grid(dimension, max_level);
    SurplusExpansion expansion(grid);

    BaseCheck check;
    check.worst_key = MultiIndex(dimension);
    check.worst_ratio_by_level.assign(static_cast<std::size_t>(max_level) + 1, 0.0);

    for (const GridNode& node : grid.nodes()) {
        if (expansion.cached() > kMemoLimit) {
            expansion.clear();
        }
        const auto& row = expansion.row(node.key);
        double derived = 0.0;
        double printed = 0.0;
        for (const auto& [m, a] : row) {
            derived += a * a * std::pow(base, m.total_level());
            printed += a * a * std::pow(base, -m.total_level());
        }
        const double ratio = derived * node.weight * node.weight;
        const double printed_ratio = printed / std::pow(4.0, node.key.total_level());

        auto& by_level = check.worst_ratio_by_level[static_cast<std::size_t>(node.key.total_level())];
        by_level = std::max(by_level, ratio);
        if (ratio > check.worst_ratio) {
            check.worst_ratio = ratio;
            check.worst_key = node.key;
        }
        check.worst_ratio_printed_form = std::max(check.worst_ratio_printed_form, printed_ratio);
        ++check.keys_checked;
    }
    check.passed = check.worst_ratio <= 1.0;
    return check;
}

double propagated_surplus_variance(const MultiIndex& key, const SparseGrid& grid)
{
    double sum = 0.0;
    for (const auto& [m, a] : surplus_coefficients(key, grid).entries) {
        sum += a * a * grid.at(m).variance_of_mean;
    }
    return sum;
}

double scheduled_surplus_variance(const MultiIndex& key, const SparseGrid& grid,
                                  const VarianceSchedule& schedule)
{
    double sum = 0.0;
    for (const auto& [m, a] : surplus_coefficients(key, grid).entries) {
        sum += a * a * schedule.target(m.total_level());
    }
    return sum;
}

std::vector<double> node_quadrature_weights(const SparseGrid& grid)
{
    std::unordered_map<MultiIndex, std::size_t, MultiIndexHash> slot;
    slot.reserve(grid.size());
    for (std::size_t n = 0; n < grid.size(); ++n) {
        slot.emplace(grid.nodes()[n].key, n);
    }
    std::vector<MultiIndex> order;
    order.reserve(grid.size());
    for (const GridNode& node : grid.nodes()) {
        order.push_back(node.key);
    }
    std::sort(order.begin(), order.end(), ancestor_first_less);

    std::vector<double> weights(grid.size(), 0.0);
    SurplusExpansion expansion(grid);
    for (const MultiIndex& key : order) {
        if (expansion.cached() > kMemoLimit) {
            expansion.clear();
        }
        const double w = grid.at(key).weight;
        for (const auto& [m, a] : expansion.row(key)) {
            weights[slot.at(m)] += a * w;
        }
    }
    return weights;
}

double quadrature_noise_variance(const SparseGrid& grid)
{
    const std::vector<double> weights = node_quadrature_weights(grid);
    double sum = 0.0;
    for (std::size_t n = 0; n < grid.size(); ++n) {
        sum += weights[n] * weights[n] * grid.nodes()[n].variance_of_mean;
    }
    return sum;
}

}  // namespace mlasg
