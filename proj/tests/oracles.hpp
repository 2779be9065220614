#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the grid traversal code under test.

#include <cmath>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "mlasg/multi_index.hpp"

namespace oracle {

// 1D hierarchical surplus as a point stencil: level 0 -> f(.5),
// level 1 -> f(x) - f(.5), level >= 2 -> f(x) - (f(x-h) + f(x+h)) / 2.
inline std::vector<std::pair<double, double>> stencil_1d(int level, double x)
{
    if (level == 0) {
        return {{0.5, 1.0}};
    }
    if (level == 1) {
        return {{x, 1.0}, {0.5, -1.0}};
    }
    const double h = std::ldexp(1.0, -level);
    return {{x, 1.0}, {x - h, -0.5}, {x + h, -0.5}};
}

// Surplus of key for f: tensor product of the 1D stencils.
inline double tensor_surplus(const mlasg::MultiIndex& key, const std::function<double(std::span<const double>)>& f)
{
    const std::size_t d = key.dimension();
    std::vector<std::vector<std::pair<double, double>>> st(d);
    for (std::size_t j = 0; j < d; ++j) {
        st[j] = stencil_1d(key.level(j), mlasg::node_position_1d(key.level(j), key.position(j)));
    }
    std::vector<std::size_t> pick(d, 0);
    std::vector<double> x(d);
    double sum = 0.0;
    while (true) {
        double c = 1.0;
        for (std::size_t j = 0; j < d; ++j) {
            x[j] = st[j][pick[j]].first;
            c *= st[j][pick[j]].second;
        }
        sum += c * f(x);
        std::size_t j = 0;
        while (j < d && ++pick[j] == st[j].size()) {
            pick[j++] = 0;
        }
        if (j == d) {
            break;
        }
    }
    return sum;
}

// Hat function written out from its definition.
inline double hat(int level, double node, double x)
{
    if (level == 0) {
        return 1.0;
    }
    return std::max(0.0, 1.0 - std::abs(x - node) * std::pow(2.0, level));
}

// Brute force interpolant: sum over all nodes.
template <class Grid>
double brute_interpolate(const Grid& grid, std::span<const double> x)
{
    double sum = 0.0;
    for (const auto& node : grid.nodes()) {
        double b = 1.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            b *= hat(node.key.level(j), node.coords[j], x[j]);
        }
        sum += node.surplus * b;
    }
    return sum;
}

}  // namespace oracle
