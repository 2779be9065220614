#pragma once

#include <cstddef>
#include <vector>

#include "mlasg/sampling.hpp"
#include "mlasg/sparse_grid.hpp"

namespace mlasg {

struct BaseCheck {
    bool passed = true;
    //! max over keys of w^2 * sum_m A^2 B^{|m|}; must be <= 1.
    double worst_ratio = 0.0;
    MultiIndex worst_key;
    //! worst_ratio restricted to keys of each total level 0..L_max.
    std::vector<double> worst_ratio_by_level;
    //! max over keys of sum_m A^2 B^{-|m|} / 4^{|l|} (the inequality as printed).
    double worst_ratio_printed_form = 0.0;
    std::size_t keys_checked = 0;
};

/*!
 * Exhaustive feasibility check of a level-variance base B on the full sparse
 * grid of total level <= max_level: the surplus variance produced by per-node
 * variances c tol^2 B^{|m|} must not exceed c tol^2 w^{-2} for any key.
 */
BaseCheck verify_B(std::size_t dimension, int max_level, double base);

//! sum_m A^2 Var(Y_bar_m) with the achieved node variances.
double propagated_surplus_variance(const MultiIndex& key, const SparseGrid& grid);

//! Same sum with the scheduled variances c tol^2 B^{|m|}.
double scheduled_surplus_variance(const MultiIndex& key, const SparseGrid& grid,
                                  const VarianceSchedule& schedule);

//! Weights W_m with sum_n nu_n w_n == sum_m W_m f(x_m), in node order.
std::vector<double> node_quadrature_weights(const SparseGrid& grid);

//! Var of the quadrature estimate: sum_m W_m^2 Var(Y_bar_m).
double quadrature_noise_variance(const SparseGrid& grid);

}  // namespace mlasg
