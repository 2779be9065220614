#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mlasg/multi_index.hpp"

namespace mlasg {

//! A grid operation found the ancestor-closure invariant violated.
class GridStructureError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct GridNode {
    MultiIndex key;
    std::vector<double> coords;
    double estimate = 0.0;
    double variance_of_mean = 0.0;
    std::uint64_t sample_count = 0;
    double cost_spent = 0.0;
    double surplus = 0.0;
    double weight = 0.0;
    bool has_surplus = false;
};

/*!
 * Active node set of a locally refined sparse grid.
 *
 * Nodes are kept in insertion order (which the driver makes deterministic)
 * with a hash index on the key. Parent/child topology is not stored; it is
 * derived from key arithmetic on demand.
 */
class SparseGrid {
public:
    explicit SparseGrid(std::size_t dimension);

    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }
    //! Maximum total level present; 0 for an empty grid.
    int current_level() const { return current_level_; }

    bool contains(const MultiIndex& key) const { return index_.count(key) != 0; }
    const GridNode* find(const MultiIndex& key) const;
    GridNode* find(const MultiIndex& key);
    const GridNode& at(const MultiIndex& key) const;
    GridNode& at(const MultiIndex& key);

    //! Adds a node with coordinates and weight filled in; throws on duplicates.
    GridNode& insert(const MultiIndex& key);

    std::span<const GridNode> nodes() const { return nodes_; }
    std::span<GridNode> nodes() { return nodes_; }

    //! Every node's parents are present.
    bool is_ancestor_closed() const;

private:
    std::size_t dimension_;
    int current_level_ = 0;
    std::vector<GridNode> nodes_;
    std::unordered_map<MultiIndex, std::size_t, MultiIndexHash> index_;
};

//! Non-adaptive sparse grid of all keys with total level <= max_level, no values.
SparseGrid full_sparse_grid(std::size_t dimension, int max_level);

//! Sum of surplus * basis over nodes whose support contains x, restricted to
//! nodes with total level < level_limit (negative: no restriction).
double interpolate(const SparseGrid& grid, std::span<const double> x, int level_limit = -1);

//! value - u_{|l|-1}(x_l); requires every parent of key present with a surplus.
double compute_surplus(const SparseGrid& grid, const MultiIndex& key, double value);

//! Sets the surplus of every node lacking one, in ancestor-first order, from its estimate.
void hierarchize_pending(SparseGrid& grid);

//! Sum of surplus * weight in node order.
double integrate(const SparseGrid& grid);

struct SurplusCoefficients {
    MultiIndex target;
    //! Sorted by key; exact zeros dropped.
    std::vector<std::pair<MultiIndex, double>> entries;

    double coefficient(const MultiIndex& key) const;
};

/*!
 * Expands the surplus recursion into node values,
 *   row(k) = e_k - sum_a phi_a(x_k) row(a),
 * over the coarser nodes a whose hats are non-zero at x_k. Rows are memoised,
 * so one expansion object should be reused across related keys.
 */
class SurplusExpansion {
public:
    using Row = std::vector<std::pair<MultiIndex, double>>;

    explicit SurplusExpansion(const SparseGrid& grid) : grid_(grid) {}

    //! Sorted by key, exact zeros dropped. Throws GridStructureError on a missing ancestor.
    const Row& row(const MultiIndex& key);

    std::size_t cached() const { return memo_.size(); }
    void clear() { memo_.clear(); }

private:
    const SparseGrid& grid_;
    std::unordered_map<MultiIndex, Row, MultiIndexHash> memo_;
};

//! Row of the linear map from node values to the surplus at key.
SurplusCoefficients surplus_coefficients(const MultiIndex& key, const SparseGrid& grid);

//! %.17g, enough to read back the same double.
std::string format_real(double v);

//! Checkpoint format: header `dimension=D`, then one line per node
//! `levels;positions;estimate;variance_of_mean;sample_count;cost_spent;surplus`.
void write_checkpoint(std::ostream& out, const SparseGrid& grid);
SparseGrid read_checkpoint(std::istream& in);

}  // namespace mlasg
