#pragma once

#include <array>
#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mlasg {

inline constexpr std::size_t kMaxDimension = 16;
inline constexpr int kMaxLevel = 30;

//! One-dimensional hierarchical index (level l, position i).
struct Index1d {
    int level = 0;
    std::uint32_t position = 0;

    friend bool operator==(const Index1d&, const Index1d&) = default;
    friend auto operator<=>(const Index1d&, const Index1d&) = default;
};

//! Number of positions on a 1D level: 1, 2, 2^(l-1).
std::uint32_t positions_on_level(int level);

bool is_valid_1d(int level, std::int64_t position);

//! Node coordinate x_{l,i}; throws std::domain_error on an invalid pair.
double node_position_1d(int level, std::int64_t position);

//! Hat function phi_{l,i}(x).
double basis_value_1d(int level, std::int64_t position, double x);

//! Exact integral of phi_{l,i} over [0,1].
double weight_1d(int level, std::int64_t position);

std::optional<Index1d> parent_1d(Index1d index);
//! One or two children; empty only if level == kMaxLevel.
std::vector<Index1d> children_1d(Index1d index);

/*!
 * Level vector l and position vector i of one tensor-product basis function.
 *
 * Each 1D pair is packed into a code (level 0 -> 1, level l >= 1 -> 2^l + i)
 * so that keys are fixed-size, cheap to hash and cheap to copy.
 */
class MultiIndex {
public:
    MultiIndex() = default;

    //! The level-0 root in `dimension` dimensions.
    explicit MultiIndex(std::size_t dimension);

    MultiIndex(std::span<const int> levels, std::span<const std::int64_t> positions);
    MultiIndex(std::initializer_list<int> levels, std::initializer_list<std::int64_t> positions);

    std::size_t dimension() const { return dim_; }
    int level(std::size_t j) const { return std::bit_width(code_[j]) - 1; }
    std::uint32_t position(std::size_t j) const
    {
        return code_[j] - (std::uint32_t{1} << level(j));
    }
    Index1d index(std::size_t j) const { return {level(j), position(j)}; }
    int total_level() const { return total_level_; }

    void set(std::size_t j, Index1d index);

    std::vector<int> levels() const;
    std::vector<std::uint32_t> positions() const;

    //! Packed 1D code of dimension j; used by traversal code.
    std::uint32_t code(std::size_t j) const { return code_[j]; }
    void set_code(std::size_t j, std::uint32_t code);

    //! Platform-independent 64-bit hash (also used to derive RNG streams).
    std::uint64_t hash() const;

    friend bool operator==(const MultiIndex& a, const MultiIndex& b);
    //! Lexicographic by (levels, positions).
    friend std::strong_ordering operator<=>(const MultiIndex& a, const MultiIndex& b);

private:
    std::array<std::uint32_t, kMaxDimension> code_{};
    std::uint8_t dim_ = 0;
    std::int32_t total_level_ = 0;
};

struct MultiIndexHash {
    std::size_t operator()(const MultiIndex& key) const noexcept
    {
        return static_cast<std::size_t>(key.hash());
    }
};

//! Canonical order used for deterministic evaluation: total level, then lexicographic.
bool ancestor_first_less(const MultiIndex& a, const MultiIndex& b);

std::vector<double> coordinates(const MultiIndex& key);

//! Product of 1D weights.
double weight(const MultiIndex& key);

//! Product of 1D hat values at x.
double basis_value(const MultiIndex& key, std::span<const double> x);

//! Keys of total level one less with overlapping support, sorted.
std::vector<MultiIndex> parents(const MultiIndex& key);

//! Keys of total level one more with overlapping support, sorted.
std::vector<MultiIndex> children(const MultiIndex& key);

//! Every key of the non-adaptive sparse grid with total level exactly `level`,
//! in ascending lexicographic order.
std::vector<MultiIndex> keys_on_level(std::size_t dimension, int level);

}  // namespace mlasg
