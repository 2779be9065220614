#include "mlasg/multi_index.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mlasg {

namespace {

std::uint32_t encode(int level, std::uint32_t position)
{
    return (std::uint32_t{1} << level) + position;
}

void require_valid(int level, std::int64_t position)
{
    if (!is_valid_1d(level, position)) {
        throw std::domain_error("invalid 1D hierarchical index (l=" + std::to_string(level)
                                + ", i=" + std::to_string(position) + ")");
    }
}

}  // namespace

std::uint32_t positions_on_level(int level)
{
    if (level <= 0) {
        return 1;
    }
    if (level == 1) {
        return 2;
    }
    return std::uint32_t{1} << (level - 1);
}

bool is_valid_1d(int level, std::int64_t position)
{
    if (level < 0 || level > kMaxLevel || position < 0) {
        return false;
    }
    return position < static_cast<std::int64_t>(positions_on_level(level));
}

double node_position_1d(int level, std::int64_t position)
{
    require_valid(level, position);
    if (level == 0) {
        return 0.5;
    }
    if (level == 1) {
        return position == 0 ? 0.0 : 1.0;
    }
    if (level == 2) {
        return position == 0 ? 0.25 : 0.75;
    }
    // x_{l,i} = x_{l-1, i/2} - (-1)^i / 2^l, unrolled from level 2 upwards.
    double x = (position >> (level - 2)) % 2 == 0 ? 0.25 : 0.75;
    for (int l = 3; l <= level; ++l) {
        const auto i = position >> (level - l);
        const double step = std::ldexp(1.0, -l);
        x += (i % 2 == 0) ? -step : step;
    }
    return x;
}

double basis_value_1d(int level, std::int64_t position, double x)
{
    require_valid(level, position);
    if (level == 0) {
        return 1.0;
    }
    const double scaled = std::ldexp(std::abs(x - node_position_1d(level, position)), level);
    return std::max(1.0 - scaled, 0.0);
}

double weight_1d(int level, std::int64_t position)
{
    require_valid(level, position);
    if (level == 0) {
        return 1.0;
    }
    if (level == 1) {
        return 0.25;
    }
    return std::ldexp(1.0, -level);
}

std::optional<Index1d> parent_1d(Index1d index)
{
    require_valid(index.level, index.position);
    switch (index.level) {
    case 0:
        return std::nullopt;
    case 1:
        return Index1d{0, 0};
    case 2:
        return Index1d{1, index.position};
    default:
        return Index1d{index.level - 1, index.position / 2};
    }
}

std::vector<Index1d> children_1d(Index1d index)
{
    require_valid(index.level, index.position);
    if (index.level == kMaxLevel) {
        return {};
    }
    switch (index.level) {
    case 0:
        return {{1, 0}, {1, 1}};
    case 1:
        return {{2, index.position}};
    default:
        return {{index.level + 1, 2 * index.position}, {index.level + 1, 2 * index.position + 1}};
    }
}

MultiIndex::MultiIndex(std::size_t dimension)
{
    if (dimension == 0 || dimension > kMaxDimension) {
        throw std::domain_error("dimension must be in [1, " + std::to_string(kMaxDimension) + "]");
    }
    dim_ = static_cast<std::uint8_t>(dimension);
    std::fill_n(code_.begin(), dimension, std::uint32_t{1});
}

MultiIndex::MultiIndex(std::span<const int> levels, std::span<const std::int64_t> positions)
    : MultiIndex(levels.size())
{
    if (levels.size() != positions.size()) {
        throw std::domain_error("levels and positions differ in length");
    }
    for (std::size_t j = 0; j < levels.size(); ++j) {
        require_valid(levels[j], positions[j]);
        set(j, {levels[j], static_cast<std::uint32_t>(positions[j])});
    }
}

MultiIndex::MultiIndex(std::initializer_list<int> levels,
                       std::initializer_list<std::int64_t> positions)
    : MultiIndex(std::span<const int>(levels.begin(), levels.size()),
                 std::span<const std::int64_t>(positions.begin(), positions.size()))
{
}

void MultiIndex::set(std::size_t j, Index1d index)
{
    require_valid(index.level, index.position);
    set_code(j, encode(index.level, index.position));
}

void MultiIndex::set_code(std::size_t j, std::uint32_t code)
{
    total_level_ += (std::bit_width(code) - 1) - level(j);
    code_[j] = code;
}

std::vector<int> MultiIndex::levels() const
{
    std::vector<int> out(dim_);
    for (std::size_t j = 0; j < dim_; ++j) {
        out[j] = level(j);
    }
    return out;
}

std::vector<std::uint32_t> MultiIndex::positions() const
{
    std::vector<std::uint32_t> out(dim_);
    for (std::size_t j = 0; j < dim_; ++j) {
        out[j] = position(j);
    }
    return out;
}

std::uint64_t MultiIndex::hash() const
{
    // splitmix64 finaliser folded over the codes
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ dim_;
    for (std::size_t j = 0; j < dim_; ++j) {
        h += code_[j] + 0x9e3779b97f4a7c15ULL;
        h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
        h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
        h ^= h >> 31;
    }
    return h;
}

bool operator==(const MultiIndex& a, const MultiIndex& b)
{
    return a.dim_ == b.dim_ && std::equal(a.code_.begin(), a.code_.begin() + a.dim_, b.code_.begin());
}

std::strong_ordering operator<=>(const MultiIndex& a, const MultiIndex& b)
{
    if (auto c = a.dim_ <=> b.dim_; c != 0) {
        return c;
    }
    for (std::size_t j = 0; j < a.dim_; ++j) {
        if (auto c = a.level(j) <=> b.level(j); c != 0) {
            return c;
        }
    }
    for (std::size_t j = 0; j < a.dim_; ++j) {
        if (auto c = a.position(j) <=> b.position(j); c != 0) {
            return c;
        }
    }
    return std::strong_ordering::equal;
}

bool ancestor_first_less(const MultiIndex& a, const MultiIndex& b)
{
    if (a.total_level() != b.total_level()) {
        return a.total_level() < b.total_level();
    }
    return a < b;
}

std::vector<double> coordinates(const MultiIndex& key)
{
    std::vector<double> x(key.dimension());
    for (std::size_t j = 0; j < x.size(); ++j) {
        x[j] = node_position_1d(key.level(j), key.position(j));
    }
    return x;
}

double weight(const MultiIndex& key)
{
    double w = 1.0;
    for (std::size_t j = 0; j < key.dimension(); ++j) {
        w *= weight_1d(key.level(j), key.position(j));
    }
    return w;
}

double basis_value(const MultiIndex& key, std::span<const double> x)
{
    double v = 1.0;
    for (std::size_t j = 0; j < key.dimension() && v != 0.0; ++j) {
        v *= basis_value_1d(key.level(j), key.position(j), x[j]);
    }
    return v;
}

std::vector<MultiIndex> parents(const MultiIndex& key)
{
    std::vector<MultiIndex> out;
    for (std::size_t j = 0; j < key.dimension(); ++j) {
        if (auto p = parent_1d(key.index(j))) {
            MultiIndex parent = key;
            parent.set(j, *p);
            out.push_back(parent);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<MultiIndex> children(const MultiIndex& key)
{
    std::vector<MultiIndex> out;
    for (std::size_t j = 0; j < key.dimension(); ++j) {
        for (const Index1d& c : children_1d(key.index(j))) {
            MultiIndex child = key;
            child.set(j, c);
            out.push_back(child);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

void enumerate_positions(const std::vector<int>& levels, std::size_t j, MultiIndex& scratch,
                         std::vector<MultiIndex>& out)
{
    if (j == levels.size()) {
        out.push_back(scratch);
        return;
    }
    const std::uint32_t count = positions_on_level(levels[j]);
    for (std::uint32_t i = 0; i < count; ++i) {
        scratch.set(j, {levels[j], i});
        enumerate_positions(levels, j + 1, scratch, out);
    }
}

void enumerate_levels(std::size_t dimension, std::size_t j, int remaining,
                      std::vector<int>& levels, std::vector<MultiIndex>& out)
{
    if (j + 1 == dimension) {
        levels[j] = remaining;
        MultiIndex scratch(dimension);
        enumerate_positions(levels, 0, scratch, out);
        return;
    }
    for (int l = 0; l <= remaining; ++l) {
        levels[j] = l;
        enumerate_levels(dimension, j + 1, remaining - l, levels, out);
    }
}

}  // namespace

std::vector<MultiIndex> keys_on_level(std::size_t dimension, int level)
{
    if (level < 0) {
        return {};
    }
    std::vector<MultiIndex> out;
    std::vector<int> levels(dimension, 0);
    enumerate_levels(dimension, 0, level, levels, out);
    return out;
}

}  // namespace mlasg
