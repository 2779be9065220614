#include "mlasg/sparse_grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace mlasg {

SparseGrid::SparseGrid(std::size_t dimension) : dimension_(dimension)
{
    if (dimension == 0 || dimension > kMaxDimension) {
        throw std::domain_error("grid dimension must be in [1, " + std::to_string(kMaxDimension) + "]");
    }
}

const GridNode* SparseGrid::find(const MultiIndex& key) const
{
    auto it = index_.find(key);
    return it == index_.end() ? nullptr : &nodes_[it->second];
}

GridNode* SparseGrid::find(const MultiIndex& key)
{
    auto it = index_.find(key);
    return it == index_.end() ? nullptr : &nodes_[it->second];
}

const GridNode& SparseGrid::at(const MultiIndex& key) const
{
    if (const GridNode* node = find(key)) {
        return *node;
    }
    throw GridStructureError("node not present in grid");
}

GridNode& SparseGrid::at(const MultiIndex& key)
{
    if (GridNode* node = find(key)) {
        return *node;
    }
    throw GridStructureError("node not present in grid");
}

GridNode& SparseGrid::insert(const MultiIndex& key)
{
    if (key.dimension() != dimension_) {
        throw std::domain_error("key dimension does not match grid dimension");
    }
    auto [it, fresh] = index_.emplace(key, nodes_.size());
    if (!fresh) {
        throw GridStructureError("duplicate key inserted into grid");
    }
    GridNode node;
    node.key = key;
    node.coords = coordinates(key);
    node.weight = weight(key);
    nodes_.push_back(std::move(node));
    current_level_ = std::max(current_level_, key.total_level());
    return nodes_.back();
}

bool SparseGrid::is_ancestor_closed() const
{
    for (const GridNode& node : nodes_) {
        for (const MultiIndex& p : parents(node.key)) {
            if (!contains(p)) {
                return false;
            }
        }
    }
    return true;
}

SparseGrid full_sparse_grid(std::size_t dimension, int max_level)
{
    SparseGrid grid(dimension);
    for (int level = 0; level <= max_level; ++level) {
        for (const MultiIndex& key : keys_on_level(dimension, level)) {
            grid.insert(key);
        }
    }
    return grid;
}

namespace {

struct ChainEntry {
    std::uint32_t code;
    double value;
};

//! 1D hats with non-zero value at x, one per level, coarse to fine.
std::vector<ChainEntry> support_chain(double x, int max_depth)
{
    std::vector<ChainEntry> chain;
    chain.push_back({1, 1.0});
    if (max_depth < 1 || x == 0.5) {
        return chain;
    }
    Index1d current{1, x < 0.5 ? 0u : 1u};
    double value = x < 0.5 ? 1.0 - 2.0 * x : 2.0 * x - 1.0;
    while (true) {
        if (value <= 0.0) {
            break;
        }
        chain.push_back({(std::uint32_t{1} << current.level) + current.position, value});
        if (current.level >= max_depth) {
            break;
        }
        const double node = node_position_1d(current.level, current.position);
        Index1d next;
        if (current.level == 1) {
            next = {2, current.position};
        } else if (x < node) {
            next = {current.level + 1, 2 * current.position};
        } else if (x > node) {
            next = {current.level + 1, 2 * current.position + 1};
        } else {
            break;
        }
        current = next;
        value = basis_value_1d(current.level, current.position, x);
    }
    return chain;
}

class SupportDescent {
public:
    SupportDescent(const SparseGrid& grid, std::span<const double> x, int level_limit)
        : grid_(grid), limit_(level_limit), scratch_(grid.dimension()), depth_(grid.dimension(), 0)
    {
        chains_.reserve(x.size());
        for (double xj : x) {
            chains_.push_back(support_chain(xj, grid.current_level()));
        }
    }

    double run()
    {
        if (limit_ == 0) {
            return 0.0;
        }
        const GridNode* root = grid_.find(scratch_);
        if (root == nullptr) {
            return 0.0;
        }
        factor_.assign(chains_.size(), 1.0);
        visit(*root, 0, 1.0, 0);
        return sum_;
    }

private:
    void visit(const GridNode& node, std::size_t first_dim, double product, int level)
    {
        sum_ += node.surplus * product;
        if (limit_ >= 0 && level + 1 >= limit_) {
            return;
        }
        for (std::size_t d = first_dim; d < chains_.size(); ++d) {
            const std::size_t next = depth_[d] + 1;
            if (next >= chains_[d].size()) {
                continue;
            }
            const std::uint32_t saved = scratch_.code(d);
            scratch_.set_code(d, chains_[d][next].code);
            if (const GridNode* child = grid_.find(scratch_)) {
                const double saved_factor = factor_[d];
                depth_[d] = next;
                factor_[d] = chains_[d][next].value;
                double p = 1.0;
                for (double f : factor_) {
                    p *= f;
                }
                visit(*child, d, p, level + 1);
                factor_[d] = saved_factor;
                depth_[d] = next - 1;
            }
            scratch_.set_code(d, saved);
        }
    }

    const SparseGrid& grid_;
    int limit_;
    MultiIndex scratch_;
    std::vector<std::size_t> depth_;
    std::vector<std::vector<ChainEntry>> chains_;
    std::vector<double> factor_;
    double sum_ = 0.0;
};

}  // namespace

double interpolate(const SparseGrid& grid, std::span<const double> x, int level_limit)
{
    if (x.size() != grid.dimension()) {
        throw std::domain_error("point dimension does not match grid dimension");
    }
    for (double xj : x) {
        if (!(xj >= 0.0 && xj <= 1.0)) {
            throw std::domain_error("interpolation point outside the unit cube");
        }
    }
    return SupportDescent(grid, x, level_limit).run();
}

double compute_surplus(const SparseGrid& grid, const MultiIndex& key, double value)
{
    for (const MultiIndex& p : parents(key)) {
        const GridNode* parent = grid.find(p);
        if (parent == nullptr || !parent->has_surplus) {
            throw GridStructureError("ancestor missing or without surplus while computing a surplus");
        }
    }
    const std::vector<double> x = coordinates(key);
    return value - SupportDescent(grid, x, key.total_level()).run();
}

void hierarchize_pending(SparseGrid& grid)
{
    std::vector<MultiIndex> pending;
    for (const GridNode& node : grid.nodes()) {
        if (!node.has_surplus) {
            pending.push_back(node.key);
        }
    }
    std::sort(pending.begin(), pending.end(), ancestor_first_less);
    for (const MultiIndex& key : pending) {
        GridNode& node = grid.at(key);
        node.surplus = compute_surplus(grid, key, node.estimate);
        node.has_surplus = true;
    }
}

double integrate(const SparseGrid& grid)
{
    double sum = 0.0;
    for (const GridNode& node : grid.nodes()) {
        sum += node.surplus * node.weight;
    }
    return sum;
}

double SurplusCoefficients::coefficient(const MultiIndex& key) const
{
    auto it = std::lower_bound(entries.begin(), entries.end(), key,
                               [](const auto& e, const MultiIndex& k) { return e.first < k; });
    return (it != entries.end() && it->first == key) ? it->second : 0.0;
}

const SurplusExpansion::Row& SurplusExpansion::row(const MultiIndex& key)
{
    if (auto it = memo_.find(key); it != memo_.end()) {
        return it->second;
    }
    if (!grid_.contains(key)) {
        throw GridStructureError("ancestor missing while expanding surplus coefficients");
    }
    std::unordered_map<MultiIndex, double, MultiIndexHash> acc;
    acc[key] += 1.0;

    // Every coarser hat that is non-zero at x_key lies on the per-dimension
    // parent chains; enumerate their tensor product.
    const std::size_t dim = key.dimension();
    std::vector<std::vector<std::pair<Index1d, double>>> chains(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        const double xj = node_position_1d(key.level(j), key.position(j));
        for (std::optional<Index1d> a = key.index(j); a; a = parent_1d(*a)) {
            chains[j].push_back({*a, basis_value_1d(a->level, a->position, xj)});
        }
    }
    std::vector<std::size_t> pick(dim, 0);
    MultiIndex ancestor = key;
    while (true) {
        std::size_t j = 0;
        while (j < dim && ++pick[j] == chains[j].size()) {
            pick[j] = 0;
            ancestor.set(j, chains[j][0].first);
            ++j;
        }
        if (j == dim) {
            break;
        }
        ancestor.set(j, chains[j][pick[j]].first);
        double phi = 1.0;
        for (std::size_t d = 0; d < dim; ++d) {
            phi *= chains[d][pick[d]].second;
        }
        if (phi == 0.0) {
            continue;
        }
        const Row& sub = row(ancestor);
        for (const auto& [m, c] : sub) {
            acc[m] -= phi * c;
        }
    }

    Row out;
    out.reserve(acc.size());
    for (const auto& [m, c] : acc) {
        if (c != 0.0) {
            out.emplace_back(m, c);
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return memo_.emplace(key, std::move(out)).first->second;
}

SurplusCoefficients surplus_coefficients(const MultiIndex& key, const SparseGrid& grid)
{
    SurplusExpansion expansion(grid);
    return {key, expansion.row(key)};
}

std::string format_real(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> parts;
    std::string item;
    std::istringstream stream(s);
    while (std::getline(stream, item, sep)) {
        parts.push_back(item);
    }
    if (!s.empty() && s.back() == sep) {
        parts.emplace_back();
    }
    return parts;
}

double parse_real(const std::string& s)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
        throw std::runtime_error("checkpoint: malformed real '" + s + "'");
    }
    return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const SparseGrid& grid)
{
    out << "dimension=" << grid.dimension() << '\n';
    for (const GridNode& node : grid.nodes()) {
        for (std::size_t j = 0; j < grid.dimension(); ++j) {
            out << (j ? "," : "") << node.key.level(j);
        }
        out << ';';
        for (std::size_t j = 0; j < grid.dimension(); ++j) {
            out << (j ? "," : "") << node.key.position(j);
        }
        out << ';' << format_real(node.estimate) << ';' << format_real(node.variance_of_mean) << ';'
            << node.sample_count << ';' << format_real(node.cost_spent) << ';'
            << format_real(node.surplus) << '\n';
    }
}

SparseGrid read_checkpoint(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line.rfind("dimension=", 0) != 0) {
        throw std::runtime_error("checkpoint: missing dimension header");
    }
    SparseGrid grid(std::stoul(line.substr(10)));
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto fields = split(line, ';');
        if (fields.size() != 7) {
            throw std::runtime_error("checkpoint line " + std::to_string(line_no) + ": expected 7 fields");
        }
        const auto level_text = split(fields[0], ',');
        const auto pos_text = split(fields[1], ',');
        if (level_text.size() != grid.dimension() || pos_text.size() != grid.dimension()) {
            throw std::runtime_error("checkpoint line " + std::to_string(line_no) + ": wrong index length");
        }
        std::vector<int> levels;
        std::vector<std::int64_t> positions;
        for (std::size_t j = 0; j < grid.dimension(); ++j) {
            levels.push_back(std::stoi(level_text[j]));
            positions.push_back(std::stoll(pos_text[j]));
        }
        GridNode& node = grid.insert(MultiIndex(levels, positions));
        node.estimate = parse_real(fields[2]);
        node.variance_of_mean = parse_real(fields[3]);
        node.sample_count = std::stoull(fields[4]);
        node.cost_spent = parse_real(fields[5]);
        node.surplus = parse_real(fields[6]);
        node.has_surplus = true;
    }
    return grid;
}

}  // namespace mlasg
