#include "mlasg/kmc.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>

#include "mlasg/parallel.hpp"

namespace mlasg::kmc {

void RateSet::validate() const
{
    const double rates[] = {k_ads_CO, k_ads_O2, k_diff_CO, k_diff_O, k_reac};
    for (double r : rates) {
        if (!std::isfinite(r) || r < 0.0) {
            throw std::invalid_argument("kmc rates must be finite and non-negative");
        }
    }
    if (!(K_CO > 0.0) || !(K_O2 > 0.0)) {
        throw std::invalid_argument("equilibrium constants must be positive");
    }
    if (dummies.size() > kMaxDummies) {
        throw std::invalid_argument("at most 3 dummy species");
    }
    for (const DummyRates& d : dummies) {
        if (!std::isfinite(d.k_ads) || d.k_ads < 0.0 || !(d.K > 0.0)) {
            throw std::invalid_argument("invalid dummy species rates");
        }
    }
}

ParameterBox ParameterBox::base()
{
    return {{
        {"K_CO", 2.0 / 9.2, 2.0 / 9.2 * 1e4},
        {"K_O2", 9.7 / 2.8 * 1e4, 9.7 / 2.8 * 1e8},
        {"k_ads_CO", 1.0e8, 4.0e8},
        {"k_ads_O2", 4.85e7, 1.94e8},
        {"k_diff_CO", 5.0e-3, 5.0e1},
        {"k_diff_O", 6.6e-4, 6.6e0},
        {"k_reac", 1.7e3, 1.7e7},
    }};
}

ParameterBox ParameterBox::extended()
{
    ParameterBox box = base();
    for (std::size_t i = 1; i <= kMaxDummies; ++i) {
        box.ranges.push_back({"k_des_B" + std::to_string(i), 1.0, 1e5});
        box.ranges.push_back({"K_B" + std::to_string(i), 1.0, 1e4});
    }
    return box;
}

double ParameterBox::map(std::size_t j, double u) const
{
    const Range& r = ranges.at(j);
    if (!(u >= 0.0 && u <= 1.0)) {
        throw std::domain_error("parameter coordinate outside [0,1]");
    }
    if (u == 1.0) {
        return r.high;
    }
    return r.low * std::pow(r.high / r.low, u);
}

RateSet params_from_unit_cube(const ParameterBox& box, std::span<const double> u)
{
    const std::size_t d = box.dimension();
    if (u.size() != d || (d != 7 && d != 7 + 2 * kMaxDummies)) {
        throw std::domain_error("expected 7 or 13 parameters, got " + std::to_string(u.size()));
    }
    RateSet r;
    r.K_CO = box.map(0, u[0]);
    r.K_O2 = box.map(1, u[1]);
    r.k_ads_CO = box.map(2, u[2]);
    r.k_ads_O2 = box.map(3, u[3]);
    r.k_diff_CO = box.map(4, u[4]);
    r.k_diff_O = box.map(5, u[5]);
    r.k_reac = box.map(6, u[6]);
    for (std::size_t j = 7; j < d; j += 2) {
        const double k_des = box.map(j, u[j]);
        const double K = box.map(j + 1, u[j + 1]);
        r.dummies.push_back({k_des * K, K});
    }
    return r;
}

std::string to_string(EventKind kind)
{
    switch (kind) {
    case EventKind::AdsCO: return "ads_CO";
    case EventKind::DesCO: return "des_CO";
    case EventKind::AdsB: return "ads_B";
    case EventKind::DesB: return "des_B";
    case EventKind::AdsO2: return "ads_O2";
    case EventKind::DesO2: return "des_O2";
    case EventKind::DiffCORight: return "diff_CO_right";
    case EventKind::DiffCOLeft: return "diff_CO_left";
    case EventKind::DiffORight: return "diff_O_right";
    case EventKind::DiffOLeft: return "diff_O_left";
    case EventKind::ReacCOO: return "reac_CO_O";
    case EventKind::ReacOCO: return "reac_O_CO";
    }
    return "unknown";
}

namespace {

using S = SiteState;

SiteState dummy_state(int i)
{
    return static_cast<SiteState>(static_cast<int>(S::B1) + i);
}

}  // namespace

std::vector<Event> build_event_table(std::span<const SiteState> chain, const RateSet& rates)
{
    std::vector<Event> table;
    const int n = static_cast<int>(chain.size());
    const int dummies = static_cast<int>(rates.dummies.size());
    auto push = [&](EventKind kind, int site, int species, double rate) {
        if (rate > 0.0) {
            table.push_back({kind, site, species, rate});
        }
    };
    for (int l = 0; l < n; ++l) {
        const S s = chain[l];
        if (s == S::Empty) {
            push(EventKind::AdsCO, l, 0, rates.k_ads_CO);
        }
        if (s == S::CO) {
            push(EventKind::DesCO, l, 0, rates.k_des_CO());
        }
        for (int i = 0; i < dummies; ++i) {
            if (s == S::Empty) {
                push(EventKind::AdsB, l, i, rates.dummies[i].k_ads);
            }
        }
        for (int i = 0; i < dummies; ++i) {
            if (s == dummy_state(i)) {
                push(EventKind::DesB, l, i, rates.dummies[i].k_des());
            }
        }
    }
    for (int l = 0; l < n; ++l) {
        const S a = chain[l];
        const S b = chain[(l + 1) % n];
        if (a == S::Empty && b == S::Empty) {
            push(EventKind::AdsO2, l, 0, rates.k_ads_O2);
        }
        if (a == S::O && b == S::O) {
            push(EventKind::DesO2, l, 0, rates.k_des_O2());
        }
        if (a == S::CO && b == S::Empty) {
            push(EventKind::DiffCORight, l, 0, rates.k_diff_CO);
        }
        if (a == S::Empty && b == S::CO) {
            push(EventKind::DiffCOLeft, l, 0, rates.k_diff_CO);
        }
        if (a == S::O && b == S::Empty) {
            push(EventKind::DiffORight, l, 0, rates.k_diff_O);
        }
        if (a == S::Empty && b == S::O) {
            push(EventKind::DiffOLeft, l, 0, rates.k_diff_O);
        }
        if (a == S::CO && b == S::O) {
            push(EventKind::ReacCOO, l, 0, rates.k_reac);
        }
        if (a == S::O && b == S::CO) {
            push(EventKind::ReacOCO, l, 0, rates.k_reac);
        }
    }
    return table;
}

void apply_event(Chain& chain, const Event& e)
{
    const int n = static_cast<int>(chain.size());
    S& a = chain.at(e.site);
    S& b = chain[(e.site + 1) % n];
    auto expect = [](bool ok) {
        if (!ok) {
            throw std::logic_error("event not enabled in the current chain");
        }
    };
    switch (e.kind) {
    case EventKind::AdsCO: expect(a == S::Empty); a = S::CO; break;
    case EventKind::DesCO: expect(a == S::CO); a = S::Empty; break;
    case EventKind::AdsB: expect(a == S::Empty); a = dummy_state(e.species); break;
    case EventKind::DesB: expect(a == dummy_state(e.species)); a = S::Empty; break;
    case EventKind::AdsO2: expect(a == S::Empty && b == S::Empty); a = b = S::O; break;
    case EventKind::DesO2: expect(a == S::O && b == S::O); a = b = S::Empty; break;
    case EventKind::DiffCORight: expect(a == S::CO && b == S::Empty); std::swap(a, b); break;
    case EventKind::DiffCOLeft: expect(a == S::Empty && b == S::CO); std::swap(a, b); break;
    case EventKind::DiffORight: expect(a == S::O && b == S::Empty); std::swap(a, b); break;
    case EventKind::DiffOLeft: expect(a == S::Empty && b == S::O); std::swap(a, b); break;
    case EventKind::ReacCOO: expect(a == S::CO && b == S::O); a = b = S::Empty; break;
    case EventKind::ReacOCO: expect(a == S::O && b == S::CO); a = b = S::Empty; break;
    }
}

double co_coverage(std::span<const SiteState> chain)
{
    const auto co = std::count(chain.begin(), chain.end(), S::CO);
    return static_cast<double>(co) / static_cast<double>(chain.size());
}

namespace {

// site slots: AdsCO, DesCO, AdsB1..3, DesB1..3
constexpr EventKind kSiteKinds[Lattice::kSiteSlots] = {
    EventKind::AdsCO, EventKind::DesCO, EventKind::AdsB, EventKind::AdsB,
    EventKind::AdsB,  EventKind::DesB,  EventKind::DesB, EventKind::DesB,
};
constexpr int kSiteSpecies[Lattice::kSiteSlots] = {0, 0, 0, 1, 2, 0, 1, 2};

constexpr EventKind kPairKinds[Lattice::kPairSlots] = {
    EventKind::AdsO2,      EventKind::DesO2,     EventKind::DiffCORight, EventKind::DiffCOLeft,
    EventKind::DiffORight, EventKind::DiffOLeft, EventKind::ReacCOO,     EventKind::ReacOCO,
};

}  // namespace

Lattice::Lattice(Chain chain, RateSet rates) : chain_(std::move(chain)), rates_(std::move(rates))
{
    rates_.validate();
    const int n = num_sites();
    if (n < 2) {
        throw std::invalid_argument("chain needs at least 2 sites");
    }
    site_slots_.assign(n, {});
    pair_slots_.assign(n, {});
    site_sum_.assign(n, 0.0);
    pair_sum_.assign(n, 0.0);
    for (int l = 0; l < n; ++l) {
        refresh_site(l);
        refresh_pair(l);
    }
    co_count_ = static_cast<int>(std::count(chain_.begin(), chain_.end(), S::CO));
}

void Lattice::refresh_site(int l)
{
    const S s = chain_[l];
    auto& slots = site_slots_[l];
    slots.fill(0.0);
    if (s == S::Empty) {
        slots[0] = rates_.k_ads_CO;
        for (std::size_t i = 0; i < rates_.dummies.size(); ++i) {
            slots[2 + i] = rates_.dummies[i].k_ads;
        }
    } else if (s == S::CO) {
        slots[1] = rates_.k_des_CO();
    } else if (s != S::O) {
        const auto i = static_cast<std::size_t>(static_cast<int>(s) - static_cast<int>(S::B1));
        if (i < rates_.dummies.size()) {
            slots[2 + kMaxDummies + i] = rates_.dummies[i].k_des();
        }
    }
    double sum = 0.0;
    for (double v : slots) {
        sum += v;
    }
    site_sum_[l] = sum;
}

void Lattice::refresh_pair(int l)
{
    const int n = num_sites();
    const S a = chain_[l];
    const S b = chain_[(l + 1) % n];
    auto& slots = pair_slots_[l];
    slots.fill(0.0);
    if (a == S::Empty && b == S::Empty) {
        slots[0] = rates_.k_ads_O2;
    } else if (a == S::O && b == S::O) {
        slots[1] = rates_.k_des_O2();
    } else if (a == S::CO && b == S::Empty) {
        slots[2] = rates_.k_diff_CO;
    } else if (a == S::Empty && b == S::CO) {
        slots[3] = rates_.k_diff_CO;
    } else if (a == S::O && b == S::Empty) {
        slots[4] = rates_.k_diff_O;
    } else if (a == S::Empty && b == S::O) {
        slots[5] = rates_.k_diff_O;
    } else if (a == S::CO && b == S::O) {
        slots[6] = rates_.k_reac;
    } else if (a == S::O && b == S::CO) {
        slots[7] = rates_.k_reac;
    }
    double sum = 0.0;
    for (double v : slots) {
        sum += v;
    }
    pair_sum_[l] = sum;
}

double Lattice::total_propensity() const
{
    double total = 0.0;
    for (double v : site_sum_) {
        total += v;
    }
    for (double v : pair_sum_) {
        total += v;
    }
    return total;
}

Event Lattice::select(double target) const
{
    const int n = num_sites();
    std::optional<Event> last;
    for (int l = 0; l < n; ++l) {
        if (site_sum_[l] <= 0.0) {
            continue;
        }
        if (target >= site_sum_[l]) {
            target -= site_sum_[l];
            for (std::size_t k = kSiteSlots; k-- > 0;) {
                if (site_slots_[l][k] > 0.0) {
                    last = Event{kSiteKinds[k], l, kSiteSpecies[k], site_slots_[l][k]};
                    break;
                }
            }
            continue;
        }
        for (std::size_t k = 0; k < kSiteSlots; ++k) {
            const double p = site_slots_[l][k];
            if (p > 0.0 && target < p) {
                return {kSiteKinds[k], l, kSiteSpecies[k], p};
            }
            target -= p;
            if (p > 0.0) {
                last = Event{kSiteKinds[k], l, kSiteSpecies[k], p};
            }
        }
    }
    for (int l = 0; l < n; ++l) {
        if (pair_sum_[l] <= 0.0) {
            continue;
        }
        if (target >= pair_sum_[l]) {
            target -= pair_sum_[l];
            for (std::size_t k = kPairSlots; k-- > 0;) {
                if (pair_slots_[l][k] > 0.0) {
                    last = Event{kPairKinds[k], l, 0, pair_slots_[l][k]};
                    break;
                }
            }
            continue;
        }
        for (std::size_t k = 0; k < kPairSlots; ++k) {
            const double p = pair_slots_[l][k];
            if (p > 0.0 && target < p) {
                return {kPairKinds[k], l, 0, p};
            }
            target -= p;
            if (p > 0.0) {
                last = Event{kPairKinds[k], l, 0, p};
            }
        }
    }
    // rounding pushed target past the end
    if (!last) {
        throw std::logic_error("no enabled event");
    }
    return *last;
}

void Lattice::fire(const Event& e)
{
    const int n = num_sites();
    const int left = e.site;
    const int right = (e.site + 1) % n;
    const bool co_left = chain_[left] == S::CO;
    const bool co_right = chain_[right] == S::CO;
    apply_event(chain_, e);
    co_count_ += (chain_[left] == S::CO) - co_left + (chain_[right] == S::CO) - co_right;
    refresh_site(left);
    refresh_site(right);
    refresh_pair((left + n - 1) % n);
    refresh_pair(left);
    refresh_pair(right);
}

std::vector<Event> Lattice::table() const
{
    std::vector<Event> out;
    const int n = num_sites();
    for (int l = 0; l < n; ++l) {
        // build_event_table lists AdsCO, DesCO, then all AdsB, then all DesB
        for (std::size_t k = 0; k < kSiteSlots; ++k) {
            if (site_slots_[l][k] > 0.0) {
                out.push_back({kSiteKinds[k], l, kSiteSpecies[k], site_slots_[l][k]});
            }
        }
    }
    for (int l = 0; l < n; ++l) {
        for (std::size_t k = 0; k < kPairSlots; ++k) {
            if (pair_slots_[l][k] > 0.0) {
                out.push_back({kPairKinds[k], l, 0, pair_slots_[l][k]});
            }
        }
    }
    return out;
}

SsaResult ssa_run(const ChainConfig& config, const RateSet& rates, std::ostream* trace)
{
    if (config.num_sites < 2) {
        throw std::invalid_argument("num_sites must be >= 2");
    }
    Lattice lattice(Chain(config.num_sites, S::Empty), rates);
    Rng rng = make_rng(config.seed);
    const double n = static_cast<double>(config.num_sites);

    SsaResult result;
    // returns the waiting time, or a negative value in an absorbing state
    auto step = [&]() -> double {
        const double total = lattice.total_propensity();
        if (!(total > 0.0)) {
            return -1.0;
        }
        const double u = std::generate_canonical<double, 53>(rng);
        const double tau = -std::log1p(-u) / total;
        const double pick = std::generate_canonical<double, 53>(rng) * total;
        lattice.fire(lattice.select(pick));
        ++result.steps;
        return tau;
    };

    for (std::uint64_t k = 0; k < config.relax_steps; ++k) {
        if (step() < 0.0) {
            result.absorbed = true;
            break;
        }
    }
    if (trace) {
        *trace << "event,time,coverage\n";
    }
    double weighted = 0.0;
    double time = 0.0;
    if (!result.absorbed) {
        for (std::uint64_t k = 0; k < config.average_steps; ++k) {
            const double before = lattice.co_count() / n;
            const double tau = step();
            if (tau < 0.0) {
                result.absorbed = true;
                break;
            }
            weighted += before * tau;
            time += tau;
            result.min_coverage = std::min(result.min_coverage, before);
            result.max_coverage = std::max(result.max_coverage, before);
            if (trace) {
                *trace << k << ',' << time << ',' << lattice.co_count() / n << '\n';
            }
        }
    }
    const double now = lattice.co_count() / n;
    if (result.absorbed || !(time > 0.0)) {
        result.coverage = now;
        result.min_coverage = std::min(result.min_coverage, now);
        result.max_coverage = std::max(result.max_coverage, now);
    } else {
        result.coverage = std::clamp(weighted / time, result.min_coverage, result.max_coverage);
    }
    result.averaging_time = time;
    return result;
}

CoverageEstimate coverage_estimator(const ChainConfig& config, const RateSet& rates, int n_replicas,
                                    unsigned threads)
{
    if (n_replicas < 1) {
        throw std::invalid_argument("n_replicas must be >= 1");
    }
    std::vector<SsaResult> runs(n_replicas);
    parallel_for(runs.size(), threads, [&](std::size_t r) {
        ChainConfig replica = config;
        replica.seed = derive_seed(config.seed, {r});
        runs[r] = ssa_run(replica, rates);
    });
    CoverageEstimate estimate;
    for (const SsaResult& run : runs) {
        estimate.acc.add(run.coverage, static_cast<double>(run.steps));
        estimate.absorbed_replicas += run.absorbed;
    }
    return estimate;
}

CoOxidationModel::CoOxidationModel(ParameterBox box, ChainConfig config) : box_(std::move(box)), config_(config)
{
    if (box_.dimension() != 7 && box_.dimension() != 7 + 2 * kMaxDummies) {
        throw std::invalid_argument("co-oxidation model needs 7 or 13 parameters");
    }
}

std::string CoOxidationModel::name() const
{
    return box_.dimension() == 7 ? "co-oxidation" : "co-oxidation-13";
}

Draw CoOxidationModel::draw(const SamplePoint& point, Rng& rng) const
{
    ChainConfig run = config_;
    run.seed = rng();
    const SsaResult r = ssa_run(run, params_from_unit_cube(box_, point.x));
    return {r.coverage, static_cast<double>(r.steps)};
}

}  // namespace mlasg::kmc
