#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mlasg/mc_model.hpp"
#include "mlasg/sampling.hpp"

namespace mlasg::kmc {

enum class SiteState : std::uint8_t { Empty, CO, O, B1, B2, B3 };

inline constexpr std::size_t kMaxDummies = 3;

struct DummyRates {
    double k_ads = 0.0;
    double K = 1.0;
    double k_des() const { return k_ads / K; }
};

struct RateSet {
    double K_CO = 2.0 / 9.2 * 1e2;
    double K_O2 = 9.7 / 2.8 * 1e6;
    double k_ads_CO = 2.0e8;
    double k_ads_O2 = 9.7e7;
    double k_diff_CO = 5.0e-1;
    double k_diff_O = 6.6e-2;
    double k_reac = 1.7e5;
    std::vector<DummyRates> dummies;

    double k_des_CO() const { return k_ads_CO / K_CO; }
    double k_des_O2() const { return k_ads_O2 / K_O2; }

    //! Rates must be finite and >= 0, equilibrium constants > 0, at most 3 dummies.
    void validate() const;
};

struct ChainConfig {
    int num_sites = 20;
    std::uint64_t relax_steps = 100'000;
    std::uint64_t average_steps = 100'000;
    std::uint64_t seed = 0;

    static ChainConfig desk_scale() { return {}; }
    static ChainConfig full_scale() { return {20, 10'000'000, 10'000'000, 0}; }
};

//! Log-uniform box: value = exp(ln low + u (ln high - ln low)).
struct ParameterBox {
    struct Range {
        std::string name;
        double low;
        double high;
    };
    std::vector<Range> ranges;

    //! K_CO, K_O2, k_ads_CO, k_ads_O2, k_diff_CO, k_diff_O, k_reac.
    static ParameterBox base();
    //! base() followed by (k_des_Bi, K_Bi) for i = 1..3.
    static ParameterBox extended();

    std::size_t dimension() const { return ranges.size(); }
    double map(std::size_t j, double u) const;
};

//! Throws std::domain_error on a dimension mismatch or u outside [0,1].
RateSet params_from_unit_cube(const ParameterBox& box, std::span<const double> u);

enum class EventKind : std::uint8_t {
    AdsCO,
    DesCO,
    AdsB,
    DesB,
    AdsO2,
    DesO2,
    DiffCORight,  // CO_l + e_{l+1} -> e_l + CO_{l+1}
    DiffCOLeft,   // e_l + CO_{l+1} -> CO_l + e_{l+1}
    DiffORight,
    DiffOLeft,
    ReacCOO,  // CO_l + O_{l+1}
    ReacOCO,  // O_l + CO_{l+1}
};

struct Event {
    EventKind kind;
    int site;         //!< l; pair events act on (l, l+1 mod N)
    int species = 0;  //!< dummy index for AdsB / DesB
    double propensity;

    bool operator==(const Event&) const = default;
};

std::string to_string(EventKind kind);

using Chain = std::vector<SiteState>;

//! Every enabled event with positive propensity, site-local events first
//! (by site, then slot), then pair events (by left site, then slot).
std::vector<Event> build_event_table(std::span<const SiteState> chain, const RateSet& rates);

//! Applies the event's stoichiometry; throws std::logic_error if it is not enabled.
void apply_event(Chain& chain, const Event& event);

double co_coverage(std::span<const SiteState> chain);

/*!
 * Chain plus per-site and per-pair propensity slots. Firing an event only
 * refreshes the slots of the sites and pairs it touched.
 */
class Lattice {
public:
    static constexpr std::size_t kSiteSlots = 2 + 2 * kMaxDummies;
    static constexpr std::size_t kPairSlots = 8;

    Lattice(Chain chain, RateSet rates);

    const Chain& chain() const { return chain_; }
    const RateSet& rates() const { return rates_; }
    int num_sites() const { return static_cast<int>(chain_.size()); }
    int co_count() const { return co_count_; }
    double total_propensity() const;

    //! Event whose cumulative propensity interval contains target in [0, total).
    Event select(double target) const;
    void fire(const Event& event);

    //! Current slots flattened in build_event_table order.
    std::vector<Event> table() const;

private:
    void refresh_site(int l);
    void refresh_pair(int l);

    Chain chain_;
    RateSet rates_;
    std::vector<std::array<double, kSiteSlots>> site_slots_;
    std::vector<std::array<double, kPairSlots>> pair_slots_;
    std::vector<double> site_sum_;
    std::vector<double> pair_sum_;
    int co_count_ = 0;
};

struct SsaResult {
    double coverage = 0.0;
    bool absorbed = false;
    std::uint64_t steps = 0;  //!< executed events, relaxation included
    double averaging_time = 0.0;
    double min_coverage = 1.0;
    double max_coverage = 0.0;
};

/*!
 * Direct-method SSA from the all-empty chain: relax_steps events unrecorded,
 * then average_steps events with the time-weighted CO coverage. An absorbing
 * state ends the run early with absorbed set. trace, if given, receives
 * `event,time,coverage` rows for every averaging event.
 */
SsaResult ssa_run(const ChainConfig& config, const RateSet& rates, std::ostream* trace = nullptr);

//! Replica r runs with seed derive_seed(config.seed, {r}); cost is executed steps.
struct CoverageEstimate {
    SampleAccumulator acc;
    std::size_t absorbed_replicas = 0;
};

CoverageEstimate coverage_estimator(const ChainConfig& config, const RateSet& rates, int n_replicas,
                                    unsigned threads = 1);

//! One draw = one trajectory at the rates mapped from x; cost in kMC steps.
class CoOxidationModel final : public McModel {
public:
    CoOxidationModel(ParameterBox box, ChainConfig config);

    static CoOxidationModel base(ChainConfig config = {}) { return {ParameterBox::base(), config}; }
    static CoOxidationModel extended(ChainConfig config = {}) { return {ParameterBox::extended(), config}; }

    std::size_t dimension() const override { return box_.dimension(); }
    std::string name() const override;
    Draw draw(const SamplePoint& point, Rng& rng) const override;

    const ChainConfig& chain_config() const { return config_; }

private:
    ParameterBox box_;
    ChainConfig config_;
};

}  // namespace mlasg::kmc
