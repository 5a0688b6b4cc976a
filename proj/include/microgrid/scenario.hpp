#pragma once

#include <utility>

#include "microgrid/kpi.hpp"
#include "microgrid/network.hpp"

namespace microgrid {

enum class Objective { h1, h2, h3, h4 };

// Dispatch-study configuration: which objective to optimize, how storage
// behaves, and which way the external grid may exchange power.
struct OpfScenario {
    Objective objective = Objective::h1;
    double storage_load_fraction = 0.5;  // storages act as loads at this share of nominal
    ExternalGridMode grid_mode = ExternalGridMode::consume_only;
};

enum class EconomicScenarioKind { baseline, no_battery, battery_flex, vb_flex };

struct EconomicScenario {
    EconomicScenarioKind kind = EconomicScenarioKind::baseline;
    FlexibilityMarket market;  // used by the *-flex variants
};

// Storages become fixed loads at fraction * nominal and external grids take the
// scenario's exchange mode. Throws std::invalid_argument for fractions outside
// [0, 1].
NetworkModel apply_opf_scenario(const NetworkModel& network, const OpfScenario& scenario);

// Annual income from offering `power_kw` on a flexibility market:
// price[EUR/MWh] * power[kW] * hours/day * days/year / 1000.
double flexibility_income(double price_eur_per_mwh, double power_kw, double hours_per_day,
                          double days_per_year);

struct EconomicCase {
    EconomicModel model;
    NetworkModel network;
};

// Derives the scenario's cost model and network from the baseline fixture:
// no_battery / vb_flex remove storage-related equipment cost and value;
// no_battery also removes the storage itself; both *-flex variants earn
// flexibility income on the storage nominal power.
EconomicCase apply_economic_scenario(const EconomicFixture& fixture, const NetworkModel& network,
                                     const EconomicScenario& scenario);

}  // namespace microgrid
