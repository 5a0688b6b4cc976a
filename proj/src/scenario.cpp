#include "microgrid/scenario.hpp"

#include <stdexcept>

namespace microgrid {

NetworkModel apply_opf_scenario(const NetworkModel& network, const OpfScenario& scenario) {
    if (!(scenario.storage_load_fraction >= 0.0) || scenario.storage_load_fraction > 1.0)
        throw std::invalid_argument("storage_load_fraction must lie in [0, 1]");
    NetworkModel out = network;
    for (const StorageRecord& storage : network.storages) {
        LoadRecord load;
        load.bus = storage.bus;
        load.p_kw = scenario.storage_load_fraction * storage.p_nominal_kw;
        load.q_kvar = 0.0;
        out.loads.push_back(load);
    }
    out.storages.clear();
    for (ExternalGridRecord& grid : out.external_grids) grid.mode = scenario.grid_mode;
    return out;
}

double flexibility_income(double price_eur_per_mwh, double power_kw, double hours_per_day,
                          double days_per_year) {
    return price_eur_per_mwh * power_kw * hours_per_day * days_per_year / 1000.0;
}

EconomicCase apply_economic_scenario(const EconomicFixture& fixture, const NetworkModel& network,
                                     const EconomicScenario& scenario) {
    EconomicCase out{fixture.model, network};

    bool strip_storage_equipment = scenario.kind == EconomicScenarioKind::no_battery ||
                                   scenario.kind == EconomicScenarioKind::vb_flex;
    if (strip_storage_equipment) {
        for (const EquipmentItem& item : fixture.equipment) {
            if (!item.storage_related) continue;
            out.model.ic_eur -= item.investment_cost_eur;
            out.model.rv_eur -= item.residual_value_eur;
        }
    }
    if (scenario.kind == EconomicScenarioKind::no_battery) out.network.storages.clear();

    if (scenario.kind == EconomicScenarioKind::battery_flex ||
        scenario.kind == EconomicScenarioKind::vb_flex) {
        double storage_kw = 0.0;
        for (const StorageRecord& s : out.network.storages) storage_kw += s.p_nominal_kw;
        out.model.flexibility_income_eur_per_year =
            flexibility_income(scenario.market.price_eur_per_mwh, storage_kw,
                               scenario.market.hours_per_day, scenario.market.days_per_year);
    }
    return out;
}

}  // namespace microgrid
