#include <doctest.h>

#include <stdexcept>

#include "microgrid/io.hpp"
#include "microgrid/scenario.hpp"

using namespace microgrid;

namespace {

NetworkModel network_fixture() { return load_network(MICROGRID_FIXTURE_DIR "/ceder.json"); }

EconomicFixture econ_fixture() {
    return load_economics(MICROGRID_FIXTURE_DIR "/ceder_econ.json");
}

}  // namespace

TEST_CASE("storages become loads at the requested share of nominal") {
    NetworkModel net = network_fixture();
    REQUIRE(net.storages.size() == 1);
    size_t base_loads = net.loads.size();

    OpfScenario scenario;
    scenario.storage_load_fraction = 0.5;
    scenario.grid_mode = ExternalGridMode::consume_only;
    NetworkModel applied = apply_opf_scenario(net, scenario);

    CHECK(applied.storages.empty());
    REQUIRE(applied.loads.size() == base_loads + 1);
    const LoadRecord& added = applied.loads.back();
    CHECK(added.bus == 5);
    CHECK(added.p_kw == 12.5);
    CHECK(added.q_kvar == 0.0);
    for (const ExternalGridRecord& grid : applied.external_grids)
        CHECK(grid.mode == ExternalGridMode::consume_only);

    // The input is untouched.
    CHECK(net.storages.size() == 1);
    CHECK(net.external_grids.front().mode == ExternalGridMode::either);
}

TEST_CASE("storage share bounds") {
    NetworkModel net = network_fixture();
    OpfScenario scenario;

    scenario.storage_load_fraction = 1.0;
    CHECK(apply_opf_scenario(net, scenario).loads.back().p_kw == 25.0);
    scenario.storage_load_fraction = 0.0;
    CHECK(apply_opf_scenario(net, scenario).loads.back().p_kw == 0.0);

    scenario.storage_load_fraction = -0.1;
    CHECK_THROWS_AS(apply_opf_scenario(net, scenario), std::invalid_argument);
    scenario.storage_load_fraction = 1.1;
    CHECK_THROWS_AS(apply_opf_scenario(net, scenario), std::invalid_argument);
}

TEST_CASE("flexibility income formula") {
    // 224.17 EUR/MWh offered on 25 kW for one hour a day, year round.
    CHECK(flexibility_income(224.17, 25.0, 1.0, 365.0) ==
          doctest::Approx(2045.55125).epsilon(1e-14));
    CHECK(flexibility_income(0.0, 25.0, 1.0, 365.0) == 0.0);
    CHECK(flexibility_income(224.17, 50.0, 1.0, 365.0) ==
          doctest::Approx(2.0 * 2045.55125).epsilon(1e-14));
    CHECK(flexibility_income(100.0, 1000.0, 2.0, 100.0) == doctest::Approx(20000.0));
}

TEST_CASE("economic scenarios adjust cost model and storage fleet") {
    EconomicFixture fixture = econ_fixture();
    NetworkModel net = network_fixture();

    EconomicScenario scenario;
    scenario.market = fixture.market;

    scenario.kind = EconomicScenarioKind::baseline;
    EconomicCase baseline = apply_economic_scenario(fixture, net, scenario);
    CHECK(baseline.model.ic_eur == 195500.0);
    CHECK(baseline.model.rv_eur == 28900.0);
    CHECK(baseline.model.flexibility_income_eur_per_year == 0.0);
    CHECK(baseline.network.storages.size() == 1);

    // Battery pack and its converter disappear from both cost and value.
    scenario.kind = EconomicScenarioKind::no_battery;
    EconomicCase no_battery = apply_economic_scenario(fixture, net, scenario);
    CHECK(no_battery.model.ic_eur == 136500.0);
    CHECK(no_battery.model.rv_eur == 25500.0);
    CHECK(no_battery.model.flexibility_income_eur_per_year == 0.0);
    CHECK(no_battery.network.storages.empty());

    scenario.kind = EconomicScenarioKind::battery_flex;
    EconomicCase battery_flex = apply_economic_scenario(fixture, net, scenario);
    CHECK(battery_flex.model.ic_eur == 195500.0);
    CHECK(battery_flex.model.rv_eur == 28900.0);
    CHECK(battery_flex.model.flexibility_income_eur_per_year ==
          doctest::Approx(2045.55125).epsilon(1e-14));
    CHECK(battery_flex.network.storages.size() == 1);

    // The virtual battery carries the storage duty without the hardware cost.
    scenario.kind = EconomicScenarioKind::vb_flex;
    EconomicCase vb_flex = apply_economic_scenario(fixture, net, scenario);
    CHECK(vb_flex.model.ic_eur == 136500.0);
    CHECK(vb_flex.model.rv_eur == 25500.0);
    CHECK(vb_flex.model.flexibility_income_eur_per_year ==
          doctest::Approx(2045.55125).epsilon(1e-14));
    CHECK(vb_flex.network.storages.size() == 1);
}

TEST_CASE("flexibility income scales with the remaining storage fleet") {
    EconomicFixture fixture = econ_fixture();
    NetworkModel net = network_fixture();
    StorageRecord extra;
    extra.bus = 5;
    extra.p_nominal_kw = 25.0;
    net.storages.push_back(extra);

    EconomicScenario scenario;
    scenario.kind = EconomicScenarioKind::battery_flex;
    scenario.market = fixture.market;
    EconomicCase c = apply_economic_scenario(fixture, net, scenario);
    CHECK(c.model.flexibility_income_eur_per_year ==
          doctest::Approx(2.0 * 2045.55125).epsilon(1e-14));
}
