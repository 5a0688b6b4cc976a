#include <doctest.h>

#include <cmath>

#include "microgrid/io.hpp"
#include "microgrid/kpi.hpp"
#include "microgrid/scenario.hpp"

using namespace microgrid;

namespace {

NetworkModel network_fixture() { return load_network(MICROGRID_FIXTURE_DIR "/ceder.json"); }

EconomicFixture econ_fixture() {
    return load_economics(MICROGRID_FIXTURE_DIR "/ceder_econ.json");
}

KpiReport scenario_report(EconomicScenarioKind kind, OcTreatment treatment) {
    EconomicFixture fixture = econ_fixture();
    fixture.model.oc_treatment = treatment;
    EconomicScenario scenario;
    scenario.kind = kind;
    scenario.market = fixture.market;
    EconomicCase c = apply_economic_scenario(fixture, network_fixture(), scenario);
    return kpi_report(c.network, c.model);
}

}  // namespace

TEST_CASE("discounted annuity closed form") {
    CHECK(discounted_annuity(0.01, 25) == doctest::Approx(22.023155700621654).epsilon(1e-14));
    CHECK(discounted_annuity(0.0, 25) == 25.0);
    CHECK(discounted_annuity(0.05, 0) == 0.0);
    CHECK(discounted_annuity(0.05, -3) == 0.0);
    CHECK(discounted_annuity(0.05, 1) == doctest::Approx(1.0 / 1.05).epsilon(1e-15));
    // Equivalent telescoped sum of (1+r)^-n.
    double sum = 0.0;
    for (int n = 1; n <= 25; ++n) sum += std::pow(1.01, -n);
    CHECK(discounted_annuity(0.01, 25) == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("technical KPIs from nominal powers and capacity factors") {
    NetworkModel net = network_fixture();
    EconomicModel model = econ_fixture().model;
    KpiReport r = technical_kpis(net, model);

    // 22.14 kW at 33.5% plus 4.2 kW at 42%, both over 8760 h.
    CHECK(r.kpi1_kwh_per_year == doctest::Approx(80424.684).epsilon(1e-12));
    CHECK(r.kpi2_kgco2_per_year == doctest::Approx(2345.7217896).epsilon(1e-12));
    REQUIRE(r.kpi3_pct.has_value());
    CHECK(*r.kpi3_pct == doctest::Approx(102.01).epsilon(1e-12));
    CHECK(r.kpi4_kw == 25.0);
}

TEST_CASE("self-consumption is undefined without demand") {
    NetworkModel net = network_fixture();
    net.loads.clear();
    KpiReport r = technical_kpis(net, econ_fixture().model);
    CHECK_FALSE(r.kpi3_pct.has_value());
}

TEST_CASE("baseline economics: income, cost and LCOE") {
    NetworkModel net = network_fixture();
    EconomicModel model = econ_fixture().model;
    KpiReport r = technical_kpis(net, model);
    economic_kpis(net, model, r);

    CHECK(r.kpi5_eur == doctest::Approx(256824.77399626782).epsilon(1e-12));
    CHECK(r.kpi6_eur == doctest::Approx(261625.7721468399).epsilon(1e-12));
    REQUIRE(r.kpi8_eur_per_kwh.has_value());
    CHECK(*r.kpi8_eur_per_kwh == doctest::Approx(0.1477105824761402).epsilon(1e-12));

    // LCOE times discounted energy reproduces the lifetime cost.
    double annuity = discounted_annuity(model.discount_rate_pct / 100.0, model.useful_life_years);
    CHECK(*r.kpi8_eur_per_kwh * annuity * r.kpi1_kwh_per_year ==
          doctest::Approx(r.kpi6_eur).epsilon(1e-12));
}

TEST_CASE("operating-cost treatment switches between discounted and upfront") {
    NetworkModel net = network_fixture();
    EconomicModel model = econ_fixture().model;

    model.oc_treatment = OcTreatment::discounted_energy;
    KpiReport discounted = technical_kpis(net, model);
    economic_kpis(net, model, discounted);
    CHECK(discounted.kpi6_eur == doctest::Approx(261625.7721468399).epsilon(1e-12));

    model.oc_treatment = OcTreatment::upfront_literal;
    KpiReport literal = technical_kpis(net, model);
    economic_kpis(net, model, literal);
    CHECK(literal.kpi6_eur == doctest::Approx(254610.58764959578).epsilon(1e-12));
}

TEST_CASE("scenario suite: cost deltas, flexibility income and paybacks") {
    KpiReport baseline = scenario_report(EconomicScenarioKind::baseline,
                                         OcTreatment::discounted_energy);
    KpiReport no_battery = scenario_report(EconomicScenarioKind::no_battery,
                                           OcTreatment::discounted_energy);
    KpiReport battery_flex = scenario_report(EconomicScenarioKind::battery_flex,
                                             OcTreatment::discounted_energy);
    KpiReport vb_flex = scenario_report(EconomicScenarioKind::vb_flex,
                                        OcTreatment::discounted_energy);

    // Removing the battery strips its equipment cost and residual value.
    CHECK(no_battery.kpi6_eur == doctest::Approx(205276.98485301877).epsilon(1e-12));
    CHECK(baseline.kpi6_eur - no_battery.kpi6_eur ==
          doctest::Approx(56348.78729382114).epsilon(1e-10));
    CHECK(no_battery.kpi4_kw == 0.0);
    // The cheaper plant pays back within life even without flexibility income.
    REQUIRE(no_battery.kpi7_years.has_value());
    CHECK(*no_battery.kpi7_years == 20);

    // Selling flexibility does not change the cost side.
    CHECK(battery_flex.kpi6_eur == doctest::Approx(baseline.kpi6_eur).epsilon(1e-14));
    CHECK(vb_flex.kpi6_eur == doctest::Approx(no_battery.kpi6_eur).epsilon(1e-14));

    // It does change income: annuitized flexibility revenue on 25 kW.
    double annuity = discounted_annuity(0.01, 25);
    CHECK(battery_flex.kpi5_eur - baseline.kpi5_eur ==
          doctest::Approx(annuity * 2045.55125).epsilon(1e-10));

    CHECK_FALSE(baseline.kpi7_years.has_value());
    REQUIRE(battery_flex.kpi7_years.has_value());
    CHECK(*battery_flex.kpi7_years == 22);
    REQUIRE(vb_flex.kpi7_years.has_value());
    CHECK(*vb_flex.kpi7_years == 17);
}

TEST_CASE("payback edge cases") {
    NetworkModel net = network_fixture();
    EconomicModel model = econ_fixture().model;

    // Income covering the cost in the very first discounted year.
    model.electricity_price_eur_per_kwh = 10.0;
    std::optional<int> fast = payback(net, model, 1000.0);
    REQUIRE(fast.has_value());
    CHECK(*fast == 1);

    // No income at all never pays back.
    model.electricity_price_eur_per_kwh = 0.0;
    model.flexibility_income_eur_per_year = 0.0;
    CHECK_FALSE(payback(net, model, 1000.0).has_value());
}

TEST_CASE("LCOE is undefined without annual energy") {
    NetworkModel net = network_fixture();
    net.generators.clear();
    EconomicModel model = econ_fixture().model;
    KpiReport r = kpi_report(net, model);
    CHECK(r.kpi1_kwh_per_year == 0.0);
    CHECK_FALSE(r.kpi8_eur_per_kwh.has_value());
}
