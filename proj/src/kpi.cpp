#include "microgrid/kpi.hpp"

#include <cmath>

namespace microgrid {

namespace {

// Expected annual energy of one generator, kWh.
double annual_energy(const GeneratorRecord& gen, const EconomicModel& econ) {
    return gen.p_nom_kw * (gen.econ.cf_pct / 100.0) * econ.hours_per_year;
}

}  // namespace

KpiReport technical_kpis(const NetworkModel& network, const EconomicModel& econ) {
    KpiReport report;
    double expected_kw = 0.0;
    for (const GeneratorRecord& gen : network.generators) {
        double energy = annual_energy(gen, econ);
        report.kpi1_kwh_per_year += energy;
        report.kpi2_kgco2_per_year += energy * gen.econ.ghg_kg_per_kwh;
        expected_kw += gen.p_nom_kw * (gen.econ.cf_pct / 100.0);
    }
    double demand_kw = 0.0;
    for (const LoadRecord& load : network.loads) demand_kw += load.p_kw;
    if (demand_kw > 0.0) report.kpi3_pct = expected_kw / demand_kw * 100.0;
    for (const StorageRecord& storage : network.storages) report.kpi4_kw += storage.p_nominal_kw;
    return report;
}

double discounted_annuity(double rate_fraction, int years) {
    if (years <= 0) return 0.0;
    if (rate_fraction == 0.0) return static_cast<double>(years);
    return (1.0 - std::pow(1.0 + rate_fraction, -years)) / rate_fraction;
}

void economic_kpis(const NetworkModel& network, const EconomicModel& econ, KpiReport& report) {
    double rate = econ.discount_rate_pct / 100.0;
    double annuity = discounted_annuity(rate, econ.useful_life_years);
    double end_discount = std::pow(1.0 + rate, -econ.useful_life_years);

    double energy = report.kpi1_kwh_per_year;
    report.kpi5_eur = annuity * (energy * econ.electricity_price_eur_per_kwh +
                                 econ.flexibility_income_eur_per_year);

    double investment = econ.ic_eur;
    double residual = econ.rv_eur;
    double yearly = econ.omc_eur_per_year;
    double upfront_oc = 0.0;
    for (const GeneratorRecord& gen : network.generators) {
        investment += gen.econ.ic_eur;
        residual -= gen.econ.rv_eur;
        yearly += gen.econ.mc_eur_per_year;
        if (econ.oc_treatment == OcTreatment::discounted_energy)
            yearly += gen.econ.oc_eur_per_kwh * annual_energy(gen, econ);
        else
            upfront_oc += gen.econ.oc_eur_per_kwh;
    }
    report.kpi6_eur = investment + upfront_oc + annuity * yearly - residual * end_discount;

    if (energy > 0.0) report.kpi8_eur_per_kwh = report.kpi6_eur / (annuity * energy);
}

std::optional<int> payback(const NetworkModel& network, const EconomicModel& econ,
                           double kpi6_eur) {
    double rate = econ.discount_rate_pct / 100.0;
    double income = 0.0;
    for (const GeneratorRecord& gen : network.generators)
        income += annual_energy(gen, econ) * econ.electricity_price_eur_per_kwh;
    income += econ.flexibility_income_eur_per_year;
    for (int year = 1; year <= econ.useful_life_years; ++year) {
        if (income * discounted_annuity(rate, year) >= kpi6_eur) return year;
    }
    return std::nullopt;
}

KpiReport kpi_report(const NetworkModel& network, const EconomicModel& econ) {
    KpiReport report = technical_kpis(network, econ);
    economic_kpis(network, econ, report);
    report.kpi7_years = payback(network, econ, report.kpi6_eur);
    return report;
}

}  // namespace microgrid
