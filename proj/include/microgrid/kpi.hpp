#pragma once

#include <optional>
#include <string>
#include <vector>

#include "microgrid/network.hpp"

namespace microgrid {

// How generator operating cost enters the life-cycle cost (kpi6):
// discounted_energy charges oc_eur_per_kwh * annual energy every year inside the
// discounted sum; upfront_literal adds the raw oc coefficient once, up front.
enum class OcTreatment { discounted_energy, upfront_literal };

struct EconomicModel {
    double ic_eur = 0.0;               // microgrid investment cost
    double rv_eur = 0.0;               // microgrid residual value
    double omc_eur_per_year = 0.0;     // operation & maintenance
    double discount_rate_pct = 0.0;    // r, percent
    int useful_life_years = 0;         // UL
    double electricity_price_eur_per_kwh = 0.0;  // EP
    double flexibility_income_eur_per_year = 0.0;  // FI
    double hours_per_year = 8760.0;
    OcTreatment oc_treatment = OcTreatment::discounted_energy;
};

struct EquipmentItem {
    std::string name;
    double investment_cost_eur = 0.0;
    double residual_value_eur = 0.0;
    bool storage_related = false;
};

struct FlexibilityMarket {
    double price_eur_per_mwh = 224.17;
    double hours_per_day = 1.0;
    double days_per_year = 365.0;
};

// Contents of an economics file: the scalar model plus the itemized equipment
// list (used by storage-removal scenarios) and the flexibility market terms.
struct EconomicFixture {
    EconomicModel model;
    std::vector<EquipmentItem> equipment;
    FlexibilityMarket market;
};

struct KpiReport {
    double kpi1_kwh_per_year = 0.0;         // expected annual generation
    double kpi2_kgco2_per_year = 0.0;       // avoided emissions
    std::optional<double> kpi3_pct;         // self-consumption, empty if no load
    double kpi4_kw = 0.0;                   // storage capability
    double kpi5_eur = 0.0;                  // discounted lifetime income
    double kpi6_eur = 0.0;                  // discounted lifetime cost
    std::optional<int> kpi7_years;          // payback, empty = never
    std::optional<double> kpi8_eur_per_kwh; // levelized cost of energy
};

// kpi1/2/3/4 from nominal powers, capacity factors and demand.
KpiReport technical_kpis(const NetworkModel& network, const EconomicModel& econ);

// Present value of one currency unit per year for `years` years at rate r
// (fraction, e.g. 0.01): sum over n of (1+r)^-n.
double discounted_annuity(double rate_fraction, int years);

// Fills kpi5/6/8 (requires technical KPIs for the annual energy).
void economic_kpis(const NetworkModel& network, const EconomicModel& econ, KpiReport& report);

// Smallest whole year N <= UL whose cumulative discounted income reaches kpi6.
std::optional<int> payback(const NetworkModel& network, const EconomicModel& econ,
                           double kpi6_eur);

// Full pipeline: technical + economic + payback.
KpiReport kpi_report(const NetworkModel& network, const EconomicModel& econ);

}  // namespace microgrid
