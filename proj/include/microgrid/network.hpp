#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace microgrid {

enum class CurrentKind { ac, dc };
enum class ConverterControl { grid_forming, grid_following };
enum class ExternalGridMode { consume_only, supply_only, either };

struct BusRecord {
    int id = 0;
    double v_nominal_kv = 0.0;
    CurrentKind kind = CurrentKind::ac;
    double v_max_pu = 1.05;
    double v_min_pu = 0.95;
};

struct LineRecord {
    int from = 0;
    int to = 0;
    double length_km = 0.0;
    double r_ohm_per_km = 0.0;
    double x_ohm_per_km = 0.0;   // must stay 0 on DC lines
    double c_nf_per_km = 0.0;    // must stay 0 on DC lines
    double i_max_ka = 0.0;
    CurrentKind kind = CurrentKind::ac;
};

struct TransformerRecord {
    int from = 0;  // winding whose bus nominal equals v_ln_kv
    int to = 0;
    double s_n_kva = 0.0;
    double v_ccl_pct = 0.0;   // short-circuit voltage, % of v_ln
    double v_rccl_pct = 0.0;  // resistive part, % of v_ln
    double v_ln_kv = 0.0;
};

struct ConverterRecord {
    int from = 0;  // input bus
    int to = 0;    // output bus; grid-forming control holds this bus at nominal
    double s_n_kva = 0.0;
    double efficiency = 1.0;  // output = efficiency * input, each direction
    ConverterControl control = ConverterControl::grid_following;
};

struct GeneratorEconomics {
    double ic_eur = 0.0;
    double rv_eur = 0.0;
    double mc_eur_per_year = 0.0;
    double oc_eur_per_kwh = 0.0;
    double cf_pct = 0.0;
    double ghg_kg_per_kwh = 0.0;
};

struct GeneratorRecord {
    int bus = 0;
    double p_nom_kw = 0.0;
    double p_min_kw = 0.0;
    double q_nom_kvar = 0.0;
    double q_min_kvar = 0.0;
    GeneratorEconomics econ;
};

struct LoadRecord {
    int bus = 0;
    double p_kw = 0.0;  // demanded magnitude; enters bus balances negatively
    double q_kvar = 0.0;
};

struct StorageRecord {
    int bus = 0;
    double p_nominal_kw = 0.0;
};

struct ExternalGridRecord {
    int bus = 0;
    ExternalGridMode mode = ExternalGridMode::either;
};

// Base quantities. v_base is the bus nominal voltage, so 1 pu = nominal and a
// transformer between buses of matching nominals has unit ratio in pu.
struct PerUnitSystem {
    double s_base_kva = 100.0;
    std::vector<double> v_base_kv;  // indexed by bus id

    double z_base_ohm(int bus) const { return 1000.0 * v_base_kv[bus] * v_base_kv[bus] / s_base_kva; }
    double i_base_ka(int bus) const { return s_base_kva / (1000.0 * v_base_kv[bus]); }
};

// Series admittance y = conductance + j*susceptance plus the total line-charging
// susceptance; the shunt is split half per end in the reactive balance.
struct BranchAdmittance {
    double conductance_pu = 0.0;   // c >= 0
    double susceptance_pu = 0.0;   // s <= 0 for inductive branches, 0 on DC
    double shunt_pu = 0.0;         // b = omega * C * length, 0 on DC and transformers
};

struct BranchImpedance {
    double r_ohm = 0.0;
    double x_ohm = 0.0;
    double b_siemens = 0.0;
};

struct NetworkModel {
    std::vector<BusRecord> buses;
    std::vector<LineRecord> lines;
    std::vector<TransformerRecord> transformers;
    std::vector<ConverterRecord> converters;
    std::vector<GeneratorRecord> generators;
    std::vector<LoadRecord> loads;
    std::vector<StorageRecord> storages;
    std::vector<ExternalGridRecord> external_grids;
    double omega_rad_per_s = 100.0 * 3.14159265358979323846;

    // Filled by per_unit_normalize; physical records above stay untouched so
    // denormalization is exact.
    std::optional<PerUnitSystem> pu;
    std::vector<BranchAdmittance> line_admittances;
    std::vector<BranchAdmittance> transformer_admittances;

    bool normalized() const { return pu.has_value(); }
    const BusRecord& bus(int id) const { return buses.at(static_cast<size_t>(id)); }
};

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Builds a model from a parsed JSON document; throws ParseError with the record
// locus (e.g. "lines[1]: ...") on schema violations.
NetworkModel parse_network(const nlohmann::json& document);

// Physical series impedance and total charging susceptance of a branch.
BranchImpedance branch_impedance(const LineRecord& line, double omega_rad_per_s);
BranchImpedance branch_impedance(const TransformerRecord& xf);

// Per-unit admittance on the branch's voltage base (for transformers, the
// winding whose bus nominal matches v_ln_kv).
BranchAdmittance branch_admittance(const LineRecord& line, const NetworkModel& model,
                                   const PerUnitSystem& pu);
BranchAdmittance branch_admittance(const TransformerRecord& xf, const NetworkModel& model,
                                   const PerUnitSystem& pu);

// Returns a copy with the per-unit layer populated. Physical fields are kept
// verbatim, which makes denormalize a field-identical inverse.
NetworkModel per_unit_normalize(const NetworkModel& model, double s_base_kva = 100.0);

// Strips the per-unit layer; the physical records are returned bit-for-bit.
NetworkModel denormalize(const NetworkModel& model);

// Structural diagnostics: graph connectivity (converters count as edges),
// voltage reference per island, degenerate converter endpoints.
std::vector<std::string> validate(const NetworkModel& model);

}  // namespace microgrid
