#include "microgrid/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "microgrid/scenario.hpp"

namespace microgrid {

using nlohmann::json;

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string scientific(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

double jnumber(const json& obj, const char* key, const std::string& locus) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number())
        throw ParseError(locus + ": missing numeric field '" + key + "'");
    return it->get<double>();
}

double jnumber_or(const json& obj, const char* key, double fallback, const std::string& locus) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    if (!it->is_number()) throw ParseError(locus + ": field '" + key + "' must be a number");
    return it->get<double>();
}

json read_json(const std::string& path) {
    std::filesystem::path resolved = resolve_input(path);
    std::ifstream in(resolved);
    if (!in) throw ParseError(path + ": cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

const char* to_string(CurrentKind k) { return k == CurrentKind::ac ? "ac" : "dc"; }

const char* to_string(ConverterControl c) {
    return c == ConverterControl::grid_forming ? "grid_forming" : "grid_following";
}

const char* to_string(ExternalGridMode m) {
    switch (m) {
        case ExternalGridMode::consume_only: return "consume_only";
        case ExternalGridMode::supply_only: return "supply_only";
        case ExternalGridMode::either: return "either";
    }
    return "either";
}

const char* to_string(Objective o) {
    switch (o) {
        case Objective::h1: return "h1";
        case Objective::h2: return "h2";
        case Objective::h3: return "h3";
        case Objective::h4: return "h4";
    }
    return "h1";
}

const char* to_string(SolutionStatus s) {
    switch (s) {
        case SolutionStatus::converged: return "converged";
        case SolutionStatus::infeasible: return "infeasible";
        case SolutionStatus::iteration_limit: return "iteration_limit";
    }
    return "iteration_limit";
}

Objective objective_from(const std::string& label) {
    if (label == "h1") return Objective::h1;
    if (label == "h2") return Objective::h2;
    if (label == "h3") return Objective::h3;
    if (label == "h4") return Objective::h4;
    throw std::invalid_argument("unknown objective label '" + label + "'");
}

const char* objective_unit(Objective o) {
    switch (o) {
        case Objective::h1:
        case Objective::h4: return "kW";
        case Objective::h2: return "pu^2";
        case Objective::h3: return "EUR/h";
    }
    return "";
}

}  // namespace

std::filesystem::path resolve_input(const std::string& path) {
    std::filesystem::path p(path);
    if (std::filesystem::exists(p)) return p;
    if (p.is_relative()) {
        if (const char* env = std::getenv(kFixtureDirEnv)) {
            std::filesystem::path candidate = std::filesystem::path(env) / p;
            if (std::filesystem::exists(candidate)) return candidate;
        }
    }
    return p;
}

NetworkModel load_network(const std::string& path) { return parse_network(read_json(path)); }

EconomicFixture load_economics(const std::string& path) {
    json doc = read_json(path);
    if (!doc.is_object()) throw ParseError(path + ": expected a JSON object");
    EconomicFixture fx;

    auto it = doc.find("model");
    if (it == doc.end() || !it->is_object()) throw ParseError(path + ": missing 'model' object");
    const json& m = *it;
    fx.model.ic_eur = jnumber(m, "ic_eur", "model");
    fx.model.rv_eur = jnumber_or(m, "rv_eur", 0.0, "model");
    fx.model.omc_eur_per_year = jnumber_or(m, "omc_eur_per_year", 0.0, "model");
    fx.model.discount_rate_pct = jnumber(m, "discount_rate_pct", "model");
    fx.model.useful_life_years = static_cast<int>(jnumber(m, "useful_life_years", "model"));
    fx.model.electricity_price_eur_per_kwh = jnumber(m, "electricity_price_eur_per_kwh", "model");
    fx.model.flexibility_income_eur_per_year =
        jnumber_or(m, "flexibility_income_eur_per_year", 0.0, "model");
    fx.model.hours_per_year = jnumber_or(m, "hours_per_year", 8760.0, "model");
    if (auto t = m.find("oc_treatment"); t != m.end()) {
        std::string v = t->get<std::string>();
        if (v == "discounted_energy") fx.model.oc_treatment = OcTreatment::discounted_energy;
        else if (v == "upfront_literal") fx.model.oc_treatment = OcTreatment::upfront_literal;
        else throw ParseError("model: unknown oc_treatment '" + v + "'");
    }

    if (auto eq = doc.find("equipment"); eq != doc.end()) {
        if (!eq->is_array()) throw ParseError(path + ": 'equipment' must be an array");
        for (size_t i = 0; i < eq->size(); ++i) {
            const json& e = (*eq)[i];
            std::string locus = "equipment[" + std::to_string(i) + "]";
            EquipmentItem item;
            if (auto nm = e.find("name"); nm != e.end() && nm->is_string())
                item.name = nm->get<std::string>();
            item.investment_cost_eur = jnumber(e, "investment_cost_eur", locus);
            item.residual_value_eur = jnumber_or(e, "residual_value_eur", 0.0, locus);
            if (auto sr = e.find("storage_related"); sr != e.end() && sr->is_boolean())
                item.storage_related = sr->get<bool>();
            fx.equipment.push_back(item);
        }
    }

    if (auto mk = doc.find("market"); mk != doc.end() && mk->is_object()) {
        fx.market.price_eur_per_mwh = jnumber_or(*mk, "price_eur_per_mwh", 224.17, "market");
        fx.market.hours_per_day = jnumber_or(*mk, "hours_per_day", 1.0, "market");
        fx.market.days_per_year = jnumber_or(*mk, "days_per_year", 365.0, "market");
    }
    return fx;
}

MeasurementSet load_measurements(const std::string& path) {
    json doc = read_json(path);
    MeasurementSet set;
    auto it = doc.find("scenarios");
    if (it == doc.end() || !it->is_array()) throw ParseError(path + ": missing 'scenarios' array");
    for (size_t s = 0; s < it->size(); ++s) {
        const json& sc = (*it)[s];
        std::string locus = "scenarios[" + std::to_string(s) + "]";
        MeasurementScenario scenario;
        if (auto lb = sc.find("label"); lb != sc.end() && lb->is_string())
            scenario.label = lb->get<std::string>();
        else
            throw ParseError(locus + ": missing 'label'");
        auto entries = sc.find("entries");
        if (entries == sc.end() || !entries->is_array())
            throw ParseError(locus + ": missing 'entries' array");
        for (size_t i = 0; i < entries->size(); ++i) {
            const json& e = (*entries)[i];
            std::string elocus = locus + ".entries[" + std::to_string(i) + "]";
            MeasurementEntry entry;
            if (auto b = e.find("bus"); b != e.end() && b->is_number_integer())
                entry.bus = b->get<int>();
            else
                throw ParseError(elocus + ": missing integer 'bus'");
            if (auto p = e.find("p_kw"); p != e.end() && p->is_number())
                entry.p_kw = p->get<double>();
            if (auto v = e.find("v_kv"); v != e.end() && v->is_number())
                entry.v_kv = v->get<double>();
            if (auto g = e.find("gate_p"); g != e.end() && g->is_boolean())
                entry.gate_p = g->get<bool>();
            if (auto g = e.find("gate_v"); g != e.end() && g->is_boolean())
                entry.gate_v = g->get<bool>();
            scenario.entries.push_back(entry);
        }
        set.scenarios.push_back(std::move(scenario));
    }
    return set;
}

OpfSolution load_solution(const std::string& path) {
    json doc = read_json(path);
    OpfSolution sol;
    std::string status = doc.value("status", "iteration_limit");
    if (status == "converged") sol.status = SolutionStatus::converged;
    else if (status == "infeasible") sol.status = SolutionStatus::infeasible;
    else sol.status = SolutionStatus::iteration_limit;
    sol.objective = objective_from(doc.value("objective", "h1"));
    std::string mode = doc.value("grid_mode", "consume_only");
    sol.grid_mode = mode == "supply_only" ? ExternalGridMode::supply_only
                    : mode == "either"    ? ExternalGridMode::either
                                          : ExternalGridMode::consume_only;
    sol.objective_value = doc.value("objective_value", 0.0);
    if (auto buses = doc.find("buses"); buses != doc.end() && buses->is_array()) {
        for (const json& b : *buses) {
            BusSolution bs;
            bs.id = b.value("id", 0);
            bs.p_kw = b.value("p_kw", 0.0);
            bs.q_kvar = b.value("q_kvar", 0.0);
            bs.v_kv = b.value("v_kv", 0.0);
            bs.delta_rad = b.value("delta_rad", 0.0);
            sol.buses.push_back(bs);
        }
    }
    sol.total_generation_kw = doc.value("total_generation_kw", 0.0);
    sol.external_grid_kw = doc.value("external_grid_kw", 0.0);
    sol.total_load_kw = doc.value("total_load_kw", 0.0);
    sol.total_loss_kw = doc.value("total_loss_kw", 0.0);
    sol.message = doc.value("message", "");
    return sol;
}

json network_to_json(const NetworkModel& model) {
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["omega_rad_per_s"] = model.omega_rad_per_s;
    doc["buses"] = json::array();
    for (const BusRecord& b : model.buses)
        doc["buses"].push_back({{"id", b.id},
                                {"v_nominal_kv", b.v_nominal_kv},
                                {"kind", to_string(b.kind)},
                                {"v_max_pu", b.v_max_pu},
                                {"v_min_pu", b.v_min_pu}});
    doc["lines"] = json::array();
    for (const LineRecord& l : model.lines)
        doc["lines"].push_back({{"from", l.from},
                                {"to", l.to},
                                {"length_km", l.length_km},
                                {"r_ohm_per_km", l.r_ohm_per_km},
                                {"x_ohm_per_km", l.x_ohm_per_km},
                                {"c_nf_per_km", l.c_nf_per_km},
                                {"i_max_ka", l.i_max_ka},
                                {"kind", to_string(l.kind)}});
    doc["transformers"] = json::array();
    for (const TransformerRecord& t : model.transformers)
        doc["transformers"].push_back({{"from", t.from},
                                       {"to", t.to},
                                       {"s_n_kva", t.s_n_kva},
                                       {"v_ccl_pct", t.v_ccl_pct},
                                       {"v_rccl_pct", t.v_rccl_pct},
                                       {"v_ln_kv", t.v_ln_kv}});
    doc["converters"] = json::array();
    for (const ConverterRecord& c : model.converters)
        doc["converters"].push_back({{"from", c.from},
                                     {"to", c.to},
                                     {"s_n_kva", c.s_n_kva},
                                     {"efficiency", c.efficiency},
                                     {"control", to_string(c.control)}});
    doc["generators"] = json::array();
    for (const GeneratorRecord& g : model.generators)
        doc["generators"].push_back({{"bus", g.bus},
                                     {"p_nom_kw", g.p_nom_kw},
                                     {"p_min_kw", g.p_min_kw},
                                     {"q_nom_kvar", g.q_nom_kvar},
                                     {"q_min_kvar", g.q_min_kvar},
                                     {"econ",
                                      {{"ic_eur", g.econ.ic_eur},
                                       {"rv_eur", g.econ.rv_eur},
                                       {"mc_eur_per_year", g.econ.mc_eur_per_year},
                                       {"oc_eur_per_kwh", g.econ.oc_eur_per_kwh},
                                       {"cf_pct", g.econ.cf_pct},
                                       {"ghg_kg_per_kwh", g.econ.ghg_kg_per_kwh}}}});
    doc["loads"] = json::array();
    for (const LoadRecord& l : model.loads)
        doc["loads"].push_back({{"bus", l.bus}, {"p_kw", l.p_kw}, {"q_kvar", l.q_kvar}});
    doc["storages"] = json::array();
    for (const StorageRecord& s : model.storages)
        doc["storages"].push_back({{"bus", s.bus}, {"p_nominal_kw", s.p_nominal_kw}});
    doc["external_grids"] = json::array();
    for (const ExternalGridRecord& g : model.external_grids)
        doc["external_grids"].push_back({{"bus", g.bus}, {"mode", to_string(g.mode)}});
    return doc;
}

json solution_to_json(const OpfSolution& sol) {
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["status"] = to_string(sol.status);
    doc["objective"] = to_string(sol.objective);
    doc["grid_mode"] = to_string(sol.grid_mode);
    doc["objective_value"] = sol.objective_value;
    doc["objective_unit"] = objective_unit(sol.objective);
    doc["buses"] = json::array();
    for (const BusSolution& b : sol.buses)
        doc["buses"].push_back({{"id", b.id},
                                {"p_kw", b.p_kw},
                                {"q_kvar", b.q_kvar},
                                {"v_kv", b.v_kv},
                                {"delta_rad", b.delta_rad}});
    doc["converters"] = json::array();
    for (const ConverterSolution& c : sol.converters)
        doc["converters"].push_back({{"index", c.index},
                                     {"from", c.from},
                                     {"to", c.to},
                                     {"direction", c.forward ? "forward" : "reverse"},
                                     {"input_kw", c.input_kw},
                                     {"output_kw", c.output_kw},
                                     {"loss_kw", c.loss_kw}});
    doc["branches"] = json::array();
    for (const BranchSolution& b : sol.branches)
        doc["branches"].push_back(
            {{"kind", b.kind == BranchSolution::Kind::line ? "line" : "transformer"},
             {"index", b.index},
             {"from", b.from},
             {"to", b.to},
             {"current_ka", b.current_ka},
             {"loss_kw", b.loss_kw}});
    doc["total_generation_kw"] = sol.total_generation_kw;
    doc["external_grid_kw"] = sol.external_grid_kw;
    doc["total_load_kw"] = sol.total_load_kw;
    doc["total_loss_kw"] = sol.total_loss_kw;
    doc["residuals"] = {{"equality_inf", sol.residuals.equality_inf},
                        {"inequality_inf", sol.residuals.inequality_inf},
                        {"stationarity_inf", sol.residuals.stationarity_inf}};
    doc["outer_iterations"] = sol.outer_iterations;
    doc["inner_iterations"] = sol.inner_iterations;
    doc["solve_seconds"] = sol.solve_seconds;
    doc["message"] = sol.message;
    return doc;
}

json kpi_to_json(const std::string& scenario, const KpiReport& r) {
    json doc;
    doc["scenario"] = scenario;
    doc["kpi1_kwh_per_year"] = r.kpi1_kwh_per_year;
    doc["kpi2_kgco2_per_year"] = r.kpi2_kgco2_per_year;
    doc["kpi3_pct"] = r.kpi3_pct ? json(*r.kpi3_pct) : json();
    doc["kpi4_kw"] = r.kpi4_kw;
    doc["kpi5_eur"] = r.kpi5_eur;
    doc["kpi6_eur"] = r.kpi6_eur;
    doc["kpi7_years"] = r.kpi7_years ? json(*r.kpi7_years) : json();
    doc["kpi8_eur_per_kwh"] = r.kpi8_eur_per_kwh ? json(*r.kpi8_eur_per_kwh) : json();
    return doc;
}

json error_table_to_json(const ErrorTable& table) {
    json doc;
    doc["label"] = table.label;
    doc["rows"] = json::array();
    for (const ErrorRow& row : table.rows)
        doc["rows"].push_back({{"bus", row.bus},
                               {"quantity", std::string(1, row.quantity)},
                               {"simulated", row.simulated},
                               {"measured", row.measured},
                               {"error", row.error},
                               {"relative", row.relative},
                               {"gated", row.gated}});
    doc["max_voltage_error"] = table.max_voltage_error;
    doc["max_power_error"] = table.max_power_error;
    doc["pass"] = table.pass;
    return doc;
}

ErrorTable compare_measurements(const OpfSolution& solution, const MeasurementScenario& measured,
                                const CompareOptions& options) {
    ErrorTable table;
    table.label = measured.label;
    for (const MeasurementEntry& entry : measured.entries) {
        const BusSolution* bus = nullptr;
        for (const BusSolution& b : solution.buses)
            if (b.id == entry.bus) { bus = &b; break; }
        if (!bus)
            throw std::invalid_argument("measured bus " + std::to_string(entry.bus) +
                                        " is not present in the solution");
        auto add_row = [&](char quantity, double simulated, double measured_value, bool gated,
                           double relative_gate, double absolute_gate, double& max_error) {
            ErrorRow row;
            row.bus = entry.bus;
            row.quantity = quantity;
            row.simulated = simulated;
            row.measured = measured_value;
            row.relative = measured_value != 0.0;
            row.error = row.relative
                            ? std::abs(simulated - measured_value) / std::abs(measured_value)
                            : std::abs(simulated - measured_value);
            row.gated = gated;
            if (row.gated) {
                double gate = row.relative ? relative_gate : absolute_gate;
                if (row.relative) max_error = std::max(max_error, row.error);
                if (row.error > gate) table.pass = false;
            }
            table.rows.push_back(row);
        };
        if (entry.p_kw)
            add_row('p', bus->p_kw, *entry.p_kw, entry.gate_p, options.power_gate,
                    options.absolute_gate_kw, table.max_power_error);
        if (entry.v_kv)
            add_row('v', bus->v_kv, *entry.v_kv, entry.gate_v, options.voltage_gate,
                    options.absolute_gate_kv, table.max_voltage_error);
    }
    return table;
}

std::string render_solution(const OpfSolution& sol, ReportFormat format) {
    if (format == ReportFormat::structured) return solution_to_json(sol).dump(2) + "\n";
    if (format == ReportFormat::csv) {
        std::ostringstream out;
        out << "bus,p_kw,q_kvar,v_kv,delta_rad\n";
        for (const BusSolution& b : sol.buses)
            out << b.id << ',' << fixed(b.p_kw, 5) << ',' << fixed(b.q_kvar, 5) << ','
                << fixed(b.v_kv, 5) << ',' << fixed(b.delta_rad, 5) << '\n';
        return out.str();
    }

    std::ostringstream out;
    out << "objective        " << to_string(sol.objective) << '\n';
    out << "grid mode        " << to_string(sol.grid_mode) << '\n';
    out << "status           " << to_string(sol.status) << '\n';
    out << "objective value  " << fixed(sol.objective_value, 5) << ' '
        << objective_unit(sol.objective) << '\n';
    out << '\n';
    out << "bus     P [kW]       Q [kvar]     V [kV]       delta [rad]\n";
    for (const BusSolution& b : sol.buses) {
        char line[128];
        std::snprintf(line, sizeof line, "%-6d %12.5f %12.5f %12.5f %12.5f\n", b.id, b.p_kw,
                      b.q_kvar, b.v_kv, b.delta_rad);
        out << line;
    }
    if (!sol.converters.empty()) {
        out << '\n' << "converter  from  to  direction  input [kW]  output [kW]  loss [kW]\n";
        for (const ConverterSolution& c : sol.converters) {
            char line[160];
            std::snprintf(line, sizeof line, "%-9d %5d %3d  %-9s %11.5f %12.5f %10.5f\n", c.index,
                          c.from, c.to, c.forward ? "forward" : "reverse", c.input_kw, c.output_kw,
                          c.loss_kw);
            out << line;
        }
    }
    if (!sol.branches.empty()) {
        out << '\n' << "branch          from  to  I [kA]       loss [kW]\n";
        for (const BranchSolution& b : sol.branches) {
            char line[160];
            std::snprintf(line, sizeof line, "%-11s %-3d %5d %3d %12.5f %11.5f\n",
                          b.kind == BranchSolution::Kind::line ? "line" : "transformer", b.index,
                          b.from, b.to, b.current_ka, b.loss_kw);
            out << line;
        }
    }
    out << '\n';
    out << "total generation  " << fixed(sol.total_generation_kw, 5) << " kW\n";
    out << "external grid     " << fixed(sol.external_grid_kw, 5) << " kW\n";
    out << "total load        " << fixed(sol.total_load_kw, 5) << " kW\n";
    out << "total loss        " << fixed(sol.total_loss_kw, 5) << " kW\n";
    out << "residuals         eq " << scientific(sol.residuals.equality_inf) << "  ineq "
        << scientific(sol.residuals.inequality_inf) << "  stat "
        << scientific(sol.residuals.stationarity_inf) << '\n';
    out << "iterations        outer " << sol.outer_iterations << "  inner " << sol.inner_iterations
        << "  time " << fixed(sol.solve_seconds, 3) << " s\n";
    if (!sol.message.empty()) out << "message           " << sol.message << '\n';
    return out.str();
}

std::string render_kpis(const std::vector<std::pair<std::string, KpiReport>>& reports,
                        ReportFormat format) {
    if (format == ReportFormat::structured) {
        json doc;
        doc["format_version"] = kFormatVersion;
        doc["reports"] = json::array();
        for (const auto& [label, report] : reports) doc["reports"].push_back(kpi_to_json(label, report));
        return doc.dump(2) + "\n";
    }

    auto cell = [](const KpiReport& r, int row) -> std::string {
        switch (row) {
            case 0: return fixed(r.kpi1_kwh_per_year, 5);
            case 1: return fixed(r.kpi2_kgco2_per_year, 5);
            case 2: return r.kpi3_pct ? fixed(*r.kpi3_pct, 5) : "n/a";
            case 3: return fixed(r.kpi4_kw, 5);
            case 4: return fixed(r.kpi5_eur, 2);
            case 5: return fixed(r.kpi6_eur, 2);
            case 6: return r.kpi7_years ? std::to_string(*r.kpi7_years) : "never";
            case 7: return r.kpi8_eur_per_kwh ? fixed(*r.kpi8_eur_per_kwh, 5) : "n/a";
        }
        return "";
    };
    static const char* row_names[] = {"kpi1_kwh_per_year", "kpi2_kgco2_per_year", "kpi3_pct",
                                      "kpi4_kw",           "kpi5_eur",            "kpi6_eur",
                                      "kpi7_years",        "kpi8_eur_per_kwh"};

    if (format == ReportFormat::csv) {
        std::ostringstream out;
        out << "kpi";
        for (const auto& [label, report] : reports) out << ',' << label;
        out << '\n';
        for (int row = 0; row < 8; ++row) {
            out << row_names[row];
            for (const auto& [label, report] : reports) out << ',' << cell(report, row);
            out << '\n';
        }
        return out.str();
    }

    std::ostringstream out;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-20s", "kpi");
    out << buf;
    for (const auto& [label, report] : reports) {
        std::snprintf(buf, sizeof buf, " %15s", label.c_str());
        out << buf;
    }
    out << '\n';
    for (int row = 0; row < 8; ++row) {
        std::snprintf(buf, sizeof buf, "%-20s", row_names[row]);
        out << buf;
        for (const auto& [label, report] : reports) {
            std::snprintf(buf, sizeof buf, " %15s", cell(report, row).c_str());
            out << buf;
        }
        out << '\n';
    }
    return out.str();
}

std::string render_error_table(const ErrorTable& table, ReportFormat format) {
    if (format == ReportFormat::structured) return error_table_to_json(table).dump(2) + "\n";
    if (format == ReportFormat::csv) {
        std::ostringstream out;
        out << "label,bus,quantity,simulated,measured,error,relative,gated\n";
        for (const ErrorRow& row : table.rows)
            out << table.label << ',' << row.bus << ',' << row.quantity << ','
                << fixed(row.simulated, 5) << ',' << fixed(row.measured, 5) << ','
                << fixed(row.error, 6) << ',' << (row.relative ? 1 : 0) << ','
                << (row.gated ? 1 : 0) << '\n';
        return out.str();
    }

    std::ostringstream out;
    out << "scenario " << table.label << '\n';
    out << "bus  qty  simulated     measured      error         gate\n";
    for (const ErrorRow& row : table.rows) {
        std::string err = row.relative ? fixed(row.error * 100.0, 3) + " %"
                                       : fixed(row.error, 5) + " abs";
        char line[160];
        std::snprintf(line, sizeof line, "%-4d %-4c %13.5f %13.5f %-13s %s\n", row.bus,
                      row.quantity == 'p' ? 'P' : 'V', row.simulated, row.measured, err.c_str(),
                      row.gated ? "yes" : "no");
        out << line;
    }
    out << "max gated error   P " << fixed(table.max_power_error * 100.0, 3) << " %  V "
        << fixed(table.max_voltage_error * 100.0, 3) << " %\n";
    out << "result            " << (table.pass ? "PASS" : "FAIL") << '\n';
    return out.str();
}

namespace {

ReportFormat format_from(const std::string& name) {
    if (name == "json") return ReportFormat::structured;
    if (name == "csv") return ReportFormat::csv;
    return ReportFormat::text;
}

ExternalGridMode grid_mode_from(const std::string& name) {
    if (name == "supply") return ExternalGridMode::supply_only;
    if (name == "either") return ExternalGridMode::either;
    return ExternalGridMode::consume_only;
}

int emit(const std::string& text, const std::string& output_path) {
    if (output_path.empty()) {
        std::cout << text;
        return 0;
    }
    std::ofstream out(output_path);
    if (!out) {
        std::cerr << output_path << ": cannot open for writing\n";
        return 2;
    }
    out << text;
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"hybrid AC/DC microgrid dispatch and techno-economic assessment"};
    app.require_subcommand(1);

    std::string network_path, economics_path, measurements_path, output_path;
    std::string objective = "h1", grid_mode = "consume", format = "text";
    std::string econ_scenario = "all", compare_scenario = "all", oc_treatment;
    double storage_fraction = 0.5, s_base = 100.0;

    CLI::App* solve_cmd = app.add_subcommand("solve", "solve one dispatch objective");
    solve_cmd->add_option("--network", network_path, "network JSON file")->required();
    solve_cmd->add_option("--objective", objective, "h1|h2|h3|h4")
        ->check(CLI::IsMember({"h1", "h2", "h3", "h4"}));
    solve_cmd->add_option("--grid-mode", grid_mode, "consume|supply|either")
        ->check(CLI::IsMember({"consume", "supply", "either"}));
    solve_cmd->add_option("--storage-fraction", storage_fraction,
                          "storage share dispatched as load, in [0,1]");
    solve_cmd->add_option("--s-base-kva", s_base, "per-unit power base");
    solve_cmd->add_option("--format", format, "text|json|csv")
        ->check(CLI::IsMember({"text", "json", "csv"}));
    solve_cmd->add_option("--output", output_path, "write the report to a file");

    CLI::App* kpi_cmd = app.add_subcommand("kpi", "techno-economic indicator report");
    kpi_cmd->add_option("--network", network_path, "network JSON file")->required();
    kpi_cmd->add_option("--economics", economics_path, "economics JSON file")->required();
    kpi_cmd->add_option("--scenario", econ_scenario, "all|baseline|no-battery|battery-flex|vb-flex")
        ->check(CLI::IsMember({"all", "baseline", "no-battery", "battery-flex", "vb-flex"}));
    kpi_cmd->add_option("--oc-treatment", oc_treatment, "discounted|literal")
        ->check(CLI::IsMember({"discounted", "literal"}));
    kpi_cmd->add_option("--format", format, "text|json|csv")
        ->check(CLI::IsMember({"text", "json", "csv"}));
    kpi_cmd->add_option("--output", output_path, "write the report to a file");

    CLI::App* compare_cmd = app.add_subcommand("compare", "validate against field measurements");
    compare_cmd->add_option("--network", network_path, "network JSON file")->required();
    compare_cmd->add_option("--measurements", measurements_path, "measurements JSON file")
        ->required();
    compare_cmd->add_option("--scenario", compare_scenario, "all|h1|h2|h3|h4")
        ->check(CLI::IsMember({"all", "h1", "h2", "h3", "h4"}));
    compare_cmd->add_option("--grid-mode", grid_mode, "consume|supply|either")
        ->check(CLI::IsMember({"consume", "supply", "either"}));
    compare_cmd->add_option("--storage-fraction", storage_fraction,
                            "storage share dispatched as load, in [0,1]");
    compare_cmd->add_option("--s-base-kva", s_base, "per-unit power base");
    compare_cmd->add_option("--format", format, "text|json|csv")
        ->check(CLI::IsMember({"text", "json", "csv"}));
    compare_cmd->add_option("--output", output_path, "write the report to a file");

    CLI::App* validate_cmd = app.add_subcommand("validate", "structural network diagnostics");
    validate_cmd->add_option("--network", network_path, "network JSON file")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (validate_cmd->parsed()) {
            NetworkModel net = load_network(network_path);
            std::vector<std::string> diagnostics = validate(net);
            if (diagnostics.empty()) {
                std::cout << "ok: " << net.buses.size() << " buses, " << net.lines.size()
                          << " lines, " << net.transformers.size() << " transformers, "
                          << net.converters.size() << " converters\n";
                return 0;
            }
            for (const std::string& d : diagnostics) std::cout << d << '\n';
            return 1;
        }

        if (solve_cmd->parsed()) {
            NetworkModel net = load_network(network_path);
            std::vector<std::string> diagnostics = validate(net);
            if (!diagnostics.empty()) {
                for (const std::string& d : diagnostics) std::cerr << d << '\n';
                return 1;
            }
            OpfScenario scenario;
            scenario.objective = objective_from(objective);
            scenario.storage_load_fraction = storage_fraction;
            scenario.grid_mode = grid_mode_from(grid_mode);
            OpfSolution sol = solve_opf(per_unit_normalize(net, s_base), scenario);
            int rc = emit(render_solution(sol, format_from(format)), output_path);
            if (rc != 0) return rc;
            return sol.status == SolutionStatus::converged ? 0 : 1;
        }

        if (kpi_cmd->parsed()) {
            NetworkModel net = load_network(network_path);
            EconomicFixture fixture = load_economics(economics_path);
            if (oc_treatment == "discounted")
                fixture.model.oc_treatment = OcTreatment::discounted_energy;
            else if (oc_treatment == "literal")
                fixture.model.oc_treatment = OcTreatment::upfront_literal;

            static const std::pair<const char*, EconomicScenarioKind> kinds[] = {
                {"baseline", EconomicScenarioKind::baseline},
                {"no-battery", EconomicScenarioKind::no_battery},
                {"battery-flex", EconomicScenarioKind::battery_flex},
                {"vb-flex", EconomicScenarioKind::vb_flex}};
            std::vector<std::pair<std::string, KpiReport>> reports;
            for (const auto& [label, kind] : kinds) {
                if (econ_scenario != "all" && econ_scenario != label) continue;
                EconomicScenario es{kind, fixture.market};
                EconomicCase c = apply_economic_scenario(fixture, net, es);
                reports.emplace_back(label, kpi_report(c.network, c.model));
            }
            return emit(render_kpis(reports, format_from(format)), output_path);
        }

        if (compare_cmd->parsed()) {
            NetworkModel net = load_network(network_path);
            std::vector<std::string> diagnostics = validate(net);
            if (!diagnostics.empty()) {
                for (const std::string& d : diagnostics) std::cerr << d << '\n';
                return 1;
            }
            NetworkModel normalized = per_unit_normalize(net, s_base);
            MeasurementSet set = load_measurements(measurements_path);
            bool all_pass = true;
            std::ostringstream text;
            json structured = json::array();
            for (const MeasurementScenario& measured : set.scenarios) {
                if (compare_scenario != "all" && compare_scenario != measured.label) continue;
                OpfScenario scenario;
                scenario.objective = objective_from(measured.label);
                scenario.storage_load_fraction = storage_fraction;
                scenario.grid_mode = grid_mode_from(grid_mode);
                OpfSolution sol = solve_opf(normalized, scenario);
                if (sol.status != SolutionStatus::converged) {
                    all_pass = false;
                    text << "scenario " << measured.label << ": solver did not converge ("
                         << sol.message << ")\n";
                    continue;
                }
                ErrorTable table = compare_measurements(sol, measured);
                all_pass = all_pass && table.pass;
                if (format_from(format) == ReportFormat::structured)
                    structured.push_back(error_table_to_json(table));
                else
                    text << render_error_table(table, format_from(format)) << '\n';
            }
            std::string rendered = format_from(format) == ReportFormat::structured
                                       ? structured.dump(2) + "\n"
                                       : text.str();
            int rc = emit(rendered, output_path);
            if (rc != 0) return rc;
            return all_pass ? 0 : 1;
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}

}  // namespace microgrid
