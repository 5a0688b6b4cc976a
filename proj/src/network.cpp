#include "microgrid/network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include <nlohmann/json.hpp>

namespace microgrid {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key, const std::string& locus) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null())
        throw ParseError(locus + ": missing field '" + key + "'");
    return *it;
}

double number(const json& obj, const char* key, const std::string& locus) {
    const json& v = require(obj, key, locus);
    if (!v.is_number()) throw ParseError(locus + ": field '" + key + "' must be a number");
    return v.get<double>();
}

double number_or(const json& obj, const char* key, double fallback, const std::string& locus) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    if (!it->is_number()) throw ParseError(locus + ": field '" + key + "' must be a number");
    return it->get<double>();
}

int integer(const json& obj, const char* key, const std::string& locus) {
    const json& v = require(obj, key, locus);
    if (!v.is_number_integer()) throw ParseError(locus + ": field '" + key + "' must be an integer");
    return v.get<int>();
}

std::string text(const json& obj, const char* key, const std::string& locus) {
    const json& v = require(obj, key, locus);
    if (!v.is_string()) throw ParseError(locus + ": field '" + key + "' must be a string");
    return v.get<std::string>();
}

CurrentKind parse_kind(const std::string& s, const std::string& locus) {
    if (s == "ac") return CurrentKind::ac;
    if (s == "dc") return CurrentKind::dc;
    throw ParseError(locus + ": kind must be 'ac' or 'dc', got '" + s + "'");
}

ConverterControl parse_control(const std::string& s, const std::string& locus) {
    if (s == "grid_forming") return ConverterControl::grid_forming;
    if (s == "grid_following") return ConverterControl::grid_following;
    throw ParseError(locus + ": control must be 'grid_forming' or 'grid_following', got '" + s + "'");
}

ExternalGridMode parse_mode(const std::string& s, const std::string& locus) {
    if (s == "consume_only") return ExternalGridMode::consume_only;
    if (s == "supply_only") return ExternalGridMode::supply_only;
    if (s == "either") return ExternalGridMode::either;
    throw ParseError(locus + ": mode must be 'consume_only', 'supply_only' or 'either', got '" + s + "'");
}

void check_bus(int id, size_t bus_count, const std::string& locus) {
    if (id < 0 || static_cast<size_t>(id) >= bus_count)
        throw ParseError(locus + ": unknown bus id " + std::to_string(id));
}

void check_positive(double v, const char* what, const std::string& locus) {
    if (!(v > 0.0)) throw ParseError(locus + ": " + what + " must be positive");
}

void check_nonnegative(double v, const char* what, const std::string& locus) {
    if (v < 0.0) throw ParseError(locus + ": " + what + " must be nonnegative");
}

std::string locus_of(const char* array, size_t i) {
    return std::string(array) + "[" + std::to_string(i) + "]";
}

}  // namespace

NetworkModel parse_network(const json& document) {
    if (!document.is_object()) throw ParseError("document: expected a JSON object");
    if (auto it = document.find("format_version"); it != document.end()) {
        if (!it->is_number_integer() || it->get<int>() != 1)
            throw ParseError("document: unsupported format_version");
    }

    NetworkModel model;
    model.omega_rad_per_s = number_or(document, "omega_rad_per_s",
                                      100.0 * 3.14159265358979323846, "document");
    check_positive(model.omega_rad_per_s, "omega_rad_per_s", "document");

    const json empty = json::array();
    auto array_of = [&](const char* key) -> const json& {
        auto it = document.find(key);
        if (it == document.end()) return empty;
        if (!it->is_array()) throw ParseError(std::string("document: '") + key + "' must be an array");
        return *it;
    };

    const json& buses = array_of("buses");
    std::set<int> seen_ids;
    for (size_t i = 0; i < buses.size(); ++i) {
        const std::string locus = locus_of("buses", i);
        const json& b = buses[i];
        BusRecord rec;
        rec.id = integer(b, "id", locus);
        if (!seen_ids.insert(rec.id).second)
            throw ParseError(locus + ": duplicate bus id " + std::to_string(rec.id));
        rec.v_nominal_kv = number(b, "v_nominal_kv", locus);
        check_positive(rec.v_nominal_kv, "v_nominal_kv", locus);
        rec.kind = parse_kind(text(b, "kind", locus), locus);
        rec.v_max_pu = number_or(b, "v_max_pu", 1.05, locus);
        rec.v_min_pu = number_or(b, "v_min_pu", 0.95, locus);
        if (!(rec.v_min_pu > 0.0) || !(rec.v_max_pu > rec.v_min_pu))
            throw ParseError(locus + ": voltage band must satisfy 0 < v_min_pu < v_max_pu");
        model.buses.push_back(rec);
    }
    for (size_t i = 0; i < model.buses.size(); ++i) {
        if (seen_ids.count(static_cast<int>(i)) == 0)
            throw ParseError("buses: ids must be contiguous from 0 (missing " + std::to_string(i) + ")");
    }
    std::sort(model.buses.begin(), model.buses.end(),
              [](const BusRecord& a, const BusRecord& b) { return a.id < b.id; });

    const json& lines = array_of("lines");
    for (size_t i = 0; i < lines.size(); ++i) {
        const std::string locus = locus_of("lines", i);
        const json& l = lines[i];
        LineRecord rec;
        rec.from = integer(l, "from", locus);
        rec.to = integer(l, "to", locus);
        check_bus(rec.from, model.buses.size(), locus);
        check_bus(rec.to, model.buses.size(), locus);
        rec.length_km = number(l, "length_km", locus);
        check_positive(rec.length_km, "length_km", locus);
        rec.r_ohm_per_km = number(l, "r_ohm_per_km", locus);
        check_nonnegative(rec.r_ohm_per_km, "r_ohm_per_km", locus);
        rec.x_ohm_per_km = number_or(l, "x_ohm_per_km", 0.0, locus);
        check_nonnegative(rec.x_ohm_per_km, "x_ohm_per_km", locus);
        rec.c_nf_per_km = number_or(l, "c_nf_per_km", 0.0, locus);
        check_nonnegative(rec.c_nf_per_km, "c_nf_per_km", locus);
        rec.i_max_ka = number(l, "i_max_ka", locus);
        check_positive(rec.i_max_ka, "i_max_ka", locus);
        rec.kind = parse_kind(text(l, "kind", locus), locus);
        if (rec.kind == CurrentKind::dc && (rec.x_ohm_per_km != 0.0 || rec.c_nf_per_km != 0.0))
            throw ParseError(locus + ": reactive parameter on dc line");
        if (rec.r_ohm_per_km == 0.0 && rec.x_ohm_per_km == 0.0)
            throw ParseError(locus + ": line impedance must be nonzero");
        model.lines.push_back(rec);
    }

    const json& transformers = array_of("transformers");
    for (size_t i = 0; i < transformers.size(); ++i) {
        const std::string locus = locus_of("transformers", i);
        const json& t = transformers[i];
        TransformerRecord rec;
        rec.from = integer(t, "from", locus);
        rec.to = integer(t, "to", locus);
        check_bus(rec.from, model.buses.size(), locus);
        check_bus(rec.to, model.buses.size(), locus);
        rec.s_n_kva = number(t, "s_n_kva", locus);
        check_positive(rec.s_n_kva, "s_n_kva", locus);
        rec.v_ccl_pct = number(t, "v_ccl_pct", locus);
        check_positive(rec.v_ccl_pct, "v_ccl_pct", locus);
        rec.v_rccl_pct = number(t, "v_rccl_pct", locus);
        check_nonnegative(rec.v_rccl_pct, "v_rccl_pct", locus);
        if (rec.v_rccl_pct > rec.v_ccl_pct)
            throw ParseError(locus + ": v_rccl_pct cannot exceed v_ccl_pct");
        rec.v_ln_kv = number(t, "v_ln_kv", locus);
        check_positive(rec.v_ln_kv, "v_ln_kv", locus);
        auto matches = [&](int bus) {
            double nominal = model.bus(bus).v_nominal_kv;
            return std::abs(nominal - rec.v_ln_kv) <= 1e-6 * std::max(nominal, rec.v_ln_kv);
        };
        if (!matches(rec.from) && !matches(rec.to))
            throw ParseError(locus + ": v_ln_kv matches neither endpoint nominal voltage");
        model.transformers.push_back(rec);
    }

    const json& converters = array_of("converters");
    for (size_t i = 0; i < converters.size(); ++i) {
        const std::string locus = locus_of("converters", i);
        const json& c = converters[i];
        ConverterRecord rec;
        rec.from = integer(c, "from", locus);
        rec.to = integer(c, "to", locus);
        check_bus(rec.from, model.buses.size(), locus);
        check_bus(rec.to, model.buses.size(), locus);
        rec.s_n_kva = number(c, "s_n_kva", locus);
        check_positive(rec.s_n_kva, "s_n_kva", locus);
        rec.efficiency = number(c, "efficiency", locus);
        if (!(rec.efficiency > 0.0) || rec.efficiency > 1.0)
            throw ParseError(locus + ": efficiency must lie in (0, 1]");
        rec.control = parse_control(text(c, "control", locus), locus);
        model.converters.push_back(rec);
    }

    const json& generators = array_of("generators");
    for (size_t i = 0; i < generators.size(); ++i) {
        const std::string locus = locus_of("generators", i);
        const json& g = generators[i];
        GeneratorRecord rec;
        rec.bus = integer(g, "bus", locus);
        check_bus(rec.bus, model.buses.size(), locus);
        rec.p_nom_kw = number(g, "p_nom_kw", locus);
        rec.p_min_kw = number_or(g, "p_min_kw", 0.0, locus);
        rec.q_nom_kvar = number_or(g, "q_nom_kvar", 0.0, locus);
        rec.q_min_kvar = number_or(g, "q_min_kvar", 0.0, locus);
        if (rec.p_min_kw > rec.p_nom_kw)
            throw ParseError(locus + ": p_min_kw exceeds p_nom_kw");
        if (rec.q_min_kvar > rec.q_nom_kvar)
            throw ParseError(locus + ": q_min_kvar exceeds q_nom_kvar");
        if (auto it = g.find("econ"); it != g.end() && !it->is_null()) {
            const std::string elocus = locus + ".econ";
            rec.econ.ic_eur = number_or(*it, "ic_eur", 0.0, elocus);
            rec.econ.rv_eur = number_or(*it, "rv_eur", 0.0, elocus);
            rec.econ.mc_eur_per_year = number_or(*it, "mc_eur_per_year", 0.0, elocus);
            rec.econ.oc_eur_per_kwh = number_or(*it, "oc_eur_per_kwh", 0.0, elocus);
            rec.econ.cf_pct = number_or(*it, "cf_pct", 0.0, elocus);
            rec.econ.ghg_kg_per_kwh = number_or(*it, "ghg_kg_per_kwh", 0.0, elocus);
            if (rec.econ.cf_pct < 0.0 || rec.econ.cf_pct > 100.0)
                throw ParseError(elocus + ": cf_pct must lie in [0, 100]");
        }
        model.generators.push_back(rec);
    }

    const json& loads = array_of("loads");
    for (size_t i = 0; i < loads.size(); ++i) {
        const std::string locus = locus_of("loads", i);
        const json& l = loads[i];
        LoadRecord rec;
        rec.bus = integer(l, "bus", locus);
        check_bus(rec.bus, model.buses.size(), locus);
        rec.p_kw = number(l, "p_kw", locus);
        check_nonnegative(rec.p_kw, "p_kw", locus);
        rec.q_kvar = number_or(l, "q_kvar", 0.0, locus);
        model.loads.push_back(rec);
    }

    const json& storages = array_of("storages");
    for (size_t i = 0; i < storages.size(); ++i) {
        const std::string locus = locus_of("storages", i);
        const json& s = storages[i];
        StorageRecord rec;
        rec.bus = integer(s, "bus", locus);
        check_bus(rec.bus, model.buses.size(), locus);
        rec.p_nominal_kw = number(s, "p_nominal_kw", locus);
        check_positive(rec.p_nominal_kw, "p_nominal_kw", locus);
        model.storages.push_back(rec);
    }

    const json& grids = array_of("external_grids");
    for (size_t i = 0; i < grids.size(); ++i) {
        const std::string locus = locus_of("external_grids", i);
        const json& g = grids[i];
        ExternalGridRecord rec;
        rec.bus = integer(g, "bus", locus);
        check_bus(rec.bus, model.buses.size(), locus);
        rec.mode = parse_mode(text(g, "mode", locus), locus);
        model.external_grids.push_back(rec);
    }

    return model;
}

BranchImpedance branch_impedance(const LineRecord& line, double omega_rad_per_s) {
    BranchImpedance z;
    z.r_ohm = line.r_ohm_per_km * line.length_km;
    z.x_ohm = line.x_ohm_per_km * line.length_km;
    z.b_siemens = omega_rad_per_s * line.c_nf_per_km * 1e-9 * line.length_km;
    return z;
}

BranchImpedance branch_impedance(const TransformerRecord& xf) {
    // |z| and r from the short-circuit test percentages on the v_ln winding.
    double base = 1000.0 * xf.v_ln_kv * xf.v_ln_kv / xf.s_n_kva;  // ohm
    BranchImpedance z;
    double z_abs = xf.v_ccl_pct / 100.0 * base;
    z.r_ohm = xf.v_rccl_pct / 100.0 * base;
    z.x_ohm = std::sqrt(std::max(0.0, z_abs * z_abs - z.r_ohm * z.r_ohm));
    return z;
}

namespace {

BranchAdmittance to_admittance(const BranchImpedance& z, double z_base_ohm) {
    double r = z.r_ohm / z_base_ohm;
    double x = z.x_ohm / z_base_ohm;
    double mag2 = r * r + x * x;
    BranchAdmittance y;
    y.conductance_pu = r / mag2;
    y.susceptance_pu = -x / mag2;
    y.shunt_pu = z.b_siemens * z_base_ohm;
    return y;
}

}  // namespace

BranchAdmittance branch_admittance(const LineRecord& line, const NetworkModel& model,
                                   const PerUnitSystem& pu) {
    (void)model;
    return to_admittance(branch_impedance(line, model.omega_rad_per_s), pu.z_base_ohm(line.from));
}

BranchAdmittance branch_admittance(const TransformerRecord& xf, const NetworkModel& model,
                                   const PerUnitSystem& pu) {
    // Impedance is referred to the winding whose bus nominal equals v_ln.
    int ref = xf.from;
    double from_nominal = model.bus(xf.from).v_nominal_kv;
    if (std::abs(from_nominal - xf.v_ln_kv) > 1e-6 * std::max(from_nominal, xf.v_ln_kv))
        ref = xf.to;
    return to_admittance(branch_impedance(xf), pu.z_base_ohm(ref));
}

NetworkModel per_unit_normalize(const NetworkModel& model, double s_base_kva) {
    if (!(s_base_kva > 0.0)) throw std::invalid_argument("s_base_kva must be positive");
    NetworkModel out = model;
    PerUnitSystem pu;
    pu.s_base_kva = s_base_kva;
    pu.v_base_kv.resize(model.buses.size());
    for (const BusRecord& b : model.buses) pu.v_base_kv[b.id] = b.v_nominal_kv;
    out.line_admittances.clear();
    out.transformer_admittances.clear();
    for (const LineRecord& l : model.lines)
        out.line_admittances.push_back(branch_admittance(l, model, pu));
    for (const TransformerRecord& t : model.transformers)
        out.transformer_admittances.push_back(branch_admittance(t, model, pu));
    out.pu = std::move(pu);
    return out;
}

NetworkModel denormalize(const NetworkModel& model) {
    NetworkModel out = model;
    out.pu.reset();
    out.line_admittances.clear();
    out.transformer_admittances.clear();
    return out;
}

std::vector<std::string> validate(const NetworkModel& model) {
    std::vector<std::string> diagnostics;
    size_t n = model.buses.size();

    for (size_t i = 0; i < model.converters.size(); ++i) {
        if (model.converters[i].from == model.converters[i].to)
            diagnostics.push_back(locus_of("converters", i) + ": endpoints must be distinct buses");
    }
    for (size_t i = 0; i < model.lines.size(); ++i) {
        const LineRecord& l = model.lines[i];
        if (l.from == l.to) {
            diagnostics.push_back(locus_of("lines", i) + ": endpoints must be distinct buses");
            continue;
        }
        CurrentKind from_kind = model.bus(l.from).kind;
        CurrentKind to_kind = model.bus(l.to).kind;
        if (from_kind != to_kind)
            diagnostics.push_back(locus_of("lines", i) + ": endpoints mix ac and dc buses");
        else if (from_kind != l.kind)
            diagnostics.push_back(locus_of("lines", i) + ": line kind does not match its buses");
    }
    for (size_t i = 0; i < model.transformers.size(); ++i) {
        const TransformerRecord& t = model.transformers[i];
        if (t.from == t.to)
            diagnostics.push_back(locus_of("transformers", i) + ": endpoints must be distinct buses");
        else if (model.bus(t.from).kind != model.bus(t.to).kind)
            diagnostics.push_back(locus_of("transformers", i) + ": endpoints mix ac and dc buses");
    }

    if (n == 0) return diagnostics;

    // Islands over lines + transformers + converters.
    std::vector<int> component(n, -1);
    int components = 0;
    std::vector<std::vector<int>> adjacency(n);
    auto add_edge = [&](int a, int b) {
        if (a != b) {
            adjacency[a].push_back(b);
            adjacency[b].push_back(a);
        }
    };
    for (const LineRecord& l : model.lines) add_edge(l.from, l.to);
    for (const TransformerRecord& t : model.transformers) add_edge(t.from, t.to);
    for (const ConverterRecord& c : model.converters) add_edge(c.from, c.to);
    for (size_t start = 0; start < n; ++start) {
        if (component[start] >= 0) continue;
        int id = components++;
        std::queue<int> frontier;
        frontier.push(static_cast<int>(start));
        component[start] = id;
        while (!frontier.empty()) {
            int bus = frontier.front();
            frontier.pop();
            for (int next : adjacency[bus]) {
                if (component[next] < 0) {
                    component[next] = id;
                    frontier.push(next);
                }
            }
        }
    }
    if (components > 1)
        diagnostics.push_back("network is not connected (" + std::to_string(components) + " islands)");

    std::vector<bool> referenced(static_cast<size_t>(components), false);
    for (const ExternalGridRecord& g : model.external_grids)
        referenced[component[g.bus]] = true;
    for (const ConverterRecord& c : model.converters) {
        if (c.control == ConverterControl::grid_forming) referenced[component[c.to]] = true;
    }
    for (int island = 0; island < components; ++island) {
        if (referenced[island]) continue;
        int witness = 0;
        for (size_t b = 0; b < n; ++b) {
            if (component[b] == island) {
                witness = static_cast<int>(b);
                break;
            }
        }
        diagnostics.push_back("island containing bus " + std::to_string(witness) +
                              " has no voltage reference (grid-forming converter or external grid)");
    }

    return diagnostics;
}

}  // namespace microgrid
