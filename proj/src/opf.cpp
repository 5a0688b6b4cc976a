#include "microgrid/opf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace microgrid {

// Assembled problem state shared by the solver callbacks and the diagnostics.
struct OpfProblem::Body {
    NetworkModel net;  // scenario-applied, still normalized
    OpfScenario scenario;
    Objective objective = Objective::h1;
    StateLayout layout;
    std::vector<double> p_load_pu;  // by bus, demanded magnitudes
    std::vector<double> q_load_pu;
    std::vector<int> forming;  // converter indices with grid_forming control
    std::vector<EqualityInfo> equality_set;
    std::vector<InequalityInfo> inequality_set;
    double s_big_pu = 1.0;  // external-grid exchange cap
    NlpProblem nlp;
};

namespace {

using Body = OpfProblem::Body;

template <class S>
S bus_e(const Body& b, int bus, std::span<const S> x) {
    return x[b.layout.bus_e[bus]];
}

template <class S>
S bus_f(const Body& b, int bus, std::span<const S> x) {
    int k = b.layout.bus_f[bus];
    return k < 0 ? S(0.0) : x[k];
}

// Active power leaving `i` toward `k` over a series branch. With f == 0 on DC
// buses and s == 0 on DC branches this reduces to c * e_i * (e_i - e_k).
template <class S>
S branch_p_out(const Body& b, const BranchAdmittance& y, int i, int k, std::span<const S> x) {
    S ei = bus_e(b, i, x), fi = bus_f(b, i, x);
    S ek = bus_e(b, k, x), fk = bus_f(b, k, x);
    return y.conductance_pu * (ei * ei + fi * fi - ei * ek - fi * fk) +
           y.susceptance_pu * (ei * fk - ek * fi);
}

// Reactive power leaving `i` toward `k`, including this end's half of the
// charging susceptance.
template <class S>
S branch_q_out(const Body& b, const BranchAdmittance& y, int i, int k, std::span<const S> x) {
    S ei = bus_e(b, i, x), fi = bus_f(b, i, x);
    S ek = bus_e(b, k, x), fk = bus_f(b, k, x);
    S v2 = ei * ei + fi * fi;
    return y.conductance_pu * (ei * fk - ek * fi) +
           y.susceptance_pu * (ei * ek + fi * fk - v2) - 0.5 * y.shunt_pu * v2;
}

template <class S>
S active_residual_t(const Body& b, int bus, std::span<const S> x) {
    S acc = S(b.p_load_pu[bus]);
    for (size_t l = 0; l < b.net.lines.size(); ++l) {
        const LineRecord& rec = b.net.lines[l];
        if (rec.from == bus)
            acc += branch_p_out(b, b.net.line_admittances[l], rec.from, rec.to, x);
        else if (rec.to == bus)
            acc += branch_p_out(b, b.net.line_admittances[l], rec.to, rec.from, x);
    }
    for (size_t t = 0; t < b.net.transformers.size(); ++t) {
        const TransformerRecord& rec = b.net.transformers[t];
        if (rec.from == bus)
            acc += branch_p_out(b, b.net.transformer_admittances[t], rec.from, rec.to, x);
        else if (rec.to == bus)
            acc += branch_p_out(b, b.net.transformer_admittances[t], rec.to, rec.from, x);
    }
    for (size_t c = 0; c < b.net.converters.size(); ++c) {
        const ConverterRecord& rec = b.net.converters[c];
        S fwd = x[b.layout.conv_fwd[c]];
        S rev = x[b.layout.conv_rev[c]];
        if (rec.from == bus) acc += fwd - rec.efficiency * rev;
        if (rec.to == bus) acc += rev - rec.efficiency * fwd;
    }
    for (size_t g = 0; g < b.net.generators.size(); ++g)
        if (b.net.generators[g].bus == bus) acc -= x[b.layout.gen_p[g]];
    for (size_t g = 0; g < b.net.external_grids.size(); ++g)
        if (b.net.external_grids[g].bus == bus) acc -= x[b.layout.ext_p[g]];
    return acc;
}

template <class S>
S reactive_residual_t(const Body& b, int bus, std::span<const S> x) {
    S acc = S(b.q_load_pu[bus]);
    for (size_t l = 0; l < b.net.lines.size(); ++l) {
        const LineRecord& rec = b.net.lines[l];
        if (rec.from == bus)
            acc += branch_q_out(b, b.net.line_admittances[l], rec.from, rec.to, x);
        else if (rec.to == bus)
            acc += branch_q_out(b, b.net.line_admittances[l], rec.to, rec.from, x);
    }
    for (size_t t = 0; t < b.net.transformers.size(); ++t) {
        const TransformerRecord& rec = b.net.transformers[t];
        if (rec.from == bus)
            acc += branch_q_out(b, b.net.transformer_admittances[t], rec.from, rec.to, x);
        else if (rec.to == bus)
            acc += branch_q_out(b, b.net.transformer_admittances[t], rec.to, rec.from, x);
    }
    for (size_t g = 0; g < b.net.generators.size(); ++g)
        if (b.net.generators[g].bus == bus) acc -= x[b.layout.gen_q[g]];
    for (size_t g = 0; g < b.net.external_grids.size(); ++g)
        if (b.net.external_grids[g].bus == bus) acc -= x[b.layout.ext_q[g]];
    return acc;
}

template <class S>
S forming_residual_t(const Body& b, int converter, std::span<const S> x) {
    int bus = b.net.converters[converter].to;
    S e = bus_e(b, bus, x), f = bus_f(b, bus, x);
    return e * e + f * f - 1.0;
}

template <class S>
void equalities_t(const Body& b, std::span<const S> x, std::span<S> out) {
    size_t row = 0;
    for (const BusRecord& bus : b.net.buses) out[row++] = active_residual_t(b, bus.id, x);
    for (const BusRecord& bus : b.net.buses)
        if (bus.kind == CurrentKind::ac) out[row++] = reactive_residual_t(b, bus.id, x);
    for (int c : b.forming) out[row++] = forming_residual_t(b, c, x);
}

template <class S>
void inequalities_t(const Body& b, std::span<const S> x, std::span<S> out) {
    size_t row = 0;
    const PerUnitSystem& pu = *b.net.pu;
    for (const BusRecord& bus : b.net.buses) {
        S v2 = sq(bus_e(b, bus.id, x)) + sq(bus_f(b, bus.id, x));
        out[row++] = v2 - bus.v_max_pu * bus.v_max_pu;
    }
    for (const BusRecord& bus : b.net.buses) {
        S v2 = sq(bus_e(b, bus.id, x)) + sq(bus_f(b, bus.id, x));
        out[row++] = bus.v_min_pu * bus.v_min_pu - v2;
    }
    for (size_t l = 0; l < b.net.lines.size(); ++l) {
        const LineRecord& rec = b.net.lines[l];
        const BranchAdmittance& y = b.net.line_admittances[l];
        S de = bus_e(b, rec.from, x) - bus_e(b, rec.to, x);
        S df = bus_f(b, rec.from, x) - bus_f(b, rec.to, x);
        double y2 = y.conductance_pu * y.conductance_pu + y.susceptance_pu * y.susceptance_pu;
        double imax = rec.i_max_ka / pu.i_base_ka(rec.from);
        out[row++] = y2 * (de * de + df * df) - imax * imax;
    }
    for (size_t t = 0; t < b.net.transformers.size(); ++t) {
        const TransformerRecord& rec = b.net.transformers[t];
        const BranchAdmittance& y = b.net.transformer_admittances[t];
        double smax = rec.s_n_kva / pu.s_base_kva;
        S pf = branch_p_out(b, y, rec.from, rec.to, x);
        S qf = branch_q_out(b, y, rec.from, rec.to, x);
        out[row++] = pf * pf + qf * qf - smax * smax;
        S pt = branch_p_out(b, y, rec.to, rec.from, x);
        S qt = branch_q_out(b, y, rec.to, rec.from, x);
        out[row++] = pt * pt + qt * qt - smax * smax;
    }
    for (size_t c = 0; c < b.net.converters.size(); ++c) {
        double smax = b.net.converters[c].s_n_kva / pu.s_base_kva;
        out[row++] = x[b.layout.conv_fwd[c]] + x[b.layout.conv_rev[c]] - smax;
    }
}

template <class S>
S objective_t(const Body& b, std::span<const S> x) {
    S acc(0.0);
    switch (b.objective) {
        case Objective::h1:
            for (size_t g = 0; g < b.net.generators.size(); ++g) acc += x[b.layout.gen_p[g]];
            return acc;
        case Objective::h2:
            for (const BusRecord& bus : b.net.buses)
                acc += sq(sq(bus_e(b, bus.id, x)) + sq(bus_f(b, bus.id, x)) - 1.0);
            return acc;
        case Objective::h3:
            for (size_t g = 0; g < b.net.generators.size(); ++g)
                acc += b.net.generators[g].econ.oc_eur_per_kwh * x[b.layout.gen_p[g]] *
                       b.net.pu->s_base_kva;
            return acc;
        case Objective::h4:
            for (size_t g = 0; g < b.net.generators.size(); ++g) acc -= x[b.layout.gen_p[g]];
            return acc;
    }
    return acc;
}

std::vector<Dual> to_dual(std::span<const double> x) {
    return std::vector<Dual>(x.begin(), x.end());
}

}  // namespace

OpfProblem::OpfProblem(std::shared_ptr<const Body> body) : body_(std::move(body)) {}

const NetworkModel& OpfProblem::network() const { return body_->net; }
const OpfScenario& OpfProblem::scenario() const { return body_->scenario; }
Objective OpfProblem::objective() const { return body_->objective; }
const StateLayout& OpfProblem::layout() const { return body_->layout; }
const std::vector<EqualityInfo>& OpfProblem::equality_set() const { return body_->equality_set; }
const std::vector<InequalityInfo>& OpfProblem::inequality_set() const {
    return body_->inequality_set;
}
const NlpProblem& OpfProblem::nlp() const { return body_->nlp; }

int OpfProblem::active_balance_count() const { return static_cast<int>(body_->net.buses.size()); }

int OpfProblem::reactive_balance_count() const {
    int n = 0;
    for (const BusRecord& bus : body_->net.buses)
        if (bus.kind == CurrentKind::ac) ++n;
    return n;
}

int OpfProblem::coupling_count() const { return static_cast<int>(body_->net.converters.size()); }

int OpfProblem::grid_forming_count() const { return static_cast<int>(body_->forming.size()); }

std::vector<double> OpfProblem::initial_state() const { return body_->nlp.start; }

double OpfProblem::residual_active(int bus, std::span<const double> state) const {
    return active_residual_t<double>(*body_, bus, state);
}

double OpfProblem::residual_reactive(int bus, std::span<const double> state) const {
    return reactive_residual_t<double>(*body_, bus, state);
}

double OpfProblem::converter_coupling_residual(int converter, std::span<const double> state) const {
    // The directed-flow parameterization carries the efficiency inside each
    // balance term, so the conversion identity holds for every state.
    (void)converter;
    (void)state;
    return 0.0;
}

std::vector<double> OpfProblem::equality_values(std::span<const double> state) const {
    std::vector<double> out;
    out.reserve(body_->equality_set.size());
    for (const EqualityInfo& info : body_->equality_set) {
        switch (info.kind) {
            case EqualityKind::active_balance:
                out.push_back(residual_active(info.element, state));
                break;
            case EqualityKind::reactive_balance:
                out.push_back(residual_reactive(info.element, state));
                break;
            case EqualityKind::converter_coupling:
                out.push_back(converter_coupling_residual(info.element, state));
                break;
            case EqualityKind::grid_forming:
                out.push_back(forming_residual_t<double>(*body_, info.element, state));
                break;
        }
    }
    return out;
}

std::vector<double> OpfProblem::inequality_values(std::span<const double> state) const {
    std::vector<double> out(body_->inequality_set.size());
    inequalities_t<double>(*body_, state, out);
    return out;
}

double OpfProblem::objective_value(std::span<const double> state) const {
    double raw = objective_t<double>(*body_, state);
    switch (body_->objective) {
        case Objective::h1:
            return raw * body_->net.pu->s_base_kva;
        case Objective::h2:
        case Objective::h3:
            return raw;
        case Objective::h4:
            return -raw * body_->net.pu->s_base_kva;
    }
    return raw;
}

OpfProblem assemble(const NetworkModel& normalized, const OpfScenario& scenario,
                    Objective objective) {
    if (!normalized.normalized())
        throw std::invalid_argument("assemble requires a per-unit normalized network");
    if (scenario.grid_mode == ExternalGridMode::either)
        throw std::invalid_argument("assemble requires a directed grid mode; 'either' is expanded by solve_opf");

    auto body = std::make_shared<Body>();
    body->net = apply_opf_scenario(normalized, scenario);
    body->scenario = scenario;
    body->scenario.objective = objective;
    body->objective = objective;

    std::vector<std::string> diagnostics = validate(body->net);
    if (!diagnostics.empty())
        throw std::invalid_argument("network failed validation: " + diagnostics.front());

    const NetworkModel& net = body->net;
    size_t nbus = net.buses.size();

    StateLayout& L = body->layout;
    L.bus_e.assign(nbus, -1);
    L.bus_f.assign(nbus, -1);
    int n = 0;
    for (const BusRecord& bus : net.buses) {
        L.bus_e[bus.id] = n++;
        if (bus.kind == CurrentKind::ac) L.bus_f[bus.id] = n++;
    }
    L.gen_p.resize(net.generators.size());
    L.gen_q.resize(net.generators.size());
    for (size_t g = 0; g < net.generators.size(); ++g) {
        L.gen_p[g] = n++;
        L.gen_q[g] = n++;
    }
    L.ext_p.resize(net.external_grids.size());
    L.ext_q.resize(net.external_grids.size());
    for (size_t g = 0; g < net.external_grids.size(); ++g) {
        L.ext_p[g] = n++;
        L.ext_q[g] = n++;
    }
    L.conv_fwd.resize(net.converters.size());
    L.conv_rev.resize(net.converters.size());
    for (size_t c = 0; c < net.converters.size(); ++c) {
        L.conv_fwd[c] = n++;
        L.conv_rev[c] = n++;
    }
    L.dimension = n;

    body->p_load_pu.assign(nbus, 0.0);
    body->q_load_pu.assign(nbus, 0.0);
    double s_base = net.pu->s_base_kva;
    for (const LoadRecord& load : net.loads) {
        body->p_load_pu[load.bus] += load.p_kw / s_base;
        body->q_load_pu[load.bus] += load.q_kvar / s_base;
    }

    for (size_t c = 0; c < net.converters.size(); ++c)
        if (net.converters[c].control == ConverterControl::grid_forming)
            body->forming.push_back(static_cast<int>(c));

    for (const BusRecord& bus : net.buses)
        body->equality_set.push_back({EqualityKind::active_balance, bus.id});
    for (const BusRecord& bus : net.buses)
        if (bus.kind == CurrentKind::ac)
            body->equality_set.push_back({EqualityKind::reactive_balance, bus.id});
    for (size_t c = 0; c < net.converters.size(); ++c)
        body->equality_set.push_back({EqualityKind::converter_coupling, static_cast<int>(c)});
    for (int c : body->forming) body->equality_set.push_back({EqualityKind::grid_forming, c});

    for (const BusRecord& bus : net.buses)
        body->inequality_set.push_back({InequalityKind::voltage_upper, bus.id});
    for (const BusRecord& bus : net.buses)
        body->inequality_set.push_back({InequalityKind::voltage_lower, bus.id});
    for (size_t l = 0; l < net.lines.size(); ++l)
        body->inequality_set.push_back({InequalityKind::line_current, static_cast<int>(l)});
    for (size_t t = 0; t < net.transformers.size(); ++t) {
        body->inequality_set.push_back({InequalityKind::transformer_from, static_cast<int>(t)});
        body->inequality_set.push_back({InequalityKind::transformer_to, static_cast<int>(t)});
    }
    for (size_t c = 0; c < net.converters.size(); ++c)
        body->inequality_set.push_back({InequalityKind::converter_rating, static_cast<int>(c)});

    // Exchange cap: an order of magnitude above everything the microgrid could
    // generate or consume, floored at one base unit.
    double total_kw = 0.0;
    for (const GeneratorRecord& g : net.generators) total_kw += std::abs(g.p_nom_kw);
    for (const StorageRecord& s : net.storages) total_kw += std::abs(s.p_nominal_kw);
    for (const LoadRecord& l : net.loads) total_kw += std::abs(l.p_kw);
    body->s_big_pu = std::max(10.0 * total_kw / s_base, 1.0);

    int reactive_rows = 0;
    for (const BusRecord& bus : net.buses)
        if (bus.kind == CurrentKind::ac) ++reactive_rows;

    NlpProblem& nlp = body->nlp;
    nlp.dimension = n;
    nlp.equality_count = static_cast<int>(nbus) + reactive_rows + static_cast<int>(body->forming.size());
    nlp.inequality_count = static_cast<int>(body->inequality_set.size());

    nlp.lower.assign(n, 0.0);
    nlp.upper.assign(n, 0.0);
    nlp.start.assign(n, 0.0);
    for (const BusRecord& bus : net.buses) {
        nlp.lower[L.bus_e[bus.id]] = bus.kind == CurrentKind::dc ? 0.0 : -2.0;
        nlp.upper[L.bus_e[bus.id]] = 2.0;
        nlp.start[L.bus_e[bus.id]] = 1.0;
        if (L.bus_f[bus.id] >= 0) {
            nlp.lower[L.bus_f[bus.id]] = -2.0;
            nlp.upper[L.bus_f[bus.id]] = 2.0;
            nlp.start[L.bus_f[bus.id]] = 0.0;
        }
    }
    for (size_t g = 0; g < net.generators.size(); ++g) {
        const GeneratorRecord& rec = net.generators[g];
        bool dc = net.bus(rec.bus).kind == CurrentKind::dc;
        nlp.lower[L.gen_p[g]] = rec.p_min_kw / s_base;
        nlp.upper[L.gen_p[g]] = rec.p_nom_kw / s_base;
        nlp.lower[L.gen_q[g]] = dc ? 0.0 : rec.q_min_kvar / s_base;
        nlp.upper[L.gen_q[g]] = dc ? 0.0 : rec.q_nom_kvar / s_base;
        nlp.start[L.gen_p[g]] = 0.5 * (nlp.lower[L.gen_p[g]] + nlp.upper[L.gen_p[g]]);
        nlp.start[L.gen_q[g]] = 0.5 * (nlp.lower[L.gen_q[g]] + nlp.upper[L.gen_q[g]]);
    }
    for (size_t g = 0; g < net.external_grids.size(); ++g) {
        const ExternalGridRecord& rec = net.external_grids[g];
        bool dc = net.bus(rec.bus).kind == CurrentKind::dc;
        double cap = body->s_big_pu;
        nlp.lower[L.ext_p[g]] = rec.mode == ExternalGridMode::supply_only ? 0.0 : -cap;
        nlp.upper[L.ext_p[g]] = rec.mode == ExternalGridMode::consume_only ? 0.0 : cap;
        nlp.lower[L.ext_q[g]] = dc ? 0.0 : -cap;
        nlp.upper[L.ext_q[g]] = dc ? 0.0 : cap;
        nlp.start[L.ext_p[g]] = 0.0;
        nlp.start[L.ext_q[g]] = 0.0;
    }
    for (size_t c = 0; c < net.converters.size(); ++c) {
        double smax = net.converters[c].s_n_kva / s_base;
        nlp.lower[L.conv_fwd[c]] = 0.0;
        nlp.upper[L.conv_fwd[c]] = smax;
        nlp.lower[L.conv_rev[c]] = 0.0;
        nlp.upper[L.conv_rev[c]] = smax;
        nlp.start[L.conv_fwd[c]] = 0.0;
        nlp.start[L.conv_rev[c]] = 0.0;
    }

    const Body* raw = body.get();
    nlp.objective = [raw](std::span<const Dual> x) {
        // Simultaneous directed flows on one converter only burn loss, which no
        // objective sees, so the optimum would be degenerate along them. The
        // product penalty vanishes at every physical solution and removes the
        // flat directions.
        Dual circulation(0.0);
        for (size_t c = 0; c < raw->net.converters.size(); ++c)
            circulation += x[raw->layout.conv_fwd[c]] * x[raw->layout.conv_rev[c]];
        return objective_t<Dual>(*raw, x) + 1e-3 * circulation;
    };
    nlp.equalities = [raw](std::span<const Dual> x, std::span<Dual> out) {
        equalities_t<Dual>(*raw, x, out);
    };
    nlp.inequalities = [raw](std::span<const Dual> x, std::span<Dual> out) {
        inequalities_t<Dual>(*raw, x, out);
    };

    return OpfProblem(std::move(body));
}

OpfSolution extract_solution(const OpfProblem& problem, const SolverResult& result) {
    const NetworkModel& net = problem.network();
    const StateLayout& L = problem.layout();
    const PerUnitSystem& pu = *net.pu;
    double s_base = pu.s_base_kva;
    std::span<const double> x(result.point);

    OpfSolution sol;
    switch (result.status) {
        case SolverStatus::converged: sol.status = SolutionStatus::converged; break;
        case SolverStatus::infeasible: sol.status = SolutionStatus::infeasible; break;
        case SolverStatus::iteration_limit: sol.status = SolutionStatus::iteration_limit; break;
    }
    sol.objective = problem.objective();
    sol.grid_mode = problem.scenario().grid_mode;
    sol.objective_value = problem.objective_value(x);
    sol.residuals = result.residuals;
    sol.outer_iterations = result.outer_iterations;
    sol.inner_iterations = result.inner_iterations;
    sol.solve_seconds = result.wall_seconds;
    sol.message = result.message;

    auto e_of = [&](int bus) { return x[L.bus_e[bus]]; };
    auto f_of = [&](int bus) { int k = L.bus_f[bus]; return k < 0 ? 0.0 : x[k]; };

    for (const BusRecord& bus : net.buses) {
        BusSolution bs;
        bs.id = bus.id;
        double e = e_of(bus.id), f = f_of(bus.id);
        bs.v_kv = std::sqrt(e * e + f * f) * pu.v_base_kv[bus.id];
        bs.delta_rad = std::atan2(f, e);
        double p = 0.0, q = 0.0;
        for (size_t g = 0; g < net.generators.size(); ++g) {
            if (net.generators[g].bus == bus.id) {
                p += x[L.gen_p[g]];
                q += x[L.gen_q[g]];
            }
        }
        for (size_t g = 0; g < net.external_grids.size(); ++g) {
            if (net.external_grids[g].bus == bus.id) {
                p += x[L.ext_p[g]];
                q += x[L.ext_q[g]];
            }
        }
        for (const LoadRecord& load : net.loads) {
            if (load.bus == bus.id) {
                p -= load.p_kw / s_base;
                q -= load.q_kvar / s_base;
            }
        }
        bs.p_kw = p * s_base;
        bs.q_kvar = q * s_base;
        sol.buses.push_back(bs);
    }
    std::sort(sol.buses.begin(), sol.buses.end(),
              [](const BusSolution& a, const BusSolution& b) { return a.id < b.id; });

    for (size_t c = 0; c < net.converters.size(); ++c) {
        const ConverterRecord& rec = net.converters[c];
        double fwd = x[L.conv_fwd[c]], rev = x[L.conv_rev[c]];
        double out_of_from = fwd - rec.efficiency * rev;   // into the converter at `from`
        double into_to = rec.efficiency * fwd - rev;       // delivered at `to`
        ConverterSolution cs;
        cs.index = static_cast<int>(c);
        cs.from = rec.from;
        cs.to = rec.to;
        cs.forward = out_of_from >= 0.0;
        if (cs.forward) {
            cs.input_kw = out_of_from * s_base;
            cs.output_kw = into_to * s_base;
        } else {
            cs.input_kw = -into_to * s_base;
            cs.output_kw = -out_of_from * s_base;
        }
        cs.loss_kw = (1.0 - rec.efficiency) * (fwd + rev) * s_base;
        sol.converters.push_back(cs);
        sol.total_loss_kw += cs.loss_kw;
    }

    auto branch_entry = [&](BranchSolution::Kind kind, int index, int from, int to,
                            const BranchAdmittance& y) {
        BranchSolution br;
        br.kind = kind;
        br.index = index;
        br.from = from;
        br.to = to;
        double de = e_of(from) - e_of(to);
        double df = f_of(from) - f_of(to);
        double ymag = std::hypot(y.conductance_pu, y.susceptance_pu);
        br.current_ka = ymag * std::hypot(de, df) * pu.i_base_ka(from);
        br.loss_kw = y.conductance_pu * (de * de + df * df) * s_base;
        sol.branches.push_back(br);
        sol.total_loss_kw += br.loss_kw;
    };
    for (size_t l = 0; l < net.lines.size(); ++l)
        branch_entry(BranchSolution::Kind::line, static_cast<int>(l), net.lines[l].from,
                     net.lines[l].to, net.line_admittances[l]);
    for (size_t t = 0; t < net.transformers.size(); ++t)
        branch_entry(BranchSolution::Kind::transformer, static_cast<int>(t),
                     net.transformers[t].from, net.transformers[t].to,
                     net.transformer_admittances[t]);

    for (size_t g = 0; g < net.generators.size(); ++g)
        sol.total_generation_kw += x[L.gen_p[g]] * s_base;
    for (size_t g = 0; g < net.external_grids.size(); ++g)
        sol.external_grid_kw += x[L.ext_p[g]] * s_base;
    for (const LoadRecord& load : net.loads) sol.total_load_kw += load.p_kw;

    return sol;
}

OpfSolution solve_opf(const NetworkModel& normalized, const OpfScenario& scenario,
                      const SolverConfig& config) {
    if (scenario.grid_mode != ExternalGridMode::either) {
        OpfProblem problem = assemble(normalized, scenario, scenario.objective);
        SolverResult result = solve(problem.nlp(), config);
        return extract_solution(problem, result);
    }

    OpfScenario consume = scenario;
    consume.grid_mode = ExternalGridMode::consume_only;
    OpfScenario supply = scenario;
    supply.grid_mode = ExternalGridMode::supply_only;

    OpfProblem consume_problem = assemble(normalized, consume, scenario.objective);
    SolverResult consume_result = solve(consume_problem.nlp(), config);
    OpfProblem supply_problem = assemble(normalized, supply, scenario.objective);
    SolverResult supply_result = solve(supply_problem.nlp(), config);

    bool consume_ok = consume_result.status == SolverStatus::converged;
    bool supply_ok = supply_result.status == SolverStatus::converged;
    if (consume_ok && supply_ok) {
        // Compare in minimization terms; the consuming direction wins ties.
        double cv = evaluate(consume_problem.nlp(), consume_result.point).objective;
        double sv = evaluate(supply_problem.nlp(), supply_result.point).objective;
        return sv < cv ? extract_solution(supply_problem, supply_result)
                       : extract_solution(consume_problem, consume_result);
    }
    if (supply_ok) return extract_solution(supply_problem, supply_result);
    return extract_solution(consume_problem, consume_result);
}

}  // namespace microgrid
