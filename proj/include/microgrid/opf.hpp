#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "microgrid/nlp.hpp"
#include "microgrid/scenario.hpp"

namespace microgrid {

// Index map of the optimization state. Rectangular voltages: AC buses carry
// (e, f), DC buses carry e only. Generators carry (P, Q); each external grid is
// a box-bounded pseudo-generator; converters carry two nonnegative directed
// flows (forward = entering at the record's input bus).
struct StateLayout {
    std::vector<int> bus_e;   // by bus id
    std::vector<int> bus_f;   // -1 for DC buses
    std::vector<int> gen_p;   // by generator index
    std::vector<int> gen_q;
    std::vector<int> ext_p;   // by external-grid index
    std::vector<int> ext_q;
    std::vector<int> conv_fwd;  // by converter index
    std::vector<int> conv_rev;
    int dimension = 0;
};

enum class EqualityKind { active_balance, reactive_balance, converter_coupling, grid_forming };
enum class InequalityKind { voltage_upper, voltage_lower, line_current, transformer_from,
                            transformer_to, converter_rating };

struct EqualityInfo {
    EqualityKind kind;
    int element;  // bus id, or converter index for couplings/forming
};

struct InequalityInfo {
    InequalityKind kind;
    int element;  // bus id / line index / transformer index / converter index
};

class OpfProblem {
public:
    const NetworkModel& network() const;       // scenario-applied, normalized
    const OpfScenario& scenario() const;
    Objective objective() const;
    const StateLayout& layout() const;

    int active_balance_count() const;
    int reactive_balance_count() const;
    int coupling_count() const;
    int grid_forming_count() const;
    const std::vector<EqualityInfo>& equality_set() const;      // all four groups
    const std::vector<InequalityInfo>& inequality_set() const;  // <= 0 convention

    std::vector<double> initial_state() const;  // flat start

    // Diagnostics on a plain state vector (per-unit residuals).
    double residual_active(int bus, std::span<const double> state) const;
    double residual_reactive(int bus, std::span<const double> state) const;
    double converter_coupling_residual(int converter, std::span<const double> state) const;
    std::vector<double> equality_values(std::span<const double> state) const;
    std::vector<double> inequality_values(std::span<const double> state) const;

    // Physical-scale objective: kW for h1/h4, pu^2 for h2, EUR/h for h3.
    double objective_value(std::span<const double> state) const;

    // Underlying solver problem (coupling identities excluded; they are zero by
    // construction of the directed flows).
    const NlpProblem& nlp() const;

    struct Body;
    explicit OpfProblem(std::shared_ptr<const Body> body);

private:
    std::shared_ptr<const Body> body_;
};

// Applies the scenario, checks normalization, builds state layout, residuals,
// inequalities and bounds. Throws std::invalid_argument on unresolved "either"
// grid mode (solve_opf expands it into the two directed runs).
OpfProblem assemble(const NetworkModel& normalized, const OpfScenario& scenario,
                    Objective objective);

enum class SolutionStatus { converged, infeasible, iteration_limit };

struct BusSolution {
    int id = 0;
    double p_kw = 0.0;      // device-side net injection
    double q_kvar = 0.0;
    double v_kv = 0.0;
    double delta_rad = 0.0;
};

struct ConverterSolution {
    int index = 0;
    int from = 0;
    int to = 0;
    double input_kw = 0.0;   // at the feeding bus of the active direction
    double output_kw = 0.0;
    double loss_kw = 0.0;
    bool forward = true;     // active direction is record from->to
};

struct BranchSolution {
    enum class Kind { line, transformer } kind = Kind::line;
    int index = 0;
    int from = 0;
    int to = 0;
    double current_ka = 0.0;  // series current at the from side
    double loss_kw = 0.0;
};

struct OpfSolution {
    SolutionStatus status = SolutionStatus::iteration_limit;
    Objective objective = Objective::h1;
    ExternalGridMode grid_mode = ExternalGridMode::consume_only;
    double objective_value = 0.0;  // physical scale, see OpfProblem::objective_value
    std::vector<BusSolution> buses;
    std::vector<ConverterSolution> converters;
    std::vector<BranchSolution> branches;
    double total_generation_kw = 0.0;    // generators only
    double external_grid_kw = 0.0;       // net injection, negative = consuming
    double total_load_kw = 0.0;          // loads plus storage-as-load shares
    double total_loss_kw = 0.0;
    ResidualNorms residuals;
    int outer_iterations = 0;
    int inner_iterations = 0;
    double solve_seconds = 0.0;
    std::string message;
};

// Denormalizes a solver result into physical quantities. Non-converged results
// produce a marked solution carrying the residual norms.
OpfSolution extract_solution(const OpfProblem& problem, const SolverResult& result);

// Assemble + solve. "either" grid mode runs consume-only and supply-only and
// keeps the better objective (consume wins ties).
OpfSolution solve_opf(const NetworkModel& normalized, const OpfScenario& scenario,
                      const SolverConfig& config = {});

}  // namespace microgrid
