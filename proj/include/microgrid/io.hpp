#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "microgrid/kpi.hpp"
#include "microgrid/opf.hpp"

namespace microgrid {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kFixtureDirEnv = "MICROGRID_FIXTURES";

struct MeasurementEntry {
    int bus = 0;
    std::optional<double> p_kw;
    std::optional<double> v_kv;
    // Entries for quantities whose optimum is non-unique are reported but kept
    // out of the pass gate.
    bool gate_p = true;
    bool gate_v = true;
};

struct MeasurementScenario {
    std::string label;  // "h1".."h4"
    std::vector<MeasurementEntry> entries;
};

struct MeasurementSet {
    std::vector<MeasurementScenario> scenarios;
};

struct ErrorRow {
    int bus = 0;
    char quantity = 'p';        // 'p' or 'v'
    double simulated = 0.0;
    double measured = 0.0;
    double error = 0.0;         // relative when measured != 0, else absolute
    bool relative = true;
    bool gated = true;
};

struct CompareOptions {
    double voltage_gate = 0.03;      // relative
    double power_gate = 0.01;        // relative
    double absolute_gate_kw = 0.01;  // for zero-measured power entries
    double absolute_gate_kv = 0.001;
};

struct ErrorTable {
    std::string label;
    std::vector<ErrorRow> rows;
    double max_voltage_error = 0.0;  // over gated relative rows
    double max_power_error = 0.0;
    bool pass = true;
};

// Per-bus comparison of a solution against one measured scenario. Throws
// std::invalid_argument when a measured bus is absent from the solution.
ErrorTable compare_measurements(const OpfSolution& solution, const MeasurementScenario& measured,
                                const CompareOptions& options = {});

// File loading. Bare filenames are also looked up under $MICROGRID_FIXTURES.
std::filesystem::path resolve_input(const std::string& path);
NetworkModel load_network(const std::string& path);
EconomicFixture load_economics(const std::string& path);
MeasurementSet load_measurements(const std::string& path);
OpfSolution load_solution(const std::string& path);

nlohmann::json network_to_json(const NetworkModel& model);
nlohmann::json solution_to_json(const OpfSolution& solution);
nlohmann::json kpi_to_json(const std::string& scenario, const KpiReport& report);
nlohmann::json error_table_to_json(const ErrorTable& table);

enum class ReportFormat { text, structured, csv };

// Power/voltage columns with five decimals; currency with two.
std::string render_solution(const OpfSolution& solution, ReportFormat format);
std::string render_kpis(const std::vector<std::pair<std::string, KpiReport>>& reports,
                        ReportFormat format);
std::string render_error_table(const ErrorTable& table, ReportFormat format);

// Command-line driver: subcommands solve / kpi / compare / validate.
// Returns 0 on success, 1 for failed diagnostics/convergence/gates, 2 for
// usage or file errors.
int run_cli(const std::vector<std::string>& args);

}  // namespace microgrid
