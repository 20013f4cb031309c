#pragma once

// Config-driven scenario runner: parses key = value files, sweeps the
// squeezing parameter, and writes CSV records and Wigner grids.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sqcav/dynamics.hpp"
#include "sqcav/error.hpp"
#include "sqcav/model.hpp"
#include "sqcav/observables.hpp"

namespace sqcav {

enum class ScenarioKind { Fig2, Fig4, Fig5, Fig6, Fig7, Fig8, Fig9, Custom };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_from_string(std::string_view name);

struct ScenarioInfo {
    ScenarioKind kind;
    std::string description;
};
const std::vector<ScenarioInfo>& scenario_catalog();

enum class AtomSelection { Absent, Present, Both };
std::string to_string(AtomSelection sel);

struct ScenarioConfig {
    ScenarioKind scenario = ScenarioKind::Custom;
    std::vector<double> g0_values{5.0};
    double gamma = 1.0;
    double delta_c = 0.5;
    /// Sweep values of r. When omega_p_values is non-empty it takes
    /// precedence and r is derived from it.
    std::vector<double> r_values{0.0};
    std::vector<double> omega_p_values;
    int fock_cutoff = 0;  // 0 selects the cutoff automatically
    int max_cutoff = 200;
    bool cutoff_check = true;
    AtomSelection atom = AtomSelection::Both;
    Frame frame = Frame::Squeezed;         // frame the master equation is solved in
    Frame report_frame = Frame::Squeezed;  // frame of the moment columns
    double time_horizon = 50.0;
    double time_step = 0.5;
    bool wigner = false;  // also write lab-frame Wigner grids
    bool sensitivity = false;
    std::vector<double> sensitivity_delta_c{5.0, 10.0, 20.0};
    int threads = 1;
    double wigner_range = 4.0;
    int wigner_points = 81;
    std::string output_path;
};

/// Defaults for a scenario (couplings, rates and r grid of the figure).
ScenarioConfig default_config(ScenarioKind kind);

/// Parses `key = value` lines; `#` starts a comment. `scenario` is applied
/// first so every other key overrides that scenario's defaults. Throws
/// ErrorKind::InvalidConfig on unknown keys or malformed values.
ScenarioConfig parse_config(std::istream& in);
ScenarioConfig parse_config_string(const std::string& text);
ScenarioConfig parse_config_file(const std::filesystem::path& path);

/// Canonical key = value rendering with every resolved field.
std::string resolved_config_text(const ScenarioConfig& config);

/// 64-bit FNV-1a of resolved_config_text without the keys that cannot
/// change results (output_path, threads).
std::uint64_t config_hash(const ScenarioConfig& config);

/// r values of the sweep, derived from omega_p when given. Throws
/// ErrorKind::Threshold for pump amplitudes at or above delta_c.
std::vector<double> sweep_r_values(const ScenarioConfig& config, double delta_c);

/// Starting Fock cutoff expected to keep the population above 0.8 N below 1e-6.
int estimate_cutoff(const ModelParams& params, int max_cutoff = 200);

struct Diagnostics {
    struct Point {
        double delta_c;
        double r;
        double omega_p;
        double omega_s;
        double threshold_margin;  // delta_c - omega_p
        double rwa_ratio;         // largest over the configured couplings
        int estimated_cutoff;
    };
    struct Issue {
        ErrorKind kind;
        std::string message;
        bool fatal;
    };
    std::vector<Point> points;
    std::vector<Issue> issues;

    bool ok() const;
};

/// Never throws; problems are listed as issues.
Diagnostics validate_config(const ScenarioConfig& config);

struct AdaptiveSolution {
    SteadyStateReport report;
    int fock_cutoff;
    double truncation_tail;
    bool cutoff_converged;
};

/// Steady state with cutoff control. fock_cutoff = 0 starts from
/// estimate_cutoff, grows until the tail is below 1e-6, then steps by 10
/// until the moments at N and N + 10 agree to 1e-6 (relative above 1) or
/// max_cutoff is reached. With cutoff_check, a tail above 1e-6 is a
/// truncation error and cutoff_converged records the N / N + 10 comparison.
AdaptiveSolution solve_adaptive(const ModelParams& params, int fock_cutoff = 0, bool cutoff_check = true,
                                int max_cutoff = 200);

struct ObservableRecord {
    std::string scenario;
    Frame solver_frame = Frame::Squeezed;
    Frame report_frame = Frame::Squeezed;
    bool atom_present = false;
    double g0 = 0.0;
    double gamma = 0.0;
    double delta_c = 0.0;
    double r = 0.0;
    double omega_p = 0.0;
    double omega_s = 0.0;
    double mean_photon = 0.0;
    double abs_second_moment = 0.0;
    double output_flux = 0.0;
    std::array<double, kDistributionReportMax + 1> probs{};  // squeezed-Fock P_n
    int fock_cutoff = 0;
    double solver_residual = 0.0;
    double truncation_tail = 0.0;
    bool cutoff_converged = false;
};

struct TrajectoryRecord {
    bool atom_present;
    double g0;
    double gamma;
    double delta_c;
    double r;
    double t;
    double mean_photon;
    double abs_second_moment;
    int fock_cutoff;
};

struct CurveRecord {
    double r;
    double cosh_r;
    double half_exp_r;
    double relative_difference;
};

struct WignerOutput {
    std::string label;  // "empty" or "atom"
    double g0;
    double r;
    int fock_cutoff;
    WignerGrid grid;
};

struct ScenarioResult {
    std::vector<ObservableRecord> records;
    std::vector<TrajectoryRecord> trajectory;
    std::vector<CurveRecord> curve;
    std::vector<WignerOutput> wigner;
};

/// One steady-state record for the given physical point.
ObservableRecord compute_record(const ScenarioConfig& config, double delta_c, double r, bool atom_present,
                                double g0);

/// Runs every job of the scenario. Jobs run on config.threads workers; the
/// result order depends only on the config.
ScenarioResult compute_scenario(const ScenarioConfig& config);

/// Steady-state record columns, in file order.
const std::vector<std::string>& record_columns();

/// CSV body (column header plus rows) of the main output file.
std::string main_csv_body(const ScenarioConfig& config, const ScenarioResult& result);
std::string wigner_csv_body(const WignerOutput& w);

struct WrittenFiles {
    std::filesystem::path main;
    std::vector<std::filesystem::path> wigner;
};

/// Writes the main CSV and any Wigner grids next to it
/// (<stem>_wigner_<label>.csv). The header block carries the resolved
/// config, its hash, and one `# generated:` timestamp line.
WrittenFiles write_outputs(const ScenarioConfig& config, const ScenarioResult& result);

WrittenFiles run_scenario(const ScenarioConfig& config);

/// Process exit code for an error category: 2 invalid config, 3 threshold,
/// 4 truncation, 5 numerical failure, 1 anything else.
int exit_code(ErrorKind kind);

}  // namespace sqcav
