#ifndef ELLREACH_CLI_HPP
#define ELLREACH_CLI_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ellreach/oracle.hpp"
#include "ellreach/reach.hpp"

namespace ellreach {

enum class RunMode { Under, Over, OraclePmp, OracleGrid, Compare };

const char* run_mode_name(RunMode m);
RunMode parse_run_mode(const std::string& name);

struct GridSpec {
    Box2 box;
    int resolution = 251;
    double cfl = 0.5;
};

/// System description as written in the problem file; retained so a parsed
/// problem can be serialized back without loss.
struct SystemSpec {
    enum class Kind { Builtin, Sampled };
    Kind kind = Kind::Builtin;
    std::string builtin_name; // "parametric_oscillator" | "single_integrator"
    double r = 0.1, T = 1.0;  // single_integrator parameters
    std::vector<double> times;
    std::vector<Matrix> A, B;
};

struct ParsedProblem {
    ReachProblem problem; // forward inputs arrive pre-reversed, ready to solve
    RunConfig config;
    RunMode mode = RunMode::Compare;
    int n_q_over = 0; // compare-mode over count; 0 means "same as n_q"
    GridSpec grid;
    int n_dirs = 512;
    ReachProblem::Direction requested_direction = ReachProblem::Direction::Backward;
    SystemSpec system;

    int over_count() const { return n_q_over > 0 ? n_q_over : config.n_q; }
};

ParsedProblem parse_problem(const std::string& path);
ParsedProblem parse_problem_json(const nlohmann::json& j);

/// Canonical form with defaults resolved; parse_problem_json of this value
/// reproduces the parsed problem field for field.
nlohmann::json serialize_problem(const ParsedProblem& parsed);

struct AreaRow {
    std::string set; // "under" | "over" | "oracle-pmp" | "oracle-grid"
    double t = 0.0;
    double area = 0.0;
    double percent_vs_oracle = -1.0; // < 0 when no oracle area is available
};

struct RunReport {
    std::string mode;
    std::string requested_direction;
    std::vector<AreaRow> areas;
    std::vector<std::pair<std::string, double>> phase_seconds;
    std::map<std::string, int> guard_counts;
    std::vector<std::string> output_files;
    double max_tightness_residual_under = 0.0;
    double max_tightness_residual_over = 0.0;

    nlohmann::json to_json() const;
};

/// Executes the requested mode, writes all artifacts under out_dir and
/// returns the collected report (also written as report.json).
RunReport run_command(const ParsedProblem& parsed, const std::string& out_dir, bool quiet);

// Emission primitives (deterministic: fixed 17-significant-digit floats).
void write_family_csv(const ApproxFamily& family, const std::string& path);
void write_boundary_csv(const std::vector<std::pair<double, Polygon>>& polygons,
                        const std::string& path);
void write_plot_svg(const ApproxFamily* family, const Polygon* reference, const Box2& box,
                    double t, const std::string& path);

std::string format_float(double v); // %.17g

} // namespace ellreach

#endif
