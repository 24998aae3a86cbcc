#include "ellreach/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace ellreach {

using nlohmann::json;

const char* run_mode_name(RunMode m) {
    switch (m) {
    case RunMode::Under: return "under";
    case RunMode::Over: return "over";
    case RunMode::OraclePmp: return "oracle-pmp";
    case RunMode::OracleGrid: return "oracle-grid";
    case RunMode::Compare: return "compare";
    }
    return "compare";
}

RunMode parse_run_mode(const std::string& name) {
    if (name == "under") return RunMode::Under;
    if (name == "over") return RunMode::Over;
    if (name == "oracle-pmp") return RunMode::OraclePmp;
    if (name == "oracle-grid") return RunMode::OracleGrid;
    if (name == "compare") return RunMode::Compare;
    throw Error(Errc::ValidationError, "unknown run mode '" + name + "'");
}

namespace {

const json& require_key(const json& j, const char* key, const char* where) {
    auto it = j.find(key);
    if (it == j.end())
        throw Error(Errc::ValidationError,
                    std::string("missing '") + key + "' in " + where);
    return *it;
}

Vector parse_vector(const json& j, const char* where) {
    try {
        return j.get<Vector>();
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, std::string(where) + ": " + e.what());
    }
}

Matrix parse_matrix(const json& j, const char* where) {
    std::vector<Vector> rows;
    try {
        rows = j.get<std::vector<Vector>>();
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, std::string(where) + ": " + e.what());
    }
    if (rows.empty())
        throw Error(Errc::ValidationError, std::string(where) + ": empty matrix");
    Matrix m(int(rows.size()), int(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size())
            throw Error(Errc::ValidationError, std::string(where) + ": ragged matrix rows");
        for (std::size_t k = 0; k < rows[i].size(); ++k) m(int(i), int(k)) = rows[i][k];
    }
    return m;
}

Ellipsoid parse_ellipsoid(const json& j, const char* where) {
    Vector center = parse_vector(require_key(j, "center", where), where);
    Matrix shape = parse_matrix(require_key(j, "shape", where), where);
    try {
        return Ellipsoid(std::move(center), std::move(shape));
    } catch (const Error& e) {
        throw Error(Errc::ValidationError, std::string(where) + ": " + e.what());
    }
}

json ellipsoid_to_json(const Ellipsoid& e) {
    json j;
    j["center"] = e.center();
    std::vector<Vector> rows(e.dim(), Vector(e.dim()));
    for (int i = 0; i < e.dim(); ++i)
        for (int k = 0; k < e.dim(); ++k) rows[i][k] = e.shape()(i, k);
    j["shape"] = rows;
    return j;
}

json matrix_to_json(const Matrix& m) {
    std::vector<Vector> rows(m.rows(), Vector(m.cols()));
    for (int i = 0; i < m.rows(); ++i)
        for (int k = 0; k < m.cols(); ++k) rows[i][k] = m(i, k);
    return json(rows);
}

double get_number(const json& j, const char* key, double fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number())
        throw Error(Errc::ParseError, std::string("field '") + key + "' must be a number");
    return it->get<double>();
}

} // namespace

ParsedProblem parse_problem_json(const json& j) {
    if (!j.is_object())
        throw Error(Errc::ParseError, "problem file must contain a JSON object");
    const int version = int(get_number(j, "schema_version", 1));
    if (version != 1)
        throw Error(Errc::ValidationError,
                    "unsupported schema_version " + std::to_string(version));

    ParsedProblem parsed;
    const json& system = require_key(j, "system", "problem file");

    bool have_base = false;
    ReachProblem base;

    if (system.contains("builtin")) {
        parsed.system.kind = SystemSpec::Kind::Builtin;
        parsed.system.builtin_name = system["builtin"].get<std::string>();
        if (parsed.system.builtin_name == "parametric_oscillator") {
            base = builtin_parametric_oscillator();
        } else if (parsed.system.builtin_name == "single_integrator") {
            parsed.system.r = get_number(system, "r", 0.1);
            parsed.system.T = get_number(system, "T", 1.0);
            base = builtin_single_integrator(parsed.system.r, parsed.system.T);
        } else {
            throw Error(Errc::ValidationError,
                        "unknown builtin system '" + parsed.system.builtin_name + "'");
        }
        have_base = true;
    } else if (system.contains("samples")) {
        parsed.system.kind = SystemSpec::Kind::Sampled;
        const json& samples = system["samples"];
        parsed.system.times = parse_vector(require_key(samples, "times", "system.samples"),
                                           "system.samples.times");
        const json& ja = require_key(samples, "A", "system.samples");
        const json& jb = require_key(samples, "B", "system.samples");
        if (!ja.is_array() || !jb.is_array() || ja.size() != parsed.system.times.size() ||
            jb.size() != parsed.system.times.size())
            throw Error(Errc::ValidationError,
                        "system.samples needs one A and one B matrix per sample time");
        for (std::size_t k = 0; k < ja.size(); ++k) {
            parsed.system.A.push_back(parse_matrix(ja[k], "system.samples.A"));
            parsed.system.B.push_back(parse_matrix(jb[k], "system.samples.B"));
        }
    } else {
        throw Error(Errc::ValidationError, "system must name a 'builtin' or provide 'samples'");
    }

    // Explicit sets and horizon override (or, for sampled systems, define)
    // the base problem.
    std::optional<Ellipsoid> input, terminal;
    if (j.contains("input")) input = parse_ellipsoid(j["input"], "input");
    if (j.contains("terminal")) terminal = parse_ellipsoid(j["terminal"], "terminal");
    double t0 = have_base ? base.t0 : 0.0;
    double T = have_base ? base.T : 0.0;
    if (j.contains("horizon")) {
        const json& h = j["horizon"];
        t0 = get_number(h, "t0", t0);
        T = require_key(h, "T", "horizon").get<double>();
    } else if (!have_base) {
        throw Error(Errc::ValidationError, "missing 'horizon' in problem file");
    }
    if (!(t0 < T))
        throw Error(Errc::ValidationError, "horizon requires t0 < T");

    if (!have_base) {
        if (!input) throw Error(Errc::ValidationError, "missing 'input' in problem file");
        if (!terminal) throw Error(Errc::ValidationError, "missing 'terminal' in problem file");
        base = ReachProblem{MatrixSignal::sampled(parsed.system.times, parsed.system.A),
                            MatrixSignal::sampled(parsed.system.times, parsed.system.B),
                            *input,
                            *terminal,
                            t0,
                            T,
                            ReachProblem::Direction::Backward};
    } else {
        if (input) base.input = *input;
        if (terminal) base.terminal = *terminal;
        base.t0 = t0;
        base.T = T;
    }

    std::string direction = "backward";
    if (j.contains("direction")) direction = j["direction"].get<std::string>();
    if (direction != "backward" && direction != "forward")
        throw Error(Errc::ValidationError, "direction must be 'backward' or 'forward'");
    parsed.requested_direction = direction == "forward" ? ReachProblem::Direction::Forward
                                                        : ReachProblem::Direction::Backward;
    base.direction = parsed.requested_direction;
    if (parsed.requested_direction == ReachProblem::Direction::Forward)
        base = time_reverse(base); // solved as a backward problem of the reversed system

    validate_problem(base);
    parsed.problem = std::move(base);

    // Run section with the documented defaults.
    json run = j.value("run", json::object());
    parsed.mode = parse_run_mode(run.value("mode", std::string("compare")));
    parsed.config.dt = get_number(run, "dt", 0.01);
    parsed.config.q_min = get_number(run, "q_min", 1e-4);
    parsed.config.kappa_min = get_number(run, "kappa_min", 1e-4);
    if (!(parsed.config.dt > 0.0))
        throw Error(Errc::ValidationError, "run.dt must be positive");
    if (!(parsed.config.q_min > 0.0) || !(parsed.config.kappa_min > 0.0))
        throw Error(Errc::ValidationError, "run.q_min and run.kappa_min must be positive");

    const bool needs_members = parsed.mode == RunMode::Under || parsed.mode == RunMode::Over ||
                               parsed.mode == RunMode::Compare;
    if (needs_members) {
        if (!run.contains("n_q"))
            throw Error(Errc::ValidationError, "missing 'n_q' for a family run");
        parsed.config.n_q = int(get_number(run, "n_q", 0));
        if (parsed.config.n_q < 1)
            throw Error(Errc::ValidationError, "run.n_q must be >= 1");
    }
    parsed.n_q_over = int(get_number(run, "n_q_over", 0));
    if (parsed.n_q_over < 0)
        throw Error(Errc::ValidationError, "run.n_q_over must be >= 1 when given");

    if (run.contains("t_eval"))
        parsed.config.t_eval = parse_vector(run["t_eval"], "run.t_eval");
    else
        parsed.config.t_eval = {parsed.problem.t0};

    parsed.n_dirs = int(get_number(run, "n_dirs", 512));
    if (parsed.n_dirs < 3)
        throw Error(Errc::ValidationError, "run.n_dirs must be >= 3");

    json grid = run.value("grid", json::object());
    if (grid.contains("box")) {
        const auto rows = grid["box"].get<std::vector<Vector>>();
        if (rows.size() != 2 || rows[0].size() != 2 || rows[1].size() != 2)
            throw Error(Errc::ValidationError, "run.grid.box must be [[lox,hix],[loy,hiy]]");
        parsed.grid.box.lo = {rows[0][0], rows[1][0]};
        parsed.grid.box.hi = {rows[0][1], rows[1][1]};
        if (!(parsed.grid.box.lo[0] < parsed.grid.box.hi[0]) ||
            !(parsed.grid.box.lo[1] < parsed.grid.box.hi[1]))
            throw Error(Errc::ValidationError, "run.grid.box bounds must be increasing");
    }
    parsed.grid.resolution = int(get_number(grid, "resolution", 251));
    parsed.grid.cfl = get_number(grid, "cfl", 0.5);
    if (parsed.grid.resolution < 3)
        throw Error(Errc::ValidationError, "run.grid.resolution must be >= 3");

    return parsed;
}

ParsedProblem parse_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::IoError, "cannot open problem file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw Error(Errc::ParseError, std::string(e.what()));
    }
    return parse_problem_json(j);
}

json serialize_problem(const ParsedProblem& parsed) {
    json j;
    j["schema_version"] = 1;
    json system;
    if (parsed.system.kind == SystemSpec::Kind::Builtin) {
        system["builtin"] = parsed.system.builtin_name;
        if (parsed.system.builtin_name == "single_integrator") {
            system["r"] = parsed.system.r;
            system["T"] = parsed.system.T;
        }
    } else {
        json samples;
        samples["times"] = parsed.system.times;
        json ja = json::array(), jb = json::array();
        for (const Matrix& m : parsed.system.A) ja.push_back(matrix_to_json(m));
        for (const Matrix& m : parsed.system.B) jb.push_back(matrix_to_json(m));
        samples["A"] = ja;
        samples["B"] = jb;
        system["samples"] = samples;
    }
    j["system"] = system;
    j["input"] = ellipsoid_to_json(parsed.problem.input);
    j["terminal"] = ellipsoid_to_json(parsed.problem.terminal);
    j["horizon"] = {{"t0", parsed.problem.t0}, {"T", parsed.problem.T}};
    j["direction"] =
        parsed.requested_direction == ReachProblem::Direction::Forward ? "forward" : "backward";

    json run;
    run["mode"] = run_mode_name(parsed.mode);
    run["n_q"] = parsed.config.n_q;
    if (parsed.n_q_over > 0) run["n_q_over"] = parsed.n_q_over;
    run["dt"] = parsed.config.dt;
    run["q_min"] = parsed.config.q_min;
    run["kappa_min"] = parsed.config.kappa_min;
    run["t_eval"] = parsed.config.t_eval;
    run["n_dirs"] = parsed.n_dirs;
    run["grid"] = {{"box",
                    {{parsed.grid.box.lo[0], parsed.grid.box.hi[0]},
                     {parsed.grid.box.lo[1], parsed.grid.box.hi[1]}}},
                   {"resolution", parsed.grid.resolution},
                   {"cfl", parsed.grid.cfl}};
    j["run"] = run;
    return j;
}

json RunReport::to_json() const {
    json j;
    j["mode"] = mode;
    j["requested_direction"] = requested_direction;
    json rows = json::array();
    for (const AreaRow& r : areas) {
        json row = {{"set", r.set}, {"t", r.t}, {"area", r.area}};
        if (r.percent_vs_oracle >= 0.0) row["percent_vs_oracle"] = r.percent_vs_oracle;
        rows.push_back(row);
    }
    j["areas"] = rows;
    json phases = json::array();
    for (const auto& [name, secs] : phase_seconds)
        phases.push_back({{"phase", name}, {"seconds", secs}});
    j["phases"] = phases;
    j["guard_counts"] = guard_counts;
    j["outputs"] = output_files;
    j["max_tightness_residual"] = {{"under", max_tightness_residual_under},
                                   {"over", max_tightness_residual_over}};
    return j;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<double> area_times(const ParsedProblem& parsed) {
    if (!parsed.config.t_eval.empty()) return parsed.config.t_eval;
    return {parsed.problem.t0};
}

double tightness_residual(const ApproxFamily& fam) {
    double worst = 0.0;
    for (std::size_t k = 0; k < fam.times.size(); ++k) {
        for (const EllipsoidState& st : fam.snapshots[k]) {
            const Ellipsoid e(st.q, st.Q);
            worst = std::max(worst, std::abs(e.quad_value(st.x_star)));
        }
    }
    return worst;
}

Polygon polygon_from_grid(const GridSolution& sol, double t) {
    std::vector<Point2> pts = grid_zero_level_points(sol, t);
    if (pts.size() < 3)
        throw Error(Errc::DegeneratePolygon, "grid zero level set has fewer than 3 points");
    Point2 centroid{0.0, 0.0};
    for (const Point2& p : pts) {
        centroid[0] += p[0];
        centroid[1] += p[1];
    }
    centroid[0] /= double(pts.size());
    centroid[1] /= double(pts.size());
    std::sort(pts.begin(), pts.end(), [&](const Point2& a, const Point2& b) {
        return std::atan2(a[1] - centroid[1], a[0] - centroid[0]) <
               std::atan2(b[1] - centroid[1], b[0] - centroid[0]);
    });
    return Polygon{std::move(pts)};
}

} // namespace

RunReport run_command(const ParsedProblem& parsed, const std::string& out_dir, bool quiet) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw Error(Errc::IoError, "cannot create output directory '" + out_dir + "'");
    auto path_of = [&](const std::string& name) { return out_dir + "/" + name; };

    RunReport report;
    report.mode = run_mode_name(parsed.mode);
    report.requested_direction =
        parsed.requested_direction == ReachProblem::Direction::Forward ? "forward" : "backward";

    const std::vector<double> times = area_times(parsed);
    const double plot_time = *std::min_element(times.begin(), times.end());

    const bool want_under = parsed.mode == RunMode::Under || parsed.mode == RunMode::Compare;
    const bool want_over = parsed.mode == RunMode::Over || parsed.mode == RunMode::Compare;
    const bool want_pmp = parsed.mode == RunMode::OraclePmp || parsed.mode == RunMode::Compare;
    const bool want_grid = parsed.mode == RunMode::OracleGrid;

    std::optional<ApproxFamily> under, over;
    std::vector<std::pair<double, Polygon>> reference;
    std::optional<GridSolution> grid;

    if (want_under) {
        const auto start = Clock::now();
        under = run_under(parsed.problem, parsed.config);
        report.phase_seconds.emplace_back("under", seconds_since(start));
        report.guard_counts["under"] = int(under->diagnostics.size());
        report.max_tightness_residual_under = tightness_residual(*under);
    }
    if (want_over) {
        RunConfig cfg = parsed.config;
        cfg.n_q = parsed.over_count();
        const auto start = Clock::now();
        over = run_over(parsed.problem, cfg);
        report.phase_seconds.emplace_back("over", seconds_since(start));
        report.guard_counts["over"] = int(over->diagnostics.size());
        report.max_tightness_residual_over = tightness_residual(*over);
    }
    if (want_pmp) {
        const auto start = Clock::now();
        for (double t : times)
            reference.emplace_back(t,
                                   pmp_boundary_polygon(parsed.problem, t, parsed.n_dirs,
                                                        parsed.config.dt));
        report.phase_seconds.emplace_back("oracle-pmp", seconds_since(start));
    }
    if (want_grid) {
        const auto start = Clock::now();
        grid = grid_hjb_solve(parsed.problem, parsed.grid.box, parsed.grid.resolution,
                              parsed.grid.cfl, times);
        report.phase_seconds.emplace_back("oracle-grid", seconds_since(start));
        for (double t : times) reference.emplace_back(t, polygon_from_grid(*grid, t));
    }

    // Areas (and percentages against whichever oracle this run carries).
    for (double t : times) {
        double oracle_area = -1.0;
        if (want_pmp || want_grid) {
            for (const auto& [rt, poly] : reference)
                if (rt == t && want_pmp) oracle_area = polygon_area(poly);
            if (want_grid) oracle_area = grid_sublevel_area(*grid, t);
            report.areas.push_back(
                {want_grid ? "oracle-grid" : "oracle-pmp", t, oracle_area, 100.0});
        }
        if (under) {
            const double a = family_area(under->family_at(t), parsed.grid.box, 801);
            report.areas.push_back(
                {"under", t, a, oracle_area > 0.0 ? 100.0 * a / oracle_area : -1.0});
        }
        if (over) {
            const double a = family_area(over->family_at(t), parsed.grid.box, 801);
            report.areas.push_back(
                {"over", t, a, oracle_area > 0.0 ? 100.0 * a / oracle_area : -1.0});
        }
    }

    // Artifacts; file set depends on the mode.
    const Polygon* plot_reference = nullptr;
    for (const auto& [rt, poly] : reference)
        if (rt == plot_time) plot_reference = &poly;

    if (under) {
        const std::string name = parsed.mode == RunMode::Compare ? "under_family.csv"
                                                                 : "family.csv";
        write_family_csv(*under, path_of(name));
        report.output_files.push_back(path_of(name));
        const std::string plot = parsed.mode == RunMode::Compare ? "plot_under.svg" : "plot.svg";
        write_plot_svg(&*under, plot_reference, parsed.grid.box, plot_time, path_of(plot));
        report.output_files.push_back(path_of(plot));
    }
    if (over) {
        const std::string name = parsed.mode == RunMode::Compare ? "over_family.csv"
                                                                 : "family.csv";
        write_family_csv(*over, path_of(name));
        report.output_files.push_back(path_of(name));
        const std::string plot = parsed.mode == RunMode::Compare ? "plot_over.svg" : "plot.svg";
        write_plot_svg(&*over, plot_reference, parsed.grid.box, plot_time, path_of(plot));
        report.output_files.push_back(path_of(plot));
    }
    if (!reference.empty()) {
        write_boundary_csv(reference, path_of("boundary.csv"));
        report.output_files.push_back(path_of("boundary.csv"));
        if (!under && !over) {
            write_plot_svg(nullptr, plot_reference, parsed.grid.box, plot_time,
                           path_of("plot.svg"));
            report.output_files.push_back(path_of("plot.svg"));
        }
    }

    {
        std::ofstream out(path_of("report.json"));
        if (!out)
            throw Error(Errc::IoError, "cannot write report.json");
        out << report.to_json().dump(2) << "\n";
        report.output_files.push_back(path_of("report.json"));
    }

    if (!quiet) {
        std::cout << "mode: " << report.mode << " (direction " << report.requested_direction
                  << ")\n";
        for (const AreaRow& r : report.areas) {
            std::cout << "  " << r.set << " t=" << r.t << "  area=" << r.area;
            if (r.percent_vs_oracle >= 0.0) std::cout << "  (" << r.percent_vs_oracle << "%)";
            std::cout << "\n";
        }
        for (const auto& [name, secs] : report.phase_seconds)
            std::cout << "  phase " << name << ": " << secs << " s\n";
        for (const auto& [set, count] : report.guard_counts)
            if (count > 0) std::cout << "  guard triggers (" << set << "): " << count << "\n";
        for (const std::string& f : report.output_files) std::cout << "  wrote " << f << "\n";
    }
    return report;
}

} // namespace ellreach
