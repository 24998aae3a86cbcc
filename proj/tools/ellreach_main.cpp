#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ellreach/cli.hpp"

namespace {

int exit_code_for(ellreach::Errc code) {
    switch (code) {
    case ellreach::Errc::ShapeDegenerate: return 3;
    case ellreach::Errc::IoError: return 4;
    default: return 2;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ellreach: ellipsoidal reachable-set approximation for LTV systems"};
    app.require_subcommand(1);

    std::string problem_path;
    std::string mode_override;
    std::string out_dir = "out";
    bool quiet = false;

    CLI::App* run = app.add_subcommand("run", "solve a problem file and write artifacts");
    run->add_option("problem-file", problem_path, "JSON problem description")->required();
    run->add_option("--mode,-m", mode_override,
                    "override run.mode (under|over|oracle-pmp|oracle-grid|compare)");
    run->add_option("--out,-o", out_dir, "output directory (default: out)");
    run->add_flag("--quiet,-q", quiet, "suppress the summary printout");

    CLI11_PARSE(app, argc, argv);

    try {
        ellreach::ParsedProblem parsed = ellreach::parse_problem(problem_path);
        if (!mode_override.empty()) parsed.mode = ellreach::parse_run_mode(mode_override);
        ellreach::run_command(parsed, out_dir, quiet);
        return 0;
    } catch (const ellreach::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
