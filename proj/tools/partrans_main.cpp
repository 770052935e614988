// Command line front end for the scenario runner.
//
//   partrans run <scenario.json> [--out DIR] [--tol X] [--seed N]
//   partrans list-scenarios [--dir DIR]
//   partrans verify-all [--dir DIR] [--out DIR] [--tol X]
//
// Exit codes: 0 all checks passed, 1 a check failed, 2 validation error,
// 3 runtime error. verify-all exits with the worst code it saw.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "partrans/scenario.hpp"

namespace fs = std::filesystem;
using namespace partrans;

namespace {

#ifndef PARTRANS_SCENARIO_DIR
#define PARTRANS_SCENARIO_DIR "scenarios"
#endif

std::string scenario_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("PARTRANS_SCENARIO_DIR")) return env;
    return PARTRANS_SCENARIO_DIR;
}

std::vector<fs::path> scenario_files(const std::string& dir) {
    std::vector<fs::path> files;
    if (!fs::is_directory(dir)) return files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    return files;
}

// Atomic write: stage to a temporary sibling, then rename into place.
void write_file(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

void write_outputs(const ScenarioReport& rep, const std::string& out_dir) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / (rep.id + ".report.json"),
               rep.to_json().dump(2) + "\n");
    for (const auto& [name, content] : rep.artifacts)
        write_file(fs::path(out_dir) / name, content);
}

// 0 passed, 1 check failure, 2 validation, 3 runtime
int run_one(const std::string& file, const RunOptions& opt,
            const std::string& out_dir, bool print_report) {
    Scenario sc = Scenario::from_file(file); // ScenarioError escapes as 2
    ScenarioReport rep;
    try {
        rep = sc.run(opt);
    } catch (const std::exception& e) {
        std::cerr << sc.id() << ": runtime error: " << e.what() << "\n";
        return 3;
    }
    if (!out_dir.empty()) write_outputs(rep, out_dir);
    if (print_report) std::cout << rep.to_json().dump(2) << "\n";
    if (!rep.passed) {
        for (const auto& c : rep.checks)
            if (!c.passed)
                std::cerr << sc.id() << ": check failed: " << c.name << ": "
                          << c.detail << "\n";
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"parallel transport scenario runner"};
    app.require_subcommand(1);

    std::string run_file, out_dir, dir_flag;
    RunOptions opt;

    auto* run = app.add_subcommand("run", "run one scenario file");
    run->add_option("file", run_file, "scenario JSON file")->required();
    run->add_option("--out", out_dir, "directory for reports and artifacts");
    run->add_option("--tol", opt.tol, "transport tolerance")
        ->check(CLI::PositiveNumber);
    run->add_option("--seed", opt.seed, "seed recorded in the report");

    auto* list = app.add_subcommand("list-scenarios", "list bundled scenarios");
    list->add_option("--dir", dir_flag, "scenario directory");

    auto* verify =
        app.add_subcommand("verify-all", "run every bundled scenario");
    verify->add_option("--dir", dir_flag, "scenario directory");
    verify->add_option("--out", out_dir, "directory for reports");
    verify->add_option("--tol", opt.tol, "transport tolerance")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) return run_one(run_file, opt, out_dir, true);

        if (list->parsed()) {
            std::string dir = scenario_dir(dir_flag);
            for (const auto& f : scenario_files(dir)) {
                try {
                    Scenario sc = Scenario::from_file(f.string());
                    std::cout << sc.id() << "  [" << sc.kind() << "]  "
                              << f.filename().string() << "\n";
                } catch (const ScenarioError& e) {
                    std::cout << "(invalid)  " << f.filename().string()
                              << "  " << e.what() << "\n";
                }
            }
            return 0;
        }

        // verify-all
        std::string dir = scenario_dir(dir_flag);
        auto files = scenario_files(dir);
        if (files.empty()) {
            std::cerr << "no scenarios found in " << dir << "\n";
            return 2;
        }
        int worst = 0, passed = 0;
        for (const auto& f : files) {
            int code;
            try {
                code = run_one(f.string(), opt, out_dir, false);
            } catch (const ScenarioError& e) {
                std::cerr << f.filename().string()
                          << ": validation error: " << e.what() << "\n";
                code = 2;
            }
            const char* label = code == 0   ? "PASS"
                                : code == 1 ? "FAIL"
                                            : "ERROR";
            std::cout << label << "  " << f.filename().string() << "\n";
            worst = std::max(worst, code);
            if (code == 0) ++passed;
        }
        std::cout << passed << "/" << files.size() << " scenarios passed\n";
        return worst;
    } catch (const ScenarioError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 3;
    }
}
