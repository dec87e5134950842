#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "netfd/config.hpp"

namespace netfd::cli {

struct Check {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    std::string relation = "<=";  // pass iff value <relation> tolerance
    bool pass = false;
    std::optional<std::string> skipped;  // reason; a skipped check neither passes nor fails
};

Check make_check(std::string name, double value, double tolerance, std::string relation = "<=");
Check skipped_check(std::string name, std::string reason);

struct RunReport {
    std::string command;
    ScenarioConfig scenario;
    std::vector<Check> checks;
    std::vector<std::string> warnings;
    nlohmann::json extra = nlohmann::json::object();
    double wall_time = 0.0;
    bool all_pass() const;  // every check that ran passed
};

nlohmann::json scenario_to_json(const ScenarioConfig& c);
nlohmann::json report_to_json(const RunReport& r);

// 17 significant digits, scientific.
std::string csv_number(double x);

// Each writes its CSV (and <command>_report.json) into out_dir.
RunReport cmd_fp(const ScenarioConfig& c, const std::string& out_dir);
RunReport cmd_jump(const ScenarioConfig& c, const std::string& out_dir, int threads);
RunReport cmd_oracle(const ScenarioConfig& c, const std::string& out_dir);
RunReport cmd_verify(const ScenarioConfig& c);
std::string cmd_table(const ScenarioConfig& c);

// Full front end: argument parsing, dispatch and the exit-code contract (0 pass, 1 check failure,
// 2 config error, 3 runtime guard abort).
int run(int argc, const char* const* argv);

}  // namespace netfd::cli
