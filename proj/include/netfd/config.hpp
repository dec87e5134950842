#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "netfd/stochastic_engine.hpp"

namespace netfd {

// Bad or inconsistent configuration; the CLI exits with code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raw scalar from a config file. Integers keep their lexeme so 64-bit seeds survive.
struct ConfigValue {
    std::variant<std::string, double, bool> v;
    bool integer = false;
    std::string lexeme;
};
using ConfigTable = std::map<std::string, ConfigValue>;

// Flat TOML subset: key = value lines, # comments, basic strings, numbers, booleans. No tables or arrays.
ConfigTable parse_toml(const std::string& text);
// Flat JSON object with scalar members.
ConfigTable parse_json(const std::string& text);

struct ScenarioConfig {
    ModeStatistics stats = ModeStatistics::fermion();
    double omega = 1.0;
    double kappa = 0.1;
    std::optional<double> temperature;
    std::optional<double> nbar;  // exactly one of temperature / nbar after parsing
    double n0 = 1.0;
    int truncation = 2;
    double lambda = 0.0;
    double nu = 0.0;
    std::optional<double> mu;  // if given, must satisfy mu + sigma nu = 1
    double dt = 0.05;
    double horizon = 10.0;
    long n_traj = 20000;
    std::uint64_t seed = 20240607;
    int oracle_steps = 3;
    std::string outputs = ".";

    double reservoir_occupation() const;  // nbar, or the equilibrium occupation at the temperature
    int steps() const;                    // horizon / dt, which must be an integer
    std::vector<double> grid() const;
    StationaryScenario stationary() const;
    void validate() const;
    bool operator==(const ScenarioConfig& o) const = default;
};

// Keys absent from the table keep their defaults; a boson without truncation gets 16 levels.
ScenarioConfig scenario_from_table(const ConfigTable& t);
// Dispatches on the extension: .json is JSON, anything else the TOML subset.
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig default_scenario();

}  // namespace netfd
