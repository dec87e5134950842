#include "netfd/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace netfd {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail_line(int line, const std::string& msg) {
    throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

ConfigValue parse_scalar(const std::string& raw, int line) {
    ConfigValue v;
    if (raw.empty()) fail_line(line, "missing value");
    if (raw.front() == '"') {
        std::string out;
        std::size_t i = 1;
        for (; i < raw.size() && raw[i] != '"'; ++i) {
            if (raw[i] != '\\') {
                out += raw[i];
                continue;
            }
            if (++i == raw.size()) break;
            switch (raw[i]) {
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                default: fail_line(line, "unsupported escape");
            }
        }
        if (i >= raw.size()) fail_line(line, "unterminated string");
        std::string rest = trim(raw.substr(i + 1));
        if (!rest.empty() && rest.front() != '#') fail_line(line, "trailing characters after string");
        v.v = out;
        return v;
    }
    std::string tok = trim(raw.substr(0, raw.find('#')));
    if (tok == "true" || tok == "false") {
        v.v = tok == "true";
        return v;
    }
    std::string digits;
    for (char c : tok)
        if (c != '_') digits += c;
    const char* p = digits.c_str();
    char* end = nullptr;
    errno = 0;
    double d = std::strtod(p, &end);
    if (digits.empty() || *end != '\0' || errno == ERANGE) fail_line(line, "not a number, string or boolean: " + tok);
    v.v = d;
    v.integer = digits.find_first_of(".eEn") == std::string::npos;  // n: nan / inf are not integers
    v.lexeme = digits;
    return v;
}

double as_real(const ConfigTable& t, const std::string& key) {
    const auto& cv = t.at(key);
    if (!std::holds_alternative<double>(cv.v)) throw ConfigError(key + ": expected a number");
    double d = std::get<double>(cv.v);
    if (!std::isfinite(d)) throw ConfigError(key + ": not finite");
    return d;
}

long long as_int(const ConfigTable& t, const std::string& key) {
    const auto& cv = t.at(key);
    if (!std::holds_alternative<double>(cv.v) || !cv.integer) throw ConfigError(key + ": expected an integer");
    errno = 0;
    char* end = nullptr;
    long long x = std::strtoll(cv.lexeme.c_str(), &end, 10);
    if (errno == ERANGE || *end != '\0') throw ConfigError(key + ": integer out of range");
    return x;
}

std::uint64_t as_u64(const ConfigTable& t, const std::string& key) {
    const auto& cv = t.at(key);
    if (!std::holds_alternative<double>(cv.v) || !cv.integer || cv.lexeme.find('-') != std::string::npos)
        throw ConfigError(key + ": expected an unsigned 64-bit integer");
    errno = 0;
    char* end = nullptr;
    unsigned long long x = std::strtoull(cv.lexeme.c_str(), &end, 10);
    if (errno == ERANGE || *end != '\0') throw ConfigError(key + ": integer out of range");
    return x;
}

std::string as_string(const ConfigTable& t, const std::string& key) {
    const auto& cv = t.at(key);
    if (!std::holds_alternative<std::string>(cv.v)) throw ConfigError(key + ": expected a string");
    return std::get<std::string>(cv.v);
}

const std::set<std::string> kKeys{"statistics", "omega", "kappa", "temperature", "nbar",   "n0",
                                  "truncation", "lambda", "nu",   "mu",          "dt",     "horizon",
                                  "n_traj",     "seed",   "oracle_steps",        "outputs"};

}  // namespace

ConfigTable parse_toml(const std::string& text) {
    ConfigTable t;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = trim(raw);
        if (s.empty() || s.front() == '#') continue;
        if (s.front() == '[') fail_line(line, "tables are not supported");
        auto eq = s.find('=');
        if (eq == std::string::npos) fail_line(line, "expected key = value");
        std::string key = trim(s.substr(0, eq));
        if (key.size() > 1 && key.front() == '"' && key.back() == '"') key = key.substr(1, key.size() - 2);
        if (key.empty()) fail_line(line, "empty key");
        if (t.count(key)) fail_line(line, "duplicate key " + key);
        t[key] = parse_scalar(trim(s.substr(eq + 1)), line);
    }
    return t;
}

ConfigTable parse_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("json: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("json: top level must be an object");
    ConfigTable t;
    for (auto it = j.begin(); it != j.end(); ++it) {
        ConfigValue v;
        const auto& x = it.value();
        if (x.is_string()) {
            v.v = x.get<std::string>();
        } else if (x.is_boolean()) {
            v.v = x.get<bool>();
        } else if (x.is_number_unsigned()) {
            v.v = x.get<double>();
            v.integer = true;
            v.lexeme = std::to_string(x.get<std::uint64_t>());
        } else if (x.is_number_integer()) {
            v.v = x.get<double>();
            v.integer = true;
            v.lexeme = std::to_string(x.get<std::int64_t>());
        } else if (x.is_number_float()) {
            v.v = x.get<double>();
        } else {
            throw ConfigError("json: " + it.key() + " must be a scalar");
        }
        t[it.key()] = v;
    }
    return t;
}

double ScenarioConfig::reservoir_occupation() const {
    if (nbar) return *nbar;
    if (temperature) return equilibrium_occupation(omega, *temperature, stats);
    throw ConfigError("neither temperature nor nbar set");
}

int ScenarioConfig::steps() const {
    double k = horizon / dt;
    long r = std::lround(k);
    if (r < 1 || std::abs(k - double(r)) > 1e-9 * std::max(1.0, k))
        throw ConfigError("horizon must be a positive integer multiple of dt");
    return int(r);
}

std::vector<double> ScenarioConfig::grid() const {
    const int k = steps();
    std::vector<double> g(k + 1);
    for (int i = 0; i <= k; ++i) g[i] = double(i) * dt;
    return g;
}

StationaryScenario ScenarioConfig::stationary() const {
    StationaryScenario sc;
    sc.stats = stats;
    sc.omega = omega;
    sc.kappa = kappa;
    sc.nbar = reservoir_occupation();
    sc.n0 = n0;
    sc.truncation = truncation;
    sc.lambda = lambda;
    sc.nu = nu;
    return sc;
}

void ScenarioConfig::validate() const {
    const bool fermion = stats.is_fermion();
    if (temperature.has_value() == nbar.has_value()) throw ConfigError("set exactly one of temperature and nbar");
    if (kappa < 0.0) throw ConfigError("kappa must be >= 0");
    if (temperature && !(*temperature > 0.0)) throw ConfigError("temperature must be > 0");
    if (temperature && !(omega > 0.0)) throw ConfigError("temperature needs omega > 0");
    double nb = reservoir_occupation();
    if (!(nb >= 0.0) || (fermion && nb > 1.0)) throw ConfigError("nbar out of range for " + stats.name());
    if (n0 < 0.0 || (fermion && n0 > 1.0)) throw ConfigError("n0 out of range for " + stats.name());
    if (fermion && truncation != 2) throw ConfigError("fermion truncation is fixed at 2");
    if (!fermion && truncation < 2) throw ConfigError("boson truncation must be >= 2");
    if (lambda < 0.0 || lambda > 1.0) throw ConfigError("lambda must lie in [0, 1]");
    if (mu && std::abs(*mu + stats.sigma * nu - 1.0) > 1e-14) throw ConfigError("mu + sigma nu must equal 1");
    if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
    if (!(horizon > 0.0)) throw ConfigError("horizon must be > 0");
    steps();
    if (n_traj < 1) throw ConfigError("n_traj must be >= 1");
    if (oracle_steps < 1) throw ConfigError("oracle_steps must be >= 1");
    if (outputs.empty()) throw ConfigError("outputs must be a non-empty path");
}

ScenarioConfig default_scenario() {
    ScenarioConfig c;
    c.nbar = 0.25;
    return c;
}

ScenarioConfig scenario_from_table(const ConfigTable& t) {
    for (const auto& [k, v] : t)
        if (!kKeys.count(k)) throw ConfigError("unknown key: " + k);
    ScenarioConfig c = default_scenario();
    auto has = [&](const char* k) { return t.count(k) > 0; };
    if (has("statistics")) {
        std::string s = as_string(t, "statistics");
        if (s == "fermion")
            c.stats = ModeStatistics::fermion();
        else if (s == "boson")
            c.stats = ModeStatistics::boson();
        else
            throw ConfigError("statistics must be boson or fermion");
    }
    if (has("temperature") || has("nbar")) c.nbar.reset();
    if (has("temperature")) c.temperature = as_real(t, "temperature");
    if (has("nbar")) c.nbar = as_real(t, "nbar");
    if (has("omega")) c.omega = as_real(t, "omega");
    if (has("kappa")) c.kappa = as_real(t, "kappa");
    if (has("n0")) c.n0 = as_real(t, "n0");
    c.truncation = c.stats.is_fermion() ? 2 : 16;
    if (has("truncation")) c.truncation = int(as_int(t, "truncation"));
    if (has("lambda")) c.lambda = as_real(t, "lambda");
    if (has("nu")) c.nu = as_real(t, "nu");
    if (has("mu")) c.mu = as_real(t, "mu");
    if (has("dt")) c.dt = as_real(t, "dt");
    if (has("horizon")) c.horizon = as_real(t, "horizon");
    if (has("n_traj")) c.n_traj = long(as_int(t, "n_traj"));
    if (has("seed")) c.seed = as_u64(t, "seed");
    if (has("oracle_steps")) c.oracle_steps = int(as_int(t, "oracle_steps"));
    if (has("outputs")) c.outputs = as_string(t, "outputs");
    c.validate();
    return c;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    const bool json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
    return scenario_from_table(json ? parse_json(ss.str()) : parse_toml(ss.str()));
}

}  // namespace netfd
