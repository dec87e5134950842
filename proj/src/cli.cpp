#include "netfd/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>

namespace netfd::cli {

namespace {

constexpr double kTailLimit = 1e-4;

void write_file(const std::filesystem::path& p, const std::string& body) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << body;
}

std::string row(std::initializer_list<double> xs) {
    std::string s;
    for (double x : xs) {
        if (!s.empty()) s += ',';
        s += csv_number(x);
    }
    return s + '\n';
}

double closed_form_n(const StationaryScenario& sc, double t) {
    return sc.nbar + (sc.n0 - sc.nbar) * std::exp(-2.0 * sc.kappa * t);
}

// Tolerance on n(t) against the closed form at this truncation.
double kinetic_tolerance(const ScenarioConfig& c, const StationaryScenario& sc) {
    if (c.stats.is_fermion()) return 1e-9;
    return std::max(1e-8, truncation_error_bound(c.stats, sc.kappa, sc.nbar, sc.n0, sc.truncation, c.horizon));
}

// One message per occupation whose boson ket does not fit the truncation.
std::vector<std::string> tail_problems(const StationaryScenario& sc) {
    std::vector<std::string> out;
    if (sc.stats.is_fermion()) return out;
    for (auto [label, n] : {std::pair{"n0", sc.n0}, {"nbar", sc.nbar}}) {
        double tail = occupation_tail(tsc_coefficient(sc.stats, n), sc.truncation);
        if (!(tail <= kTailLimit)) {
            std::ostringstream o;
            o << "truncation tail f^D/(1-f) = " << tail << " at " << label << " = " << n << " with D = "
              << sc.truncation << " exceeds " << kTailLimit;
            out.push_back(o.str());
        }
    }
    return out;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

int oracle_step_limit(const ModeStatistics& s) { return s.is_fermion() ? 6 : 4; }

// (1 - i H dt)^k |0>, the noise-averaged Ito step applied k times.
std::vector<double> euler_product(const StationaryScenario& sc, double dt, int steps) {
    auto sp = sc.space();
    Mat H = build_semi_free(sp, sc.params(), 0.0).H;
    Mat step = sp.identity() - kI * dt * H;
    Vec k = sc.initial_ket();
    std::vector<double> n{measure_occupation(sp, sp.bra(), k)};
    for (int i = 0; i < steps; ++i) {
        k = step * k;
        n.push_back(measure_occupation(sp, sp.bra(), k));
    }
    return n;
}

std::string format_coeff(cd c) {
    auto num = [](double x) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", x);
        return std::string(buf);
    };
    const double re = std::abs(c.real()) < 1e-300 ? 0.0 : c.real();
    const double im = std::abs(c.imag()) < 1e-300 ? 0.0 : c.imag();
    if (re == 0.0 && im == 0.0) return "0";
    std::string s;
    if (im == 0.0)
        s = num(re);
    else if (re == 0.0)
        s = (im == 1.0 ? "" : im == -1.0 ? "-" : num(im)) + "i";
    else
        s = "(" + num(re) + (im < 0 ? "-" : "+") + (std::abs(im) == 1.0 ? "" : num(std::abs(im))) + "i)";
    return s + "·dt";
}

std::string render_table(const std::vector<std::string>& labels, const Mat& m) {
    std::vector<std::vector<std::string>> cells(labels.size() + 1, std::vector<std::string>(labels.size() + 1));
    for (std::size_t j = 0; j < labels.size(); ++j) cells[0][j + 1] = labels[j];
    for (std::size_t i = 0; i < labels.size(); ++i) {
        cells[i + 1][0] = labels[i];
        for (std::size_t j = 0; j < labels.size(); ++j) cells[i + 1][j + 1] = format_coeff(m(i, j));
    }
    // display width: count code points, not bytes
    auto width = [](const std::string& s) {
        std::size_t w = 0;
        for (unsigned char ch : s)
            if ((ch & 0xC0) != 0x80) ++w;
        return w;
    };
    std::vector<std::size_t> w(labels.size() + 1, 0);
    for (const auto& r : cells)
        for (std::size_t j = 0; j < r.size(); ++j) w[j] = std::max(w[j], width(r[j]));
    std::string out;
    for (const auto& r : cells) {
        std::string line;
        for (std::size_t j = 0; j < r.size(); ++j) {
            line += r[j];
            if (j + 1 < r.size()) line += std::string(w[j] - width(r[j]) + 2, ' ');
        }
        out += line + '\n';
    }
    return out;
}

RunReport new_report(const char* command, const ScenarioConfig& c) {
    RunReport r;
    r.command = command;
    r.scenario = c;
    return r;
}

}  // namespace

Check make_check(std::string name, double value, double tolerance, std::string relation) {
    Check c;
    c.name = std::move(name);
    c.value = value;
    c.tolerance = tolerance;
    c.relation = std::move(relation);
    c.pass = c.relation == "<=" ? value <= tolerance : value >= tolerance;
    return c;
}

Check skipped_check(std::string name, std::string reason) {
    Check c;
    c.name = std::move(name);
    c.value = std::numeric_limits<double>::quiet_NaN();
    c.tolerance = std::numeric_limits<double>::quiet_NaN();
    c.skipped = std::move(reason);
    return c;
}

bool RunReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.skipped || c.pass; });
}

std::string csv_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", x == 0.0 ? 0.0 : x);  // no -0
    return buf;
}

nlohmann::json scenario_to_json(const ScenarioConfig& c) {
    nlohmann::json j;
    j["statistics"] = c.stats.name();
    j["omega"] = c.omega;
    j["kappa"] = c.kappa;
    if (c.temperature) j["temperature"] = *c.temperature;
    if (c.nbar) j["nbar"] = *c.nbar;
    j["n0"] = c.n0;
    j["truncation"] = c.truncation;
    j["lambda"] = c.lambda;
    j["nu"] = c.nu;
    if (c.mu) j["mu"] = *c.mu;
    j["dt"] = c.dt;
    j["horizon"] = c.horizon;
    j["n_traj"] = c.n_traj;
    j["seed"] = c.seed;
    j["oracle_steps"] = c.oracle_steps;
    j["outputs"] = c.outputs;
    return j;
}

nlohmann::json report_to_json(const RunReport& r) {
    nlohmann::json j;
    j["command"] = r.command;
    j["scenario"] = scenario_to_json(r.scenario);
    j["derived"] = {{"nbar", r.scenario.reservoir_occupation()}, {"mu", mu_from_nu(r.scenario.stats, r.scenario.nu)}};
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) {
        nlohmann::json x;
        x["name"] = c.name;
        x["value"] = c.value;
        x["tolerance"] = c.tolerance;
        x["relation"] = c.relation;
        x["pass"] = c.skipped ? nlohmann::json(nullptr) : nlohmann::json(c.pass);
        x["skipped"] = c.skipped ? nlohmann::json(*c.skipped) : nlohmann::json(nullptr);
        checks.push_back(x);
    }
    j["checks"] = checks;
    j["warnings"] = r.warnings;
    j["all_pass"] = r.all_pass();
    j["extra"] = r.extra;
    j["wall_time_s"] = r.wall_time;
    return j;
}

RunReport cmd_fp(const ScenarioConfig& c, const std::string& out_dir) {
    RunReport rep = new_report("fp", c);
    const auto sc = c.stationary();
    const auto& s = sc.stats;
    auto sp = sc.space();
    Vec ket0 = sc.initial_ket();
    Mat H = build_semi_free(sp, sc.params(), 0.0).H;
    auto tr = evolve_fp(sp, stationary_affine(H), ket0, c.grid());

    OrderParameterCurve order(sp, ket0);
    std::string csv = "t,n,order_param_re,order_param_im,entropy,entropy_production_rate,bra_ket_overlap\n";
    double overlap = 0.0, min_rate = std::numeric_limits<double>::infinity(), kin = 0.0, op_err = 0.0;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        const double n = tr.n[i];
        cd op = order(n);
        double rate = entropy_production_rate(n, sc.nbar, sc.kappa, s);
        csv += row({tr.times[i], n, op.real(), op.imag(), entropy(n, s), rate, tr.normalization[i].real()});
        overlap = std::max(overlap, std::abs(tr.normalization[i] - 1.0));
        min_rate = std::min(min_rate, rate);
        kin = std::max(kin, std::abs(n - closed_form_n(sc, tr.times[i])));
        op_err = std::max(op_err, std::abs(op - double(s.sigma) * s.tau * (sc.n0 - n)));
    }
    write_file(std::filesystem::path(out_dir) / "fp.csv", csv);

    const double ktol = kinetic_tolerance(c, sc);
    if (ktol > 1e-8 && !s.is_fermion())
        rep.warnings.push_back("boson truncation D = " + std::to_string(sc.truncation) +
                               " limits the kinetic check to " + std::to_string(ktol));
    rep.checks.push_back(make_check("bra_ket_overlap", overlap, 1e-10));
    rep.checks.push_back(make_check("entropy_production_rate_min", min_rate, -1e-12, ">="));
    rep.checks.push_back(make_check("kinetic_closed_form", kin, ktol));
    double optol = 1e-10;
    if (!s.is_fermion()) {
        // the identity misses only the top Fock component of ket0, weight (1 - f) f^(D-1), times D(1 + n)
        const double f = tsc_coefficient(s, sc.n0), nmax = std::max(sc.n0, sc.nbar);
        optol = std::max(optol, 2.0 * (1.0 + nmax) * sc.truncation * (1.0 - f) * std::pow(f, sc.truncation - 1));
    }
    rep.checks.push_back(make_check("order_parameter_identity", op_err, optol));
    rep.extra["rows"] = tr.times.size();
    return rep;
}

RunReport cmd_jump(const ScenarioConfig& c, const std::string& out_dir, int threads) {
    RunReport rep = new_report("jump", c);
    const auto sc = c.stationary();
    JumpOptions opt;
    opt.threads = threads;
    auto res = quantum_jump_ensemble(sc, c.horizon, c.dt, c.n_traj, c.seed, opt);
    auto fp = fp_occupation(sc, res.times);

    std::string csv = "t,mean_n,stderr,fp_n,abs_dev\n";
    double worst = 0.0;
    for (std::size_t i = 0; i < res.times.size(); ++i) {
        double dev = std::abs(res.mean_n[i] - fp[i]);
        csv += row({res.times[i], res.mean_n[i], res.stderr_n[i], fp[i], dev});
        // rows where every trajectory agrees (t = 0) have zero stderr and must match to rounding
        double z = res.stderr_n[i] > 0.0 ? dev / res.stderr_n[i] : (dev <= 1e-12 ? 0.0 : HUGE_VAL);
        worst = std::max(worst, z);
    }
    write_file(std::filesystem::path(out_dir) / "jump.csv", csv);

    if (res.stderr_degenerate) {
        rep.checks.push_back(skipped_check("jump_vs_fp_zscore", "fewer than two accepted trajectories: stderr reported as 0"));
        rep.warnings.push_back("degenerate ensemble: stderr column is 0, not an estimate");
    } else {
        rep.checks.push_back(make_check("jump_vs_fp_zscore", worst, 3.0));
    }
    if (!res.rejected.empty())
        rep.warnings.push_back(std::to_string(res.rejected.size()) + " trajectories rejected on a degenerate jump norm");
    rep.extra["max_abs_dev_over_stderr"] = worst;
    rep.extra["seed"] = res.seed;
    rep.extra["n_traj"] = res.n_traj;
    rep.extra["accepted"] = res.accepted;
    rep.extra["rejected"] = res.rejected;
    rep.extra["stderr_degenerate"] = res.stderr_degenerate;
    rep.extra["internal_dt"] = res.internal_dt;
    rep.extra["max_dp"] = res.max_dp;
    rep.extra["kernel"] = kernels::variant_name(res.kernel);
    rep.extra["threads"] = threads;
    rep.extra["jump_histogram"] = res.jump_histogram;
    return rep;
}

RunReport cmd_oracle(const ScenarioConfig& c, const std::string& out_dir) {
    RunReport rep = new_report("oracle", c);
    OracleConfig oc;
    oc.scenario = c.stationary();
    oc.steps = c.oracle_steps;
    oc.dt = c.dt;
    oc.form = OracleForm::ito;
    auto ito = exact_noise_oracle(oc);
    oc.form = OracleForm::stratonovich;
    auto strat = exact_noise_oracle(oc);

    std::string csv = "t,n_ito,n_stratonovich,fp_n,abs_dev_ito,abs_dev_stratonovich\n";
    double norm = 0.0;
    for (std::size_t i = 0; i < ito.times.size(); ++i) {
        csv += row({ito.times[i], ito.n[i], strat.n[i], ito.n_fp[i], std::abs(ito.n[i] - ito.n_fp[i]),
                    std::abs(strat.n[i] - strat.n_fp[i])});
        norm = std::max({norm, std::abs(ito.normalization[i] - 1.0), std::abs(strat.normalization[i] - 1.0)});
    }
    write_file(std::filesystem::path(out_dir) / "oracle.csv", csv);

    rep.checks.push_back(make_check("oracle_normalization", norm, 1e-12));
    rep.checks.push_back(make_check("oracle_vs_euler_product",
                                    max_abs_diff(ito.n, euler_product(oc.scenario, c.dt, c.oracle_steps)), 1e-12));
    OracleConfig l0 = oc, l1 = oc;
    l0.form = l1.form = OracleForm::ito;
    l0.scenario.lambda = 0.0;
    l1.scenario.lambda = 1.0;
    rep.checks.push_back(
        make_check("oracle_lambda_independence", max_abs_diff(exact_noise_oracle(l0).n, exact_noise_oracle(l1).n), 1e-10));
    rep.extra["max_dev_ito_vs_fp"] = ito.max_deviation;
    rep.extra["max_dev_stratonovich_vs_fp"] = strat.max_deviation;
    rep.extra["tensor_dim"] = ito.tensor_dim;
    return rep;
}

RunReport cmd_verify(const ScenarioConfig& c) {
    RunReport rep = new_report("verify", c);
    const auto sc = c.stationary();
    const auto& s = sc.stats;
    auto sp = sc.space();
    auto gen = build_semi_free(sp, sc.params(), 0.0);
    const Mat& H = gen.H;
    const auto tails = tail_problems(sc);
    rep.warnings = tails;
    // checks that need the thermal kets are listed as skipped when the truncation cannot hold them
    auto ket_check = [&](std::initializer_list<const char*> names, auto&& body) {
        if (tails.empty()) return body();
        for (const char* n : names) rep.checks.push_back(skipped_check(n, tails.front()));
    };

    // tilde conjugation is an involution
    double inv = 0.0;
    for (const Mat* X : {&sp.a(), &sp.adag(), &sp.number(), &H})
        inv = std::max(inv, max_abs(Mat(sp.tilde(sp.tilde(*X)) - *X)));
    rep.checks.push_back(make_check("tilde_involution", inv, 1e-14));

    ket_check({"tsc_bra", s.is_fermion() ? "tsc_ket" : "tsc_ket_physical"}, [&] {
        auto vac = build_ket_vacuum(sp, sc.n0);
        auto r = tsc_residuals(sp, vac);
        rep.checks.push_back(make_check("tsc_bra", std::max({r.bra_tilde_dag, r.bra_dag, r.normalization}), 1e-10));
        // boson: the top level and the calibrated ratio leave a tail-sized residual on the physical block
        if (s.is_fermion())
            rep.checks.push_back(make_check("tsc_ket", r.ket, 1e-10));
        else
            rep.checks.push_back(make_check("tsc_ket_physical", r.ket_physical, 1e-10 + 10.0 * vac.tail));
    });

    rep.checks.push_back(make_check("bra_annihilates_generator",
                                    max_abs(RowVec(sp.bra() * H)) / std::max(1.0, max_abs(H)), 1e-10));
    rep.checks.push_back(make_check("tildian", max_abs(Mat(sp.tilde(Mat(kI * H)) - kI * H)), 1e-10));

    {
        double worst = 0.0;
        auto table = ito_table(NoiseParams{s, sc.kappa, sc.nbar, 0.0, sc.nu});
        for (double lambda : {0.0, 0.3, 1.0, sc.lambda}) {
            auto g = build_semi_free(sp, SemiFreeParams::stationary(sc.omega, sc.kappa, sc.nbar, lambda, sc.nu), 0.0);
            Mat lhs = weak_square(martingale(sp, g.alpha, lambda), table);
            worst = std::max(worst, max_abs(Mat(lhs + 2.0 * (lambda * g.Pi_R + g.Pi_D))));
        }
        rep.checks.push_back(make_check("fdt", worst, 1e-12));
    }

    {
        Table4 F = 2.0 * sc.kappa * thermal_brownian_table(s, sc.nbar).topLeftCorner<4, 4>();
        Table5 from_b = table_from_force(F, wiener_in_force(s, sc.nu));
        Table5 direct = ito_table(NoiseParams{s, sc.kappa, sc.nbar, 0.0, sc.nu}).matrix();
        rep.checks.push_back(make_check("ito_table_vs_brownian_table", max_abs(Mat(from_b - direct)), 1e-12));
        auto zt = discrete_brownian(2, s);
        auto th = discrete_brownian(2, s, sc.nbar);
        double z = 0.0, t = 0.0;
        for (int k = 0; k < 2; ++k) {
            z = std::max(z, max_abs(Mat(increment_moments(zt, k) - Mat(zero_temperature_table()))));
            t = std::max(t, max_abs(Mat(increment_moments(th, k) - Mat(thermal_brownian_table(s, sc.nbar)))));
        }
        rep.checks.push_back(make_check("discrete_brownian_zero_temperature", z, 0.0));
        rep.checks.push_back(make_check("discrete_brownian_thermal", t, 1e-12));
    }

    ket_check({"fp_kinetic_closed_form", "fp_normalization"}, [&] {
        auto tr = evolve_fp(sp, stationary_affine(H), sc.initial_ket(), c.grid());
        double kin = 0.0, norm = 0.0;
        for (std::size_t i = 0; i < tr.times.size(); ++i) {
            kin = std::max(kin, std::abs(tr.n[i] - closed_form_n(sc, tr.times[i])));
            norm = std::max(norm, std::abs(tr.normalization[i] - 1.0));
        }
        rep.checks.push_back(make_check("fp_kinetic_closed_form", kin, kinetic_tolerance(c, sc)));
        rep.checks.push_back(make_check("fp_normalization", norm, 1e-10));
    });

    const int steps = std::min(c.oracle_steps, oracle_step_limit(s));
    ket_check({"oracle_vs_fp", "lambda_independence"}, [&] {
        OracleConfig oc;
        oc.scenario = sc;
        oc.steps = steps;
        oc.dt = c.dt;
        if (oracle_dimension(oc) > (1L << 20)) {
            rep.checks.push_back(skipped_check("oracle_vs_fp", "oracle dimension beyond 2^20"));
            rep.checks.push_back(skipped_check("lambda_independence", "oracle dimension beyond 2^20"));
            return;
        }
        auto ito = exact_noise_oracle(oc);
        rep.checks.push_back(make_check("oracle_vs_fp", max_abs_diff(ito.n, euler_product(sc, c.dt, steps)), 1e-12));
        OracleConfig l0 = oc, l1 = oc;
        l0.scenario.lambda = 0.0;
        l1.scenario.lambda = 1.0;
        rep.checks.push_back(make_check("lambda_independence",
                                        max_abs_diff(exact_noise_oracle(l0).n, exact_noise_oracle(l1).n), 1e-10));
    });

    ket_check({"averaged_equation"}, [&] {
        std::vector<Mat> obs{sp.number()};
        Vec ket = sc.initial_ket();
        if (s.is_fermion()) {
            // odd component so the ladder expectations do not vanish identically
            ket = ket + gen.alpha.alpha_venus * ket;
            obs.push_back(sp.a());
            obs.push_back(sp.adag());
        }
        auto r = averaged_equation_check(sp, sc.params(), ket, obs, {0.5, 1.0, 2.0});
        double tol = s.is_fermion() ? 1e-8 : std::max(1e-8, kinetic_tolerance(c, sc));
        rep.checks.push_back(make_check("averaged_equation", r.max_residual, tol));
    });

    {
        double min_rate = std::numeric_limits<double>::infinity(), diag = 0.0;
        const double top = s.is_fermion() ? 1.0 : 10.0;
        for (int i = 0; i < 100; ++i)
            for (int j = 0; j < 100; ++j) {
                double n = top * (i + 0.5) / 100.0, nb = top * (j + 0.5) / 100.0;
                min_rate = std::min(min_rate, entropy_production_rate(n, nb, 1.0, s));
            }
        for (int i = 0; i < 100; ++i) {
            double n = top * (i + 0.5) / 100.0;
            diag = std::max(diag, std::abs(entropy_production_rate(n, n, 1.0, s)));
        }
        rep.checks.push_back(make_check("entropy_production_grid_min", min_rate, -1e-14, ">="));
        rep.checks.push_back(make_check("entropy_production_zero_at_equilibrium", diag, 0.0));
    }

    if (sc.nbar > 0.0 && !(s.is_fermion() && sc.nbar >= 1.0)) {
        // dS/dt = production + (omega/T) dn/dt with omega/T = S'(nbar), along the closed-form relaxation
        const double beta_omega = entropy_derivative(sc.nbar, s);
        double worst = 0.0;
        for (double t : c.grid()) {
            double n = closed_form_n(sc, t), ndot = -2.0 * sc.kappa * (n - sc.nbar);
            if (n <= 0.0 || (s.is_fermion() && n >= 1.0)) continue;
            double lhs = entropy_derivative(n, s) * ndot;
            double rhs = entropy_production_rate(n, sc.nbar, sc.kappa, s) + beta_omega * ndot;
            worst = std::max(worst, std::abs(lhs - rhs));
        }
        rep.checks.push_back(make_check("entropy_balance", worst, 1e-10));
    } else {
        rep.checks.push_back(skipped_check("entropy_balance", "reservoir at nbar = 0 or full: omega/T is not finite"));
    }
    return rep;
}

std::string cmd_table(const ScenarioConfig& c) {
    const auto& s = c.stats;
    const double nb = c.reservoir_occupation();
    std::ostringstream o;
    o << "statistics: " << s.name() << " (sigma = " << (s.sigma > 0 ? "+1" : "-1")
      << ", tau = " << (s.is_fermion() ? "i" : "1") << ")\n";
    o << "kappa = " << c.kappa << ", nbar = " << nb << ", ndot = 0, nu = " << c.nu
      << ", mu = " << mu_from_nu(s, c.nu) << "\n\n";
    o << "Ito weak products dX dY (row X, column Y)\n";
    auto w = ito_table(NoiseParams{s, c.kappa, nb, 0.0, c.nu});
    o << render_table({"dW", "dW~", "dW°", "dW~°", "dt"}, Mat(w.matrix()));
    o << "\nThermal Brownian products per increment pair (row X, column Y)\n";
    o << render_table({"dB", "dB†", "dB~", "dB~†", "dt"}, Mat(thermal_brownian_table(s, nb)));
    o << "\nZero-temperature Brownian products (row X, column Y)\n";
    o << render_table({"dB", "dB†", "dt"}, Mat(zero_temperature_table()));
    return o.str();
}

int run(int argc, const char* const* argv) {
    CLI::App app{"netfd: doubled-space quantum stochastic dynamics"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    app.add_option("--config", config_path, "scenario file (.toml or .json)");
    app.add_option("--seed", seed, "override the scenario seed");
    app.add_option("--out", out_dir, "output directory (default: the scenario's outputs)");
    app.add_option("--threads", threads, "jump ensemble threads (fallback NETFD_SIM_THREADS, then 1)");
    app.add_subcommand("fp", "master-equation n(t), order parameter and entropy on the grid (fp.csv)");
    app.add_subcommand("jump", "quantum jump ensemble against the master equation (jump.csv)");
    app.add_subcommand("oracle", "exact noise-space oracle, Ito and Stratonovich forms (oracle.csv)");
    app.add_subcommand("verify", "structural, noise-table and entropy identities");
    app.add_subcommand("table", "print the weak-product and Brownian increment tables");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();

    try {
        ScenarioConfig c = config_path.empty() ? default_scenario() : load_scenario(config_path);
        if (seed) c.seed = *seed;
        if (!out_dir.empty()) c.outputs = out_dir;
        c.validate();
        int nthreads = 1;
        if (threads) {
            nthreads = *threads;
        } else if (const char* env = std::getenv("NETFD_SIM_THREADS")) {
            char* end = nullptr;
            long v = std::strtol(env, &end, 10);
            if (*env == '\0' || *end != '\0') throw ConfigError("NETFD_SIM_THREADS must be an integer");
            nthreads = int(v);
        }
        if (nthreads < 1) throw ConfigError("threads must be >= 1");

        if (cmd == "table") {
            std::cout << cmd_table(c);
            return 0;
        }
        std::filesystem::create_directories(c.outputs);
        auto t0 = std::chrono::steady_clock::now();
        RunReport rep;
        if (cmd == "fp")
            rep = cmd_fp(c, c.outputs);
        else if (cmd == "jump")
            rep = cmd_jump(c, c.outputs, nthreads);
        else if (cmd == "oracle")
            rep = cmd_oracle(c, c.outputs);
        else
            rep = cmd_verify(c);
        rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_file(std::filesystem::path(c.outputs) / (cmd + "_report.json"), report_to_json(rep).dump(2) + "\n");

        for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
        for (const auto& k : rep.checks) {
            if (k.skipped)
                std::cout << "SKIP " << k.name << ": " << *k.skipped << "\n";
            else
                std::cout << (k.pass ? "PASS " : "FAIL ") << k.name << " " << k.value << " " << k.relation << " "
                          << k.tolerance << "\n";
        }
        return rep.all_pass() ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const GuardViolation& e) {
        std::cerr << "guard abort: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace netfd::cli
