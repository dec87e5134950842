// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "netfd/master_equation.hpp"
#include "netfd/stochastic_engine.hpp"

using namespace netfd;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool pass, const std::string& what) {
    if (!pass) ++failures;
    std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", what.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

std::mt19937_64 rng(20240607);
double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

const ModeStatistics kF = ModeStatistics::fermion();
const ModeStatistics kB = ModeStatistics::boson();

DoubledSpace space_of(const ModeStatistics& s, int D) { return build_mode({s, s.is_fermion() ? 2 : D}); }

double closed_form(double n0, double nbar, double kappa, double t) {
    return nbar + (n0 - nbar) * std::exp(-2.0 * kappa * t);
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Random stationary scenario; boson occupations stay below 1/2 so the adaptive truncation stays small.
StationaryScenario random_scenario(const ModeStatistics& s) {
    StationaryScenario sc;
    sc.stats = s;
    sc.omega = uniform(0.5, 2.0);
    sc.kappa = uniform(0.05, 0.5);
    const double top = s.is_fermion() ? 1.0 : 0.5;
    sc.nbar = uniform(0.0, top);
    sc.n0 = uniform(0.0, top);
    sc.truncation = 2;
    return sc;
}

void kinetic_oracle() {
    auto t0 = Clock::now();
    const double T = 10.0;
    const auto grid = uniform_grid(T, 0.05);
    double worst_f = 0.0, worst_b_ratio = 0.0;
    int maxD = 0;
    for (const auto& s : {kF, kB})
        for (int k = 0; k < 10; ++k) {
            auto sc = random_scenario(s);
            double tol = 1e-9;
            if (!s.is_fermion()) {
                int D = 16;
                while (truncation_error_bound(s, sc.kappa, sc.nbar, sc.n0, D, T) > 1e-8) ++D;
                sc.truncation = D;
                maxD = std::max(maxD, D);
                tol = std::max(1e-8, truncation_error_bound(s, sc.kappa, sc.nbar, sc.n0, D, T));
            }
            auto sp = sc.space();
            auto st = build_stationary(sp, sc.omega, sc.kappa, sc.nbar);
            auto tr = evolve_fp(sp, stationary_affine(st.gen.H), sc.initial_ket(), grid);
            double e = 0.0;
            for (std::size_t i = 0; i < grid.size(); ++i)
                e = std::max(e, std::abs(tr.n[i] - closed_form(sc.n0, sc.nbar, sc.kappa, grid[i])));
            if (s.is_fermion())
                worst_f = std::max(worst_f, e);
            else
                worst_b_ratio = std::max(worst_b_ratio, e / tol);
        }
    const double wall = seconds_since(t0);
    report(1, worst_f <= 1e-9 && worst_b_ratio <= 1.0 && wall <= 10.0,
           fmt("kinetic oracle: fermion max err %.2e (tol 1e-9), boson max err/tol %.3f (D<=%.0f), %.2f s (<= 10 s)",
               worst_f, worst_b_ratio, maxD, wall));
}

// Boltzmann history with smooth time-dependent omega, kappa and gain.
struct History {
    KineticScenario ks;
    OccupationHistory h;
};

History random_history(const ModeStatistics& s) {
    KineticScenario ks;
    ks.stats = s;
    const double w0 = uniform(0.5, 2.0), k0 = uniform(0.05, 0.4), g0 = uniform(0.0, 0.3), ph = uniform(0.0, 3.0);
    ks.omega = [=](double t) { return w0 * (1.0 + 0.3 * std::sin(t + ph)); };
    ks.kappa = [=](double t) { return k0 * (1.0 + 0.5 * std::cos(0.7 * t)); };
    // fermion gain stays below 2 kappa so n remains a probability
    const double gmax = s.is_fermion() ? 1.0 : 2.0;
    ks.gain = [=, kap = ks.kappa](double t) { return std::min(g0 * (1.0 + 0.5 * std::sin(1.3 * t)), gmax) * kap(t); };
    ks.n0 = uniform(0.0, s.is_fermion() ? 1.0 : 0.5);
    ks.grid = uniform_grid(4.0, 0.1);
    auto traj = solve_boltzmann(ks);
    return {ks, OccupationHistory(ks, traj)};
}

void structural_identities() {
    double bra_h = 0.0, tildian = 0.0, norm = 0.0, tsc = 0.0;
    for (const auto& s : {kF, kB}) {
        const int D = 24;
        auto sp = space_of(s, D);
        for (int k = 0; k < 5; ++k) {
            auto hist = random_history(s);
            const double lam = uniform(0.0, 1.0), nu = uniform(-0.5, 0.5);
            auto p = SemiFreeParams::from_history(hist.h, lam, nu);
            for (double t : {0.0, 0.7, 1.9, 3.3, 4.0}) {
                auto g = build_semi_free(sp, p, t);
                bra_h = std::max(bra_h, max_abs(RowVec(sp.bra() * g.H)) / std::max(1.0, max_abs(g.H)));
                tildian = std::max(tildian, max_abs(Mat(sp.tilde(Mat(kI * g.H)) - kI * g.H)));
            }
            auto vac = build_ket_vacuum(sp, hist.ks.n0);
            auto r = tsc_residuals(sp, vac);
            tsc = std::max({tsc, r.bra_tilde_dag, r.bra_dag, r.normalization, s.is_fermion() ? r.ket : r.ket_physical});
            EvolveOptions opt;
            opt.method = EvolveMethod::rk4;
            auto tr = evolve_fp(sp, semi_free_affine(sp, p), vac.ket, uniform_grid(4.0, 0.25), opt);
            for (cd z : tr.normalization) norm = std::max(norm, std::abs(z - 1.0));
        }
    }
    const double worst = std::max({bra_h, tildian, norm, tsc});
    report(2, worst <= 1e-10,
           fmt("structural: <theta|H> %.1e, tildian %.1e, <theta|0(t)>-1 %.1e, TSC %.1e (tol 1e-10)", bra_h, tildian,
               norm, tsc));
}

void fdt() {
    double worst = 0.0;
    for (const auto& s : {kF, kB})
        for (int k = 0; k < 5; ++k) {
            auto sp = space_of(s, 3 + k);
            const double omega = uniform(0.5, 2.0), kappa = uniform(0.01, 0.5), nu = uniform(-0.5, 0.5);
            const double nbar = uniform(0.0, s.is_fermion() ? 1.0 : 2.0);
            auto table = ito_table(NoiseParams{s, kappa, nbar, 0.0, nu});
            for (double lambda : {0.0, 0.3, 1.0}) {
                auto g = build_semi_free(sp, SemiFreeParams::stationary(omega, kappa, nbar, lambda, nu), 0.0);
                Mat lhs = weak_square(martingale(sp, g.alpha, lambda), table);
                worst = std::max(worst, max_abs(Mat(lhs + 2.0 * (lambda * g.Pi_R + g.Pi_D))));
            }
        }
    report(3, worst <= 1e-12, fmt("FDT: max |dM dM + 2(lambda Pi_R + Pi_D)| %.1e (tol 1e-12)", worst));
}

StationaryScenario fermion_reference() {
    StationaryScenario sc;
    sc.stats = kF;
    sc.omega = 1.0;
    sc.kappa = 0.1;
    sc.nbar = 0.25;
    sc.n0 = 1.0;
    return sc;
}

void lambda_independence() {
    auto sc = fermion_reference();
    OracleConfig oc;
    oc.scenario = sc;
    oc.steps = 3;
    oc.dt = 0.05;
    OracleConfig o1 = oc;
    o1.scenario.lambda = 1.0;
    auto a = exact_noise_oracle(oc), b = exact_noise_oracle(o1);
    double oracle = 0.0;
    for (std::size_t i = 0; i < a.n.size(); ++i) oracle = std::max(oracle, std::abs(a.n[i] - b.n[i]));

    auto s1 = sc;
    s1.lambda = 1.0;
    auto j0 = quantum_jump_ensemble(sc, 5.0, 0.1, 10000, 21);
    auto j1 = quantum_jump_ensemble(s1, 5.0, 0.1, 10000, 22);
    double zmax = 0.0;
    bool within = true;
    for (std::size_t i = 0; i < j0.times.size(); ++i) {
        const double d = std::abs(j0.mean_n[i] - j1.mean_n[i]), se = std::hypot(j0.stderr_n[i], j1.stderr_n[i]);
        within = within && d <= 3.0 * se + 1e-15;
        if (se > 0.0) zmax = std::max(zmax, d / se);
    }
    report(4, oracle <= 1e-10 && within,
           fmt("lambda independence: oracle |n0 - n1| %.1e (tol 1e-10), jump ensembles max z %.2f (<= 3)", oracle, zmax));
}

void stratonovich_order() {
    auto sc = fermion_reference();
    const double T = 0.05;
    double lo = 1e9, hi = -1e9;
    for (double lam : {0.0, 0.5, 1.0}) {
        sc.lambda = lam;
        std::vector<double> dts, err;
        for (int K : {1, 2, 4}) {
            OracleConfig oc;
            oc.scenario = sc;
            oc.steps = K;
            oc.dt = T / K;
            oc.form = OracleForm::stratonovich;
            auto r = exact_noise_oracle(oc);
            dts.push_back(T / K);
            err.push_back(std::abs(r.n.back() - closed_form(sc.n0, sc.nbar, sc.kappa, T)));
        }
        const double slope = fitted_slope(dts, err);
        lo = std::min(lo, slope);
        hi = std::max(hi, slope);
    }
    report(5, lo >= 0.8 && hi <= 1.2, fmt("Stratonovich weak order: slopes in [%.3f, %.3f] (1.0 +- 0.2)", lo, hi));
}

void quantum_jumps() {
    auto t0 = Clock::now();
    auto sc = fermion_reference();
    auto j = quantum_jump_ensemble(sc, 10.0, 0.05, 20000, 20240607);
    auto fp = fp_occupation(sc, j.times);
    const double wall = seconds_since(t0);
    double zmax = 0.0;
    bool within = true;
    for (std::size_t i = 0; i < j.times.size(); ++i) {
        const double d = std::abs(j.mean_n[i] - fp[i]);
        // t = 0: every trajectory starts in the same state, so the mean must be exact
        if (j.stderr_n[i] == 0.0) {
            within = within && d <= 1e-12;
            continue;
        }
        zmax = std::max(zmax, d / j.stderr_n[i]);
    }
    within = within && zmax <= 3.0 && j.accepted == 20000;
    report(6, within && wall <= 60.0,
           fmt("quantum jumps: 2e4 trajectories, max |mean - fp|/stderr %.2f (<= 3), %.2f s (<= 60 s)", zmax, wall));
}

void entropy_production() {
    double min_rate = std::numeric_limits<double>::infinity(), diag = 0.0, balance = 0.0;
    for (const auto& s : {kF, kB}) {
        const double top = s.is_fermion() ? 1.0 : 10.0;
        for (int i = 0; i < 100; ++i) {
            const double n = top * (i + 0.5) / 100.0;
            for (int k = 0; k < 100; ++k)
                min_rate = std::min(min_rate, entropy_production_rate(n, top * (k + 0.5) / 100.0, 1.0, s));
            diag = std::max(diag, std::abs(entropy_production_rate(n, n, 1.0, s)));
        }
        // temperature-specified reservoirs; trajectories from the Boltzmann solver
        for (int k = 0; k < 5; ++k) {
            const double omega = uniform(0.5, 2.0), T = uniform(0.3, 3.0), kappa = uniform(0.05, 0.5);
            const double nbar = equilibrium_occupation(omega, T, s);
            const double n0 = uniform(0.01, s.is_fermion() ? 0.99 : 2.0);
            auto ks = stationary_scenario(s, omega, kappa, nbar, n0, uniform_grid(10.0, 0.1));
            auto tr = solve_boltzmann(ks);
            for (std::size_t i = 0; i < tr.times.size(); ++i) {
                const double n = tr.n[i], ndot = tr.ndot[i];
                const double dS = entropy_derivative(n, s) * ndot;
                const double rhs = entropy_production_rate(n, nbar, kappa, s) + (omega / T) * ndot;
                balance = std::max(balance, std::abs(dS - rhs));
            }
        }
    }
    report(7, min_rate >= -1e-14 && diag == 0.0 && balance <= 1e-10,
           fmt("entropy: grid min rate %.1e (>= -1e-14), |rate(n = nbar)| %.1e (= 0), balance %.1e (tol 1e-10)",
               min_rate, diag, balance));
}

// Expected tables written out entry by entry; rows are the left factor, in units of dt.
Eigen::Matrix3cd expected_zero_temperature() {
    Eigen::Matrix3cd m = Eigen::Matrix3cd::Zero();
    m(0, 1) = 1.0;  // dB dB^dag = dt
    return m;
}

Table5 expected_thermal(const ModeStatistics& s, double nbar) {
    const cd tau = s.tau;
    const double sg = s.sigma, up = 1.0 + sg * nbar;
    Table5 m = Table5::Zero();
    // order: dB, dB^dag, dB~, dB~^dag, dt
    m(0, 1) = up;
    m(0, 2) = tau * nbar;
    m(1, 0) = nbar;
    m(1, 3) = tau * up;
    m(2, 0) = sg * tau * nbar;
    m(2, 3) = up;
    m(3, 1) = sg * tau * up;
    m(3, 2) = nbar;
    return m;
}

void brownian_tables() {
    bool zero_exact = true;
    double thermal = 0.0;
    for (const auto& s : {kF, kB}) {
        const Mat z0 = expected_zero_temperature();
        zero_exact = zero_exact && Mat(zero_temperature_table()) == z0;
        auto zt = discrete_brownian(3, s);
        for (int k = 0; k < 3; ++k) zero_exact = zero_exact && increment_moments(zt, k) == z0;
        for (int r = 0; r < 3; ++r) {
            const double nbar = uniform(0.0, s.is_fermion() ? 1.0 : 2.0);
            const Mat want = expected_thermal(s, nbar);
            thermal = std::max(thermal, max_abs(Mat(Mat(thermal_brownian_table(s, nbar)) - want)));
            auto th = discrete_brownian(2, s, nbar);
            for (int k = 0; k < 2; ++k) thermal = std::max(thermal, max_abs(Mat(increment_moments(th, k) - want)));
        }
    }
    report(8, zero_exact && thermal <= 1e-12,
           std::string("Brownian tables: zero temperature ") + (zero_exact ? "exact" : "differs") +
               fmt(", thermal max dev %.1e (tol 1e-12)", thermal));
}

void force_correlations() {
    double worst_ulps = 0.0;
    for (const auto& s : {kF, kB})
        for (int k = 0; k < 10; ++k) {
            const double kappa = uniform(0.01, 1.0), nbar = uniform(0.0, s.is_fermion() ? 1.0 : 3.0);
            const double nu = uniform(-0.5, 0.5);
            const double scale = std::numeric_limits<double>::epsilon() * std::max(1.0, 2.0 * kappa * (1.0 + nbar));
            auto c = noise_correlations(s, kappa, nbar, 0.0, nu, true);
            auto F = force_table(s, kappa, nbar, 0.0);
            const double devs[] = {
                std::abs(c.dFdag_dF - 2.0 * kappa * nbar),
                std::abs(c.dF_dFdag - 2.0 * kappa * (1.0 + s.sigma * nbar)),
                std::abs(F(1, 0) - 2.0 * kappa * nbar),
                std::abs(F(0, 1) - 2.0 * kappa * (1.0 + s.sigma * nbar)),
                std::abs((c.dF_dFdag - s.sigma * c.dFdag_dF) - 2.0 * kappa),
            };
            for (double d : devs) worst_ulps = std::max(worst_ulps, d / scale);
        }
    report(9, worst_ulps <= 4.0,
           fmt("force correlations: max deviation %.1f ulp of 2 kappa (1 + nbar) (<= 4, difference identity included)",
               worst_ulps));
}

void generating_functional() {
    auto sp = space_of(kB, 12);
    double z = 0.0, q = 0.0;
    for (int k = 0; k < 5; ++k) {
        const int steps = 1 + k % 6;
        const double dt = 0.5;
        GaussianSource src;
        for (int i = 0; i < steps; ++i) {
            auto draw = [] { return std::polar(uniform(0.0, 1e-3), uniform(0.0, 2.0 * M_PI)); };
            src.K.push_back(draw());
            src.K_tilde.push_back(draw());
        }
        auto r = gaussian_functional_check(sp, uniform(0.5, 1.5), uniform(0.05, 0.2), uniform(0.1, 0.6), src,
                                           uniform_grid(steps * dt, dt));
        z = std::max(z, r.z_residual);
        q = std::max(q, r.quadratic_residual);
    }
    report(10, z <= 1e-6 && q <= 1e-6,
           fmt("generating functional (boson D = 12): Z residual %.1e, quadratic residual %.1e (tol 1e-6)", z, q));
}

}  // namespace

int main() {
    const std::vector<std::function<void()>> criteria{kinetic_oracle, structural_identities, fdt,
                                                      lambda_independence, stratonovich_order, quantum_jumps,
                                                      entropy_production, brownian_tables, force_correlations,
                                                      generating_functional};
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        try {
            criteria[i]();
        } catch (const std::exception& e) {
            report(int(i + 1), false, std::string("aborted: ") + e.what());
        }
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures ? 1 : 0;
}
