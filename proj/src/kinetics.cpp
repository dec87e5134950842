#include "netfd/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace netfd {

namespace {

double rk4_step(const KineticScenario& sc, double t, double y, double h) {
    double k1 = boltzmann_rhs(sc, t, y);
    double k2 = boltzmann_rhs(sc, t + 0.5 * h, y + 0.5 * h * k1);
    double k3 = boltzmann_rhs(sc, t + 0.5 * h, y + 0.5 * h * k2);
    double k4 = boltzmann_rhs(sc, t + h, y + h * k3);
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double rk4_span(const KineticScenario& sc, double t0, double t1, double y, long m) {
    double h = (t1 - t0) / double(m);
    for (long k = 0; k < m; ++k) y = rk4_step(sc, t0 + k * h, y, h);
    return y;
}

double integrate(const ScalarFn& f, double a, double b) {
    if (a == b) return 0.0;
    // mapped onto [0, 1]: on short intervals the absolute error floor never meets the relative tolerance
    const double L = b - a;
    auto g = [&](double u) { return L * f(a + L * u); };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, 0.0, 1.0, 10, 1e-14);
}

}  // namespace

void KineticScenario::validate() const {
    stats.validate();
    if (!omega || !kappa || !gain) throw std::invalid_argument("kinetic scenario: missing rate function");
    if (grid.empty()) throw std::invalid_argument("kinetic scenario: empty grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("kinetic scenario: grid not increasing");
    if (!(n0 >= 0.0) || (stats.is_fermion() && n0 > 1.0))
        throw std::invalid_argument("kinetic scenario: initial occupation out of range");
}

KineticScenario stationary_scenario(const ModeStatistics& s, double omega, double kappa, double nbar,
                                    double n0, std::vector<double> grid) {
    if (kappa < 0.0) throw std::invalid_argument("stationary scenario: kappa < 0");
    if (nbar < 0.0 || (s.is_fermion() && nbar > 1.0))
        throw std::invalid_argument("stationary scenario: nbar out of range");
    KineticScenario sc;
    sc.stats = s;
    sc.omega = [omega](double) { return omega; };
    sc.kappa = [kappa](double) { return kappa; };
    sc.gain = [g = 2.0 * kappa * nbar](double) { return g; };
    sc.n0 = n0;
    sc.grid = std::move(grid);
    return sc;
}

std::vector<double> uniform_grid(double horizon, double dt) {
    if (!(dt > 0.0) || !(horizon >= 0.0)) throw std::invalid_argument("uniform_grid: bad horizon/dt");
    long steps = std::lround(horizon / dt);
    if (std::abs(steps * dt - horizon) > 1e-9 * std::max(1.0, horizon))
        throw std::invalid_argument("uniform_grid: horizon is not a multiple of dt");
    std::vector<double> g(steps + 1);
    for (long k = 0; k <= steps; ++k) g[k] = k * dt;
    return g;
}

double equilibrium_occupation(double omega, double T, const ModeStatistics& s) {
    if (!(omega > 0.0) || !(T > 0.0)) throw std::domain_error("equilibrium_occupation: omega and T must be > 0");
    return 1.0 / (std::exp(omega / T) - double(s.sigma));
}

double boltzmann_rhs(const KineticScenario& sc, double t, double n) {
    return -2.0 * sc.kappa(t) * n + sc.gain(t);
}

OccupationTrajectory solve_boltzmann(const KineticScenario& sc, double tol) {
    sc.validate();
    OccupationTrajectory out;
    out.times = sc.grid;
    out.n.resize(sc.grid.size());
    out.ndot.resize(sc.grid.size());
    double y = sc.n0;
    out.n[0] = y;
    for (std::size_t i = 1; i < sc.grid.size(); ++i) {
        double t0 = sc.grid[i - 1], t1 = sc.grid[i];
        long m = 1;
        double coarse = rk4_span(sc, t0, t1, y, m);
        for (;;) {
            double fine = rk4_span(sc, t0, t1, y, 2 * m);
            if (std::abs(fine - coarse) / 15.0 <= tol) {
                y = fine;
                break;
            }
            m *= 2;
            if (m > (1L << 24)) throw std::runtime_error("solve_boltzmann: step refinement failed");
            coarse = fine;
        }
        out.n[i] = y;
    }
    for (std::size_t i = 0; i < sc.grid.size(); ++i) {
        out.ndot[i] = boltzmann_rhs(sc, sc.grid[i], out.n[i]);
        if (out.n[i] < -1e-12 || (sc.stats.is_fermion() && out.n[i] > 1.0 + 1e-12))
            throw std::runtime_error("solve_boltzmann: occupation left the admissible range");
    }
    return out;
}

double stationary_occupation(double n0, double nbar, double kappa, double t) {
    return nbar + (n0 - nbar) * std::exp(-2.0 * kappa * t);
}

OccupationHistory::OccupationHistory(KineticScenario sc, OccupationTrajectory traj)
    : sc_(std::move(sc)), traj_(std::move(traj)) {}

double OccupationHistory::n(double t) const {
    const auto& g = traj_.times;
    if (t < g.front() - 1e-12 || t > g.back() + 1e-12)
        throw std::out_of_range("OccupationHistory: time outside the solved span");
    auto it = std::upper_bound(g.begin(), g.end(), t);
    std::size_t i = (it == g.begin()) ? 0 : std::size_t(it - g.begin()) - 1;
    double t0 = g[i];
    if (t == t0) return traj_.n[i];
    long m = std::max(1L, long(std::ceil((t - t0) / 0.005)));
    return rk4_span(sc_, t0, t, traj_.n[i], m);
}

double OccupationHistory::ndot(double t) const { return boltzmann_rhs(sc_, t, n(t)); }

Propagators propagators(const ScalarFn& omega, const ScalarFn& kappa, double t, double tprime) {
    Propagators p{0.0, 0.0};
    if (t >= tprime) {
        double w = integrate(omega, tprime, t), k = integrate(kappa, tprime, t);
        p.retarded = -kI * std::exp(cd(-k, -w));
    }
    if (tprime >= t) {
        double w = integrate(omega, t, tprime), k = integrate(kappa, t, tprime);
        p.advanced = kI * std::exp(cd(-k, w));
    }
    return p;
}

double entropy(double n, const ModeStatistics& s) {
    if (n < 0.0 || (s.is_fermion() && n > 1.0)) throw std::domain_error("entropy: occupation out of range");
    auto xlogx = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
    double m = 1.0 + s.sigma * n;
    return -(xlogx(n) - s.sigma * xlogx(m));
}

double entropy_derivative(double n, const ModeStatistics& s) {
    return std::log((1.0 + s.sigma * n) / n);
}

double heat_increment(double omega, double dn) { return omega * dn; }

double entropy_production_rate(double n, double nbar, double kappa, const ModeStatistics& s) {
    if (!(nbar > 0.0) || (s.is_fermion() && !(nbar < 1.0)))
        throw std::domain_error("entropy_production_rate: nbar must lie strictly inside the physical range");
    if (n < 0.0 || (s.is_fermion() && n > 1.0))
        throw std::domain_error("entropy_production_rate: occupation out of range");
    if (n == nbar) return 0.0;
    double m = 1.0 + s.sigma * n;
    if (n == 0.0 || m == 0.0) return kappa > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    // n(1+s nbar) - nbar(1+s n) = n - nbar, so the log argument is 1 + (n - nbar)/(nbar m).
    return 2.0 * kappa * (n - nbar) * std::log1p((n - nbar) / (nbar * m));
}

}  // namespace netfd
