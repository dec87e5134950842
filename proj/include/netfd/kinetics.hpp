#pragma once

#include <functional>
#include <vector>

#include "netfd/thermal_space.hpp"

namespace netfd {

using ScalarFn = std::function<double(double)>;

struct KineticScenario {
    ModeStatistics stats;
    ScalarFn omega;
    ScalarFn kappa;
    ScalarFn gain;  // i Sigma^<(t); stationary value 2 kappa nbar
    double n0 = 0.0;
    std::vector<double> grid;
    void validate() const;
};

KineticScenario stationary_scenario(const ModeStatistics& s, double omega, double kappa, double nbar,
                                    double n0, std::vector<double> grid);

std::vector<double> uniform_grid(double horizon, double dt);

struct OccupationTrajectory {
    std::vector<double> times;
    std::vector<double> n;
    std::vector<double> ndot;
};

double equilibrium_occupation(double omega, double T, const ModeStatistics& s);

double boltzmann_rhs(const KineticScenario& sc, double t, double n);

// RK4 on each grid interval, substeps doubled until the Richardson estimate is below tol.
OccupationTrajectory solve_boltzmann(const KineticScenario& sc, double tol = 1e-12);

double stationary_occupation(double n0, double nbar, double kappa, double t);

// Continuous n(t), ndot(t) from a solved trajectory (RK4 from the nearest earlier node).
class OccupationHistory {
public:
    OccupationHistory(KineticScenario sc, OccupationTrajectory traj);
    double n(double t) const;
    double ndot(double t) const;
    const OccupationTrajectory& trajectory() const { return traj_; }
    const KineticScenario& scenario() const { return sc_; }

private:
    KineticScenario sc_;
    OccupationTrajectory traj_;
};

struct Propagators {
    cd retarded;
    cd advanced;
};

// theta(0) = 1 at coincidence.
Propagators propagators(const ScalarFn& omega, const ScalarFn& kappa, double t, double tprime);

double entropy(double n, const ModeStatistics& s);
double entropy_derivative(double n, const ModeStatistics& s);
double heat_increment(double omega, double dn);
double entropy_production_rate(double n, double nbar, double kappa, const ModeStatistics& s);

}  // namespace netfd
