#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "netfd/kernels.hpp"
#include "netfd/master_equation.hpp"
#include "netfd/noise_algebra.hpp"

namespace netfd {

// Single mode with stationary reservoir occupation nbar (so n-dot = 0 in the noise correlations).
struct StationaryScenario {
    ModeStatistics stats = ModeStatistics::fermion();
    double omega = 1.0;
    double kappa = 0.1;
    double nbar = 0.25;
    double n0 = 1.0;
    int truncation = 2;  // levels per factor; 2 for fermions
    double lambda = 0.0;
    double nu = 0.0;

    void validate() const;
    DoubledSpace space() const;
    SemiFreeParams params() const;
    Vec initial_ket() const;  // thermal vacuum at n0
};

// <theta|a^dag a|0(t)> on the grid from the exact stationary generator.
std::vector<double> fp_occupation(const StationaryScenario& sc, const std::vector<double>& grid);

enum class OracleForm {
    ito,           // 1 - i(H dt + dM)
    stratonovich,  // Cayley midpoint of (H_S + i(1 - lambda) Pi_R) dt + dM
};

struct OracleConfig {
    StationaryScenario scenario;
    int steps = 3;
    double dt = 0.05;
    OracleForm form = OracleForm::ito;
    bool martingale = true;  // false drops dM and keeps the drift
};

struct OracleResult {
    std::vector<double> times;
    std::vector<double> n;              // <theta|N (x) <vac| ... |0>|vac>
    std::vector<cd> normalization;      // <theta| (x) <vac| ... |0>|vac>
    std::vector<double> n_fp;
    std::vector<Vec> system_kets;       // noise-vacuum component after each step
    double max_deviation = 0.0;         // max_t |n - n_fp|
    double noise_excitation = 0.0;      // max amplitude off the noise vacuum at the end
    long tensor_dim = 0;
};

// System dimension times (noise pair dimension)^steps.
long oracle_dimension(const OracleConfig& cfg);
// Throws GuardViolation beyond 2^20, 4 boson steps or 6 fermion steps.
OracleResult exact_noise_oracle(const OracleConfig& cfg);

struct JumpOptions {
    JumpSplitKind split = JumpSplitKind::balanced;
    int threads = 1;
    int lane_block = 64;           // trajectories stepped together; fixes the reduction order
    double max_internal_dt = 0.01;
    bool respect_dt_bound = true;  // false only to exercise the dp guard
    std::optional<kernels::Variant> kernel;  // default: the process-wide selection
};

struct JumpEnsembleResult {
    std::vector<double> times;
    std::vector<double> mean_n;
    std::vector<double> stderr_n;      // sample std / sqrt(accepted)
    std::vector<long> jump_histogram;  // [k] = trajectories with k jumps
    std::uint64_t seed = 0;
    long n_traj = 0;
    long accepted = 0;
    std::vector<long> rejected;        // trajectory indices dropped on a degenerate jump norm
    bool stderr_degenerate = false;    // fewer than two accepted trajectories; stderr reported as 0
    double internal_dt = 0.0;
    double max_dp = 0.0;
    kernels::Variant kernel = kernels::Variant::scalar;
};

// Step bound from 2 kappa |1 + 2 sigma nbar| n_max dt <= 0.05; n_max = 1 (fermion) or D - 1 (boson).
// The balanced split adds nbar to the bracket, since its dp carries the scalar rate.
double jump_dt_bound(const StationaryScenario& sc, JumpSplitKind split = JumpSplitKind::balanced);

// Trajectory k draws from a stream keyed by (seed, k), so results do not depend on threads.
// dp > 0.1 at any step throws GuardViolation.
JumpEnsembleResult quantum_jump_ensemble(const StationaryScenario& sc, double horizon, double dt, long n_traj,
                                         std::uint64_t seed, const JumpOptions& opt = {});

// Streaming mean and variance; merge is the pairwise update.
struct Welford {
    long count = 0;
    double mean = 0.0, m2 = 0.0;
    void add(double x);
    void merge(const Welford& o);
    double variance() const { return count > 1 ? m2 / double(count - 1) : 0.0; }
};

std::uint64_t splitmix64(std::uint64_t x);
// Uniform in [0, 1) from the (seed, trajectory, step) counter.
double counter_uniform(std::uint64_t seed, std::uint64_t traj, std::uint64_t step);

// [A, B} graded: anticommutator for two odd fermion operators, commutator otherwise.
Mat graded_bracket(const DoubledSpace& space, const Mat& A, const Mat& B);

struct AveragedEquationReport {
    std::vector<double> residual;  // per observable, max over the grid
    double max_residual = 0.0;
    double scale = 0.0;            // max |RHS|
};

// LHS: Richardson-refined central difference (steps h and h/2) of <theta|A|0(t)>; RHS: system commutator,
// relaxation and diffusion brackets at n(t), n-dot(t). Every grid time needs t - h >= 0.
AveragedEquationReport averaged_equation_check(const DoubledSpace& space, const SemiFreeParams& p, const Vec& ket0,
                                               const std::vector<Mat>& observables, const std::vector<double>& grid,
                                               double h = 0.01);

struct LangevinFlow {
    std::vector<double> times;
    std::vector<cd> alpha;              // d<a>/dt = -(i omega + kappa) <a>, <a>(0) = 1
    std::vector<cd> alpha_tilde_venus;  // rate -(i omega - (1 - 2 lambda) kappa), value 1 at t = 0
    std::vector<cd> alpha_fp;           // <theta|alpha|0(t)> / <theta|alpha|0(0)> under the generator
    double fp_rate_residual = 0.0;      // max |alpha_fp - exp(-(i omega + kappa) t)|
};

// The fp ket is the thermal vacuum plus alpha°|vacuum>, which carries a nonzero alpha mean.
LangevinFlow langevin_moment_flow(const StationaryScenario& sc, const std::vector<double>& grid);

}  // namespace netfd
