#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "netfd/generators.hpp"

namespace netfd {

enum class EvolveMethod { expm, rk4 };

using GeneratorFn = std::function<Mat(double)>;

struct VacuumTrajectory {
    std::vector<double> times;
    std::vector<Vec> kets;
    std::vector<double> n;           // <theta|a^dag a|0(t)>
    std::vector<cd> normalization;   // <theta|0(t)>
};

// Thrown when <theta|0(t)> drifts from 1 by more than the guard.
class NormalizationDrift : public GuardViolation {
public:
    using GuardViolation::GuardViolation;
};

struct EvolveOptions {
    EvolveMethod method = EvolveMethod::expm;
    double max_step_norm = 0.02;  // rk4: substeps so that ||H h||_inf <= this (at most 0.1)
    double drift_limit = 1e-8;
};

// expm: one exponential per step of the generator at the step midpoint, cached while H and dt repeat.
// rk4: generator rebuilt at every stage; the affine overload only recombines the restricted terms.
VacuumTrajectory evolve_fp(const DoubledSpace& space, const GeneratorFn& H, const Vec& ket0,
                           const std::vector<double>& grid, const EvolveOptions& opt = {});

// sum_k coeffs(t)[k] * terms[k]; evolve_fp restricts each term to the reachable block once
struct AffineGenerator {
    std::vector<Mat> terms;
    std::function<std::vector<cd>(double)> coeffs;
    Mat operator()(double t) const;
};

VacuumTrajectory evolve_fp(const DoubledSpace& space, const AffineGenerator& H, const Vec& ket0,
                           const std::vector<double>& grid, const EvolveOptions& opt = {});

GeneratorFn stationary_generator_fn(const Mat& H);
// Single constant term; the block restriction happens once instead of per step.
AffineGenerator stationary_affine(const Mat& H);
AffineGenerator semi_free_affine(const DoubledSpace& space, const SemiFreeParams& p);
GeneratorFn semi_free_generator_fn(const DoubledSpace& space, const SemiFreeParams& p);

// Boson bound on |n(t) - closed form| up to horizon T from relaxation between n0 and nbar: the flux through the
// top level, 2 kappa nbar D T f^(D-1), plus the static tail f^D/(1-f), at the larger of f(n0), f(nbar).
// Zero for fermions.
double truncation_error_bound(const ModeStatistics& s, double kappa, double nbar, double n0, int D, double T);

// <theta|gamma~_t gamma_t|0> against the initial ket, gamma_t built from n_t.
cd order_parameter(const DoubledSpace& space, const Vec& ket0, double n_t);

// Same quantity for many n_t: gamma = A + n B, so it is a quadratic in n with coefficients fixed by ket0.
class OrderParameterCurve {
public:
    OrderParameterCurve(const DoubledSpace& space, const Vec& ket0);
    cd operator()(double n_t) const { return c0_ + n_t * (c1_ + n_t * c2_); }

private:
    cd c0_, c1_, c2_;
};

// exp{sigma tau (n_t - n0) gamma^venus gamma~^venus}|0(n0)>.
Vec condensation_ket(const DoubledSpace& space, double n0, double n_t, double tail_tolerance = 1e-4);

// max |x/<theta|x> - y/<theta|y>|.
double ray_distance(const RowVec& bra, const Vec& x, const Vec& y);
// |<x|y>|/(|x||y|) after scaling each by <theta|.>.
double ray_overlap(const RowVec& bra, const Vec& x, const Vec& y);

struct MigrationResidual {
    double residual = 0.0;  // max |central difference - sigma tau g° g~° |0>|
    double scale = 0.0;     // max |sigma tau g° g~° |0>|
};
// Uses the closed-form ket at the nominal occupation.
MigrationResidual migration_check(const DoubledSpace& space, double n, double eps);

struct GaussianSource {
    std::vector<cd> K;        // K on each grid step
    std::vector<cd> K_tilde;  // independent tilde source
};

struct GaussianFunctionalReport {
    cd z_numeric, z_analytic;
    cd logz_numeric, logz_analytic;
    double z_residual = 0.0;          // |Z_num - Z_an| / |Z_an|
    double logz_residual = 0.0;       // |log Z_num - log Z_an|
    double odd_part = 0.0;            // |log Z(K) - log Z(-K)| / 2
    double quadratic_residual = 0.0;  // |(log Z(K) + log Z(-K))/2 - log Z_an|
    double quadratic_relative = 0.0;  // same, divided by |log Z_an|; limited by the truncation
};

// Boson only. Numeric side: time-ordered product of exp(-i(H + S_k) dt); analytic side: the
// quadratic form of the sources with the gamma-basis propagators rotated by B.
GaussianFunctionalReport gaussian_functional_check(const DoubledSpace& space, double omega, double kappa,
                                                   double nbar, const GaussianSource& src,
                                                   const std::vector<double>& grid);

}  // namespace netfd
