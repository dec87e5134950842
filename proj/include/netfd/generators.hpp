#pragma once

#include "netfd/kinetics.hpp"
#include "netfd/thermal_space.hpp"

namespace netfd {

struct SemiFreeParams {
    ScalarFn omega;
    ScalarFn kappa;
    ScalarFn n;     // occupation n(t)
    ScalarFn ndot;  // Boltzmann right-hand side at n(t)
    double lambda = 0.0;
    double nu = 0.0;

    static SemiFreeParams stationary(double omega, double kappa, double nbar, double lambda = 0.0,
                                     double nu = 0.0);
    static SemiFreeParams from_history(const OccupationHistory& h, double lambda = 0.0, double nu = 0.0);
};

double mu_from_nu(const ModeStatistics& s, double nu);

struct AlphaOps {
    Mat alpha, alpha_venus, alpha_tilde, alpha_tilde_venus;
    double mu = 1.0, nu = 0.0;
};

struct GammaSet {
    Mat gamma, gamma_venus, gamma_tilde, gamma_tilde_venus;
    Eigen::Matrix2d B;
    double n = 0.0;
};

struct GeneratorSet {
    Mat H_S, Pi_R, Pi_D, H;
    AlphaOps alpha;
    double t = 0.0, omega = 0.0, kappa = 0.0, n = 0.0, ndot = 0.0, lambda = 0.0;
    double diffusion = 0.0;  // 2 kappa (n + nu) + ndot
};

AlphaOps build_alpha(const DoubledSpace& space, double mu, double nu);
GammaSet build_gamma(const DoubledSpace& space, double n);

// pair_{sym} = (X Y + sigma Y X)/2 for the creation pair X = alpha^venus, Y = alpha~^venus.
Mat symmetric_pair(const DoubledSpace& space, const Mat& X, const Mat& Y);

// H_t = H_S + i(Pi_R + Pi_D), Pi_R = -kappa(a°a + a~°a~), Pi_D from the symmetrized creation pair.
GeneratorSet build_semi_free(const DoubledSpace& space, const SemiFreeParams& p, double t);

// Same generator expanded in ladder operators (a-form) and in gamma operators.
Mat assemble_a_form(const DoubledSpace& space, double omega, double kappa, double n, double ndot);
Mat assemble_gamma_form(const DoubledSpace& space, double omega, double kappa, double n, double ndot);

struct StationaryGenerator {
    GeneratorSet gen;
    GammaSet d;
    Mat H_diag;
    double omega = 0.0, kappa = 0.0, nbar = 0.0;
};

StationaryGenerator build_stationary(const DoubledSpace& space, double omega, double kappa, double nbar);

enum class JumpSplitKind {
    literal,   // scalar -2i kappa nbar kept in H1
    balanced,  // scalar moved to H0 so jump probabilities stay non-negative
};

struct JumpSplit {
    Mat H0, H1;
    JumpSplitKind kind = JumpSplitKind::balanced;
    double omega = 0.0, kappa = 0.0, nbar = 0.0;
    int sigma = 1;
    // i<theta|H0|psi> dt for a state with <theta|psi> = 1 and occupation n.
    double dp(double n, double dt) const;
};

JumpSplit split_jump(const DoubledSpace& space, const StationaryGenerator& st,
                     JumpSplitKind kind = JumpSplitKind::balanced);

}  // namespace netfd
