#include "netfd/generators.hpp"

#include <cmath>
#include <stdexcept>

namespace netfd {

namespace {

void check_zero_eigen(const DoubledSpace& space, const Mat& H, const char* what) {
    double scale = std::max(1.0, max_abs(H));
    double r = max_abs(RowVec(space.bra() * H));
    if (r > 1e-12 * scale) throw std::logic_error(std::string(what) + ": <theta|H != 0 (" + std::to_string(r) + ")");
}

}  // namespace

SemiFreeParams SemiFreeParams::stationary(double omega, double kappa, double nbar, double lambda, double nu) {
    SemiFreeParams p;
    p.omega = [omega](double) { return omega; };
    p.kappa = [kappa](double) { return kappa; };
    p.n = [nbar](double) { return nbar; };
    p.ndot = [](double) { return 0.0; };
    p.lambda = lambda;
    p.nu = nu;
    return p;
}

SemiFreeParams SemiFreeParams::from_history(const OccupationHistory& h, double lambda, double nu) {
    SemiFreeParams p;
    p.omega = h.scenario().omega;
    p.kappa = h.scenario().kappa;
    p.n = [&h](double t) { return h.n(t); };
    p.ndot = [&h](double t) { return h.ndot(t); };
    p.lambda = lambda;
    p.nu = nu;
    return p;
}

double mu_from_nu(const ModeStatistics& s, double nu) { return 1.0 - s.sigma * nu; }

AlphaOps build_alpha(const DoubledSpace& space, double mu, double nu) {
    const auto& s = space.stats();
    if (std::abs(mu + s.sigma * nu - 1.0) > 1e-14) throw std::invalid_argument("build_alpha: mu + sigma nu != 1");
    AlphaOps o;
    o.mu = mu;
    o.nu = nu;
    o.alpha = mu * space.a() + double(s.sigma) * s.tau * nu * space.atdag();
    o.alpha_venus = space.adag() - s.tau * space.at();
    o.alpha_tilde = space.tilde(o.alpha);
    o.alpha_tilde_venus = space.tilde(o.alpha_venus);
    return o;
}

GammaSet build_gamma(const DoubledSpace& space, double n) {
    const auto& s = space.stats();
    if (n < 0.0 || (s.is_fermion() && n > 1.0)) throw std::domain_error("build_gamma: occupation out of range");
    GammaSet g;
    g.n = n;
    g.gamma = (1.0 + s.sigma * n) * space.a() - double(s.sigma) * s.tau * n * space.atdag();
    g.gamma_venus = space.adag() - s.tau * space.at();
    g.gamma_tilde = space.tilde(g.gamma);
    g.gamma_tilde_venus = space.tilde(g.gamma_venus);
    g.B << 1.0 + s.sigma * n, -s.sigma * n, -1.0, 1.0;
    return g;
}

Mat symmetric_pair(const DoubledSpace& space, const Mat& X, const Mat& Y) {
    return 0.5 * (sparse_product(X, Y) + double(space.sigma()) * sparse_product(Y, X));
}

GeneratorSet build_semi_free(const DoubledSpace& space, const SemiFreeParams& p, double t) {
    const auto& s = space.stats();
    GeneratorSet g;
    g.t = t;
    g.omega = p.omega(t);
    g.kappa = p.kappa(t);
    g.n = p.n(t);
    g.ndot = p.ndot(t);
    g.lambda = p.lambda;
    if (g.kappa < 0.0) throw std::domain_error("build_semi_free: kappa < 0");
    if (p.lambda < 0.0 || p.lambda > 1.0) throw std::domain_error("build_semi_free: lambda outside [0,1]");
    g.alpha = build_alpha(space, mu_from_nu(s, p.nu), p.nu);
    g.diffusion = 2.0 * g.kappa * (g.n + p.nu) + g.ndot;

    const auto& A = g.alpha;
    g.H_S = g.omega * (space.number() - space.number_tilde());
    g.Pi_R = -g.kappa * (sparse_product(A.alpha_venus, A.alpha) + sparse_product(A.alpha_tilde_venus, A.alpha_tilde));
    g.Pi_D = double(s.sigma) * s.tau * g.diffusion * symmetric_pair(space, A.alpha_venus, A.alpha_tilde_venus);
    g.H = g.H_S + kI * (g.Pi_R + g.Pi_D);
    check_zero_eigen(space, g.H, "build_semi_free");
    return g;
}

Mat assemble_a_form(const DoubledSpace& space, double omega, double kappa, double n, double ndot) {
    const auto& s = space.stats();
    const double sg = s.sigma;
    const cd st = sg * s.tau;
    Mat N2 = space.number() + space.number_tilde();
    Mat Pi = -(kappa * (1.0 + 2.0 * sg * n) + sg * ndot) * N2 +
             st * (2.0 * kappa * (1.0 + sg * n) + sg * ndot) * sparse_product(space.a(), space.at()) +
             st * (2.0 * kappa * n + ndot) * sparse_product(space.adag(), space.atdag()) -
             (2.0 * kappa * n + ndot) * space.identity();
    return omega * (space.number() - space.number_tilde()) + kI * Pi;
}

Mat assemble_gamma_form(const DoubledSpace& space, double omega, double kappa, double n, double ndot) {
    const auto& s = space.stats();
    GammaSet g = build_gamma(space, n);
    Mat X = sparse_product(g.gamma_venus, g.gamma), Xt = sparse_product(g.gamma_tilde_venus, g.gamma_tilde);
    Mat Pi = -kappa * (X + Xt) +
             double(s.sigma) * s.tau * ndot * symmetric_pair(space, g.gamma_venus, g.gamma_tilde_venus);
    return omega * (X - Xt) + kI * Pi;
}

StationaryGenerator build_stationary(const DoubledSpace& space, double omega, double kappa, double nbar) {
    const auto& s = space.stats();
    if (kappa < 0.0) throw std::domain_error("build_stationary: kappa < 0");
    if (nbar < 0.0 || (s.is_fermion() && nbar > 1.0)) throw std::domain_error("build_stationary: nbar out of range");
    StationaryGenerator st;
    st.omega = omega;
    st.kappa = kappa;
    st.nbar = nbar;
    st.gen = build_semi_free(space, SemiFreeParams::stationary(omega, kappa, nbar), 0.0);
    st.d = build_gamma(space, nbar);
    Mat X = sparse_product(st.d.gamma_venus, st.d.gamma),
        Xt = sparse_product(st.d.gamma_tilde_venus, st.d.gamma_tilde);
    st.H_diag = omega * (X - Xt) - kI * kappa * (X + Xt);
    check_zero_eigen(space, st.H_diag, "build_stationary");
    return st;
}

double JumpSplit::dp(double n, double dt) const {
    double r = (1.0 + 2.0 * sigma * nbar) * n;
    if (kind == JumpSplitKind::balanced) r += nbar;
    return 2.0 * kappa * r * dt;
}

JumpSplit split_jump(const DoubledSpace& space, const StationaryGenerator& st, JumpSplitKind kind) {
    const auto& s = space.stats();
    const double sg = s.sigma, nb = st.nbar, k = st.kappa;
    JumpSplit j;
    j.kind = kind;
    j.omega = st.omega;
    j.kappa = k;
    j.nbar = nb;
    j.sigma = s.sigma;
    Mat N2 = space.number() + space.number_tilde();
    j.H0 = st.omega * (space.number() - space.number_tilde()) - kI * k * (1.0 + 2.0 * sg * nb) * N2;
    if (kind == JumpSplitKind::balanced) j.H0 -= 2.0 * kI * k * nb * space.identity();
    // H1 takes the remainder so that H0 + H1 is the generator itself, top boson level included.
    j.H1 = st.gen.H - j.H0;

    Mat aat = sparse_product(space.a(), space.at()), pair = sparse_product(space.adag(), space.atdag());
    Mat H1_ref = 2.0 * kI * sg * s.tau * k * ((1.0 + sg * nb) * aat + nb * pair);
    if (kind == JumpSplitKind::literal) H1_ref -= 2.0 * kI * k * nb * space.identity();
    double scale = std::max(1.0, max_abs(st.gen.H));
    if (space.physical_max(Mat(j.H1 - H1_ref)) > 1e-13 * scale)
        throw std::logic_error("split_jump: reassembly mismatch");
    if (space.physical_max(Mat(j.H0 + H1_ref - assemble_a_form(space, st.omega, k, nb, 0.0))) > 1e-13 * scale)
        throw std::logic_error("split_jump: split does not reproduce the a-form generator");
    return j;
}

}  // namespace netfd
