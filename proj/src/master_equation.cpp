#include "netfd/master_equation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <unsupported/Eigen/MatrixFunctions>

namespace netfd {

namespace {

double inf_norm(const Mat& H) { return H.cwiseAbs().rowwise().sum().maxCoeff(); }

void record(const DoubledSpace& space, VacuumTrajectory& tr, double t, const Vec& ket, double limit) {
    cd z = (space.bra() * ket)(0);
    if (std::abs(z - 1.0) > limit)
        throw NormalizationDrift("evolve_fp: <theta|0(t)> drifted to (" + std::to_string(z.real()) + ", " +
                                 std::to_string(z.imag()) + ") at t = " + std::to_string(t));
    tr.times.push_back(t);
    tr.kets.push_back(ket);
    tr.normalization.push_back(z);
    tr.n.push_back(measure_occupation(space, space.bra(), ket));
}

Vec rk4_step(const GeneratorFn& H, double t, const Vec& y, double h) {
    Vec k1 = -kI * (H(t) * y);
    Vec k2 = -kI * (H(t + 0.5 * h) * (y + 0.5 * h * k1));
    Vec k3 = -kI * (H(t + 0.5 * h) * (y + 0.5 * h * k2));
    Vec k4 = -kI * (H(t + h) * (y + h * k3));
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Mat pair_creation(const DoubledSpace& space) {
    Mat gv = space.adag() - space.tau() * space.at();
    return gv * space.tilde(gv);
}

// Basis states reachable from the support of v under the sparsity pattern of H.
std::vector<int> reachable_block(const Mat& H, const Vec& v) {
    const int d = int(v.size());
    std::vector<char> in(d, 0);
    std::vector<int> stack;
    for (int i = 0; i < d; ++i)
        if (v(i) != 0.0) {
            in[i] = 1;
            stack.push_back(i);
        }
    while (!stack.empty()) {
        int j = stack.back();
        stack.pop_back();
        for (int i = 0; i < d; ++i)
            if (!in[i] && H(i, j) != 0.0) {
                in[i] = 1;
                stack.push_back(i);
            }
    }
    std::vector<int> idx;
    for (int i = 0; i < d; ++i)
        if (in[i]) idx.push_back(i);
    return idx;
}

bool leaks(const Mat& H, const std::vector<int>& idx) {
    std::vector<char> in(H.rows(), 0);
    for (int i : idx) in[i] = 1;
    for (int j : idx)
        for (int i = 0; i < H.rows(); ++i)
            if (!in[i] && H(i, j) != 0.0) return true;
    return false;
}

Mat restrict(const Mat& H, const std::vector<int>& idx) {
    const int k = int(idx.size());
    Mat out(k, k);
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) out(r, c) = H(idx[r], idx[c]);
    return out;
}

}  // namespace

namespace {

// Generator on the index block; sets leaked when H couples the block to the rest of the space.
using Restrictor = std::function<GeneratorFn(const std::vector<int>& idx, bool& leaked)>;

VacuumTrajectory evolve_blocked(const DoubledSpace& space, const Mat& H0, const Restrictor& restrict_to,
                                const Vec& ket0, const std::vector<double>& grid, const EvolveOptions& opt) {

    if (grid.empty()) throw std::invalid_argument("evolve_fp: empty grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("evolve_fp: grid not increasing");
    if (ket0.size() != space.dim()) throw std::invalid_argument("evolve_fp: ket dimension mismatch");
    if (std::abs((space.bra() * ket0)(0) - 1.0) > 1e-10)
        throw std::invalid_argument("evolve_fp: initial ket not normalized against <theta|");

    VacuumTrajectory tr;
    record(space, tr, grid[0], ket0, opt.drift_limit);
    if (grid.size() == 1) return tr;

    // The semi-free generator conserves n - m, so a diagonal initial ket stays in a D-dimensional block.
    // A generator that leaks out of the block makes run() give up; the second pass uses the full space.
    auto run = [&](const std::vector<int>& idx) -> std::optional<VacuumTrajectory> {
        VacuumTrajectory out = tr;
        Vec y(idx.size());
        for (std::size_t r = 0; r < idx.size(); ++r) y(r) = ket0(idx[r]);
        bool leaked = false;
        GeneratorFn Hs = restrict_to(idx, leaked);
        Mat cached_H, cached_U;
        double cached_dt = -1.0;
        for (std::size_t i = 1; i < grid.size(); ++i) {
            double t0 = grid[i - 1], dt = grid[i] - t0;
            if (opt.method == EvolveMethod::expm) {
                Mat Hm = Hs(t0 + 0.5 * dt);
                if (leaked) return std::nullopt;
                if (dt != cached_dt || cached_H.size() == 0 || !(Hm.array() == cached_H.array()).all()) {
                    cached_U = Mat(-kI * Hm * dt).exp();
                    cached_H = Hm;
                    cached_dt = dt;
                }
                y = cached_U * y;
            } else {
                double norm = std::max({inf_norm(Hs(t0)), inf_norm(Hs(t0 + 0.5 * dt)), inf_norm(Hs(t0 + dt))});
                long m = std::max(1L, long(std::ceil(norm * dt / opt.max_step_norm)));
                double h = dt / double(m);
                for (long k = 0; k < m && !leaked; ++k) y = rk4_step(Hs, t0 + k * h, y, h);
                if (leaked) return std::nullopt;
            }
            Vec full = Vec::Zero(space.dim());
            for (std::size_t r = 0; r < idx.size(); ++r) full(idx[r]) = y(r);
            record(space, out, grid[i], full, opt.drift_limit);
        }
        return out;
    };

    if (auto r = run(reachable_block(H0, ket0))) return *r;
    std::vector<int> all(space.dim());
    for (int i = 0; i < space.dim(); ++i) all[i] = i;
    return *run(all);
}

}  // namespace

VacuumTrajectory evolve_fp(const DoubledSpace& space, const GeneratorFn& H, const Vec& ket0,
                           const std::vector<double>& grid, const EvolveOptions& opt) {
    if (grid.empty()) throw std::invalid_argument("evolve_fp: empty grid");
    Restrictor r = [&H](const std::vector<int>& idx, bool& leaked) -> GeneratorFn {
        return [&H, idx, &leaked](double t) {
            Mat full = H(t);
            if (leaks(full, idx)) leaked = true;
            return restrict(full, idx);
        };
    };
    return evolve_blocked(space, H(grid[0]), r, ket0, grid, opt);
}

Mat AffineGenerator::operator()(double t) const {
    auto c = coeffs(t);
    Mat H = Mat::Zero(terms.front().rows(), terms.front().cols());
    for (std::size_t k = 0; k < terms.size(); ++k) H += c[k] * terms[k];
    return H;
}

VacuumTrajectory evolve_fp(const DoubledSpace& space, const AffineGenerator& H, const Vec& ket0,
                           const std::vector<double>& grid, const EvolveOptions& opt) {
    if (grid.empty()) throw std::invalid_argument("evolve_fp: empty grid");
    if (H.terms.empty()) throw std::invalid_argument("evolve_fp: affine generator without terms");
    // the pattern of the sum can only shrink at special coefficients, so the union of term patterns is used
    Mat pattern = Mat::Zero(space.dim(), space.dim());
    for (const Mat& T : H.terms) pattern += T.cwiseAbs().cast<cd>();
    Restrictor r = [&H](const std::vector<int>& idx, bool& leaked) -> GeneratorFn {
        std::vector<Mat> sub;
        for (const Mat& T : H.terms) {
            if (leaks(T, idx)) leaked = true;
            sub.push_back(restrict(T, idx));
        }
        return [&H, sub = std::move(sub)](double t) {
            auto c = H.coeffs(t);
            Mat out = Mat::Zero(sub.front().rows(), sub.front().cols());
            for (std::size_t k = 0; k < sub.size(); ++k) out += c[k] * sub[k];
            return out;
        };
    };
    return evolve_blocked(space, pattern, r, ket0, grid, opt);
}

AffineGenerator stationary_affine(const Mat& H) {
    AffineGenerator g;
    g.terms.push_back(H);
    g.coeffs = [](double) { return std::vector<cd>{1.0}; };
    return g;
}

GeneratorFn stationary_generator_fn(const Mat& H) {
    return [H](double) { return H; };
}

AffineGenerator semi_free_affine(const DoubledSpace& space, const SemiFreeParams& p) {
    // H is affine in omega, kappa and the diffusion coefficient
    GeneratorSet g0 = build_semi_free(space, p, 0.0);
    const auto& A = g0.alpha;
    AffineGenerator g;
    g.terms.push_back(space.number() - space.number_tilde());
    g.terms.push_back(kI * Mat(-(sparse_product(A.alpha_venus, A.alpha) +
                                 sparse_product(A.alpha_tilde_venus, A.alpha_tilde))));
    g.terms.push_back(kI * double(space.sigma()) * space.stats().tau *
                      symmetric_pair(space, A.alpha_venus, A.alpha_tilde_venus));
    g.coeffs = [p](double t) {
        const double kappa = p.kappa(t);
        if (kappa < 0.0) throw std::domain_error("semi_free_affine: kappa < 0");
        const double diffusion = 2.0 * kappa * (p.n(t) + p.nu) + p.ndot(t);
        return std::vector<cd>{p.omega(t), kappa, diffusion};
    };
    return g;
}

GeneratorFn semi_free_generator_fn(const DoubledSpace& space, const SemiFreeParams& p) {
    return [g = semi_free_affine(space, p)](double t) { return g(t); };
}

double truncation_error_bound(const ModeStatistics& s, double kappa, double nbar, double n0, int D, double T) {
    if (s.is_fermion()) return 0.0;
    const double f = std::max(tsc_coefficient(s, n0), tsc_coefficient(s, nbar));
    if (!(f < 1.0)) return std::numeric_limits<double>::infinity();
    return 2.0 * kappa * nbar * D * T * std::pow(f, D - 1) + occupation_tail(f, D);
}

cd order_parameter(const DoubledSpace& space, const Vec& ket0, double n_t) {
    GammaSet g = build_gamma(space, n_t);
    return expectation(space.bra(), sparse_product(g.gamma_tilde, g.gamma), ket0);
}

OrderParameterCurve::OrderParameterCurve(const DoubledSpace& space, const Vec& ket0) {
    GammaSet g0 = build_gamma(space, 0.0), g1 = build_gamma(space, 1.0);
    Vec A = g0.gamma * ket0, B = (g1.gamma - g0.gamma) * ket0;
    RowVec At = space.bra() * g0.gamma_tilde, Bt = space.bra() * (g1.gamma_tilde - g0.gamma_tilde);
    c0_ = (At * A)(0);
    c1_ = (At * B)(0) + (Bt * A)(0);
    c2_ = (Bt * B)(0);
}

Vec condensation_ket(const DoubledSpace& space, double n0, double n_t, double tail_tolerance) {
    const auto& s = space.stats();
    if (n_t < 0.0 || (s.is_fermion() && n_t > 1.0))
        throw std::domain_error("condensation_ket: occupation out of range");
    // boson: the condensed ket is geometric with amplitude f(n_t); refuse it when f >= 1 or its tail is cut off
    if (!s.is_fermion()) {
        double tail = occupation_tail(tsc_coefficient(s, n_t), space.levels());
        if (!(tail <= tail_tolerance))
            throw std::domain_error("condensation_ket: pair amplitude not representable at this truncation");
    }
    ThermalVacuumPair vac = build_ket_vacuum(space, n0, tail_tolerance);
    if (n_t == n0) return vac.ket;
    cd c = double(s.sigma) * s.tau * (n_t - n0);
    return Mat(c * pair_creation(space)).exp() * vac.ket;
}

double ray_distance(const RowVec& bra, const Vec& x, const Vec& y) {
    Vec xs = x / (bra * x)(0), ys = y / (bra * y)(0);
    return max_abs(Vec(xs - ys));
}

double ray_overlap(const RowVec& bra, const Vec& x, const Vec& y) {
    Vec xs = x / (bra * x)(0), ys = y / (bra * y)(0);
    return std::abs(xs.dot(ys)) / (xs.norm() * ys.norm());
}

MigrationResidual migration_check(const DoubledSpace& space, double n, double eps) {
    const auto& s = space.stats();
    auto ket = [&](double m) { return closed_form_ket(space, tsc_coefficient(s, m)); };
    Vec diff = (ket(n + eps) - ket(n - eps)) / (2.0 * eps);
    Vec ref = double(s.sigma) * s.tau * (pair_creation(space) * ket(n));
    MigrationResidual r;
    r.residual = max_abs(Vec(diff - ref));
    r.scale = max_abs(ref);
    return r;
}

GaussianFunctionalReport gaussian_functional_check(const DoubledSpace& space, double omega, double kappa,
                                                   double nbar, const GaussianSource& src,
                                                   const std::vector<double>& grid) {
    const auto& s = space.stats();
    if (s.is_fermion()) throw std::invalid_argument("gaussian_functional_check: boson sources only");
    if (space.levels() < 12) throw std::invalid_argument("gaussian_functional_check: truncation below 12");
    const std::size_t steps = grid.size() - 1;
    if (grid.size() < 2 || steps > 6) throw std::invalid_argument("gaussian_functional_check: grid must have 1..6 steps");
    if (src.K.size() != steps || src.K_tilde.size() != steps)
        throw std::invalid_argument("gaussian_functional_check: one source value per step required");

    StationaryGenerator st = build_stationary(space, omega, kappa, nbar);
    ThermalVacuumPair vac = build_ket_vacuum(space, nbar);
    const cd tau = s.tau;

    auto numeric = [&](double sign) {
        Vec y = vac.ket;
        for (std::size_t k = 0; k < steps; ++k) {
            cd K = sign * src.K[k], Kt = sign * src.K_tilde[k];
            Mat S = std::conj(K) * space.a() + K * space.adag() -
                    tau * tau * (Kt * space.atdag() + std::conj(Kt) * space.at());
            double dt = grid[k + 1] - grid[k];
            y = Mat(-kI * (st.gen.H + S) * dt).exp() * y;
        }
        return (space.bra() * y)(0);
    };

    // bar K^mu = (K*, -tau K~), K^nu = (K, tau K~*), rotated into the gamma basis.
    const double sg = s.sigma;
    Eigen::Matrix2cd B, Binv;
    B << 1.0 + sg * nbar, -sg * nbar, -1.0, 1.0;
    Binv << 1.0, sg * nbar, 1.0, 1.0 + sg * nbar;
    std::vector<Eigen::RowVector2cd> Kbar_g(steps);
    std::vector<Eigen::Vector2cd> K_g(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        Eigen::RowVector2cd kb(std::conj(src.K[k]), -tau * src.K_tilde[k]);
        Eigen::Vector2cd kv(src.K[k], tau * std::conj(src.K_tilde[k]));
        Kbar_g[k] = kb * Binv;
        K_g[k] = B * kv;
    }

    ScalarFn wf = [omega](double) { return omega; }, kf = [kappa](double) { return kappa; };
    using GL = boost::math::quadrature::gauss<double, 12>;
    auto block = [&](std::size_t i, std::size_t j) {
        double a = grid[i], b = grid[i + 1], c = grid[j], d = grid[j + 1];
        cd coef_r = Kbar_g[i](0) * K_g[j](0), coef_a = Kbar_g[i](1) * K_g[j](1);
        auto inner = [&](double t) -> cd {
            double lo = c, hi = d;
            cd r = 0.0;
            if (i == j) {
                // retarded part on t' < t, advanced part on t' > t
                if (t > c) {
                    auto fr = [&](double tp) { return propagators(wf, kf, t, tp).retarded; };
                    r += coef_r * (GL::integrate([&](double tp) { return fr(tp).real(); }, c, t) +
                                   kI * GL::integrate([&](double tp) { return fr(tp).imag(); }, c, t));
                }
                if (t < d) {
                    auto fa = [&](double tp) { return propagators(wf, kf, t, tp).advanced; };
                    r += coef_a * (GL::integrate([&](double tp) { return fa(tp).real(); }, t, d) +
                                   kI * GL::integrate([&](double tp) { return fa(tp).imag(); }, t, d));
                }
                return r;
            }
            auto f = [&](double tp) {
                Propagators p = propagators(wf, kf, t, tp);
                return coef_r * p.retarded + coef_a * p.advanced;
            };
            return GL::integrate([&](double tp) { return f(tp).real(); }, lo, hi) +
                   kI * GL::integrate([&](double tp) { return f(tp).imag(); }, lo, hi);
        };
        return GL::integrate([&](double t) { return inner(t).real(); }, a, b) +
               kI * GL::integrate([&](double t) { return inner(t).imag(); }, a, b);
    };

    cd quad = 0.0;
    for (std::size_t i = 0; i < steps; ++i)
        for (std::size_t j = 0; j < steps; ++j) quad += block(i, j);

    GaussianFunctionalReport r;
    r.logz_analytic = -kI * quad;
    r.z_analytic = std::exp(r.logz_analytic);
    r.z_numeric = numeric(1.0);
    cd z_minus = numeric(-1.0);
    r.logz_numeric = std::log(r.z_numeric);
    cd logz_minus = std::log(z_minus);
    r.z_residual = std::abs(r.z_numeric - r.z_analytic) / std::abs(r.z_analytic);
    r.logz_residual = std::abs(r.logz_numeric - r.logz_analytic);
    r.odd_part = 0.5 * std::abs(r.logz_numeric - logz_minus);
    double denom = std::abs(r.logz_analytic);
    cd even = 0.5 * (r.logz_numeric + logz_minus);
    r.quadratic_residual = std::abs(even - r.logz_analytic);
    r.quadratic_relative = denom > 0.0 ? r.quadratic_residual / denom : r.quadratic_residual;
    return r;
}

}  // namespace netfd
