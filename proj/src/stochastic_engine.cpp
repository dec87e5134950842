#include "netfd/stochastic_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <unsupported/Eigen/KroneckerProduct>

namespace netfd {

namespace {

constexpr long kOracleDimLimit = 1L << 20;

Mat kron(const Mat& A, const Mat& B) { return Mat(Eigen::kroneckerProduct(A, B)); }

std::vector<int> reachable(const Mat& H, const Vec& v) {
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

Mat restrict_to(const Mat& X, const std::vector<int>& rows, const std::vector<int>& cols) {
    Mat out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = X(rows[i], cols[j]);
    return out;
}

}  // namespace

void StationaryScenario::validate() const {
    stats.validate();
    if (!(kappa >= 0.0)) throw std::invalid_argument("scenario: kappa < 0");
    if (!(nbar >= 0.0) || (stats.is_fermion() && nbar > 1.0)) throw std::invalid_argument("scenario: nbar out of range");
    if (!(n0 >= 0.0) || (stats.is_fermion() && n0 > 1.0)) throw std::invalid_argument("scenario: n0 out of range");
    if (stats.is_fermion() ? truncation != 2 : truncation < 2)
        throw std::invalid_argument("scenario: truncation must be 2 for fermions and >= 2 for bosons");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("scenario: lambda outside [0,1]");
    if (!std::isfinite(omega) || !std::isfinite(nu)) throw std::invalid_argument("scenario: non-finite omega or nu");
    mu_from_nu(stats, nu);
}

DoubledSpace StationaryScenario::space() const { return build_mode({stats, truncation}); }

SemiFreeParams StationaryScenario::params() const {
    return SemiFreeParams::stationary(omega, kappa, nbar, lambda, nu);
}

Vec StationaryScenario::initial_ket() const { return build_ket_vacuum(space(), n0).ket; }

std::vector<double> fp_occupation(const StationaryScenario& sc, const std::vector<double>& grid) {
    sc.validate();
    auto sp = sc.space();
    auto st = build_stationary(sp, sc.omega, sc.kappa, sc.nbar);
    return evolve_fp(sp, stationary_affine(st.gen.H), sc.initial_ket(), grid).n;
}

long oracle_dimension(const OracleConfig& cfg) {
    const long S = long(cfg.scenario.truncation) * cfg.scenario.truncation;
    const long pair = cfg.scenario.stats.is_fermion() ? 4 : 9;
    long d = S;
    for (int k = 0; k < cfg.steps; ++k) {
        if (d > kOracleDimLimit / pair) return kOracleDimLimit + 1;
        d *= pair;
    }
    return d;
}

OracleResult exact_noise_oracle(const OracleConfig& cfg) {
    const auto& sc = cfg.scenario;
    sc.validate();
    const auto& s = sc.stats;
    if (cfg.steps < 1) throw std::invalid_argument("oracle: steps < 1");
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("oracle: dt must be > 0");
    if (cfg.steps > (s.is_fermion() ? 6 : 4)) throw GuardViolation("oracle: too many steps for the tensor guard");
    const long total = oracle_dimension(cfg);
    if (total > kOracleDimLimit) throw GuardViolation("oracle: tensor dimension exceeds 2^20");

    auto sp = sc.space();
    const int S = sp.dim();
    auto gen = build_semi_free(sp, sc.params(), 0.0);
    auto dM = martingale(sp, gen.alpha, sc.lambda);
    auto table = ito_table({s, sc.kappa, sc.nbar, 0.0, sc.nu});
    IncrementPolynomial G = cfg.form == OracleForm::ito
                                ? ito_generator(gen.H, dM)
                                : stratonovich_generator(gen.H_S, gen.Pi_R, gen.Pi_D, dM, table, sc.lambda);

    // One doubled noise mode in its thermal pair of vacuums; dF = sqrt(2 kappa dt) b.
    auto w = discrete_brownian(1, s, sc.nbar);
    const int d2 = int(w.reg.dim());
    const Mat b = Mat(w.b[0]), bd = Mat(w.bdag[0]), bt = Mat(w.bt[0]), btd = Mat(w.btdag[0]);
    const double g = std::sqrt(2.0 * sc.kappa * cfg.dt), sg = s.sigma, mu = mu_from_nu(s, sc.nu);
    const cd tau = s.tau, tc = s.tau_conj();
    auto realize = [&](Increment x) -> Mat {
        switch (x) {
            case Increment::dW: return g * (mu * b + (sg * tau * sc.nu) * btd);
            case Increment::dWt: return g * (mu * bt + (sg * tc * sc.nu) * bd);
            case Increment::dWv: return g * (bd - tau * bt);
            case Increment::dWtv: return g * (btd - tc * b);
            default: throw std::logic_error("oracle: dt is not a noise operator");
        }
    };

    // Odd noise operators carry the system parity so that system and noise fermions anticommute;
    // the string over earlier noise modes enters as the sign of the local block.
    const Mat Psys = s.is_fermion() ? sp.total_parity() : sp.identity();
    const Mat Ipair = Mat::Identity(d2, d2);
    Mat Gp = Mat::Zero(S * d2, S * d2), Gm = Gp;
    for (const auto& t : G.terms()) {
        if (t.mono.size() == 1 && t.mono[0] == Increment::dt) {
            Mat K = kron(Ipair, cfg.dt * t.coeff);
            Gp += K;
            Gm += K;
            continue;
        }
        if (t.mono.size() != 1) throw std::logic_error("oracle: generator term beyond first order");
        if (!cfg.martingale) continue;
        Mat K = kron(realize(t.mono[0]), t.coeff * Psys);
        Gp += K;
        Gm -= K;
    }
    const Mat one = Mat::Identity(S * d2, S * d2);
    auto step = [&](const Mat& Gs) -> Mat {
        if (cfg.form == OracleForm::ito) return (one - kI * Gs).leftCols(S);
        return Mat(Eigen::PartialPivLU<Mat>(one + 0.5 * kI * Gs).solve(Mat((one - 0.5 * kI * Gs).leftCols(S))));
    };
    const Mat Up = step(Gp);
    const Mat Um = s.is_fermion() ? step(Gm) : Up;

    std::vector<int> pair_sign(d2, 1);
    {
        SpMat P = w.reg.parity();
        for (int m = 0; m < d2; ++m) pair_sign[m] = P.coeff(m, m).real() < 0.0 ? -1 : 1;
    }

    const RowVec& bra = sp.bra();
    const RowVec braN = bra * sp.number();
    OracleResult r;
    r.tensor_dim = total;
    Vec state = sc.initial_ket();
    std::vector<int> qsign{1};
    auto record = [&](double t) {
        Vec x0 = state.head(S);
        r.times.push_back(t);
        r.n.push_back((braN * x0)(0).real());
        r.normalization.push_back((bra * x0)(0));
        r.system_kets.push_back(x0);
    };
    record(0.0);
    long Q = 1;
    for (int k = 1; k <= cfg.steps; ++k) {
        const long L = S * Q;
        Mat X = Eigen::Map<const Mat>(state.data(), S, Q);
        Mat Yp, Ym;
        kernels::batched_matvec(Up, X, Yp);
        if (s.is_fermion()) kernels::batched_matvec(Um, X, Ym);
        Vec next(L * d2);
        std::vector<int> nsign(static_cast<std::size_t>(Q * d2));
        for (long q = 0; q < Q; ++q) {
            const Mat& Y = qsign[q] > 0 ? Yp : Ym;
            for (int m = 0; m < d2; ++m) {
                next.segment(S * q + L * m, S) = Y.col(q).segment(S * m, S);
                nsign[q + Q * m] = qsign[q] * pair_sign[m];
            }
        }
        state.swap(next);
        qsign.swap(nsign);
        Q *= d2;
        record(k * cfg.dt);
    }
    r.noise_excitation = state.size() > S ? max_abs(Vec(state.tail(state.size() - S))) : 0.0;
    r.n_fp = fp_occupation(sc, r.times);
    for (std::size_t i = 0; i < r.n.size(); ++i) r.max_deviation = std::max(r.max_deviation, std::abs(r.n[i] - r.n_fp[i]));
    return r;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

double counter_uniform(std::uint64_t seed, std::uint64_t traj, std::uint64_t step) {
    std::uint64_t key = splitmix64(seed ^ splitmix64(traj));
    return double(splitmix64(key + step) >> 11) * 0x1.0p-53;
}

void Welford::add(double x) {
    ++count;
    double d = x - mean;
    mean += d / double(count);
    m2 += d * (x - mean);
}

void Welford::merge(const Welford& o) {
    if (o.count == 0) return;
    if (count == 0) {
        *this = o;
        return;
    }
    const double n = double(count + o.count), d = o.mean - mean;
    mean += d * double(o.count) / n;
    m2 += o.m2 + d * d * double(count) * double(o.count) / n;
    count += o.count;
}

double jump_dt_bound(const StationaryScenario& sc, JumpSplitKind split) {
    const double n_max = sc.stats.is_fermion() ? 1.0 : double(sc.truncation - 1);
    double c = 2.0 * sc.kappa * std::abs(1.0 + 2.0 * sc.stats.sigma * sc.nbar) * n_max;
    if (split == JumpSplitKind::balanced) c += 2.0 * sc.kappa * sc.nbar;
    return c > 0.0 ? 0.05 / c : std::numeric_limits<double>::infinity();
}

JumpEnsembleResult quantum_jump_ensemble(const StationaryScenario& sc, double horizon, double dt, long n_traj,
                                         std::uint64_t seed, const JumpOptions& opt) {
    sc.validate();
    if (n_traj < 1) throw std::invalid_argument("jump ensemble: n_traj < 1");
    if (opt.lane_block < 1 || opt.threads < 1) throw std::invalid_argument("jump ensemble: bad lane block or threads");
    if (!(opt.max_internal_dt > 0.0)) throw std::invalid_argument("jump ensemble: max_internal_dt must be > 0");
    const auto grid = uniform_grid(horizon, dt);
    const double hmax = opt.respect_dt_bound ? std::min(opt.max_internal_dt, jump_dt_bound(sc, opt.split)) : opt.max_internal_dt;
    const long sub = std::max(1L, long(std::ceil(dt / hmax - 1e-9)));
    const double h = dt / double(sub);

    auto sp = sc.space();
    auto st = build_stationary(sp, sc.omega, sc.kappa, sc.nbar);
    auto split = split_jump(sp, st, opt.split);
    const Vec ket0 = sc.initial_ket();
    const auto idx = reachable(Mat(split.H0.cwiseAbs().cast<cd>() + split.H1.cwiseAbs().cast<cd>()), ket0);
    const int S = int(idx.size());
    const Mat H0 = restrict_to(split.H0, idx, idx), H1 = restrict_to(split.H1, idx, idx);
    Mat A(2 * S, S);
    A.topRows(S) = Mat::Identity(S, S) - kI * h * H0;
    A.bottomRows(S) = -kI * h * H1;
    Mat R(2, S);
    const RowVec braN = sp.bra() * sp.number();
    Vec x0(S);
    for (int i = 0; i < S; ++i) {
        R(0, i) = sp.bra()(idx[i]);
        R(1, i) = braN(idx[i]);
        x0(i) = ket0(idx[i]);
    }

    const kernels::Variant kv = opt.kernel ? *opt.kernel : kernels::active_variant();
    const int T = int(grid.size());
    const int B = opt.lane_block;
    const long blocks = (n_traj + B - 1) / B;

    struct BlockOut {
        std::vector<Welford> acc;
        std::vector<long> hist;
        std::vector<long> rejected;
        double max_dp = 0.0;
    };
    std::vector<BlockOut> out(static_cast<std::size_t>(blocks));

    auto run_block = [&](long blk) {
        const long first = blk * B;
        const int nb = int(std::min<long>(B, n_traj - first));
        Mat X(S, nb), Y, W;
        for (int c = 0; c < nb; ++c) X.col(c) = x0;
        std::vector<double> vals(std::size_t(nb) * T);
        std::vector<long> jumps(nb, 0);
        std::vector<char> dead(nb, 0);
        BlockOut& o = out[std::size_t(blk)];
        auto occupations = [&](int ti) {
            kernels::batched_matvec(kv, R, X, W);
            for (int c = 0; c < nb; ++c) vals[std::size_t(c) * T + ti] = (W(1, c) / W(0, c)).real();
        };
        occupations(0);
        std::uint64_t counter = 0;
        for (int ti = 1; ti < T; ++ti) {
            for (long k = 0; k < sub; ++k, ++counter) {
                kernels::batched_matvec(kv, R, X, W);
                kernels::batched_matvec(kv, A, X, Y);
                for (int c = 0; c < nb; ++c) {
                    if (dead[c]) continue;
                    const double n = (W(1, c) / W(0, c)).real();
                    const double dp = split.dp(n, h);
                    o.max_dp = std::max(o.max_dp, dp);
                    if (dp > 0.1) throw GuardViolation("jump ensemble: dp > 0.1, step too large for the recipe");
                    const bool jump = counter_uniform(seed, std::uint64_t(first + c), counter) < dp;
                    auto y = jump ? Y.col(c).tail(S) : Y.col(c).head(S);
                    const cd z = (R.row(0) * y)(0);
                    if (!std::isfinite(std::abs(z)) || std::abs(z) < 1e-300) {
                        dead[c] = 1;
                        continue;
                    }
                    X.col(c) = y / z;
                    jumps[c] += jump;
                }
            }
            occupations(ti);
        }
        o.acc.assign(std::size_t(T), Welford{});
        for (int c = 0; c < nb; ++c) {
            if (dead[c]) {
                o.rejected.push_back(first + c);
                continue;
            }
            for (int ti = 0; ti < T; ++ti) o.acc[std::size_t(ti)].add(vals[std::size_t(c) * T + ti]);
            if (long(o.hist.size()) <= jumps[c]) o.hist.resize(std::size_t(jumps[c] + 1), 0);
            ++o.hist[std::size_t(jumps[c])];
        }
    };

    std::atomic<long> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto worker = [&] {
        for (long blk; (blk = next.fetch_add(1)) < blocks;) {
            try {
                run_block(blk);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
                next = blocks;
            }
        }
    };
    const int nthreads = int(std::min<long>(opt.threads, blocks));
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (err) std::rethrow_exception(err);

    JumpEnsembleResult r;
    r.times = grid;
    r.seed = seed;
    r.n_traj = n_traj;
    r.internal_dt = h;
    r.kernel = kv;
    std::vector<Welford> acc(static_cast<std::size_t>(T));
    for (const auto& o : out) {
        for (int ti = 0; ti < T; ++ti) acc[std::size_t(ti)].merge(o.acc[std::size_t(ti)]);
        if (r.jump_histogram.size() < o.hist.size()) r.jump_histogram.resize(o.hist.size(), 0);
        for (std::size_t k = 0; k < o.hist.size(); ++k) r.jump_histogram[k] += o.hist[k];
        r.rejected.insert(r.rejected.end(), o.rejected.begin(), o.rejected.end());
        r.max_dp = std::max(r.max_dp, o.max_dp);
    }
    r.accepted = acc.front().count;
    r.stderr_degenerate = r.accepted < 2;
    for (const auto& a : acc) {
        r.mean_n.push_back(a.mean);
        r.stderr_n.push_back(r.stderr_degenerate ? 0.0 : std::sqrt(a.variance() / double(a.count)));
    }
    return r;
}

Mat graded_bracket(const DoubledSpace& space, const Mat& A, const Mat& B) {
    int s = 1;
    if (space.stats().is_fermion() && operator_parity(space, A) && operator_parity(space, B)) s = -1;
    return sparse_product(A, B) - double(s) * sparse_product(B, A);
}

AveragedEquationReport averaged_equation_check(const DoubledSpace& space, const SemiFreeParams& p, const Vec& ket0,
                                               const std::vector<Mat>& observables, const std::vector<double>& grid,
                                               double h) {
    if (!(h > 0.0)) throw std::invalid_argument("averaged_equation_check: h must be > 0");
    std::set<double> need{0.0};
    for (double t : grid) {
        if (t - h < 0.0) throw std::invalid_argument("averaged_equation_check: grid time closer than h to 0");
        for (double off : {-h, -0.5 * h, 0.0, 0.5 * h, h}) need.insert(t + off);
    }
    std::vector<double> times(need.begin(), need.end());
    EvolveOptions opt;
    opt.method = EvolveMethod::rk4;
    auto tr = evolve_fp(space, semi_free_affine(space, p), ket0, times, opt);
    std::map<double, Vec> ket;
    for (std::size_t i = 0; i < times.size(); ++i) ket[times[i]] = tr.kets[i];

    const auto& bra = space.bra();
    const Mat& a = space.a();
    const Mat& ad = space.adag();
    const double sg = space.sigma();
    AveragedEquationReport rep;
    for (const Mat& A : observables) {
        auto f = [&](double t) { return (bra * A * ket.at(t))(0); };
        Mat relax_a = graded_bracket(space, A, ad);
        Mat relax = sparse_product(relax_a, a) + sparse_product(ad, graded_bracket(space, a, A));
        Mat diff = graded_bracket(space, relax_a, a);
        double worst = 0.0;
        for (double t : grid) {
            cd d1 = (f(t + h) - f(t - h)) / (2.0 * h);
            cd d2 = (f(t + 0.5 * h) - f(t - 0.5 * h)) / h;
            cd lhs = (4.0 * d2 - d1) / 3.0;
            auto gset = build_semi_free(space, p, t);
            const Vec& k = ket.at(t);
            cd rhs = kI * (bra * graded_bracket(space, gset.H_S, A) * k)(0) - gset.kappa * (bra * relax * k)(0) -
                     sg * (2.0 * gset.kappa * gset.n + gset.ndot) * (bra * diff * k)(0);
            worst = std::max(worst, std::abs(lhs - rhs));
            rep.scale = std::max(rep.scale, std::abs(rhs));
        }
        rep.residual.push_back(worst);
        rep.max_residual = std::max(rep.max_residual, worst);
    }
    return rep;
}

LangevinFlow langevin_moment_flow(const StationaryScenario& sc, const std::vector<double>& grid) {
    sc.validate();
    if (grid.empty() || grid.front() != 0.0) throw std::invalid_argument("langevin_moment_flow: grid must start at 0");
    const cd ra = -cd(sc.kappa, sc.omega);
    const cd rv = -cd(-(1.0 - 2.0 * sc.lambda) * sc.kappa, sc.omega);
    auto rk4 = [](cd rate, cd y, double span) {
        const long m = std::max(1L, long(std::ceil(span / 0.001)));
        const double hh = span / double(m);
        for (long i = 0; i < m; ++i) {
            cd k1 = rate * y, k2 = rate * (y + 0.5 * hh * k1), k3 = rate * (y + 0.5 * hh * k2), k4 = rate * (y + hh * k3);
            y += hh / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        return y;
    };
    LangevinFlow fl;
    fl.times = grid;
    cd ya = 1.0, yv = 1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (i > 0) {
            ya = rk4(ra, ya, grid[i] - grid[i - 1]);
            yv = rk4(rv, yv, grid[i] - grid[i - 1]);
        }
        fl.alpha.push_back(ya);
        fl.alpha_tilde_venus.push_back(yv);
    }

    auto sp = sc.space();
    auto gen = build_semi_free(sp, sc.params(), 0.0);
    Vec vac = sc.initial_ket();
    Vec ket0 = vac + gen.alpha.alpha_venus * vac;
    auto tr = evolve_fp(sp, stationary_affine(gen.H), ket0, grid);
    const RowVec ba = sp.bra() * gen.alpha.alpha;
    const cd a0 = (ba * ket0)(0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        fl.alpha_fp.push_back((ba * tr.kets[i])(0) / a0);
        fl.fp_rate_residual = std::max(fl.fp_rate_residual, std::abs(fl.alpha_fp.back() - std::exp(ra * grid[i])));
    }
    return fl;
}

}  // namespace netfd
