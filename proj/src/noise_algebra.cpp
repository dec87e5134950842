#include "netfd/noise_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace netfd {

namespace {

int order(const std::vector<Increment>& mono) {
    int o = 0;
    for (Increment x : mono) o += stochastic(x) ? 1 : 2;
    return o;
}

int stochastic_count(const std::vector<Increment>& mono) {
    return int(std::count_if(mono.begin(), mono.end(), [](Increment x) { return stochastic(x); }));
}

// Sign from carrying the increments of `mono` to the right of a coefficient with grading p.
double exchange_sign(const ModeStatistics& s, const std::vector<Increment>& mono, int p) {
    return (s.is_fermion() && p && stochastic_count(mono) % 2) ? -1.0 : 1.0;
}

std::vector<Increment> tilde_mono(std::vector<Increment> mono) {
    for (Increment& x : mono) x = tilde(x);
    return mono;
}

SpMat diagonal(const std::vector<cd>& d) {
    std::vector<Eigen::Triplet<cd>> t;
    t.reserve(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) t.emplace_back(int(i), int(i), d[i]);
    SpMat m(int(d.size()), int(d.size()));
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

}  // namespace

const char* increment_name(Increment x) {
    switch (x) {
        case Increment::dW: return "dW";
        case Increment::dWt: return "dW~";
        case Increment::dWv: return "dW°";
        case Increment::dWtv: return "dW~°";
        case Increment::dt: return "dt";
    }
    return "?";
}

Increment tilde(Increment x) {
    switch (x) {
        case Increment::dW: return Increment::dWt;
        case Increment::dWt: return Increment::dW;
        case Increment::dWv: return Increment::dWtv;
        case Increment::dWtv: return Increment::dWv;
        case Increment::dt: return Increment::dt;
    }
    return x;
}

WeakProductTable ito_table(const NoiseParams& p) {
    p.stats.validate();
    const cd tau = p.stats.tau;
    const double sg = p.stats.sigma, X = p.diffusion();
    Table5 m = Table5::Zero();
    auto at = [&](Increment l, Increment r) -> cd& { return m(int(l), int(r)); };
    at(Increment::dW, Increment::dWt) = tau * X;
    at(Increment::dWt, Increment::dW) = sg * tau * X;
    at(Increment::dW, Increment::dWv) = 2.0 * p.kappa;
    at(Increment::dWt, Increment::dWtv) = 2.0 * p.kappa;
    return WeakProductTable(p, m);
}

Table4 force_table(const ModeStatistics& s, double kappa, double n, double ndot) {
    const cd tau = s.tau;
    const double sg = s.sigma;
    const double X = 2.0 * kappa * n + ndot;                         // <dF^dag dF>/dt
    const double Y = 2.0 * kappa * (1.0 + sg * n) + sg * ndot;       // <dF dF^dag>/dt
    Table4 f = Table4::Zero();
    f(0, 1) = Y;
    f(0, 2) = tau * X;
    f(1, 0) = X;
    f(1, 3) = tau * Y;
    f(2, 0) = sg * tau * X;
    f(2, 3) = Y;
    f(3, 1) = sg * tau * Y;
    f(3, 2) = X;
    return f;
}

Table4 wiener_in_force(const ModeStatistics& s, double nu) {
    const cd tau = s.tau, tc = s.tau_conj();
    const double sg = s.sigma, mu = mu_from_nu(s, nu);
    Table4 e = Table4::Zero();
    e(0, 0) = mu;  // dW = mu dF + sigma tau nu dF~^dag
    e(0, 3) = sg * tau * nu;
    e(1, 2) = mu;  // dW~ = mu dF~ + sigma tau* nu dF^dag
    e(1, 1) = sg * tc * nu;
    e(2, 1) = 1.0;  // dW° = dF^dag - tau dF~
    e(2, 2) = -tau;
    e(3, 3) = 1.0;  // dW~° = dF~^dag - tau* dF
    e(3, 0) = -tc;
    return e;
}

Table5 table_from_force(const Table4& force, const Table4& expansion) {
    Table5 m = Table5::Zero();
    m.topLeftCorner<4, 4>() = expansion * force * expansion.transpose();
    return m;
}

Eigen::Matrix3cd zero_temperature_table() {
    Eigen::Matrix3cd m = Eigen::Matrix3cd::Zero();
    m(0, 1) = 1.0;
    return m;
}

Table5 thermal_brownian_table(const ModeStatistics& s, double nbar) {
    const cd tau = s.tau;
    const double sg = s.sigma, up = 1.0 + sg * nbar;
    Table5 m = Table5::Zero();
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

NoiseCorrelations noise_correlations(const ModeStatistics& s, double kappa, double n, double ndot, double nu,
                                     bool stationary) {
    if (stationary) ndot = 0.0;
    NoiseCorrelations c;
    c.dFdag_dF = 2.0 * kappa * n + ndot;
    c.dF_dFdag = 2.0 * kappa * (1.0 + s.sigma * n) + s.sigma * ndot;
    c.dW_dWt = s.tau * (2.0 * kappa * (n + nu) + ndot);
    c.dW_dWv = 2.0 * kappa;
    return c;
}

void IncrementPolynomial::add(const Mat& coeff, std::vector<Increment> mono, int parity) {
    if (coeff.rows() != dim_ || coeff.cols() != dim_)
        throw std::invalid_argument("IncrementPolynomial: coefficient dimension mismatch");
    if (order(mono) > 2 || coeff.isZero(0.0)) return;
    terms_.push_back({coeff, std::move(mono), s_.is_fermion() ? parity % 2 : 0});
}

void IncrementPolynomial::add_left(std::vector<Increment> mono, const Mat& coeff, int parity) {
    const double sign = exchange_sign(s_, mono, parity);
    add(sign * coeff, std::move(mono), parity);
}

IncrementPolynomial IncrementPolynomial::scaled(cd c) const {
    IncrementPolynomial out(s_, dim_);
    for (const auto& t : terms_) out.add(c * t.coeff, t.mono, t.parity);
    return out;
}

IncrementPolynomial IncrementPolynomial::operator+(const IncrementPolynomial& o) const {
    if (o.dim_ != dim_ || o.s_.sigma != s_.sigma) throw std::invalid_argument("IncrementPolynomial: mismatch");
    IncrementPolynomial out = *this;
    for (const auto& t : o.terms_) out.add(t.coeff, t.mono, t.parity);
    return out;
}

IncrementPolynomial IncrementPolynomial::operator*(const IncrementPolynomial& o) const {
    if (o.dim_ != dim_ || o.s_.sigma != s_.sigma) throw std::invalid_argument("IncrementPolynomial: mismatch");
    IncrementPolynomial out(s_, dim_);
    for (const auto& l : terms_)
        for (const auto& r : o.terms_) {
            std::vector<Increment> mono = l.mono;
            mono.insert(mono.end(), r.mono.begin(), r.mono.end());
            if (order(mono) > 2) continue;
            const double sign = exchange_sign(s_, l.mono, r.parity);
            out.add(sign * (l.coeff * r.coeff), std::move(mono), l.parity + r.parity);
        }
    return out;
}

Mat IncrementPolynomial::coefficient(const std::vector<Increment>& mono) const {
    Mat sum = Mat::Zero(dim_, dim_);
    bool seen[2] = {false, false};
    for (const auto& t : terms_)
        if (t.mono == mono) {
            sum += t.coeff;
            seen[t.parity] = true;
        }
    if (seen[0] && seen[1]) throw std::logic_error("IncrementPolynomial: mixed gradings under one monomial");
    return sum;
}

std::vector<std::vector<Increment>> IncrementPolynomial::monomials() const {
    std::vector<std::vector<Increment>> out;
    for (const auto& t : terms_)
        if (std::find(out.begin(), out.end(), t.mono) == out.end()) out.push_back(t.mono);
    return out;
}

IncrementPolynomial IncrementPolynomial::random_average(const WeakProductTable& table) const {
    IncrementPolynomial c = contract(table), out(s_, dim_);
    for (const auto& t : c.terms_)
        if (stochastic_count(t.mono) == 0) out.add(t.coeff, t.mono, t.parity);
    return out;
}

IncrementPolynomial IncrementPolynomial::contract(const WeakProductTable& table) const {
    IncrementPolynomial out(s_, dim_);
    for (const auto& t : terms_) {
        if (stochastic_count(t.mono) == 2) {
            cd w = table(t.mono[0], t.mono[1]);
            if (w != 0.0) out.add(w * t.coeff, {Increment::dt}, t.parity);
        } else {
            out.add(t.coeff, t.mono, t.parity);
        }
    }
    return out;
}

IncrementPolynomial IncrementPolynomial::tilde(const DoubledSpace& space) const {
    IncrementPolynomial out(s_, dim_);
    for (const auto& t : terms_) out.add(space.tilde(t.coeff), tilde_mono(t.mono), t.parity);
    return out;
}

double IncrementPolynomial::max_abs() const {
    double m = 0.0;
    for (const auto& mono : monomials()) m = std::max(m, netfd::max_abs(coefficient(mono)));
    return m;
}

int operator_parity(const DoubledSpace& space, const Mat& X) {
    if (!space.stats().is_fermion()) return 0;
    const Mat& P = space.total_parity();
    Mat PXP = P * X * P;
    double even = netfd::max_abs(Mat(X + PXP)), odd = netfd::max_abs(Mat(X - PXP));
    double tol = 1e-14 * std::max(1.0, netfd::max_abs(X));
    if (even > tol && odd > tol) throw std::logic_error("operator_parity: operator has no definite grading");
    return odd > tol ? 1 : 0;
}

IncrementPolynomial martingale(const DoubledSpace& space, const AlphaOps& alpha, double lambda) {
    if (lambda < 0.0 || lambda > 1.0) throw std::domain_error("martingale: lambda outside [0,1]");
    const auto& s = space.stats();
    if (std::abs(alpha.mu + s.sigma * alpha.nu - 1.0) > 1e-14)
        throw std::invalid_argument("martingale: alpha violates mu + sigma nu = 1");
    IncrementPolynomial dM(s, space.dim());
    auto par = [&](const Mat& X) { return operator_parity(space, X); };
    dM.add(kI * alpha.alpha_venus, {Increment::dW}, par(alpha.alpha_venus));
    dM.add(kI * alpha.alpha_tilde_venus, {Increment::dWt}, par(alpha.alpha_tilde_venus));
    if (lambda != 0.0) {
        dM.add_left({Increment::dWv}, -kI * lambda * alpha.alpha, par(alpha.alpha));
        dM.add_left({Increment::dWtv}, -kI * lambda * alpha.alpha_tilde, par(alpha.alpha_tilde));
    }
    return dM;
}

Mat weak_square(const IncrementPolynomial& p, const WeakProductTable& table) {
    for (const auto& t : p.terms())
        if (stochastic_count(t.mono) > 1) throw std::invalid_argument("weak_square: polynomial beyond first degree");
    return (p * p).contract(table).drift();
}

IncrementPolynomial ito_generator(const Mat& H, const IncrementPolynomial& dM) {
    IncrementPolynomial out = dM;
    out.add(H, {Increment::dt}, 0);
    return out;
}

IncrementPolynomial stratonovich_generator(const Mat& H_S, const Mat& Pi_R, const Mat& Pi_D,
                                           const IncrementPolynomial& dM, const WeakProductTable& table,
                                           double lambda) {
    IncrementPolynomial b = dM;
    b.add(H_S + kI * (1.0 - lambda) * Pi_R, {Increment::dt}, 0);

    IncrementPolynomial a = dM + (dM * dM).contract(table).scaled(0.5 * kI);
    a.add(H_S + kI * (Pi_R + Pi_D), {Increment::dt}, 0);
    double scale = std::max(1.0, a.max_abs());
    if ((a - b).max_abs() > 1e-12 * scale)
        throw std::logic_error("stratonovich_generator: the two Stratonovich forms disagree");
    return b;
}

IncrementPolynomial heisenberg_increment(const DoubledSpace& space, const Mat& A, const IncrementPolynomial& dM) {
    const int pA = operator_parity(space, A);
    IncrementPolynomial out(dM.stats(), dM.dim());
    for (const auto& t : dM.terms()) {
        if (stochastic_count(t.mono) != 1)
            throw std::invalid_argument("heisenberg_increment: martingale terms must carry one increment");
        double s = exchange_sign(dM.stats(), t.mono, pA);
        out.add(kI * (s * (t.coeff * A) - A * t.coeff), t.mono, t.parity + pA);
    }
    return out;
}

IncrementPolynomial ito_stratonovich_convert(const IncrementPolynomial& product, const IncrementPolynomial& dX,
                                             const IncrementPolynomial& dY, const WeakProductTable& table,
                                             ProductConvention from) {
    IncrementPolynomial half = (dX * dY).contract(table).scaled(0.5);
    return from == ProductConvention::ito ? product + half : product - half;
}

FockRegister::FockRegister(std::vector<int> site_dims, bool fermionic, long max_dim)
    : dims_(std::move(site_dims)), fermionic_(fermionic) {
    stride_.assign(dims_.size(), 1);
    for (int s = int(dims_.size()) - 1; s >= 0; --s) {
        if (dims_[s] < 2) throw std::invalid_argument("FockRegister: site dimension < 2");
        if (fermionic_ && dims_[s] != 2) throw std::invalid_argument("FockRegister: fermion sites are two-level");
        stride_[s] = dim_;
        if (dim_ > max_dim / dims_[s]) throw GuardViolation("FockRegister: dimension exceeds the guard");
        dim_ *= dims_[s];
    }
}

SpMat FockRegister::lowering(int s) const {
    std::vector<Eigen::Triplet<cd>> t;
    t.reserve(std::size_t(dim_));
    for (long i = 0; i < dim_; ++i) {
        int d = digit(i, s);
        if (d > 0) t.emplace_back(int(i - stride_[s]), int(i), fermionic_ ? 1.0 : std::sqrt(double(d)));
    }
    SpMat m{int(dim_), int(dim_)};
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

SpMat FockRegister::string(int s) const {
    std::vector<cd> d(std::size_t(dim_), 1.0);
    if (fermionic_)
        for (long i = 0; i < dim_; ++i) {
            int n = 0;
            for (int j = 0; j <= s; ++j) n += digit(i, j);
            if (n % 2) d[std::size_t(i)] = -1.0;
        }
    return diagonal(d);
}

SpMat FockRegister::annihilator(int s) const { return string(s) * lowering(s); }
SpMat FockRegister::creator(int s) const { return SpMat(annihilator(s).adjoint()); }
SpMat FockRegister::identity() const { return diagonal(std::vector<cd>(std::size_t(dim_), 1.0)); }

bool DiscreteBrownian::low_excitation(long index) const {
    for (int s = 0; s < reg.sites(); ++s)
        if (reg.digit(index, s) > 1) return false;
    return true;
}

DiscreteBrownian discrete_brownian(int N, const ModeStatistics& s, std::optional<double> nbar) {
    s.validate();
    if (N < 1) throw std::invalid_argument("discrete_brownian: need at least one mode");
    if (N > 8) throw GuardViolation("discrete_brownian: more than 8 modes");
    if (nbar && (*nbar < 0.0 || (s.is_fermion() && *nbar > 1.0)))
        throw std::domain_error("discrete_brownian: nbar out of range");
    DiscreteBrownian w;
    w.stats = s;
    w.modes = N;
    w.nbar = nbar;
    const int local = s.is_fermion() ? 2 : 3;
    const int per_mode = nbar ? 2 : 1;
    w.reg = FockRegister(std::vector<int>(std::size_t(N * per_mode), local), s.is_fermion());
    const cd tau = s.tau, tc = s.tau_conj();
    const double sg = s.sigma;
    for (int k = 0; k < N; ++k) {
        if (!nbar) {
            w.b.push_back(w.reg.annihilator(k));
            w.bdag.push_back(w.reg.creator(k));
            w.J.push_back(w.reg.string(k));
            continue;
        }
        const double nb = *nbar, up = 1.0 + sg * nb;
        SpMat c = w.reg.annihilator(2 * k), cv = w.reg.creator(2 * k);
        SpMat ct = w.reg.annihilator(2 * k + 1), ctv = w.reg.creator(2 * k + 1);
        w.b.push_back(c + (sg * tau * nb) * ctv);
        w.bdag.push_back(up * cv + tau * ct);
        w.bt.push_back(ct + (sg * tc * nb) * cv);
        w.btdag.push_back(up * ctv + tc * c);
        w.J.push_back(w.reg.string(2 * k));
        w.Jt.push_back(w.reg.string(2 * k + 1));
    }
    w.bra = RowVec::Zero(w.reg.dim());
    w.bra(0) = 1.0;
    w.ket = Vec::Zero(w.reg.dim());
    w.ket(0) = 1.0;
    return w;
}

Mat increment_moments(const DiscreteBrownian& w, int k) {
    if (k < 0 || k >= w.modes) throw std::out_of_range("increment_moments: mode index");
    std::vector<const SpMat*> ops = {&w.b[k], &w.bdag[k]};
    if (w.thermal()) {
        ops.push_back(&w.bt[k]);
        ops.push_back(&w.btdag[k]);
    }
    const int n = int(ops.size());
    Mat m = Mat::Zero(n + 1, n + 1);
    for (int i = 0; i < n; ++i) {
        RowVec left = w.bra * (*ops[i]);
        for (int j = 0; j < n; ++j) m(i, j) = (left * ((*ops[j]) * w.ket))(0);
    }
    return m;
}

BrownianChecks check_brownian(const DiscreteBrownian& w) {
    BrownianChecks r;
    const double sg = w.stats.sigma;
    const SpMat I = w.reg.identity();
    auto restricted_max = [&](const SpMat& M) {
        double m = 0.0;
        for (int c = 0; c < M.outerSize(); ++c)
            for (SpMat::InnerIterator it(M, c); it; ++it)
                if (w.low_excitation(it.row()) && w.low_excitation(it.col())) m = std::max(m, std::abs(it.value()));
        return m;
    };
    auto graded = [&](const SpMat& A, const SpMat& B) { return SpMat(A * B - sg * (B * A)); };

    std::vector<const std::vector<SpMat>*> ann = {&w.b}, cre = {&w.bdag};
    if (w.thermal()) {
        ann.push_back(&w.bt);
        cre.push_back(&w.btdag);
    }
    for (std::size_t fa = 0; fa < ann.size(); ++fa)
        for (std::size_t fb = 0; fb < ann.size(); ++fb)
            for (int j = 0; j < w.modes; ++j)
                for (int k = 0; k < w.modes; ++k) {
                    const SpMat& A = (*ann[fa])[j];
                    SpMat C = graded(A, (*cre[fb])[k]);
                    if (fa == fb && j == k) {
                        C -= I;
                        r.canonical = std::max(r.canonical, restricted_max(C));
                    } else {
                        r.exchange = std::max(r.exchange, restricted_max(C));
                    }
                    r.exchange = std::max(r.exchange, restricted_max(graded(A, (*ann[fb])[k])));
                }

    std::vector<SpMat> Js = w.J;
    Js.insert(Js.end(), w.Jt.begin(), w.Jt.end());
    for (const auto& A : Js) {
        r.reflection = std::max(r.reflection, restricted_max(SpMat(A * A - I)));
        r.reflection = std::max(r.reflection, restricted_max(SpMat(SpMat(A.adjoint()) - A)));
        for (const auto& B : Js) r.reflection = std::max(r.reflection, restricted_max(SpMat(A * B - B * A)));
    }

    if (w.thermal())
        for (int k = 0; k < w.modes; ++k) {
            RowVec v = w.bra * SpMat(w.bdag[k] - w.stats.tau * w.bt[k]);
            r.bra_venus = std::max(r.bra_venus, max_abs(v));
        }
    return r;
}

}  // namespace netfd
