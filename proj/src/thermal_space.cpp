#include "netfd/thermal_space.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>
#include <boost/math/tools/roots.hpp>

namespace netfd {

namespace {

Mat kron(const Mat& A, const Mat& B) {
    Mat out(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return out;
}

// Unit null vector of the stacked operator K (K v = 0), requiring a simple null space.
// K^H K conserves n - m for every constraint set used here, so it is solved sector by sector.
Vec null_vector(const Mat& K, int D, const char* what) {
    Eigen::SparseMatrix<cd> Ks = K.sparseView();
    Mat G = Mat(Ks.adjoint() * Ks);
    const int d = int(G.rows());
    auto sector = [D](int i) { return i / D - i % D; };
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (sector(i) != sector(j) && G(i, j) != 0.0)
                throw std::logic_error(std::string(what) + ": constraints mix n - m sectors");
    double scale = std::max(1.0, G.cwiseAbs().rowwise().sum().maxCoeff());
    double best = std::numeric_limits<double>::infinity(), second = best;
    Vec out = Vec::Zero(d);
    for (int q = -(D - 1); q <= D - 1; ++q) {
        std::vector<int> idx;
        for (int i = 0; i < d; ++i)
            if (sector(i) == q) idx.push_back(i);
        Mat B(idx.size(), idx.size());
        for (size_t r = 0; r < idx.size(); ++r)
            for (size_t c = 0; c < idx.size(); ++c) B(r, c) = G(idx[r], idx[c]);
        Eigen::SelfAdjointEigenSolver<Mat> es(B);
        if (es.info() != Eigen::Success) throw std::runtime_error(std::string(what) + ": eigensolver failed");
        const auto& ev = es.eigenvalues();
        for (Eigen::Index k = 0; k < ev.size(); ++k) {
            if (ev(k) < best) {
                second = best;
                best = ev(k);
                out.setZero();
                for (size_t r = 0; r < idx.size(); ++r) out(idx[r]) = es.eigenvectors()(r, k);
            } else if (ev(k) < second) {
                second = ev(k);
            }
        }
    }
    if (best > 1e-12 * scale) throw std::runtime_error(std::string(what) + ": no null vector");
    if (second < 1e-8 * scale) throw std::runtime_error(std::string(what) + ": null space is degenerate");
    return out;
}

// Ladder matrices are very sparse; dense products dominate construction time otherwise.
double truncated_mean(double f, int D) {
    double num = 0.0, den = 0.0, p = 1.0;
    for (int k = 0; k < D; ++k) {
        num += k * p;
        den += p;
        p *= f;
    }
    return num / den;
}

}  // namespace

void ModeStatistics::validate() const {
    if (sigma == 1 && tau == cd{1.0, 0.0}) return;
    if (sigma == -1 && tau == cd{0.0, 1.0}) return;
    throw std::invalid_argument("statistics: (sigma, tau) must be (+1, 1) or (-1, i)");
}

DoubledSpace::DoubledSpace(const ModeConfig& cfg) : stats_(cfg.stats), D_(cfg.truncation) {
    stats_.validate();
    if (stats_.is_fermion() && D_ != 2) throw std::invalid_argument("fermion mode requires truncation 2");
    if (!stats_.is_fermion() && D_ < 2) throw std::invalid_argument("boson truncation must be >= 2");

    Mat A = Mat::Zero(D_, D_);
    for (int n = 1; n < D_; ++n) A(n - 1, n) = std::sqrt(double(n));
    Mat Id = Mat::Identity(D_, D_);
    Mat P = Mat::Identity(D_, D_);
    if (stats_.is_fermion())
        for (int n = 0; n < D_; ++n) P(n, n) = (n % 2) ? -1.0 : 1.0;

    a_ = kron(A, Id);
    adag_ = a_.adjoint();
    at_ = kron(P, A);
    atdag_ = at_.adjoint();
    Mat Nd = Mat::Zero(D_, D_);
    for (int n = 0; n < D_; ++n) Nd(n, n) = double(n);
    num_ = kron(Nd, Id);
    numt_ = kron(Id, Nd);
    parity_ = kron(P, Id);
    total_parity_ = kron(P, P);

    bra_ = RowVec::Zero(dim());
    for (int n = 0; n < D_; ++n) bra_(index(n, n)) = std::pow(stats_.tau, n);

    perm_.resize(dim());
    sign_.resize(dim());
    for (int n = 0; n < D_; ++n)
        for (int m = 0; m < D_; ++m) {
            perm_[index(n, m)] = index(m, n);
            sign_[index(n, m)] = (stats_.is_fermion() && (n * m) % 2) ? -1.0 : 1.0;
        }

    if (!(tilde(a_).array() == at_.array()).all())
        throw std::logic_error("tilde embedding inconsistent");
}

Mat DoubledSpace::tilde(const Mat& X) const {
    Mat out(dim(), dim());
    for (int i = 0; i < dim(); ++i)
        for (int j = 0; j < dim(); ++j) out(i, j) = sign_[i] * sign_[j] * std::conj(X(perm_[i], perm_[j]));
    return out;
}

Vec DoubledSpace::tilde(const Vec& v) const {
    Vec out(dim());
    for (int i = 0; i < dim(); ++i) out(i) = sign_[i] * std::conj(v(perm_[i]));
    return out;
}

RowVec DoubledSpace::tilde(const RowVec& v) const {
    RowVec out(dim());
    for (int i = 0; i < dim(); ++i) out(i) = sign_[i] * std::conj(v(perm_[i]));
    return out;
}

bool DoubledSpace::physical(int i) const {
    if (stats_.is_fermion()) return true;
    return (i / D_) < D_ - 1 && (i % D_) < D_ - 1;
}

double DoubledSpace::physical_max(const Mat& X) const {
    double m = 0.0;
    for (int i = 0; i < dim(); ++i)
        for (int j = 0; j < dim(); ++j)
            if (physical(i) && physical(j)) m = std::max(m, std::abs(X(i, j)));
    return m;
}

double DoubledSpace::physical_max(const RowVec& v) const {
    double m = 0.0;
    for (int i = 0; i < dim(); ++i)
        if (physical(i)) m = std::max(m, std::abs(v(i)));
    return m;
}

double DoubledSpace::physical_max(const Vec& v) const {
    double m = 0.0;
    for (int i = 0; i < dim(); ++i)
        if (physical(i)) m = std::max(m, std::abs(v(i)));
    return m;
}

DoubledSpace build_mode(const ModeConfig& cfg) { return DoubledSpace(cfg); }

double occupation_tail(double f, int D) {
    if (f <= 0.0) return 0.0;
    if (f >= 1.0) return std::numeric_limits<double>::infinity();
    return std::pow(f, D) / (1.0 - f);
}

double tsc_coefficient(const ModeStatistics& s, double n) {
    double den = 1.0 + s.sigma * n;
    if (den <= 0.0) return std::numeric_limits<double>::infinity();
    return n / den;
}

RowVec closed_form_bra(const DoubledSpace& space) {
    Mat X = space.tau() * sparse_product(space.at(), space.a());
    RowVec term = RowVec::Zero(space.dim());
    term(space.index(0, 0)) = 1.0;
    RowVec out = term;
    for (int k = 1; k <= space.levels(); ++k) {
        term = term * X / double(k);
        out += term;
    }
    return out;
}

Vec closed_form_ket(const DoubledSpace& space, double f) {
    Vec vac = Vec::Zero(space.dim());
    vac(space.index(0, 0)) = 1.0;
    Mat X = sparse_product(space.adag(), space.atdag());
    Vec out;
    if (!std::isfinite(f)) {
        if (!space.stats().is_fermion()) throw std::domain_error("closed_form_ket: boson f must be finite");
        out = X * vac;
    } else {
        cd c = space.stats().tau_conj() * f;
        Vec term = vac;
        out = vac;
        for (int k = 1; k < space.levels(); ++k) {
            term = c * (X * term) / double(k);
            out += term;
        }
    }
    cd z = closed_form_bra(space) * out;
    return out / z;
}

RowVec build_bra_vacuum(const DoubledSpace& space) {
    const int d = space.dim();
    Mat M1 = space.atdag() - space.stats().tau_conj() * space.a();
    Mat M2 = space.adag() - space.tau() * space.at();
    Mat K(2 * d, d);
    K << M1.transpose(), M2.transpose();
    Vec v = null_vector(K, space.levels(), "build_bra_vacuum");
    RowVec bra = v.transpose() / v(space.index(0, 0));
    RowVec ref = closed_form_bra(space);
    if (max_abs(RowVec(bra - ref)) > 1e-10) throw std::logic_error("build_bra_vacuum: closed-form mismatch");
    return bra;
}

ThermalVacuumPair build_ket_vacuum(const DoubledSpace& space, double n0, double tail_tolerance) {
    const auto& s = space.stats();
    if (!(n0 >= 0.0)) throw std::domain_error("build_ket_vacuum: occupation must be >= 0");
    if (s.is_fermion() && n0 > 1.0) throw std::domain_error("build_ket_vacuum: fermion occupation must be <= 1");

    ThermalVacuumPair vac;
    vac.occupation = n0;
    vac.f = tsc_coefficient(s, n0);
    double n_used = n0;
    if (s.is_fermion()) {
        vac.f_used = vac.f;
    } else {
        vac.tail = occupation_tail(vac.f, space.levels());
        if (vac.tail > tail_tolerance)
            throw std::domain_error("build_ket_vacuum: truncation tail " + std::to_string(vac.tail) +
                                    " exceeds tolerance");
        const int D = space.levels();
        if (n0 == 0.0) {
            vac.f_used = 0.0;
        } else {
            auto g = [&](double f) { return truncated_mean(f, D) - n0; };
            double hi = std::max(2.0 * vac.f, 1e-3);
            while (g(hi) < 0.0) hi *= 2.0;
            boost::uintmax_t iters = 200;
            auto r = boost::math::tools::toms748_solve(
                g, 0.0, hi, boost::math::tools::eps_tolerance<double>(52), iters);
            vac.f_used = 0.5 * (r.first + r.second);
        }
        if (vac.f_used >= 1.0) throw std::domain_error("build_ket_vacuum: truncation too small for occupation");
        n_used = vac.f_used / (1.0 - vac.f_used);
    }

    const int d = space.dim();
    Mat gamma = (1.0 + s.sigma * n_used) * space.a() - double(s.sigma) * s.tau * n_used * space.atdag();
    Mat gamma_t = (1.0 + s.sigma * n_used) * space.at() - s.tau * n_used * space.adag();
    Mat K(2 * d, d);
    K << gamma_t, gamma;
    Vec v = null_vector(K, space.levels(), "build_ket_vacuum");

    vac.bra = build_bra_vacuum(space);
    vac.ket = v / (vac.bra * v)(0);
    Vec ref = closed_form_ket(space, vac.f_used);
    if (max_abs(Vec(vac.ket - ref)) > 1e-10) throw std::logic_error("build_ket_vacuum: closed-form mismatch");
    return vac;
}

cd expectation(const RowVec& bra, const Mat& A, const Vec& ket) { return (bra * (A * ket))(0); }

double measure_occupation(const DoubledSpace& space, const RowVec& bra, const Vec& ket) {
    return expectation(bra, space.number(), ket).real();
}

TscResiduals tsc_residuals(const DoubledSpace& space, const ThermalVacuumPair& vac) {
    const auto& s = space.stats();
    TscResiduals r;
    r.bra_tilde_dag = max_abs(RowVec(vac.bra * (space.atdag() - s.tau_conj() * space.a())));
    r.bra_dag = max_abs(RowVec(vac.bra * (space.adag() - s.tau * space.at())));
    double n = vac.occupation;
    Vec g = ((1.0 + s.sigma * n) * space.at() - s.tau * n * space.adag()) * vac.ket;
    r.ket = max_abs(g);
    r.ket_physical = space.physical_max(g);
    r.normalization = std::abs((vac.bra * vac.ket)(0) - 1.0);
    return r;
}

}  // namespace netfd
