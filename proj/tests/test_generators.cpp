#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "netfd/generators.hpp"

using namespace netfd;

namespace {

DoubledSpace fermion() { return build_mode({ModeStatistics::fermion(), 2}); }
DoubledSpace boson(int D) { return build_mode({ModeStatistics::boson(), D}); }

SemiFreeParams params(double omega, double kappa, double n, double ndot, double lambda = 0.0, double nu = 0.0) {
    SemiFreeParams p;
    p.omega = [omega](double) { return omega; };
    p.kappa = [kappa](double) { return kappa; };
    p.n = [n](double) { return n; };
    p.ndot = [ndot](double) { return ndot; };
    p.lambda = lambda;
    p.nu = nu;
    return p;
}

Mat expm(const Mat& X) { return X.exp(); }

}  // namespace

TEST(SemiFree, NoDissipation) {
    for (auto sp : {fermion(), boson(4)}) {
        auto g = build_semi_free(sp, params(1.3, 0.0, 0.2, 0.0), 0.0);
        Mat ref = 1.3 * (sp.number() - sp.number_tilde());
        EXPECT_LE(max_abs(Mat(g.H - ref)), 1e-15);
        EXPECT_LE(max_abs(g.Pi_R), 1e-15);
        EXPECT_LE(max_abs(g.Pi_D), 1e-15);
    }
}

// Independent entrywise assembly of the stationary boson generator on the doubled Fock basis.
TEST(SemiFree, StationaryBosonEntrywise) {
    const double w = 1.0, k = 0.1, nb = 1.0;
    const int D = 6;
    auto sp = boson(D);
    auto g = build_semi_free(sp, SemiFreeParams::stationary(w, k, nb), 0.0);
    Mat ref = Mat::Zero(sp.dim(), sp.dim());
    for (int n = 0; n < D; ++n)
        for (int m = 0; m < D; ++m) {
            int c = sp.index(n, m);
            ref(c, c) = w * (n - m) - kI * (k * (1.0 + 2.0 * nb) * (n + m) + 2.0 * k * nb);
            // 2i kappa (1+nbar) a a~ : |n,m> -> sqrt(n m) |n-1,m-1>
            if (n > 0 && m > 0) ref(sp.index(n - 1, m - 1), c) += 2.0 * kI * k * (1.0 + nb) * std::sqrt(double(n * m));
            // 2i kappa nbar a^dag a~^dag : |n,m> -> sqrt((n+1)(m+1)) |n+1,m+1>
            if (n + 1 < D && m + 1 < D)
                ref(sp.index(n + 1, m + 1), c) += 2.0 * kI * k * nb * std::sqrt(double((n + 1) * (m + 1)));
        }
    EXPECT_LE(sp.physical_max(Mat(g.H - ref)), 1e-13);
    EXPECT_LE(max_abs(Mat(assemble_a_form(sp, w, k, nb, 0.0) - ref)), 1e-13);
}

TEST(SemiFree, FermionTildian) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto sp = fermion();
    for (int i = 0; i < 20; ++i) {
        auto p = params(2.0 * u(rng) - 1.0, u(rng), u(rng), 0.4 * u(rng) - 0.2, u(rng), u(rng) - 0.5);
        auto g = build_semi_free(sp, p, 0.0);
        Mat iH = kI * g.H;
        EXPECT_LE(max_abs(Mat(sp.tilde(iH) - iH)), 1e-12);
    }
}

TEST(SemiFree, RandomDrawInvariants) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto sp : {fermion(), boson(6)}) {
        for (int i = 0; i < 20; ++i) {
            double n = sp.stats().is_fermion() ? u(rng) : 2.0 * u(rng);
            auto p = params(3.0 * u(rng) - 1.5, u(rng), n, 0.4 * u(rng) - 0.2, u(rng), u(rng) - 0.5);
            auto g = build_semi_free(sp, p, 0.0);
            double scale = std::max(1.0, max_abs(g.H));
            EXPECT_LE(max_abs(RowVec(sp.bra() * g.H)), 1e-12 * scale);
            Mat iH = kI * g.H;
            EXPECT_LE(max_abs(Mat(sp.tilde(iH) - iH)), 1e-12 * scale);
            EXPECT_LE(max_abs(Mat(g.H_S - g.H_S.adjoint())), 1e-12);
            EXPECT_LE(max_abs(Mat(g.H - g.H_S - kI * (g.Pi_R + g.Pi_D))), 1e-13 * scale);
            const auto& A = g.alpha;
            Mat c = bracket(A.alpha, A.alpha_venus, sp.sigma()) - sp.identity();
            EXPECT_LE(sp.physical_max(c), 1e-13);
        }
    }
}

TEST(SemiFree, NormalOrderedFormsAgree) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto sp : {fermion(), boson(7)}) {
        for (int i = 0; i < 10; ++i) {
            double w = 2.0 * u(rng) - 1.0, k = u(rng), n = sp.stats().is_fermion() ? u(rng) : 1.5 * u(rng);
            double nd = 0.3 * u(rng) - 0.15;
            auto g = build_semi_free(sp, params(w, k, n, nd, 0.5, 0.0), 0.0);
            Mat Ha = assemble_a_form(sp, w, k, n, nd);
            Mat Hg = assemble_gamma_form(sp, w, k, n, nd);
            EXPECT_LE(sp.physical_max(Mat(Ha - Hg)), 1e-11);
            EXPECT_LE(sp.physical_max(Mat(Ha - g.H)), 1e-11);
        }
    }
}

TEST(SemiFree, RejectsBadParams) {
    auto sp = fermion();
    EXPECT_THROW(build_semi_free(sp, params(1.0, -0.1, 0.2, 0.0), 0.0), std::domain_error);
    EXPECT_THROW(build_semi_free(sp, params(1.0, 0.1, 0.2, 0.0, 1.5), 0.0), std::domain_error);
}

TEST(Alpha, NuZeroIsBareLadder) {
    for (auto sp : {fermion(), boson(4)}) {
        auto A = build_alpha(sp, 1.0, 0.0);
        EXPECT_EQ(max_abs(Mat(A.alpha - sp.a())), 0.0);
        EXPECT_EQ(max_abs(Mat(A.alpha_venus - (sp.adag() - sp.tau() * sp.at()))), 0.0);
        EXPECT_LE(max_abs(RowVec(sp.bra() * A.alpha_venus)), 1e-15);
        EXPECT_LE(max_abs(RowVec(sp.bra() * A.alpha_tilde_venus)), 1e-15);
    }
}

TEST(Alpha, CanonicalPair) {
    auto b = boson(5);
    auto Ab = build_alpha(b, 0.0, 1.0);
    EXPECT_LE(b.physical_max(Mat(bracket(Ab.alpha, Ab.alpha_venus, +1) - b.identity())), 1e-14);
    auto f = fermion();
    auto Af = build_alpha(f, 1.5, 0.5);
    EXPECT_LE(max_abs(Mat(bracket(Af.alpha, Af.alpha_venus, -1) - f.identity())), 1e-14);
    EXPECT_THROW(build_alpha(f, 1.0, 0.5), std::invalid_argument);
    EXPECT_DOUBLE_EQ(mu_from_nu(f.stats(), 0.5), 1.5);
}

TEST(Gamma, BogoliubovMatrix) {
    auto b = boson(4);
    auto g0 = build_gamma(b, 0.0);
    EXPECT_EQ(max_abs(Mat(g0.gamma - b.a())), 0.0);
    EXPECT_EQ(g0.B(0, 0), 1.0);
    EXPECT_EQ(g0.B(0, 1), 0.0);
    EXPECT_EQ(g0.B(1, 0), -1.0);
    EXPECT_EQ(g0.B(1, 1), 1.0);
    auto g1 = build_gamma(b, 1.0);
    Eigen::Matrix2d ref;
    ref << 2.0, -1.0, -1.0, 1.0;
    EXPECT_EQ((g1.B - ref).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_DOUBLE_EQ(g1.B.determinant(), 1.0);
    auto gf = build_gamma(fermion(), 0.3);
    EXPECT_NEAR(gf.B.determinant(), 1.0, 1e-15);
}

TEST(Gamma, AnnihilatesVacuums) {
    auto sp = fermion();
    auto vac = build_ket_vacuum(sp, 0.5);
    auto g = build_gamma(sp, 0.5);
    EXPECT_LE(max_abs(Vec(g.gamma * vac.ket)), 1e-12);
    EXPECT_LE(max_abs(Vec(g.gamma_tilde * vac.ket)), 1e-12);
    EXPECT_LE(max_abs(RowVec(vac.bra * g.gamma_venus)), 1e-12);
    EXPECT_LE(max_abs(RowVec(vac.bra * g.gamma_tilde_venus)), 1e-12);
    EXPECT_THROW(build_gamma(sp, 1.1), std::domain_error);
}

TEST(Stationary, ZeroEigenvalue) {
    auto st_b = build_stationary(boson(6), 1.0, 0.1, 1.0);
    EXPECT_LE(max_abs(RowVec(boson(6).bra() * st_b.gen.H)), 1e-12);
    auto sp = fermion();
    auto st_f = build_stationary(sp, 1.0, 0.1, 0.4);
    EXPECT_LE(max_abs(RowVec(sp.bra() * st_f.gen.H)), 1e-12);
    EXPECT_LE(max_abs(Mat(st_f.H_diag - st_f.gen.H)), 1e-13);
}

TEST(Stationary, ZeroTemperatureForm) {
    for (auto sp : {fermion(), boson(5)}) {
        const double w = 0.8, k = 0.3;
        auto st = build_stationary(sp, w, k, 0.0);
        EXPECT_EQ(max_abs(Mat(st.d.gamma - sp.a())), 0.0);
        cd st_ = double(sp.sigma()) * sp.tau();
        Mat ref = (w - kI * k) * sp.number() - (w + kI * k) * sp.number_tilde() +
                  2.0 * st_ * kI * k * (sp.a() * sp.at());
        EXPECT_LE(sp.physical_max(Mat(st.gen.H - ref)), 1e-14);
    }
}

TEST(Stationary, DiagonalOperatorDecay) {
    const double w = 1.0, k = 0.1, t = 1.0;
    cd factor = std::exp(-0.1) * std::exp(-kI);
    auto sp = fermion();
    for (double nb : {0.0, 0.4, 0.9}) {
        auto st = build_stationary(sp, w, k, nb);
        Mat V = expm(Mat(-kI * st.gen.H * t));
        Mat Vinv = expm(Mat(kI * st.gen.H * t));
        Mat dt = Vinv * st.d.gamma * V;
        EXPECT_LE(max_abs(Mat(dt - factor * st.d.gamma)), 1e-12) << nb;
    }
    // boson: compare on a low block, away from the truncation edge
    auto b = boson(12);
    auto st = build_stationary(b, w, k, 0.5);
    Mat V = expm(Mat(-kI * st.gen.H * t));
    Mat Vinv = expm(Mat(kI * st.gen.H * t));
    Mat dt = Vinv * st.d.gamma * V - factor * st.d.gamma;
    double m = 0.0;
    for (int i = 0; i < b.dim(); ++i)
        for (int j = 0; j < b.dim(); ++j)
            if (i / 12 < 3 && i % 12 < 3 && j / 12 < 3 && j % 12 < 3) m = std::max(m, std::abs(dt(i, j)));
    EXPECT_LE(m, 1e-6);
}

TEST(Stationary, GammaFlowFirstOrder) {
    const double w = 0.7, k = 0.2;
    auto sp = fermion();
    auto st = build_stationary(sp, w, k, 0.3);
    double prev = 0.0;
    for (double h : {1e-2, 5e-3}) {
        Mat V = expm(Mat(-kI * st.gen.H * h));
        Mat Vinv = expm(Mat(kI * st.gen.H * h));
        Mat first = (1.0 - (kI * w + k) * h) * st.d.gamma;
        double err = max_abs(Mat(Vinv * st.d.gamma * V - first));
        if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.1);
        prev = err;
    }
}

TEST(Jump, LiteralSplit) {
    for (auto sp : {fermion(), boson(6)}) {
        double nb = sp.stats().is_fermion() ? 0.3 : 1.0, k = 0.2;
        auto st = build_stationary(sp, 1.0, k, nb);
        auto j = split_jump(sp, st, JumpSplitKind::literal);
        double sg = sp.sigma();
        RowVec lhs = sp.bra() * j.H0;
        RowVec rhs = -2.0 * kI * k * (1.0 + 2.0 * sg * nb) * (sp.bra() * sp.number());
        EXPECT_LE(max_abs(RowVec(lhs - rhs)), 1e-12);
        EXPECT_LE(max_abs(RowVec(sp.bra() * (j.H0 + j.H1))), 1e-12);
    }
}

TEST(Jump, BalancedSplit) {
    for (auto sp : {fermion(), boson(6)}) {
        double nb = sp.stats().is_fermion() ? 0.3 : 1.0, k = 0.2;
        auto st = build_stationary(sp, 1.0, k, nb);
        auto j = split_jump(sp, st);
        EXPECT_EQ(j.kind, JumpSplitKind::balanced);
        EXPECT_LE(max_abs(RowVec(sp.bra() * (j.H0 + j.H1))), 1e-12);
        EXPECT_LE(sp.physical_max(Mat(j.H0 + j.H1 - assemble_a_form(sp, 1.0, k, nb, 0.0))), 1e-13);
        EXPECT_EQ(max_abs(Mat(j.H0 + j.H1 - st.gen.H)), 0.0);
        // jump probability for the thermal state equals the physical total rate
        auto vac = build_ket_vacuum(sp, 0.1);
        cd p = kI * (sp.bra() * (j.H0 * vac.ket))(0) * 0.01;
        EXPECT_NEAR(p.real(), j.dp(0.1, 0.01), 1e-12);
        EXPECT_NEAR(p.imag(), 0.0, 1e-12);
        EXPECT_GE(j.dp(0.0, 0.01), 0.0);
        EXPECT_GE(j.dp(1.0, 0.01), 0.0);
    }
}

TEST(Jump, ZeroTemperatureFermionH1) {
    auto sp = fermion();
    const double k = 0.25;
    auto st = build_stationary(sp, 1.0, k, 0.0);
    auto j = split_jump(sp, st, JumpSplitKind::literal);
    Mat ref = -2.0 * kI * sp.tau() * k * (sp.a() * sp.at());
    EXPECT_LE(max_abs(Mat(j.H1 - ref)), 1e-15);
}
