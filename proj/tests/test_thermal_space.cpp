#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "netfd/thermal_space.hpp"

using namespace netfd;

namespace {

DoubledSpace fermion() { return build_mode({ModeStatistics::fermion(), 2}); }
DoubledSpace boson(int D) { return build_mode({ModeStatistics::boson(), D}); }

Mat random_op(int d, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Mat m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = cd(g(rng), g(rng));
    return m;
}

}  // namespace

TEST(BuildMode, RejectsBadTruncation) {
    EXPECT_THROW(build_mode({ModeStatistics::boson(), 1}), std::invalid_argument);
    EXPECT_THROW(build_mode({ModeStatistics::fermion(), 3}), std::invalid_argument);
    ModeStatistics bad{+1, cd(0.0, 1.0)};
    EXPECT_THROW(build_mode({bad, 3}), std::invalid_argument);
}

TEST(BuildMode, FermionTildeAnticommutator) {
    auto sp = fermion();
    Mat ac = bracket(sp.at(), sp.atdag(), -1);
    EXPECT_EQ(max_abs(Mat(ac - sp.identity())), 0.0);
    EXPECT_EQ(max_abs(Mat(bracket(sp.a(), sp.adag(), -1) - sp.identity())), 0.0);
}

TEST(BuildMode, BosonTopLevelDefect) {
    auto sp = boson(3);
    Mat c = bracket(sp.a(), sp.adag(), +1);
    for (int m = 0; m < 3; ++m) {
        EXPECT_DOUBLE_EQ(c(sp.index(0, m), sp.index(0, m)).real(), 1.0);
        EXPECT_DOUBLE_EQ(c(sp.index(1, m), sp.index(1, m)).real(), 1.0);
        EXPECT_DOUBLE_EQ(c(sp.index(2, m), sp.index(2, m)).real(), -2.0);
    }
    EXPECT_LE(sp.physical_max(Mat(c - sp.identity())), 1e-15);
}

TEST(BuildMode, TildeAndNonTildeBracketsVanish) {
    for (auto sp : {fermion(), boson(4)}) {
        int s = sp.sigma();
        for (const Mat* A : {&sp.a(), &sp.adag()})
            for (const Mat* B : {&sp.at(), &sp.atdag()}) EXPECT_EQ(max_abs(bracket(*A, *B, s)), 0.0);
    }
}

TEST(Tilde, MapsLadderToTildeLadder) {
    for (auto sp : {fermion(), boson(5)}) {
        EXPECT_TRUE((sp.tilde(sp.a()).array() == sp.at().array()).all());
        EXPECT_TRUE((sp.tilde(sp.adag()).array() == sp.atdag().array()).all());
        EXPECT_TRUE((sp.tilde(sp.at()).array() == sp.a().array()).all());
    }
}

TEST(Tilde, Antilinear) {
    std::mt19937_64 rng(7);
    for (auto sp : {fermion(), boson(4)}) {
        cd c(2.0, 3.0);
        Mat A = sp.adag() * sp.a();
        EXPECT_LE(max_abs(Mat(sp.tilde(Mat(c * A)) - std::conj(c) * sp.tilde(A))), 1e-14);
        std::normal_distribution<double> g;
        for (int k = 0; k < 8; ++k) {
            cd c1(g(rng), g(rng)), c2(g(rng), g(rng));
            Mat A1 = random_op(sp.dim(), rng), A2 = random_op(sp.dim(), rng);
            Mat lhs = sp.tilde(Mat(c1 * A1 + c2 * A2));
            Mat rhs = std::conj(c1) * sp.tilde(A1) + std::conj(c2) * sp.tilde(A2);
            EXPECT_LE(max_abs(Mat(lhs - rhs)), 1e-14 * std::max(1.0, max_abs(rhs)));
        }
    }
}

TEST(Tilde, InvolutionBitExact) {
    std::mt19937_64 rng(11);
    for (auto sp : {fermion(), boson(4)}) {
        Mat X = sp.adag() * sp.at();
        EXPECT_TRUE((sp.tilde(sp.tilde(X)).array() == X.array()).all());
        for (int k = 0; k < 16; ++k) {
            Mat R = random_op(sp.dim(), rng);
            EXPECT_TRUE((sp.tilde(sp.tilde(R)).array() == R.array()).all());
        }
        Vec v = random_op(sp.dim(), rng).col(0);
        EXPECT_TRUE((sp.tilde(sp.tilde(v)).array() == v.array()).all());
    }
}

TEST(Tilde, ProductRule) {
    std::mt19937_64 rng(13);
    for (auto sp : {fermion(), boson(4)}) {
        for (int k = 0; k < 16; ++k) {
            Mat A = random_op(sp.dim(), rng), B = random_op(sp.dim(), rng);
            Mat lhs = sp.tilde(Mat(A * B));
            Mat rhs = sp.tilde(A) * sp.tilde(B);
            EXPECT_LE(max_abs(Mat(lhs - rhs)), 1e-13 * std::max(1.0, max_abs(rhs)));
        }
    }
}

TEST(BraVacuum, FermionComponents) {
    auto sp = fermion();
    RowVec bra = build_bra_vacuum(sp);
    // basis (n, m~): 00, 01, 10, 11
    EXPECT_NEAR(std::abs(bra(sp.index(0, 0)) - 1.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(bra(sp.index(1, 1)) - cd(0.0, 1.0)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(bra(sp.index(0, 1))), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(bra(sp.index(1, 0))), 0.0, 1e-12);
}

TEST(BraVacuum, BosonDiagonalOnes) {
    auto sp = boson(3);
    RowVec bra = build_bra_vacuum(sp);
    for (int n = 0; n < 3; ++n)
        for (int m = 0; m < 3; ++m)
            EXPECT_NEAR(std::abs(bra(sp.index(n, m)) - (n == m ? 1.0 : 0.0)), 0.0, 1e-12);
}

TEST(BraVacuum, AnnihilatedByAlphaVenus) {
    for (auto sp : {fermion(), boson(3), boson(8)}) {
        RowVec bra = build_bra_vacuum(sp);
        Mat av = sp.adag() - sp.tau() * sp.at();
        EXPECT_LE(max_abs(RowVec(bra * av)), 1e-12);
        Mat avt = sp.tilde(av);
        EXPECT_LE(max_abs(RowVec(bra * avt)), 1e-12);
        EXPECT_LE(max_abs(RowVec(bra - sp.bra())), 1e-12);
    }
}

TEST(KetVacuum, ZeroOccupationIsBareVacuum) {
    for (auto sp : {fermion(), boson(5)}) {
        auto vac = build_ket_vacuum(sp, 0.0);
        Vec e = Vec::Zero(sp.dim());
        e(sp.index(0, 0)) = 1.0;
        EXPECT_LE(max_abs(Vec(vac.ket - e)), 1e-12);
    }
}

TEST(KetVacuum, FermionThermalClosedForm) {
    auto sp = fermion();
    double beta_eps = 0.7;
    double x = std::exp(-beta_eps);
    double n0 = x / (1.0 + x);
    auto vac = build_ket_vacuum(sp, n0);
    // [1 - i x a^dag a~^dag]|00~> / (1 + x)
    Vec ref = Vec::Zero(4);
    ref(sp.index(0, 0)) = 1.0;
    // a^dag a~^dag |00~> = a^dag |0 1~> = |1 1~> (parity string sees n = 0)
    ref(sp.index(1, 1)) = cd(0.0, -x);
    ref /= 1.0 + x;
    EXPECT_LE(max_abs(Vec(vac.ket - ref)), 1e-12);
    Vec pair = sp.adag() * sp.atdag() * Vec::Unit(4, sp.index(0, 0));
    EXPECT_NEAR(std::abs(pair(sp.index(1, 1)) - 1.0), 0.0, 0.0);
    EXPECT_NEAR(measure_occupation(sp, vac.bra, vac.ket), n0, 1e-12);
}

TEST(KetVacuum, FermionFullOccupation) {
    auto sp = fermion();
    auto vac = build_ket_vacuum(sp, 1.0);
    EXPECT_NEAR(measure_occupation(sp, vac.bra, vac.ket), 1.0, 1e-12);
    EXPECT_THROW(build_ket_vacuum(sp, 1.2), std::domain_error);
    EXPECT_THROW(build_ket_vacuum(sp, -0.1), std::domain_error);
}

TEST(KetVacuum, BosonD12OccupationHalf) {
    auto sp = boson(12);
    auto vac = build_ket_vacuum(sp, 0.5);
    EXPECT_NEAR(measure_occupation(sp, vac.bra, vac.ket), 0.5, 1e-9);
    // geometric coefficients, independent of the null-space solve
    double fu = vac.f_used;
    double z = 0.0;
    for (int k = 0; k < 12; ++k) z += std::pow(fu, k);
    for (int k = 0; k < 12; ++k) EXPECT_NEAR(std::abs(vac.ket(sp.index(k, k)) - std::pow(fu, k) / z), 0.0, 1e-12);
    EXPECT_LE(std::abs(fu - vac.f), 10.0 * vac.tail);
}

TEST(KetVacuum, BosonTailRejected) {
    auto sp = boson(4);
    EXPECT_THROW(build_ket_vacuum(sp, 3.0), std::domain_error);
}

TEST(KetVacuum, OccupationConsistency) {
    auto f = fermion();
    for (double n0 : {0.0, 0.3, 1.0}) {
        auto vac = build_ket_vacuum(f, n0);
        EXPECT_NEAR(measure_occupation(f, vac.bra, vac.ket), n0, 1e-12) << n0;
    }
    for (auto [n0, D, tol] : {std::tuple{0.0, 6, 1e-4}, {0.3, 16, 1e-4}, {1.0, 20, 1e-4}, {3.0, 30, 1e-2}}) {
        auto sp = boson(D);
        auto vac = build_ket_vacuum(sp, n0, tol);
        EXPECT_NEAR(measure_occupation(sp, vac.bra, vac.ket), n0, 1e-9) << n0;
    }
}

TEST(Tsc, ResidualsFermion) {
    auto sp = fermion();
    for (double n0 : {0.0, 0.25, 0.6, 1.0}) {
        auto r = tsc_residuals(sp, build_ket_vacuum(sp, n0));
        EXPECT_LE(r.bra_tilde_dag, 1e-12);
        EXPECT_LE(r.bra_dag, 1e-12);
        EXPECT_LE(r.ket, 1e-12);
        EXPECT_LE(r.normalization, 1e-12);
    }
}

TEST(Tsc, ResidualsBosonBoundedByTail) {
    for (auto [n0, D] : {std::pair{0.5, 12}, {0.3, 10}, {1.0, 24}}) {
        auto sp = boson(D);
        auto vac = build_ket_vacuum(sp, n0);
        auto r = tsc_residuals(sp, vac);
        EXPECT_LE(r.bra_tilde_dag, 1e-12);
        EXPECT_LE(r.bra_dag, 1e-12);
        EXPECT_LE(r.normalization, 1e-12);
        // gamma~ at the nominal occupation: only the calibration shift and the top level survive
        EXPECT_LE(r.ket_physical, 10.0 * vac.tail + 1e-12);
        EXPECT_LE(r.ket, std::sqrt(double(D)) * (1.0 + n0) * (10.0 * vac.tail + std::pow(vac.f_used, D - 1)) + 1e-12);
    }
}
