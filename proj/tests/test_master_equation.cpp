#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "netfd/master_equation.hpp"

using namespace netfd;

namespace {

DoubledSpace fermion() { return build_mode({ModeStatistics::fermion(), 2}); }
DoubledSpace boson(int D) { return build_mode({ModeStatistics::boson(), D}); }

VacuumTrajectory stationary_run(const DoubledSpace& sp, double w, double k, double nb, double n0,
                                const std::vector<double>& grid, EvolveMethod m = EvolveMethod::expm) {
    auto st = build_stationary(sp, w, k, nb);
    auto vac = build_ket_vacuum(sp, n0);
    EvolveOptions opt;
    opt.method = m;
    return evolve_fp(sp, stationary_generator_fn(st.gen.H), vac.ket, grid, opt);
}

}  // namespace

TEST(EvolveFp, FermionRelaxation) {
    auto sp = fermion();
    auto tr = stationary_run(sp, 1.0, 0.1, 0.25, 0.0, uniform_grid(5.0, 0.1));
    EXPECT_NEAR(tr.n.back(), 0.25 * (1.0 - std::exp(-1.0)), 1e-10);
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        EXPECT_NEAR(std::abs(tr.normalization[i] - 1.0), 0.0, 1e-10);
        EXPECT_NEAR(tr.n[i], stationary_occupation(0.0, 0.25, 0.1, tr.times[i]), 1e-10);
    }
}

TEST(EvolveFp, Rk4MatchesExpm) {
    auto sp = fermion();
    auto g = uniform_grid(2.0, 0.25);
    auto a = stationary_run(sp, 1.0, 0.3, 0.4, 0.9, g, EvolveMethod::expm);
    auto b = stationary_run(sp, 1.0, 0.3, 0.4, 0.9, g, EvolveMethod::rk4);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LE(max_abs(Vec(a.kets[i] - b.kets[i])), 1e-8);
}

TEST(EvolveFp, NoDissipationConservesNumber) {
    for (auto sp : {fermion(), boson(8)}) {
        double n0 = 0.4;
        auto tr = stationary_run(sp, 1.7, 0.0, 0.3, n0, uniform_grid(3.0, 0.3));
        for (double n : tr.n) EXPECT_NEAR(n, n0, 1e-12);
        // doubled-space unitarity: H is hermitian without dissipation
        for (const auto& k : tr.kets) EXPECT_NEAR(k.norm(), tr.kets.front().norm(), 1e-12);
    }
}

TEST(EvolveFp, BosonRelaxation) {
    const double kappa = 0.1, nb = 1.0, T = 10.0;
    auto n_ref = [&](double t) { return nb * (1.0 - std::exp(-2.0 * kappa * t)); };
    for (int D : {16, 40}) {
        auto sp = boson(D);
        auto tr = stationary_run(sp, 1.0, kappa, nb, 0.0, uniform_grid(T, 0.5));
        // ⟨θ|N Ĥ has a single entry -2iκn̄D at |D-1,D-1⟩; the error is that flux integrated against
        // the top occupation, bounded by the geometric weight at the largest f along the path.
        double f = n_ref(T) / (1.0 + n_ref(T));
        double flux = 2.0 * kappa * nb * D * T * std::pow(f, D - 1);
        double tol = std::max(1e-8, flux);
        if (D == 40) EXPECT_LE(tol, 1e-8);
        EXPECT_NEAR(tr.n.back(), 1.0 - std::exp(-2.0), tol) << D;
        for (std::size_t i = 0; i < tr.times.size(); ++i) EXPECT_NEAR(tr.n[i], n_ref(tr.times[i]), tol) << D;
    }
}

TEST(EvolveFp, KineticConsistencyRandomFermion) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto sp = fermion();
    for (int i = 0; i < 10; ++i) {
        double w = 2.0 * u(rng) - 1.0, k = 0.05 + u(rng), nb = 0.05 + 0.9 * u(rng), n0 = u(rng);
        auto grid = uniform_grid(3.0, 0.2);
        auto tr = stationary_run(sp, w, k, nb, n0, grid);
        auto bz = solve_boltzmann(stationary_scenario(sp.stats(), w, k, nb, n0, grid));
        for (std::size_t j = 0; j < grid.size(); ++j) EXPECT_NEAR(tr.n[j], bz.n[j], 1e-9);
    }
}

TEST(EvolveFp, TimeDependentGeneratorTracksBoltzmann) {
    auto sp = fermion();
    KineticScenario sc;
    sc.stats = sp.stats();
    sc.omega = [](double t) { return 1.0 + 0.2 * t; };
    sc.kappa = [](double t) { return 0.1 * (1.0 + t); };
    sc.gain = [](double t) { return 0.08 * (1.0 + std::sin(t)); };
    sc.n0 = 0.1;
    sc.grid = uniform_grid(2.0, 0.1);
    auto bz = solve_boltzmann(sc);
    OccupationHistory h(sc, bz);
    auto p = SemiFreeParams::from_history(h);
    auto vac = build_ket_vacuum(sp, sc.n0);
    EvolveOptions opt;
    opt.method = EvolveMethod::rk4;
    opt.max_step_norm = 0.02;
    auto tr = evolve_fp(sp, semi_free_generator_fn(sp, p), vac.ket, sc.grid, opt);
    for (std::size_t j = 0; j < sc.grid.size(); ++j) {
        EXPECT_NEAR(tr.n[j], bz.n[j], 1e-9);
        // instantaneous gamma_t annihilates the evolved ket
        auto g = build_gamma(sp, bz.n[j]);
        EXPECT_LE(max_abs(Vec(g.gamma * tr.kets[j])), 1e-9);
        EXPECT_LE(max_abs(Vec(g.gamma_tilde * tr.kets[j])), 1e-9);
    }
}

TEST(EvolveFp, DriftGuardAborts) {
    auto sp = fermion();
    auto vac = build_ket_vacuum(sp, 0.3);
    Mat bad = sp.number();  // <theta|N != 0, so normalization moves
    EXPECT_THROW(evolve_fp(sp, stationary_generator_fn(bad), vac.ket, uniform_grid(1.0, 0.5)), NormalizationDrift);
    Vec not_norm = 2.0 * vac.ket;
    EXPECT_THROW(evolve_fp(sp, stationary_generator_fn(sp.identity()), not_norm, {0.0, 1.0}), std::invalid_argument);
}

TEST(OrderParameter, Values) {
    auto b = boson(14);
    auto vac = build_ket_vacuum(b, 0.0);
    EXPECT_NEAR(std::abs(order_parameter(b, vac.ket, 0.0)), 0.0, 1e-15);
    double n5 = stationary_occupation(0.0, 1.0, 0.1, 5.0);
    cd op = order_parameter(b, vac.ket, n5);
    EXPECT_NEAR(op.real(), -0.632121, 1e-6);
    EXPECT_NEAR(op.imag(), 0.0, 1e-15);
    EXPECT_NEAR(op.real(), -(1.0 - std::exp(-1.0)), 1e-14);

    auto f = fermion();
    cd st = -kI;
    for (double n0 : {0.0, 0.3, 0.8}) {
        auto v = build_ket_vacuum(f, n0);
        for (double nt : {0.1, 0.5, 0.95}) {
            cd ref = st * (n0 - nt);
            EXPECT_NEAR(std::abs(order_parameter(f, v.ket, nt) - ref), 0.0, 1e-14);
        }
    }
}

TEST(OrderParameter, LongTimeLimit) {
    auto sp = fermion();
    const double n0 = 0.9, nb = 0.2;
    auto tr = stationary_run(sp, 1.0, 0.5, nb, n0, uniform_grid(40.0, 1.0));
    auto vac = build_ket_vacuum(sp, n0);
    cd ref = -kI * (n0 - nb);
    EXPECT_NEAR(std::abs(order_parameter(sp, vac.ket, tr.n.back()) - ref), 0.0, 1e-12);
}

TEST(OrderParameter, CurveMatchesDirect) {
    for (auto sp : {fermion(), boson(10)}) {
        auto vac = build_ket_vacuum(sp, 0.3);
        OrderParameterCurve curve(sp, vac.ket);
        for (double n : {0.0, 0.1, 0.3, 0.75, 1.0}) {
            cd direct = order_parameter(sp, vac.ket, n);
            EXPECT_LE(std::abs(curve(n) - direct), 1e-14 * std::max(1.0, std::abs(direct))) << sp.stats().name();
        }
    }
}

TEST(Condensation, IdentityWhenUnchanged) {
    for (auto sp : {fermion(), boson(8)}) {
        auto vac = build_ket_vacuum(sp, 0.3);
        EXPECT_EQ(max_abs(Vec(condensation_ket(sp, 0.3, 0.3) - vac.ket)), 0.0);
    }
}

TEST(Condensation, FermionSeriesTruncates) {
    auto sp = fermion();
    Mat gv = sp.adag() - sp.tau() * sp.at();
    Mat P = gv * sp.tilde(gv);
    EXPECT_EQ(max_abs(Mat(P * P)), 0.0);
    double n0 = 0.2, nt = 0.6;
    cd c = -kI * (nt - n0);
    Vec ref = (sp.identity() + c * P) * build_ket_vacuum(sp, n0).ket;
    EXPECT_LE(max_abs(Vec(condensation_ket(sp, n0, nt) - ref)), 1e-15);
}

TEST(Condensation, MatchesEvolvedFermionKet) {
    auto sp = fermion();
    auto tr = stationary_run(sp, 1.0, 0.1, 0.25, 0.0, uniform_grid(5.0, 0.5));
    Vec cond = condensation_ket(sp, 0.0, tr.n.back());
    EXPECT_LE(std::abs(ray_overlap(sp.bra(), tr.kets.back(), cond) - 1.0), 1e-9);
    EXPECT_LE(ray_distance(sp.bra(), tr.kets.back(), cond), 1e-9);
}

TEST(Condensation, BosonTruncationBounded) {
    auto sp = boson(20);
    auto tr = stationary_run(sp, 1.0, 0.2, 0.5, 0.1, uniform_grid(3.0, 0.5));
    Vec cond = condensation_ket(sp, 0.1, tr.n.back());
    auto vac = build_ket_vacuum(sp, tr.n.back());
    EXPECT_LE(ray_distance(sp.bra(), tr.kets.back(), cond), 10.0 * vac.tail + 1e-9);
    EXPECT_THROW(condensation_ket(sp, 0.1, 50.0), std::domain_error);
}

TEST(Migration, CentralDifference) {
    auto f = fermion();
    for (double n : {0.2, 0.5}) {
        auto r1 = migration_check(f, n, 1e-3);
        EXPECT_LE(r1.residual, 1e-10);
    }
    auto b = boson(30);
    double prev = 0.0;
    for (double eps : {1e-2, 5e-3}) {
        auto r = migration_check(b, 0.3, eps);
        // second-order convergence until the truncation floor
        if (prev > 0.0) EXPECT_NEAR(prev / r.residual, 4.0, 0.2);
        prev = r.residual;
        EXPECT_LE(r.residual, 1e-3 * r.scale);
    }
}

TEST(GaussianFunctional, ZeroSource) {
    auto sp = boson(12);
    GaussianSource s{{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
    auto r = gaussian_functional_check(sp, 1.0, 0.1, 0.5, s, uniform_grid(1.5, 0.5));
    EXPECT_NEAR(std::abs(r.z_numeric - 1.0), 0.0, 1e-12);
    EXPECT_EQ(r.z_analytic, cd(1.0));
}

TEST(GaussianFunctional, SingleStepSource) {
    auto sp = boson(12);
    GaussianSource s{{cd(1e-3, 0.0), 0.0, 0.0}, {0.0, 0.0, 0.0}};
    auto r = gaussian_functional_check(sp, 1.0, 0.1, 0.5, s, uniform_grid(1.5, 0.5));
    EXPECT_LE(r.z_residual, 1e-6);
    EXPECT_GT(std::abs(r.logz_analytic), 1e-8);
}

TEST(GaussianFunctional, EvenInSource) {
    auto sp = boson(12);
    GaussianSource s{{cd(1e-3, 0.0), cd(0.0, -1e-3)}, {cd(0.0, 1e-3), cd(1e-3, 0.0)}};
    auto r = gaussian_functional_check(sp, 0.8, 0.15, 0.4, s, uniform_grid(1.0, 0.5));
    EXPECT_LE(r.odd_part, 1e-12);
    EXPECT_LE(r.quadratic_residual, 1e-6);
    EXPECT_LE(r.z_residual, 1e-6);
}

TEST(GaussianFunctional, ConvergesWithTruncation) {
    GaussianSource s{{cd(1e-3, 0.0), cd(0.0, 1e-3), 0.0}, {0.0, cd(5e-4, 0.0), cd(-4e-4, 3e-4)}};
    auto r = gaussian_functional_check(boson(22), 1.0, 0.1, 0.5, s, uniform_grid(1.5, 0.5));
    EXPECT_LE(r.quadratic_relative, 1e-7);
}

TEST(GaussianFunctional, RejectsFermion) {
    GaussianSource s{{0.0}, {0.0}};
    EXPECT_THROW(gaussian_functional_check(fermion(), 1.0, 0.1, 0.5, s, {0.0, 1.0}), std::invalid_argument);
    EXPECT_THROW(gaussian_functional_check(boson(12), 1.0, 0.1, 0.5, s, uniform_grid(7.0, 1.0)),
                 std::invalid_argument);
}
