#include <gtest/gtest.h>

#include <cstdlib>
#include <random>

#include "netfd/kernels.hpp"

using namespace netfd;
using namespace netfd::kernels;

namespace {

Mat random_mat(int r, int c, std::mt19937_64& g) {
    std::normal_distribution<double> d;
    Mat m(r, c);
    for (int j = 0; j < c; ++j)
        for (int i = 0; i < r; ++i) m(i, j) = cd(d(g), d(g));
    return m;
}

// Summation-order bound: every entry is n products accumulated in a different order.
double bound(const Mat& A, const Mat& X) {
    return 8.0 * double(A.cols() + 1) * 2.2e-16 * (A.cwiseAbs() * X.cwiseAbs()).maxCoeff();
}

struct EnvGuard {
    std::string old;
    bool had;
    EnvGuard() : had(std::getenv("NETFD_KERNEL") != nullptr) {
        if (had) old = std::getenv("NETFD_KERNEL");
    }
    ~EnvGuard() {
        if (had)
            setenv("NETFD_KERNEL", old.c_str(), 1);
        else
            unsetenv("NETFD_KERNEL");
    }
};

}  // namespace

TEST(Kernels, ScalarMatchesEigen) {
    std::mt19937_64 g(3);
    for (int m : {1, 2, 3, 4, 5, 7, 16, 33})
        for (int n : {1, 2, 5, 16}) {
            Mat A = random_mat(m, n, g), X = random_mat(n, 5, g), Y;
            batched_matvec(Variant::scalar, A, X, Y);
            EXPECT_LE(max_abs(Mat(Y - A * X)), bound(A, X)) << m << "x" << n;
        }
}

TEST(Kernels, Avx2MatchesScalar) {
    if (!avx2_available()) GTEST_SKIP() << "no avx2/fma on this CPU";
    std::mt19937_64 g(5);
    // row counts cover the 4-, 2- and 1-complex tails
    for (int m : {1, 2, 3, 4, 5, 6, 7, 8, 9, 31, 64})
        for (int n : {1, 3, 4, 17}) {
            for (int batch : {1, 2, 7}) {
                Mat A = random_mat(m, n, g), X = random_mat(n, batch, g), Ys, Yv;
                batched_matvec(Variant::scalar, A, X, Ys);
                batched_matvec(Variant::avx2, A, X, Yv);
                EXPECT_LE(max_abs(Mat(Yv - Ys)), bound(A, X)) << m << "x" << n << " batch " << batch;
            }
        }
}

TEST(Kernels, ExactOnIntegerData) {
    // small integers: every partial sum is exact, so the variants agree bitwise
    std::mt19937_64 g(9);
    std::uniform_int_distribution<int> d(-4, 4);
    Mat A(6, 5), X(5, 3);
    for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 6; ++i) A(i, j) = cd(d(g), d(g));
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 5; ++i) X(i, j) = cd(d(g), d(g));
    Mat ref = A * X, Ys;
    batched_matvec(Variant::scalar, A, X, Ys);
    EXPECT_EQ(max_abs(Mat(Ys - ref)), 0.0);
    if (avx2_available()) {
        Mat Yv;
        batched_matvec(Variant::avx2, A, X, Yv);
        EXPECT_EQ(max_abs(Mat(Yv - ref)), 0.0);
    }
}

TEST(Kernels, EmptyShapes) {
    Mat A(3, 0), X(0, 2), Y;
    batched_matvec(Variant::scalar, A, X, Y);
    EXPECT_EQ(Y.rows(), 3);
    EXPECT_EQ(max_abs(Y), 0.0);
    Mat B(2, 2);
    EXPECT_THROW(batched_matvec(Variant::scalar, B, Mat(3, 1), Y), std::invalid_argument);
}

TEST(Kernels, EnvironmentOverride) {
    EnvGuard keep;
    setenv("NETFD_KERNEL", "scalar", 1);
    EXPECT_EQ(select_variant(), Variant::scalar);
    setenv("NETFD_KERNEL", "auto", 1);
    EXPECT_EQ(select_variant(), avx2_available() ? Variant::avx2 : Variant::scalar);
    unsetenv("NETFD_KERNEL");
    EXPECT_EQ(select_variant(), avx2_available() ? Variant::avx2 : Variant::scalar);
    setenv("NETFD_KERNEL", "neon", 1);
    EXPECT_THROW(select_variant(), std::invalid_argument);
    setenv("NETFD_KERNEL", "avx2", 1);
    if (avx2_available())
        EXPECT_EQ(select_variant(), Variant::avx2);
    else
        EXPECT_THROW(select_variant(), GuardViolation);
}
