#include "netfd/kernels.hpp"

#include <cstdlib>
#include <string>

namespace netfd::kernels {

const char* variant_name(Variant v) { return v == Variant::avx2 ? "avx2" : "scalar"; }

void matvec_scalar(const cd* A, int m, int n, const cd* X, int batch, cd* Y) {
    const double* a = reinterpret_cast<const double*>(A);
    for (int b = 0; b < batch; ++b) {
        const double* x = reinterpret_cast<const double*>(X + std::size_t(b) * n);
        double* y = reinterpret_cast<double*>(Y + std::size_t(b) * m);
        for (int i = 0; i < m; ++i) {
            // same split as the vector kernel: real-part products and swapped products summed apart
            double rr = 0.0, ri = 0.0, sr = 0.0, si = 0.0;
            for (int k = 0; k < n; ++k) {
                const double* aik = a + 2 * (std::size_t(k) * m + i);
                rr += aik[0] * x[2 * k];
                ri += aik[1] * x[2 * k];
                sr += aik[1] * x[2 * k + 1];
                si += aik[0] * x[2 * k + 1];
            }
            y[2 * i] = rr - sr;
            y[2 * i + 1] = ri + si;
        }
    }
}

#ifndef NETFD_HAVE_AVX2_TU
void matvec_avx2(const cd*, int, int, const cd*, int, cd*) {
    throw GuardViolation("kernels: built without the avx2 variant");
}
#endif

bool avx2_available() {
#if defined(NETFD_HAVE_AVX2_TU) && (defined(__x86_64__) || defined(__i386__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Variant select_variant() {
    const char* env = std::getenv("NETFD_KERNEL");
    std::string want = env ? env : "auto";
    if (want.empty() || want == "auto") return avx2_available() ? Variant::avx2 : Variant::scalar;
    if (want == "scalar") return Variant::scalar;
    if (want == "avx2") {
        if (!avx2_available()) throw GuardViolation("NETFD_KERNEL=avx2 but the CPU lacks avx2/fma");
        return Variant::avx2;
    }
    throw std::invalid_argument("NETFD_KERNEL: unknown variant '" + want + "'");
}

Variant active_variant() {
    static const Variant v = select_variant();
    return v;
}

MatvecFn implementation(Variant v) { return v == Variant::avx2 ? &matvec_avx2 : &matvec_scalar; }

void batched_matvec(const Mat& A, const Mat& X, Mat& Y) { batched_matvec(active_variant(), A, X, Y); }

void batched_matvec(Variant v, const Mat& A, const Mat& X, Mat& Y) {
    if (A.cols() != X.rows()) throw std::invalid_argument("batched_matvec: shape mismatch");
    Y.resize(A.rows(), X.cols());
    if (A.rows() == 0 || X.cols() == 0) return;
    if (A.cols() == 0) {
        Y.setZero();
        return;
    }
    implementation(v)(A.data(), int(A.rows()), int(A.cols()), X.data(), int(X.cols()), Y.data());
}

}  // namespace netfd::kernels
