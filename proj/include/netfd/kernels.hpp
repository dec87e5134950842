#pragma once

#include "netfd/types.hpp"

namespace netfd::kernels {

enum class Variant { scalar, avx2 };

const char* variant_name(Variant v);

// Y = A X with A m x n, X n x batch, Y m x batch; contiguous column-major storage.
using MatvecFn = void (*)(const cd* A, int m, int n, const cd* X, int batch, cd* Y);

void matvec_scalar(const cd* A, int m, int n, const cd* X, int batch, cd* Y);
// Requires avx2_available(); compiled with -mavx2 -mfma.
void matvec_avx2(const cd* A, int m, int n, const cd* X, int batch, cd* Y);

bool avx2_available();

// NETFD_KERNEL=scalar|avx2|auto (unset: auto). Unknown names throw std::invalid_argument;
// forcing avx2 on a CPU without it throws GuardViolation.
Variant select_variant();
// select_variant() evaluated once per process.
Variant active_variant();
MatvecFn implementation(Variant v);

// Y = A X through the active variant; Y is resized.
void batched_matvec(const Mat& A, const Mat& X, Mat& Y);
void batched_matvec(Variant v, const Mat& A, const Mat& X, Mat& Y);

}  // namespace netfd::kernels
