#pragma once

#include <complex>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace netfd {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RowVec = Eigen::RowVectorXcd;

inline constexpr cd kI{0.0, 1.0};

// Runtime guard breach (dimension limits, jump probabilities, normalization drift).
class GuardViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// [A, B}_{s} = AB - s BA; s = +1 commutator, s = -1 anticommutator.
inline Mat bracket(const Mat& A, const Mat& B, int s) { return A * B - double(s) * (B * A); }

// Product of two operators that are sparse in the Fock basis (ladder and number operators).
inline Mat sparse_product(const Mat& A, const Mat& B) {
    Eigen::SparseMatrix<cd> As = A.sparseView(), Bs = B.sparseView();
    return Mat(As * Bs);
}

inline double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }
inline double max_abs(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }
inline double max_abs(const RowVec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace netfd
