#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "netfd/generators.hpp"

namespace netfd {

// dW, dW~, dW°, dW~° and dt. The venus increments are the creation-like partners.
enum class Increment { dW, dWt, dWv, dWtv, dt };
inline constexpr int kIncrements = 5;

const char* increment_name(Increment x);
Increment tilde(Increment x);
inline bool stochastic(Increment x) { return x != Increment::dt; }

struct NoiseParams {
    ModeStatistics stats = ModeStatistics::fermion();
    double kappa = 0.0;
    double n = 0.0;
    double ndot = 0.0;
    double nu = 0.0;
    double diffusion() const { return 2.0 * kappa * (n + nu) + ndot; }
};

using Table5 = Eigen::Matrix<cd, 5, 5>;
using Table4 = Eigen::Matrix<cd, 4, 4>;

// Weak products of increments, coefficients of dt; rows are the left factor.
class WeakProductTable {
public:
    WeakProductTable() : m_(Table5::Zero()) {}
    WeakProductTable(NoiseParams p, const Table5& m) : p_(std::move(p)), m_(m) {}
    cd operator()(Increment l, Increment r) const { return m_(int(l), int(r)); }
    const Table5& matrix() const { return m_; }
    const NoiseParams& params() const { return p_; }

private:
    NoiseParams p_;
    Table5 m_;
};

WeakProductTable ito_table(const NoiseParams& p);

// Random force increments dF, dF^dag, dF~, dF~^dag: weak products per dt.
Table4 force_table(const ModeStatistics& s, double kappa, double n, double ndot);
// Rows: dW, dW~, dW°, dW~° expanded on the force increments.
Table4 wiener_in_force(const ModeStatistics& s, double nu);
// W-table obtained from a force table by the change of basis; the dt row and column are zero.
Table5 table_from_force(const Table4& force, const Table4& expansion);

// Brownian increment tables per dt. Zero temperature on (dB, dB^dag, dt);
// thermal on (dB, dB^dag, dB~, dB~^dag, dt).
Eigen::Matrix3cd zero_temperature_table();
Table5 thermal_brownian_table(const ModeStatistics& s, double nbar);

struct NoiseCorrelations {
    double dFdag_dF = 0.0;  // <dF^dag dF>/dt
    double dF_dFdag = 0.0;  // <dF dF^dag>/dt
    cd dW_dWt;              // <dW dW~>/dt
    double dW_dWv = 0.0;    // <dW dW°>/dt
};
// stationary: n is nbar and ndot is taken as zero.
NoiseCorrelations noise_correlations(const ModeStatistics& s, double kappa, double n, double ndot, double nu,
                                     bool stationary);

struct IncrementTerm {
    Mat coeff;
    std::vector<Increment> mono;  // canonical form: coefficient left, increments right
    int parity = 0;               // fermion grading of the coefficient
};

// Operator-valued polynomial in the increments, truncated at order dt.
class IncrementPolynomial {
public:
    IncrementPolynomial(ModeStatistics s, int dim) : s_(s), dim_(dim) {}

    const ModeStatistics& stats() const { return s_; }
    int dim() const { return dim_; }
    const std::vector<IncrementTerm>& terms() const { return terms_; }

    // coeff * mono; monomials beyond order dt are dropped.
    void add(const Mat& coeff, std::vector<Increment> mono, int parity);
    // mono * coeff, reordered to coeff * mono with the fermion sign.
    void add_left(std::vector<Increment> mono, const Mat& coeff, int parity);

    IncrementPolynomial scaled(cd c) const;
    IncrementPolynomial operator+(const IncrementPolynomial& o) const;
    IncrementPolynomial operator-(const IncrementPolynomial& o) const { return *this + o.scaled(-1.0); }
    IncrementPolynomial operator*(const IncrementPolynomial& o) const;

    // Summed coefficient of a monomial; throws if the summed terms carry different gradings.
    Mat coefficient(const std::vector<Increment>& mono) const;
    // Coefficient of dt alone.
    Mat drift() const { return coefficient({Increment::dt}); }
    // Distinct monomials present.
    std::vector<std::vector<Increment>> monomials() const;
    // Contracts the second-order products, then drops every monomial still carrying an increment.
    IncrementPolynomial random_average(const WeakProductTable& table) const;
    // Replaces each product of two increments by its weak value times dt.
    IncrementPolynomial contract(const WeakProductTable& table) const;
    // Termwise tilde conjugation.
    IncrementPolynomial tilde(const DoubledSpace& space) const;
    // max over monomials of the summed coefficient.
    double max_abs() const;

private:
    ModeStatistics s_;
    int dim_;
    std::vector<IncrementTerm> terms_;
};

// Fermion grading of X under (-1)^{N+N~}; 0 for bosons. Throws if X has no definite grading.
int operator_parity(const DoubledSpace& space, const Mat& X);

// dM = i(a° dW + a~° dW~) - i lambda(dW° a + dW~° a~).
IncrementPolynomial martingale(const DoubledSpace& space, const AlphaOps& alpha, double lambda);

// Coefficient of dt in p p contracted by the table.
Mat weak_square(const IncrementPolynomial& p, const WeakProductTable& table);

// H dt + dM.
IncrementPolynomial ito_generator(const Mat& H, const IncrementPolynomial& dM);

// H_S dt + i(1-lambda) Pi_R dt + dM, checked against H_S dt + i Pi dt + dM + (i/2) dM dM.
IncrementPolynomial stratonovich_generator(const Mat& H_S, const Mat& Pi_R, const Mat& Pi_D,
                                           const IncrementPolynomial& dM, const WeakProductTable& table,
                                           double lambda);

// Increment part of dA for a Heisenberg operator: i[dM, A} with the graded exchange sign.
IncrementPolynomial heisenberg_increment(const DoubledSpace& space, const Mat& A, const IncrementPolynomial& dM);

enum class ProductConvention { ito, stratonovich };

// X o dY = X . dY + dX dY / 2 (and dX o Y alike). Given the product in one convention, returns it in
// the other; dX and dY are the increments entering the quadratic covariation, left factor first.
IncrementPolynomial ito_stratonovich_convert(const IncrementPolynomial& product, const IncrementPolynomial& dX,
                                             const IncrementPolynomial& dY, const WeakProductTable& table,
                                             ProductConvention from);

using SpMat = Eigen::SparseMatrix<cd>;

// Mixed-radix register of bosonic (truncated) or fermionic sites; fermion strings are built in.
class FockRegister {
public:
    FockRegister(std::vector<int> site_dims, bool fermionic, long max_dim = 1L << 20);

    int sites() const { return int(dims_.size()); }
    long dim() const { return dim_; }
    int site_dim(int s) const { return dims_[s]; }
    int digit(long index, int s) const { return int((index / stride_[s]) % dims_[s]); }

    // Local lowering operator without any string.
    SpMat lowering(int s) const;
    // (-1)^{sum_{j<=s} n_j}; identity for bosons.
    SpMat string(int s) const;
    // J_s lowering(s) and its adjoint; canonical (anti)commutation across sites.
    SpMat annihilator(int s) const;
    SpMat creator(int s) const;
    SpMat parity() const { return string(sites() - 1); }
    SpMat identity() const;

private:
    std::vector<int> dims_;
    std::vector<long> stride_;
    long dim_ = 1;
    bool fermionic_;
};

// Finite-mode quantum Brownian motion. Zero temperature: one site per mode, vacuum bra and ket.
// Thermal: sites (c_k, c~_k) per mode; b = c + sigma tau nbar c~°, b^dag = (1 + sigma nbar) c° + tau c~ and tilde
// partners, so the plain vacuum of the c quanta is the thermal pair of vacuums.
// Increments are dB = sqrt(dt) b.
struct DiscreteBrownian {
    ModeStatistics stats;
    int modes = 0;
    std::optional<double> nbar;
    FockRegister reg{{}, false};
    std::vector<SpMat> b, bdag, bt, btdag;
    std::vector<SpMat> J, Jt;
    RowVec bra;
    Vec ket;

    bool thermal() const { return nbar.has_value(); }
    // Every site at level 0 or 1; the truncated boson ladder is exact on these states.
    bool low_excitation(long index) const;
};

// N <= 8 and register dimension <= 2^20, otherwise GuardViolation.
DiscreteBrownian discrete_brownian(int N, const ModeStatistics& s, std::optional<double> nbar = std::nullopt);

// Vacuum second moments of mode k over the increment alphabet, in units of dt.
// Zero temperature: 3x3 on (dB, dB^dag, dt); thermal: 5x5 on (dB, dB^dag, dB~, dB~^dag, dt).
Mat increment_moments(const DiscreteBrownian& w, int k);

struct BrownianChecks {
    double canonical = 0.0;   // max |[b_j, b_k^dag}_{-sigma} - delta| on low-excitation states
    double exchange = 0.0;    // max |[b_j, b_k}_{-sigma}|, thermal tilde partners included
    double reflection = 0.0;  // J^2 = 1, J^dag = J, [J_j, J_k] = 0
    double bra_venus = 0.0;   // |<| (b^dag - tau b~)| in the thermal case
};
BrownianChecks check_brownian(const DiscreteBrownian& w);

}  // namespace netfd
