#pragma once

#include <string>
#include <vector>

#include "netfd/types.hpp"

namespace netfd {

// sigma = +1, tau = 1 for bosons; sigma = -1, tau = i for fermions.
struct ModeStatistics {
    int sigma = -1;
    cd tau{0.0, 1.0};

    static ModeStatistics boson() { return {+1, cd{1.0, 0.0}}; }
    static ModeStatistics fermion() { return {-1, cd{0.0, 1.0}}; }
    bool is_fermion() const { return sigma < 0; }
    bool operator==(const ModeStatistics& o) const { return sigma == o.sigma && tau == o.tau; }
    // tau* = sigma tau for both statistics.
    cd tau_conj() const { return std::conj(tau); }
    std::string name() const { return is_fermion() ? "fermion" : "boson"; }
    void validate() const;
};

struct ModeConfig {
    ModeStatistics stats = ModeStatistics::fermion();
    int truncation = 2;
};

// Doubled Fock space |n> (x) |m~>, row-major with n the slow index.
class DoubledSpace {
public:
    explicit DoubledSpace(const ModeConfig& cfg);

    const ModeStatistics& stats() const { return stats_; }
    int sigma() const { return stats_.sigma; }
    cd tau() const { return stats_.tau; }
    int levels() const { return D_; }
    int dim() const { return D_ * D_; }
    int index(int n, int m) const { return n * D_ + m; }

    const Mat& a() const { return a_; }
    const Mat& adag() const { return adag_; }
    const Mat& at() const { return at_; }
    const Mat& atdag() const { return atdag_; }
    const Mat& number() const { return num_; }
    const Mat& number_tilde() const { return numt_; }
    // (-1)^{a^dag a} on the non-tilde factor (identity for bosons).
    const Mat& parity() const { return parity_; }
    // (-1)^{N + N~}, the grading used for fermionic strings.
    const Mat& total_parity() const { return total_parity_; }
    Mat identity() const { return Mat::Identity(dim(), dim()); }
    // Closed-form thermal bra, sum_n tau^n <n, n~|.
    const RowVec& bra() const { return bra_; }

    // Antilinear tilde conjugation: swap factors, conjugate, fermion sign (-1)^{n m}.
    Mat tilde(const Mat& X) const;
    Vec tilde(const Vec& v) const;
    RowVec tilde(const RowVec& v) const;

    // Basis states away from the top Fock level on both factors.
    bool physical(int i) const;
    // max |X_ij| over physical rows and columns.
    double physical_max(const Mat& X) const;
    double physical_max(const RowVec& v) const;
    double physical_max(const Vec& v) const;

private:
    ModeStatistics stats_;
    int D_;
    Mat a_, adag_, at_, atdag_, num_, numt_, parity_, total_parity_;
    RowVec bra_;
    std::vector<int> perm_;
    std::vector<double> sign_;
};

DoubledSpace build_mode(const ModeConfig& cfg);

struct ThermalVacuumPair {
    RowVec bra;
    Vec ket;
    double occupation = 0.0;
    double f = 0.0;        // nominal TSC coefficient n/(1+sigma n)
    double f_used = 0.0;   // coefficient of the truncated geometric ket (boson: calibrated)
    double tail = 0.0;     // f^D/(1-f); 0 for fermions
};

// Left null vector of {a~^dag - tau* a, a^dag - tau a~}, normalized so <theta|00~> = 1.
RowVec build_bra_vacuum(const DoubledSpace& space);

// Ket annihilated by gamma and gamma~ at occupation n0, with <theta|0> = 1.
// Boson kets use the geometric coefficient recalibrated so the truncated occupation equals n0.
ThermalVacuumPair build_ket_vacuum(const DoubledSpace& space, double n0, double tail_tolerance = 1e-4);

// Closed forms <00|exp(tau a~ a) and exp(tau* f a^dag a~^dag)|00>/Z.
RowVec closed_form_bra(const DoubledSpace& space);
Vec closed_form_ket(const DoubledSpace& space, double f);

double occupation_tail(double f, int D);
double tsc_coefficient(const ModeStatistics& s, double n);

cd expectation(const RowVec& bra, const Mat& A, const Vec& ket);
double measure_occupation(const DoubledSpace& space, const RowVec& bra, const Vec& ket);

struct TscResiduals {
    double bra_tilde_dag = 0.0;  // ||<theta|(a~^dag - tau* a)||
    double bra_dag = 0.0;        // ||<theta|(a^dag - tau a~)||
    double ket = 0.0;            // ||(a~ - tau f a^dag)|0>|| with the nominal f
    double ket_physical = 0.0;   // same, restricted to physical components
    double normalization = 0.0;  // |<theta|0> - 1|
};
TscResiduals tsc_residuals(const DoubledSpace& space, const ThermalVacuumPair& vac);

}  // namespace netfd
