// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ncofdm/numerics.hpp"

namespace ncofdm {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class WindowKind { Blackman, Hanning, Triangular };
std::string to_string(WindowKind w);
WindowKind window_from_string(const std::string& s);

// ProductRule differentiates the windowed basis exactly (Leibniz rule over
// f and g). Hankel fills P_f[i][j] with f^(i+j)(-Mcp) g(-Mcp), which is
// symmetric but drops the window-derivative terms.
enum class PfLayout { ProductRule, Hankel };
std::string to_string(PfLayout p);
PfLayout pf_layout_from_string(const std::string& s);

struct SystemConfig {
    int K = 256;
    std::vector<int> subcarriers;  // empty: K indices centred on DC, DC skipped
    int M = 2048;
    int Mcp = 144;
    int L = 144;
    int N = 2;
    int qam_order = 16;
    int oversample = 8;
    int Ms = 64;
    WindowKind window = WindowKind::Blackman;
    PfLayout pf_layout = PfLayout::ProductRule;
    double subcarrier_spacing_hz = 15000.0;

    // Throws ConfigError on any violated invariant.
    void validate() const;

    std::vector<int> subcarrier_set() const;
    double phi() const { return -2.0 * kPi * Mcp / M; }
    int symbol_length() const { return M + Mcp; }
    double TL() const { return L - 1; }
    double sample_rate_hz() const { return subcarrier_spacing_hz * M; }
    int bits_per_symbol() const;
};

std::vector<int> centered_subcarriers(int K);

struct ComplexSignal {
    ComplexVector samples;
    double sample_interval = 1.0;  // seconds per sample
};

// ---- QAM ------------------------------------------------------------------

// Gray-labelled square QAM with unit mean power. Bits are 0/1 bytes, MSB first
// within each symbol; the first half of the label picks the in-phase level.
ComplexVector qam_map(const std::vector<std::uint8_t>& bits, int J);
std::vector<std::uint8_t> qam_demap(const ComplexVector& symbols, int J);
ComplexVector qam_constellation(int J);  // point i carries label i

std::vector<std::uint8_t> random_bits(std::size_t n, std::mt19937_64& rng);
ComplexVector random_qam(int K, int J, std::mt19937_64& rng);

// ---- OFDM symbols and basis ----------------------------------------------

// M + Mcp samples, CP first.
ComplexVector ofdm_modulate(const ComplexVector& x, const SystemConfig& cfg);

// n-th analytic derivative of the unsmoothed symbol at sample instant t
// (t measured from the start of the symbol body).
cplx symbol_derivative(const ComplexVector& x, const SystemConfig& cfg, int n, double t);

// Window on the smooth-signal support: tau = m + Mcp in [0, T_L], g(0) = 1,
// g(T_L) = 0. order selects the analytic derivative.
double taper(const SystemConfig& cfg, double tau, int order = 0);

// f^(n)(t) = sum_r (j2pi k_r/M)^n e^{j2pi k_r (t + Mcp)/M}
cplx basis_exponential(const SystemConfig& cfg, int n, double t);

// d-th analytic derivative of f~_n(t) = f^(n)(t) g(t) on the support.
cplx basis_derivative(const SystemConfig& cfg, int n, int d, double t);

// f~_n sampled at m = -Mcp ... -Mcp+L-1.
ComplexVector basis_signal(int n, const SystemConfig& cfg);

// ---- smoother ----------------------------------------------------------------

struct SmootherContext {
    ComplexMatrix Pf;
    ComplexMatrix P1;
    ComplexMatrix P2;
    ComplexVector Phi;
    ComplexMatrix Qf;
    ComplexMatrix A;
    ComplexMatrix B;
    double cond_Pf = 0.0;
};

SmootherContext build_smoother(const SystemConfig& cfg);

// Counts real multiplications; one complex multiply adds four.
struct MultiplyCounter {
    long long real_mults = 0;
};

ComplexVector smoother_coefficients(const ComplexVector& x_prev, const ComplexVector& x_cur,
                                    const SmootherContext& ctx,
                                    MultiplyCounter* counter = nullptr);
ComplexVector smooth_signal(const ComplexVector& x_prev, const ComplexVector& x_cur,
                            const SmootherContext& ctx, const SystemConfig& cfg,
                            MultiplyCounter* counter = nullptr);

// Ms symbols of M+Mcp samples followed by the closing L-sample smooth block.
ComplexVector assemble_stream(const std::vector<ComplexVector>& data, const SmootherContext& ctx,
                              const SystemConfig& cfg);

// Largest scale-relative mismatch over n = 0..N between the end of the
// previous symbol and the start of the current smoothed one. Derivatives are
// analytic; the scale of order n is (2pi/M)^n max|k|^n K.
double boundary_residual(const ComplexVector& x_prev, const ComplexVector& x_cur,
                         const SmootherContext& ctx, const SystemConfig& cfg);

// Same check for two plain OFDM symbols (used for the precoded baseline).
double plain_boundary_residual(const ComplexVector& x_prev, const ComplexVector& x_cur,
                               const SystemConfig& cfg);

// Least-norm frequency-domain precoder: the closest x to x_cur whose symbol
// start matches the end of x_prev in derivatives 0..N. Stand-in comparison
// baseline, not the published N-continuous precoder.
struct BaselinePrecoder {
    explicit BaselinePrecoder(const SystemConfig& cfg);
    ComplexVector apply(const ComplexVector& x_prev, const ComplexVector& x_cur,
                        MultiplyCounter* counter = nullptr) const;

    ComplexMatrix P1;
    ComplexMatrix P2;
    ComplexMatrix projector;  // I - P2^H (P2 P2^H)^{-1} P2
    ComplexMatrix coupling;   // P2^H (P2 P2^H)^{-1} P1
    double condition = 0.0;
};

ComplexVector baseline_least_norm_precoder(const ComplexVector& x_prev, const ComplexVector& x_cur,
                                           const SystemConfig& cfg);

}  // namespace ncofdm
