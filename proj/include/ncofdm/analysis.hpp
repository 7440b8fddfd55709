// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <vector>

#include "ncofdm/channel.hpp"
#include "ncofdm/waveform.hpp"

namespace ncofdm {

// ---- perfect synchronization ---------------------------------------------------

// theta_l = round(tau_l / T_samp) + L - Mcp, clipped to [0, L]: the number of
// smooth-signal samples a path pushes into the DFT window.
std::vector<int> tail_lengths(const ChannelProfile& profile, const SystemConfig& cfg);

// sigma^2_{w,k} per subcarrier: the quadratic form F_k U Q_f [A B][A B]^H Q_f^H U^H F_k^H.
// The SINR model counts 2 sigma^2_{w,k} |H|^2 as interference.
RealVector smooth_interference_power(const SmootherContext& ctx, const ChannelProfile& profile,
                                     const SystemConfig& cfg);

// Sample mean of |F_k U Q_f b|^2 over random data pairs (unit-gain tails, the
// same geometry as the quadratic form).
RealVector smooth_interference_monte_carlo(const SmootherContext& ctx, const ChannelProfile& profile,
                                           const SystemConfig& cfg, int trials, std::mt19937_64& rng);

struct DegenerateInputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// gamma = |H|^2 / (2 sigma_w^2 |H|^2 + sigma_n^2 / M)
double instantaneous_sinr(double H_abs2, double sigma_w_sq, double noise_var, int M);

// E over alpha ~ Exp(mean_alpha) of the instantaneous SINR, by quadrature.
double mean_sinr(double sigma_w_sq, double noise_var, int M, double mean_alpha = 1.0);
// (1/K) sum_k of mean_sinr over the per-subcarrier powers.
double average_sinr(const RealVector& sigma_w_sq, double noise_var, int M, double mean_alpha = 1.0);

// Simulated counterpart of average_sinr: smoothed streams through the tapped
// delay line, one channel draw per block of `block` symbols, AWGN of variance
// noise_var per sample and the plain DFT receiver. SINR per bin is |H|^2 over
// the residual power of R - H x within the block, averaged over bins and
// blocks.
struct PerfectSyncMonteCarlo {
    double mean_linear = 0.0;
    double mean_db = 0.0;
    int blocks = 0;
    int symbols = 0;
};
PerfectSyncMonteCarlo sinr_perfect_sync_monte_carlo(const SmootherContext& ctx, const ChannelProfile& profile,
                                                    const SystemConfig& cfg, double noise_var, int symbols,
                                                    int block, std::uint64_t seed, int threads = 0);

// Same chain with ZF equalization by the true channel and Gray demapping.
struct BerMonteCarlo {
    double ber = 0.0;
    long long bit_errors = 0;
    long long bits = 0;
};
BerMonteCarlo ber_monte_carlo(const SmootherContext& ctx, const ChannelProfile& profile, const SystemConfig& cfg,
                              double noise_var, int symbols, int block, std::uint64_t seed, int threads = 0);

// Per-subcarrier noise variance sigma_n^2 for a per-bit SNR in dB: the
// per-subcarrier SNR is mean_alpha M / sigma_n^2 = log2(J) Eb/N0.
double noise_var_for_ebn0(double ebn0_db, const SystemConfig& cfg, double mean_alpha = 1.0);

// ---- BER -----------------------------------------------------------------------------

struct BerSeriesParams {
    int J = 16;
    double sigma_w_sq = 0.0;
    double sigma_n_sq = 1.0;
    int M = 2048;
    double mean_alpha = 1.0;
    // Offset of the upper limit below 1/(2 sigma_w^2), relative: sigma^- =
    // (1 - epsilon) / (2 sigma_w^2). Zero selects lambda / 20 with lambda =
    // sigma_n^2 / (M mean_alpha 2 sigma_w^2).
    double epsilon = 0.0;
    int v1_max = 4000;
    int v2_max = 4000;
    double tail_tol = 1e-10;
    // Give up when the largest series term exceeds the result by this factor.
    double max_cancellation = 1e12;
    // Give up when the propagated rounding estimate exceeds this share of the result.
    double max_relative_error = 1e-3;

    double resolved_epsilon() const;
    double sigma_minus() const;
};

// Per-level weights and arguments of the square-QAM conditional BER:
// p_b(E|gamma) = sum_i weight_i Q(scale_i sqrt(3 gamma / (J - 1))).
struct QamBerTerm {
    double weight;
    int odd;  // 2 u2 + 1
};
std::vector<QamBerTerm> qam_ber_terms(int J);
double conditional_ber(double gamma, int J);

// Density of gamma when alpha is exponential; zero outside [0, 1/(2 sigma_w^2)).
double sinr_pdf(double gamma, const BerSeriesParams& p);

struct BerSeriesResult {
    double ber = 0.0;
    double epsilon = 0.0;
    int v1_terms = 0;
    int v2_terms_max = 0;
    double cancellation = 0.0;  // largest |term| / |result| seen
    double error_estimate = 0.0;  // absolute, from rounding through both series
};

// Double series of the closed form, sigma_w^2 = 0 handled by its limit.
// Throws ConvergenceError when the series cannot be summed reliably.
BerSeriesResult ber_closed_form_detail(const BerSeriesParams& p);
double ber_closed_form(const BerSeriesParams& p);

// Adaptive quadrature of p_b(E|gamma) p_gamma(gamma) over the support.
double ber_numeric_quadrature(const BerSeriesParams& p);

// Subcarrier average of the closed form (or the quadrature).
double average_ber(const RealVector& sigma_w_sq, BerSeriesParams p, bool closed_form);

// ---- imperfect synchronization ----------------------------------------------------

struct SinrCaseInputs {
    SystemConfig cfg;
    const SmootherContext* ctx = nullptr;
    ChannelProfile profile;
    double sto_samples = 0.0;  // delta_1 in samples (>= 0)
    double cfo = 0.0;          // delta_2 normalized to the subcarrier spacing
    double noise_var = 0.0;    // sigma_n^2
    // Integration grid: oversample samples per T_samp.
    int oversample = 8;
};

struct CaseMismatchError : std::domain_error {
    using std::domain_error::domain_error;
};

struct CaseSinr {
    double gamma = 0.0;
    double interference = 0.0;  // I_1, I_2 or I_3 in sample units
    int L1 = 0;
    int L2 = 0;
};

int count_taps_within(const ChannelProfile& profile, const SystemConfig& cfg, double delta1);
int count_taps_beyond(const ChannelProfile& profile, const SystemConfig& cfg, double delta1);

CaseSinr sinr_case1(const SinrCaseInputs& in);
CaseSinr sinr_case2(const SinrCaseInputs& in);
CaseSinr sinr_case3(const SinrCaseInputs& in);

enum class SyncCase { LateWindow, EarlyWindow, EarlyWindowIsi };
CaseSinr sinr_case(const SinrCaseInputs& in, SyncCase which);

// Time-domain chain with the matching offsets: symbols i-1, i, i+1 with
// smoothing, a per-symbol CFO phase (local time from the CP start), a
// multipath channel held fixed over the three symbols and AWGN. The
// reference is the channel applied to the periodic extension of symbol i.
struct CaseMonteCarlo {
    double gamma = 0.0;
    double signal = 0.0;        // mean window energy of the reference
    double interference = 0.0;  // mean window energy of received - reference, noise included
    int trials = 0;
};
CaseMonteCarlo sinr_case_monte_carlo(const SinrCaseInputs& in, SyncCase which, int trials,
                                     std::uint64_t seed);

// ---- Eb/N0 ----------------------------------------------------------------------------

// Mean smooth-signal energy per symbol, sum C_{n nbar} int f~_n^* f~_nbar,
// integrated on a grid of `oversample` points per sample.
double smooth_energy(const SmootherContext& ctx, const SystemConfig& cfg, int oversample);

// 10log10(K Jbar / log2 J) - 10log10(sigma_n^2 + E_w / T)
double ebn0_db(double noise_var, double extra_power, const SystemConfig& cfg);
double ebn0_low_interference(double noise_var, const SmootherContext& ctx, const SystemConfig& cfg);
// sigma_n^2 that puts plain OFDM at the given Eb/N0.
double noise_var_for_reference(double ebn0_ref_db, const SystemConfig& cfg);
// Mean ||xbar - x||^2 of the least-norm baseline, by Monte-Carlo over a chain of symbols.
double baseline_distortion_power(const SystemConfig& cfg, int symbols, std::mt19937_64& rng);

// ---- complexity -------------------------------------------------------------------

enum class Scheme { LowInterference, BaselineProjection };

// Real multiplications per transmitted symbol, counted on the running code.
long long complexity_count(Scheme scheme, const SystemConfig& cfg);
long long complexity_formula_low_interference(const SystemConfig& cfg);

}  // namespace ncofdm
