// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "ncofdm/analysis.hpp"
#include "ncofdm/waveform.hpp"

namespace ncofdm {

struct InsufficientDataError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct PsdEstimate {
    RealVector freqs_hz;
    RealVector values_db;      // relative to the in-band mean
    double inband_mean = 0.0;  // linear level the dB values are referred to
    double band_edge_hz = 0.0;
    std::string tag;
    int segments = 0;  // Welch segments, or realizations for analytic curves
};

struct WelchOptions {
    int segment = 2048;
    int overlap = 512;
    double inband_half_width_hz = 0.0;  // averaging band |f| <= this for the dB reference
};

PsdEstimate welch_psd(const ComplexSignal& s, const WelchOptions& opt);

struct MonteCarloSpec {
    int realizations = 256;
    int symbols = 64;  // U: symbols per realization
    std::uint64_t seed = 1;
    int threads = 0;  // 0: NCOFDM_THREADS or 1
};

// How the N >= 2 curve is assembled. Assembled builds it from the transforms
// of y^(N+1), w^(N+1) and the auxiliary signal (and its (N-1)-th derivative);
// Printed uses the closed four-summand form literally, whose third summand
// lacks the (j2pi)^n factor of the auxiliary derivative for n >= 1.
enum class HigherOrderForm { Assembled, Printed };

// Occupied band: from the lowest to the highest subcarrier, half a bin of
// margin on each side.
double band_edge_hz(const SystemConfig& cfg);

// Symmetric grid [-(edge + 3B), edge + 3B], B the occupied bandwidth; an even
// point count keeps f = 0 off the grid.
RealVector default_psd_grid(const SystemConfig& cfg, int points = 2048);

// Each symbol contributes u(f)^T x_i + v(f)^T x_{i-1} to the sum inside the
// PSD limit; u and v are K x F.
struct PsdKernel {
    ComplexMatrix u;
    ComplexMatrix v;
    RealVector freqs_hz;
    double symbol_period = 0.0;  // T in samples
    double sample_rate_hz = 0.0;
    double inband_half_width_hz = 0.0;
    int N = 0;
};

PsdKernel psd_kernel(const RealVector& fgrid_hz, const SystemConfig& cfg, const SmootherContext& ctx,
                     HigherOrderForm form = HigherOrderForm::Assembled);

// Linear PSD: Monte-Carlo over data realizations with U symbols each.
RealVector psd_monte_carlo(const PsdKernel& k, const SystemConfig& cfg, const MonteCarloSpec& mc);

// Linear PSD in the U -> infinity limit for unit-power i.i.d. data:
// ||u + e^{-j2pi f T} v||^2 / T.
RealVector psd_expected(const PsdKernel& k);

PsdEstimate analytic_psd_case0(const RealVector& fgrid_hz, const SystemConfig& cfg,
                               const SmootherContext& ctx, const MonteCarloSpec& mc);
PsdEstimate analytic_psd_case1(const RealVector& fgrid_hz, const SystemConfig& cfg,
                               const SmootherContext& ctx, const MonteCarloSpec& mc);
PsdEstimate analytic_psd_caseN(const RealVector& fgrid_hz, const SystemConfig& cfg,
                               const SmootherContext& ctx, const MonteCarloSpec& mc,
                               HigherOrderForm form = HigherOrderForm::Assembled);

// Dispatches on cfg.N.
PsdEstimate analytic_psd(const RealVector& fgrid_hz, const SystemConfig& cfg, const SmootherContext& ctx,
                         const MonteCarloSpec& mc);

// Linear values -> PsdEstimate normalized to the mean over |f| <= half width.
PsdEstimate to_estimate(const RealVector& fgrid_hz, const RealVector& linear, double inband_half_width_hz,
                        std::string tag);

PsdEstimate to_estimate_referenced(const RealVector& fgrid_hz, const RealVector& linear, double reference,
                                   std::string tag);

// Mean of the U -> infinity analytic PSD over the occupied band; the 0 dB
// reference of every analytic curve, whatever grid it is evaluated on.
double analytic_inband_level(const SystemConfig& cfg, const SmootherContext& ctx,
                             HigherOrderForm form = HigherOrderForm::Assembled);

// Integral of the Blackman taper's p-th derivative against e^{j2pi x tau/T_L}
// over [0, T_L], divided by e^{j pi x}: the bracket of the smoothing-term
// transforms, written as five shifted sincs.
cplx blackman_bracket(int p, double x, double TL);

// Coefficients of the auxiliary signal w~ = sum_n b~_n f^(n) on
// [-Mcp + T_L, M], chosen so that its derivatives 0..N-2 match w^(2..N) at
// -Mcp + T_L and vanish at M (least squares for N >= 3).
struct AuxiliarySmoother {
    ComplexMatrix D;   // (N-1) x (N+1): w^(2..N)(-Mcp+T_L) from b
    ComplexMatrix Wq;  // N x (N-1): (Q1^H Q1 + Q2^H Q2)^{-1} Q2^H
    double condition = 0.0;
};

AuxiliarySmoother build_auxiliary(const SystemConfig& cfg);

struct AuxiliaryResidual {
    double start = 0.0;  // at -Mcp + T_L, scale-relative
    double end = 0.0;    // at M
};

AuxiliaryResidual auxiliary_boundary_residual(const ComplexVector& x_prev, const ComplexVector& x_cur,
                                              const SmootherContext& ctx, const SystemConfig& cfg);

// Random 16-QAM (cfg.qam_order) stream of `symbols` smoothed symbols.
ComplexSignal simulated_stream(const SystemConfig& cfg, const SmootherContext& ctx, int symbols,
                               std::mt19937_64& rng);

enum class PsdEvaluation { MonteCarlo, Expected };

// Analytic PSD as a Welch estimator with `segment`-sample Hann segments would
// report it: evaluated `over` points per Welch bin, convolved with the
// squared Hann transform and sampled at the Welch bins |b| <= max_bin.
PsdEstimate analytic_psd_welch_view(const SystemConfig& cfg, const SmootherContext& ctx, const MonteCarloSpec& mc,
                                    PsdEvaluation how, int segment, int max_bin, int over = 8);

// Log-spaced frequencies edge + B*[lo, hi] with B the occupied bandwidth.
RealVector far_field_grid(const SystemConfig& cfg, double lo, double hi, int points);

// OLS slope of dB value against log10(f - band edge) over f in [f_lo, f_hi].
double fit_slope(const PsdEstimate& psd, double f_lo, double f_hi);

}  // namespace ncofdm
