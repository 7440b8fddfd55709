// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ncofdm/channel.hpp"
#include "ncofdm/waveform.hpp"

namespace ncofdm {

struct CorrelationInputs {
    SystemConfig cfg;
    const SmootherContext* ctx = nullptr;
    ChannelProfile profile;
    double sto_samples = 0.0;  // delta_1
    double cfo = 0.0;          // delta_2, normalized to the subcarrier spacing
};

// (1/K) E{ r(t) r*(t + Delta) } for t on the smoothed head [-Mcp, -Mcp + T_L]
// and t + Delta on [-Mcp + T_L, M]; times in samples. Throws DomainError
// outside that geometry.
cplx analytic_correlation(double t, double delta, const CorrelationInputs& in);

// Delta = M, where the first term collapses to the tap power sum.
cplx analytic_correlation_ts(double t, const CorrelationInputs& in);

// Sample average of (1/K) r[t] r*[t + M] over independent data and Rayleigh
// draws, on the transmitted stream passed through the tapped delay line.
// Samples whose delayed copies reach back into the previous symbol are
// valid input; the caller decides which t the analytic form covers.
std::vector<cplx> empirical_correlation(const std::vector<int>& t_samples, const CorrelationInputs& in,
                                        int realizations, std::uint64_t seed, int threads = 0);

// Share of the smooth signal's energy that falls inside the body [0, M).
double smooth_power_ratio_in_body(const SmootherContext& ctx, const SystemConfig& cfg, int trials,
                                  std::mt19937_64& rng);

// argmax over d in [0, M + Mcp) of |sum_{m < Mcp} r[d+m] r*[d+m+M]|.
int cp_sto_estimate(const ComplexSignal& rx, const SystemConfig& cfg);

// argmax over d in [0, M + Mcp) of |sum_{m < M} r[d+Mcp+m] c*[m]| with c the
// known M-sample body of the training symbol. Returns the CP start.
int training_sto_estimate(const ComplexSignal& rx, const ComplexVector& training_body, const SystemConfig& cfg);

enum class StoEstimator { CyclicPrefix, Training };
std::string to_string(StoEstimator e);

struct StoExperiment {
    SystemConfig cfg;
    bool smoothed = true;  // false: plain CP-OFDM
    ChannelProfile profile = single_tap_profile();
    StoEstimator estimator = StoEstimator::CyclicPrefix;
    int offset = 30;             // true CP start inside the observation window
    double cfo = 111.11 / 15e3;  // normalized
    std::vector<double> ebn0_db{0, 5, 10, 15, 20, 25, 30};
    int trials = 1000;
    std::uint64_t seed = 1;
    int threads = 0;
    bool noiseless = false;
};

struct StoRow {
    double ebn0_db = 0.0;
    StoEstimator estimator = StoEstimator::CyclicPrefix;
    int N = 0;
    int L = 0;
    bool smoothed = true;
    double mse = 0.0;  // samples^2, timing error taken modulo M + Mcp
    int trials = 0;
};

std::vector<StoRow> sto_error_variance(const StoExperiment& ex);

}  // namespace ncofdm
