// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <string>
#include <vector>

#include "ncofdm/waveform.hpp"

namespace ncofdm {

struct ChannelTap {
    double delay_s = 0.0;
    double power = 1.0;  // linear
};

struct ChannelProfile {
    std::vector<ChannelTap> taps;
    bool normalize = true;

    void validate() const;
    double total_power() const;
    // Tap powers after optional normalization.
    std::vector<double> powers() const;
    // Delays rounded to the nearest sample.
    std::vector<int> delays_in_samples(double sample_interval) const;
};

// 9-tap Extended Vehicular A profile.
ChannelProfile eva_profile(bool normalize = true);
ChannelProfile single_tap_profile(double delay_s = 0.0);

// {"taps":[{"delay_ns":0,"power_db":0},...],"normalize":true}
ChannelProfile profile_from_json(const std::string& text);

struct ChannelRealization {
    Eigen::MatrixXcd gains;  // symbols x taps
};

// Complex Gaussian gains per symbol and tap. With `tie` set, every symbol
// shares the gains of the first one.
ChannelRealization realize(const ChannelProfile& profile, int symbol_count, std::mt19937_64& rng,
                           bool tie = false);

// Tapped delay line with block fading: the copy delayed by d_l uses the gain
// of the symbol the delayed sample came from. The output is longer than the
// input by the largest delay.
ComplexSignal apply_channel(const ComplexSignal& signal, const ChannelRealization& realization,
                            const ChannelProfile& profile, const SystemConfig& cfg);

// Frequency response sum_l h_l e^{-j2pi k d_l / M} on the configured subcarriers.
ComplexVector frequency_response(const Eigen::VectorXcd& gains, const ChannelProfile& profile,
                                 const SystemConfig& cfg);

struct Impairments {
    double sto_s = 0.0;    // receiver window starts this much after the true start
    double cfo_hz = 0.0;
    double noise_var = 0.0;

    double sto_samples(const SystemConfig& cfg) const;
    double cfo_normalized(const SystemConfig& cfg) const { return cfo_hz / cfg.subcarrier_spacing_hz; }
    static Impairments from_samples(double sto, double cfo_norm, double noise_var,
                                    const SystemConfig& cfg);
};

// out[n] = e^{j2pi eps n / M} in[n + d] + noise, with eps the normalized CFO
// and d the STO in samples (zero-filled past the ends).
ComplexSignal apply_impairments(const ComplexSignal& signal, const Impairments& imp,
                                const SystemConfig& cfg, std::mt19937_64& rng);

// Adds circular complex Gaussian noise of total variance `var` per sample.
void add_awgn(ComplexVector& x, double var, std::mt19937_64& rng);
ComplexVector complex_gaussian(Eigen::Index n, double var, std::mt19937_64& rng);

// Per-trial generator seeded from a master seed and a structured stream index.
std::mt19937_64 trial_rng(std::uint64_t master_seed, std::uint64_t stream, std::uint64_t index);

}  // namespace ncofdm
