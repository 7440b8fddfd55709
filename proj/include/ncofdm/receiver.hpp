// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "ncofdm/waveform.hpp"

namespace ncofdm {

struct EstimationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ReceivedSymbol {
    ComplexVector bins;              // R_k on the configured subcarriers
    ComplexVector channel_estimate;  // empty until estimated
};

// Drops Mcp samples of symbol `index` (the symbol starts at
// start_offset + index (M + Mcp)), then takes the 1/M DFT.
ReceivedSymbol demodulate(const ComplexVector& rx, int index, const SystemConfig& cfg,
                          long start_offset = 0);

// Bins of an arbitrary M-sample window starting at `start`.
ComplexVector demodulate_window(const ComplexVector& rx, long start, const SystemConfig& cfg);

ComplexVector ls_estimate(const ReceivedSymbol& ref_rx, const ComplexVector& ref_tx);

struct EqualizedSymbol {
    ComplexVector data;
    std::vector<int> flagged_bins;  // |H| < 1e-12; data is zero there
};

EqualizedSymbol zf_equalize(const ReceivedSymbol& rx);

double measure_ber(const std::vector<std::uint8_t>& tx_bits, const std::vector<std::uint8_t>& rx_bits);

// Empirical per-bin SINR. Each block holds a fixed channel; inside it the
// interference-plus-noise power of bin k is the mean of |R_k - H_k x_k|^2 and
// the signal power is |H_k|^2. The returned value averages |H|^2 / P over bins
// and blocks. The (S-1)/S factor removes the bias of inverting a mean of S
// squared Gaussian residuals.
class SinrAccumulator {
public:
    explicit SinrAccumulator(int K);
    void begin_block(const ComplexVector& H);
    void add(const ComplexVector& rx_bins, const ComplexVector& tx);
    void end_block();
    double mean_linear() const;
    double mean_db() const;
    long blocks() const { return blocks_; }

private:
    int K_;
    ComplexVector H_;
    RealVector resid_;
    long count_ = 0;
    double sum_ = 0.0;
    long blocks_ = 0;
};

}  // namespace ncofdm
