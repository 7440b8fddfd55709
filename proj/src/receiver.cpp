// SPDX-License-Identifier: Apache-2.0
#include "ncofdm/receiver.hpp"

#include <cmath>

namespace ncofdm {

ComplexVector demodulate_window(const ComplexVector& rx, long start, const SystemConfig& cfg)
{
    if (start < 0 || start + cfg.M > rx.size())
        throw DimensionError("demodulate: window [" + std::to_string(start) + ", " +
                             std::to_string(start + cfg.M) + ") outside the received signal");
    const ComplexVector X = dft(rx.segment(start, cfg.M), static_cast<std::size_t>(cfg.M));
    const auto ks = cfg.subcarrier_set();
    ComplexVector bins(static_cast<Eigen::Index>(ks.size()));
    for (std::size_t r = 0; r < ks.size(); ++r)
        bins[static_cast<Eigen::Index>(r)] = X[((ks[r] % cfg.M) + cfg.M) % cfg.M];
    return bins;
}

ReceivedSymbol demodulate(const ComplexVector& rx, int index, const SystemConfig& cfg,
                          long start_offset)
{
    if (index < 0)
        throw DimensionError("demodulate: negative symbol index");
    ReceivedSymbol s;
    s.bins = demodulate_window(rx, start_offset + static_cast<long>(index) * cfg.symbol_length() + cfg.Mcp,
                               cfg);
    return s;
}

ComplexVector ls_estimate(const ReceivedSymbol& ref_rx, const ComplexVector& ref_tx)
{
    if (ref_rx.bins.size() != ref_tx.size())
        throw DimensionError("ls_estimate: reference length mismatch");
    ComplexVector H(ref_tx.size());
    for (Eigen::Index r = 0; r < ref_tx.size(); ++r) {
        if (ref_tx[r] == cplx(0.0))
            throw EstimationError("ls_estimate: reference bin " + std::to_string(r) + " is zero");
        H[r] = ref_rx.bins[r] / ref_tx[r];
    }
    return H;
}

EqualizedSymbol zf_equalize(const ReceivedSymbol& rx)
{
    if (rx.channel_estimate.size() != rx.bins.size())
        throw EstimationError("zf_equalize: no channel estimate attached");
    EqualizedSymbol e;
    e.data = ComplexVector::Zero(rx.bins.size());
    for (Eigen::Index r = 0; r < rx.bins.size(); ++r) {
        if (std::abs(rx.channel_estimate[r]) < 1e-12) {
            e.flagged_bins.push_back(static_cast<int>(r));
            continue;
        }
        e.data[r] = rx.bins[r] / rx.channel_estimate[r];
    }
    return e;
}

double measure_ber(const std::vector<std::uint8_t>& tx_bits, const std::vector<std::uint8_t>& rx_bits)
{
    if (tx_bits.size() != rx_bits.size())
        throw DimensionError("measure_ber: bit streams differ in length");
    if (tx_bits.empty())
        return 0.0;
    std::size_t errors = 0;
    for (std::size_t i = 0; i < tx_bits.size(); ++i)
        errors += (tx_bits[i] & 1) != (rx_bits[i] & 1);
    return static_cast<double>(errors) / static_cast<double>(tx_bits.size());
}

SinrAccumulator::SinrAccumulator(int K) : K_(K), resid_(RealVector::Zero(K)) {}

void SinrAccumulator::begin_block(const ComplexVector& H)
{
    if (H.size() != K_)
        throw DimensionError("SinrAccumulator: channel length mismatch");
    H_ = H;
    resid_.setZero();
    count_ = 0;
}

void SinrAccumulator::add(const ComplexVector& rx_bins, const ComplexVector& tx)
{
    if (rx_bins.size() != K_ || tx.size() != K_)
        throw DimensionError("SinrAccumulator: bin count mismatch");
    for (int r = 0; r < K_; ++r)
        resid_[r] += std::norm(rx_bins[r] - H_[r] * tx[r]);
    ++count_;
}

void SinrAccumulator::end_block()
{
    if (count_ < 2)
        throw DimensionError("SinrAccumulator: need at least two symbols per block");
    const double S = static_cast<double>(count_);
    double s = 0;
    for (int r = 0; r < K_; ++r)
        s += std::norm(H_[r]) / (resid_[r] / S) * (S - 1.0) / S;
    sum_ += s / K_;
    ++blocks_;
}

double SinrAccumulator::mean_linear() const
{
    return blocks_ ? sum_ / static_cast<double>(blocks_) : 0.0;
}

double SinrAccumulator::mean_db() const
{
    return 10.0 * std::log10(mean_linear());
}

}  // namespace ncofdm
