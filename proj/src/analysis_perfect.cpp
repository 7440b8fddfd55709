// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "ncofdm/analysis.hpp"
#include "ncofdm/parallel.hpp"
#include "ncofdm/receiver.hpp"

namespace ncofdm {

std::vector<int> tail_lengths(const ChannelProfile& profile, const SystemConfig& cfg)
{
    profile.validate();
    const auto d = profile.delays_in_samples(1.0 / cfg.sample_rate_hz());
    std::vector<int> theta(d.size());
    for (std::size_t l = 0; l < d.size(); ++l)
        theta[l] = std::clamp(d[l] + cfg.L - cfg.Mcp, 0, cfg.L);
    return theta;
}

namespace {

// Row r holds F_{k_r} U: the DFT row of bin k_r applied to the summed,
// unit-gain tails of every path.
ComplexMatrix dft_of_tails(const std::vector<int>& theta, const SystemConfig& cfg)
{
    const auto ks = cfg.subcarrier_set();
    const int K = static_cast<int>(ks.size());
    ComplexMatrix FU = ComplexMatrix::Zero(K, cfg.L);
    for (int r = 0; r < K; ++r) {
        const double w = -2.0 * kPi * ks[r] / cfg.M;
        for (int th : theta) {
            // tail sample j (of L) lands at window position j - (L - th)
            for (int j = cfg.L - th; j < cfg.L; ++j)
                FU(r, j) += std::polar(1.0 / cfg.M, w * (j - (cfg.L - th)));
        }
    }
    return FU;
}

}  // namespace

RealVector smooth_interference_power(const SmootherContext& ctx, const ChannelProfile& profile,
                                     const SystemConfig& cfg)
{
    const ComplexMatrix FU = dft_of_tails(tail_lengths(profile, cfg), cfg);
    const ComplexMatrix V = FU * ctx.Qf;  // K x (N+1)
    const ComplexMatrix C = ctx.A * ctx.A.adjoint() + ctx.B * ctx.B.adjoint();
    RealVector s(V.rows());
    for (Eigen::Index r = 0; r < V.rows(); ++r)
        s[r] = std::max(0.0, (V.row(r) * C * V.row(r).adjoint())(0, 0).real());
    return s;
}

RealVector smooth_interference_monte_carlo(const SmootherContext& ctx, const ChannelProfile& profile,
                                           const SystemConfig& cfg, int trials, std::mt19937_64& rng)
{
    if (trials < 1)
        throw DomainError("smooth_interference_monte_carlo: need at least one trial");
    const ComplexMatrix FU = dft_of_tails(tail_lengths(profile, cfg), cfg);
    const int K = static_cast<int>(ctx.A.cols());
    RealVector acc = RealVector::Zero(FU.rows());
    for (int t = 0; t < trials; ++t) {
        const ComplexVector xp = random_qam(K, cfg.qam_order, rng);
        const ComplexVector xc = random_qam(K, cfg.qam_order, rng);
        const ComplexVector W = FU * smooth_signal(xp, xc, ctx, cfg);
        acc += W.cwiseAbs2();
    }
    return acc / trials;
}

double instantaneous_sinr(double H_abs2, double sigma_w_sq, double noise_var, int M)
{
    if (!(noise_var > 0.0) && !(sigma_w_sq > 0.0))
        throw DegenerateInputError("instantaneous_sinr: noise and smooth-signal variances are both zero");
    return H_abs2 / (2.0 * sigma_w_sq * H_abs2 + noise_var / M);
}

double mean_sinr(double sigma_w_sq, double noise_var, int M, double mean_alpha)
{
    if (!(noise_var > 0.0) && !(sigma_w_sq > 0.0))
        throw DegenerateInputError("mean_sinr: noise and smooth-signal variances are both zero");
    auto f = [&](double a) {
        return instantaneous_sinr(a, sigma_w_sq, noise_var, M) * std::exp(-a / mean_alpha) / mean_alpha;
    };
    boost::math::quadrature::exp_sinh<double> integ;
    return integ.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-12);
}

double average_sinr(const RealVector& sigma_w_sq, double noise_var, int M, double mean_alpha)
{
    double s = 0;
    for (Eigen::Index r = 0; r < sigma_w_sq.size(); ++r)
        s += mean_sinr(sigma_w_sq[r], noise_var, M, mean_alpha);
    return s / static_cast<double>(sigma_w_sq.size());
}

PerfectSyncMonteCarlo sinr_perfect_sync_monte_carlo(const SmootherContext& ctx, const ChannelProfile& profile,
                                                    const SystemConfig& cfg, double noise_var, int symbols,
                                                    int block, std::uint64_t seed, int threads)
{
    if (block < 2 || symbols < block)
        throw DomainError("sinr_perfect_sync_monte_carlo: need block >= 2 and at least one block of symbols");
    if (noise_var < 0.0)
        throw DomainError("sinr_perfect_sync_monte_carlo: noise variance must be non-negative");
    profile.validate();
    const int K = static_cast<int>(cfg.subcarrier_set().size());
    const int blocks = symbols / block;
    std::vector<double> per(blocks);
    parallel_for(blocks, resolve_threads(threads), [&](int b) {
        auto rng = trial_rng(seed, 0x5053494e, static_cast<std::uint64_t>(b));
        // one leading symbol so every observed symbol has a smoothed predecessor
        std::vector<ComplexVector> data;
        for (int i = 0; i <= block; ++i)
            data.push_back(random_qam(K, cfg.qam_order, rng));
        ComplexSignal tx;
        tx.samples = assemble_stream(data, ctx, cfg);
        tx.sample_interval = 1.0 / cfg.sample_rate_hz();
        const ChannelRealization h = realize(profile, block + 2, rng, true);
        ComplexSignal rx = apply_channel(tx, h, profile, cfg);
        add_awgn(rx.samples, noise_var, rng);
        SinrAccumulator acc(K);
        acc.begin_block(frequency_response(h.gains.row(0).transpose(), profile, cfg));
        for (int i = 1; i <= block; ++i)
            acc.add(demodulate(rx.samples, i, cfg).bins, data[i]);
        acc.end_block();
        per[b] = acc.mean_linear();
    });
    PerfectSyncMonteCarlo out;
    for (double v : per)
        out.mean_linear += v;
    out.mean_linear /= blocks;
    out.mean_db = 10.0 * std::log10(out.mean_linear);
    out.blocks = blocks;
    out.symbols = blocks * block;
    return out;
}

BerMonteCarlo ber_monte_carlo(const SmootherContext& ctx, const ChannelProfile& profile, const SystemConfig& cfg,
                              double noise_var, int symbols, int block, std::uint64_t seed, int threads)
{
    if (block < 1 || symbols < block)
        throw DomainError("ber_monte_carlo: need block >= 1 and at least one block of symbols");
    if (noise_var < 0.0)
        throw DomainError("ber_monte_carlo: noise variance must be non-negative");
    profile.validate();
    const int K = static_cast<int>(cfg.subcarrier_set().size());
    const int bits_per = cfg.bits_per_symbol();
    const int blocks = symbols / block;
    std::vector<long long> errs(blocks);
    parallel_for(blocks, resolve_threads(threads), [&](int b) {
        auto rng = trial_rng(seed, 0x424552, static_cast<std::uint64_t>(b));
        std::vector<std::vector<std::uint8_t>> bits;
        std::vector<ComplexVector> data;
        for (int i = 0; i <= block; ++i) {
            bits.push_back(random_bits(static_cast<std::size_t>(K) * bits_per, rng));
            data.push_back(qam_map(bits.back(), cfg.qam_order));
        }
        ComplexSignal tx;
        tx.samples = assemble_stream(data, ctx, cfg);
        tx.sample_interval = 1.0 / cfg.sample_rate_hz();
        const ChannelRealization h = realize(profile, block + 2, rng, true);
        ComplexSignal rx = apply_channel(tx, h, profile, cfg);
        add_awgn(rx.samples, noise_var, rng);
        const ComplexVector H = frequency_response(h.gains.row(0).transpose(), profile, cfg);
        long long e = 0;
        for (int i = 1; i <= block; ++i) {
            ReceivedSymbol r = demodulate(rx.samples, i, cfg);
            r.channel_estimate = H;
            const auto got = qam_demap(zf_equalize(r).data, cfg.qam_order);
            for (std::size_t q = 0; q < got.size(); ++q)
                e += got[q] != bits[i][q];
        }
        errs[b] = e;
    });
    BerMonteCarlo out;
    for (long long e : errs)
        out.bit_errors += e;
    out.bits = static_cast<long long>(blocks) * block * K * bits_per;
    out.ber = static_cast<double>(out.bit_errors) / static_cast<double>(out.bits);
    return out;
}

double noise_var_for_ebn0(double ebn0_db, const SystemConfig& cfg, double mean_alpha)
{
    const double bits = std::log2(static_cast<double>(cfg.qam_order));
    return cfg.M * mean_alpha / (bits * std::pow(10.0, ebn0_db / 10.0));
}

// ---- Eb/N0 ----------------------------------------------------------------------------

double ebn0_db(double noise_var, double extra_power, const SystemConfig& cfg)
{
    const double bits = std::log2(static_cast<double>(cfg.qam_order));
    const double K = static_cast<double>(cfg.subcarrier_set().size());
    return 10.0 * std::log10(K * cfg.oversample / bits) - 10.0 * std::log10(noise_var + extra_power);
}

double ebn0_low_interference(double noise_var, const SmootherContext& ctx, const SystemConfig& cfg)
{
    return ebn0_db(noise_var, smooth_energy(ctx, cfg, cfg.oversample) / cfg.symbol_length(), cfg);
}

double noise_var_for_reference(double ebn0_ref_db, const SystemConfig& cfg)
{
    // ebn0_db(1, 0) is the Eb/N0 of unit noise; scale the noise to hit the reference
    return std::pow(10.0, (ebn0_db(1.0, 0.0, cfg) - ebn0_ref_db) / 10.0);
}

double baseline_distortion_power(const SystemConfig& cfg, int symbols, std::mt19937_64& rng)
{
    if (symbols < 1)
        throw DomainError("baseline_distortion_power: need at least one symbol");
    const BaselinePrecoder pre(cfg);
    const int K = static_cast<int>(pre.projector.rows());
    ComplexVector prev = random_qam(K, cfg.qam_order, rng);
    double acc = 0;
    for (int i = 0; i < symbols; ++i) {
        const ComplexVector x = random_qam(K, cfg.qam_order, rng);
        const ComplexVector xb = pre.apply(prev, x);
        acc += (xb - x).squaredNorm();
        prev = xb;
    }
    return acc / symbols;
}

// ---- complexity -------------------------------------------------------------------

long long complexity_count(Scheme scheme, const SystemConfig& cfg)
{
    std::mt19937_64 rng(1);
    const int K = static_cast<int>(cfg.subcarrier_set().size());
    const ComplexVector xp = random_qam(K, cfg.qam_order, rng);
    const ComplexVector xc = random_qam(K, cfg.qam_order, rng);
    MultiplyCounter counter;
    if (scheme == Scheme::LowInterference) {
        const SmootherContext ctx = build_smoother(cfg);
        smooth_signal(xp, xc, ctx, cfg, &counter);
    } else {
        BaselinePrecoder(cfg).apply(xp, xc, &counter);
    }
    return counter.real_mults;
}

long long complexity_formula_low_interference(const SystemConfig& cfg)
{
    const long long K = static_cast<long long>(cfg.subcarrier_set().size());
    const long long n1 = cfg.N + 1;
    return 4 * (n1 * K * 2 + static_cast<long long>(cfg.L) * n1);
}

}  // namespace ncofdm
