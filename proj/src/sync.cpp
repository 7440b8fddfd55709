// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "ncofdm/analysis.hpp"
#include "ncofdm/parallel.hpp"
#include "ncofdm/sync.hpp"

namespace ncofdm {

namespace {

const SmootherContext& require_ctx(const CorrelationInputs& in)
{
    if (!in.ctx)
        throw DomainError("correlation: smoother context missing");
    return *in.ctx;
}

}  // namespace

cplx analytic_correlation(double t, double delta, const CorrelationInputs& in)
{
    const SystemConfig& cfg = in.cfg;
    const SmootherContext& ctx = require_ctx(in);
    const double head_end = -cfg.Mcp + cfg.TL();
    const double slack = 1e-9 * cfg.M;
    if (t < -cfg.Mcp - slack || t > head_end + slack)
        throw DomainError("analytic_correlation: t must lie on the smoothed head [-Mcp, -Mcp + T_L]");
    if (t + delta < head_end - slack || t + delta > cfg.M + slack)
        throw DomainError("analytic_correlation: t + Delta must lie on [-Mcp + T_L, M]");

    in.profile.validate();
    const auto delays = in.profile.delays_in_samples(1.0 / cfg.sample_rate_hz());
    const auto powers = in.profile.powers();
    const auto ks = cfg.subcarrier_set();
    const int K = static_cast<int>(ks.size());

    cplx periodic = 0.0;
    for (int k : ks)
        periodic += std::polar(1.0, -2.0 * kPi * k * delta / cfg.M);

    cplx acc = 0.0;
    for (std::size_t l = 0; l < delays.size(); ++l) {
        const double u = t - delays[l] + in.sto_samples;
        cplx smooth = 0.0;
        for (int n = 0; n <= cfg.N; ++n) {
            const cplx fn = basis_derivative(cfg, n, 0, u);
            if (fn == 0.0)
                continue;
            cplx s = 0.0;
            for (int r = 0; r < K; ++r)
                s += ctx.B(n, r) * std::polar(1.0, -2.0 * kPi * ks[r] * (u + delta) / cfg.M);
            smooth += fn * s;
        }
        acc += powers[l] * (periodic - smooth);
    }
    return std::polar(1.0 / K, -2.0 * kPi * in.cfo * delta / cfg.M) * acc;
}

cplx analytic_correlation_ts(double t, const CorrelationInputs& in)
{
    return analytic_correlation(t, in.cfg.M, in);
}

std::vector<cplx> empirical_correlation(const std::vector<int>& t_samples, const CorrelationInputs& in,
                                        int realizations, std::uint64_t seed, int threads)
{
    const SystemConfig& cfg = in.cfg;
    const SmootherContext& ctx = require_ctx(in);
    if (realizations < 1)
        throw DomainError("empirical_correlation: need at least one realization");
    const int T = cfg.symbol_length();
    const int body = T + cfg.Mcp;  // body start of the middle symbol
    const int d1 = static_cast<int>(std::lround(in.sto_samples));
    for (int t : t_samples)
        if (body + t + d1 < 0 || body + t + d1 + cfg.M >= 3 * T)
            throw DomainError("empirical_correlation: t outside the simulated three-symbol span");
    const int K = static_cast<int>(cfg.subcarrier_set().size());

    std::vector<std::vector<cplx>> per(realizations);
    parallel_for(realizations, resolve_threads(threads), [&](int r) {
        auto rng = trial_rng(seed, 0x434f, static_cast<std::uint64_t>(r));
        std::vector<ComplexVector> data;
        for (int i = 0; i < 3; ++i)
            data.push_back(random_qam(K, cfg.qam_order, rng));
        ComplexSignal tx;
        tx.samples = assemble_stream(data, ctx, cfg);
        tx.sample_interval = 1.0 / cfg.sample_rate_hz();
        const ChannelRealization h = realize(in.profile, 4, rng, true);
        const ComplexSignal rx = apply_channel(tx, h, in.profile, cfg);
        auto at = [&](int idx) { return rx.samples[idx] * std::polar(1.0, 2.0 * kPi * in.cfo * idx / cfg.M); };
        std::vector<cplx> v(t_samples.size());
        for (std::size_t i = 0; i < t_samples.size(); ++i) {
            const int idx = body + t_samples[i] + d1;
            v[i] = at(idx) * std::conj(at(idx + cfg.M)) / static_cast<double>(K);
        }
        per[r] = std::move(v);
    });
    std::vector<cplx> out(t_samples.size(), 0.0);
    for (const auto& v : per)
        for (std::size_t i = 0; i < v.size(); ++i)
            out[i] += v[i];
    for (auto& v : out)
        v /= static_cast<double>(realizations);
    return out;
}

double smooth_power_ratio_in_body(const SmootherContext& ctx, const SystemConfig& cfg, int trials,
                                  std::mt19937_64& rng)
{
    if (trials < 1)
        throw DomainError("smooth_power_ratio_in_body: need at least one trial");
    const int K = static_cast<int>(cfg.subcarrier_set().size());
    double inside = 0, total = 0;
    for (int t = 0; t < trials; ++t) {
        const ComplexVector w =
            smooth_signal(random_qam(K, cfg.qam_order, rng), random_qam(K, cfg.qam_order, rng), ctx, cfg);
        total += w.squaredNorm();
        if (cfg.L > cfg.Mcp)
            inside += w.tail(cfg.L - cfg.Mcp).squaredNorm();
    }
    return total > 0.0 ? inside / total : 0.0;
}

int cp_sto_estimate(const ComplexSignal& rx, const SystemConfig& cfg)
{
    const int T = cfg.symbol_length();
    const Eigen::Index n = rx.samples.size();
    if (n < 2 * T - 1)
        throw DomainError("cp_sto_estimate: need at least two symbols of samples");
    const int span = T + cfg.Mcp;  // products p[m] for m < span cover every window
    std::vector<cplx> prefix(span + 1, 0.0);
    for (int m = 0; m < span; ++m)
        prefix[m + 1] = prefix[m] + rx.samples[m] * std::conj(rx.samples[m + cfg.M]);
    int best = 0;
    double best_mag = -1.0;
    for (int d = 0; d < T; ++d) {
        const double mag = std::abs(prefix[d + cfg.Mcp] - prefix[d]);
        if (mag > best_mag) {
            best_mag = mag;
            best = d;
        }
    }
    return best;
}

int training_sto_estimate(const ComplexSignal& rx, const ComplexVector& training_body, const SystemConfig& cfg)
{
    const int T = cfg.symbol_length();
    if (training_body.size() != cfg.M)
        throw DimensionError("training_sto_estimate: training body must hold M samples");
    if (rx.samples.size() < 2 * T - 1)
        throw DomainError("training_sto_estimate: need at least two symbols of samples");
    const int seg = T + cfg.M - 1;
    std::size_t nfft = 1;
    while (nfft < static_cast<std::size_t>(seg))
        nfft <<= 1;
    ComplexVector s = ComplexVector::Zero(static_cast<Eigen::Index>(nfft));
    s.head(seg) = rx.samples.segment(cfg.Mcp, seg);
    ComplexVector c = ComplexVector::Zero(static_cast<Eigen::Index>(nfft));
    c.head(cfg.M) = training_body;
    const ComplexVector C = idft(dft(s, nfft).cwiseProduct(dft(c, nfft).conjugate()), nfft);
    int best = 0;
    double best_mag = -1.0;
    for (int d = 0; d < T; ++d) {
        const double mag = std::abs(C[d]);
        if (mag > best_mag) {
            best_mag = mag;
            best = d;
        }
    }
    return best;
}

std::string to_string(StoEstimator e)
{
    return e == StoEstimator::CyclicPrefix ? "cp" : "training";
}

std::vector<StoRow> sto_error_variance(const StoExperiment& ex)
{
    const SystemConfig& cfg = ex.cfg;
    cfg.validate();
    ex.profile.validate();
    if (ex.trials < 1)
        throw DomainError("sto_error_variance: need at least one trial");
    const int T = cfg.symbol_length();
    if (ex.offset < 0 || ex.offset >= T)
        throw DomainError("sto_error_variance: offset must lie inside one symbol");
    const int K = static_cast<int>(cfg.subcarrier_set().size());
    const SmootherContext ctx = build_smoother(cfg);
    const double mean_alpha = ex.profile.normalize ? 1.0 : ex.profile.total_power();

    // one fixed training symbol per experiment, known to the receiver
    auto trng = trial_rng(ex.seed, 0x5452, 0);
    const ComplexVector training = random_qam(K, cfg.qam_order, trng);
    const ComplexVector training_body = ofdm_modulate(training, cfg).tail(cfg.M);

    constexpr int kSymbols = 4;
    constexpr int kObserved = 2;
    std::vector<StoRow> rows;
    for (std::size_t si = 0; si < ex.ebn0_db.size(); ++si) {
        const double noise_var = ex.noiseless ? 0.0 : noise_var_for_ebn0(ex.ebn0_db[si], cfg, mean_alpha);
        std::vector<double> err2(ex.trials);
        parallel_for(ex.trials, resolve_threads(ex.threads), [&](int t) {
            auto rng = trial_rng(ex.seed, 0x5354 + si, static_cast<std::uint64_t>(t));
            std::vector<ComplexVector> data;
            for (int i = 0; i < kSymbols; ++i)
                data.push_back(ex.estimator == StoEstimator::Training && i == kObserved
                                   ? training
                                   : random_qam(K, cfg.qam_order, rng));
            ComplexSignal tx;
            tx.sample_interval = 1.0 / cfg.sample_rate_hz();
            if (ex.smoothed) {
                tx.samples = assemble_stream(data, ctx, cfg);
            } else {
                tx.samples.resize(kSymbols * T);
                for (int i = 0; i < kSymbols; ++i)
                    tx.samples.segment(i * T, T) = ofdm_modulate(data[i], cfg);
            }
            const ChannelRealization h = realize(ex.profile, kSymbols + 1, rng, true);
            const ComplexSignal faded = apply_channel(tx, h, ex.profile, cfg);
            const ComplexSignal rx =
                apply_impairments(faded, Impairments::from_samples(0.0, ex.cfo, noise_var, cfg), cfg, rng);
            ComplexSignal window;
            window.sample_interval = rx.sample_interval;
            const int start = kObserved * T - ex.offset;
            window.samples = rx.samples.segment(start, rx.samples.size() - start);
            const int est = ex.estimator == StoEstimator::CyclicPrefix
                                ? cp_sto_estimate(window, cfg)
                                : training_sto_estimate(window, training_body, cfg);
            // symbol timing is periodic in T: an estimate near T is an early hit on the next symbol
            int e = (est - ex.offset) % T;
            if (e > T / 2)
                e -= T;
            if (e < -T / 2)
                e += T;
            err2[t] = static_cast<double>(e) * e;
        });
        double s = 0;
        for (double v : err2)
            s += v;
        StoRow row;
        row.ebn0_db = ex.ebn0_db[si];
        row.estimator = ex.estimator;
        row.N = cfg.N;
        row.L = cfg.L;
        row.smoothed = ex.smoothed;
        row.mse = s / ex.trials;
        row.trials = ex.trials;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace ncofdm
