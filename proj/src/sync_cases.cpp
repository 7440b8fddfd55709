// SPDX-License-Identifier: Apache-2.0
// SINR of the three timing-offset cases, with integrals of basis products on
// an oversampled midpoint grid over the smooth-signal support.
#include <algorithm>
#include <cmath>

#include "ncofdm/analysis.hpp"

namespace ncofdm {

namespace {

struct Geometry {
    std::vector<int> delays;
    std::vector<double> powers;
    int tau_max = 0;
    double power_sum = 0.0;
};

Geometry geometry(const SinrCaseInputs& in)
{
    in.profile.validate();
    Geometry g;
    g.delays = in.profile.delays_in_samples(1.0 / in.cfg.sample_rate_hz());
    g.powers = in.profile.powers();
    g.tau_max = *std::max_element(g.delays.begin(), g.delays.end());
    for (double p : g.powers)
        g.power_sum += p;
    return g;
}

// f~_n at the midpoints of the fine grid and prefix sums of the quadratic
// form sum C_{n nbar} f~_n f~_nbar^*.
class BasisGrid {
public:
    BasisGrid(const SinrCaseInputs& in) : cfg_(in.cfg), ctx_(*in.ctx), over_(in.oversample)
    {
        if (over_ < 1)
            throw DomainError("integration grid needs at least one point per sample");
        ks_ = cfg_.subcarrier_set();
        h_ = 1.0 / over_;
        count_ = static_cast<int>(std::lround(cfg_.TL() * over_));
        const int n1 = cfg_.N + 1;
        F_ = ComplexMatrix::Zero(count_, n1);
        for (int j = 0; j < count_; ++j) {
            const double tau = (j + 0.5) * h_;  // u + Mcp
            const double g = taper(cfg_, tau, 0);
            for (int k : ks_) {
                const double w = 2.0 * kPi * k / cfg_.M;
                const cplx e = std::polar(g, w * tau);
                cplx jw = 1.0;
                for (int n = 0; n < n1; ++n) {
                    F_(j, n) += jw * e;
                    jw *= cplx(0.0, w);
                }
            }
        }
        const ComplexMatrix C = ctx_.A * ctx_.A.adjoint() + ctx_.B * ctx_.B.adjoint();
        prefix_.assign(count_ + 1, 0.0);
        for (int j = 0; j < count_; ++j) {
            const double q = (F_.row(j) * C * F_.row(j).adjoint())(0, 0).real();
            prefix_[j + 1] = prefix_[j] + q * h_;
        }
    }

    // integral of sum C f~_n f~_nbar^* over [u1, u2]
    double quadratic(double u1, double u2) const
    {
        const int a = index(u1), b = index(u2);
        return b > a ? prefix_[b] - prefix_[a] : 0.0;
    }

    double total() const { return prefix_[count_]; }

    // sum_r Re{ sum_n (a_nr phase_r + b_nr) int_{u1}^{u2} e^{-j2pi k_r u/M} f~_n(u) du }
    double cross(double u1, double u2, const ComplexVector& phase) const
    {
        const int a = index(u1), b = index(u2);
        if (b <= a)
            return 0.0;
        const int K = static_cast<int>(ks_.size());
        const ComplexMatrix coef = ctx_.A * phase.asDiagonal().toDenseMatrix() + ctx_.B;  // (N+1) x K
        double acc = 0.0;
        for (int r = 0; r < K; ++r) {
            const double w = -2.0 * kPi * ks_[r] / cfg_.M;
            cplx s = 0;
            for (int j = a; j < b; ++j) {
                const double u = -cfg_.Mcp + (j + 0.5) * h_;
                s += std::polar(1.0, w * u) * (F_.row(j) * coef.col(r))(0, 0);
            }
            acc += (s * h_).real();
        }
        return acc;
    }

private:
    int index(double u) const
    {
        const long i = std::lround((u + cfg_.Mcp) * over_);
        return static_cast<int>(std::clamp<long>(i, 0, count_));
    }

    const SystemConfig& cfg_;
    const SmootherContext& ctx_;
    int over_;
    std::vector<int> ks_;
    double h_ = 1.0;
    int count_ = 0;
    ComplexMatrix F_;
    std::vector<double> prefix_;
};

void check_inputs(const SinrCaseInputs& in)
{
    if (!in.ctx)
        throw DomainError("SINR case: smoother context missing");
    if (in.sto_samples < 0.0)
        throw DomainError("SINR case: delta_1 must be non-negative");
    if (in.noise_var < 0.0)
        throw DomainError("SINR case: negative noise variance");
    in.cfg.validate();
}

CaseSinr finish(const SinrCaseInputs& in, const Geometry& g, double I)
{
    CaseSinr out;
    const double K = static_cast<double>(in.cfg.subcarrier_set().size());
    out.interference = I;
    out.gamma = K * in.cfg.M * g.power_sum / (I + in.noise_var * in.cfg.M);
    return out;
}

}  // namespace

int count_taps_within(const ChannelProfile& profile, const SystemConfig& cfg, double delta1)
{
    const auto d = profile.delays_in_samples(1.0 / cfg.sample_rate_hz());
    return static_cast<int>(std::count_if(d.begin(), d.end(), [&](int t) { return t <= delta1; }));
}

int count_taps_beyond(const ChannelProfile& profile, const SystemConfig& cfg, double delta1)
{
    const auto d = profile.delays_in_samples(1.0 / cfg.sample_rate_hz());
    return static_cast<int>(
        std::count_if(d.begin(), d.end(), [&](int t) { return t >= cfg.Mcp - delta1; }));
}

CaseSinr sinr_case1(const SinrCaseInputs& in)
{
    check_inputs(in);
    const Geometry g = geometry(in);
    const BasisGrid grid(in);
    const SystemConfig& cfg = in.cfg;
    const double K = static_cast<double>(cfg.subcarrier_set().size());
    const double d1 = in.sto_samples;
    const double T = cfg.symbol_length();
    const auto ks = cfg.subcarrier_set();

    ComplexVector phase(static_cast<Eigen::Index>(ks.size()));
    for (std::size_t r = 0; r < ks.size(); ++r)
        phase[static_cast<Eigen::Index>(r)] =
            std::polar(1.0, -2.0 * kPi * (in.cfo * T + ks[r] * cfg.Mcp) / cfg.M);

    double I = 0.0;
    for (std::size_t l = 0; l < g.delays.size(); ++l) {
        const double tau = g.delays[l];
        const double s2 = g.powers[l];
        I += s2 * grid.quadratic(d1 - tau, cfg.M - tau);
        if (tau <= d1) {
            I += 2.0 * K * s2 * (d1 - tau);
            I += s2 * grid.quadratic(-cfg.Mcp, d1 - tau - cfg.Mcp);
            I -= 2.0 * s2 * grid.cross(-cfg.Mcp, d1 - tau - cfg.Mcp, phase);
        }
    }
    CaseSinr out = finish(in, g, I);
    out.L1 = count_taps_within(in.profile, cfg, d1);
    return out;
}

CaseSinr sinr_case2(const SinrCaseInputs& in)
{
    check_inputs(in);
    const Geometry g = geometry(in);
    const double d1 = in.sto_samples;
    if (d1 + g.tau_max > in.cfg.Mcp)
        throw CaseMismatchError("early window: delta_1 + tau_max exceeds the cyclic prefix, use the ISI case");
    const BasisGrid grid(in);
    double I = 0.0;
    for (std::size_t l = 0; l < g.delays.size(); ++l) {
        const double tau = g.delays[l];
        I += g.powers[l] * grid.quadratic(-tau - d1, in.cfg.M - 2.0 * d1 - tau);
    }
    return finish(in, g, I);
}

CaseSinr sinr_case3(const SinrCaseInputs& in)
{
    check_inputs(in);
    const Geometry g = geometry(in);
    const SystemConfig& cfg = in.cfg;
    const double d1 = in.sto_samples;
    if (d1 + g.tau_max < cfg.Mcp)
        throw CaseMismatchError("early window with ISI: delta_1 + tau_max is inside the cyclic prefix");
    const BasisGrid grid(in);
    const double K = static_cast<double>(cfg.subcarrier_set().size());
    const double tm = g.tau_max;

    double I = 0.0;
    for (std::size_t l = 0; l < g.delays.size(); ++l) {
        const double tau = g.delays[l];
        const double s2 = g.powers[l];
        if (tau >= cfg.Mcp - d1) {
            I += 2.0 * K * s2 * (tau - cfg.Mcp + d1);
            I += s2 * grid.quadratic(-cfg.Mcp, tm - tau - cfg.Mcp);
        } else {
            I += s2 * grid.quadratic(-d1 - tau, tm - cfg.Mcp - tau);
        }
        I += s2 * grid.quadratic(tm - cfg.Mcp - tau, cfg.M - d1 - tau);
    }
    CaseSinr out = finish(in, g, I);
    out.L2 = count_taps_beyond(in.profile, cfg, d1);
    return out;
}

CaseSinr sinr_case(const SinrCaseInputs& in, SyncCase which)
{
    switch (which) {
    case SyncCase::LateWindow: return sinr_case1(in);
    case SyncCase::EarlyWindow: return sinr_case2(in);
    case SyncCase::EarlyWindowIsi: return sinr_case3(in);
    }
    throw DomainError("unknown synchronization case");
}

double smooth_energy(const SmootherContext& ctx, const SystemConfig& cfg, int oversample)
{
    SinrCaseInputs in;
    in.cfg = cfg;
    in.ctx = &ctx;
    in.oversample = oversample;
    return BasisGrid(in).total();
}

CaseMonteCarlo sinr_case_monte_carlo(const SinrCaseInputs& in, SyncCase which, int trials,
                                     std::uint64_t seed)
{
    check_inputs(in);
    if (trials < 1)
        throw DomainError("sinr_case_monte_carlo: need at least one trial");
    const Geometry g = geometry(in);
    const SystemConfig& cfg = in.cfg;
    const int K = static_cast<int>(cfg.subcarrier_set().size());
    const int T = cfg.symbol_length();
    const long d1 = std::lround(in.sto_samples);
    const long body = T + cfg.Mcp;  // first body sample of the middle symbol
    const long start = which == SyncCase::LateWindow ? body + d1 : body - d1;
    if (start < 0 || start + cfg.M > 3L * T)
        throw CaseMismatchError("timing offset moves the window outside the simulated symbols");

    ComplexVector cfo_local(T);
    for (int m = 0; m < T; ++m)
        cfo_local[m] = std::polar(1.0, 2.0 * kPi * in.cfo * (m - cfg.Mcp) / cfg.M);

    double sig = 0.0, intf = 0.0;
    for (int t = 0; t < trials; ++t) {
        std::mt19937_64 rng = trial_rng(seed, static_cast<std::uint64_t>(which), static_cast<std::uint64_t>(t));
        std::vector<ComplexVector> x;
        for (int s = 0; s < 4; ++s)
            x.push_back(random_qam(K, cfg.qam_order, rng));
        ComplexVector tx(3 * T);
        for (int s = 0; s < 3; ++s) {
            ComplexVector sym = ofdm_modulate(x[s + 1], cfg);
            sym.head(cfg.L) += smooth_signal(x[s], x[s + 1], *in.ctx, cfg);
            tx.segment(static_cast<Eigen::Index>(s) * T, T) = sym.cwiseProduct(cfo_local);
        }
        // periodic body of the middle symbol, without CFO
        const ComplexVector y = ofdm_modulate(x[2], cfg).segment(cfg.Mcp, cfg.M);

        ComplexVector h(static_cast<Eigen::Index>(g.delays.size()));
        for (std::size_t l = 0; l < g.delays.size(); ++l)
            h[static_cast<Eigen::Index>(l)] = complex_gaussian(1, g.powers[l], rng)[0];
        const ComplexVector noise = complex_gaussian(cfg.M, in.noise_var, rng);

        for (int m = 0; m < cfg.M; ++m) {
            const long n = start + m;
            const long tloc = n - body;
            cplx r = noise[m], ref = 0;
            for (std::size_t l = 0; l < g.delays.size(); ++l) {
                const long src = n - g.delays[l];
                const cplx hl = h[static_cast<Eigen::Index>(l)];
                if (src >= 0)
                    r += hl * tx[src];
                const long arg = tloc - g.delays[l];
                const long p = ((arg % cfg.M) + cfg.M) % cfg.M;
                ref += hl * y[p] * std::polar(1.0, 2.0 * kPi * in.cfo * static_cast<double>(arg) / cfg.M);
            }
            sig += std::norm(ref);
            intf += std::norm(r - ref);
        }
    }
    CaseMonteCarlo out;
    out.trials = trials;
    out.signal = sig / trials;
    out.interference = intf / trials;
    out.gamma = sig / intf;
    return out;
}

}  // namespace ncofdm
