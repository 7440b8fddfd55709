// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "ncofdm/channel.hpp"
#include "ncofdm/parallel.hpp"
#include "ncofdm/spectral.hpp"

namespace ncofdm {

namespace {

constexpr cplx kJ{0.0, 1.0};

cplx ipow(cplx z, int n)
{
    cplx r = 1.0;
    for (int i = 0; i < n; ++i)
        r *= z;
    return r;
}

// Blackman taper on [0, T_L] as sum_c gamma_c e^{j pi c tau / T_L}.
constexpr int kShifts[5] = {-2, -1, 0, 1, 2};
constexpr double kGamma[5] = {0.04, 0.25, 0.42, 0.25, 0.04};

double inband_mean(const RealVector& f, const RealVector& lin, double half)
{
    double s = 0;
    int n = 0;
    for (Eigen::Index i = 0; i < f.size(); ++i)
        if (half <= 0.0 || std::fabs(f[i]) <= half) {
            s += lin[i];
            ++n;
        }
    if (n == 0)
        throw InsufficientDataError("PSD: no grid points inside the in-band reference region");
    return s / n;
}

}  // namespace

PsdEstimate to_estimate(const RealVector& fgrid_hz, const RealVector& linear, double half, std::string tag)
{
    if (fgrid_hz.size() != linear.size())
        throw DimensionError("to_estimate: grid and values differ in length");
    return to_estimate_referenced(fgrid_hz, linear, inband_mean(fgrid_hz, linear, half), std::move(tag));
}

PsdEstimate to_estimate_referenced(const RealVector& fgrid_hz, const RealVector& linear, double reference,
                                   std::string tag)
{
    if (fgrid_hz.size() != linear.size())
        throw DimensionError("to_estimate: grid and values differ in length");
    if (!(reference > 0.0))
        throw DomainError("PSD reference level must be positive");
    for (Eigen::Index i = 1; i < fgrid_hz.size(); ++i)
        if (!(fgrid_hz[i] > fgrid_hz[i - 1]))
            throw DomainError("PSD frequency grid must be strictly increasing");
    PsdEstimate e;
    e.freqs_hz = fgrid_hz;
    e.inband_mean = reference;
    const double floor = e.inband_mean * 1e-300;
    e.values_db.resize(linear.size());
    for (Eigen::Index i = 0; i < linear.size(); ++i)
        e.values_db[i] = 10.0 * std::log10(std::max(linear[i], floor) / e.inband_mean);
    e.tag = std::move(tag);
    return e;
}

PsdEstimate welch_psd(const ComplexSignal& s, const WelchOptions& opt)
{
    if (opt.segment < 2 || opt.overlap < 0 || opt.overlap >= opt.segment)
        throw DomainError("welch_psd: need segment >= 2 and 0 <= overlap < segment");
    const Eigen::Index n = s.samples.size();
    if (n < opt.segment)
        throw InsufficientDataError("welch_psd: " + std::to_string(n) + " samples is shorter than one segment");
    const int S = opt.segment;
    const int step = S - opt.overlap;
    RealVector w(S);
    for (int i = 0; i < S; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / S);
    const double wpow = w.squaredNorm();

    RealVector acc = RealVector::Zero(S);
    int segs = 0;
    for (Eigen::Index start = 0; start + S <= n; start += step, ++segs) {
        const ComplexVector seg = s.samples.segment(start, S).cwiseProduct(w.cast<cplx>());
        const ComplexVector X = dft(seg, static_cast<std::size_t>(S)) * static_cast<double>(S);
        acc += X.cwiseAbs2();
    }
    acc /= segs * wpow;

    // reorder to ascending frequency, DC at index S/2
    const double fs = 1.0 / s.sample_interval;
    RealVector f(S), lin(S);
    for (int i = 0; i < S; ++i) {
        const int b = i - S / 2;
        f[i] = b * fs / S;
        lin[i] = acc[(b + S) % S] * s.sample_interval;
    }
    PsdEstimate e = to_estimate(f, lin, opt.inband_half_width_hz, "welch");
    e.segments = segs;
    return e;
}

double band_edge_hz(const SystemConfig& cfg)
{
    const auto ks = cfg.subcarrier_set();
    const int kmax = *std::max_element(ks.begin(), ks.end());
    return (kmax + 0.5) * cfg.subcarrier_spacing_hz;
}

RealVector default_psd_grid(const SystemConfig& cfg, int points)
{
    if (points < 2)
        throw DomainError("default_psd_grid: need at least two points");
    const auto ks = cfg.subcarrier_set();
    const auto [lo, hi] = std::minmax_element(ks.begin(), ks.end());
    const double B = (*hi - *lo + 1) * cfg.subcarrier_spacing_hz;
    const double span = band_edge_hz(cfg) + 3.0 * B;
    return RealVector::LinSpaced(points, -span, span);
}

cplx blackman_bracket(int p, double x, double TL)
{
    cplx s = 0.0;
    for (int i = 0; i < 5; ++i) {
        const int c = kShifts[i];
        if (c == 0 && p > 0)
            continue;
        const cplx d = ipow(kJ * (kPi * c / TL), p);
        s += kGamma[i] * d * TL * std::polar(1.0, kPi * c / 2.0) * sinc(x + c / 2.0);
    }
    return s;
}

AuxiliarySmoother build_auxiliary(const SystemConfig& cfg)
{
    if (cfg.N < 2)
        throw CaseMismatchError("auxiliary smoother needs N >= 2");
    const int N = cfg.N;
    const double t0 = -cfg.Mcp + cfg.TL();
    AuxiliarySmoother a;
    a.D.resize(N - 1, N + 1);
    for (int d = 2; d <= N; ++d)
        for (int n = 0; n <= N; ++n)
            a.D(d - 2, n) = basis_derivative(cfg, n, d, t0);
    ComplexMatrix Q1(N - 1, N), Q2(N - 1, N);
    for (int i = 0; i < N - 1; ++i)
        for (int n = 0; n < N; ++n) {
            Q1(i, n) = basis_exponential(cfg, i + n, cfg.M);
            Q2(i, n) = basis_exponential(cfg, i + n, t0);
        }
    a.Wq = normal_equation_operator(Q1, Q2, &a.condition);
    return a;
}

AuxiliaryResidual auxiliary_boundary_residual(const ComplexVector& x_prev, const ComplexVector& x_cur,
                                              const SmootherContext& ctx, const SystemConfig& cfg)
{
    const AuxiliarySmoother a = build_auxiliary(cfg);
    const ComplexVector b = smoother_coefficients(x_prev, x_cur, ctx);
    const ComplexVector wl = a.D * b;
    const ComplexVector bt = a.Wq * wl;
    const auto ks = cfg.subcarrier_set();
    int kmax = 0;
    for (int k : ks)
        kmax = std::max(kmax, std::abs(k));
    const double t0 = -cfg.Mcp + cfg.TL();
    AuxiliaryResidual r;
    for (int d = 0; d <= cfg.N - 2; ++d) {
        cplx at0 = 0.0, atM = 0.0;
        for (int n = 0; n < cfg.N; ++n) {
            at0 += bt[n] * basis_exponential(cfg, n + d, t0);
            atM += bt[n] * basis_exponential(cfg, n + d, cfg.M);
        }
        // scale of a derivative of order d+2 of the smoothed signal
        const double scale = std::pow(2.0 * kPi * kmax / cfg.M, d + 2) * static_cast<double>(ks.size()) *
                             std::max(1.0, b.cwiseAbs().maxCoeff());
        r.start = std::max(r.start, std::abs(at0 - wl[d]) / scale);
        r.end = std::max(r.end, std::abs(atM) / scale);
    }
    return r;
}

PsdKernel psd_kernel(const RealVector& fgrid_hz, const SystemConfig& cfg, const SmootherContext& ctx,
                     HigherOrderForm form)
{
    if (cfg.window != WindowKind::Blackman)
        throw ConfigError("analytic PSD is only available for the Blackman taper");
    const auto ks = cfg.subcarrier_set();
    const int K = static_cast<int>(ks.size());
    const int N = cfg.N;
    const int m = N + 1;
    const double Ts = cfg.M;
    const double T = cfg.symbol_length();
    const double TL = cfg.TL();
    const double b1 = cfg.Mcp / Ts;
    const double b2 = TL / Ts;
    const double fs = cfg.sample_rate_hz();
    const Eigen::Index F = fgrid_hz.size();

    AuxiliarySmoother aux;
    if (N >= 2)
        aux = build_auxiliary(cfg);

    PsdKernel out;
    out.freqs_hz = fgrid_hz;
    out.symbol_period = T;
    out.sample_rate_hz = fs;
    out.inband_half_width_hz = band_edge_hz(cfg);
    out.N = N;
    out.u.resize(K, F);
    out.v.resize(K, F);

    std::vector<cplx> dk(K);  // j2pi k_r / Ts
    for (int r = 0; r < K; ++r)
        dk[r] = kJ * (2.0 * kPi * ks[r] / Ts);

    for (Eigen::Index fi = 0; fi < F; ++fi) {
        const double f = fgrid_hz[fi] / fs;  // cycles per sample
        if (f == 0.0)
            throw DomainError("analytic PSD: f = 0 is a removable singularity of the derivative form");
        const double nu = Ts * f;
        const cplx jw = kJ * (2.0 * kPi * f);
        const cplx jwm = ipow(jw, m);

        ComplexVector d(K);
        ComplexVector Fm = ComplexVector::Zero(N + 1);
        ComplexVector P3 = ComplexVector::Zero(N), P4 = ComplexVector::Zero(N);
        for (int r = 0; r < K; ++r) {
            const double fr = ks[r] - nu;
            d[r] = ipow(dk[r], m) * std::polar(1.0, kPi * fr * (1.0 - b1)) * sinc(fr * (1.0 + b1)) / jwm;

            const cplx ph = std::polar(1.0, kPi * b2 * fr);
            for (int p = 0; p <= m; ++p) {
                const cplx br = binomial(m, p) * ph * blackman_bracket(p, b2 * fr, TL);
                cplx pw = ipow(dk[r], m - p);
                for (int n = 0; n <= N; ++n) {
                    Fm[n] += pw * br;
                    pw *= dk[r];
                }
            }
            if (N >= 2) {
                const double fbar = ks[r] + nu;
                const double len = 1.0 - b2 + b1;
                const double sn = (std::fabs(fr) < 1e-12) ? len : std::sin(kPi * len * fr) / (kPi * fr);
                const cplx E = std::polar(1.0, kPi * ((1.0 + b2) * fr + b1 * fbar)) * sn * (Ts / T);
                cplx pw = 1.0;
                for (int n = 0; n < N; ++n) {
                    P4[n] += pw * E;
                    P3[n] += pw * ipow(dk[r], N - 1) * E;
                    pw *= dk[r];
                }
            }
        }
        Fm *= std::polar(1.0, 2.0 * kPi * f * cfg.Mcp);

        ComplexVector cb = Fm / (T * jwm);
        if (N >= 2) {
            ComplexVector e(N);
            for (int n = 0; n < N; ++n) {
                const cplx lift = form == HigherOrderForm::Printed ? 1.0 / ipow(kJ * (2.0 * kPi), n) : 1.0;
                e[n] = P3[n] * lift / jwm - P4[n] / (jw * jw);
            }
            cb += aux.D.transpose() * (aux.Wq.transpose() * e);
        }
        // c_b^T b with b = A x_prev - B x_cur
        out.u.col(fi) = d - ctx.B.transpose() * cb;
        out.v.col(fi) = ctx.A.transpose() * cb;
    }
    return out;
}

RealVector psd_expected(const PsdKernel& k)
{
    const Eigen::Index F = k.freqs_hz.size();
    RealVector out(F);
    for (Eigen::Index fi = 0; fi < F; ++fi) {
        const double theta = 2.0 * kPi * k.freqs_hz[fi] / k.sample_rate_hz * k.symbol_period;
        out[fi] = (k.u.col(fi) + std::polar(1.0, -theta) * k.v.col(fi)).squaredNorm() / k.symbol_period;
    }
    return out;
}

RealVector psd_monte_carlo(const PsdKernel& k, const SystemConfig& cfg, const MonteCarloSpec& mc)
{
    if (mc.realizations < 1 || mc.symbols < 1)
        throw DomainError("PSD Monte-Carlo needs at least one realization and one symbol");
    const Eigen::Index F = k.freqs_hz.size();
    const int K = static_cast<int>(k.u.rows());
    const int U = mc.symbols;
    ComplexMatrix P(U, F);  // e^{-j theta i}, i = 1..U
    for (Eigen::Index fi = 0; fi < F; ++fi) {
        const double theta = 2.0 * kPi * k.freqs_hz[fi] / k.sample_rate_hz * k.symbol_period;
        for (int i = 0; i < U; ++i)
            P(i, fi) = std::polar(1.0, -theta * (i + 1));
    }
    // Each symbol paired with the smoothing term it shares with its successor:
    // c = u + e^{-j theta} v. The two unpaired halves at the ends of a finite
    // run vanish as U grows but carry the 1/f^{N+1} factor, so they are left out.
    ComplexMatrix c(K, F);
    for (Eigen::Index fi = 0; fi < F; ++fi) {
        const double theta = 2.0 * kPi * k.freqs_hz[fi] / k.sample_rate_hz * k.symbol_period;
        c.col(fi) = k.u.col(fi) + std::polar(1.0, -theta) * k.v.col(fi);
    }
    std::vector<RealVector> per(mc.realizations);
    parallel_for(mc.realizations, resolve_threads(mc.threads), [&](int r) {
        auto rng = trial_rng(mc.seed, 0x5053, static_cast<std::uint64_t>(r));
        ComplexMatrix xs(K, U);
        for (int i = 0; i < U; ++i)
            xs.col(i) = random_qam(K, cfg.qam_order, rng);
        const Eigen::RowVectorXcd S = c.cwiseProduct(xs * P).colwise().sum();
        per[r] = S.cwiseAbs2().transpose() / (U * k.symbol_period);
    });
    RealVector acc = RealVector::Zero(F);
    for (const auto& p : per)
        acc += p;
    return acc / mc.realizations;
}

double analytic_inband_level(const SystemConfig& cfg, const SmootherContext& ctx, HigherOrderForm form)
{
    const auto ks = cfg.subcarrier_set();
    const auto [kl, kh] = std::minmax_element(ks.begin(), ks.end());
    const int pts = 4 * static_cast<int>(ks.size());
    const double lo = (*kl - 0.5) * cfg.subcarrier_spacing_hz, hi = band_edge_hz(cfg);
    RealVector g(pts);
    for (int i = 0; i < pts; ++i)
        g[i] = lo + (hi - lo) * (i + 0.5) / pts;
    return psd_expected(psd_kernel(g, cfg, ctx, form)).mean();
}

namespace {

PsdEstimate finish_analytic(const RealVector& fgrid, const SystemConfig& cfg, const SmootherContext& ctx,
                            const MonteCarloSpec& mc, HigherOrderForm form, const std::string& tag)
{
    PsdKernel k = psd_kernel(fgrid, cfg, ctx, form);
    PsdEstimate e =
        to_estimate_referenced(fgrid, psd_monte_carlo(k, cfg, mc), analytic_inband_level(cfg, ctx, form), tag);
    e.band_edge_hz = band_edge_hz(cfg);
    e.segments = mc.realizations;
    return e;
}

}  // namespace

PsdEstimate analytic_psd_case0(const RealVector& fgrid_hz, const SystemConfig& cfg, const SmootherContext& ctx,
                               const MonteCarloSpec& mc)
{
    if (cfg.N != 0)
        throw CaseMismatchError("analytic_psd_case0 needs N = 0");
    return finish_analytic(fgrid_hz, cfg, ctx, mc, HigherOrderForm::Assembled, "case0");
}

PsdEstimate analytic_psd_case1(const RealVector& fgrid_hz, const SystemConfig& cfg, const SmootherContext& ctx,
                               const MonteCarloSpec& mc)
{
    if (cfg.N != 1)
        throw CaseMismatchError("analytic_psd_case1 needs N = 1");
    return finish_analytic(fgrid_hz, cfg, ctx, mc, HigherOrderForm::Assembled, "case1");
}

PsdEstimate analytic_psd_caseN(const RealVector& fgrid_hz, const SystemConfig& cfg, const SmootherContext& ctx,
                               const MonteCarloSpec& mc, HigherOrderForm form)
{
    if (cfg.N < 2)
        throw CaseMismatchError("analytic_psd_caseN needs N >= 2");
    return finish_analytic(fgrid_hz, cfg, ctx, mc, form, "caseN" + std::to_string(cfg.N));
}

PsdEstimate analytic_psd(const RealVector& fgrid_hz, const SystemConfig& cfg, const SmootherContext& ctx,
                         const MonteCarloSpec& mc)
{
    if (cfg.N == 0)
        return analytic_psd_case0(fgrid_hz, cfg, ctx, mc);
    if (cfg.N == 1)
        return analytic_psd_case1(fgrid_hz, cfg, ctx, mc);
    return analytic_psd_caseN(fgrid_hz, cfg, ctx, mc);
}

ComplexSignal simulated_stream(const SystemConfig& cfg, const SmootherContext& ctx, int symbols,
                               std::mt19937_64& rng)
{
    const int K = static_cast<int>(cfg.subcarrier_set().size());
    std::vector<ComplexVector> data;
    data.reserve(symbols);
    for (int i = 0; i < symbols; ++i)
        data.push_back(random_qam(K, cfg.qam_order, rng));
    ComplexSignal s;
    s.samples = assemble_stream(data, ctx, cfg);
    s.sample_interval = 1.0 / cfg.sample_rate_hz();
    return s;
}

PsdEstimate analytic_psd_welch_view(const SystemConfig& cfg, const SmootherContext& ctx, const MonteCarloSpec& mc,
                                    PsdEvaluation how, int segment, int max_bin, int over)
{
    if (segment < 2 || max_bin < 1 || over < 1)
        throw DomainError("analytic_psd_welch_view: bad segment, bin range or oversampling");
    const double bin_hz = cfg.sample_rate_hz() / segment;
    const int reach = 6;  // Hann main lobe plus the first sidelobes, in bins
    const int half = (max_bin + reach) * over;
    RealVector fine(2 * half);
    for (int i = 0; i < 2 * half; ++i)
        fine[i] = ((i - half) + 0.5) / over * bin_hz;
    const PsdKernel k = psd_kernel(fine, cfg, ctx);
    const RealVector lin = how == PsdEvaluation::Expected ? psd_expected(k) : psd_monte_carlo(k, cfg, mc);

    // |sum_n w[n] e^{-j2pi nu n / S}|^2 at nu = (j + 0.5)/over bins
    std::vector<double> ker(2 * reach * over);
    for (std::size_t j = 0; j < ker.size(); ++j) {
        const double nu = (static_cast<double>(j) - reach * over + 0.5) / over;
        cplx a = 0.0;
        for (int n = 0; n < segment; ++n)
            a += (0.5 - 0.5 * std::cos(2.0 * kPi * n / segment)) * std::polar(1.0, -2.0 * kPi * nu * n / segment);
        ker[j] = std::norm(a);
    }
    RealVector f(2 * max_bin + 1), out(2 * max_bin + 1);
    for (int b = -max_bin; b <= max_bin; ++b) {
        double acc = 0, wsum = 0;
        for (std::size_t j = 0; j < ker.size(); ++j) {
            acc += ker[j] * lin[half + b * over + static_cast<int>(j) - reach * over];
            wsum += ker[j];
        }
        f[b + max_bin] = b * bin_hz;
        out[b + max_bin] = acc / wsum;
    }
    PsdEstimate e = to_estimate(f, out, band_edge_hz(cfg), "analytic-welch-view");
    e.band_edge_hz = band_edge_hz(cfg);
    e.segments = how == PsdEvaluation::Expected ? 0 : mc.realizations;
    return e;
}

RealVector far_field_grid(const SystemConfig& cfg, double lo, double hi, int points)
{
    if (!(lo > 0.0) || !(hi > lo) || points < 2)
        throw DomainError("far_field_grid: need 0 < lo < hi and at least two points");
    const auto ks = cfg.subcarrier_set();
    const auto [kl, kh] = std::minmax_element(ks.begin(), ks.end());
    const double B = (*kh - *kl + 1) * cfg.subcarrier_spacing_hz;
    RealVector g(points);
    for (int i = 0; i < points; ++i)
        g[i] = band_edge_hz(cfg) + B * lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
    return g;
}

double fit_slope(const PsdEstimate& psd, double f_lo, double f_hi)
{
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (Eigen::Index i = 0; i < psd.freqs_hz.size(); ++i) {
        const double f = psd.freqs_hz[i];
        if (f < f_lo || f > f_hi || !(f > psd.band_edge_hz))
            continue;
        const double x = std::log10(f - psd.band_edge_hz);
        const double y = psd.values_db[i];
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 10)
        throw InsufficientDataError("fit_slope: " + std::to_string(n) + " points in range, need at least 10");
    const double den = n * sxx - sx * sx;
    if (!(den > 0.0))
        throw InsufficientDataError("fit_slope: frequencies in range do not spread");
    return (n * sxy - sx * sy) / den;
}

}  // namespace ncofdm
