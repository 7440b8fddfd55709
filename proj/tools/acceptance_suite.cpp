// SPDX-License-Identifier: Apache-2.0
#include "acceptance_suite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>

#include "ncofdm/analysis.hpp"
#include "ncofdm/channel.hpp"
#include "ncofdm/spectral.hpp"
#include "ncofdm/sync.hpp"

namespace ncofdm::acceptance {

namespace {

// tolerances
constexpr double kContinuityTol = 1e-8;
constexpr double kSlopeN0 = -40.0, kSlopeN1 = -60.0, kSlopeTol = 5.0;
constexpr double kSlopeSteeperThan = -60.0;
constexpr double kWelchTolDb = 3.0;
constexpr int kWelchNearBins = 60;  // bins past the band edge counted as near band
constexpr double kSinrTolDb = 0.5;
constexpr double kBerDegenerateTol = 0.01;
constexpr double kBerGridTol = 0.005;
constexpr double kBerSimTol = 0.25;
constexpr double kBerSimFloor = 1e-3;
constexpr double kCaseGapTolDb = 1.0;
constexpr double kEbn0Reference = 30.0;
constexpr double kTrainingRatio = 2.0;

SystemConfig config(int N, int L)
{
    SystemConfig cfg;
    cfg.N = N;
    cfg.L = L;
    cfg.validate();
    return cfg;
}

double db(double x)
{
    return 10.0 * std::log10(x);
}

std::string fmt(double v, int prec = 3)
{
    std::ostringstream s;
    s << std::setprecision(prec) << v;
    return s.str();
}

Outcome continuity(const Options& opt, std::ostream& log)
{
    double worst = 0.0;
    int junctions = 0;
    for (int L : {144, 1000})
        for (int N = 0; N <= 4; ++N) {
            const SystemConfig cfg = config(N, L);
            const SmootherContext ctx = build_smoother(cfg);
            auto rng = trial_rng(opt.seed, 1, static_cast<std::uint64_t>(10 * L + N));
            ComplexVector prev = random_qam(cfg.K, cfg.qam_order, rng);
            double w = 0.0;
            for (int i = 0; i < 100; ++i) {
                const ComplexVector cur = random_qam(cfg.K, cfg.qam_order, rng);
                w = std::max(w, boundary_residual(prev, cur, ctx, cfg));
                prev = cur;
                ++junctions;
            }
            log << "  N=" << N << " L=" << L << " worst residual " << fmt(w) << "\n";
            worst = std::max(worst, w);
        }
    return {1, worst < kContinuityTol,
            "worst scale-relative residual " + fmt(worst) + " over " + std::to_string(junctions) +
                " junctions (limit " + fmt(kContinuityTol) + ")"};
}

Outcome psd_slopes(const Options& opt, std::ostream& log)
{
    MonteCarloSpec mc;
    mc.seed = opt.seed;
    mc.threads = opt.threads;
    auto slope = [&](int N, int L) {
        const SystemConfig cfg = config(N, L);
        const SmootherContext ctx = build_smoother(cfg);
        const double edge = band_edge_hz(cfg);
        const double B = 2.0 * edge;
        const PsdEstimate psd = analytic_psd(far_field_grid(cfg, 10.0, 100.0, 120), cfg, ctx, mc);
        const double s = fit_slope(psd, edge + 10.0 * B, edge + 100.0 * B);
        log << "  N=" << N << " L=" << L << " slope over [10B, 100B] past the edge: " << fmt(s, 4)
            << " dB/decade\n";
        return s;
    };
    const double s0 = slope(0, 144), s1 = slope(1, 144), s2 = slope(2, 1000), s2s = slope(2, 36);
    const bool a = std::fabs(s0 - kSlopeN0) <= kSlopeTol;
    const bool b = std::fabs(s1 - kSlopeN1) <= kSlopeTol;
    const bool c = s2 < kSlopeSteeperThan;
    const bool d = s2s > s2;
    log << "  N=0 in -40+-5: " << a << ", N=1 in -60+-5: " << b << ", N=2/L=1000 below -60: " << c
        << ", N=2/L=36 shallower than N=2/L=1000: " << d << "\n";
    return {2, a && b && c && d,
            "slopes N0 " + fmt(s0, 4) + ", N1 " + fmt(s1, 4) + ", N2/L1000 " + fmt(s2, 4) + ", N2/L36 " +
                fmt(s2s, 4) + " dB/decade"};
}

Outcome welch_agreement(const Options& opt, std::ostream& log)
{
    MonteCarloSpec mc;
    mc.seed = opt.seed;
    mc.threads = opt.threads;
    double worst = 0.0;
    for (int N : {0, 1}) {
        const SystemConfig cfg = config(N, 144);
        const SmootherContext ctx = build_smoother(cfg);
        const auto ks = cfg.subcarrier_set();
        const int edge_bin = *std::max_element(ks.begin(), ks.end());
        const int max_bin = edge_bin + kWelchNearBins;
        const PsdEstimate view =
            analytic_psd_welch_view(cfg, ctx, mc, PsdEvaluation::MonteCarlo, cfg.M, max_bin, 4);
        auto rng = trial_rng(opt.seed, 3, static_cast<std::uint64_t>(N));
        WelchOptions wo;
        wo.segment = cfg.M;
        wo.overlap = cfg.M / 4;
        wo.inband_half_width_hz = band_edge_hz(cfg);
        const PsdEstimate sim = welch_psd(simulated_stream(cfg, ctx, 2000, rng), wo);
        double w = 0.0;
        for (int b = -max_bin; b <= max_bin; ++b) {
            const double a = view.values_db[b + max_bin];
            const double s = sim.values_db[b + cfg.M / 2];
            w = std::max(w, std::fabs(a - s));
        }
        log << "  N=" << N << " largest |analytic - Welch| over |bin| <= " << max_bin << ": " << fmt(w) << " dB\n";
        worst = std::max(worst, w);
    }
    return {3, worst <= kWelchTolDb,
            "largest near-band deviation " + fmt(worst) + " dB for N=0,1 (limit " + fmt(kWelchTolDb) + " dB)"};
}

Outcome sinr_perfect(const Options& opt, std::ostream& log)
{
    double worst = 0.0;
    std::string where;
    for (auto [N, L] : {std::pair{4, 1000}, std::pair{2, 144}}) {
        const SystemConfig cfg = config(N, L);
        const SmootherContext ctx = build_smoother(cfg);
        const ChannelProfile prof = eva_profile();
        const RealVector sw = smooth_interference_power(ctx, prof, cfg);
        for (int e = 0; e <= 30; e += 5) {
            const double nv = noise_var_for_ebn0(e, cfg);
            const double a = db(average_sinr(sw, nv, cfg.M));
            const auto m = sinr_perfect_sync_monte_carlo(ctx, prof, cfg, nv, 10000, 20,
                                                         opt.seed + static_cast<std::uint64_t>(e), opt.threads);
            const double gap = std::fabs(m.mean_db - a);
            log << "  N=" << N << " L=" << L << " Eb/N0 " << e << " dB: analytic " << fmt(a, 5) << " dB, simulated "
                << fmt(m.mean_db, 5) << " dB, gap " << fmt(gap) << "\n";
            if (gap > worst) {
                worst = gap;
                where = "N=" + std::to_string(N) + " L=" + std::to_string(L) + " " + std::to_string(e) + " dB";
            }
        }
    }
    return {4, worst <= kSinrTolDb,
            "largest analytic-vs-simulated gap " + fmt(worst) + " dB at " + where + " (limit " + fmt(kSinrTolDb) +
                " dB)"};
}

Outcome ber(const Options& opt, std::ostream& log)
{
    // (a) no smoothing interference against the quadrature oracle
    double worst_a = 0.0;
    for (double snr : {-10.0, -8.0, -6.0}) {
        BerSeriesParams p;
        p.sigma_n_sq = p.M / std::pow(10.0, snr / 10.0);
        const double c = ber_closed_form(p), q = ber_numeric_quadrature(p);
        worst_a = std::max(worst_a, std::fabs(c - q) / q);
        log << "  (a) per-subcarrier SNR " << snr << " dB: series " << fmt(c, 8) << ", quadrature " << fmt(q, 8)
            << "\n";
    }
    const bool a = worst_a <= kBerDegenerateTol;

    // (b) 5 x 5 grid of interference and noise levels
    double worst_b = 0.0;
    int evaluated = 0;
    for (double w : {0.1, 0.15, 0.2, 0.3, 0.5})
        for (double n : {0.01, 0.03, 0.1, 0.3, 1.0}) {
            BerSeriesParams p;
            p.sigma_w_sq = w;
            p.sigma_n_sq = n * p.M;
            const double c = ber_closed_form(p), q = ber_numeric_quadrature(p);
            worst_b = std::max(worst_b, std::fabs(c - q) / q);
            ++evaluated;
        }
    log << "  (b) " << evaluated << " grid points, worst relative gap " << fmt(worst_b) << "\n";
    const bool b = worst_b <= kBerGridTol;

    // (c) against simulation at the EVA settings, N=2, L=144
    const SystemConfig cfg = config(2, 144);
    const SmootherContext ctx = build_smoother(cfg);
    const ChannelProfile prof = eva_profile();
    const RealVector sw = smooth_interference_power(ctx, prof, cfg);
    bool c = true;
    int checked = 0, closed_failures = 0;
    for (int e = 0; e <= 30; e += 5) {
        const double nv = noise_var_for_ebn0(e, cfg);
        const auto sim = ber_monte_carlo(ctx, prof, cfg, nv, 10000, 20, opt.seed + static_cast<std::uint64_t>(e),
                                         opt.threads);
        if (sim.ber < kBerSimFloor)
            continue;
        ++checked;
        BerSeriesParams p;
        p.sigma_n_sq = nv;
        p.J = cfg.qam_order;
        p.M = cfg.M;
        const double quad = average_ber(sw, p, false);
        std::string closed = "unavailable";
        try {
            const double v = average_ber(sw, p, true);
            closed = fmt(v, 5);
            if (std::fabs(v - sim.ber) / sim.ber > kBerSimTol)
                c = false;
        } catch (const ConvergenceError& ex) {
            c = false;
            ++closed_failures;
            closed = std::string("not evaluable (") + ex.what() + ")";
        }
        log << "  (c) Eb/N0 " << e << " dB: simulated " << fmt(sim.ber, 5) << ", quadrature " << fmt(quad, 5)
            << " (rel " << fmt((quad - sim.ber) / sim.ber, 3) << "), closed form " << closed << "\n";
    }
    if (checked == 0)
        c = false;
    std::string summary = std::string("(a) ") + (a ? "pass" : "FAIL") + " worst " + fmt(worst_a) + "; (b) " +
                          (b ? "pass" : "FAIL") + " worst " + fmt(worst_b) + "; (c) " + (c ? "pass" : "FAIL");
    if (closed_failures)
        summary += ", closed form not evaluable at " + std::to_string(closed_failures) + "/" +
                   std::to_string(checked) + " simulated points";
    return {5, a && b && c, summary};
}

Outcome sinr_cases(const Options& opt, std::ostream& log)
{
    bool order = true, monotone = true, gap_ok = true;
    double worst_gap = 0.0;
    std::vector<std::vector<double>> gamma1(5);
    for (int N = 0; N <= 4; ++N) {
        const SystemConfig cfg = config(N, 1000);
        const SmootherContext ctx = build_smoother(cfg);
        SinrCaseInputs in;
        in.cfg = cfg;
        in.ctx = &ctx;
        in.profile = eva_profile();
        in.cfo = 0.074;
        for (int e = 0; e <= 30; e += 5) {
            in.noise_var = noise_var_for_ebn0(e, cfg);
            in.sto_samples = 30;
            const double g1 = sinr_case1(in).gamma, g2 = sinr_case2(in).gamma;
            in.sto_samples = 97;
            const double g3 = sinr_case3(in).gamma;
            gamma1[N].push_back(g1);
            if (!(g2 > g1) || !(g2 > g3))
                order = false;
            log << "  N=" << N << " Eb/N0 " << e << " dB: gamma_I " << fmt(db(g1), 5) << ", gamma_II "
                << fmt(db(g2), 5) << ", gamma_III " << fmt(db(g3), 5) << " dB\n";
            if (e <= 20 && N % 2 == 0) {
                for (auto [which, d1] : {std::pair{SyncCase::LateWindow, 30.0}, std::pair{SyncCase::EarlyWindow, 30.0},
                                         std::pair{SyncCase::EarlyWindowIsi, 97.0}}) {
                    in.sto_samples = d1;
                    const double a = db(sinr_case(in, which).gamma);
                    const double m = db(sinr_case_monte_carlo(in, which, 1000,
                                                              opt.seed + static_cast<std::uint64_t>(100 * N + e))
                                            .gamma);
                    worst_gap = std::max(worst_gap, std::fabs(a - m));
                    if (std::fabs(a - m) > kCaseGapTolDb)
                        gap_ok = false;
                }
            }
        }
    }
    for (std::size_t s = 0; s < gamma1[0].size(); ++s)
        for (int N = 1; N <= 4; ++N)
            if (!(gamma1[N][s] < gamma1[N - 1][s]))
                monotone = false;
    log << "  gamma_I at 30 dB for N=0..4:";
    for (int N = 0; N <= 4; ++N)
        log << " " << fmt(db(gamma1[N].back()), 4);
    log << " dB\n";
    return {6, order && monotone && gap_ok,
            std::string("orderings ") + (order ? "hold" : "BROKEN") + "; gamma_I decreasing in N: " +
                (monotone ? "yes" : "NO") + "; worst analytic-vs-simulation gap " + fmt(worst_gap) + " dB (" +
                (gap_ok ? "within" : "OUTSIDE") + " " + fmt(kCaseGapTolDb) + " dB)"};
}

Outcome ebn0(const Options& opt, std::ostream& log)
{
    auto value = [](int N, int L) {
        const SystemConfig cfg = config(N, L);
        return ebn0_low_interference(noise_var_for_reference(kEbn0Reference, cfg), build_smoother(cfg), cfg);
    };
    bool in_n = true, in_l = true;
    for (int L : {36, 72, 144, 1000}) {
        double prev = 1e300;
        log << "  L=" << L << ":";
        for (int N = 0; N <= 4; ++N) {
            const double v = value(N, L);
            log << " " << fmt(v, 5);
            if (!(v < prev))
                in_n = false;
            prev = v;
        }
        log << " dB for N=0..4\n";
    }
    for (int N = 0; N <= 4; ++N) {
        double prev = 1e300;
        for (int L : {36, 72, 144, 1000}) {
            const double v = value(N, L);
            if (!(v < prev))
                in_l = false;
            prev = v;
        }
    }
    const SystemConfig cfg = config(2, 144);
    const double nv = noise_var_for_reference(kEbn0Reference, cfg);
    const double low = value(2, 144);
    auto rng = trial_rng(opt.seed, 7, 0);
    const double dist = baseline_distortion_power(cfg, 2000, rng);
    const double base = ebn0_db(nv, dist, cfg);
    const double loss_low = kEbn0Reference - low, loss_base = kEbn0Reference - base;
    log << "  N=2 L=144 against " << kEbn0Reference << " dB: low-interference " << fmt(low, 5)
        << " dB (loss " << fmt(loss_low, 4) << "), least-norm baseline " << fmt(base, 5) << " dB (loss "
        << fmt(loss_base, 4) << ", distortion power " << fmt(dist, 4) << ")\n";
    const bool cmp = loss_low < loss_base;
    return {7, in_n && in_l && cmp,
            std::string("decreasing in N: ") + (in_n ? "yes" : "NO") + ", in L: " + (in_l ? "yes" : "NO") +
                "; loss at N=2/L=144 " + fmt(loss_low, 4) + " dB vs baseline " + fmt(loss_base, 4) + " dB"};
}

Outcome synchronization(const Options& opt, std::ostream& log)
{
    // (a) valley and recovery
    const SystemConfig cfg = config(4, 1000);
    const SmootherContext ctx = build_smoother(cfg);
    CorrelationInputs in{cfg, &ctx, eva_profile(), 0.0, 0.0};
    const int literal = -cfg.Mcp + cfg.L / 4;
    const auto emp = empirical_correlation({literal, -10}, in, 10000, opt.seed, opt.threads);
    const double valid_t = -cfg.Mcp + cfg.Mcp / 4.0;
    const double r_valid = std::abs(analytic_correlation_ts(valid_t, in));
    const double r_late = std::abs(analytic_correlation_ts(-10.0, in));
    log << "  (a) simulated |R(" << literal << ")| = " << fmt(std::abs(emp[0]), 4) << ", |R(-10)| = "
        << fmt(std::abs(emp[1]), 4) << "; the closed form covers t in [" << -cfg.Mcp << ", 0] only\n";
    log << "  (a) closed form |R(" << valid_t << ")| = " << fmt(r_valid, 4) << ", |R(-10)| = " << fmt(r_late, 4)
        << "\n";
    const bool a = std::abs(emp[0]) < std::abs(emp[1]) && r_valid < r_late;

    // (b) CP estimator over N
    std::vector<double> cp;
    for (int N = 4; N >= 0; --N) {
        StoExperiment ex;
        ex.cfg = config(N, 1000);
        ex.profile = eva_profile();
        ex.ebn0_db = {20};
        ex.trials = 1000;
        ex.seed = opt.seed;
        ex.threads = opt.threads;
        cp.push_back(sto_error_variance(ex)[0].mse);
        log << "  (b) CP estimator N=" << N << " L=1000 EVA 20 dB: MSE " << fmt(cp.back(), 6) << " samples^2\n";
    }
    const bool b = cp.front() > cp.back();

    // (c) training estimator against plain OFDM
    bool c = true;
    for (bool eva : {false, true}) {
        std::vector<StoRow> rows[2];
        for (int k = 0; k < 2; ++k) {
            StoExperiment ex;
            ex.cfg = config(4, 1000);
            ex.smoothed = k == 0;
            ex.estimator = StoEstimator::Training;
            ex.profile = eva ? eva_profile() : single_tap_profile();
            ex.ebn0_db = {10, 15, 20, 25, 30};
            ex.trials = 1000;
            ex.seed = opt.seed;
            ex.threads = opt.threads;
            rows[k] = sto_error_variance(ex);
        }
        for (std::size_t i = 0; i < rows[0].size(); ++i) {
            const double li = rows[0][i].mse, of = rows[1][i].mse;
            const double floor = 1.0 / rows[0][i].trials;
            const bool ok = li <= kTrainingRatio * std::max(of, floor);
            c = c && ok;
            log << "  (c) " << (eva ? "EVA " : "AWGN") << " Eb/N0 " << rows[0][i].ebn0_db
                << " dB: low-interference " << fmt(li, 5) << ", OFDM " << fmt(of, 5) << (ok ? "" : "  <-- breach")
                << "\n";
        }
    }
    return {8, a && b && c,
            std::string("(a) ") + (a ? "pass" : "FAIL") + "; (b) MSE N=4 " + fmt(cp.front(), 6) + " vs N=0 " +
                fmt(cp.back(), 6) + " " + (b ? "pass" : "FAIL") + "; (c) " + (c ? "pass" : "FAIL")};
}

Outcome complexity(const Options&, std::ostream& log)
{
    bool below = true, exact = true;
    for (int L : {36, 72, 144, 288, 500, 1000}) {
        const SystemConfig cfg = config(2, L);
        const long long li = complexity_count(Scheme::LowInterference, cfg);
        const long long f = complexity_formula_low_interference(cfg);
        const long long base = complexity_count(Scheme::BaselineProjection, cfg);
        below = below && li < base;
        exact = exact && li == f;
        log << "  L=" << L << ": low-interference " << li << " (formula " << f << "), baseline " << base << "\n";
    }
    return {9, below && exact,
            std::string("below baseline: ") + (below ? "yes" : "NO") + ", equals formula: " + (exact ? "yes" : "NO")};
}

}  // namespace

std::vector<Outcome> run(const Options& opt, std::ostream& out, std::ostream& log)
{
    const std::vector<std::function<Outcome(const Options&, std::ostream&)>> all{
        continuity, psd_slopes, welch_agreement, sinr_perfect, ber, sinr_cases, ebn0, synchronization, complexity};
    std::vector<Outcome> res;
    for (std::size_t i = 0; i < all.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), id) == opt.only.end())
            continue;
        log << "criterion " << id << ":\n";
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = all[i](opt, log);
        } catch (const std::exception& e) {
            o = {id, false, std::string("threw: ") + e.what()};
        }
        o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.summary << " ["
            << fmt(o.seconds, 3) << " s]\n";
        out.flush();
        res.push_back(o);
    }
    return res;
}

}  // namespace ncofdm::acceptance
