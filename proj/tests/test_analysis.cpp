// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "ncofdm/analysis.hpp"

using namespace ncofdm;

namespace {

SystemConfig small_cfg(int N, int L)
{
    SystemConfig cfg;
    cfg.N = N;
    cfg.L = L;
    return cfg;
}

// E over gamma ~ Exp(mean g) of Q(sqrt(c gamma))
double rayleigh_q(double c, double g)
{
    const double x = c * g / 2.0;
    return 0.5 * (1.0 - std::sqrt(x / (1.0 + x)));
}

}  // namespace

TEST_CASE("16-QAM BER weights reduce to the textbook three-term form")
{
    const auto t = qam_ber_terms(16);
    REQUIRE(t.size() == 3);
    CHECK(t[0].odd == 1);
    CHECK(t[0].weight == doctest::Approx(0.75));
    CHECK(t[1].odd == 3);
    CHECK(t[1].weight == doctest::Approx(0.5));
    CHECK(t[2].odd == 5);
    CHECK(t[2].weight == doctest::Approx(-0.25));
    // 4-QAM: Gray bit error is exactly Q(sqrt(gamma))
    const auto q = qam_ber_terms(4);
    REQUIRE(q.size() == 1);
    CHECK(q[0].weight == doctest::Approx(1.0));
    CHECK_THROWS_AS(qam_ber_terms(8), ConfigError);
}

TEST_CASE("SINR density integrates to one and stays non-negative")
{
    BerSeriesParams p;
    p.sigma_n_sq = 0.1 * p.M;
    for (double w : {0.0, 0.05, 0.3}) {
        p.sigma_w_sq = w;
        const double top = w > 0 ? 1.0 / (2.0 * w) : 400.0;
        boost::math::quadrature::tanh_sinh<double> integ;
        const double s = integ.integrate([&](double g) { return sinr_pdf(g, p); }, 0.0, top);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
        for (int i = 0; i <= 10000; ++i)
            CHECK(sinr_pdf(top * 1.2 * i / 10000.0, p) >= 0.0);
    }
    p.sigma_w_sq = 0.3;
    CHECK(sinr_pdf(1.0 / 0.6 + 1e-9, p) == 0.0);
}

TEST_CASE("instantaneous SINR limits and monotonicity")
{
    CHECK(instantaneous_sinr(2.0, 0.0, 4.0, 2048) == doctest::Approx(2048.0 * 2.0 / 4.0));
    CHECK(instantaneous_sinr(1e12, 0.01, 1.0, 2048) == doctest::Approx(50.0).epsilon(1e-6));
    CHECK_THROWS_AS(instantaneous_sinr(1.0, 0.0, 0.0, 2048), DegenerateInputError);
    double prev = 0.0;
    for (double h = 0.01; h < 100.0; h *= 1.3) {
        const double g = instantaneous_sinr(h, 0.02, 1.0, 64);
        CHECK(g > prev);
        prev = g;
    }
}

TEST_CASE("quadrature BER matches the Rayleigh closed expectation without smoothing")
{
    BerSeriesParams p;
    for (double snr_db : {0.0, 10.0, 20.0}) {
        const double gbar = std::pow(10.0, snr_db / 10.0);
        p.sigma_n_sq = p.M / gbar;
        const double c = 3.0 / 15.0;
        const double ref = 0.75 * rayleigh_q(c, gbar) + 0.5 * rayleigh_q(9 * c, gbar) - 0.25 * rayleigh_q(25 * c, gbar);
        CHECK(ber_numeric_quadrature(p) == doctest::Approx(ref).epsilon(1e-8));
    }
}

TEST_CASE("closed-form BER without smoothing agrees with quadrature where the series converges")
{
    BerSeriesParams p;
    for (double snr_db : {-10.0, -8.0, -6.0}) {
        p.sigma_n_sq = p.M / std::pow(10.0, snr_db / 10.0);
        const double c = ber_closed_form(p);
        CHECK(c == doctest::Approx(ber_numeric_quadrature(p)).epsilon(1e-6));
        CHECK(c >= 0.0);
        CHECK(c <= 0.5);
    }
    p.sigma_n_sq = p.M;  // 0 dB per subcarrier: outside the radius of convergence
    CHECK_THROWS_AS(ber_closed_form(p), ConvergenceError);
}

TEST_CASE("closed-form BER with smoothing interference agrees with quadrature")
{
    BerSeriesParams p;
    for (double w : {0.1, 0.3}) {
        for (double n : {0.01, 0.3, 1.0}) {
            p.sigma_w_sq = w;
            p.sigma_n_sq = n * p.M;
            const auto d = ber_closed_form_detail(p);
            CHECK(d.ber == doctest::Approx(ber_numeric_quadrature(p)).epsilon(5e-3));
            CHECK(d.epsilon == doctest::Approx(n / (2 * w) / 20.0));
        }
    }
}

TEST_CASE("closed-form BER refuses interference too weak for the series")
{
    BerSeriesParams p;
    p.sigma_w_sq = 3e-6;
    p.sigma_n_sq = 0.05 * p.M;
    CHECK_THROWS_AS(ber_closed_form(p), ConvergenceError);
    CHECK_NOTHROW(ber_numeric_quadrature(p));
    // inner-sum rounding times outer-term size swamps the result here
    p.sigma_w_sq = 0.05;
    for (double n : {0.01, 0.03, 0.1}) {
        p.sigma_n_sq = n * p.M;
        CHECK_THROWS_AS(ber_closed_form(p), ConvergenceError);
    }
    p.sigma_n_sq = p.M;
    const auto d = ber_closed_form_detail(p);
    CHECK(d.error_estimate < 1e-3 * d.ber);
}

TEST_CASE("BER grows with smoothing interference and falls with M")
{
    BerSeriesParams p;
    p.sigma_n_sq = 0.1 * 2048;
    double prev = 0.0;
    for (double w : {0.0, 0.01, 0.05, 0.1, 0.2, 0.4}) {
        p.sigma_w_sq = w;
        const double b = ber_numeric_quadrature(p);
        CHECK(b >= prev);
        prev = b;
    }
    p.sigma_w_sq = 0.05;
    double last = 1.0;
    for (int M : {512, 1024, 2048, 4096}) {
        p.M = M;
        const double b = ber_numeric_quadrature(p);
        CHECK(b <= last);
        last = b;
    }
}

TEST_CASE("smooth-signal tails absorbed by the cyclic prefix cause no interference")
{
    const SystemConfig cfg = small_cfg(2, 100);
    const auto ctx = build_smoother(cfg);
    const RealVector s = smooth_interference_power(ctx, single_tap_profile(0.0), cfg);
    CHECK(s.maxCoeff() == 0.0);
    CHECK(tail_lengths(single_tap_profile(0.0), cfg)[0] == 0);
    CHECK(tail_lengths(eva_profile(), small_cfg(2, 144))[8] == 77);
}

TEST_CASE("smooth interference quadratic form matches a Monte-Carlo of the same tails")
{
    const SystemConfig cfg = small_cfg(2, 144);
    const auto ctx = build_smoother(cfg);
    const auto prof = eva_profile();
    const RealVector s = smooth_interference_power(ctx, prof, cfg);
    std::mt19937_64 rng(11);
    const RealVector mc = smooth_interference_monte_carlo(ctx, prof, cfg, 3000, rng);
    // the quadratic form is E|F U Q_f b|^2 itself; the factor 2 enters only the SINR
    CHECK(mc.mean() / s.mean() == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("longer delays never reduce total smooth interference")
{
    const SystemConfig cfg = small_cfg(2, 144);
    const auto ctx = build_smoother(cfg);
    double prev = -1.0;
    for (double scale : {0.25, 0.5, 1.0, 1.5, 2.0}) {
        ChannelProfile p = eva_profile();
        for (auto& t : p.taps)
            t.delay_s *= scale;
        const double total = smooth_interference_power(ctx, p, cfg).sum();
        CHECK(total >= prev);
        prev = total;
    }
}

TEST_CASE("average SINR without smoothing equals the Rayleigh mean of M alpha / sigma_n^2")
{
    // E{alpha / (sigma_n^2/M)} with alpha ~ Exp(1)
    CHECK(mean_sinr(0.0, 4.0, 2048, 1.0) == doctest::Approx(512.0).epsilon(1e-9));
    RealVector w = RealVector::Constant(4, 0.0);
    CHECK(average_sinr(w, 4.0, 2048) == doctest::Approx(512.0).epsilon(1e-9));
    CHECK(noise_var_for_ebn0(10.0, SystemConfig{}) == doctest::Approx(2048.0 / 40.0));
}

TEST_CASE("timing-offset cases reduce to the interference-free ratio")
{
    SystemConfig cfg = small_cfg(2, 144);
    SmootherContext ctx = build_smoother(cfg);
    ctx.A.setZero();
    ctx.B.setZero();
    SinrCaseInputs in;
    in.cfg = cfg;
    in.ctx = &ctx;
    in.profile = single_tap_profile(0.0);
    in.noise_var = 2.0;
    in.sto_samples = 0.0;
    CHECK(sinr_case1(in).gamma == doctest::Approx(256.0 / 2.0));
    CHECK(sinr_case1(in).L1 == 1);

    // short smoothing ending inside the CP leaves the early window clean
    SystemConfig c2 = small_cfg(2, 20);
    const SmootherContext ctx2 = build_smoother(c2);
    in.cfg = c2;
    in.ctx = &ctx2;
    in.sto_samples = 10.0;
    CHECK(sinr_case2(in).gamma == doctest::Approx(128.0).epsilon(1e-9));
}

TEST_CASE("timing-offset case geometry is enforced")
{
    const SystemConfig cfg = small_cfg(2, 144);
    const SmootherContext ctx = build_smoother(cfg);
    SinrCaseInputs in;
    in.cfg = cfg;
    in.ctx = &ctx;
    in.profile = eva_profile();
    in.noise_var = 1.0;
    in.sto_samples = 97.0;
    CHECK_THROWS_AS(sinr_case2(in), CaseMismatchError);
    CHECK(sinr_case3(in).L2 == 2);
    in.sto_samples = 30.0;
    CHECK_THROWS_AS(sinr_case3(in), CaseMismatchError);
    CHECK(sinr_case1(in).L1 == 6);
    in.sto_samples = -1.0;
    CHECK_THROWS_AS(sinr_case1(in), DomainError);
}

TEST_CASE("early-window cases meet continuously at the CP boundary")
{
    const SystemConfig cfg = small_cfg(2, 1000);
    const SmootherContext ctx = build_smoother(cfg);
    SinrCaseInputs in;
    in.cfg = cfg;
    in.ctx = &ctx;
    in.profile = eva_profile();
    in.noise_var = 0.5;
    in.sto_samples = cfg.Mcp - 77.0;
    const CaseSinr a = sinr_case2(in);
    const CaseSinr b = sinr_case3(in);
    CHECK(b.interference == doctest::Approx(a.interference).epsilon(1e-9));
    CHECK(a.interference >= 0.0);
}

TEST_CASE("halving the integration step barely moves the case integrals")
{
    const SystemConfig cfg = small_cfg(2, 144);
    const SmootherContext ctx = build_smoother(cfg);
    SinrCaseInputs in;
    in.cfg = cfg;
    in.ctx = &ctx;
    in.profile = eva_profile();
    in.cfo = 0.074;
    in.noise_var = 0.1;
    for (auto [which, d1] : {std::pair{SyncCase::LateWindow, 30.0}, std::pair{SyncCase::EarlyWindow, 30.0},
                             std::pair{SyncCase::EarlyWindowIsi, 97.0}}) {
        in.sto_samples = d1;
        in.oversample = 8;
        const double a = sinr_case(in, which).interference;
        in.oversample = 16;
        const double b = sinr_case(in, which).interference;
        CHECK(std::fabs(a - b) / b < 1e-3);
    }
    CHECK(std::fabs(smooth_energy(ctx, cfg, 8) / smooth_energy(ctx, cfg, 16) - 1.0) < 1e-3);
}

TEST_CASE("late-window SINR matches a simulated chain")
{
    const SystemConfig cfg = small_cfg(2, 144);
    const SmootherContext ctx = build_smoother(cfg);
    SinrCaseInputs in;
    in.cfg = cfg;
    in.ctx = &ctx;
    in.profile = eva_profile();
    in.cfo = 0.074;
    in.noise_var = noise_var_for_ebn0(20.0, cfg);
    in.sto_samples = 30.0;
    const double a = 10 * std::log10(sinr_case1(in).gamma);
    const double m = 10 * std::log10(sinr_case_monte_carlo(in, SyncCase::LateWindow, 200, 5).gamma);
    CHECK(std::fabs(a - m) < 1.0);
}

TEST_CASE("Eb/N0 without a smooth signal is the plain OFDM value")
{
    const SystemConfig cfg = small_cfg(2, 144);
    SmootherContext ctx = build_smoother(cfg);
    ctx.A.setZero();
    ctx.B.setZero();
    const double nv = noise_var_for_reference(30.0, cfg);
    CHECK(nv == doctest::Approx(256.0 * 8.0 / (4.0 * 1000.0)));
    CHECK(ebn0_low_interference(nv, ctx, cfg) == doctest::Approx(30.0));
}

TEST_CASE("smooth-signal energy matches a Monte-Carlo of the continuous smooth signal")
{
    const SystemConfig cfg = small_cfg(2, 1000);
    const SmootherContext ctx = build_smoother(cfg);
    // trapezoid grid, 4 points per sample, independent of the midpoint rule
    const int per = 4;
    const int pts = static_cast<int>(cfg.TL()) * per + 1;
    ComplexMatrix F(pts, cfg.N + 1);
    for (int j = 0; j < pts; ++j)
        for (int n = 0; n <= cfg.N; ++n)
            F(j, n) = basis_derivative(cfg, n, 0, -cfg.Mcp + static_cast<double>(j) / per);
    std::mt19937_64 rng(21);
    double acc = 0;
    const int trials = 400;
    for (int t = 0; t < trials; ++t) {
        const ComplexVector xp = random_qam(256, 16, rng);
        const ComplexVector xc = random_qam(256, 16, rng);
        const ComplexVector w = F * smoother_coefficients(xp, xc, ctx);
        double e = 0.5 * (std::norm(w[0]) + std::norm(w[pts - 1]));
        for (int j = 1; j + 1 < pts; ++j)
            e += std::norm(w[j]);
        acc += e / per;
    }
    CHECK(acc / trials == doctest::Approx(smooth_energy(ctx, cfg, 8)).epsilon(0.03));
}

TEST_CASE("Eb/N0 falls with more continuity orders and longer smoothing")
{
    double prev = 1e9;
    for (int N = 0; N <= 4; ++N) {
        const SystemConfig cfg = small_cfg(N, 144);
        const double e = ebn0_low_interference(noise_var_for_reference(30.0, cfg), build_smoother(cfg), cfg);
        CHECK(e < prev);
        prev = e;
    }
    prev = 1e9;
    for (int L : {36, 72, 144, 1000}) {
        const SystemConfig cfg = small_cfg(2, L);
        const double e = ebn0_low_interference(noise_var_for_reference(30.0, cfg), build_smoother(cfg), cfg);
        CHECK(e < prev);
        prev = e;
    }
}

TEST_CASE("instrumented multiply counts")
{
    for (int L : {36, 144, 1000}) {
        const SystemConfig cfg = small_cfg(2, L);
        CHECK(complexity_count(Scheme::LowInterference, cfg) == complexity_formula_low_interference(cfg));
    }
    const SystemConfig cfg = small_cfg(2, 144);
    CHECK(complexity_count(Scheme::BaselineProjection, cfg) == 4LL * 2 * 256 * 256);
    const long long a = complexity_count(Scheme::LowInterference, small_cfg(2, 100));
    const long long b = complexity_count(Scheme::LowInterference, small_cfg(2, 200));
    const long long c = complexity_count(Scheme::LowInterference, small_cfg(2, 300));
    CHECK(c - b == b - a);
}

TEST_CASE("simulated perfect-sync SINR and BER follow the Rayleigh expectations without smoothing")
{
    const SystemConfig cfg = small_cfg(2, 144);
    SmootherContext ctx = build_smoother(cfg);
    ctx.A.setZero();
    ctx.B.setZero();
    const double nv = noise_var_for_ebn0(10.0, cfg);
    const auto s = sinr_perfect_sync_monte_carlo(ctx, eva_profile(), cfg, nv, 4000, 20, 3);
    CHECK(s.symbols == 4000);
    CHECK(std::fabs(s.mean_db - 10 * std::log10(mean_sinr(0.0, nv, cfg.M))) < 0.3);

    BerSeriesParams p;
    p.sigma_n_sq = nv;
    const auto b = ber_monte_carlo(ctx, eva_profile(), cfg, nv, 2000, 20, 3);
    CHECK(b.bits == 2000LL * 256 * 4);
    CHECK(b.ber == doctest::Approx(ber_numeric_quadrature(p)).epsilon(0.1));
    CHECK_THROWS_AS(ber_monte_carlo(ctx, eva_profile(), cfg, nv, 10, 20, 3), DomainError);
    CHECK_THROWS_AS(sinr_perfect_sync_monte_carlo(ctx, eva_profile(), cfg, nv, 40, 1, 3), DomainError);
}
