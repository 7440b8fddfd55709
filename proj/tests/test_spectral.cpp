// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "ncofdm/channel.hpp"
#include "ncofdm/spectral.hpp"

using namespace ncofdm;

namespace {

SystemConfig cfg_with(int N, int L)
{
    SystemConfig cfg;
    cfg.N = N;
    cfg.L = L;
    return cfg;
}

// Closed form of the taper bracket with cos/sin denominators, written out
// term by term for derivative order nb.
cplx bracket_cos_sin_form(int nb, double x, double TL)
{
    const cplx j(0, 1);
    const double s = std::sin(kPi * nb / 2.0), c = std::cos(kPi * nb / 2.0);
    cplx v = (nb == 0 ? 0.42 * TL * sinc(x) : 0.0);
    v -= std::cos(kPi * x) * (s + j * 2.0 * x * c) / (std::pow(kPi / TL, 1 - nb) * (1.0 - 4.0 * x * x));
    v += 0.16 * std::sin(kPi * x) * (j * s - x * c) / (std::pow(2.0 * kPi / TL, 1 - nb) * (1.0 - x * x));
    return v;
}

PsdEstimate synthetic(double edge, double power)
{
    PsdEstimate e;
    e.band_edge_hz = edge;
    const int n = 50;
    e.freqs_hz.resize(n);
    e.values_db.resize(n);
    for (int i = 0; i < n; ++i) {
        const double d = std::pow(10.0, 1.0 + 2.0 * i / (n - 1));
        e.freqs_hz[i] = edge + d;
        e.values_db[i] = -10.0 * power * std::log10(d);
    }
    return e;
}

}  // namespace

TEST_CASE("Welch estimate of white noise is flat")
{
    std::mt19937_64 rng(3);
    ComplexSignal s;
    s.samples = complex_gaussian(500 * 1536 + 512, 1.0, rng);
    WelchOptions opt;
    const PsdEstimate e = welch_psd(s, opt);
    CHECK(e.segments == 500);
    // per-bin spread is about 0.2 dB, so a handful of the 2048 bins sit past 0.5 dB
    const auto dev = e.values_db.array().abs();
    CHECK((dev < 0.5).count() >= 0.99 * 2048);
    CHECK(dev.maxCoeff() < 1.0);
    CHECK(std::sqrt(e.values_db.squaredNorm() / 2048) < 0.25);
}

TEST_CASE("Welch estimate peaks at a tone")
{
    const int n = 8192;
    ComplexSignal s;
    s.samples.resize(n);
    for (int i = 0; i < n; ++i)
        s.samples[i] = std::polar(1.0, 2.0 * kPi * 100.0 * i / 2048.0);
    const PsdEstimate e = welch_psd(s, {});
    Eigen::Index at;
    e.values_db.maxCoeff(&at);
    CHECK(e.freqs_hz[at] == doctest::Approx(100.0 / 2048.0));
}

TEST_CASE("Welch in-band level is stable when the segment count doubles")
{
    std::mt19937_64 rng(11);
    ComplexSignal s;
    s.samples = complex_gaussian(2 * 300 * 1536 + 512, 2.0, rng);
    WelchOptions opt;
    opt.inband_half_width_hz = 0.25;
    ComplexSignal half;
    half.samples = s.samples.head(300 * 1536 + 512);
    const double a = welch_psd(half, opt).inband_mean;
    const double b = welch_psd(s, opt).inband_mean;
    CHECK(std::fabs(10.0 * std::log10(b / a)) < 0.1);
    CHECK(b == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("Welch rejects a signal shorter than one segment")
{
    ComplexSignal s;
    s.samples = ComplexVector::Zero(100);
    CHECK_THROWS_AS(welch_psd(s, {}), InsufficientDataError);
}

TEST_CASE("slope fit recovers constructed power laws")
{
    CHECK(fit_slope(synthetic(1e6, 4), 0, 1e9) == doctest::Approx(-40.0).epsilon(0.0025));
    CHECK(fit_slope(synthetic(1e6, 6), 0, 1e9) == doctest::Approx(-60.0).epsilon(0.0017));
    CHECK(std::fabs(fit_slope(synthetic(1e6, 0), 0, 1e9)) < 0.1);
    CHECK_THROWS_AS(fit_slope(synthetic(1e6, 4), 1e6 + 10, 1e6 + 20), InsufficientDataError);
}

TEST_CASE("taper bracket matches quadrature and the cos/sin closed form")
{
    const SystemConfig cfg = cfg_with(2, 144);
    const double TL = cfg.TL();
    boost::math::quadrature::tanh_sinh<double> integ;
    for (int p = 0; p <= 3; ++p) {
        for (double x : {-3.3, -0.2, 0.37, 1.5, 7.9}) {
            auto part = [&](bool imag) {
                return integ.integrate(
                    [&](double tau) {
                        const cplx v = taper(cfg, tau, p) * std::polar(1.0, 2.0 * kPi * x * tau / TL - kPi * x);
                        return imag ? v.imag() : v.real();
                    },
                    0.0, TL);
            };
            const cplx q(part(false), part(true));
            const cplx b = blackman_bracket(p, x, TL);
            CHECK(std::abs(b - q) < 1e-8 * std::max(1.0, std::abs(q)) * std::pow(kPi / TL, p) * TL);
            CHECK(std::abs(b - bracket_cos_sin_form(p, x, TL)) < 1e-9 * std::max(1.0, std::abs(b)));
        }
    }
}

TEST_CASE("analytic PSD cases check the continuity order")
{
    const RealVector g = default_psd_grid(cfg_with(0, 144), 16);
    MonteCarloSpec mc;
    mc.realizations = 1;
    mc.symbols = 2;
    {
        const SystemConfig cfg = cfg_with(1, 144);
        const SmootherContext ctx = build_smoother(cfg);
        CHECK_THROWS_AS(analytic_psd_case0(g, cfg, ctx, mc), CaseMismatchError);
        CHECK_THROWS_AS(analytic_psd_caseN(g, cfg, ctx, mc), CaseMismatchError);
    }
    {
        const SystemConfig cfg = cfg_with(2, 144);
        const SmootherContext ctx = build_smoother(cfg);
        CHECK_THROWS_AS(analytic_psd_case1(g, cfg, ctx, mc), CaseMismatchError);
    }
}

TEST_CASE("default grid is symmetric, avoids DC and spans three bandwidths past the edge")
{
    const SystemConfig cfg = cfg_with(0, 144);
    const RealVector g = default_psd_grid(cfg);
    CHECK(g.size() == 2048);
    CHECK(g[0] == doctest::Approx(-g[2047]));
    CHECK(g[2047] == doctest::Approx(band_edge_hz(cfg) + 3.0 * 2.0 * band_edge_hz(cfg)));
    CHECK((g.array() != 0.0).all());
}

TEST_CASE("analytic PSD is non-negative and quadratic in the data")
{
    for (int N : {0, 1, 2, 3}) {
        const SystemConfig cfg = cfg_with(N, 144);
        const SmootherContext ctx = build_smoother(cfg);
        const RealVector g = default_psd_grid(cfg, 256);
        const PsdKernel k = psd_kernel(g, cfg, ctx);
        MonteCarloSpec mc;
        mc.realizations = 4;
        mc.symbols = 8;
        const RealVector lin = psd_monte_carlo(k, cfg, mc);
        CHECK((lin.array() >= 0.0).all());
        CHECK((psd_expected(k).array() >= 0.0).all());

        // the per-symbol term is linear in the data: doubling every symbol adds 6.02 dB
        std::mt19937_64 rng(5);
        const int K = static_cast<int>(k.u.rows());
        const ComplexVector xp = random_qam(K, 16, rng), xc = random_qam(K, 16, rng);
        for (Eigen::Index fi = 0; fi < g.size(); fi += 37) {
            const cplx a = k.u.col(fi).dot(xc.conjugate()) + k.v.col(fi).dot(xp.conjugate());
            const cplx b = k.u.col(fi).dot(2.0 * xc.conjugate()) + k.v.col(fi).dot(2.0 * xp.conjugate());
            CHECK(10.0 * std::log10(std::norm(b) / std::norm(a)) == doctest::Approx(6.0206).epsilon(1e-6));
        }
    }
}

TEST_CASE("Monte-Carlo PSD converges to its expectation")
{
    const SystemConfig cfg = cfg_with(1, 144);
    const SmootherContext ctx = build_smoother(cfg);
    const RealVector g = default_psd_grid(cfg, 128);
    const PsdKernel k = psd_kernel(g, cfg, ctx);
    MonteCarloSpec mc;
    mc.realizations = 128;
    mc.symbols = 32;
    const RealVector a = psd_monte_carlo(k, cfg, mc);
    const RealVector e = psd_expected(k);
    for (Eigen::Index i = 0; i < g.size(); ++i)
        CHECK(std::fabs(10.0 * std::log10(a[i] / e[i])) < 1.0);

    mc.threads = 3;
    const RealVector b = psd_monte_carlo(k, cfg, mc);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12 * a.maxCoeff());
}

TEST_CASE("analytic PSD matches a Welch estimate of the simulated stream near the band")
{
    for (int N : {0, 1, 2}) {
        CAPTURE(N);
        const SystemConfig cfg = cfg_with(N, 144);
        const SmootherContext ctx = build_smoother(cfg);
        std::mt19937_64 rng(21 + N);
        const ComplexSignal s = simulated_stream(cfg, ctx, 400, rng);
        WelchOptions opt;
        opt.inband_half_width_hz = band_edge_hz(cfg);
        const PsdEstimate w = welch_psd(s, opt);
        const PsdEstimate a = analytic_psd_welch_view(cfg, ctx, {}, PsdEvaluation::Expected, 2048, 160, 4);
        for (Eigen::Index i = 0; i < a.freqs_hz.size(); ++i) {
            const Eigen::Index wi = static_cast<Eigen::Index>(i - 160 + 1024);
            REQUIRE(w.freqs_hz[wi] == doctest::Approx(a.freqs_hz[i]));
            CHECK(std::fabs(w.values_db[wi] - a.values_db[i]) < 1.0);
        }
    }
}

TEST_CASE("far-field decay steepens with the continuity order")
{
    double prev_tail = 0;
    double expected_slope = -40;
    for (int N : {0, 1}) {
        const SystemConfig cfg = cfg_with(N, 144);
        const SmootherContext ctx = build_smoother(cfg);
        const RealVector g = far_field_grid(cfg, 10, 100, 100);
        const PsdKernel k = psd_kernel(g, cfg, ctx);
        const PsdEstimate e = to_estimate_referenced(g, psd_expected(k), analytic_inband_level(cfg, ctx), "x");
        PsdEstimate ee = e;
        ee.band_edge_hz = band_edge_hz(cfg);
        CHECK(fit_slope(ee, g[0], g[g.size() - 1]) == doctest::Approx(expected_slope).epsilon(0.05));
        if (N == 1)
            CHECK(e.values_db[e.values_db.size() - 1] < prev_tail);
        prev_tail = e.values_db[e.values_db.size() - 1];
        expected_slope -= 20;
    }
}

TEST_CASE("auxiliary signal meets its boundary conditions")
{
    std::mt19937_64 rng(9);
    {
        const SystemConfig cfg = cfg_with(2, 144);
        const SmootherContext ctx = build_smoother(cfg);
        const ComplexVector xp = random_qam(256, 16, rng), xc = random_qam(256, 16, rng);
        const AuxiliaryResidual r = auxiliary_boundary_residual(xp, xc, ctx, cfg);
        CHECK(r.start < 1e-8);
        CHECK(r.end < 1e-8);
    }
    {
        // four conditions, three coefficients: least squares, so only finiteness is promised
        const SystemConfig cfg = cfg_with(3, 144);
        const SmootherContext ctx = build_smoother(cfg);
        const ComplexVector xp = random_qam(256, 16, rng), xc = random_qam(256, 16, rng);
        const AuxiliaryResidual r = auxiliary_boundary_residual(xp, xc, ctx, cfg);
        CHECK(std::isfinite(r.start));
        CHECK(std::isfinite(r.end));
    }
    CHECK_THROWS_AS(build_auxiliary(cfg_with(1, 144)), CaseMismatchError);
}
