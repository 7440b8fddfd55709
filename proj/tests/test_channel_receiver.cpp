#include <doctest.h>

#include <cmath>
#include <random>

#include "ncofdm/channel.hpp"
#include "ncofdm/receiver.hpp"

using namespace ncofdm;

namespace {

ComplexSignal wrap(const ComplexVector& v, const SystemConfig& c)
{
    return ComplexSignal{v, 1.0 / c.sample_rate_hz()};
}

ChannelRealization fixed_gains(std::initializer_list<cplx> g, int symbols = 1)
{
    ChannelRealization r;
    r.gains.resize(symbols, static_cast<Eigen::Index>(g.size()));
    for (int i = 0; i < symbols; ++i) {
        int l = 0;
        for (cplx v : g) r.gains(i, l++) = v;
    }
    return r;
}

}  // namespace

TEST_CASE("EVA profile")
{
    const ChannelProfile raw = eva_profile(false);
    REQUIRE(raw.taps.size() == 9);
    CHECK(raw.taps.front().delay_s == 0.0);
    CHECK(raw.taps.back().delay_s == doctest::Approx(2510e-9));
    CHECK(raw.powers()[0] == 1.0);
    const auto p = eva_profile(true).powers();
    double s = 0;
    for (double v : p) s += v;
    CHECK(std::fabs(s - 1.0) < 1e-12);
    const SystemConfig c;
    const auto d = raw.delays_in_samples(1.0 / c.sample_rate_hz());
    CHECK(d == std::vector<int>{0, 1, 5, 10, 11, 22, 33, 53, 77});
}

TEST_CASE("profile from JSON")
{
    const ChannelProfile p =
        profile_from_json(R"({"taps":[{"delay_ns":0,"power_db":0},{"delay_ns":100,"power_db":-3}],"normalize":false})");
    REQUIRE(p.taps.size() == 2);
    CHECK(p.taps[1].power == doctest::Approx(std::pow(10, -0.3)));
    CHECK_THROWS_AS(profile_from_json(R"({"taps":[],"extra":1})"), ConfigError);
    CHECK_THROWS_AS(profile_from_json(R"({"taps":[{"delay_ns":5,"power_db":0}]})"), ConfigError);
    CHECK_THROWS_AS(profile_from_json("{not json"), ConfigError);
}

TEST_CASE("gain moments, degenerate taps and replay")
{
    ChannelProfile p = eva_profile(true);
    p.taps[3].power = 0.0;
    std::mt19937_64 rng(21);
    const ChannelRealization r = realize(p, 100000, rng);
    const auto pw = p.powers();
    for (std::size_t l = 0; l < pw.size(); ++l) {
        const double m = r.gains.col(static_cast<Eigen::Index>(l)).squaredNorm() / 100000.0;
        if (pw[l] == 0.0)
            CHECK(m == 0.0);
        else
            CHECK(m == doctest::Approx(pw[l]).epsilon(0.02));
    }
    std::mt19937_64 a(5), b(5);
    CHECK(realize(p, 10, a).gains == realize(p, 10, b).gains);
    std::mt19937_64 t(6);
    const ChannelRealization tied = realize(p, 4, t, true);
    CHECK(tied.gains.row(3) == tied.gains.row(0));
}

TEST_CASE("tapped delay line")
{
    const SystemConfig c;
    std::mt19937_64 rng(22);
    const ComplexVector x = complex_gaussian(3 * c.symbol_length(), 1.0, rng);

    const ComplexSignal id = apply_channel(wrap(x, c), fixed_gains({1.0}), single_tap_profile(), c);
    CHECK((id.samples - x).norm() == 0.0);

    const double ts = 1.0 / c.sample_rate_hz();
    ChannelProfile two;
    two.normalize = false;
    two.taps = {{0.0, 1.0}, {3 * ts, 1.0}};
    const ComplexSignal sh = apply_channel(wrap(x, c), fixed_gains({0.0, 1.0}), two, c);
    CHECK((sh.samples.segment(3, x.size()) - x).norm() == 0.0);

    const cplx g0(0.3, -0.2), g1(-0.5, 0.7);
    const ComplexSignal y = apply_channel(wrap(x, c), fixed_gains({g0, g1}), two, c);
    double err = 0;
    for (Eigen::Index n = 0; n < y.samples.size(); ++n) {
        cplx ref = 0;
        if (n < x.size()) ref += g0 * x[n];
        if (n >= 3 && n - 3 < x.size()) ref += g1 * x[n - 3];
        err = std::max(err, std::abs(y.samples[n] - ref));
    }
    CHECK(err < 1e-12);

    // linearity
    const ComplexVector x2 = complex_gaussian(x.size(), 1.0, rng);
    const ChannelProfile eva = eva_profile();
    const ChannelRealization r = realize(eva, 3, rng);
    const cplx a(0.4, 1.1), b(-2.0, 0.3);
    const ComplexVector lhs = apply_channel(wrap(a * x + b * x2, c), r, eva, c).samples;
    const ComplexVector rhs =
        a * apply_channel(wrap(x, c), r, eva, c).samples + b * apply_channel(wrap(x2, c), r, eva, c).samples;
    CHECK((lhs - rhs).norm() < 1e-12 * lhs.norm());
}

TEST_CASE("received power follows the normalized profile")
{
    SystemConfig c;
    c.Ms = 1;
    const ChannelProfile eva = eva_profile();
    std::mt19937_64 rng(23);
    double tx = 0, rx = 0;
    for (int i = 0; i < 10000; ++i) {
        const ComplexVector s = ofdm_modulate(random_qam(c.K, 16, rng), c);
        const ComplexSignal y = apply_channel(wrap(s, c), realize(eva, 1, rng), eva, c);
        tx += s.squaredNorm();
        rx += y.samples.squaredNorm();
    }
    CHECK(rx / tx == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("impairments")
{
    SystemConfig c;
    std::mt19937_64 rng(24);
    const ComplexVector x = complex_gaussian(2 * c.symbol_length(), 1.0, rng);
    CHECK((apply_impairments(wrap(x, c), Impairments{}, c, rng).samples - x).norm() == 0.0);

    const Impairments cfo = Impairments::from_samples(0, 0.37, 0, c);
    const ComplexVector y = apply_impairments(wrap(x, c), cfo, c, rng).samples;
    for (Eigen::Index n = 0; n < x.size(); ++n)
        CHECK(std::fabs(std::abs(y[n]) - std::abs(x[n])) < 1e-12);

    const Impairments sto = Impairments::from_samples(30, 0, 0, c);
    const ComplexVector z = apply_impairments(wrap(x, c), sto, c, rng).samples;
    CHECK((z.head(x.size() - 30) - x.tail(x.size() - 30)).norm() == 0.0);

    Impairments frac = sto;
    frac.sto_s = 0.5 / c.sample_rate_hz();
    CHECK_THROWS_AS(apply_impairments(wrap(x, c), frac, c, rng), ConfigError);

    // one subcarrier of CFO moves every bin up by one
    SystemConfig wide = c;
    wide.K = 16;
    wide.subcarriers = {-8, -7, -6, -5, -4, -3, -2, -1, 1, 2, 3, 4, 5, 6, 7, 8};
    ComplexVector d = random_qam(16, 16, rng);
    const ComplexVector sym = ofdm_modulate(d, wide);
    const ComplexVector shifted =
        apply_impairments(wrap(sym, wide), Impairments::from_samples(0, 1.0, 0, wide), wide, rng).samples;
    SystemConfig probe = wide;
    probe.subcarriers = {-7, -6, -5, -4, -3, -2, -1, 0, 2, 3, 4, 5, 6, 7, 8, 9};
    const ComplexVector bins = demodulate(shifted, 0, probe).bins;
    // the CP start adds the phase e^{j2pi Mcp/M}
    const cplx ph = std::polar(1.0, 2 * kPi * wide.Mcp / wide.M);
    CHECK((bins - ph * d).norm() < 1e-9);

    ComplexVector n = ComplexVector::Zero(1000000);
    add_awgn(n, 0.7, rng);
    CHECK(n.squaredNorm() / n.size() == doctest::Approx(0.7).epsilon(0.01));
}

TEST_CASE("demodulation, estimation and equalization")
{
    SystemConfig c;
    std::mt19937_64 rng(25);
    const ComplexVector x = random_qam(c.K, 16, rng);
    const ComplexVector y = ofdm_modulate(x, c);
    CHECK((demodulate(y, 0, c).bins - x).norm() < 1e-12 * x.norm());
    const cplx h(0.6, -0.8);
    CHECK((demodulate(h * y, 0, c).bins - h * x).norm() < 1e-12 * x.norm());
    CHECK_THROWS_AS(demodulate(y, 1, c), DimensionError);

    // EVA without noise or smoothing: R = H x
    const ChannelProfile eva = eva_profile();
    const ChannelRealization r = realize(eva, 1, rng);
    const ComplexVector rx = apply_channel(wrap(y, c), r, eva, c).samples;
    ReceivedSymbol rs = demodulate(rx, 0, c);
    const ComplexVector H = frequency_response(r.gains.row(0).transpose(), eva, c);
    CHECK((rs.bins - H.cwiseProduct(x)).norm() < 1e-9 * x.norm());

    rs.channel_estimate = ls_estimate(rs, x);
    CHECK((rs.channel_estimate - H).norm() < 1e-9 * H.norm());
    const EqualizedSymbol eq = zf_equalize(rs);
    CHECK(eq.flagged_bins.empty());
    CHECK(qam_demap(eq.data, 16) == qam_demap(x, 16));

    ReceivedSymbol pass;
    pass.bins = x;
    pass.channel_estimate = ComplexVector::Ones(c.K);
    CHECK((zf_equalize(pass).data - x).norm() == 0.0);
    pass.channel_estimate[7] = 1e-13;
    const EqualizedSymbol fl = zf_equalize(pass);
    CHECK(fl.flagged_bins == std::vector<int>{7});

    ComplexVector zero_ref = x;
    zero_ref[0] = 0;
    CHECK_THROWS_AS(ls_estimate(rs, zero_ref), EstimationError);
}

TEST_CASE("smoothed stream: estimate carries the smooth-signal leakage")
{
    SystemConfig c;
    c.N = 2;
    c.L = 1000;
    const SmootherContext ctx = build_smoother(c);
    std::mt19937_64 rng(26);
    const std::vector<ComplexVector> data{random_qam(c.K, 16, rng), random_qam(c.K, 16, rng)};
    const ComplexVector s = assemble_stream(data, ctx, c);
    const ReceivedSymbol rs = demodulate(s, 1, c);
    // leakage: DFT of the part of w_1 inside the body window
    ComplexVector wfull = ComplexVector::Zero(c.symbol_length());
    wfull.head(c.L) = smooth_signal(data[0], data[1], ctx, c);
    const ComplexVector leak = demodulate(wfull, 0, c).bins;
    CHECK((ls_estimate(rs, data[1]) - (ComplexVector::Ones(c.K) + leak.cwiseQuotient(data[1]))).norm() < 1e-9);
    CHECK(leak.norm() > 1e-3);
}

TEST_CASE("noisy LS estimate is unbiased")
{
    SystemConfig c;
    std::mt19937_64 rng(27);
    const ComplexVector x = random_qam(c.K, 16, rng);
    const ComplexVector y = ofdm_modulate(x, c);
    const cplx h(0.9, 0.4);
    ComplexVector acc = ComplexVector::Zero(c.K);
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        ComplexVector rx = h * y;
        add_awgn(rx, 50.0, rng);
        acc += ls_estimate(demodulate(rx, 0, c), x);
    }
    acc /= trials;
    CHECK(std::abs(acc.mean() - h) < 0.01 * std::abs(h));
}

TEST_CASE("bit error ratio and loopback")
{
    std::mt19937_64 rng(28);
    const auto bits = random_bits(4000, rng);
    CHECK(measure_ber(bits, bits) == 0.0);
    auto flipped = bits;
    for (auto& b : flipped) b ^= 1;
    CHECK(measure_ber(bits, flipped) == 1.0);

    SystemConfig c;
    const auto tx = random_bits(static_cast<std::size_t>(c.K) * 4, rng);
    const ComplexVector y = ofdm_modulate(qam_map(tx, 16), c);
    CHECK(qam_demap(demodulate(y, 0, c).bins, 16) == tx);
}

TEST_CASE("empirical SINR of plain OFDM on a flat channel")
{
    SystemConfig c;
    std::mt19937_64 rng(29);
    const double noise = 200.0;  // bin noise variance noise / M
    const cplx h(0.8, 0.6);
    SinrAccumulator acc(c.K);
    SinrAccumulator rotated(c.K);
    const cplx ph = std::polar(1.0, 1.3);
    for (int blk = 0; blk < 50; ++blk) {
        acc.begin_block(ComplexVector::Constant(c.K, h));
        rotated.begin_block(ComplexVector::Constant(c.K, h));
        for (int s = 0; s < 400; ++s) {
            const ComplexVector x = random_qam(c.K, 16, rng);
            ComplexVector rx = h * ofdm_modulate(x, c);
            add_awgn(rx, noise, rng);
            const ComplexVector bins = demodulate(rx, 0, c).bins;
            acc.add(bins, x);
            rotated.add(ph * bins, ph * x);
        }
        acc.end_block();
        rotated.end_block();
    }
    const double expected = 10 * std::log10(c.M / noise);
    CHECK(std::fabs(acc.mean_db() - expected) < 0.2);
    CHECK(std::fabs(acc.mean_db() - rotated.mean_db()) < 1e-9);
}
