// SPDX-License-Identifier: Apache-2.0
#include "ncofdm/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace ncofdm {

std::string to_string(WindowKind w)
{
    switch (w) {
    case WindowKind::Blackman: return "blackman";
    case WindowKind::Hanning: return "hanning";
    case WindowKind::Triangular: return "triangular";
    }
    return "?";
}

WindowKind window_from_string(const std::string& s)
{
    if (s == "blackman") return WindowKind::Blackman;
    if (s == "hanning") return WindowKind::Hanning;
    if (s == "triangular") return WindowKind::Triangular;
    throw ConfigError("unknown window kind '" + s + "' (blackman, hanning, triangular)");
}

std::string to_string(PfLayout p)
{
    return p == PfLayout::ProductRule ? "product" : "hankel";
}

PfLayout pf_layout_from_string(const std::string& s)
{
    if (s == "product") return PfLayout::ProductRule;
    if (s == "hankel") return PfLayout::Hankel;
    throw ConfigError("unknown P_f layout '" + s + "' (product, hankel)");
}

std::vector<int> centered_subcarriers(int K)
{
    std::vector<int> ks;
    ks.reserve(K);
    const int lo = K / 2;
    for (int k = -lo; k < 0; ++k) ks.push_back(k);
    for (int k = 1; k <= K - lo; ++k) ks.push_back(k);
    return ks;
}

std::vector<int> SystemConfig::subcarrier_set() const
{
    return subcarriers.empty() ? centered_subcarriers(K) : subcarriers;
}

namespace {

int log2_exact(int v)
{
    int b = 0;
    while ((1 << b) < v) ++b;
    return (1 << b) == v ? b : -1;
}

void check_qam_order(int J)
{
    const int b = log2_exact(J);
    if (J < 4 || b < 0 || b % 2 != 0)
        throw ConfigError("QAM order " + std::to_string(J) +
                          " is not a square constellation of a power of 2");
}

}  // namespace

int SystemConfig::bits_per_symbol() const
{
    check_qam_order(qam_order);
    return log2_exact(qam_order);
}

void SystemConfig::validate() const
{
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (M <= 0) fail("M must be positive");
    if (K <= 0 || K > M) fail("K must satisfy 0 < K <= M");
    if (Mcp < 0) fail("Mcp must be non-negative");
    if (L < 2 || L > M + Mcp) fail("L must satisfy 2 <= L <= M + Mcp");
    if (N < 0) fail("N must be non-negative");
    if (oversample < 1) fail("oversample must be >= 1");
    if (Ms < 1) fail("Ms must be >= 1");
    if (!(subcarrier_spacing_hz > 0)) fail("subcarrier spacing must be positive");
    check_qam_order(qam_order);
    if (!subcarriers.empty()) {
        if (static_cast<int>(subcarriers.size()) != K)
            fail("subcarrier list has " + std::to_string(subcarriers.size()) +
                 " entries but K = " + std::to_string(K));
        std::set<int> seen;
        for (int k : subcarriers) {
            if (2 * std::abs(k) >= M) fail("subcarrier index " + std::to_string(k) + " violates |k| < M/2");
            if (!seen.insert(k).second) fail("duplicate subcarrier index " + std::to_string(k));
        }
    } else if (K >= M - 1) {
        fail("default subcarrier set needs K <= M - 2");
    }
}

// ---- QAM ----------------------------------------------------------------------

namespace {

struct QamGeometry {
    int bits_axis;
    int side;
    double scale;  // multiply integer levels by this
};

QamGeometry geometry(int J)
{
    check_qam_order(J);
    QamGeometry g;
    g.bits_axis = log2_exact(J) / 2;
    g.side = 1 << g.bits_axis;
    g.scale = 1.0 / std::sqrt(2.0 * (g.side * g.side - 1) / 3.0);
    return g;
}

int gray_to_binary(int g)
{
    int b = g;
    for (int s = g >> 1; s; s >>= 1) b ^= s;
    return b;
}

int binary_to_gray(int b) { return b ^ (b >> 1); }

double level_of(int gray_label, const QamGeometry& g)
{
    return (2 * gray_to_binary(gray_label) - (g.side - 1)) * g.scale;
}

int label_of(double v, const QamGeometry& g)
{
    long p = std::lround((v / g.scale + (g.side - 1)) / 2.0);
    p = std::clamp<long>(p, 0, g.side - 1);
    return binary_to_gray(static_cast<int>(p));
}

}  // namespace

ComplexVector qam_constellation(int J)
{
    const QamGeometry g = geometry(J);
    ComplexVector pts(J);
    for (int i = 0; i < J; ++i)
        pts[i] = cplx(level_of(i >> g.bits_axis, g), level_of(i & (g.side - 1), g));
    return pts;
}

ComplexVector qam_map(const std::vector<std::uint8_t>& bits, int J)
{
    const QamGeometry g = geometry(J);
    const int bps = 2 * g.bits_axis;
    if (bits.size() % bps != 0)
        throw DimensionError("qam_map: bit count not divisible by log2(J)");
    const std::size_t n = bits.size() / bps;
    ComplexVector out(static_cast<Eigen::Index>(n));
    for (std::size_t s = 0; s < n; ++s) {
        int label = 0;
        for (int b = 0; b < bps; ++b)
            label = (label << 1) | (bits[s * bps + b] & 1);
        out[s] = cplx(level_of(label >> g.bits_axis, g), level_of(label & (g.side - 1), g));
    }
    return out;
}

std::vector<std::uint8_t> qam_demap(const ComplexVector& symbols, int J)
{
    const QamGeometry g = geometry(J);
    const int bps = 2 * g.bits_axis;
    std::vector<std::uint8_t> bits(symbols.size() * bps);
    for (Eigen::Index s = 0; s < symbols.size(); ++s) {
        const int label = (label_of(symbols[s].real(), g) << g.bits_axis) | label_of(symbols[s].imag(), g);
        for (int b = 0; b < bps; ++b)
            bits[s * bps + b] = static_cast<std::uint8_t>((label >> (bps - 1 - b)) & 1);
    }
    return bits;
}

std::vector<std::uint8_t> random_bits(std::size_t n, std::mt19937_64& rng)
{
    std::vector<std::uint8_t> bits(n);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 64 == 0) word = rng();
        bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1);
    }
    return bits;
}

ComplexVector random_qam(int K, int J, std::mt19937_64& rng)
{
    const QamGeometry g = geometry(J);
    ComplexVector x(K);
    const std::uint64_t mask = static_cast<std::uint64_t>(g.side - 1);
    for (int r = 0; r < K; ++r) {
        const std::uint64_t w = rng();
        x[r] = cplx(level_of(static_cast<int>(w & mask), g),
                    level_of(static_cast<int>((w >> 16) & mask), g));
    }
    return x;
}

// ---- OFDM symbols and basis ---------------------------------------------------

ComplexVector ofdm_modulate(const ComplexVector& x, const SystemConfig& cfg)
{
    const auto ks = cfg.subcarrier_set();
    if (x.size() != static_cast<Eigen::Index>(ks.size()))
        throw DimensionError("ofdm_modulate: expected " + std::to_string(ks.size()) + " data values");
    ComplexVector X = ComplexVector::Zero(cfg.M);
    for (std::size_t r = 0; r < ks.size(); ++r)
        X[((ks[r] % cfg.M) + cfg.M) % cfg.M] += x[static_cast<Eigen::Index>(r)];
    const ComplexVector body = idft(X, static_cast<std::size_t>(cfg.M));
    ComplexVector y(cfg.symbol_length());
    y.head(cfg.Mcp) = body.tail(cfg.Mcp);
    y.tail(cfg.M) = body;
    return y;
}

namespace {

cplx jpow(int n)
{
    static const cplx table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    return table[((n % 4) + 4) % 4];
}

}  // namespace

cplx symbol_derivative(const ComplexVector& x, const SystemConfig& cfg, int n, double t)
{
    const auto ks = cfg.subcarrier_set();
    cplx acc = 0;
    for (std::size_t r = 0; r < ks.size(); ++r) {
        const double w = 2.0 * kPi * ks[r] / cfg.M;
        acc += x[static_cast<Eigen::Index>(r)] * std::pow(w, n) * std::polar(1.0, w * t);
    }
    return acc * jpow(n);
}

double taper(const SystemConfig& cfg, double tau, int order)
{
    const double TL = cfg.TL();
    const double slack = 1e-9 * TL;
    if (tau < -slack || tau > TL + slack)
        return 0.0;
    tau = std::clamp(tau, 0.0, TL);
    switch (cfg.window) {
    case WindowKind::Blackman:
        return blackman_derivative(tau + TL, TL, order);
    case WindowKind::Hanning: {
        const double w = kPi / TL;
        double v = 0.5 * std::pow(w, order) * std::cos(w * tau + order * kPi / 2.0);
        if (order == 0) v += 0.5;
        return v;
    }
    case WindowKind::Triangular:
        if (order == 0) return 1.0 - tau / TL;
        return order == 1 ? -1.0 / TL : 0.0;
    }
    return 0.0;
}

cplx basis_exponential(const SystemConfig& cfg, int n, double t)
{
    const auto ks = cfg.subcarrier_set();
    double re = 0, im = 0;
    for (int k : ks) {
        const double w = 2.0 * kPi * k / cfg.M;
        const double a = std::pow(w, n);
        const double ph = w * (t + cfg.Mcp);
        re += a * std::cos(ph);
        im += a * std::sin(ph);
    }
    return jpow(n) * cplx(re, im);
}

cplx basis_derivative(const SystemConfig& cfg, int n, int d, double t)
{
    const double tau = t + cfg.Mcp;
    cplx acc = 0;
    for (int p = 0; p <= d; ++p) {
        const double gp = taper(cfg, tau, p);
        if (gp == 0.0) continue;
        acc += binomial(d, p) * gp * basis_exponential(cfg, n + d - p, t);
    }
    return acc;
}

ComplexVector basis_signal(int n, const SystemConfig& cfg)
{
    if (n < 0 || n > 2 * cfg.N)
        throw DomainError("basis_signal: order " + std::to_string(n) + " exceeds 2N = " +
                          std::to_string(2 * cfg.N));
    const auto ks = cfg.subcarrier_set();
    ComplexVector out(cfg.L);
    std::vector<cplx> coef(ks.size()), step(ks.size()), cur(ks.size());
    for (std::size_t r = 0; r < ks.size(); ++r) {
        const double w = 2.0 * kPi * ks[r] / cfg.M;
        coef[r] = jpow(n) * std::pow(w, n);
        step[r] = std::polar(1.0, w);
        cur[r] = 1.0;  // e^{j w (m + Mcp)} at m = -Mcp
    }
    for (int s = 0; s < cfg.L; ++s) {
        cplx acc = 0;
        for (std::size_t r = 0; r < ks.size(); ++r) {
            acc += coef[r] * cur[r];
            cur[r] *= step[r];
        }
        // Recompute exactly every 256 samples to stop rotation drift.
        if ((s + 1) % 256 == 0)
            for (std::size_t r = 0; r < ks.size(); ++r)
                cur[r] = std::polar(1.0, 2.0 * kPi * ks[r] / cfg.M * (s + 1));
        out[s] = acc * taper(cfg, s, 0);
    }
    return out;
}

// ---- smoother -----------------------------------------------------------------

SmootherContext build_smoother(const SystemConfig& cfg)
{
    cfg.validate();
    const auto ks = cfg.subcarrier_set();
    const int K = static_cast<int>(ks.size());
    const int n1 = cfg.N + 1;
    const double t0 = -cfg.Mcp;

    SmootherContext ctx;
    ctx.P1.resize(n1, K);
    ctx.Phi.resize(K);
    for (int r = 0; r < K; ++r) {
        const double w = 2.0 * kPi * ks[r] / cfg.M;
        for (int n = 0; n < n1; ++n)
            ctx.P1(n, r) = jpow(n) * std::pow(w, n);
        ctx.Phi[r] = std::polar(1.0, cfg.phi() * ks[r]);
    }
    ctx.P2 = ctx.P1 * ctx.Phi.asDiagonal();

    ctx.Pf.resize(n1, n1);
    for (int n = 0; n < n1; ++n)
        for (int m = 0; m < n1; ++m)
            ctx.Pf(n, m) = cfg.pf_layout == PfLayout::Hankel
                               ? basis_exponential(cfg, n + m, t0) * taper(cfg, 0.0, 0)
                               : basis_derivative(cfg, m, n, t0);

    ctx.Qf.resize(cfg.L, n1);
    for (int n = 0; n < n1; ++n)
        ctx.Qf.col(n) = basis_signal(n, cfg);

    ComplexMatrix rhs(n1, 2 * K);
    rhs << ctx.P1, ctx.P2;
    SolveResult s;
    try {
        s = solve(ctx.Pf, rhs, "P_f");
    } catch (const SingularMatrixError& e) {
        throw SingularMatrixError(std::string(e.what()) + " [N=" + std::to_string(cfg.N) +
                                      ", L=" + std::to_string(cfg.L) +
                                      ", window=" + to_string(cfg.window) + "]",
                                  e.condition);
    }
    ctx.A = s.X.leftCols(K);
    ctx.B = s.X.rightCols(K);
    ctx.cond_Pf = s.condition;
    return ctx;
}

namespace {

inline cplx cmul(const cplx& a, const cplx& b, MultiplyCounter* c)
{
    if (c) c->real_mults += 4;
    return a * b;
}

}  // namespace

ComplexVector smoother_coefficients(const ComplexVector& x_prev, const ComplexVector& x_cur,
                                    const SmootherContext& ctx, MultiplyCounter* counter)
{
    const Eigen::Index K = ctx.A.cols();
    if (x_prev.size() != K || x_cur.size() != K)
        throw DimensionError("smooth_signal: data vectors must have K entries");
    const Eigen::Index n1 = ctx.A.rows();
    ComplexVector b(n1);
    for (Eigen::Index n = 0; n < n1; ++n) {
        cplx acc = 0;
        for (Eigen::Index r = 0; r < K; ++r) {
            acc += cmul(ctx.A(n, r), x_prev[r], counter);
            acc -= cmul(ctx.B(n, r), x_cur[r], counter);
        }
        b[n] = acc;
    }
    return b;
}

ComplexVector smooth_signal(const ComplexVector& x_prev, const ComplexVector& x_cur,
                            const SmootherContext& ctx, const SystemConfig& cfg,
                            MultiplyCounter* counter)
{
    const ComplexVector b = smoother_coefficients(x_prev, x_cur, ctx, counter);
    ComplexVector w(cfg.L);
    for (int m = 0; m < cfg.L; ++m) {
        cplx acc = 0;
        for (Eigen::Index n = 0; n < b.size(); ++n)
            acc += cmul(ctx.Qf(m, n), b[n], counter);
        w[m] = acc;
    }
    return w;
}

ComplexVector assemble_stream(const std::vector<ComplexVector>& data, const SmootherContext& ctx,
                              const SystemConfig& cfg)
{
    if (data.empty())
        throw DimensionError("assemble_stream: need at least one symbol");
    const int T = cfg.symbol_length();
    const Eigen::Index total = static_cast<Eigen::Index>(data.size()) * T + cfg.L;
    ComplexVector out = ComplexVector::Zero(total);
    ComplexVector prev = ComplexVector::Zero(ctx.A.cols());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Eigen::Index off = static_cast<Eigen::Index>(i) * T;
        out.segment(off, T) = ofdm_modulate(data[i], cfg);
        out.segment(off, cfg.L) += smooth_signal(prev, data[i], ctx, cfg);
        prev = data[i];
    }
    const ComplexVector zero = ComplexVector::Zero(ctx.A.cols());
    out.tail(cfg.L) = smooth_signal(prev, zero, ctx, cfg);
    return out;
}

namespace {

double derivative_scale(const SystemConfig& cfg, int n)
{
    int kmax = 0;
    for (int k : cfg.subcarrier_set()) kmax = std::max(kmax, std::abs(k));
    return std::pow(2.0 * kPi * kmax / cfg.M, n) * cfg.K;
}

}  // namespace

double boundary_residual(const ComplexVector& x_prev, const ComplexVector& x_cur,
                         const SmootherContext& ctx, const SystemConfig& cfg)
{
    const ComplexVector b = smoother_coefficients(x_prev, x_cur, ctx);
    double worst = 0.0;
    for (int n = 0; n <= cfg.N; ++n) {
        const cplx end = symbol_derivative(x_prev, cfg, n, cfg.M);
        cplx start = symbol_derivative(x_cur, cfg, n, -cfg.Mcp);
        for (int m = 0; m <= cfg.N; ++m)
            start += b[m] * basis_derivative(cfg, m, n, -cfg.Mcp);
        worst = std::max(worst, std::abs(end - start) / derivative_scale(cfg, n));
    }
    return worst;
}

double plain_boundary_residual(const ComplexVector& x_prev, const ComplexVector& x_cur,
                               const SystemConfig& cfg)
{
    double worst = 0.0;
    for (int n = 0; n <= cfg.N; ++n) {
        const cplx end = symbol_derivative(x_prev, cfg, n, cfg.M);
        const cplx start = symbol_derivative(x_cur, cfg, n, -cfg.Mcp);
        worst = std::max(worst, std::abs(end - start) / derivative_scale(cfg, n));
    }
    return worst;
}

BaselinePrecoder::BaselinePrecoder(const SystemConfig& cfg)
{
    cfg.validate();
    const auto ks = cfg.subcarrier_set();
    const int K = static_cast<int>(ks.size());
    const int n1 = cfg.N + 1;
    P1.resize(n1, K);
    P2.resize(n1, K);
    for (int r = 0; r < K; ++r) {
        const double w = 2.0 * kPi * ks[r] / cfg.M;
        for (int n = 0; n < n1; ++n) {
            P1(n, r) = jpow(n) * std::pow(w, n);
            P2(n, r) = P1(n, r) * std::polar(1.0, cfg.phi() * ks[r]);
        }
    }
    const ComplexMatrix G = P2 * P2.adjoint();
    SolveResult s = solve(G, P2, "P2 P2^H");
    condition = s.condition;
    const ComplexMatrix Ginv_P2 = s.X;  // (P2 P2^H)^{-1} P2
    projector = ComplexMatrix::Identity(K, K) - P2.adjoint() * Ginv_P2;
    const ComplexMatrix Ginv_P1 = solve(G, P1, "P2 P2^H").X;
    coupling = P2.adjoint() * Ginv_P1;
}

ComplexVector BaselinePrecoder::apply(const ComplexVector& x_prev, const ComplexVector& x_cur,
                                      MultiplyCounter* counter) const
{
    const Eigen::Index K = projector.rows();
    if (x_prev.size() != K || x_cur.size() != K)
        throw DimensionError("baseline precoder: data vectors must have K entries");
    ComplexVector out(K);
    for (Eigen::Index r = 0; r < K; ++r) {
        cplx acc = 0;
        for (Eigen::Index c = 0; c < K; ++c) {
            acc += cmul(projector(r, c), x_cur[c], counter);
            acc += cmul(coupling(r, c), x_prev[c], counter);
        }
        out[r] = acc;
    }
    return out;
}

ComplexVector baseline_least_norm_precoder(const ComplexVector& x_prev, const ComplexVector& x_cur,
                                           const SystemConfig& cfg)
{
    return BaselinePrecoder(cfg).apply(x_prev, x_cur);
}

}  // namespace ncofdm
