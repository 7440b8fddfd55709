// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <utility>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "ncofdm/analysis.hpp"

namespace ncofdm {

double BerSeriesParams::resolved_epsilon() const
{
    if (epsilon > 0.0) {
        if (!(epsilon < 1.0))
            throw DomainError("BER series: epsilon must lie in (0, 1)");
        return epsilon;
    }
    if (!(sigma_w_sq > 0.0))
        return 0.0;
    const double lambda = sigma_n_sq / (M * mean_alpha * 2.0 * sigma_w_sq);
    return std::min(lambda / 20.0, 0.5);
}

double BerSeriesParams::sigma_minus() const
{
    if (!(sigma_w_sq > 0.0))
        return std::numeric_limits<double>::infinity();
    return (1.0 - resolved_epsilon()) / (2.0 * sigma_w_sq);
}

std::vector<QamBerTerm> qam_ber_terms(int J)
{
    const int sq = static_cast<int>(std::lround(std::sqrt(static_cast<double>(J))));
    if (sq * sq != J || sq < 2 || (sq & (sq - 1)) != 0)
        throw ConfigError("QAM order " + std::to_string(J) + " is not a square power of 2");
    const int bits_axis = static_cast<int>(std::lround(std::log2(sq)));
    const double pre = 2.0 / (sq * bits_axis);
    std::map<int, double> by_odd;
    for (int u1 = 1; u1 <= bits_axis; ++u1) {
        const int p = 1 << (u1 - 1);
        const int u2_max = (sq - (sq >> u1)) - 1;  // (1 - 2^-u1) sqrt(J) - 1
        for (int u2 = 0; u2 <= u2_max; ++u2) {
            const int fl = (u2 * p) / sq;
            const double sign = (fl % 2 == 0) ? 1.0 : -1.0;
            const int round_term = static_cast<int>(std::floor(static_cast<double>(u2 * p) / sq + 0.5));
            const double w = pre * sign * (p - round_term);
            if (w != 0.0)
                by_odd[2 * u2 + 1] += w;
        }
    }
    std::vector<QamBerTerm> out;
    for (const auto& [odd, w] : by_odd)
        if (w != 0.0)
            out.push_back({w, odd});
    return out;
}

double conditional_ber(double gamma, int J)
{
    double p = 0;
    for (const auto& t : qam_ber_terms(J))
        p += t.weight * q_function(t.odd * std::sqrt(3.0 * gamma / (J - 1)));
    return p;
}

double sinr_pdf(double gamma, const BerSeriesParams& p)
{
    const double c = p.sigma_n_sq / p.M;
    if (gamma < 0.0)
        return 0.0;
    if (p.sigma_w_sq <= 0.0)
        return c / p.mean_alpha * std::exp(-c * gamma / p.mean_alpha);
    const double d = 1.0 - 2.0 * p.sigma_w_sq * gamma;
    if (d <= 0.0)
        return 0.0;
    return c * std::exp(-c * gamma / (p.mean_alpha * d)) / (p.mean_alpha * d * d);
}

namespace {

using ld = long double;

void check_params(const BerSeriesParams& p)
{
    if (!(p.sigma_n_sq > 0.0))
        throw DomainError("BER: sigma_n^2 must be positive");
    if (p.sigma_w_sq < 0.0)
        throw DomainError("BER: sigma_w^2 must be non-negative");
    if (p.v1_max < 8 || p.v2_max < 8)
        throw DomainError("BER: truncation orders must be at least 8");
    if (p.M <= 0 || !(p.mean_alpha > 0.0))
        throw DomainError("BER: M and E{alpha} must be positive");
}

struct SeriesSum {
    ld sum = 0;
    ld max_abs = 0;
    int terms = 0;
};

// Alternating-ish power series: stop once past `peak` and three terms in a
// row fall below tol relative to the running sum.
template <typename TermFn>
SeriesSum sum_series(TermFn term, int max_terms, double peak, double tol, const char* what)
{
    SeriesSum s;
    int quiet = 0;
    for (int v = 0; v < max_terms; ++v) {
        const ld t = term(v);
        s.sum += t;
        s.max_abs = std::max(s.max_abs, std::fabs(t));
        s.terms = v + 1;
        if (!std::isfinite(static_cast<double>(s.sum)))
            throw ConvergenceError(std::string(what) + " overflowed", v + 1);
        if (v > peak && std::fabs(t) <= tol * std::fabs(s.sum)) {
            if (++quiet >= 3)
                return s;
        } else {
            quiet = 0;
        }
    }
    throw ConvergenceError(std::string(what) + " did not converge within " +
                               std::to_string(max_terms) + " terms; use a larger epsilon",
                           max_terms);
}

// sum_{v1} (-1)^v1 a^{v1+1/2} / (v1! (2v1+1)) * inner(v1)
SeriesSum outer_series(ld a, const std::function<ld(int)>& inner_scaled, ld scale_base,
                       const BerSeriesParams& p)
{
    // inner_scaled(v1) already carries scale_base^{v1}; log-domain prefactor
    // keeps (a s)^{v1} / v1! finite for large v1.
    return sum_series(
        [&](int v1) {
            const ld lg = (v1 + 0.5L) * std::log(a) + v1 * std::log(scale_base) - std::lgamma(v1 + 1.0L) -
                          std::log(2.0L * v1 + 1.0L);
            const ld sign = (v1 % 2 == 0) ? 1.0L : -1.0L;
            return sign * std::exp(lg) * inner_scaled(v1);
        },
        p.v1_max, static_cast<double>(a * scale_base), p.tail_tol, "BER outer series");
}

}  // namespace

BerSeriesResult ber_closed_form_detail(const BerSeriesParams& p)
{
    check_params(p);
    const auto terms = qam_ber_terms(p.J);
    const ld c = static_cast<ld>(p.sigma_n_sq) / (static_cast<ld>(p.M) * p.mean_alpha);
    BerSeriesResult res;
    ld total = 0;
    ld worst = 0;

    if (p.sigma_w_sq <= 0.0) {
        // Upper limit at infinity: E_2 = Gamma(v1 + 3/2) / c^{v1 + 3/2}.
        for (const auto& t : terms) {
            const ld a = 3.0L * t.odd * t.odd / (2.0L * (p.J - 1));
            if (a >= c)
                throw ConvergenceError("BER series with sigma_w^2 = 0 diverges when the per-subcarrier SNR "
                                       "exceeds (J-1)/(1.5 (2u2+1)^2)",
                                       0);
            const SeriesSum s = sum_series(
                [&](int v) {
                    const ld lg = (v + 0.5L) * std::log(a / c) + std::lgamma(v + 1.5L) - std::lgamma(v + 1.0L) -
                                  std::log(2.0L * v + 1.0L);
                    return ((v % 2 == 0) ? 1.0L : -1.0L) * std::exp(lg);
                },
                p.v1_max, 0.0, p.tail_tol, "BER series");
            const ld e1 = 0.5L - s.sum / std::sqrt(static_cast<ld>(kPi));
            worst = std::max(worst, s.max_abs / std::max(std::fabs(s.sum), 1e-300L));
            res.v1_terms = std::max(res.v1_terms, s.terms);
            total += t.weight * e1;
        }
        res.ber = static_cast<double>(total);
        res.cancellation = static_cast<double>(worst);
        return res;
    }

    const double eps = p.resolved_epsilon();
    res.epsilon = eps;
    const ld s_minus = (1.0L - eps) / (2.0L * p.sigma_w_sq);
    const ld z = 2.0L * p.sigma_w_sq * s_minus;
    const ld x = c * s_minus / eps;  // ratio driving the v2 series

    // inner(v1) / s^{v1}: sum_{v2} (-1)^v2 c^{v2+1}/v2! s^{v2+3/2}/(v1+v2+3/2) 2F1(...)
    // with 2F1(v2+2, b; b+1; z) = (1-z)^{-(v2+1)} 2F1(v1+1/2, 1; b+1; z).
    std::map<std::pair<int, int>, ld> f_cache;
    auto hyp = [&](int v1, int v2) {
        auto key = std::make_pair(v1, v2);
        auto it = f_cache.find(key);
        if (it != f_cache.end())
            return it->second;
        Hyp2F1Options opt;
        opt.max_terms = 50000000;
        const ld v = gauss_2f1_ld(v1 + 0.5L, 1.0L, v1 + v2 + 2.5L, z, opt);
        f_cache.emplace(key, v);
        return v;
    };
    ld inner_worst = 0;
    std::map<int, ld> inner_cache;
    auto inner = [&](int v1) {
        auto it = inner_cache.find(v1);
        if (it != inner_cache.end())
            return it->second;
        const SeriesSum s = sum_series(
            [&](int v2) {
                const ld lg = v2 * std::log(x) - std::lgamma(v2 + 1.0L);
                const ld sign = (v2 % 2 == 0) ? 1.0L : -1.0L;
                return sign * std::exp(lg) * hyp(v1, v2) / (v1 + v2 + 1.5L);
            },
            p.v2_max, static_cast<double>(x), p.tail_tol, "BER inner series");
        res.v2_terms_max = std::max(res.v2_terms_max, s.terms);
        inner_worst = std::max(inner_worst, s.max_abs / std::max(std::fabs(s.sum), 1e-300L));
        // restore c s^{3/2} / eps; the s^{v1} factor travels with the outer prefactor
        const ld v = s.sum * c * std::pow(s_minus, 1.5L) / eps;
        inner_cache.emplace(v1, v);
        return v;
    };

    // rounding of the inner sums is amplified by the outer terms they multiply
    ld abs_err = 0;
    for (const auto& t : terms) {
        const ld a = 3.0L * t.odd * t.odd / (2.0L * (p.J - 1));
        const SeriesSum s = outer_series(a, inner, s_minus, p);
        const ld e1 = 0.5L - s.sum / std::sqrt(static_cast<ld>(kPi));
        worst = std::max(worst, s.max_abs / std::max(std::fabs(s.sum), 1e-300L));
        res.v1_terms = std::max(res.v1_terms, s.terms);
        total += t.weight * e1;
        abs_err += std::fabs(t.weight) * std::numeric_limits<ld>::epsilon() * s.max_abs *
                   std::max(1.0L, inner_worst) / std::sqrt(static_cast<ld>(kPi));
    }
    res.cancellation = static_cast<double>(std::max(worst, inner_worst));
    res.error_estimate = static_cast<double>(abs_err);
    if (res.cancellation > p.max_cancellation || abs_err > p.max_relative_error * std::fabs(total) ||
        total < 0 || total > 0.5L)
        throw ConvergenceError("BER series lost its precision to cancellation (largest term / result = " +
                                   std::to_string(res.cancellation) + ", error estimate " +
                                   std::to_string(res.error_estimate) +
                                   "); the closed form needs heavier interference or a larger epsilon",
                               res.v1_terms);
    res.ber = static_cast<double>(total);
    return res;
}

double ber_closed_form(const BerSeriesParams& p)
{
    return ber_closed_form_detail(p).ber;
}

double ber_numeric_quadrature(const BerSeriesParams& p)
{
    check_params(p);
    auto f = [&](double g) { return conditional_ber(g, p.J) * sinr_pdf(g, p); };
    double err = 0;
    double v;
    if (p.sigma_w_sq <= 0.0) {
        boost::math::quadrature::exp_sinh<double> integ;
        v = integ.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-12, &err);
    } else {
        boost::math::quadrature::tanh_sinh<double> integ;
        v = integ.integrate(f, 0.0, 1.0 / (2.0 * p.sigma_w_sq), 1e-12, &err);
    }
    if (!std::isfinite(v) || err > 1e-6 * std::max(std::fabs(v), 1e-300))
        throw ConvergenceError("BER quadrature did not reach its tolerance", 0);
    return v;
}

double average_ber(const RealVector& sigma_w_sq, BerSeriesParams p, bool closed_form)
{
    double s = 0;
    for (Eigen::Index r = 0; r < sigma_w_sq.size(); ++r) {
        p.sigma_w_sq = sigma_w_sq[r];
        s += closed_form ? ber_closed_form(p) : ber_numeric_quadrature(p);
    }
    return s / static_cast<double>(sigma_w_sq.size());
}

}  // namespace ncofdm
