// SPDX-License-Identifier: Apache-2.0
#include "ncofdm/channel.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace ncofdm {

void ChannelProfile::validate() const
{
    if (taps.empty())
        throw ConfigError("channel profile has no taps");
    if (taps.front().delay_s != 0.0)
        throw ConfigError("first tap delay must be 0");
    for (std::size_t i = 0; i < taps.size(); ++i) {
        if (!(taps[i].power >= 0.0))
            throw ConfigError("tap " + std::to_string(i) + " has negative power");
        if (i > 0 && !(taps[i].delay_s > taps[i - 1].delay_s))
            throw ConfigError("tap delays must be strictly increasing");
    }
    if (normalize && !(total_power() > 0.0))
        throw ConfigError("cannot normalize a profile with zero total power");
}

double ChannelProfile::total_power() const
{
    double s = 0;
    for (const auto& t : taps) s += t.power;
    return s;
}

std::vector<double> ChannelProfile::powers() const
{
    const double scale = normalize ? 1.0 / total_power() : 1.0;
    std::vector<double> p;
    for (const auto& t : taps) p.push_back(t.power * scale);
    return p;
}

std::vector<int> ChannelProfile::delays_in_samples(double sample_interval) const
{
    std::vector<int> d;
    for (const auto& t : taps) d.push_back(static_cast<int>(std::lround(t.delay_s / sample_interval)));
    return d;
}

ChannelProfile eva_profile(bool normalize)
{
    static const double delay_ns[] = {0, 30, 150, 310, 370, 710, 1090, 1730, 2510};
    static const double power_db[] = {0, -1.5, -1.4, -3.6, -0.6, -9.1, -7, -12, -16.9};
    ChannelProfile p;
    p.normalize = normalize;
    for (int i = 0; i < 9; ++i)
        p.taps.push_back({delay_ns[i] * 1e-9, std::pow(10.0, power_db[i] / 10.0)});
    return p;
}

ChannelProfile single_tap_profile(double delay_s)
{
    ChannelProfile p;
    p.taps.push_back({0.0, delay_s == 0.0 ? 1.0 : 0.0});
    if (delay_s != 0.0)
        p.taps.push_back({delay_s, 1.0});
    return p;
}

ChannelProfile profile_from_json(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("channel profile: ") + e.what());
    }
    ChannelProfile p;
    for (auto it = j.begin(); it != j.end(); ++it)
        if (it.key() != "taps" && it.key() != "normalize")
            throw ConfigError("channel profile: unknown key '" + it.key() + "'");
    if (!j.contains("taps") || !j["taps"].is_array())
        throw ConfigError("channel profile: 'taps' array missing");
    for (const auto& t : j["taps"]) {
        for (auto it = t.begin(); it != t.end(); ++it)
            if (it.key() != "delay_ns" && it.key() != "power_db")
                throw ConfigError("channel profile: unknown tap key '" + it.key() + "'");
        p.taps.push_back({t.at("delay_ns").get<double>() * 1e-9,
                          std::pow(10.0, t.at("power_db").get<double>() / 10.0)});
    }
    p.normalize = j.value("normalize", true);
    p.validate();
    return p;
}

ComplexVector complex_gaussian(Eigen::Index n, double var, std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, std::sqrt(var / 2.0));
    ComplexVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double re = g(rng);
        v[i] = cplx(re, g(rng));
    }
    return v;
}

void add_awgn(ComplexVector& x, double var, std::mt19937_64& rng)
{
    if (var > 0.0)
        x += complex_gaussian(x.size(), var, rng);
}

ChannelRealization realize(const ChannelProfile& profile, int symbol_count, std::mt19937_64& rng,
                           bool tie)
{
    if (symbol_count < 1)
        throw ConfigError("realize: symbol_count must be >= 1");
    profile.validate();
    const auto pw = profile.powers();
    const int nt = static_cast<int>(pw.size());
    ChannelRealization r;
    r.gains.resize(symbol_count, nt);
    for (int i = 0; i < symbol_count; ++i)
        for (int l = 0; l < nt; ++l) {
            if (tie && i > 0) {
                r.gains(i, l) = r.gains(0, l);
            } else {
                std::normal_distribution<double> g(0.0, std::sqrt(pw[l] / 2.0));
                const double re = g(rng);
                r.gains(i, l) = cplx(re, g(rng));
            }
        }
    return r;
}

ComplexSignal apply_channel(const ComplexSignal& signal, const ChannelRealization& realization,
                            const ChannelProfile& profile, const SystemConfig& cfg)
{
    const auto d = profile.delays_in_samples(signal.sample_interval);
    if (static_cast<Eigen::Index>(d.size()) != realization.gains.cols())
        throw DimensionError("apply_channel: realization and profile tap counts differ");
    const int dmax = *std::max_element(d.begin(), d.end());
    const Eigen::Index n = signal.samples.size();
    const Eigen::Index T = cfg.symbol_length();
    const Eigen::Index last = realization.gains.rows() - 1;
    ComplexSignal out;
    out.sample_interval = signal.sample_interval;
    out.samples = ComplexVector::Zero(n + dmax);
    for (std::size_t l = 0; l < d.size(); ++l)
        for (Eigen::Index s = 0; s < n; ++s) {
            const Eigen::Index sym = std::min<Eigen::Index>(s / T, last);
            out.samples[s + d[l]] += realization.gains(sym, static_cast<Eigen::Index>(l)) * signal.samples[s];
        }
    return out;
}

ComplexVector frequency_response(const Eigen::VectorXcd& gains, const ChannelProfile& profile,
                                 const SystemConfig& cfg)
{
    const double ts = 1.0 / cfg.sample_rate_hz();
    const auto d = profile.delays_in_samples(ts);
    const auto ks = cfg.subcarrier_set();
    ComplexVector H = ComplexVector::Zero(static_cast<Eigen::Index>(ks.size()));
    for (std::size_t r = 0; r < ks.size(); ++r)
        for (std::size_t l = 0; l < d.size(); ++l)
            H[static_cast<Eigen::Index>(r)] +=
                gains[static_cast<Eigen::Index>(l)] * std::polar(1.0, -2.0 * kPi * ks[r] * d[l] / cfg.M);
    return H;
}

double Impairments::sto_samples(const SystemConfig& cfg) const
{
    return sto_s * cfg.sample_rate_hz();
}

Impairments Impairments::from_samples(double sto, double cfo_norm, double noise_var,
                                      const SystemConfig& cfg)
{
    Impairments imp;
    imp.sto_s = sto / cfg.sample_rate_hz();
    imp.cfo_hz = cfo_norm * cfg.subcarrier_spacing_hz;
    imp.noise_var = noise_var;
    return imp;
}

ComplexSignal apply_impairments(const ComplexSignal& signal, const Impairments& imp,
                                const SystemConfig& cfg, std::mt19937_64& rng)
{
    const double ds = imp.sto_s / signal.sample_interval;
    const long d = std::lround(ds);
    if (std::fabs(ds - static_cast<double>(d)) > 1e-6)
        throw ConfigError("STO of " + std::to_string(ds) +
                          " samples is not a whole number of samples; raise the oversampling");
    const Eigen::Index n = signal.samples.size();
    if (std::labs(d) >= n)
        throw ConfigError("STO exceeds the signal length");
    // The phasor advances 2pi eps / M per base-rate sample.
    const double eps = imp.cfo_normalized(cfg);
    const double base_per_sample = signal.sample_interval * cfg.sample_rate_hz();
    ComplexSignal out;
    out.sample_interval = signal.sample_interval;
    out.samples = ComplexVector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index src = i + d;
        if (src < 0 || src >= n) continue;
        const double t = static_cast<double>(i) * base_per_sample;
        out.samples[i] = signal.samples[src] * std::polar(1.0, 2.0 * kPi * eps * t / cfg.M);
    }
    add_awgn(out.samples, imp.noise_var, rng);
    return out;
}

std::mt19937_64 trial_rng(std::uint64_t master_seed, std::uint64_t stream, std::uint64_t index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace ncofdm
