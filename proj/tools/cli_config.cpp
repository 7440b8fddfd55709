// SPDX-License-Identifier: Apache-2.0
#include "cli_config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace ncofdm::cli {

using nlohmann::json;

json default_config()
{
    return json::parse(R"({
  "system": {"K": 256, "M": 2048, "Mcp": 144, "L": 144, "N": 2, "qam_order": 16, "oversample": 8,
             "Ms": 64, "window": "blackman", "pf_layout": "product", "subcarrier_spacing_hz": 15000.0,
             "subcarriers": []},
  "channel": "eva",
  "seed": 1,
  "threads": 0,
  "psd": {"realizations": 256, "symbols": 64, "welch_symbols": 400, "max_bin": 400,
          "analytic": "monte-carlo", "slope_from_b": 10.0, "slope_to_b": 100.0},
  "ber": {"snr_db": "0:2:30", "symbols": 10000, "block": 20},
  "sinr": {"snr_db": "0:5:30", "case": "perfect", "symbols": 10000, "block": 20, "sto": 30.0, "cfo": 0.074,
           "trials": 1000},
  "ebn0": {"reference_db": 30.0, "n": [0, 1, 2, 3, 4], "l": [36, 72, 144, 1000], "baseline_symbols": 2000},
  "sync": {"snr_db": "0:5:30", "estimator": "cp", "scheme": "low-interference", "trials": 1000, "offset": 30,
           "cfo": 0.0074, "correlation": false, "realizations": 10000},
  "complexity": {"l": [36, 72, 144, 288, 500, 1000]},
  "validate": {"criteria": []}
})");
}

namespace {

// keys whose value may be a string or a structured value
bool polymorphic(const std::string& key)
{
    return key == "channel" || key == "snr_db";
}

int line_of(const std::string& text, const std::string& key)
{
    const auto pos = text.find("\"" + key + "\"");
    if (pos == std::string::npos)
        return 0;
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
}

bool same_kind(const json& a, const json& b)
{
    if (a.is_number() && b.is_number())
        return !(a.is_number_integer() && b.is_number_float());
    return a.type() == b.type();
}

void merge_into(json& base, const json& over, const std::string& prefix, const std::string& text,
                const std::string& source)
{
    for (auto it = over.begin(); it != over.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        const std::string where = source + ":" + std::to_string(line_of(text, it.key())) + ": ";
        if (!base.contains(it.key()))
            throw ConfigError(where + "unknown key '" + path + "'");
        json& dst = base[it.key()];
        if (polymorphic(it.key())) {
            dst = it.value();
            continue;
        }
        if (dst.is_object()) {
            if (!it.value().is_object())
                throw ConfigError(where + "'" + path + "' must be an object");
            merge_into(dst, it.value(), path, text, source);
            continue;
        }
        if (!same_kind(dst, it.value()))
            throw ConfigError(where + "'" + path + "' expects a " + std::string(dst.type_name()) + ", got " +
                              it.value().type_name());
        dst = it.value();
    }
}

void require(bool ok, const std::string& what)
{
    if (!ok)
        throw ConfigError("config: " + what);
}

int positive_int(const json& block, const char* key, const std::string& name)
{
    const int v = block.at(key).get<int>();
    require(v >= 1, name + "." + key + " must be at least 1");
    return v;
}

}  // namespace

json merge_config(const json& base, const std::string& text, const std::string& source)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(source + ": " + e.what());
    }
    if (!doc.is_object())
        throw ConfigError(source + ":1: top level must be a JSON object");
    json out = base;
    merge_into(out, doc, "", text, source);
    return out;
}

void set_path(json& cfg, const std::string& path, const json& value)
{
    json* node = &cfg;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!node->is_object() || !node->contains(key))
            throw ConfigError("unknown setting '" + path + "'");
        node = &(*node)[key];
        if (dot == std::string::npos)
            break;
        start = dot + 1;
    }
    *node = value;
}

std::vector<double> parse_range(const json& v)
{
    std::vector<double> out;
    if (v.is_number()) {
        out.push_back(v.get<double>());
    } else if (v.is_array()) {
        for (const auto& x : v) {
            require(x.is_number(), "SNR list entries must be numbers");
            out.push_back(x.get<double>());
        }
    } else if (v.is_string()) {
        const std::string s = v.get<std::string>();
        double a = 0, step = 0, b = 0;
        char tail = 0;
        if (std::sscanf(s.c_str(), "%lf:%lf:%lf%c", &a, &step, &b, &tail) == 3) {
            require(step > 0 && b >= a, "range '" + s + "' needs a positive step and end >= start");
            const int n = static_cast<int>(std::floor((b - a) / step + 1e-9));
            for (int i = 0; i <= n; ++i)
                out.push_back(a + i * step);
        } else if (std::sscanf(s.c_str(), "%lf%c", &a, &tail) == 1) {
            out.push_back(a);
        } else {
            throw ConfigError("config: cannot read range '" + s + "' (expected start:step:end)");
        }
    } else {
        throw ConfigError("config: SNR range must be a string, number or array");
    }
    require(!out.empty(), "empty SNR range");
    return out;
}

SystemConfig system_config(const json& cfg)
{
    const json& s = cfg.at("system");
    SystemConfig c;
    c.K = s.at("K").get<int>();
    c.M = s.at("M").get<int>();
    c.Mcp = s.at("Mcp").get<int>();
    c.L = s.at("L").get<int>();
    c.N = s.at("N").get<int>();
    c.qam_order = s.at("qam_order").get<int>();
    c.oversample = s.at("oversample").get<int>();
    c.Ms = s.at("Ms").get<int>();
    c.window = window_from_string(s.at("window").get<std::string>());
    c.pf_layout = pf_layout_from_string(s.at("pf_layout").get<std::string>());
    c.subcarrier_spacing_hz = s.at("subcarrier_spacing_hz").get<double>();
    c.subcarriers = s.at("subcarriers").get<std::vector<int>>();
    c.validate();
    return c;
}

ChannelProfile channel_profile(const json& cfg)
{
    const json& ch = cfg.at("channel");
    if (ch.is_string()) {
        const std::string name = ch.get<std::string>();
        if (name == "eva")
            return eva_profile();
        if (name == "flat" || name == "awgn")
            return single_tap_profile();
        throw ConfigError("config: channel must be 'eva', 'flat' or a tap profile object, got '" + name + "'");
    }
    require(ch.is_object(), "channel must be a name or a tap profile object");
    return profile_from_json(ch.dump());
}

void validate_config(const json& cfg)
{
    system_config(cfg);
    channel_profile(cfg);
    require(cfg.at("seed").is_number_unsigned() || cfg.at("seed").get<long long>() >= 0,
            "seed must be a non-negative integer");
    require(cfg.at("threads").get<int>() >= 0, "threads must be non-negative");

    const json& psd = cfg.at("psd");
    positive_int(psd, "realizations", "psd");
    positive_int(psd, "symbols", "psd");
    positive_int(psd, "welch_symbols", "psd");
    positive_int(psd, "max_bin", "psd");
    const std::string an = psd.at("analytic").get<std::string>();
    require(an == "monte-carlo" || an == "expected", "psd.analytic must be 'monte-carlo' or 'expected'");
    require(psd.at("slope_from_b").get<double>() > 0 &&
                psd.at("slope_to_b").get<double>() > psd.at("slope_from_b").get<double>(),
            "psd slope decade needs 0 < slope_from_b < slope_to_b");

    const json& ber = cfg.at("ber");
    parse_range(ber.at("snr_db"));
    require(positive_int(ber, "block", "ber") <= positive_int(ber, "symbols", "ber"),
            "ber.block must not exceed ber.symbols");

    const json& sinr = cfg.at("sinr");
    parse_range(sinr.at("snr_db"));
    const std::string cs = sinr.at("case").get<std::string>();
    require(cs == "perfect" || cs == "late" || cs == "early" || cs == "early-isi",
            "sinr.case must be one of perfect, late, early, early-isi");
    require(positive_int(sinr, "block", "sinr") >= 2, "sinr.block must be at least 2");
    require(sinr.at("block").get<int>() <= positive_int(sinr, "symbols", "sinr"),
            "sinr.block must not exceed sinr.symbols");
    positive_int(sinr, "trials", "sinr");
    require(sinr.at("sto").get<double>() >= 0, "sinr.sto must be non-negative");

    const json& eb = cfg.at("ebn0");
    for (int n : eb.at("n").get<std::vector<int>>())
        require(n >= 0, "ebn0.n entries must be non-negative");
    for (int l : eb.at("l").get<std::vector<int>>())
        require(l >= 2, "ebn0.l entries must be at least 2");
    positive_int(eb, "baseline_symbols", "ebn0");

    const json& sy = cfg.at("sync");
    parse_range(sy.at("snr_db"));
    const std::string est = sy.at("estimator").get<std::string>();
    require(est == "cp" || est == "training", "sync.estimator must be 'cp' or 'training'");
    const std::string sch = sy.at("scheme").get<std::string>();
    require(sch == "low-interference" || sch == "ofdm", "sync.scheme must be 'low-interference' or 'ofdm'");
    positive_int(sy, "trials", "sync");
    positive_int(sy, "realizations", "sync");
    require(sy.at("offset").get<int>() >= 0, "sync.offset must be non-negative");

    for (int l : cfg.at("complexity").at("l").get<std::vector<int>>())
        require(l >= 2, "complexity.l entries must be at least 2");
    for (int c : cfg.at("validate").at("criteria").get<std::vector<int>>())
        require(c >= 1 && c <= 9, "validate.criteria entries must lie in 1..9");
}

std::uint64_t config_hash(const json& cfg)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : cfg.dump()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace ncofdm::cli
