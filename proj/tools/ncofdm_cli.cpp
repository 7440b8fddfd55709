// SPDX-License-Identifier: Apache-2.0
// Experiment runner: psd, ber, sinr, ebn0, sync, complexity, validate.
// Each run writes <out>/<subcommand>.csv and <out>/<subcommand>.manifest.json.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "acceptance_suite.hpp"
#include "cli_config.hpp"
#include "ncofdm/analysis.hpp"
#include "ncofdm/parallel.hpp"
#include "ncofdm/spectral.hpp"
#include "ncofdm/sync.hpp"

#ifndef NCOFDM_GIT_DESCRIBE
#define NCOFDM_GIT_DESCRIBE "unknown"
#endif

using nlohmann::json;
using namespace ncofdm;

namespace {

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string quoted(const std::string& s)
{
    std::string o = "\"";
    for (char c : s) {
        if (c == '"')
            o += '"';
        o += c;
    }
    return o + "\"";
}

// threads change wall time only, so they stay out of the CSV echo and the hash
json experiment_view(json cfg)
{
    cfg.erase("threads");
    return cfg;
}

class Csv {
public:
    Csv(const std::string& sub, const json& cfg, const std::vector<std::string>& columns)
    {
        s_ << "# schema=1\n# subcommand=" << sub << "\n# config=" << experiment_view(cfg).dump() << "\n";
        for (std::size_t i = 0; i < columns.size(); ++i)
            s_ << (i ? "," : "") << columns[i];
        s_ << "\n";
    }
    void comment(const std::string& c) { s_ << "# " << c << "\n"; }
    void row(const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i)
            s_ << (i ? "," : "") << cells[i];
        s_ << "\n";
    }
    std::string str() const { return s_.str(); }

private:
    std::ostringstream s_;
};

struct Run {
    std::string sub;
    json cfg;
    std::filesystem::path out;
    int threads = 1;
    std::uint64_t seed = 1;
};

void write_file(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream f(p, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot write " + p.string());
    f << text;
}

int run_psd(const Run& r, Csv*& csv_out)
{
    const json& p = r.cfg.at("psd");
    const SystemConfig cfg = cli::system_config(r.cfg);
    const SmootherContext ctx = build_smoother(cfg);
    MonteCarloSpec mc;
    mc.realizations = p.at("realizations");
    mc.symbols = p.at("symbols");
    mc.seed = r.seed;
    mc.threads = r.threads;
    const int max_bin = p.at("max_bin");
    if (max_bin + 8 >= cfg.M / 2)
        throw ConfigError("config: psd.max_bin must stay below M/2 - 8");
    const auto how = p.at("analytic") == "expected" ? PsdEvaluation::Expected : PsdEvaluation::MonteCarlo;
    const PsdEstimate view = analytic_psd_welch_view(cfg, ctx, mc, how, cfg.M, max_bin, 4);
    auto rng = trial_rng(r.seed, 3, 0);
    WelchOptions wo;
    wo.segment = cfg.M;
    wo.overlap = cfg.M / 4;
    wo.inband_half_width_hz = band_edge_hz(cfg);
    const PsdEstimate sim = welch_psd(simulated_stream(cfg, ctx, p.at("welch_symbols"), rng), wo);

    const double edge = band_edge_hz(cfg), B = 2.0 * edge;
    const double lo = p.at("slope_from_b"), hi = p.at("slope_to_b");
    const double slope = fit_slope(analytic_psd(far_field_grid(cfg, lo, hi, 120), cfg, ctx, mc), edge + lo * B,
                                   edge + hi * B);

    auto* csv = new Csv("psd", r.cfg, {"kind", "freq_hz", "analytic_db", "welch_db"});
    csv->comment("analytic: expected Welch reading (Hann kernel applied); both columns in dB re in-band mean");
    csv->comment("slope row: analytic dB/decade against log10(f - band edge) over [" + num(lo) + "B, " + num(hi) +
                 "B] past the edge");
    for (int b = -max_bin; b <= max_bin; ++b)
        csv->row({"psd", num(view.freqs_hz[b + max_bin]), num(view.values_db[b + max_bin]),
                  num(sim.values_db[b + cfg.M / 2])});
    csv->row({"slope", "", num(slope), ""});
    csv_out = csv;
    std::cerr << "psd: N=" << cfg.N << " L=" << cfg.L << " far-field slope " << num(slope) << " dB/decade\n";
    return 0;
}

int run_ber(const Run& r, Csv*& csv_out)
{
    const json& p = r.cfg.at("ber");
    const SystemConfig cfg = cli::system_config(r.cfg);
    const SmootherContext ctx = build_smoother(cfg);
    const ChannelProfile prof = cli::channel_profile(r.cfg);
    const RealVector sw = smooth_interference_power(ctx, prof, cfg);
    const double mean_alpha = prof.normalize ? 1.0 : prof.total_power();
    auto* csv = new Csv("ber", r.cfg,
                        {"ebn0_db", "n", "l", "ber_closed_form", "ber_quadrature", "ber_simulated", "bit_errors", "bits"});
    csv->comment("ber_closed_form is empty where the series cannot be summed in long double");
    const auto snrs = cli::parse_range(p.at("snr_db"));
    for (std::size_t i = 0; i < snrs.size(); ++i) {
        const double nv = noise_var_for_ebn0(snrs[i], cfg, mean_alpha);
        BerSeriesParams bp;
        bp.J = cfg.qam_order;
        bp.M = cfg.M;
        bp.sigma_n_sq = nv;
        bp.mean_alpha = mean_alpha;
        std::string closed;
        try {
            closed = num(average_ber(sw, bp, true));
        } catch (const ConvergenceError&) {
        }
        const double quad = average_ber(sw, bp, false);
        const auto sim = ber_monte_carlo(ctx, prof, cfg, nv, p.at("symbols"), p.at("block"), r.seed + i, r.threads);
        csv->row({num(snrs[i]), std::to_string(cfg.N), std::to_string(cfg.L), closed, num(quad), num(sim.ber),
                  std::to_string(sim.bit_errors), std::to_string(sim.bits)});
    }
    csv_out = csv;
    return 0;
}

int run_sinr(const Run& r, Csv*& csv_out)
{
    const json& p = r.cfg.at("sinr");
    const SystemConfig cfg = cli::system_config(r.cfg);
    const SmootherContext ctx = build_smoother(cfg);
    const ChannelProfile prof = cli::channel_profile(r.cfg);
    const double mean_alpha = prof.normalize ? 1.0 : prof.total_power();
    const std::string which = p.at("case");
    auto* csv = new Csv("sinr", r.cfg, {"ebn0_db", "case", "n", "l", "sinr_analytic_db", "sinr_simulated_db"});
    const auto snrs = cli::parse_range(p.at("snr_db"));
    const RealVector sw = smooth_interference_power(ctx, prof, cfg);
    for (std::size_t i = 0; i < snrs.size(); ++i) {
        const double nv = noise_var_for_ebn0(snrs[i], cfg, mean_alpha);
        double a = 0, m = 0;
        if (which == "perfect") {
            a = 10 * std::log10(average_sinr(sw, nv, cfg.M, mean_alpha));
            m = sinr_perfect_sync_monte_carlo(ctx, prof, cfg, nv, p.at("symbols"), p.at("block"), r.seed + i,
                                              r.threads)
                    .mean_db;
        } else {
            SinrCaseInputs in;
            in.cfg = cfg;
            in.ctx = &ctx;
            in.profile = prof;
            in.sto_samples = p.at("sto");
            in.cfo = p.at("cfo");
            in.noise_var = nv;
            in.oversample = cfg.oversample;
            const SyncCase c = which == "late"    ? SyncCase::LateWindow
                               : which == "early" ? SyncCase::EarlyWindow
                                                  : SyncCase::EarlyWindowIsi;
            a = 10 * std::log10(sinr_case(in, c).gamma);
            m = 10 * std::log10(sinr_case_monte_carlo(in, c, p.at("trials"), r.seed + i).gamma);
        }
        csv->row({num(snrs[i]), which, std::to_string(cfg.N), std::to_string(cfg.L), num(a), num(m)});
    }
    csv_out = csv;
    return 0;
}

int run_ebn0(const Run& r, Csv*& csv_out)
{
    const json& p = r.cfg.at("ebn0");
    const SystemConfig base = cli::system_config(r.cfg);
    const double ref = p.at("reference_db");
    auto* csv = new Csv("ebn0", r.cfg, {"scheme", "n", "l", "ebn0_db", "loss_db"});
    csv->comment("reference: plain OFDM at " + num(ref) + " dB with the configured oversampling");
    for (int n : p.at("n").get<std::vector<int>>())
        for (int l : p.at("l").get<std::vector<int>>()) {
            SystemConfig cfg = base;
            cfg.N = n;
            cfg.L = l;
            cfg.validate();
            const double e = ebn0_low_interference(noise_var_for_reference(ref, cfg), build_smoother(cfg), cfg);
            csv->row({"low-interference", std::to_string(n), std::to_string(l), num(e), num(ref - e)});
        }
    auto rng = trial_rng(r.seed, 7, 0);
    const double dist = baseline_distortion_power(base, p.at("baseline_symbols"), rng);
    const double e = ebn0_db(noise_var_for_reference(ref, base), dist, base);
    csv->row({"baseline-least-norm", std::to_string(base.N), std::to_string(base.L), num(e), num(ref - e)});
    csv_out = csv;
    return 0;
}

int run_sync(const Run& r, Csv*& csv_out)
{
    const json& p = r.cfg.at("sync");
    const SystemConfig cfg = cli::system_config(r.cfg);
    const ChannelProfile prof = cli::channel_profile(r.cfg);
    if (p.at("correlation").get<bool>()) {
        const SmootherContext ctx = build_smoother(cfg);
        CorrelationInputs in{cfg, &ctx, prof, 0.0, p.at("cfo")};
        const int t_end = std::min(0, -cfg.Mcp + static_cast<int>(cfg.TL()));
        std::vector<int> ts;
        for (int t = -cfg.Mcp; t <= t_end; ++t)
            ts.push_back(t);
        const auto emp = empirical_correlation(ts, in, p.at("realizations"), r.seed, r.threads);
        auto* csv = new Csv("sync", r.cfg, {"t_samples", "analytic_re", "analytic_im", "analytic_abs", "empirical_abs"});
        csv->comment("lag M; t relative to the body start of the observed symbol");
        const auto delays = prof.delays_in_samples(1.0 / cfg.sample_rate_hz());
        const double tau_max = *std::max_element(delays.begin(), delays.end());
        csv->comment("analytic columns hold for t >= " + num(-cfg.Mcp + tau_max) +
                     "; earlier samples of the delayed taps come from the previous symbol");
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const cplx a = analytic_correlation_ts(ts[i], in);
            csv->row({std::to_string(ts[i]), num(a.real()), num(a.imag()), num(std::abs(a)), num(std::abs(emp[i]))});
        }
        csv_out = csv;
        return 0;
    }
    StoExperiment ex;
    ex.cfg = cfg;
    ex.smoothed = p.at("scheme") == "low-interference";
    ex.profile = prof;
    ex.estimator = p.at("estimator") == "cp" ? StoEstimator::CyclicPrefix : StoEstimator::Training;
    ex.offset = p.at("offset");
    ex.cfo = p.at("cfo");
    ex.ebn0_db = cli::parse_range(p.at("snr_db"));
    ex.trials = p.at("trials");
    ex.seed = r.seed;
    ex.threads = r.threads;
    auto* csv = new Csv("sync", r.cfg, {"snr_db", "estimator", "scheme", "n", "l", "mse_samples_sq", "trials"});
    csv->comment("timing error taken modulo M + Mcp");
    for (const auto& row : sto_error_variance(ex))
        csv->row({num(row.ebn0_db), to_string(row.estimator), p.at("scheme").get<std::string>(),
                  std::to_string(row.N), std::to_string(row.L), num(row.mse), std::to_string(row.trials)});
    csv_out = csv;
    return 0;
}

int run_complexity(const Run& r, Csv*& csv_out)
{
    const SystemConfig base = cli::system_config(r.cfg);
    auto* csv = new Csv("complexity", r.cfg, {"scheme", "k", "n", "l", "real_mults", "formula"});
    csv->comment("baseline: least-norm projection in matrix form, not a published precoder");
    for (int l : r.cfg.at("complexity").at("l").get<std::vector<int>>()) {
        SystemConfig cfg = base;
        cfg.L = l;
        cfg.validate();
        const std::string k = std::to_string(cfg.subcarrier_set().size());
        csv->row({"low-interference", k, std::to_string(cfg.N), std::to_string(l),
                  std::to_string(complexity_count(Scheme::LowInterference, cfg)),
                  std::to_string(complexity_formula_low_interference(cfg))});
        csv->row({"baseline-least-norm", k, std::to_string(cfg.N), std::to_string(l),
                  std::to_string(complexity_count(Scheme::BaselineProjection, cfg)), ""});
    }
    csv_out = csv;
    return 0;
}

int run_validate(const Run& r, Csv*& csv_out)
{
    acceptance::Options opt;
    opt.seed = r.seed;
    opt.threads = r.threads;
    opt.only = r.cfg.at("validate").at("criteria").get<std::vector<int>>();
    const auto res = acceptance::run(opt, std::cout, std::cerr);
    auto* csv = new Csv("validate", r.cfg, {"criterion", "result", "summary"});
    bool ok = true;
    for (const auto& o : res) {
        csv->row({std::to_string(o.id), o.pass ? "PASS" : "FAIL", quoted(o.summary)});
        ok = ok && o.pass;
    }
    csv_out = csv;
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"low-interference N-continuous OFDM experiment runner"};
    app.require_subcommand(1);
    std::string config_path, out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    app.add_option("--config", config_path, "JSON configuration; flags override its fields");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads (0 or unset: NCOFDM_THREADS, else 1)");

    // flag -> dotted config path, per subcommand
    std::vector<std::tuple<CLI::App*, std::string, std::string, std::string>> int_flags, dbl_flags, str_flags;
    std::map<std::string, std::optional<long long>> ints;
    std::map<std::string, std::optional<double>> dbls;
    std::map<std::string, std::optional<std::string>> strs;
    auto add_common = [&](CLI::App* sub) {
        sub->fallthrough();
        const std::string s = sub->get_name();
        sub->add_option("--n", ints[s + "system.N"], "highest continuous derivative order N");
        sub->add_option("--l", ints[s + "system.L"], "smooth-signal length L in samples");
        sub->add_option("--k", ints[s + "system.K"], "active subcarriers");
        sub->add_option("--qam", ints[s + "system.qam_order"], "square QAM order");
        sub->add_option("--channel", strs[s + "channel"], "eva or flat");
    };
    auto add_int = [&](CLI::App* sub, const std::string& flag, const std::string& path, const std::string& help) {
        sub->add_option(flag, ints[sub->get_name() + path], help);
    };
    auto add_dbl = [&](CLI::App* sub, const std::string& flag, const std::string& path, const std::string& help) {
        sub->add_option(flag, dbls[sub->get_name() + path], help);
    };
    auto add_str = [&](CLI::App* sub, const std::string& flag, const std::string& path, const std::string& help) {
        sub->add_option(flag, strs[sub->get_name() + path], help);
    };

    auto* psd = app.add_subcommand("psd", "analytic and Welch PSD, far-field slope");
    add_common(psd);
    add_int(psd, "--realizations", "psd.realizations", "Monte-Carlo realizations");
    add_int(psd, "--symbols", "psd.symbols", "symbols per realization");
    add_int(psd, "--welch-symbols", "psd.welch_symbols", "symbols in the simulated Welch stream");
    add_int(psd, "--max-bin", "psd.max_bin", "largest |Welch bin| written");
    add_str(psd, "--analytic", "psd.analytic", "monte-carlo or expected");

    auto* ber = app.add_subcommand("ber", "BER: closed form, quadrature and simulation");
    add_common(ber);
    add_str(ber, "--snr", "ber.snr_db", "Eb/N0 range start:step:end in dB");
    add_int(ber, "--symbols", "ber.symbols", "simulated symbols per point");

    auto* sinr = app.add_subcommand("sinr", "SINR: analytic against simulation");
    add_common(sinr);
    add_str(sinr, "--snr", "sinr.snr_db", "Eb/N0 range start:step:end in dB");
    add_str(sinr, "--case", "sinr.case", "perfect, late, early or early-isi");
    add_int(sinr, "--symbols", "sinr.symbols", "simulated symbols per point (perfect sync)");
    add_int(sinr, "--trials", "sinr.trials", "simulated trials per point (timing-offset cases)");
    add_dbl(sinr, "--sto", "sinr.sto", "timing offset in samples");
    add_dbl(sinr, "--cfo", "sinr.cfo", "frequency offset normalized to the subcarrier spacing");

    auto* eb = app.add_subcommand("ebn0", "Eb/N0 loss of the smooth signal and of the baseline");
    add_common(eb);
    add_dbl(eb, "--reference", "ebn0.reference_db", "reference Eb/N0 in dB");

    auto* sy = app.add_subcommand("sync", "timing-offset estimation MSE or correlation function");
    add_common(sy);
    add_str(sy, "--snr", "sync.snr_db", "Eb/N0 range start:step:end in dB");
    add_str(sy, "--estimator", "sync.estimator", "cp or training");
    add_str(sy, "--scheme", "sync.scheme", "low-interference or ofdm");
    add_int(sy, "--trials", "sync.trials", "trials per point");
    add_dbl(sy, "--cfo", "sync.cfo", "frequency offset normalized to the subcarrier spacing");
    bool correlation = false;
    sy->add_flag("--correlation", correlation, "write the correlation function instead of MSE");

    auto* cx = app.add_subcommand("complexity", "real-multiplication counts per symbol");
    add_common(cx);

    auto* va = app.add_subcommand("validate", "acceptance suite; exit 1 on any breach");
    std::vector<int> only;
    va->add_option("--only", only, "criteria to run")->check(CLI::Range(1, 9));
    va->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();

    Run run;
    run.sub = name;
    try {
        json cfg = cli::default_config();
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f)
                throw ConfigError("cannot read config file " + config_path);
            std::stringstream text;
            text << f.rdbuf();
            cfg = cli::merge_config(cfg, text.str(), config_path);
        }
        for (auto& [key, v] : ints)
            if (v && key.rfind(name, 0) == 0)
                cli::set_path(cfg, key.substr(name.size()), *v);
        for (auto& [key, v] : dbls)
            if (v && key.rfind(name, 0) == 0)
                cli::set_path(cfg, key.substr(name.size()), *v);
        for (auto& [key, v] : strs)
            if (v && key.rfind(name, 0) == 0)
                cli::set_path(cfg, key.substr(name.size()), *v);
        if (correlation)
            cli::set_path(cfg, "sync.correlation", true);
        if (!only.empty())
            cli::set_path(cfg, "validate.criteria", only);
        if (seed)
            cli::set_path(cfg, "seed", *seed);
        if (threads)
            cli::set_path(cfg, "threads", *threads);
        cli::validate_config(cfg);
        run.cfg = cfg;
        run.seed = cfg.at("seed").get<std::uint64_t>();
        run.threads = resolve_threads(cfg.at("threads").get<int>());
        run.out = out_dir;
        std::filesystem::create_directories(run.out);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    const auto t0 = std::chrono::steady_clock::now();
    Csv* csv = nullptr;
    int code = 0;
    try {
        if (name == "psd")
            code = run_psd(run, csv);
        else if (name == "ber")
            code = run_ber(run, csv);
        else if (name == "sinr")
            code = run_sinr(run, csv);
        else if (name == "ebn0")
            code = run_ebn0(run, csv);
        else if (name == "sync")
            code = run_sync(run, csv);
        else if (name == "complexity")
            code = run_complexity(run, csv);
        else
            code = run_validate(run, csv);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << name << ": " << e.what() << "\n";
        return 3;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::unique_ptr<Csv> owned(csv);

    const auto csv_path = run.out / (name + ".csv");
    const auto man_path = run.out / (name + ".manifest.json");
    try {
        write_file(csv_path, owned->str());
        json man;
        man["subcommand"] = name;
        man["config"] = run.cfg;
        man["config_hash"] = cli::hex64(cli::config_hash(experiment_view(run.cfg)));
        man["seed"] = run.seed;
        man["threads"] = run.threads;
        man["git_describe"] = NCOFDM_GIT_DESCRIBE;
        man["wall_time_s"] = wall;
        man["outputs"] = {csv_path.filename().string()};
        man["exit_code"] = code;
        write_file(man_path, man.dump(2) + "\n");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    std::cerr << name << ": wrote " << csv_path.string() << " (" << num(wall) << " s)\n";
    return code;
}
