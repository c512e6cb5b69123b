// Command-line front end for the pulsed-upconversion simulator.
//
// Exit codes: 0 success, 2 configuration error, 3 physics-validation error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "upconv/analysis.hpp"
#include "upconv/config.hpp"
#include "upconv/engine.hpp"

namespace {

using namespace upconv;

struct CommonOptions {
    std::string config_path;
    std::string out_dir = "out";
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    std::optional<int> shards;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("config", opts.config_path, "scenario config file (JSON)")
        ->required();
    cmd->add_option("--out-dir", opts.out_dir, "output directory");
    cmd->add_option("--format", opts.format, "histogram output format")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--seed", opts.seed, "override the scenario seed");
    cmd->add_option("--shards", opts.shards, "override the shard count");
}

ScenarioConfig load_config(const CommonOptions& opts) {
    ScenarioConfig cfg = ScenarioConfig::load(opts.config_path);
    if (opts.seed) cfg.run.seed = *opts.seed;
    if (opts.shards) cfg.run.shards = *opts.shards;
    cfg.validate();
    return cfg;
}

void report_run(const RunSummary& summary, const std::vector<std::string>& files) {
    std::fprintf(stderr, "scenario '%s': %llu triggers, %llu detected, %.1f ms\n",
                 summary.config.name.c_str(),
                 static_cast<unsigned long long>(summary.triggers),
                 static_cast<unsigned long long>(summary.detected_count),
                 summary.wall_ms);
    for (const auto& f : files) std::fprintf(stderr, "  wrote %s\n", f.c_str());
}

int cmd_run(const CommonOptions& opts, bool force_g2) {
    ScenarioConfig cfg = load_config(opts);
    if (force_g2) cfg.analysis.mode = AnalysisMode::G2;
    RunSummary summary = run_scenario(cfg);
    auto files = write_outputs(summary, opts.out_dir, opts.format);
    report_run(summary, files);
    return 0;
}

int cmd_sweep(const CommonOptions& opts, SweepParameter param,
              std::vector<double> values) {
    ScenarioConfig cfg = load_config(opts);
    if (values.empty() && param == SweepParameter::DeltaT)
        values = cfg.sweep_delay_ps;
    if (values.empty() && param == SweepParameter::TauMod)
        values = cfg.curve_tau_mod_ps;
    if (values.empty()) {
        std::fprintf(stderr, "empty value list; nothing to sweep\n");
        return 0;
    }
    SweepResult result = sweep(cfg, param, values);
    auto files = write_sweep_outputs(result, opts.out_dir, opts.format);
    for (const auto& f : files) std::fprintf(stderr, "  wrote %s\n", f.c_str());
    if (result.delay_fit)
        std::fprintf(stderr, "delay-sweep lifetime: %.1f +- %.1f ps\n",
                     result.delay_fit->lifetime_ps,
                     result.delay_fit->lifetime_sigma_ps);
    return 0;
}

int cmd_efficiency_curve(const CommonOptions& opts, std::vector<double> values) {
    ScenarioConfig cfg = load_config(opts);
    if (values.empty()) values = cfg.curve_tau_mod_ps;
    if (values.empty())
        values = {260.0, 500.0, 1250.0, 2500.0, 5000.0};
    const double excitation_rate_hz = 1e12 / cfg.timing.excitation_period_ps;
    auto curve = net_efficiency_curve(values, cfg.source,
                                      cfg.pump_train(0.0), cfg.conversion,
                                      excitation_rate_hz);
    auto files = write_efficiency_curve(curve, opts.out_dir);
    std::printf("tau_mod_ps,efficiency,rate_per_s\n");
    for (const auto& p : curve)
        std::printf("%g,%.6f,%.1f\n", p.tau_mod_ps, p.efficiency, p.rate_per_s);
    for (const auto& f : files) std::fprintf(stderr, "  wrote %s\n", f.c_str());
    return 0;
}

struct OracleOptions {
    std::string config_path;
    double power_mw = 85.0;
    double signal = 0.0;
    double background = 0.0;
    double tau_mod_ps = 260.0;
    double jitter_ps = 0.0;
    bool unsaturated = false;
    std::optional<double> delay_ps;
};

int cmd_oracle(const std::string& name, const OracleOptions& o) {
    if (name == "conversion-probability") {
        ConversionModel model;
        std::printf("conversion_probability(%g mW) = %.10g\n", o.power_mw,
                    conversion_probability(o.power_mw, model));
        return 0;
    }
    if (name == "g2-zero") {
        std::printf("analytic_g2_zero(S=%g, B=%g) = %.10g\n", o.signal,
                    o.background, analytic_g2_zero(o.signal, o.background));
        return 0;
    }
    if (name == "converted-fwhm") {
        std::printf("predicted_converted_fwhm(tau_mod=%g ps, jitter=%g ps, %s) = %.10g ps\n",
                    o.tau_mod_ps, o.jitter_ps,
                    o.unsaturated ? "unsaturated" : "saturated",
                    predicted_converted_fwhm(o.tau_mod_ps, o.jitter_ps,
                                             !o.unsaturated));
        return 0;
    }
    if (name == "net-efficiency" || name == "raman-rate") {
        if (o.config_path.empty())
            throw ConfigError("this oracle needs --config <scenario.json>");
        ScenarioConfig cfg = ScenarioConfig::load(o.config_path);
        if (name == "raman-rate") {
            const auto train = cfg.pump_train();
            const auto cw = PumpPulseTrain::cw_pump(cfg.pump.peak_power_mw);
            const double pulsed = mean_raman_rate_per_s(train, cfg.conversion);
            const double cw_rate = mean_raman_rate_per_s(cw, cfg.conversion);
            std::printf("mean_raman_rate = %.6g /s (CW equivalent %.6g /s", pulsed,
                        cw_rate);
            if (pulsed > 0.0) std::printf(", suppression %.3gx", cw_rate / pulsed);
            std::printf(")\n");
            return 0;
        }
        cfg.timing.pulse_fwhm_ps = o.tau_mod_ps;
        PumpPulseTrain train = cfg.pump_train(o.delay_ps.value_or(0.0));
        const auto photon = cfg.source.wavepacket();
        if (!o.delay_ps)
            train.delay_ps = optimal_delay(photon, train, cfg.conversion);
        const double eff = net_efficiency(photon, train, cfg.conversion);
        const double rate = (1e12 / cfg.timing.excitation_period_ps) *
                            cfg.source.collection_efficiency *
                            cfg.source.emission_prob_per_pulse * eff;
        std::printf("net_efficiency(tau_mod=%g ps, delay=%.3f ps) = %.6f  rate = %.1f /s\n",
                    o.tau_mod_ps, train.delay_ps, eff, rate);
        return 0;
    }
    throw ConfigError("unknown oracle '" + name +
                      "'; available: conversion-probability, g2-zero, "
                      "converted-fwhm, net-efficiency, raman-rate");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pulsed single-photon frequency-upconversion simulator"};
    app.require_subcommand(1);

    CommonOptions run_opts, g2_opts, sw_opts, sd_opts, curve_opts;
    std::vector<double> width_values, delay_values, curve_values;

    auto* run_cmd = app.add_subcommand("run", "run one scenario");
    add_common(run_cmd, run_opts);

    auto* g2_cmd = app.add_subcommand("g2", "run a scenario in g2 (HBT) mode");
    add_common(g2_cmd, g2_opts);

    auto* sw_cmd =
        app.add_subcommand("sweep-width", "Monte-Carlo sweep over pump FWHM");
    add_common(sw_cmd, sw_opts);
    sw_cmd->add_option("--values", width_values, "pump FWHM values in ps")
        ->delimiter(',');

    auto* sd_cmd =
        app.add_subcommand("sweep-delay", "Monte-Carlo sweep over pump delay");
    add_common(sd_cmd, sd_opts);
    sd_cmd->add_option("--values", delay_values, "pump delay values in ps")
        ->delimiter(',');

    auto* curve_cmd = app.add_subcommand(
        "efficiency-curve", "analytic net efficiency vs pump FWHM");
    add_common(curve_cmd, curve_opts);
    curve_cmd->add_option("--values", curve_values, "pump FWHM values in ps")
        ->delimiter(',');

    std::string oracle_name;
    OracleOptions oracle_opts;
    auto* oracle_cmd = app.add_subcommand("oracle", "print analytic values");
    oracle_cmd->add_option("name", oracle_name, "oracle name")->required();
    oracle_cmd->add_option("--config", oracle_opts.config_path, "scenario config");
    oracle_cmd->add_option("--power", oracle_opts.power_mw, "pump power in mW");
    oracle_cmd->add_option("--signal", oracle_opts.signal, "signal rate /s");
    oracle_cmd->add_option("--background", oracle_opts.background,
                           "background rate /s");
    oracle_cmd->add_option("--tau-mod", oracle_opts.tau_mod_ps, "pump FWHM in ps");
    oracle_cmd->add_option("--jitter", oracle_opts.jitter_ps,
                           "detector jitter FWHM in ps");
    oracle_cmd->add_flag("--unsaturated", oracle_opts.unsaturated,
                         "disable the saturation broadening factor");
    oracle_cmd->add_option("--delay", oracle_opts.delay_ps,
                           "pump delay in ps (default: optimal)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run_cmd->parsed()) return cmd_run(run_opts, false);
        if (g2_cmd->parsed()) return cmd_run(g2_opts, true);
        if (sw_cmd->parsed())
            return cmd_sweep(sw_opts, upconv::SweepParameter::TauMod, width_values);
        if (sd_cmd->parsed())
            return cmd_sweep(sd_opts, upconv::SweepParameter::DeltaT, delay_values);
        if (curve_cmd->parsed()) return cmd_efficiency_curve(curve_opts, curve_values);
        if (oracle_cmd->parsed()) return cmd_oracle(oracle_name, oracle_opts);
    } catch (const upconv::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const upconv::PhysicsError& e) {
        std::fprintf(stderr, "physics validation error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
