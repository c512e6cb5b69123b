#include "upconv/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

namespace upconv {

namespace {

namespace fs = std::filesystem;

double binomial_sigma(double p, double n) {
    if (n <= 0.0) return 0.0;
    return std::sqrt(std::max(p * (1.0 - p), 0.0) / n);
}

ordered_json value_sigma(double v, double s) {
    ordered_json j;
    j["value"] = v;
    j["sigma"] = s;
    return j;
}

void analyze(RunSummary& s) {
    const auto& a = s.config.analysis;
    if (s.tcspc) {
        if (a.estimate_fwhm) {
            try {
                s.fwhm = estimate_fwhm(*s.tcspc, a.background_fraction);
            } catch (const PhysicsError& e) {
                s.notes.push_back(std::string("fwhm: ") + e.what());
            }
        }
        if (a.lifetime_window_ps) {
            try {
                s.lifetime = fit_lifetime(*s.tcspc, a.lifetime_window_ps->first,
                                          a.lifetime_window_ps->second,
                                          a.background_window_ps);
            } catch (const PhysicsError& e) {
                s.notes.push_back(std::string("lifetime: ") + e.what());
            }
        }
    }
}

}  // namespace

double RunSummary::mc_efficiency_gated() const {
    return collected_gated > 0 ? static_cast<double>(converted_gated) /
                                     static_cast<double>(collected_gated)
                               : 0.0;
}

double RunSummary::mc_efficiency_gated_sigma() const {
    return binomial_sigma(net_eff_quadrature, static_cast<double>(collected_gated));
}

double RunSummary::mc_efficiency_ungated() const {
    return collected_ungated > 0 ? static_cast<double>(converted_ungated) /
                                       static_cast<double>(collected_ungated)
                                 : 0.0;
}

double RunSummary::mc_efficiency_ungated_sigma() const {
    return binomial_sigma(off_window_eff_quadrature,
                          static_cast<double>(collected_ungated));
}

double RunSummary::detected_rate_per_s() const {
    return duration_ps > 0.0
               ? static_cast<double>(detected_count) / (duration_ps * 1e-12)
               : 0.0;
}

RunSummary run_shard(const ScenarioConfig& cfg, int shard_index) {
    cfg.validate();
    RunSummary s;
    s.config = cfg;
    s.shard_index = shard_index;

    const double span = cfg.timing.sim_duration_ps /
                        static_cast<double>(cfg.run.shards);
    s.duration_ps = span;
    const double period = cfg.timing.excitation_period_ps;
    const auto n_trig = static_cast<std::uint64_t>(std::ceil(span / period));
    const int divider = cfg.timing.cw() ? 1 : cfg.timing.pump_divider;
    s.triggers = n_trig;
    s.gated_triggers = (n_trig + static_cast<std::uint64_t>(divider) - 1) /
                       static_cast<std::uint64_t>(divider);

    const PumpPulseTrain train = cfg.pump_train(cfg.timing.delay_ps);
    const auto idx = static_cast<std::uint64_t>(shard_index);
    RandomStream rng_sim(derive_seed(cfg.run.seed, "sim", idx));
    RandomStream rng_raman(derive_seed(cfg.run.seed, "raman", idx));
    RandomStream rng_split(derive_seed(cfg.run.seed, "split", idx));
    RandomStream rng_det0(derive_seed(cfg.run.seed, "detect0", idx));
    RandomStream rng_det1(derive_seed(cfg.run.seed, "detect1", idx));

    TimeTagStream stream;
    stream.duration_ps = span;

    // Triggered emission with geometric skipping over empty pulses.
    const double p1 = cfg.source.emission_prob_per_pulse *
                      cfg.source.collection_efficiency;
    const double p2 = cfg.source.multiphoton_prob;
    const double p_any = 1.0 - (1.0 - p1) * (1.0 - p2);
    if (p_any > 0.0) {
        const double p10 = p1 * (1.0 - p2);
        const double p01 = (1.0 - p1) * p2;
        std::uint64_t k = 0;
        while (k < n_trig) {
            const std::uint64_t gap = rng_sim.geometric(p_any);
            if (gap >= n_trig - k) break;
            k += gap;
            const double u = rng_sim.uniform() * p_any;
            const bool primary = u < p10 || u >= p10 + p01;
            const bool extra = u >= p10;
            const double trigger = static_cast<double>(k) * period;
            const bool gated = (k % static_cast<std::uint64_t>(divider)) == 0;
            const int n_photons = (primary ? 1 : 0) + (extra ? 1 : 0);
            for (int i = 0; i < n_photons; ++i) {
                const double t = trigger + rng_sim.exponential(cfg.source.lifetime_ps);
                (gated ? s.collected_gated : s.collected_ungated) += 1;
                if (auto conv = attempt_conversion(t, train, cfg.conversion, rng_sim)) {
                    (gated ? s.converted_gated : s.converted_ungated) += 1;
                    stream.tags.push_back({*conv, 0});
                }
            }
            k += 1;
        }
    }

    if (cfg.conversion.raman_coeff_per_s_per_mw > 0.0) {
        TimeTagStream raman =
            raman_events(train, cfg.conversion, span, rng_raman, 0.0, 0);
        s.raman_count = raman.tags.size();
        stream.tags.insert(stream.tags.end(), raman.tags.begin(), raman.tags.end());
    }
    stream.sort();

    if (cfg.analysis.mode == AnalysisMode::G2) {
        auto [arm_a, arm_b] = hbt_split(stream, rng_split);
        const DetectorModel& det_a = cfg.detectors.front();
        const DetectorModel& det_b = cfg.detectors.back();
        TimeTagStream detected_a = detect(arm_a, det_a, rng_det0);
        TimeTagStream detected_b = detect(arm_b, det_b, rng_det1);
        s.detected_count = detected_a.size() + detected_b.size();
        s.correlation = correlate_accumulate(detected_a, detected_b,
                                             cfg.correlation_options());
    } else {
        TimeTagStream detected = detect(stream, cfg.detectors.front(), rng_det0);
        s.detected_count = detected.size();
        s.tcspc = tcspc_histogram(detected, cfg.sync_period_ps(),
                                  cfg.analysis.tcspc_bin_ps,
                                  cfg.analysis.sync_offset_ps);
    }
    return s;
}

RunSummary merge_shards(const std::vector<RunSummary>& shards) {
    if (shards.empty()) throw ConfigMismatch("no shard summaries to merge");

    const ordered_json ref = shards.front().config.to_json();
    for (const auto& s : shards)
        if (s.config.to_json() != ref)
            throw ConfigMismatch("shard summaries come from different configs");

    RunSummary merged = shards.front();
    merged.shard_index = -1;
    std::vector<CorrelationResult> corr_parts;
    if (merged.correlation) corr_parts.push_back(*merged.correlation);

    for (std::size_t i = 1; i < shards.size(); ++i) {
        const auto& s = shards[i];
        merged.duration_ps += s.duration_ps;
        merged.triggers += s.triggers;
        merged.gated_triggers += s.gated_triggers;
        merged.collected_gated += s.collected_gated;
        merged.collected_ungated += s.collected_ungated;
        merged.converted_gated += s.converted_gated;
        merged.converted_ungated += s.converted_ungated;
        merged.raman_count += s.raman_count;
        merged.detected_count += s.detected_count;

        if (merged.tcspc.has_value() != s.tcspc.has_value() ||
            merged.correlation.has_value() != s.correlation.has_value())
            throw ConfigMismatch("shard summaries hold different result kinds");
        if (s.tcspc) {
            auto& h = *merged.tcspc;
            if (h.counts.size() != s.tcspc->counts.size() ||
                h.bin_width_ps != s.tcspc->bin_width_ps ||
                h.start_ps != s.tcspc->start_ps)
                throw ConfigMismatch("shard histograms have different layouts");
            for (std::size_t b = 0; b < h.counts.size(); ++b)
                h.counts[b] += s.tcspc->counts[b];
            h.duration_ps += s.tcspc->duration_ps;
        }
        if (s.correlation) corr_parts.push_back(*s.correlation);
    }

    if (!corr_parts.empty())
        merged.correlation = merge_correlations(
            corr_parts, merged.config.correlation_options());

    merged.fwhm.reset();
    merged.lifetime.reset();
    merged.notes.clear();
    analyze(merged);
    return merged;
}

RunSummary run_scenario(const ScenarioConfig& cfg_in) {
    const auto t0 = std::chrono::steady_clock::now();
    ScenarioConfig cfg = cfg_in;
    cfg.validate();

    // Resolve the pump delay once so every shard and the quadrature agree.
    if (cfg.timing.auto_delay && !cfg.timing.cw()) {
        cfg.timing.delay_ps =
            optimal_delay(cfg.source.wavepacket(), cfg.pump_train(), cfg.conversion);
        cfg.timing.auto_delay = false;
    }

    std::vector<RunSummary> shards(static_cast<std::size_t>(cfg.run.shards));
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const auto n_shards = static_cast<std::size_t>(cfg.run.shards);
    std::size_t next = 0;
    while (next < n_shards) {
        const std::size_t batch = std::min<std::size_t>(hw, n_shards - next);
        std::vector<std::thread> pool;
        pool.reserve(batch);
        for (std::size_t i = 0; i < batch; ++i) {
            const std::size_t si = next + i;
            pool.emplace_back([&cfg, &shards, si] {
                shards[si] = run_shard(cfg, static_cast<int>(si));
            });
        }
        for (auto& th : pool) th.join();
        next += batch;
    }

    // Merging also finalizes the correlation and runs the analyses.
    RunSummary merged = merge_shards(shards);

    // Quadrature references for the oracle-equivalence checks.
    const PumpPulseTrain train = cfg.pump_train();
    merged.delay_used_ps = cfg.timing.cw() ? 0.0 : cfg.timing.delay_ps;
    merged.net_eff_quadrature =
        net_efficiency(cfg.source.wavepacket(), train, cfg.conversion);
    if (!cfg.timing.cw() && cfg.timing.pump_divider > 1) {
        merged.off_window_eff_quadrature = net_efficiency(
            cfg.source.wavepacket(cfg.timing.excitation_period_ps), train,
            cfg.conversion);
    }

    merged.config = cfg_in;  // keep the caller's config (auto_delay intact)
    merged.config.timing.delay_ps = cfg.timing.delay_ps;
    const auto t1 = std::chrono::steady_clock::now();
    merged.wall_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    return merged;
}

SweepResult sweep(const ScenarioConfig& cfg, SweepParameter parameter,
                  std::span<const double> values) {
    SweepResult result;
    result.parameter = parameter;
    result.values.assign(values.begin(), values.end());

    for (std::size_t i = 0; i < values.size(); ++i) {
        ScenarioConfig point = cfg;
        point.run.seed = derive_seed(cfg.run.seed, "sweep", i);
        if (parameter == SweepParameter::TauMod) {
            point.timing.pulse_fwhm_ps = values[i];
            point.timing.auto_delay = true;
            char buf[64];
            std::snprintf(buf, sizeof buf, "%g", values[i]);
            point.name = cfg.name + "_tau_mod_" + buf;
        } else {
            point.timing.delay_ps = values[i];
            point.timing.auto_delay = false;
            char buf[64];
            std::snprintf(buf, sizeof buf, "%g", values[i]);
            point.name = cfg.name + "_delay_" + buf;
        }
        result.runs.push_back(run_scenario(point));
    }

    if (parameter == SweepParameter::DeltaT && !result.runs.empty()) {
        std::vector<std::pair<double, Histogram>> hists;
        for (std::size_t i = 0; i < result.runs.size(); ++i)
            if (result.runs[i].tcspc)
                hists.emplace_back(values[i], *result.runs[i].tcspc);
        try {
            result.delay_fit = delay_sweep_peaks(hists);
        } catch (const PhysicsError&) {
            result.delay_fit.reset();
        }
    }
    return result;
}

ordered_json RunSummary::to_json() const {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["scenario"] = config.name;
    j["mode"] = config.analysis.mode == AnalysisMode::G2 ? "g2" : "profile";
    j["seed"] = config.run.seed;
    j["shards"] = config.run.shards;
    j["sim_duration_ps"] = duration_ps;

    ordered_json counts;
    counts["triggers"] = triggers;
    counts["gated_triggers"] = gated_triggers;
    counts["collected_gated"] = collected_gated;
    counts["collected_ungated"] = collected_ungated;
    counts["converted_gated"] = converted_gated;
    counts["converted_ungated"] = converted_ungated;
    counts["raman_events"] = raman_count;
    counts["detected"] = detected_count;
    j["counts"] = counts;

    ordered_json pump;
    pump["cw"] = config.timing.cw();
    if (config.timing.pulse_fwhm_ps)
        pump["tau_mod_ps"] = *config.timing.pulse_fwhm_ps;
    pump["delay_ps"] = delay_used_ps;
    pump["peak_power_mw"] = config.pump.peak_power_mw;
    pump["extinction_ratio_db"] = config.pump.extinction_ratio_db;
    j["pump"] = pump;

    ordered_json eff;
    eff["quadrature_gated"] = net_eff_quadrature;
    eff["mc_gated"] =
        value_sigma(mc_efficiency_gated(), mc_efficiency_gated_sigma());
    if (collected_ungated > 0 || off_window_eff_quadrature > 0.0) {
        eff["quadrature_off_window"] = off_window_eff_quadrature;
        eff["mc_off_window"] =
            value_sigma(mc_efficiency_ungated(), mc_efficiency_ungated_sigma());
    }
    j["efficiency"] = eff;
    j["detected_rate_per_s"] = detected_rate_per_s();

    ordered_json a;
    if (fwhm) {
        ordered_json f;
        f["fwhm_ps"] = fwhm->fwhm_ps;
        f["uncertainty_ps"] = fwhm->uncertainty_ps;
        f["peak_position_ps"] = fwhm->peak_position_ps;
        f["peak_height"] = fwhm->peak_height;
        f["background_per_bin"] = fwhm->background_per_bin;
        a["fwhm"] = f;
    }
    if (lifetime) {
        ordered_json f;
        f["lifetime_ps"] = lifetime->lifetime_ps;
        f["sigma_ps"] = lifetime->lifetime_sigma_ps;
        f["reduced_chi2"] = lifetime->reduced_chi2;
        f["window_ps"] = {lifetime->window_ps.first, lifetime->window_ps.second};
        f["points_used"] = lifetime->points_used;
        f["background_per_bin"] = lifetime->background_per_bin;
        a["lifetime"] = f;
    }
    if (correlation) {
        const auto& c = *correlation;
        a["g2_zero"] = value_sigma(c.g2_zero, c.g2_zero_sigma);
        a["zero_peak_count"] = c.zero_peak_count;
        a["normalization_area"] = c.normalization_area;
        if (c.satellite_ratio)
            a["satellite_ratio"] =
                value_sigma(*c.satellite_ratio, c.satellite_ratio_sigma.value_or(0.0));
        ordered_json bg;
        bg["per_bin"] = c.background_per_bin;
        bg["sigma"] = c.background_per_bin_sigma;
        bg["count"] = c.background_count;
        bg["span_ps"] = c.background_span_ps;
        a["background"] = bg;
        ordered_json peaks = ordered_json::object();
        for (const auto& [center, n] : c.peak_areas)
            peaks[std::to_string(center)] = n;
        a["peak_areas"] = peaks;
        ordered_json sats = ordered_json::object();
        for (const auto& [center, n] : c.satellite_areas)
            sats[std::to_string(center)] = n;
        if (!sats.empty()) a["satellite_areas"] = sats;
    }
    if (!notes.empty()) a["notes"] = notes;
    j["analysis"] = a;
    return j;
}

namespace {

void write_histogram_csv(const Histogram& h, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    h.write_csv(out);
}

ordered_json histogram_json(const Histogram& h) {
    ordered_json j;
    j["start_ps"] = h.start_ps;
    j["bin_width_ps"] = h.bin_width_ps;
    j["duration_ps"] = h.duration_ps;
    j["counts"] = h.counts;
    return j;
}

void write_g2_csv(const CorrelationResult& c, const CorrelationOptions& opts,
                  const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << "tau_ps,counts,g2\n";
    const double bins_per_window =
        2.0 * opts.peak_halfwidth_ps / c.histogram.bin_width_ps;
    const double norm_per_bin = c.normalization_area / bins_per_window;
    char buf[96];
    for (std::size_t i = 0; i < c.histogram.counts.size(); ++i) {
        const double g2 = norm_per_bin > 0.0
                              ? static_cast<double>(c.histogram.counts[i]) /
                                    norm_per_bin
                              : 0.0;
        std::snprintf(buf, sizeof buf, "%.17g,%llu,%.17g\n", c.histogram.bin_center(i),
                      static_cast<unsigned long long>(c.histogram.counts[i]), g2);
        out << buf;
    }
}

}  // namespace

std::vector<std::string> write_outputs(const RunSummary& summary,
                                       const std::string& out_dir,
                                       const std::string& format) {
    if (format != "csv" && format != "json")
        throw ConfigError("output format must be 'csv' or 'json'");
    fs::create_directories(out_dir);
    std::vector<std::string> written;
    ordered_json j = summary.to_json();
    ordered_json outputs = ordered_json::object();

    if (summary.tcspc) {
        if (format == "csv") {
            const std::string name = "histogram_tcspc.csv";
            write_histogram_csv(*summary.tcspc, out_dir + "/" + name);
            outputs["tcspc"] = name;
            written.push_back(out_dir + "/" + name);
        } else {
            outputs["tcspc"] = histogram_json(*summary.tcspc);
        }
    }
    if (summary.correlation) {
        if (format == "csv") {
            const std::string name = "g2.csv";
            write_g2_csv(*summary.correlation,
                         summary.config.correlation_options(),
                         out_dir + "/" + name);
            outputs["g2"] = name;
            written.push_back(out_dir + "/" + name);
        } else {
            outputs["g2"] = histogram_json(summary.correlation->histogram);
        }
    }
    j["outputs"] = outputs;

    const std::string summary_path = out_dir + "/summary.json";
    std::ofstream out(summary_path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + summary_path);
    out << j.dump(2) << "\n";
    written.push_back(summary_path);
    return written;
}

std::vector<std::string> write_sweep_outputs(const SweepResult& sweep_result,
                                             const std::string& out_dir,
                                             const std::string& format) {
    fs::create_directories(out_dir);
    std::vector<std::string> written;

    const bool width = sweep_result.parameter == SweepParameter::TauMod;
    const std::string curve_name = width ? "sweep_width.csv" : "sweep_delay.csv";
    const std::string curve_path = out_dir + "/" + curve_name;
    std::ofstream curve(curve_path, std::ios::binary);
    if (!curve) throw ConfigError("cannot write " + curve_path);
    curve << (width ? "tau_mod_ps,efficiency,rate_per_s\n"
                    : "delta_t_ps,peak_height,fwhm_ps\n");
    char buf[128];
    for (std::size_t i = 0; i < sweep_result.runs.size(); ++i) {
        const auto& r = sweep_result.runs[i];
        if (width) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n",
                          sweep_result.values[i], r.mc_efficiency_gated(),
                          r.detected_rate_per_s());
        } else {
            const double h = r.fwhm ? r.fwhm->peak_height : 0.0;
            const double f = r.fwhm ? r.fwhm->fwhm_ps : 0.0;
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n",
                          sweep_result.values[i], h, f);
        }
        curve << buf;
    }
    curve.close();
    written.push_back(curve_path);

    ordered_json js;
    js["schema_version"] = kSchemaVersion;
    js["parameter"] = width ? "tau_mod" : "delta_t";
    js["values_ps"] = sweep_result.values;
    if (sweep_result.delay_fit) {
        ordered_json f;
        f["lifetime_ps"] = sweep_result.delay_fit->lifetime_ps;
        f["sigma_ps"] = sweep_result.delay_fit->lifetime_sigma_ps;
        f["points_used"] = sweep_result.delay_fit->points_used;
        js["delay_fit"] = f;
    }
    ordered_json runs = ordered_json::array();
    for (std::size_t i = 0; i < sweep_result.runs.size(); ++i) {
        char sub[64];
        std::snprintf(sub, sizeof sub, "point_%02zu", i);
        auto files = write_outputs(sweep_result.runs[i], out_dir + "/" + sub, format);
        written.insert(written.end(), files.begin(), files.end());
        ordered_json r;
        r["value_ps"] = sweep_result.values[i];
        r["dir"] = sub;
        runs.push_back(r);
    }
    js["runs"] = runs;

    const std::string path = out_dir + "/sweep_summary.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << js.dump(2) << "\n";
    written.push_back(path);
    return written;
}

std::vector<std::string> write_efficiency_curve(
    const std::vector<EfficiencyPoint>& curve, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const std::string path = out_dir + "/efficiency_curve.csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << "tau_mod_ps,efficiency,rate_per_s\n";
    char buf[128];
    for (const auto& p : curve) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.tau_mod_ps,
                      p.efficiency, p.rate_per_s);
        out << buf;
    }
    return {path};
}

}  // namespace upconv
