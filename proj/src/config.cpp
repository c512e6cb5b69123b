#include "upconv/config.hpp"

#include <fstream>

namespace upconv {

namespace {

template <typename T>
T get_or(const ordered_json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

std::optional<std::pair<double, double>> get_window(const ordered_json& j,
                                                    const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    const auto& w = j.at(key);
    if (!w.is_array() || w.size() != 2)
        throw ConfigError(std::string(key) + " must be a [start, end] pair");
    return std::make_pair(w[0].get<double>(), w[1].get<double>());
}

}  // namespace

void ScenarioConfig::validate() const {
    timing.validate();
    conversion.validate();
    source.validate();
    if (detectors.empty() || detectors.size() > 2)
        throw ConfigError("scenarios need one or two detectors");
    for (const auto& d : detectors) d.validate();
    if (!(pump.peak_power_mw >= 0.0)) throw ConfigError("peak power must be >= 0");
    if (!(pump.extinction_ratio_db > 0.0))
        throw ConfigError("extinction ratio must be > 0 dB");
    if (run.shards < 1) throw ConfigError("shards must be >= 1");
    if (!(analysis.tcspc_bin_ps > 0.0) || !(analysis.g2_bin_ps > 0.0))
        throw ConfigError("histogram bin widths must be > 0");
    if (timing.sim_duration_ps < timing.excitation_period_ps)
        throw ConfigError("sim_duration_ps must cover at least one trigger period");
    if (timing.pulse_fwhm_ps &&
        *timing.pulse_fwhm_ps < conversion.qpm_min_pulse_fwhm_ps)
        throw QpmViolation("pump pulse narrower than the QPM acceptance floor");
    for (double v : curve_tau_mod_ps)
        if (!(v > 0.0)) throw ConfigError("curve tau_mod values must be > 0");
}

PumpPulseTrain ScenarioConfig::pump_train(std::optional<double> delay_override) const {
    if (timing.cw()) return PumpPulseTrain::cw_pump(pump.peak_power_mw);
    const double fwhm = *timing.pulse_fwhm_ps;
    TemporalProfile shape =
        pump.shape == PumpShapeKind::FlatTop
            ? TemporalProfile::flat_top(0.0, fwhm, pump.edge_fwhm_ps, Semantics::Power)
            : TemporalProfile::gaussian(0.0, fwhm, Semantics::Power);
    const double delay = delay_override.value_or(timing.delay_ps);
    return PumpPulseTrain::pulsed(std::move(shape), timing.pump_period_ps(),
                                  pump.peak_power_mw, pump.extinction_ratio_db,
                                  delay);
}

double ScenarioConfig::sync_period_ps() const {
    return timing.cw() ? timing.excitation_period_ps : timing.pump_period_ps();
}

CorrelationOptions ScenarioConfig::correlation_options() const {
    CorrelationOptions opts;
    opts.max_delay_ps = analysis.g2_max_delay_ps;
    opts.bin_width_ps = analysis.g2_bin_ps;
    opts.peak_period_ps = sync_period_ps();
    opts.peak_halfwidth_ps =
        std::min(analysis.g2_peak_halfwidth_ps, 0.5 * opts.peak_period_ps);
    if (!timing.cw() && timing.pump_divider > 1)
        opts.satellite_offset_ps = timing.excitation_period_ps;
    opts.background_exclusion_ps = analysis.g2_background_exclusion_ps;
    return opts;
}

ordered_json ScenarioConfig::to_json() const {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["name"] = name;
    if (!description.empty()) j["description"] = description;

    ordered_json t;
    t["excitation_period_ps"] = timing.excitation_period_ps;
    t["pump_divider"] = timing.pump_divider;
    t["delay_ps"] = timing.delay_ps;
    t["auto_delay"] = timing.auto_delay;
    if (timing.pulse_fwhm_ps)
        t["pulse_fwhm_ps"] = *timing.pulse_fwhm_ps;
    else
        t["pulse_fwhm_ps"] = nullptr;
    t["sim_duration_ps"] = timing.sim_duration_ps;
    j["timing"] = t;

    ordered_json p;
    p["shape"] = pump.shape == PumpShapeKind::FlatTop ? "flattop" : "gaussian";
    p["edge_fwhm_ps"] = pump.edge_fwhm_ps;
    p["peak_power_mw"] = pump.peak_power_mw;
    p["extinction_ratio_db"] = pump.extinction_ratio_db;
    j["pump"] = p;

    ordered_json c;
    c["eta_max"] = conversion.eta_max;
    c["p_sat_mw"] = conversion.p_sat_mw;
    c["qpm_min_pulse_fwhm_ps"] = conversion.qpm_min_pulse_fwhm_ps;
    c["raman_coeff_per_s_per_mw"] = conversion.raman_coeff_per_s_per_mw;
    j["conversion"] = c;

    ordered_json s;
    s["lifetime_ps"] = source.lifetime_ps;
    s["collection_efficiency"] = source.collection_efficiency;
    s["emission_prob_per_pulse"] = source.emission_prob_per_pulse;
    s["multiphoton_prob"] = source.multiphoton_prob;
    s["coherence_time_ps"] = source.coherence_time_ps;
    j["source"] = s;

    j["detectors"] = ordered_json::array();
    for (const auto& d : detectors) {
        ordered_json dj;
        dj["efficiency"] = d.efficiency;
        dj["jitter_fwhm_ps"] = d.jitter_fwhm_ps;
        dj["dark_rate_per_s"] = d.dark_rate_per_s;
        dj["dead_time_ps"] = d.dead_time_ps;
        j["detectors"].push_back(dj);
    }

    ordered_json a;
    a["mode"] = analysis.mode == AnalysisMode::G2 ? "g2" : "profile";
    a["tcspc_bin_ps"] = analysis.tcspc_bin_ps;
    a["sync_offset_ps"] = analysis.sync_offset_ps;
    a["estimate_fwhm"] = analysis.estimate_fwhm;
    if (analysis.lifetime_window_ps)
        a["lifetime_window_ps"] = {analysis.lifetime_window_ps->first,
                                   analysis.lifetime_window_ps->second};
    if (analysis.background_window_ps)
        a["background_window_ps"] = {analysis.background_window_ps->first,
                                     analysis.background_window_ps->second};
    a["background_fraction"] = analysis.background_fraction;
    a["g2_bin_ps"] = analysis.g2_bin_ps;
    a["g2_max_delay_ps"] = analysis.g2_max_delay_ps;
    a["g2_peak_halfwidth_ps"] = analysis.g2_peak_halfwidth_ps;
    a["g2_background_exclusion_ps"] = analysis.g2_background_exclusion_ps;
    j["analysis"] = a;

    ordered_json r;
    r["seed"] = run.seed;
    r["shards"] = run.shards;
    j["run"] = r;

    if (!curve_tau_mod_ps.empty()) j["curve_tau_mod_ps"] = curve_tau_mod_ps;
    if (!sweep_delay_ps.empty()) j["sweep_delay_ps"] = sweep_delay_ps;
    return j;
}

ScenarioConfig ScenarioConfig::from_json(const ordered_json& j) {
    ScenarioConfig cfg;
    const int version = get_or<int>(j, "schema_version", -1);
    if (version != kSchemaVersion)
        throw ConfigError("unsupported or missing schema_version (expected " +
                          std::to_string(kSchemaVersion) + ")");
    cfg.name = get_or<std::string>(j, "name", "scenario");
    cfg.description = get_or<std::string>(j, "description", "");

    if (j.contains("timing")) {
        const auto& t = j.at("timing");
        cfg.timing.excitation_period_ps =
            get_or(t, "excitation_period_ps", cfg.timing.excitation_period_ps);
        cfg.timing.pump_divider = get_or(t, "pump_divider", cfg.timing.pump_divider);
        cfg.timing.delay_ps = get_or(t, "delay_ps", cfg.timing.delay_ps);
        cfg.timing.auto_delay = get_or(t, "auto_delay", cfg.timing.auto_delay);
        if (t.contains("pulse_fwhm_ps") && !t.at("pulse_fwhm_ps").is_null())
            cfg.timing.pulse_fwhm_ps = t.at("pulse_fwhm_ps").get<double>();
        cfg.timing.sim_duration_ps =
            get_or(t, "sim_duration_ps", cfg.timing.sim_duration_ps);
    }

    if (j.contains("pump")) {
        const auto& p = j.at("pump");
        const auto shape = get_or<std::string>(p, "shape", "gaussian");
        if (shape == "gaussian")
            cfg.pump.shape = PumpShapeKind::Gaussian;
        else if (shape == "flattop")
            cfg.pump.shape = PumpShapeKind::FlatTop;
        else
            throw ConfigError("pump shape must be 'gaussian' or 'flattop'");
        cfg.pump.edge_fwhm_ps = get_or(p, "edge_fwhm_ps", cfg.pump.edge_fwhm_ps);
        cfg.pump.peak_power_mw = get_or(p, "peak_power_mw", cfg.pump.peak_power_mw);
        cfg.pump.extinction_ratio_db =
            get_or(p, "extinction_ratio_db", cfg.pump.extinction_ratio_db);
    }

    if (j.contains("conversion")) {
        const auto& c = j.at("conversion");
        cfg.conversion.eta_max = get_or(c, "eta_max", cfg.conversion.eta_max);
        cfg.conversion.p_sat_mw = get_or(c, "p_sat_mw", cfg.conversion.p_sat_mw);
        cfg.conversion.qpm_min_pulse_fwhm_ps =
            get_or(c, "qpm_min_pulse_fwhm_ps", cfg.conversion.qpm_min_pulse_fwhm_ps);
        cfg.conversion.raman_coeff_per_s_per_mw =
            get_or(c, "raman_coeff_per_s_per_mw",
                   cfg.conversion.raman_coeff_per_s_per_mw);
    }

    if (j.contains("source")) {
        const auto& s = j.at("source");
        cfg.source.lifetime_ps = get_or(s, "lifetime_ps", cfg.source.lifetime_ps);
        cfg.source.collection_efficiency =
            get_or(s, "collection_efficiency", cfg.source.collection_efficiency);
        cfg.source.emission_prob_per_pulse =
            get_or(s, "emission_prob_per_pulse", cfg.source.emission_prob_per_pulse);
        cfg.source.multiphoton_prob =
            get_or(s, "multiphoton_prob", cfg.source.multiphoton_prob);
        cfg.source.coherence_time_ps =
            get_or(s, "coherence_time_ps", cfg.source.coherence_time_ps);
    }

    if (j.contains("detectors")) {
        cfg.detectors.clear();
        for (const auto& dj : j.at("detectors")) {
            DetectorModel d;
            d.efficiency = get_or(dj, "efficiency", d.efficiency);
            d.jitter_fwhm_ps = get_or(dj, "jitter_fwhm_ps", d.jitter_fwhm_ps);
            d.dark_rate_per_s = get_or(dj, "dark_rate_per_s", d.dark_rate_per_s);
            d.dead_time_ps = get_or(dj, "dead_time_ps", d.dead_time_ps);
            cfg.detectors.push_back(d);
        }
    }

    if (j.contains("analysis")) {
        const auto& a = j.at("analysis");
        const auto mode = get_or<std::string>(a, "mode", "profile");
        if (mode == "profile")
            cfg.analysis.mode = AnalysisMode::Profile;
        else if (mode == "g2")
            cfg.analysis.mode = AnalysisMode::G2;
        else
            throw ConfigError("analysis mode must be 'profile' or 'g2'");
        cfg.analysis.tcspc_bin_ps = get_or(a, "tcspc_bin_ps", cfg.analysis.tcspc_bin_ps);
        cfg.analysis.sync_offset_ps =
            get_or(a, "sync_offset_ps", cfg.analysis.sync_offset_ps);
        cfg.analysis.estimate_fwhm =
            get_or(a, "estimate_fwhm", cfg.analysis.estimate_fwhm);
        cfg.analysis.lifetime_window_ps = get_window(a, "lifetime_window_ps");
        cfg.analysis.background_window_ps = get_window(a, "background_window_ps");
        cfg.analysis.background_fraction =
            get_or(a, "background_fraction", cfg.analysis.background_fraction);
        cfg.analysis.g2_bin_ps = get_or(a, "g2_bin_ps", cfg.analysis.g2_bin_ps);
        cfg.analysis.g2_max_delay_ps =
            get_or(a, "g2_max_delay_ps", cfg.analysis.g2_max_delay_ps);
        cfg.analysis.g2_peak_halfwidth_ps =
            get_or(a, "g2_peak_halfwidth_ps", cfg.analysis.g2_peak_halfwidth_ps);
        cfg.analysis.g2_background_exclusion_ps =
            get_or(a, "g2_background_exclusion_ps",
                   cfg.analysis.g2_background_exclusion_ps);
    }

    if (j.contains("run")) {
        const auto& r = j.at("run");
        cfg.run.seed = get_or<std::uint64_t>(r, "seed", cfg.run.seed);
        cfg.run.shards = get_or(r, "shards", cfg.run.shards);
    }

    cfg.curve_tau_mod_ps =
        get_or<std::vector<double>>(j, "curve_tau_mod_ps", {});
    cfg.sweep_delay_ps = get_or<std::vector<double>>(j, "sweep_delay_ps", {});

    cfg.validate();
    return cfg;
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse config file " + path + ": " + e.what());
    }
    return from_json(j);
}

void ScenarioConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file: " + path);
    out << to_json().dump(2) << "\n";
}

}  // namespace upconv
