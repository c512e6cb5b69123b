#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "upconv/analysis.hpp"
#include "upconv/conversion.hpp"
#include "upconv/detection.hpp"
#include "upconv/timing.hpp"

#include "json.hpp"

namespace upconv {

using ordered_json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

enum class PumpShapeKind { Gaussian, FlatTop };

struct PumpSettings {
    PumpShapeKind shape = PumpShapeKind::Gaussian;
    double edge_fwhm_ps = 100.0;  // FlatTop only
    double peak_power_mw = 85.0;
    double extinction_ratio_db = 20.0;
};

enum class AnalysisMode { Profile, G2 };

struct AnalysisSettings {
    AnalysisMode mode = AnalysisMode::Profile;
    // TCSPC
    double tcspc_bin_ps = 16.0;
    double sync_offset_ps = 5000.0;
    bool estimate_fwhm = true;
    std::optional<std::pair<double, double>> lifetime_window_ps;
    std::optional<std::pair<double, double>> background_window_ps;
    double background_fraction = 0.1;
    // correlation
    double g2_bin_ps = 256.0;
    double g2_max_delay_ps = 100000.0;
    double g2_peak_halfwidth_ps = 10000.0;
    double g2_background_exclusion_ps = 5000.0;
};

struct RunSettings {
    std::uint64_t seed = 1;
    int shards = 1;
};

struct ScenarioConfig {
    std::string name = "scenario";
    std::string description;
    TimingConfig timing;
    PumpSettings pump;
    ConversionModel conversion;
    PhotonSource source;
    std::vector<DetectorModel> detectors{DetectorModel{}};
    AnalysisSettings analysis;
    RunSettings run;
    std::vector<double> curve_tau_mod_ps;   // efficiency-curve points
    std::vector<double> sweep_delay_ps;     // delay-sweep points

    void validate() const;

    // Pump train for the configured timing; delay_override replaces the
    // configured delay (used by sweeps and the optimal-delay helper).
    PumpPulseTrain pump_train(std::optional<double> delay_override = std::nullopt) const;

    // Sync period the TCSPC histogram folds at: the pump period for pulsed
    // scenarios, the excitation period for CW.
    double sync_period_ps() const;

    CorrelationOptions correlation_options() const;

    ordered_json to_json() const;
    static ScenarioConfig from_json(const ordered_json& j);
    static ScenarioConfig load(const std::string& path);
    void save(const std::string& path) const;
};

}  // namespace upconv
