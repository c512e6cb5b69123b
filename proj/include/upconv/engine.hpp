#pragma once

#include <optional>
#include <string>
#include <vector>

#include "upconv/analysis.hpp"
#include "upconv/config.hpp"
#include "upconv/conversion.hpp"
#include "upconv/detection.hpp"

namespace upconv {

// Aggregated result of one run (or one shard of a run). Every statistic is
// reproducible from the stored histograms and counters.
struct RunSummary {
    ScenarioConfig config;
    int shard_index = -1;  // -1 after merging
    double duration_ps = 0.0;

    std::uint64_t triggers = 0;
    std::uint64_t gated_triggers = 0;
    std::uint64_t collected_gated = 0;
    std::uint64_t collected_ungated = 0;
    std::uint64_t converted_gated = 0;
    std::uint64_t converted_ungated = 0;
    std::uint64_t raman_count = 0;
    std::uint64_t detected_count = 0;

    double delay_used_ps = 0.0;
    double net_eff_quadrature = 0.0;        // photon at a gated trigger
    double off_window_eff_quadrature = 0.0; // photon at an ungated trigger

    std::optional<Histogram> tcspc;
    std::optional<CorrelationResult> correlation;

    std::optional<FwhmEstimate> fwhm;
    std::optional<FitResult> lifetime;
    std::vector<std::string> notes;

    double wall_ms = 0.0;  // not serialized; outputs must be byte-stable

    double mc_efficiency_gated() const;
    double mc_efficiency_gated_sigma() const;
    double mc_efficiency_ungated() const;
    double mc_efficiency_ungated_sigma() const;
    double detected_rate_per_s() const;

    ordered_json to_json() const;
};

// Full pipeline for one scenario: triggered emission and collection,
// conversion against the gated pump, Raman background, detection, and the
// configured analyses. Shards run independently with derived seeds and merge
// binwise; results are deterministic for a fixed (config, seed, shards).
RunSummary run_scenario(const ScenarioConfig& cfg);

// One shard over sim_duration/shards of experiment time, without analyses.
RunSummary run_shard(const ScenarioConfig& cfg, int shard_index);

// Binwise histogram merge; statistics are recomputed from the merged data.
// Throws ConfigMismatch for differing configs or histogram layouts.
RunSummary merge_shards(const std::vector<RunSummary>& shards);

enum class SweepParameter { TauMod, DeltaT };

struct SweepResult {
    SweepParameter parameter;
    std::vector<double> values;
    std::vector<RunSummary> runs;
    std::optional<FitResult> delay_fit;  // lifetime from peak heights
};

// One run per value with seed_i = derive_seed(seed, "sweep", i). Width sweeps
// re-optimize the pump delay per point; delay sweeps pin it to the value.
SweepResult sweep(const ScenarioConfig& cfg, SweepParameter parameter,
                  std::span<const double> values);

// Output files: summary.json plus histogram/g2 CSVs ("csv") or JSON
// equivalents ("json"). Returns the paths written.
std::vector<std::string> write_outputs(const RunSummary& summary,
                                       const std::string& out_dir,
                                       const std::string& format = "csv");

std::vector<std::string> write_sweep_outputs(const SweepResult& sweep_result,
                                             const std::string& out_dir,
                                             const std::string& format = "csv");

std::vector<std::string> write_efficiency_curve(
    const std::vector<EfficiencyPoint>& curve, const std::string& out_dir);

}  // namespace upconv
