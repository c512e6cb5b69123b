#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "upconv/analysis.hpp"
#include "upconv/config.hpp"
#include "upconv/conversion.hpp"
#include "upconv/detection.hpp"
#include "upconv/engine.hpp"
#include "upconv/profile.hpp"
#include "upconv/rng.hpp"
#include "upconv/timing.hpp"

namespace py = pybind11;
using namespace upconv;

namespace {

ScenarioConfig config_from_json_str(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("cannot parse config JSON: ") + e.what());
    }
    return ScenarioConfig::from_json(j);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Monte-Carlo simulator for pulsed single-photon frequency "
              "upconversion (times in ps)";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<PhysicsError>(m, "PhysicsError", PyExc_RuntimeError);

    py::enum_<Semantics>(m, "Semantics")
        .value("Density", Semantics::Density)
        .value("Power", Semantics::Power);

    py::class_<RandomStream>(m, "RandomStream")
        .def(py::init<std::uint64_t>(), py::arg("seed"))
        .def("uniform", [](RandomStream& r) { return r.uniform(); })
        .def("normal", [](RandomStream& r) { return r.normal(); })
        .def("exponential", [](RandomStream& r, double mean) {
            return r.exponential(mean);
        }, py::arg("mean"));

    m.def("derive_seed", &derive_seed, py::arg("master"), py::arg("purpose"),
          py::arg("index"));

    py::class_<TemporalProfile>(m, "TemporalProfile")
        .def_static("exponential_decay", &TemporalProfile::exponential_decay,
                    py::arg("onset_ps"), py::arg("lifetime_ps"),
                    py::arg("semantics") = Semantics::Density)
        .def_static("gaussian", &TemporalProfile::gaussian, py::arg("center_ps"),
                    py::arg("fwhm_ps"), py::arg("semantics") = Semantics::Density)
        .def_static("flat_top", &TemporalProfile::flat_top, py::arg("center_ps"),
                    py::arg("fwhm_ps"), py::arg("edge_fwhm_ps") = 100.0,
                    py::arg("semantics") = Semantics::Density)
        .def_static("constant", &TemporalProfile::constant, py::arg("level"))
        .def_static("ex_gaussian", &TemporalProfile::ex_gaussian,
                    py::arg("onset_ps"), py::arg("lifetime_ps"), py::arg("sigma_ps"),
                    py::arg("semantics") = Semantics::Density)
        .def_static(
            "sampled",
            [](double start, double step, std::vector<double> values,
               Semantics sem) {
                return TemporalProfile::sampled(start, step, std::move(values), sem);
            },
            py::arg("start_ps"), py::arg("step_ps"), py::arg("values"),
            py::arg("semantics") = Semantics::Density)
        .def("eval", &TemporalProfile::eval, py::arg("t_ps"))
        .def("mass", &TemporalProfile::mass)
        .def("normalized", &TemporalProfile::normalized)
        .def("fwhm", &TemporalProfile::fwhm)
        .def("convolve_gaussian", &TemporalProfile::convolve_gaussian,
             py::arg("kernel_fwhm_ps"))
        .def("sample_time", &TemporalProfile::sample_time, py::arg("rng"))
        .def("cdf", &TemporalProfile::cdf, py::arg("t_ps"))
        .def("support", &TemporalProfile::support)
        .def("to_sampled", &TemporalProfile::to_sampled, py::arg("step_ps") = 1.0)
        .def_property_readonly("semantics", &TemporalProfile::semantics)
        .def("to_csv",
             [](const TemporalProfile& p) {
                 std::ostringstream os;
                 p.write_csv(os);
                 return os.str();
             })
        .def_static("from_csv", [](const std::string& text, Semantics sem) {
            std::istringstream is(text);
            return TemporalProfile::read_csv(is, sem);
        }, py::arg("text"), py::arg("semantics") = Semantics::Power);

    py::class_<TimingConfig>(m, "TimingConfig")
        .def(py::init<>())
        .def_readwrite("excitation_period_ps", &TimingConfig::excitation_period_ps)
        .def_readwrite("pump_divider", &TimingConfig::pump_divider)
        .def_readwrite("delay_ps", &TimingConfig::delay_ps)
        .def_readwrite("auto_delay", &TimingConfig::auto_delay)
        .def_readwrite("pulse_fwhm_ps", &TimingConfig::pulse_fwhm_ps)
        .def_readwrite("sim_duration_ps", &TimingConfig::sim_duration_ps)
        .def("cw", &TimingConfig::cw)
        .def("pump_period_ps", &TimingConfig::pump_period_ps);

    m.def("build_timeline", &build_timeline, py::arg("config"));

    py::class_<PumpPulseTrain>(m, "PumpPulseTrain")
        .def_static("cw_pump", &PumpPulseTrain::cw_pump, py::arg("peak_power_mw"))
        .def_static("pulsed", &PumpPulseTrain::pulsed, py::arg("pulse_shape"),
                    py::arg("period_ps"), py::arg("peak_power_mw"),
                    py::arg("extinction_ratio_db"), py::arg("delay_ps"))
        .def_readwrite("delay_ps", &PumpPulseTrain::delay_ps)
        .def_readonly("period_ps", &PumpPulseTrain::period_ps)
        .def_readonly("peak_power_mw", &PumpPulseTrain::peak_power_mw)
        .def_readonly("cw", &PumpPulseTrain::cw)
        .def("off_level_mw", &PumpPulseTrain::off_level_mw)
        .def("power_at", &PumpPulseTrain::power_at, py::arg("t_ps"));

    py::class_<ConversionModel>(m, "ConversionModel")
        .def(py::init<>())
        .def_readwrite("eta_max", &ConversionModel::eta_max)
        .def_readwrite("p_sat_mw", &ConversionModel::p_sat_mw)
        .def_readwrite("qpm_min_pulse_fwhm_ps", &ConversionModel::qpm_min_pulse_fwhm_ps)
        .def_readwrite("raman_coeff_per_s_per_mw",
                       &ConversionModel::raman_coeff_per_s_per_mw);

    py::class_<PhotonSource>(m, "PhotonSource")
        .def(py::init<>())
        .def_readwrite("lifetime_ps", &PhotonSource::lifetime_ps)
        .def_readwrite("collection_efficiency", &PhotonSource::collection_efficiency)
        .def_readwrite("emission_prob_per_pulse", &PhotonSource::emission_prob_per_pulse)
        .def_readwrite("multiphoton_prob", &PhotonSource::multiphoton_prob)
        .def_readwrite("coherence_time_ps", &PhotonSource::coherence_time_ps)
        .def("wavepacket", &PhotonSource::wavepacket, py::arg("onset_ps") = 0.0);

    m.def("conversion_probability", &conversion_probability, py::arg("power_mw"),
          py::arg("model"));
    m.def(
        "converted_profile",
        [](const TemporalProfile& photon, const PumpPulseTrain& train,
           const ConversionModel& model, double step) {
            auto out = converted_profile(photon, train, model, step);
            return py::make_tuple(out.profile, out.net_efficiency);
        },
        py::arg("photon"), py::arg("train"), py::arg("model"),
        py::arg("grid_step_ps") = 1.0);
    m.def("net_efficiency", &net_efficiency, py::arg("photon"), py::arg("train"),
          py::arg("model"), py::arg("grid_step_ps") = 1.0);
    m.def("optimal_delay", &optimal_delay, py::arg("photon"), py::arg("train"),
          py::arg("model"));
    m.def(
        "net_efficiency_curve",
        [](std::vector<double> fwhms, const PhotonSource& source,
           const PumpPulseTrain& train, const ConversionModel& model,
           double excitation_rate_hz) {
            auto pts = net_efficiency_curve(fwhms, source, train, model,
                                            excitation_rate_hz);
            py::list out;
            for (const auto& p : pts)
                out.append(py::make_tuple(p.tau_mod_ps, p.delay_ps, p.efficiency,
                                          p.rate_per_s));
            return out;
        },
        py::arg("fwhm_list_ps"), py::arg("source"), py::arg("train_template"),
        py::arg("model"), py::arg("excitation_rate_hz"));
    m.def("attempt_conversion", &attempt_conversion, py::arg("photon_time_ps"),
          py::arg("train"), py::arg("model"), py::arg("rng"));
    m.def("raman_events", &raman_events, py::arg("train"), py::arg("model"),
          py::arg("duration_ps"), py::arg("rng"), py::arg("start_ps") = 0.0,
          py::arg("channel") = 0);
    m.def("mean_raman_rate_per_s", &mean_raman_rate_per_s, py::arg("train"),
          py::arg("model"));
    m.def("photon_emission_time", &photon_emission_time, py::arg("trigger_ps"),
          py::arg("source"), py::arg("rng"));

    py::class_<TimeTag>(m, "TimeTag")
        .def(py::init([](double t, int ch) { return TimeTag{t, ch}; }),
             py::arg("time_ps"), py::arg("channel") = 0)
        .def_readwrite("time_ps", &TimeTag::time_ps)
        .def_readwrite("channel", &TimeTag::channel);

    py::class_<TimeTagStream>(m, "TimeTagStream")
        .def(py::init<>())
        .def(py::init([](std::vector<double> times, double duration, int channel) {
                 TimeTagStream s;
                 s.duration_ps = duration;
                 s.tags.reserve(times.size());
                 for (double t : times) s.tags.push_back({t, channel});
                 s.sort();
                 return s;
             }),
             py::arg("times_ps"), py::arg("duration_ps"), py::arg("channel") = 0)
        .def_readwrite("duration_ps", &TimeTagStream::duration_ps)
        .def("times",
             [](const TimeTagStream& s) {
                 std::vector<double> t;
                 t.reserve(s.tags.size());
                 for (const auto& tag : s.tags) t.push_back(tag.time_ps);
                 return t;
             })
        .def("__len__", [](const TimeTagStream& s) { return s.size(); });

    py::class_<DetectorModel>(m, "DetectorModel")
        .def(py::init<>())
        .def_readwrite("efficiency", &DetectorModel::efficiency)
        .def_readwrite("jitter_fwhm_ps", &DetectorModel::jitter_fwhm_ps)
        .def_readwrite("dark_rate_per_s", &DetectorModel::dark_rate_per_s)
        .def_readwrite("dead_time_ps", &DetectorModel::dead_time_ps);

    m.def("detect", &detect, py::arg("stream"), py::arg("detector"), py::arg("rng"));

    py::class_<Histogram>(m, "Histogram")
        .def(py::init<>())
        .def_readwrite("start_ps", &Histogram::start_ps)
        .def_readwrite("bin_width_ps", &Histogram::bin_width_ps)
        .def_readwrite("counts", &Histogram::counts)
        .def_readwrite("duration_ps", &Histogram::duration_ps)
        .def("total", &Histogram::total)
        .def("bin_center", &Histogram::bin_center, py::arg("i"));

    m.def("tcspc_histogram", &tcspc_histogram, py::arg("tags"),
          py::arg("sync_period_ps"), py::arg("bin_width_ps"),
          py::arg("phase_offset_ps") = 0.0);
    m.def("hbt_split", &hbt_split, py::arg("stream"), py::arg("rng"));

    py::class_<CorrelationOptions>(m, "CorrelationOptions")
        .def(py::init<>())
        .def_readwrite("max_delay_ps", &CorrelationOptions::max_delay_ps)
        .def_readwrite("bin_width_ps", &CorrelationOptions::bin_width_ps)
        .def_readwrite("peak_period_ps", &CorrelationOptions::peak_period_ps)
        .def_readwrite("peak_halfwidth_ps", &CorrelationOptions::peak_halfwidth_ps)
        .def_readwrite("satellite_offset_ps", &CorrelationOptions::satellite_offset_ps)
        .def_readwrite("background_exclusion_ps",
                       &CorrelationOptions::background_exclusion_ps)
        .def_readwrite("pair_window", &CorrelationOptions::pair_window);

    py::class_<CorrelationResult>(m, "CorrelationResult")
        .def_readonly("histogram", &CorrelationResult::histogram)
        .def_readonly("normalization_area", &CorrelationResult::normalization_area)
        .def_readonly("g2_zero", &CorrelationResult::g2_zero)
        .def_readonly("g2_zero_sigma", &CorrelationResult::g2_zero_sigma)
        .def_readonly("zero_peak_count", &CorrelationResult::zero_peak_count)
        .def_readonly("peak_areas", &CorrelationResult::peak_areas)
        .def_readonly("satellite_areas", &CorrelationResult::satellite_areas)
        .def_readonly("satellite_ratio", &CorrelationResult::satellite_ratio)
        .def_readonly("satellite_ratio_sigma",
                      &CorrelationResult::satellite_ratio_sigma)
        .def_readonly("background_count", &CorrelationResult::background_count)
        .def_readonly("background_per_bin", &CorrelationResult::background_per_bin)
        .def_readonly("background_per_bin_sigma",
                      &CorrelationResult::background_per_bin_sigma);

    m.def("correlate", &correlate, py::arg("a"), py::arg("b"), py::arg("options"));

    py::class_<FwhmEstimate>(m, "FwhmEstimate")
        .def_readonly("fwhm_ps", &FwhmEstimate::fwhm_ps)
        .def_readonly("uncertainty_ps", &FwhmEstimate::uncertainty_ps)
        .def_readonly("background_per_bin", &FwhmEstimate::background_per_bin)
        .def_readonly("peak_position_ps", &FwhmEstimate::peak_position_ps)
        .def_readonly("peak_height", &FwhmEstimate::peak_height);

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("lifetime_ps", &FitResult::lifetime_ps)
        .def_readonly("lifetime_sigma_ps", &FitResult::lifetime_sigma_ps)
        .def_readonly("amplitude", &FitResult::amplitude)
        .def_readonly("background_per_bin", &FitResult::background_per_bin)
        .def_readonly("reduced_chi2", &FitResult::reduced_chi2)
        .def_readonly("points_used", &FitResult::points_used);

    m.def("estimate_fwhm", &estimate_fwhm, py::arg("histogram"),
          py::arg("background_fraction") = 0.1);
    m.def("fit_lifetime", &fit_lifetime, py::arg("histogram"),
          py::arg("window_start_ps"), py::arg("window_end_ps"),
          py::arg("background_window_ps") = std::nullopt);
    m.def("delay_sweep_peaks", &delay_sweep_peaks, py::arg("sweeps"));
    m.def("analytic_g2_zero", &analytic_g2_zero, py::arg("signal_rate"),
          py::arg("background_rate"));
    m.def("predicted_converted_fwhm", &predicted_converted_fwhm,
          py::arg("tau_mod_ps"), py::arg("jitter_fwhm_ps"), py::arg("saturated"));

    py::class_<ScenarioConfig>(m, "ScenarioConfig")
        .def(py::init<>())
        .def_static("load", &ScenarioConfig::load, py::arg("path"))
        .def_static("from_json_str", &config_from_json_str, py::arg("text"))
        .def("to_json_str",
             [](const ScenarioConfig& c) { return c.to_json().dump(2); })
        .def_readwrite("name", &ScenarioConfig::name)
        .def_readwrite("timing", &ScenarioConfig::timing)
        .def_readwrite("conversion", &ScenarioConfig::conversion)
        .def_readwrite("source", &ScenarioConfig::source)
        .def_property(
            "seed", [](const ScenarioConfig& c) { return c.run.seed; },
            [](ScenarioConfig& c, std::uint64_t s) { c.run.seed = s; })
        .def_property(
            "shards", [](const ScenarioConfig& c) { return c.run.shards; },
            [](ScenarioConfig& c, int s) { c.run.shards = s; })
        .def("validate", &ScenarioConfig::validate)
        .def("pump_train", &ScenarioConfig::pump_train,
             py::arg("delay_override") = std::nullopt);

    py::class_<RunSummary>(m, "RunSummary")
        .def_readonly("duration_ps", &RunSummary::duration_ps)
        .def_readonly("triggers", &RunSummary::triggers)
        .def_readonly("detected_count", &RunSummary::detected_count)
        .def_readonly("net_eff_quadrature", &RunSummary::net_eff_quadrature)
        .def_readonly("off_window_eff_quadrature",
                      &RunSummary::off_window_eff_quadrature)
        .def_readonly("delay_used_ps", &RunSummary::delay_used_ps)
        .def_readonly("tcspc", &RunSummary::tcspc)
        .def_readonly("correlation", &RunSummary::correlation)
        .def_readonly("fwhm", &RunSummary::fwhm)
        .def_readonly("lifetime", &RunSummary::lifetime)
        .def("mc_efficiency_gated", &RunSummary::mc_efficiency_gated)
        .def("mc_efficiency_gated_sigma", &RunSummary::mc_efficiency_gated_sigma)
        .def("detected_rate_per_s", &RunSummary::detected_rate_per_s)
        .def("to_json_str",
             [](const RunSummary& s) { return s.to_json().dump(2); });

    m.def("run_scenario", &run_scenario, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("merge_shards", &merge_shards, py::arg("shards"));
    m.def(
        "sweep",
        [](const ScenarioConfig& cfg, const std::string& parameter,
           std::vector<double> values) {
            SweepParameter p;
            if (parameter == "tau_mod")
                p = SweepParameter::TauMod;
            else if (parameter == "delta_t")
                p = SweepParameter::DeltaT;
            else
                throw ConfigError("sweep parameter must be 'tau_mod' or 'delta_t'");
            py::gil_scoped_release release;
            return sweep(cfg, p, values);
        },
        py::arg("config"), py::arg("parameter"), py::arg("values"));

    py::class_<SweepResult>(m, "SweepResult")
        .def_readonly("values", &SweepResult::values)
        .def_readonly("runs", &SweepResult::runs)
        .def_readonly("delay_fit", &SweepResult::delay_fit);

    m.def("write_outputs", &write_outputs, py::arg("summary"), py::arg("out_dir"),
          py::arg("format") = "csv");
}
