#pragma once

#include <optional>
#include <vector>

#include "upconv/profile.hpp"
#include "upconv/rng.hpp"

namespace upconv {

struct PhotonSource;

// Experiment clocking: a pulsed excitation laser plus an EOM gate running at
// a divided rate. Times in ps, excitation at k * excitation_period_ps.
struct TimingConfig {
    double excitation_period_ps = 20000.0;  // 50 MHz
    int pump_divider = 2;                   // gate every Nth trigger (25 MHz)
    double delay_ps = 0.0;                  // pump delay relative to trigger
    bool auto_delay = false;                // pick the efficiency-optimal delay
    std::optional<double> pulse_fwhm_ps;    // absent = CW pump
    double sim_duration_ps = 1e9;

    bool cw() const { return !pulse_fwhm_ps.has_value(); }
    double pump_period_ps() const {
        return excitation_period_ps * static_cast<double>(pump_divider);
    }
    void validate() const;
};

// Excitation trigger instants covering [0, sim_duration).
std::vector<double> build_timeline(const TimingConfig& cfg);

// Whether trigger k carries a pump gate.
inline bool pump_gated(std::int64_t trigger_index, int pump_divider) {
    return trigger_index % pump_divider == 0;
}

// Periodic gated pump. The pulse template is a unit-peak Power profile
// centered at t = 0; pulse centers sit at delay + k * period. Off power is
// floored at peak * 10^(-extinction/10). A CW train returns the peak power
// everywhere.
struct PumpPulseTrain {
    TemporalProfile shape = TemporalProfile::constant(1.0);
    double period_ps = 40000.0;
    double peak_power_mw = 85.0;
    double extinction_ratio_db = 20.0;
    double delay_ps = 0.0;
    bool cw = false;

    static PumpPulseTrain cw_pump(double peak_power_mw);
    static PumpPulseTrain pulsed(TemporalProfile pulse_shape, double period_ps,
                                 double peak_power_mw, double extinction_ratio_db,
                                 double delay_ps);

    double off_level_mw() const;
    double power_at(double t_ps) const;

    // Integral of power over one period [0, period), in mW*ps. Used by the
    // Raman rate oracle. For CW this is peak * period.
    double period_power_integral() const;

    void validate() const;
};

// Emission instant of a photon triggered at `trigger_ps`: the trigger plus an
// exponential latency with the source lifetime.
double photon_emission_time(double trigger_ps, const PhotonSource& source,
                            RandomStream& rng);

}  // namespace upconv
