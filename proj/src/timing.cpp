#include "upconv/timing.hpp"

#include <cmath>

#include "upconv/conversion.hpp"
#include "upconv/errors.hpp"

namespace upconv {

void TimingConfig::validate() const {
    if (!(excitation_period_ps > 0.0))
        throw ConfigError("excitation_period_ps must be > 0");
    if (pump_divider < 1) throw ConfigError("pump_divider must be >= 1");
    if (!(sim_duration_ps > 0.0)) throw ConfigError("sim_duration_ps must be > 0");
    if (pulse_fwhm_ps && !(*pulse_fwhm_ps > 0.0))
        throw ConfigError("pulse_fwhm_ps must be > 0");
    if (!std::isfinite(delay_ps)) throw ConfigError("delay_ps must be finite");
}

std::vector<double> build_timeline(const TimingConfig& cfg) {
    std::vector<double> triggers;
    const double period = cfg.excitation_period_ps;
    triggers.reserve(static_cast<std::size_t>(cfg.sim_duration_ps / period) + 1);
    for (double k = 0.0;; k += 1.0) {
        const double t = k * period;
        if (t >= cfg.sim_duration_ps) break;
        triggers.push_back(t);
    }
    if (triggers.empty()) triggers.push_back(0.0);
    return triggers;
}

PumpPulseTrain PumpPulseTrain::cw_pump(double peak_power_mw) {
    PumpPulseTrain train;
    train.peak_power_mw = peak_power_mw;
    train.cw = true;
    train.validate();
    return train;
}

PumpPulseTrain PumpPulseTrain::pulsed(TemporalProfile pulse_shape, double period_ps,
                                      double peak_power_mw,
                                      double extinction_ratio_db, double delay_ps) {
    PumpPulseTrain train;
    train.shape = std::move(pulse_shape);
    train.period_ps = period_ps;
    train.peak_power_mw = peak_power_mw;
    train.extinction_ratio_db = extinction_ratio_db;
    train.delay_ps = delay_ps;
    train.cw = false;
    train.validate();
    return train;
}

void PumpPulseTrain::validate() const {
    if (!(peak_power_mw >= 0.0)) throw ConfigError("peak power must be >= 0");
    if (cw) return;
    if (!(period_ps > 0.0)) throw ConfigError("pump period must be > 0");
    if (!(extinction_ratio_db > 0.0))
        throw ConfigError("extinction ratio must be > 0 dB");
    if (shape.semantics() != Semantics::Power)
        throw SemanticsError("pump pulse template must have power semantics");
    if (!std::holds_alternative<Gaussian>(shape.shape()) &&
        !std::holds_alternative<FlatTop>(shape.shape()))
        throw ConfigError("pulsed pump template must be Gaussian or FlatTop");
}

double PumpPulseTrain::off_level_mw() const {
    if (cw) return peak_power_mw;
    return peak_power_mw * std::pow(10.0, -extinction_ratio_db / 10.0);
}

double PumpPulseTrain::power_at(double t) const {
    if (cw) return peak_power_mw;
    // Overlapping replicas resolve by maximum, not sum.
    const auto [lo, hi] = shape.support();
    const double reach = std::max(std::abs(lo), std::abs(hi));
    const auto extra = static_cast<long>(std::ceil(reach / period_ps));
    const double x = (t - delay_ps) / period_ps;
    const auto k0 = static_cast<long>(std::llround(x));
    double envelope = 0.0;
    for (long k = k0 - extra - 1; k <= k0 + extra + 1; ++k) {
        const double u = t - delay_ps - static_cast<double>(k) * period_ps;
        envelope = std::max(envelope, shape.eval(u));
    }
    return std::max(peak_power_mw * envelope, off_level_mw());
}

double PumpPulseTrain::period_power_integral() const {
    if (cw) return peak_power_mw * period_ps;
    double sum = 0.0;
    const double step = 1.0;
    const auto n = static_cast<std::size_t>(period_ps / step);
    for (std::size_t i = 0; i < n; ++i) {
        const double t0 = static_cast<double>(i) * step;
        sum += 0.5 * (power_at(t0) + power_at(t0 + step)) * step;
    }
    return sum;
}

double photon_emission_time(double trigger_ps, const PhotonSource& source,
                            RandomStream& rng) {
    return trigger_ps + rng.exponential(source.lifetime_ps);
}

}  // namespace upconv
