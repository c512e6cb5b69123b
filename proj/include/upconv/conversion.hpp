#pragma once

#include <optional>
#include <span>
#include <vector>

#include "upconv/detection.hpp"
#include "upconv/profile.hpp"
#include "upconv/rng.hpp"
#include "upconv/timing.hpp"

namespace upconv {

// Saturated quasi-phase-matched sum-frequency converter.
//
// The instantaneous single-photon conversion probability follows the
// saturated law
//     eta(P) = eta_max * sin^2( (pi/2) * sqrt(min(P, p_sat) / p_sat) ),
// which plateaus at eta_max for P >= p_sat and reproduces both the CW
// plateau and the sqrt(2) width broadening of a fully saturated Gaussian
// gate. The law is isolated behind this type so an alternative can be
// substituted.
struct ConversionModel {
    double eta_max = 0.75;
    double p_sat_mw = 85.0;
    double qpm_min_pulse_fwhm_ps = 10.0;  // QPM acceptance-bandwidth floor
    double raman_coeff_per_s_per_mw = 0.0;

    void validate() const;
};

// Triggered single-photon emitter feeding the converter.
struct PhotonSource {
    double lifetime_ps = 1500.0;
    double collection_efficiency = 0.001;
    double emission_prob_per_pulse = 1.0;
    double multiphoton_prob = 0.0;   // chance of one extra collected photon
    double coherence_time_ps = 280.0;  // metadata only, not simulated

    TemporalProfile wavepacket(double onset_ps = 0.0) const {
        return TemporalProfile::exponential_decay(onset_ps, lifetime_ps);
    }
    void validate() const;
};

double conversion_probability(double power_mw, const ConversionModel& model);

struct ConvertedProfile {
    TemporalProfile profile;  // density of the converted photon's time
    double net_efficiency;
};

// Pointwise product of the conversion probability under the (periodic) pump
// with the photon density; the integral is the net conversion efficiency.
// A CW train leaves the profile unchanged with net efficiency eta(P_peak).
// Throws ZeroOverlap when the overlap integral vanishes.
ConvertedProfile converted_profile(const TemporalProfile& photon,
                                   const PumpPulseTrain& train,
                                   const ConversionModel& model,
                                   double grid_step_ps = 1.0);

// Net efficiency only (no profile allocation).
double net_efficiency(const TemporalProfile& photon, const PumpPulseTrain& train,
                      const ConversionModel& model, double grid_step_ps = 1.0);

// Pump delay maximizing the net efficiency for the given photon wavepacket.
// Deterministic: coarse scan refined by golden-section search.
double optimal_delay(const TemporalProfile& photon, PumpPulseTrain train,
                     const ConversionModel& model);

struct EfficiencyPoint {
    double tau_mod_ps;
    double delay_ps;
    double efficiency;
    double rate_per_s;
};

// Net efficiency and expected detected rate versus pump pulse FWHM, each
// point at its optimal delay. rate = excitation_rate * collection * net_eff.
// Throws QpmViolation for pulses below the QPM acceptance floor.
std::vector<EfficiencyPoint> net_efficiency_curve(
    std::span<const double> fwhm_list_ps, const PhotonSource& source,
    const PumpPulseTrain& train_template, const ConversionModel& model,
    double excitation_rate_hz);

// Bernoulli conversion attempt at the instantaneous pump power; a converted
// photon keeps its arrival time.
std::optional<double> attempt_conversion(double photon_time_ps,
                                         const PumpPulseTrain& train,
                                         const ConversionModel& model,
                                         RandomStream& rng);

// Pump-induced anti-Stokes Raman background: an inhomogeneous Poisson
// process with rate(t) = raman_coeff * P(t), sampled over [t0, t0+duration)
// by thinning against the peak rate.
TimeTagStream raman_events(const PumpPulseTrain& train, const ConversionModel& model,
                           double duration_ps, RandomStream& rng,
                           double start_ps = 0.0, int channel = 0);

// Mean Raman rate in events per second, averaged over one pump period.
double mean_raman_rate_per_s(const PumpPulseTrain& train,
                             const ConversionModel& model);

}  // namespace upconv
