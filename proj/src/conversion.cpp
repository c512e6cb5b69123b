#include "upconv/conversion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace upconv {

void ConversionModel::validate() const {
    if (!(eta_max >= 0.0) || eta_max > 1.0)
        throw ConfigError("eta_max must lie in [0, 1]");
    if (!(p_sat_mw > 0.0)) throw ConfigError("p_sat_mw must be > 0");
    if (!(qpm_min_pulse_fwhm_ps > 0.0))
        throw ConfigError("qpm_min_pulse_fwhm_ps must be > 0");
    if (raman_coeff_per_s_per_mw < 0.0)
        throw ConfigError("raman_coeff must be >= 0");
}

void PhotonSource::validate() const {
    if (!(lifetime_ps > 0.0)) throw ConfigError("source lifetime must be > 0");
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(collection_efficiency) || !prob(emission_prob_per_pulse) ||
        !prob(multiphoton_prob))
        throw ConfigError("source probabilities must lie in [0, 1]");
}

double conversion_probability(double power_mw, const ConversionModel& model) {
    if (!(power_mw >= 0.0)) throw PhysicsError("pump power must be >= 0");
    const double u = std::sqrt(std::min(power_mw, model.p_sat_mw) / model.p_sat_mw);
    const double s = std::sin(0.5 * std::numbers::pi * u);
    return model.eta_max * s * s;
}

namespace {

// Trapezoidal overlap of eta(P(t)) with the photon density on its support.
double overlap_integral(const TemporalProfile& photon, const PumpPulseTrain& train,
                        const ConversionModel& model, double step,
                        std::vector<double>* weighted, double* grid_start) {
    const auto [lo, hi] = photon.support();
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw ZeroOverlap("photon profile must have bounded support");
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1;
    double sum = 0.0;
    double prev = 0.0;
    if (weighted) weighted->assign(n, 0.0);
    if (grid_start) *grid_start = lo;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = lo + static_cast<double>(i) * step;
        const double w =
            conversion_probability(train.power_at(t), model) * photon.eval(t);
        if (weighted) (*weighted)[i] = w;
        if (i > 0) sum += 0.5 * (prev + w) * step;
        prev = w;
    }
    return sum;
}

}  // namespace

ConvertedProfile converted_profile(const TemporalProfile& photon,
                                   const PumpPulseTrain& train,
                                   const ConversionModel& model,
                                   double grid_step_ps) {
    if (photon.semantics() != Semantics::Density)
        throw SemanticsError("converted_profile expects a density photon profile");

    if (train.cw) {
        // Constant pump: the temporal shape passes through unchanged, and the
        // unit-mass density contract makes the efficiency exactly eta(P).
        const double net = conversion_probability(train.peak_power_mw, model);
        if (net < 1e-12) throw ZeroOverlap("CW conversion efficiency is zero");
        return {photon, net};
    }

    std::vector<double> weighted;
    double start = 0.0;
    const double net =
        overlap_integral(photon, train, model, grid_step_ps, &weighted, &start);
    if (net < 1e-12)
        throw ZeroOverlap("photon wavepacket does not overlap the pump gate");
    TemporalProfile profile =
        TemporalProfile::sampled(start, grid_step_ps, std::move(weighted),
                                 Semantics::Density);
    return {std::move(profile), net};
}

double net_efficiency(const TemporalProfile& photon, const PumpPulseTrain& train,
                      const ConversionModel& model, double grid_step_ps) {
    if (train.cw) {
        const double eta = conversion_probability(train.peak_power_mw, model);
        return photon.semantics() == Semantics::Density ? eta : eta * photon.mass();
    }
    return overlap_integral(photon, train, model, grid_step_ps, nullptr, nullptr);
}

double optimal_delay(const TemporalProfile& photon, PumpPulseTrain train,
                     const ConversionModel& model) {
    if (train.cw) return 0.0;
    const double width = train.shape.fwhm();
    auto eff_at = [&](double d, double step) {
        train.delay_ps = d;
        return net_efficiency(photon, train, model, step);
    };

    // Coarse scan on a cheap grid, then golden-section refinement.
    const double coarse_step = std::max(1.0, width / 32.0);
    const auto [plo, phi] = photon.support();
    const double span = std::min(phi - plo, 4.0 * width + 4000.0);
    double best_d = plo, best = -1.0;
    const double coarse = std::max(width / 16.0, 1.0);
    for (double d = plo - 2.0 * width; d <= plo + span; d += coarse) {
        const double e = eff_at(d, coarse_step);
        if (e > best) {
            best = e;
            best_d = d;
        }
    }
    double lo = best_d - coarse, hi = best_d + coarse;
    constexpr double kInvPhi = 0.6180339887498949;
    for (int it = 0; it < 48; ++it) {
        const double m1 = hi - (hi - lo) * kInvPhi;
        const double m2 = lo + (hi - lo) * kInvPhi;
        if (eff_at(m1, 1.0) < eff_at(m2, 1.0))
            lo = m1;
        else
            hi = m2;
    }
    return 0.5 * (lo + hi);
}

std::vector<EfficiencyPoint> net_efficiency_curve(
    std::span<const double> fwhm_list_ps, const PhotonSource& source,
    const PumpPulseTrain& train_template, const ConversionModel& model,
    double excitation_rate_hz) {
    model.validate();
    source.validate();
    const TemporalProfile photon = source.wavepacket();
    std::vector<EfficiencyPoint> points;
    points.reserve(fwhm_list_ps.size());
    for (double fwhm : fwhm_list_ps) {
        if (fwhm < model.qpm_min_pulse_fwhm_ps)
            throw QpmViolation("pump pulse narrower than the QPM acceptance floor");
        PumpPulseTrain train = train_template;
        if (const auto* ft = std::get_if<FlatTop>(&train_template.shape.shape())) {
            train.shape = TemporalProfile::flat_top(0.0, fwhm, ft->edge_fwhm_ps,
                                                    Semantics::Power);
        } else {
            train.shape = TemporalProfile::gaussian(0.0, fwhm, Semantics::Power);
        }
        train.cw = false;
        train.delay_ps = optimal_delay(photon, train, model);
        const double eff = net_efficiency(photon, train, model);
        const double rate = excitation_rate_hz * source.collection_efficiency *
                            source.emission_prob_per_pulse * eff;
        points.push_back({fwhm, train.delay_ps, eff, rate});
    }
    return points;
}

std::optional<double> attempt_conversion(double photon_time_ps,
                                         const PumpPulseTrain& train,
                                         const ConversionModel& model,
                                         RandomStream& rng) {
    const double p = conversion_probability(train.power_at(photon_time_ps), model);
    if (rng.uniform() < p) return photon_time_ps;
    return std::nullopt;
}

TimeTagStream raman_events(const PumpPulseTrain& train, const ConversionModel& model,
                           double duration_ps, RandomStream& rng, double start_ps,
                           int channel) {
    if (!(duration_ps > 0.0)) throw ConfigError("raman duration must be > 0");
    TimeTagStream stream;
    stream.duration_ps = start_ps + duration_ps;
    const double peak_rate_ps = model.raman_coeff_per_s_per_mw *
                                train.peak_power_mw * 1e-12;
    if (peak_rate_ps <= 0.0) return stream;

    const double mean_gap = 1.0 / peak_rate_ps;
    const double end = start_ps + duration_ps;
    for (double t = start_ps + rng.exponential(mean_gap); t < end;
         t += rng.exponential(mean_gap)) {
        const double accept = train.power_at(t) / train.peak_power_mw;
        if (rng.uniform() < accept) stream.tags.push_back({t, channel});
    }
    return stream;
}

double mean_raman_rate_per_s(const PumpPulseTrain& train,
                             const ConversionModel& model) {
    const double period = train.cw ? 1.0 : train.period_ps;
    const double integral = train.cw ? train.peak_power_mw
                                     : train.period_power_integral() / period;
    return model.raman_coeff_per_s_per_mw * integral;
}

}  // namespace upconv
