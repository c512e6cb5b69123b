#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "upconv/detection.hpp"

namespace upconv {

struct FwhmEstimate {
    double fwhm_ps;
    double uncertainty_ps;  // one bin width
    double background_per_bin;
    double peak_position_ps;
    double peak_height;  // background-subtracted
};

// Background-subtracted FWHM of a single-peak histogram. Background is the
// median of the outer bins (background_fraction of the bins at each end);
// half-maximum crossings are found by linear interpolation from the peak
// outward. Throws NoPeak when nothing rises above background and Multimodal
// when a second structure crosses half maximum.
FwhmEstimate estimate_fwhm(const Histogram& h, double background_fraction = 0.1);

struct FitResult {
    double lifetime_ps = 0.0;
    double lifetime_sigma_ps = 0.0;
    double amplitude = 0.0;
    double background_per_bin = 0.0;
    double reduced_chi2 = 0.0;
    std::pair<double, double> window_ps{0.0, 0.0};
    int points_used = 0;
};

// Exponential lifetime from a TCSPC histogram tail: weighted least squares of
// log(counts - background) against time over [window_start, window_end], with
// Poisson weights (w = counts). Background is the median of the bins in
// background_window (defaults to the first tenth of the histogram). Throws
// InsufficientCounts when fewer than 20 usable bins remain and the usable
// dynamic range is below two decades.
FitResult fit_lifetime(const Histogram& h, double window_start_ps,
                       double window_end_ps,
                       std::optional<std::pair<double, double>>
                           background_window_ps = std::nullopt);

// Lifetime from the decay of TCSPC peak heights across a pump-delay sweep.
// Heights are the maxima of 3-bin moving averages; the fit is unweighted
// least squares on log height versus delay. Throws InsufficientPoints for
// fewer than four delays and NonDecaying when the heights do not fall.
FitResult delay_sweep_peaks(
    const std::vector<std::pair<double, Histogram>>& sweeps);

// Zero-delay autocorrelation of an ideal single-photon stream of rate S mixed
// with Poissonian background of rate B: 1 - (S / (S + B))^2.
double analytic_g2_zero(double signal_rate, double background_rate);

// Closed-form width of the converted wavepacket: sqrt(2) pump broadening at
// full saturation, detector jitter in quadrature.
double predicted_converted_fwhm(double tau_mod_ps, double jitter_fwhm_ps,
                                bool saturated);

}  // namespace upconv
