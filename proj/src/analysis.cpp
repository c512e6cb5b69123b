#include "upconv/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace upconv {

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + static_cast<long>(mid) - 1, v.end());
        m = 0.5 * (m + v[mid - 1]);
    }
    return m;
}

struct WlsLine {
    double slope, intercept, slope_sigma, reduced_chi2;
    int n;
};

// Weighted least squares y = a + b x.
WlsLine wls(const std::vector<double>& x, const std::vector<double>& y,
            const std::vector<double>& w) {
    double sw = 0, swx = 0, swy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        swx += w[i] * x[i];
        swy += w[i] * y[i];
    }
    const double xbar = swx / sw, ybar = swy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (x[i] - xbar) * (x[i] - xbar);
        sxy += w[i] * (x[i] - xbar) * (y[i] - ybar);
    }
    WlsLine line;
    line.n = static_cast<int>(x.size());
    line.slope = sxy / sxx;
    line.intercept = ybar - line.slope * xbar;
    double chi2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (line.intercept + line.slope * x[i]);
        chi2 += w[i] * r * r;
    }
    line.reduced_chi2 = line.n > 2 ? chi2 / static_cast<double>(line.n - 2) : 0.0;
    line.slope_sigma = std::sqrt(1.0 / sxx);
    return line;
}

}  // namespace

FwhmEstimate estimate_fwhm(const Histogram& h, double background_fraction) {
    const auto n = h.counts.size();
    if (n < 4) throw NoPeak("histogram too short");
    if (!(background_fraction >= 0.0) || background_fraction > 0.4)
        throw ConfigError("background fraction must lie in [0, 0.4]");

    const auto edge = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                   background_fraction *
                                                   static_cast<double>(n)));
    std::vector<double> outer;
    for (std::size_t i = 0; i < edge; ++i) outer.push_back(static_cast<double>(h.counts[i]));
    for (std::size_t i = n - edge; i < n; ++i)
        outer.push_back(static_cast<double>(h.counts[i]));
    const double bg = median(std::move(outer));

    std::vector<double> sub(n);
    for (std::size_t i = 0; i < n; ++i)
        sub[i] = std::max(static_cast<double>(h.counts[i]) - bg, 0.0);

    const auto imax = static_cast<std::size_t>(
        std::max_element(sub.begin(), sub.end()) - sub.begin());
    const double peak = sub[imax];
    if (!(peak > 0.0) || peak < 5.0 * std::sqrt(bg + 1.0))
        throw NoPeak("no peak above background");
    const double half = 0.5 * peak;

    // Walk outward from the peak to the first bins below half maximum.
    std::size_t il = imax;
    while (il > 0 && sub[il] >= half) --il;
    std::size_t ir = imax;
    while (ir + 1 < n && sub[ir] >= half) ++ir;
    if (sub[il] >= half || sub[ir] >= half)
        throw NoPeak("peak does not fall below half maximum inside the histogram");

    auto interp = [&](std::size_t a, std::size_t b) {
        // crossing between bins a (below) and b (above or equal)
        const double ca = sub[a], cb = sub[b];
        const double frac = (half - ca) / (cb - ca);
        return h.bin_center(a) + frac * (h.bin_center(b) - h.bin_center(a));
    };
    const double left = interp(il, il + 1);
    const double right = interp(ir, ir - 1);

    // A second structure crossing half maximum outside the main pair makes
    // the width ill-defined. Allow Poisson fluctuations on top of half.
    const double guard = half + 3.0 * std::sqrt(std::max(half + bg, 1.0));
    for (std::size_t i = 0; i < n; ++i) {
        if (i >= il && i <= ir) continue;
        if (sub[i] > guard)
            throw Multimodal("histogram has more than one half-maximum peak");
    }

    FwhmEstimate est;
    est.fwhm_ps = right - left;
    est.uncertainty_ps = h.bin_width_ps;
    est.background_per_bin = bg;
    est.peak_position_ps = h.bin_center(imax);
    est.peak_height = peak;
    return est;
}

FitResult fit_lifetime(const Histogram& h, double window_start_ps,
                       double window_end_ps,
                       std::optional<std::pair<double, double>> background_window_ps) {
    const auto n = h.counts.size();
    const double span = h.start_ps + static_cast<double>(n) * h.bin_width_ps;
    if (!(window_start_ps < window_end_ps) || window_start_ps < h.start_ps ||
        window_end_ps > span)
        throw ConfigError("fit window must lie inside the histogram support");

    double bg_lo = h.start_ps;
    double bg_hi = h.start_ps + 0.1 * (span - h.start_ps);
    if (background_window_ps) {
        bg_lo = background_window_ps->first;
        bg_hi = background_window_ps->second;
    }
    std::vector<double> bg_bins;
    for (std::size_t i = 0; i < n; ++i) {
        const double c = h.bin_center(i);
        if (c >= bg_lo && c < bg_hi)
            bg_bins.push_back(static_cast<double>(h.counts[i]));
    }
    const double bg = median(std::move(bg_bins));

    std::vector<double> x, y, w;
    double ymin = std::numeric_limits<double>::infinity(), ymax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double c = h.bin_center(i);
        if (c < window_start_ps || c > window_end_ps) continue;
        const double counts = static_cast<double>(h.counts[i]);
        const double s = counts - bg;
        if (!(s > 0.0)) continue;
        x.push_back(c);
        y.push_back(std::log(s));
        w.push_back(counts);  // var(log s) ~ 1/counts
        ymin = std::min(ymin, s);
        ymax = std::max(ymax, s);
    }
    const bool enough_bins = x.size() >= 20;
    const bool enough_range = ymax >= 100.0 * std::max(ymin, 1e-300);
    if (x.size() < 3 || (!enough_bins && !enough_range))
        throw InsufficientCounts(
            "lifetime fit needs >= 20 usable bins or two decades of counts");

    const WlsLine line = wls(x, y, w);
    if (!(line.slope < 0.0))
        throw NonDecaying("histogram tail does not decay in the fit window");

    FitResult fit;
    fit.lifetime_ps = -1.0 / line.slope;
    fit.lifetime_sigma_ps = line.slope_sigma / (line.slope * line.slope);
    fit.amplitude = std::exp(line.intercept);
    fit.background_per_bin = bg;
    fit.reduced_chi2 = line.reduced_chi2;
    fit.window_ps = {window_start_ps, window_end_ps};
    fit.points_used = line.n;
    return fit;
}

FitResult delay_sweep_peaks(
    const std::vector<std::pair<double, Histogram>>& sweeps) {
    if (sweeps.size() < 4)
        throw InsufficientPoints("delay sweep fit needs at least four delays");

    std::vector<double> delays, heights;
    for (const auto& [delay, hist] : sweeps) {
        const auto n = hist.counts.size();
        if (n < 3) throw ConfigError("sweep histogram too short");
        // 3-bin moving average suppresses shot noise before peak extraction.
        double best = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double s = (static_cast<double>(hist.counts[i - 1]) +
                              static_cast<double>(hist.counts[i]) +
                              static_cast<double>(hist.counts[i + 1])) /
                             3.0;
            best = std::max(best, s);
        }
        if (!(best > 0.0)) throw NoPeak("empty sweep histogram");
        delays.push_back(delay);
        heights.push_back(best);
    }

    std::vector<double> logh(heights.size()), ones(heights.size(), 1.0);
    for (std::size_t i = 0; i < heights.size(); ++i) logh[i] = std::log(heights[i]);
    const WlsLine line = wls(delays, logh, ones);
    if (!(line.slope < 0.0))
        throw NonDecaying("peak heights do not decay with delay");

    // Scale the slope error by the residual scatter (unit weights carry no
    // counting information).
    const double sigma_scale = std::sqrt(std::max(line.reduced_chi2, 1e-12));
    FitResult fit;
    fit.lifetime_ps = -1.0 / line.slope;
    fit.lifetime_sigma_ps =
        line.slope_sigma * sigma_scale / (line.slope * line.slope);
    fit.amplitude = std::exp(line.intercept);
    fit.reduced_chi2 = line.reduced_chi2;
    fit.window_ps = {delays.front(), delays.back()};
    fit.points_used = line.n;
    return fit;
}

double analytic_g2_zero(double signal_rate, double background_rate) {
    if (signal_rate < 0.0 || background_rate < 0.0)
        throw PhysicsError("rates must be >= 0");
    if (signal_rate == 0.0 && background_rate == 0.0)
        throw BothZero("analytic g2 undefined for zero total rate");
    const double rho = signal_rate / (signal_rate + background_rate);
    return 1.0 - rho * rho;
}

double predicted_converted_fwhm(double tau_mod_ps, double jitter_fwhm_ps,
                                bool saturated) {
    if (tau_mod_ps < 0.0 || jitter_fwhm_ps < 0.0)
        throw PhysicsError("widths must be >= 0");
    const double base = saturated ? tau_mod_ps * std::sqrt(2.0) : tau_mod_ps;
    return std::hypot(base, jitter_fwhm_ps);
}

}  // namespace upconv
