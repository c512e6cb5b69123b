#include "upconv/detection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace upconv {

namespace {
constexpr double kFwhmToSigma = 0.42466090014400953;
}

void TimeTagStream::sort() {
    std::sort(tags.begin(), tags.end());
}

void TimeTagStream::validate() const {
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& tag : tags) {
        if (!(tag.time_ps >= 0.0) || tag.time_ps > duration_ps)
            throw ConfigError("time tag outside [0, duration]");
        if (tag.time_ps < prev) throw ConfigError("time tags not sorted");
        prev = tag.time_ps;
    }
}

void DetectorModel::validate() const {
    if (!(efficiency >= 0.0) || efficiency > 1.0)
        throw ConfigError("detector efficiency must lie in [0, 1]");
    if (jitter_fwhm_ps < 0.0) throw ConfigError("jitter must be >= 0");
    if (dark_rate_per_s < 0.0) throw ConfigError("dark rate must be >= 0");
    if (dead_time_ps < 0.0) throw ConfigError("dead time must be >= 0");
}

TimeTagStream detect(const TimeTagStream& stream, const DetectorModel& d,
                     RandomStream& rng) {
    d.validate();
    TimeTagStream out;
    out.duration_ps = stream.duration_ps;
    out.tags.reserve(stream.tags.size());

    const double sigma = d.jitter_fwhm_ps * kFwhmToSigma;
    for (const auto& tag : stream.tags) {
        if (d.efficiency < 1.0 && !rng.bernoulli(d.efficiency)) continue;
        double t = tag.time_ps;
        if (sigma > 0.0) t += sigma * rng.normal();
        t = std::clamp(t, 0.0, stream.duration_ps);
        out.tags.push_back({t, tag.channel});
    }

    if (d.dark_rate_per_s > 0.0 && stream.duration_ps > 0.0) {
        const int channel = stream.tags.empty() ? 0 : stream.tags.front().channel;
        const double mean_gap = 1e12 / d.dark_rate_per_s;  // ps between darks
        for (double t = rng.exponential(mean_gap); t < stream.duration_ps;
             t += rng.exponential(mean_gap))
            out.tags.push_back({t, channel});
    }

    out.sort();

    if (d.dead_time_ps > 0.0 && !out.tags.empty()) {
        std::vector<TimeTag> kept;
        kept.reserve(out.tags.size());
        double last = -std::numeric_limits<double>::infinity();
        for (const auto& tag : out.tags) {
            if (tag.time_ps - last < d.dead_time_ps) continue;
            kept.push_back(tag);
            last = tag.time_ps;
        }
        out.tags = std::move(kept);
    }
    return out;
}

std::uint64_t Histogram::total() const {
    std::uint64_t n = 0;
    for (auto c : counts) n += c;
    return n;
}

void Histogram::write_csv(std::ostream& os) const {
    os << "bin_center_ps,counts\n";
    char buf[64];
    for (std::size_t i = 0; i < counts.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%llu\n", bin_center(i),
                      static_cast<unsigned long long>(counts[i]));
        os << buf;
    }
}

Histogram tcspc_histogram(const TimeTagStream& tags, double sync_period_ps,
                          double bin_width_ps, double phase_offset_ps) {
    if (!(sync_period_ps > 0.0)) throw ConfigError("sync period must be > 0");
    if (!(bin_width_ps > 0.0)) throw ConfigError("bin width must be > 0");
    if (bin_width_ps > sync_period_ps)
        throw BinTooLarge("histogram bin wider than the sync period");

    Histogram h;
    h.start_ps = 0.0;
    h.bin_width_ps = bin_width_ps;
    h.duration_ps = tags.duration_ps;
    const auto nbins =
        static_cast<std::size_t>(std::ceil(sync_period_ps / bin_width_ps));
    h.counts.assign(nbins, 0);
    for (const auto& tag : tags.tags) {
        double phase = std::fmod(tag.time_ps + phase_offset_ps, sync_period_ps);
        if (phase < 0.0) phase += sync_period_ps;
        auto idx = static_cast<std::size_t>(phase / bin_width_ps);
        if (idx >= nbins) idx = nbins - 1;
        ++h.counts[idx];
    }
    return h;
}

std::pair<TimeTagStream, TimeTagStream> hbt_split(const TimeTagStream& stream,
                                                  RandomStream& rng) {
    TimeTagStream a, b;
    a.duration_ps = b.duration_ps = stream.duration_ps;
    for (const auto& tag : stream.tags) {
        if (rng.bernoulli(0.5))
            a.tags.push_back({tag.time_ps, 0});
        else
            b.tags.push_back({tag.time_ps, 1});
    }
    return {std::move(a), std::move(b)};
}

namespace {

void validate_options(const CorrelationOptions& o) {
    if (!(o.max_delay_ps > 0.0)) throw ConfigError("max_delay must be > 0");
    if (!(o.bin_width_ps > 0.0) || o.bin_width_ps > 2.0 * o.max_delay_ps)
        throw ConfigError("correlation bin width out of range");
    if (!(o.peak_period_ps > 0.0)) throw ConfigError("peak period must be > 0");
    if (!(o.peak_halfwidth_ps > 0.0) ||
        o.peak_halfwidth_ps > 0.5 * o.peak_period_ps)
        throw ConfigError("peak halfwidth must lie in (0, period/2]");
    if (o.satellite_offset_ps) {
        const double off = *o.satellite_offset_ps;
        if (!(off > 0.0) || off >= o.peak_period_ps)
            throw ConfigError("satellite offset must lie in (0, period)");
    }
    if (o.background_exclusion_ps < 0.0 ||
        o.background_exclusion_ps > o.peak_halfwidth_ps)
        throw ConfigError("background exclusion must lie in [0, peak halfwidth]");
}

// Complete side-peak centers inside the correlation window.
std::vector<long long> main_centers(const CorrelationOptions& o, bool include_zero) {
    std::vector<long long> centers;
    for (long k = 1;; ++k) {
        const double c = static_cast<double>(k) * o.peak_period_ps;
        if (c + o.peak_halfwidth_ps > o.max_delay_ps + 1e-9) break;
        centers.push_back(static_cast<long long>(std::llround(c)));
        centers.push_back(-static_cast<long long>(std::llround(c)));
    }
    if (include_zero) centers.push_back(0);
    std::sort(centers.begin(), centers.end());
    return centers;
}

std::vector<long long> satellite_centers(const CorrelationOptions& o) {
    std::vector<long long> centers;
    if (!o.satellite_offset_ps) return centers;
    const double off = *o.satellite_offset_ps;
    for (long k = 0;; ++k) {
        bool any = false;
        for (double c : {static_cast<double>(k) * o.peak_period_ps + off,
                         -(static_cast<double>(k) * o.peak_period_ps + off),
                         static_cast<double>(k + 1) * o.peak_period_ps - off,
                         -(static_cast<double>(k + 1) * o.peak_period_ps - off)}) {
            if (std::abs(c) + o.peak_halfwidth_ps <= o.max_delay_ps + 1e-9) {
                centers.push_back(static_cast<long long>(std::llround(c)));
                any = true;
            }
        }
        if (!any) break;
    }
    std::sort(centers.begin(), centers.end());
    centers.erase(std::unique(centers.begin(), centers.end()), centers.end());
    return centers;
}

double background_span(const CorrelationOptions& o) {
    // Measure of {|delay| <= max_delay} farther than background_exclusion
    // from every main (and satellite) center, counted per period.
    const double period = o.peak_period_ps;
    const int clusters_per_period = o.satellite_offset_ps ? 2 : 1;
    const double excluded = 2.0 * o.background_exclusion_ps *
                            static_cast<double>(clusters_per_period);
    const double frac = std::max(0.0, 1.0 - excluded / period);
    return 2.0 * o.max_delay_ps * frac;
}

}  // namespace

void CorrelationResult::finalize(const CorrelationOptions& opts) {
    const auto sides = main_centers(opts, false);
    if (sides.empty())
        throw NoSidePeaks("correlation window too short for side peaks");
    zero_peak_count = 0;
    if (auto it = peak_areas.find(0); it != peak_areas.end())
        zero_peak_count = it->second;

    std::uint64_t side_sum = 0;
    for (long long c : sides) {
        if (auto it = peak_areas.find(c); it != peak_areas.end())
            side_sum += it->second;
    }
    if (side_sum == 0)
        throw NoSidePeaks("no coincidences in any side peak; cannot normalize");
    normalization_area =
        static_cast<double>(side_sum) / static_cast<double>(sides.size());

    const double n0 = static_cast<double>(zero_peak_count);
    g2_zero = n0 / normalization_area;
    g2_zero_sigma = g2_zero * std::sqrt(1.0 / std::max(n0, 1.0) +
                                        1.0 / static_cast<double>(side_sum));
    if (zero_peak_count == 0)
        g2_zero_sigma = 1.0 / normalization_area;

    const auto sats = satellite_centers(opts);
    if (!sats.empty()) {
        std::uint64_t sat_sum = 0;
        for (long long c : sats) {
            if (auto it = satellite_areas.find(c); it != satellite_areas.end())
                sat_sum += it->second;
        }
        const double mean_sat =
            static_cast<double>(sat_sum) / static_cast<double>(sats.size());
        const double ratio = mean_sat / normalization_area;
        satellite_ratio = ratio;
        satellite_ratio_sigma =
            ratio * std::sqrt(1.0 / std::max<double>(static_cast<double>(sat_sum), 1.0) +
                              1.0 / static_cast<double>(side_sum));
        if (sat_sum == 0) satellite_ratio_sigma = 1.0 / normalization_area;
    } else {
        satellite_ratio.reset();
        satellite_ratio_sigma.reset();
    }

    background_span_ps = background_span(opts);
    const double nbins_bg = background_span_ps / histogram.bin_width_ps;
    if (nbins_bg > 0.0) {
        background_per_bin = static_cast<double>(background_count) / nbins_bg;
        background_per_bin_sigma =
            std::sqrt(static_cast<double>(background_count)) / nbins_bg;
    }
}

CorrelationResult correlate_accumulate(const TimeTagStream& a,
                                       const TimeTagStream& b,
                                       const CorrelationOptions& opts) {
    validate_options(opts);
    CorrelationResult r;
    const double bw = opts.bin_width_ps;
    const auto m = static_cast<long>(opts.max_delay_ps / bw);
    r.histogram.bin_width_ps = bw;
    r.histogram.start_ps = -(static_cast<double>(m) + 0.5) * bw;
    r.histogram.counts.assign(static_cast<std::size_t>(2 * m + 1), 0);
    r.histogram.duration_ps = a.duration_ps;

    const double d_max = opts.max_delay_ps;
    const double period = opts.peak_period_ps;
    const double hw = opts.peak_halfwidth_ps;

    std::size_t j_lo = 0;
    for (const auto& ta : a.tags) {
        while (j_lo < b.tags.size() && b.tags[j_lo].time_ps < ta.time_ps - d_max)
            ++j_lo;
        for (std::size_t j = j_lo;
             j < b.tags.size() && b.tags[j].time_ps <= ta.time_ps + d_max; ++j) {
            if (opts.pair_window) {
                const double earlier = std::min(ta.time_ps, b.tags[j].time_ps);
                if (earlier < opts.pair_window->first ||
                    earlier >= opts.pair_window->second)
                    continue;
            }
            const double delay = b.tags[j].time_ps - ta.time_ps;

            const auto k = static_cast<long>(std::llround(delay / bw));
            if (std::labs(k) <= m)
                ++r.histogram.counts[static_cast<std::size_t>(k + m)];

            // Window classification: main peaks, satellites, background.
            const double c_main = std::round(delay / period) * period;
            const double d_main = std::abs(delay - c_main);
            double d_sat = std::numeric_limits<double>::infinity();
            double c_sat = 0.0;
            if (opts.satellite_offset_ps) {
                const double off = *opts.satellite_offset_ps;
                const double c1 = std::round((delay - off) / period) * period + off;
                const double c2 = std::round((delay + off) / period) * period - off;
                c_sat = std::abs(delay - c1) <= std::abs(delay - c2) ? c1 : c2;
                d_sat = std::abs(delay - c_sat);
            }
            if (d_main <= hw && d_main <= d_sat) {
                if (std::abs(c_main) + hw <= d_max + 1e-9)
                    ++r.peak_areas[static_cast<long long>(std::llround(c_main))];
            } else if (d_sat <= hw) {
                if (std::abs(c_sat) + hw <= d_max + 1e-9)
                    ++r.satellite_areas[static_cast<long long>(std::llround(c_sat))];
            }
            if (std::min(d_main, d_sat) > opts.background_exclusion_ps)
                ++r.background_count;
        }
    }
    return r;
}

CorrelationResult correlate(const TimeTagStream& a, const TimeTagStream& b,
                            const CorrelationOptions& opts) {
    CorrelationResult r = correlate_accumulate(a, b, opts);
    r.finalize(opts);
    return r;
}

CorrelationResult merge_correlations(const std::vector<CorrelationResult>& parts,
                                     const CorrelationOptions& opts) {
    if (parts.empty()) throw ConfigMismatch("no correlation shards to merge");
    CorrelationResult merged = parts.front();
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto& p = parts[i];
        if (p.histogram.counts.size() != merged.histogram.counts.size() ||
            p.histogram.bin_width_ps != merged.histogram.bin_width_ps ||
            p.histogram.start_ps != merged.histogram.start_ps)
            throw ConfigMismatch("correlation histograms have different layouts");
        for (std::size_t j = 0; j < p.histogram.counts.size(); ++j)
            merged.histogram.counts[j] += p.histogram.counts[j];
        merged.histogram.duration_ps += p.histogram.duration_ps;
        for (const auto& [c, n] : p.peak_areas) merged.peak_areas[c] += n;
        for (const auto& [c, n] : p.satellite_areas) merged.satellite_areas[c] += n;
        merged.background_count += p.background_count;
    }
    merged.finalize(opts);
    return merged;
}

}  // namespace upconv
