#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "upconv/errors.hpp"
#include "upconv/rng.hpp"

namespace upconv {

struct TimeTag {
    double time_ps;
    int channel;
};

inline bool operator<(const TimeTag& a, const TimeTag& b) {
    return a.time_ps < b.time_ps || (a.time_ps == b.time_ps && a.channel < b.channel);
}
inline bool operator==(const TimeTag& a, const TimeTag& b) {
    return a.time_ps == b.time_ps && a.channel == b.channel;
}

// Time-ordered detection (or photon) events over [0, duration_ps].
struct TimeTagStream {
    std::vector<TimeTag> tags;
    double duration_ps = 0.0;

    void sort();
    void validate() const;  // throws ConfigError on unsorted/out-of-range tags
    std::size_t size() const { return tags.size(); }
};

struct DetectorModel {
    double efficiency = 1.0;
    double jitter_fwhm_ps = 0.0;
    double dark_rate_per_s = 0.0;
    double dead_time_ps = 0.0;

    void validate() const;
};

// Applies the detector response: Bernoulli thinning by efficiency, Gaussian
// timing jitter, Poisson dark counts over the stream duration, then dead time
// (tags closer than dead_time to the previous kept tag are dropped). Output
// times are clamped to [0, duration] and sorted.
TimeTagStream detect(const TimeTagStream& stream, const DetectorModel& d,
                     RandomStream& rng);

struct Histogram {
    double start_ps = 0.0;
    double bin_width_ps = 1.0;
    std::vector<std::uint64_t> counts;
    double duration_ps = 0.0;  // integration time represented by the data

    std::uint64_t total() const;
    double bin_center(std::size_t i) const {
        return start_ps + (static_cast<double>(i) + 0.5) * bin_width_ps;
    }
    void write_csv(std::ostream& os) const;  // bin_center_ps,counts
};

// Histogram of tag times folded modulo sync_period, as recorded by a photon
// counting board. phase_offset_ps shifts the fold so the signal does not sit
// on the wrap-around edge. The last bin may represent a partial interval when
// the period is not a multiple of the bin width.
Histogram tcspc_histogram(const TimeTagStream& tags, double sync_period_ps,
                          double bin_width_ps, double phase_offset_ps = 0.0);

// 50/50 beamsplitter: each tag routed to one of the two outputs.
std::pair<TimeTagStream, TimeTagStream> hbt_split(const TimeTagStream& stream,
                                                  RandomStream& rng);

struct CorrelationOptions {
    double max_delay_ps = 100000.0;
    double bin_width_ps = 256.0;
    // Expected coincidence-peak spacing (pump period for pulsed pumping, the
    // excitation period for CW). Peak areas integrate +- peak_halfwidth_ps
    // around each multiple of peak_period_ps.
    double peak_period_ps = 40000.0;
    double peak_halfwidth_ps = 10000.0;
    // When set, secondary peaks at multiples of peak_period +- this offset
    // (imperfect-extinction satellites) are integrated separately.
    std::optional<double> satellite_offset_ps;
    // Delays farther than this from any peak or satellite center count as
    // inter-peak background.
    double background_exclusion_ps = 5000.0;
    // When set, only pairs whose earlier tag falls in [first, second) are
    // counted. Lets disjoint windows of one stream pair be correlated
    // independently and summed exactly.
    std::optional<std::pair<double, double>> pair_window;
};

struct CorrelationResult {
    Histogram histogram;             // delays, bins centered on k * bin_width
    double normalization_area = 0.0; // mean side-peak area
    double g2_zero = 0.0;
    double g2_zero_sigma = 0.0;
    std::uint64_t zero_peak_count = 0;
    std::map<long long, std::uint64_t> peak_areas;       // center_ps -> count
    std::map<long long, std::uint64_t> satellite_areas;  // center_ps -> count
    std::optional<double> satellite_ratio;
    std::optional<double> satellite_ratio_sigma;
    std::uint64_t background_count = 0;
    double background_span_ps = 0.0;    // total delay measure of the region
    double background_per_bin = 0.0;
    double background_per_bin_sigma = 0.0;

    // Recompute the derived statistics after peak areas change (merging).
    void finalize(const CorrelationOptions& opts);
};

// Cross-correlation histogram of delays t_b - t_a within +-max_delay using a
// two-pointer sweep over the sorted streams. Normalization is the mean area
// of the complete side peaks; g2_zero is the zero-peak area divided by it,
// with Poisson uncertainty. Throws NoSidePeaks when no complete side peak
// fits in the window or all side peaks are empty.
CorrelationResult correlate(const TimeTagStream& a, const TimeTagStream& b,
                            const CorrelationOptions& opts);

// Raw accumulation without normalization; used for sharded correlation.
CorrelationResult correlate_accumulate(const TimeTagStream& a,
                                       const TimeTagStream& b,
                                       const CorrelationOptions& opts);

// Sums raw correlation accumulations (histograms and peak areas) and
// normalizes the result. Throws ConfigMismatch on incompatible layouts.
CorrelationResult merge_correlations(const std::vector<CorrelationResult>& parts,
                                     const CorrelationOptions& opts);

}  // namespace upconv
