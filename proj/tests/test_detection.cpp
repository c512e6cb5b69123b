#include <cmath>

#include "doctest.h"
#include "test_helpers.hpp"
#include "upconv/analysis.hpp"
#include "upconv/detection.hpp"
#include "upconv/profile.hpp"

using namespace upconv;
using upconv::test::chi2_against;
using upconv::test::chi2_upper;
using upconv::test::poisson_stream;

TEST_CASE("ideal detector is the identity") {
    RandomStream rng(1);
    auto stream = poisson_stream(1e-5, 1e9, rng);
    DetectorModel ideal;
    auto out = detect(stream, ideal, rng);
    REQUIRE(out.size() == stream.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        CHECK(out.tags[i].time_ps == stream.tags[i].time_ps);
}

TEST_CASE("efficiency thins binomially and never adds counts") {
    RandomStream rng(2);
    auto stream = poisson_stream(1e-5, 1e10, rng);
    DetectorModel d;
    d.efficiency = 0.37;
    auto out = detect(stream, d, rng);
    CHECK(out.size() <= stream.size());
    const double n = static_cast<double>(stream.size());
    const double sigma = std::sqrt(n * 0.37 * 0.63);
    CHECK(std::abs(static_cast<double>(out.size()) - 0.37 * n) < 4.0 * sigma);
    // ordering preserved
    for (std::size_t i = 1; i < out.size(); ++i)
        CHECK(out.tags[i - 1].time_ps <= out.tags[i].time_ps);
}

TEST_CASE("jitter broadens a delta line to the detector response") {
    RandomStream rng(3);
    TimeTagStream stream;
    stream.duration_ps = 1e9;
    for (int i = 0; i < 200000; ++i)
        stream.tags.push_back({5.0e8 + 10000.0, 0});  // mid-window phase
    DetectorModel d;
    d.jitter_fwhm_ps = 350.0;
    auto out = detect(stream, d, rng);
    auto hist = tcspc_histogram(out, 20000.0, 16.0, 0.0);
    auto est = estimate_fwhm(hist);
    CHECK(std::abs(est.fwhm_ps - 350.0) < 10.0);
}

TEST_CASE("dark counts accumulate at the configured rate") {
    RandomStream rng(4);
    TimeTagStream empty;
    empty.duration_ps = 1e12;  // 1 s
    DetectorModel d;
    d.dark_rate_per_s = 1000.0;
    auto out = detect(empty, d, rng);
    CHECK(std::abs(static_cast<double>(out.size()) - 1000.0) <
          3.0 * std::sqrt(1000.0));
}

TEST_CASE("dead time drops close followers") {
    RandomStream rng(5);
    TimeTagStream stream;
    stream.duration_ps = 1000.0;
    stream.tags = {{100.0, 0}, {101.0, 0}, {150.0, 0}, {400.0, 0}};
    DetectorModel d;
    d.dead_time_ps = 60.0;
    auto out = detect(stream, d, rng);
    REQUIRE(out.size() == 2);
    CHECK(out.tags[0].time_ps == 100.0);
    CHECK(out.tags[1].time_ps == 400.0);
}

TEST_CASE("tcspc histogram") {
    SUBCASE("uniform tags fold flat") {
        RandomStream rng(6);
        auto stream = poisson_stream(2e-5, 1e10, rng);
        auto hist = tcspc_histogram(stream, 20000.0, 250.0, 0.0);
        CHECK(hist.total() == stream.size());
        const double per_bin = static_cast<double>(stream.size()) /
                               static_cast<double>(hist.counts.size());
        std::vector<double> obs, exp;
        for (auto c : hist.counts) {
            obs.push_back(static_cast<double>(c));
            exp.push_back(per_bin);
        }
        const auto c2 = chi2_against(obs, exp);
        CHECK(c2.chi2 / c2.dof < chi2_upper(c2.dof));
    }

    SUBCASE("exGaussian stream reproduces the closed form") {
        RandomStream rng(7);
        auto profile = TemporalProfile::ex_gaussian(2000.0, 1500.0, 148.6);
        TimeTagStream stream;
        stream.duration_ps = 1e12;
        const int n = 400000;
        for (int i = 0; i < n; ++i) {
            double t = profile.sample_time(rng);
            if (t >= 0.0 && t < stream.duration_ps) stream.tags.push_back({t, 0});
        }
        stream.sort();
        auto hist = tcspc_histogram(stream, 20000.0, 16.0, 0.0);
        std::vector<double> obs, exp;
        for (std::size_t i = 0; i < hist.counts.size(); ++i) {
            const double lo = static_cast<double>(i) * 16.0;
            const double p = profile.cdf(lo + 16.0) - profile.cdf(lo);
            obs.push_back(static_cast<double>(hist.counts[i]));
            exp.push_back(p * n);
        }
        const auto c2 = chi2_against(obs, exp);
        CHECK(c2.chi2 / c2.dof < chi2_upper(c2.dof));
        CHECK(c2.chi2 / c2.dof > 0.5);
    }

    SUBCASE("phase offset shifts the fold") {
        TimeTagStream stream;
        stream.duration_ps = 100000.0;
        stream.tags = {{0.0, 0}, {20000.0, 0}, {40000.0, 0}};
        auto hist = tcspc_histogram(stream, 20000.0, 100.0, 5000.0);
        CHECK(hist.counts[50] == 3);
    }

    SUBCASE("boundary tags are kept") {
        TimeTagStream stream;
        stream.duration_ps = 40000.0;
        stream.tags = {{0.0, 0}, {19999.999, 0}, {39999.0, 0}};
        auto hist = tcspc_histogram(stream, 20000.0, 300.0, 0.0);
        CHECK(hist.total() == 3);
    }

    SUBCASE("bin wider than the sync period is rejected") {
        TimeTagStream stream;
        stream.duration_ps = 1000.0;
        CHECK_THROWS_AS(tcspc_histogram(stream, 100.0, 200.0, 0.0), BinTooLarge);
    }
}

TEST_CASE("hbt split conserves counts and balances arms") {
    RandomStream rng(8);
    auto stream = poisson_stream(1e-5, 1e10, rng);
    auto [a, b] = hbt_split(stream, rng);
    CHECK(a.size() + b.size() == stream.size());
    const double n = static_cast<double>(stream.size());
    CHECK(std::abs(static_cast<double>(a.size()) - 0.5 * n) <
          3.0 * std::sqrt(n * 0.25));

    // a single photon cannot coincide with itself
    TimeTagStream one;
    one.duration_ps = 1000.0;
    one.tags = {{500.0, 0}};
    auto [oa, ob] = hbt_split(one, rng);
    CHECK(oa.size() + ob.size() == 1);
    CorrelationOptions opts;
    opts.max_delay_ps = 400.0;
    opts.bin_width_ps = 10.0;
    opts.peak_period_ps = 100.0;
    opts.peak_halfwidth_ps = 50.0;
    opts.background_exclusion_ps = 20.0;
    auto raw = correlate_accumulate(oa, ob, opts);
    CHECK(raw.histogram.total() == 0);
}

TEST_CASE("independent Poisson streams correlate flat at g2 = 1") {
    RandomStream rng(9);
    const double rate = 5e-5;  // 50 MHz-ish in /ps
    const double duration = 4e9;
    auto a = poisson_stream(rate, duration, rng, 0);
    auto b = poisson_stream(rate, duration, rng, 1);
    CorrelationOptions opts;
    opts.max_delay_ps = 100000.0;
    opts.bin_width_ps = 256.0;
    opts.peak_period_ps = 20000.0;
    opts.peak_halfwidth_ps = 10000.0;
    auto result = correlate(a, b, opts);
    CHECK(std::abs(result.g2_zero - 1.0) < 4.0 * result.g2_zero_sigma);

    // flat background: per-bin level matches rate_a * rate_b * T * bin
    const double expected_per_bin = rate * rate * duration * 256.0;
    CHECK(result.background_per_bin ==
          doctest::Approx(expected_per_bin).epsilon(0.1));
}

TEST_CASE("windowed pair attribution sums exactly to the full correlation") {
    RandomStream rng(10);
    const double duration = 1e9;
    auto a = poisson_stream(2e-4, duration, rng, 0);
    auto b = poisson_stream(2e-4, duration, rng, 1);
    CorrelationOptions opts;
    opts.max_delay_ps = 100000.0;
    opts.bin_width_ps = 256.0;
    opts.peak_period_ps = 20000.0;
    opts.peak_halfwidth_ps = 10000.0;

    auto full = correlate_accumulate(a, b, opts);

    std::vector<CorrelationResult> parts;
    const int n_windows = 4;
    for (int w = 0; w < n_windows; ++w) {
        CorrelationOptions part = opts;
        part.pair_window = {{duration * w / n_windows, duration * (w + 1) / n_windows}};
        parts.push_back(correlate_accumulate(a, b, part));
    }
    auto merged = merge_correlations(parts, opts);
    full.finalize(opts);

    REQUIRE(merged.histogram.counts.size() == full.histogram.counts.size());
    for (std::size_t i = 0; i < full.histogram.counts.size(); ++i)
        CHECK(merged.histogram.counts[i] == full.histogram.counts[i]);
    CHECK(merged.peak_areas == full.peak_areas);
    CHECK(merged.background_count == full.background_count);
    CHECK(merged.g2_zero == doctest::Approx(full.g2_zero).epsilon(1e-12));
}

TEST_CASE("correlation error paths") {
    CorrelationOptions opts;
    opts.max_delay_ps = 5000.0;  // shorter than one period: no side peaks
    opts.bin_width_ps = 100.0;
    opts.peak_period_ps = 20000.0;
    opts.peak_halfwidth_ps = 1000.0;
    opts.background_exclusion_ps = 500.0;
    RandomStream rng(11);
    auto a = poisson_stream(1e-4, 1e8, rng, 0);
    auto b = poisson_stream(1e-4, 1e8, rng, 1);
    CHECK_THROWS_AS(correlate(a, b, opts), NoSidePeaks);

    CorrelationOptions bad = opts;
    bad.peak_halfwidth_ps = 50000.0;
    CHECK_THROWS_AS(correlate(a, b, bad), ConfigError);

    // merging different layouts must fail
    CorrelationOptions o1;
    o1.max_delay_ps = 100000.0;
    o1.bin_width_ps = 256.0;
    o1.peak_period_ps = 20000.0;
    CorrelationOptions o2 = o1;
    o2.bin_width_ps = 128.0;
    auto r1 = correlate_accumulate(a, b, o1);
    auto r2 = correlate_accumulate(a, b, o2);
    CHECK_THROWS_AS(merge_correlations({r1, r2}, o1), ConfigMismatch);
}

TEST_CASE("stream validation") {
    TimeTagStream s;
    s.duration_ps = 100.0;
    s.tags = {{50.0, 0}, {20.0, 0}};
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.sort();
    CHECK_NOTHROW(s.validate());
    s.tags.push_back({200.0, 0});
    CHECK_THROWS_AS(s.validate(), ConfigError);

    DetectorModel d;
    d.efficiency = 1.5;
    CHECK_THROWS_AS(d.validate(), ConfigError);
}
