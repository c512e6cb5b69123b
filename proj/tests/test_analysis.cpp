#include <cmath>
#include <functional>
#include <numbers>

#include "doctest.h"
#include "upconv/analysis.hpp"
#include "upconv/profile.hpp"
#include "upconv/rng.hpp"

using namespace upconv;

namespace {

// Poisson-fluctuated histogram of a shape function over [0, span).
Histogram synth_histogram(double span, double bin,
                          const std::function<double(double)>& shape,
                          std::uint64_t seed = 0) {
    Histogram h;
    h.start_ps = 0.0;
    h.bin_width_ps = bin;
    h.counts.assign(static_cast<std::size_t>(span / bin), 0);
    RandomStream rng(seed + 1);
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const double mu = std::max(shape(h.bin_center(i)), 0.0);
        if (seed == 0) {
            h.counts[i] = static_cast<std::uint64_t>(std::llround(mu));
        } else {
            // Poisson via exponential gaps (fine for the muts used here)
            double acc = rng.exponential(1.0);
            std::uint64_t k = 0;
            while (acc < mu) {
                ++k;
                acc += rng.exponential(1.0);
            }
            h.counts[i] = k;
        }
    }
    return h;
}

double gaussian_shape(double t, double center, double fwhm, double peak) {
    const double x = (t - center) / fwhm;
    return peak * std::exp(-4.0 * std::numbers::ln2 * x * x);
}

}  // namespace

TEST_CASE("estimate_fwhm on synthetic peaks") {
    SUBCASE("clean Gaussian of 480 ps on 16 ps bins") {
        auto h = synth_histogram(20000.0, 16.0, [](double t) {
            return gaussian_shape(t, 8000.0, 480.0, 20000.0);
        });
        auto est = estimate_fwhm(h);
        CHECK(std::abs(est.fwhm_ps - 480.0) <= est.uncertainty_ps);
        CHECK(est.uncertainty_ps == 16.0);
    }

    SUBCASE("delta in one bin reports the bin width") {
        Histogram h;
        h.start_ps = 0.0;
        h.bin_width_ps = 16.0;
        h.counts.assign(1000, 0);
        h.counts[500] = 10000;
        auto est = estimate_fwhm(h);
        CHECK(est.fwhm_ps == doctest::Approx(16.0).epsilon(1e-9));
    }

    SUBCASE("flat background at 20% of peak is subtracted") {
        const double peak = 50000.0;
        auto h = synth_histogram(
            20000.0, 16.0,
            [&](double t) {
                return 0.2 * peak + gaussian_shape(t, 8000.0, 480.0, peak);
            },
            7);
        auto est = estimate_fwhm(h);
        CHECK(std::abs(est.fwhm_ps - 480.0) <= 2.0 * h.bin_width_ps);
        CHECK(est.background_per_bin == doctest::Approx(0.2 * peak).epsilon(0.02));
    }

    SUBCASE("bimodal histograms are rejected") {
        auto h = synth_histogram(20000.0, 16.0, [](double t) {
            return gaussian_shape(t, 6000.0, 480.0, 20000.0) +
                   gaussian_shape(t, 14000.0, 480.0, 18000.0);
        });
        CHECK_THROWS_AS(estimate_fwhm(h), Multimodal);
    }

    SUBCASE("flat histograms have no peak") {
        auto h = synth_histogram(20000.0, 16.0, [](double) { return 500.0; }, 3);
        CHECK_THROWS_AS(estimate_fwhm(h), NoPeak);
    }
}

TEST_CASE("fit_lifetime") {
    const double tau = 1500.0;

    SUBCASE("clean exponential with 1e6 counts recovers tau within 2%") {
        const double peak = 1e6 * 16.0 / tau;
        auto h = synth_histogram(
            20000.0, 16.0,
            [&](double t) {
                return t < 2000.0 ? 0.0 : peak * std::exp(-(t - 2000.0) / tau);
            },
            11);
        auto fit = fit_lifetime(h, 2500.0, 14000.0, {{0.0, 1800.0}});
        CHECK(std::abs(fit.lifetime_ps - tau) < 0.02 * tau);
        CHECK(fit.reduced_chi2 < 2.0);
    }

    SUBCASE("pure flat histogram has insufficient counts") {
        auto h = synth_histogram(20000.0, 16.0, [](double) { return 300.0; }, 5);
        CHECK_THROWS_AS(fit_lifetime(h, 2500.0, 14000.0, {{0.0, 1800.0}}),
                        InsufficientCounts);
    }

    SUBCASE("jitter does not bias the tail slope") {
        // exGaussian with 350 ps jitter, fitted beyond 3 sigma of the rise
        auto profile = TemporalProfile::ex_gaussian(2000.0, tau, 148.6);
        const double n = 2e6;
        auto h = synth_histogram(
            20000.0, 16.0,
            [&](double t) { return n * 16.0 * profile.eval(t); }, 13);
        auto fit = fit_lifetime(h, 2000.0 + 3.0 * 350.0, 14000.0, {{0.0, 1500.0}});
        CHECK(std::abs(fit.lifetime_ps - tau) < 0.03 * tau);
    }

    SUBCASE("uniform count scaling leaves tau unchanged") {
        auto shape = [&](double t) {
            return t < 2000.0 ? 0.0 : 5000.0 * std::exp(-(t - 2000.0) / tau);
        };
        auto h1 = synth_histogram(20000.0, 16.0, shape);
        auto h7 = h1;
        for (auto& c : h7.counts) c *= 7;
        auto f1 = fit_lifetime(h1, 2500.0, 12000.0, {{0.0, 1800.0}});
        auto f7 = fit_lifetime(h7, 2500.0, 12000.0, {{0.0, 1800.0}});
        CHECK(f1.lifetime_ps == doctest::Approx(f7.lifetime_ps).epsilon(1e-9));
    }

    SUBCASE("window outside the support is rejected") {
        auto h = synth_histogram(20000.0, 16.0, [](double) { return 100.0; });
        CHECK_THROWS_AS(fit_lifetime(h, -5.0, 50000.0), ConfigError);
    }
}

TEST_CASE("delay_sweep_peaks") {
    const double tau = 1500.0;
    auto make_hist = [&](double height) {
        return synth_histogram(
            20000.0, 16.0,
            [&](double t) { return gaussian_shape(t, 6000.0, 400.0, height); }, 17);
    };

    SUBCASE("peak heights recover the decay constant") {
        std::vector<std::pair<double, Histogram>> sweeps;
        for (double d : {0.0, 500.0, 1000.0, 1500.0, 2000.0, 2500.0, 3000.0, 3350.0})
            sweeps.emplace_back(d, make_hist(30000.0 * std::exp(-d / tau)));
        auto fit = delay_sweep_peaks(sweeps);
        CHECK(std::abs(fit.lifetime_ps - tau) < 0.02 * tau);
    }

    SUBCASE("scaling all heights leaves tau unchanged") {
        std::vector<std::pair<double, Histogram>> s1, s3;
        for (double d : {0.0, 800.0, 1600.0, 2400.0}) {
            s1.emplace_back(d, make_hist(20000.0 * std::exp(-d / tau)));
            s3.emplace_back(d, make_hist(3.0 * 20000.0 * std::exp(-d / tau)));
        }
        auto f1 = delay_sweep_peaks(s1);
        auto f3 = delay_sweep_peaks(s3);
        CHECK(f1.lifetime_ps == doctest::Approx(f3.lifetime_ps).epsilon(0.02));
    }

    SUBCASE("constant heights are flagged as non-decaying") {
        std::vector<std::pair<double, Histogram>> sweeps;
        for (double d : {0.0, 500.0, 1000.0, 1500.0})
            sweeps.emplace_back(d, make_hist(10000.0));
        CHECK_THROWS_AS(delay_sweep_peaks(sweeps), NonDecaying);
    }

    SUBCASE("fewer than four delays are rejected") {
        std::vector<std::pair<double, Histogram>> sweeps;
        sweeps.emplace_back(0.0, make_hist(1000.0));
        sweeps.emplace_back(500.0, make_hist(800.0));
        CHECK_THROWS_AS(delay_sweep_peaks(sweeps), InsufficientPoints);
    }
}

TEST_CASE("analytic g2 oracle") {
    CHECK(analytic_g2_zero(1000.0, 0.0) == 0.0);
    CHECK(analytic_g2_zero(0.0, 1000.0) == 1.0);
    const double rho = 0.768;
    CHECK(analytic_g2_zero(rho, 1.0 - rho) ==
          doctest::Approx(0.410176).epsilon(1e-9));
    CHECK_THROWS_AS(analytic_g2_zero(0.0, 0.0), BothZero);
    CHECK_THROWS_AS(analytic_g2_zero(-1.0, 1.0), PhysicsError);

    // monotone increasing in the background for fixed signal
    double prev = -1.0;
    for (double b = 0.0; b <= 5000.0; b += 250.0) {
        const double g2 = analytic_g2_zero(37500.0, b);
        CHECK(g2 >= prev);
        CHECK(g2 >= 0.0);
        CHECK(g2 <= 1.0);
        prev = g2;
    }
}

TEST_CASE("predicted converted width") {
    CHECK(predicted_converted_fwhm(260.0, 50.0, true) ==
          doctest::Approx(371.08).epsilon(1e-4));
    CHECK(predicted_converted_fwhm(260.0, 350.0, true) ==
          doctest::Approx(507.64).epsilon(1e-4));
    CHECK(predicted_converted_fwhm(777.0, 0.0, false) == 777.0);
    CHECK_THROWS_AS(predicted_converted_fwhm(-1.0, 0.0, true), PhysicsError);
}
