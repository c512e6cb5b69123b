#include <cmath>

#include "doctest.h"
#include "upconv/conversion.hpp"
#include "upconv/timing.hpp"

using namespace upconv;

TEST_CASE("timeline covers the run at the excitation period") {
    TimingConfig cfg;
    cfg.excitation_period_ps = 20000.0;
    cfg.sim_duration_ps = 100000.0;
    const auto triggers = build_timeline(cfg);
    REQUIRE(triggers.size() == 5);
    for (std::size_t k = 0; k < triggers.size(); ++k)
        CHECK(triggers[k] == doctest::Approx(20000.0 * static_cast<double>(k)));

    // shorter than one period still yields the first trigger
    cfg.sim_duration_ps = 5000.0;
    CHECK(build_timeline(cfg) == std::vector<double>{0.0});
}

TEST_CASE("gating at half the repetition rate") {
    // divider 2: gates on triggers 0, 2, 4 -> 0, 40, 80 ns
    std::vector<double> gated;
    for (std::int64_t k = 0; k < 5; ++k)
        if (pump_gated(k, 2)) gated.push_back(static_cast<double>(k) * 20000.0);
    CHECK(gated == std::vector<double>{0.0, 40000.0, 80000.0});

    // ungated triggers are exactly the odd multiples of the period
    for (std::int64_t k = 0; k < 100; ++k)
        CHECK(pump_gated(k, 2) == (k % 2 == 0));
}

TEST_CASE("pump power envelope") {
    auto shape = TemporalProfile::gaussian(0.0, 260.0, Semantics::Power);
    auto train = PumpPulseTrain::pulsed(shape, 40000.0, 85.0, 20.0, 0.0);

    CHECK(train.power_at(0.0) == doctest::Approx(85.0).epsilon(1e-12));
    CHECK(train.power_at(40000.0) == doctest::Approx(85.0).epsilon(1e-12));
    // midway between pulses only the extinction floor remains
    CHECK(train.power_at(20000.0) == doctest::Approx(0.85).epsilon(1e-12));
    CHECK(train.off_level_mw() == doctest::Approx(0.85).epsilon(1e-12));

    // periodic and bounded
    RandomStream rng(3);
    for (int i = 0; i < 3000; ++i) {
        const double t = rng.uniform(-100000.0, 100000.0);
        const double p = train.power_at(t);
        CHECK(p >= train.off_level_mw());
        CHECK(p <= 85.0 * (1.0 + 1e-12));
        CHECK(train.power_at(t + 40000.0) == doctest::Approx(p).epsilon(1e-9));
    }

    auto cw = PumpPulseTrain::cw_pump(85.0);
    CHECK(cw.power_at(-123456.0) == 85.0);
    CHECK(cw.power_at(7.0) == 85.0);
}

TEST_CASE("flat-top pump peaks at the configured power") {
    auto shape = TemporalProfile::flat_top(0.0, 5000.0, 100.0, Semantics::Power);
    auto train = PumpPulseTrain::pulsed(shape, 40000.0, 85.0, 20.0, 300.0);
    CHECK(train.power_at(300.0) == doctest::Approx(85.0).epsilon(1e-9));
    CHECK(train.power_at(300.0 + 2000.0) == doctest::Approx(85.0).epsilon(1e-6));
}

TEST_CASE("pump delay shifts the pulse center") {
    auto shape = TemporalProfile::gaussian(0.0, 260.0, Semantics::Power);
    auto train = PumpPulseTrain::pulsed(shape, 40000.0, 85.0, 20.0, 750.0);
    CHECK(train.power_at(750.0) == doctest::Approx(85.0).epsilon(1e-12));
    CHECK(train.power_at(750.0 + 130.0) == doctest::Approx(42.5).epsilon(1e-9));
}

TEST_CASE("photon emission latency is exponential with the source lifetime") {
    PhotonSource source;
    source.lifetime_ps = 1500.0;
    RandomStream rng(17);
    const int n = 1000000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
        sum += photon_emission_time(40000.0, source, rng) - 40000.0;
    CHECK(sum / n == doctest::Approx(1500.0).epsilon(5.0 / 1500.0));

    // vanishing lifetime collapses onto the trigger
    source.lifetime_ps = 1e-9;
    CHECK(photon_emission_time(40000.0, source, rng) ==
          doctest::Approx(40000.0).epsilon(1e-9));
}

TEST_CASE("timing validation") {
    TimingConfig cfg;
    cfg.excitation_period_ps = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TimingConfig{};
    cfg.pump_divider = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TimingConfig{};
    cfg.pulse_fwhm_ps = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    CHECK_THROWS_AS(PumpPulseTrain::pulsed(
                        TemporalProfile::gaussian(0.0, 260.0, Semantics::Power),
                        40000.0, 85.0, 0.0, 0.0),
                    ConfigError);
    CHECK_THROWS_AS(PumpPulseTrain::pulsed(TemporalProfile::constant(1.0), 40000.0,
                                           85.0, 20.0, 0.0),
                    ConfigError);
}
