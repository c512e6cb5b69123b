#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "test_helpers.hpp"
#include "upconv/engine.hpp"

using namespace upconv;

namespace {

ScenarioConfig small_pulsed(double seconds = 2.0) {
    ScenarioConfig cfg;
    cfg.name = "test_pulsed";
    cfg.timing.pulse_fwhm_ps = 260.0;
    cfg.timing.auto_delay = true;
    cfg.timing.sim_duration_ps = seconds * 1e12;
    cfg.conversion.raman_coeff_per_s_per_mw = 133.272;
    cfg.detectors = {DetectorModel{1.0, 50.0, 0.0, 0.0}};
    cfg.analysis.mode = AnalysisMode::Profile;
    cfg.run.seed = 777;
    cfg.run.shards = 1;
    return cfg;
}

ScenarioConfig small_cw(double seconds = 2.0) {
    ScenarioConfig cfg;
    cfg.name = "test_cw";
    cfg.timing.pulse_fwhm_ps.reset();
    cfg.timing.sim_duration_ps = seconds * 1e12;
    cfg.conversion.raman_coeff_per_s_per_mw = 133.272;
    cfg.detectors = {DetectorModel{1.0, 350.0, 0.0, 0.0}};
    cfg.analysis.mode = AnalysisMode::Profile;
    cfg.run.seed = 778;
    cfg.run.shards = 1;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("config JSON round trip") {
    auto cfg = small_pulsed();
    cfg.detectors.push_back(DetectorModel{0.6, 350.0, 100.0, 50.0});
    cfg.analysis.lifetime_window_ps = {{6500.0, 12500.0}};
    cfg.sweep_delay_ps = {0.0, 500.0};
    const auto j = cfg.to_json();
    auto back = ScenarioConfig::from_json(j);
    CHECK(back.to_json() == j);

    // unsupported schema version is rejected
    auto bad = j;
    bad["schema_version"] = 99;
    CHECK_THROWS_AS(ScenarioConfig::from_json(bad), ConfigError);
}

TEST_CASE("CW run reports the exact plateau efficiency") {
    auto cfg = small_cw();
    auto s = run_scenario(cfg);
    CHECK(s.net_eff_quadrature == 0.75);
    const double sigma = s.mc_efficiency_gated_sigma();
    CHECK(std::abs(s.mc_efficiency_gated() - 0.75) < 3.0 * sigma);
    CHECK(s.triggers == 100000000);
    CHECK(s.tcspc.has_value());
    CHECK(s.tcspc->total() == s.detected_count);
}

TEST_CASE("pulsed run matches the quadrature on both trigger classes") {
    auto cfg = small_pulsed(4.0);
    auto s = run_scenario(cfg);
    CHECK(std::abs(s.mc_efficiency_gated() - s.net_eff_quadrature) <
          3.0 * s.mc_efficiency_gated_sigma());
    CHECK(std::abs(s.mc_efficiency_ungated() - s.off_window_eff_quadrature) <
          3.0 * s.mc_efficiency_ungated_sigma());
    CHECK(s.delay_used_ps == doctest::Approx(237.46).epsilon(0.02));
    REQUIRE(s.fwhm.has_value());
    CHECK(s.fwhm->fwhm_ps > 300.0);
    CHECK(s.fwhm->fwhm_ps < 430.0);
}

TEST_CASE("determinism: identical config and seed give identical outputs") {
    namespace fs = std::filesystem;
    auto cfg = small_pulsed(0.5);
    cfg.run.shards = 2;
    const auto dir1 = fs::temp_directory_path() / "upconv_det1";
    const auto dir2 = fs::temp_directory_path() / "upconv_det2";
    fs::remove_all(dir1);
    fs::remove_all(dir2);

    auto s1 = run_scenario(cfg);
    auto s2 = run_scenario(cfg);
    CHECK(s1.to_json() == s2.to_json());

    write_outputs(s1, dir1.string());
    write_outputs(s2, dir2.string());
    for (const char* name : {"summary.json", "histogram_tcspc.csv"}) {
        const auto a = slurp((dir1 / name).string());
        const auto b = slurp((dir2 / name).string());
        REQUIRE(!a.empty());
        CHECK(a == b);
    }

    // a different seed changes the data
    cfg.run.seed += 1;
    auto s3 = run_scenario(cfg);
    CHECK(s1.to_json() != s3.to_json());
}

TEST_CASE("merge_shards") {
    auto cfg = small_pulsed(1.0);

    SUBCASE("single summary is the identity") {
        auto s = run_shard(cfg, 0);
        auto m = merge_shards({s});
        CHECK(m.triggers == s.triggers);
        CHECK(m.detected_count == s.detected_count);
        REQUIRE(m.tcspc.has_value());
        CHECK(m.tcspc->counts == s.tcspc->counts);
    }

    SUBCASE("histograms add binwise") {
        cfg.run.shards = 2;
        auto a = run_shard(cfg, 0);
        auto b = run_shard(cfg, 1);
        auto m = merge_shards({a, b});
        CHECK(m.triggers == a.triggers + b.triggers);
        for (std::size_t i = 0; i < m.tcspc->counts.size(); ++i)
            CHECK(m.tcspc->counts[i] == a.tcspc->counts[i] + b.tcspc->counts[i]);
    }

    SUBCASE("mismatched configs are rejected") {
        auto a = run_shard(cfg, 0);
        auto cfg2 = cfg;
        cfg2.analysis.tcspc_bin_ps = 32.0;
        auto b = run_shard(cfg2, 1);
        CHECK_THROWS_AS(merge_shards({a, b}), ConfigMismatch);
    }
}

TEST_CASE("shard count changes the stream, not the distribution") {
    auto cfg = small_pulsed(4.0);
    cfg.run.seed = 4242;
    cfg.run.shards = 1;
    auto one = run_scenario(cfg);
    cfg.run.shards = 4;
    auto four = run_scenario(cfg);

    CHECK(four.triggers == one.triggers);

    // two-sample chi^2 over the TCSPC histograms
    const auto& ha = one.tcspc->counts;
    const auto& hb = four.tcspc->counts;
    REQUIRE(ha.size() == hb.size());
    const double na = static_cast<double>(one.tcspc->total());
    const double nb = static_cast<double>(four.tcspc->total());
    double chi2 = 0.0;
    int dof = 0;
    double oa = 0.0, ob = 0.0;
    for (std::size_t i = 0; i < ha.size(); ++i) {
        oa += static_cast<double>(ha[i]);
        ob += static_cast<double>(hb[i]);
        if (oa + ob >= 40.0) {
            const double d = oa / na - ob / nb;
            const double var = (oa + ob) / (na * nb);
            chi2 += d * d / var;
            dof += 1;
            oa = ob = 0.0;
        }
    }
    dof = std::max(dof - 1, 1);
    CHECK(chi2 / dof < upconv::test::chi2_upper(dof));

    // statistics stay within their tolerances
    CHECK(std::abs(four.mc_efficiency_gated() - four.net_eff_quadrature) <
          3.0 * four.mc_efficiency_gated_sigma());
    CHECK(std::abs(four.fwhm->fwhm_ps - one.fwhm->fwhm_ps) < 30.0);
}

TEST_CASE("zero collection leaves only background counts") {
    auto cfg = small_pulsed(0.2);
    cfg.source.collection_efficiency = 0.0;
    cfg.detectors[0].dark_rate_per_s = 2000.0;
    auto s = run_scenario(cfg);
    CHECK(s.collected_gated == 0);
    CHECK(s.converted_gated == 0);
    // everything detected is Raman background or dark counts
    CHECK(s.detected_count >= s.raman_count);
    CHECK(s.detected_count > 0);
    // flat histogram: the fwhm analysis reports no peak instead of a width
    CHECK(!s.fwhm.has_value());
    CHECK(!s.notes.empty());
}

TEST_CASE("g2 mode produces a normalized correlation") {
    auto cfg = small_cw(8.0);
    cfg.analysis.mode = AnalysisMode::G2;
    cfg.run.shards = 2;
    auto s = run_scenario(cfg);
    REQUIRE(s.correlation.has_value());
    const auto& c = *s.correlation;
    // calibrated CW mixture: rho = 0.768
    CHECK(std::abs(c.g2_zero - 0.410176) < 4.0 * c.g2_zero_sigma);
    CHECK(c.background_per_bin > 3.0 * c.background_per_bin_sigma);
    CHECK(!c.satellite_ratio.has_value());  // CW has no extinction satellites
}

TEST_CASE("sweeps") {
    SUBCASE("empty value list is a no-op") {
        auto cfg = small_pulsed(0.2);
        auto r = sweep(cfg, SweepParameter::TauMod, {});
        CHECK(r.runs.empty());
    }

    SUBCASE("width sweep is monotone in the quadrature") {
        auto cfg = small_pulsed(0.5);
        const std::vector<double> taus{260.0, 1250.0, 5000.0};
        auto r = sweep(cfg, SweepParameter::TauMod, taus);
        REQUIRE(r.runs.size() == 3);
        CHECK(r.runs[0].net_eff_quadrature < r.runs[1].net_eff_quadrature);
        CHECK(r.runs[1].net_eff_quadrature < r.runs[2].net_eff_quadrature);
        for (const auto& run : r.runs)
            CHECK(std::abs(run.mc_efficiency_gated() - run.net_eff_quadrature) <
                  3.0 * run.mc_efficiency_gated_sigma());
        // derived seeds differ across points
        CHECK(r.runs[0].config.run.seed != r.runs[1].config.run.seed);
    }

    SUBCASE("qpm violation surfaces per point") {
        auto cfg = small_pulsed(0.2);
        const std::vector<double> taus{5.0};
        CHECK_THROWS_AS(sweep(cfg, SweepParameter::TauMod, taus), QpmViolation);
    }

    SUBCASE("delay sweep recovers the lifetime from peak heights") {
        auto cfg = small_pulsed(1.5);
        const std::vector<double> delays{0.0,    500.0,  1000.0, 1500.0,
                                         2000.0, 2500.0, 3000.0, 3350.0};
        auto r = sweep(cfg, SweepParameter::DeltaT, delays);
        REQUIRE(r.delay_fit.has_value());
        CHECK(std::abs(r.delay_fit->lifetime_ps - 1500.0) < 0.06 * 1500.0);
    }
}

TEST_CASE("seed and shard overrides reach the outputs") {
    auto cfg = small_pulsed(0.2);
    cfg.run.seed = 9999;
    auto s = run_scenario(cfg);
    const auto j = s.to_json();
    CHECK(j.at("seed").get<std::uint64_t>() == 9999);
    CHECK(j.at("scenario").get<std::string>() == "test_pulsed");
    // wall-clock stays out of the serialized summary
    CHECK(j.dump().find("wall") == std::string::npos);
}
