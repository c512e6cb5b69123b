#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "upconv/errors.hpp"
#include "upconv/rng.hpp"

namespace upconv {

// All times are in picoseconds throughout the library.

// A profile is either a probability density of a detection time (unit
// integral after normalization) or an optical power envelope (unit peak,
// scaled by the caller).
enum class Semantics { Density, Power };

// One-sided exponential: exp(-(t - onset)/lifetime) for t >= onset, 0 before.
struct ExponentialDecay {
    double onset_ps = 0.0;
    double lifetime_ps = 1500.0;
};

// Unit-peak Gaussian parameterized by full width at half maximum.
struct Gaussian {
    double center_ps = 0.0;
    double fwhm_ps = 260.0;
};

// Gated pulse with error-function edges: a rectangle of width fwhm convolved
// with a Gaussian of width edge_fwhm, rescaled to unit peak.
struct FlatTop {
    double center_ps = 0.0;
    double fwhm_ps = 1000.0;
    double edge_fwhm_ps = 100.0;
};

struct Constant {
    double level = 1.0;
};

// Exponential decay convolved with a Gaussian of standard deviation sigma.
// Shape value is lifetime * emg_pdf(t) so that the sigma -> 0 limit recovers
// the unit-peak ExponentialDecay.
struct ExGaussian {
    double onset_ps = 0.0;
    double lifetime_ps = 1500.0;
    double sigma_ps = 100.0;
};

// Values on a uniform grid, linearly interpolated inside, zero outside.
struct Sampled {
    double start_ps = 0.0;
    double step_ps = 1.0;
    std::vector<double> values;
};

using ProfileShape =
    std::variant<ExponentialDecay, Gaussian, FlatTop, Constant, ExGaussian, Sampled>;

class TemporalProfile {
  public:
    TemporalProfile(ProfileShape shape, Semantics semantics, double amplitude = 1.0);

    // Factories. Density semantics yields a unit-integral profile; Power
    // semantics yields a unit-peak envelope.
    static TemporalProfile exponential_decay(double onset_ps, double lifetime_ps,
                                             Semantics sem = Semantics::Density);
    static TemporalProfile gaussian(double center_ps, double fwhm_ps,
                                    Semantics sem = Semantics::Density);
    static TemporalProfile flat_top(double center_ps, double fwhm_ps,
                                    double edge_fwhm_ps = 100.0,
                                    Semantics sem = Semantics::Density);
    static TemporalProfile constant(double level);  // always Power
    static TemporalProfile ex_gaussian(double onset_ps, double lifetime_ps,
                                       double sigma_ps,
                                       Semantics sem = Semantics::Density);
    static TemporalProfile sampled(double start_ps, double step_ps,
                                   std::vector<double> values,
                                   Semantics sem = Semantics::Density);

    double eval(double t_ps) const;

    // Integral over all time. Closed form for analytic variants, trapezoidal
    // for Sampled. Infinite for a nonzero Constant.
    double mass() const;

    // Returns a rescaled copy with unit integral and Density semantics.
    // Throws ZeroMass when the integral is zero or not finite.
    TemporalProfile normalized() const;

    // Full width at half maximum. Analytic for Gaussian (the fwhm field) and
    // ExponentialDecay (lifetime * ln 2, the one-sided width at half of the
    // onset value); bisection against the evaluated curve otherwise.
    // Throws Multimodal when there is no single peak.
    double fwhm() const;

    // Convolution with a unit-mass Gaussian kernel of the given FWHM.
    // Closed form for Gaussian, ExponentialDecay, ExGaussian, FlatTop and
    // Constant; exact piecewise-linear convolution for Sampled, on a grid
    // extended by five kernel sigmas. kernel_fwhm = 0 returns the profile
    // unchanged. Mass is conserved.
    TemporalProfile convolve_gaussian(double kernel_fwhm_ps) const;

    // Draws a time distributed as this density. Inverse CDF for the analytic
    // variants, table inversion for Sampled. Requires Density semantics.
    double sample_time(RandomStream& rng) const;

    // Cumulative distribution of the mass-normalized profile.
    double cdf(double t_ps) const;

    // Interval outside which the profile is negligible (absolute zero for
    // compactly supported variants). Used to build quadrature grids.
    std::pair<double, double> support() const;

    // Renders any variant onto a uniform grid as a Sampled profile.
    TemporalProfile to_sampled(double step_ps = 1.0) const;

    Semantics semantics() const { return semantics_; }
    double amplitude() const { return amplitude_; }
    const ProfileShape& shape() const { return shape_; }
    bool is_sampled() const { return std::holds_alternative<Sampled>(shape_); }

    // Two-column CSV (time_ps,value) with a header line; Sampled only.
    void write_csv(std::ostream& os) const;
    static TemporalProfile read_csv(std::istream& is,
                                    Semantics sem = Semantics::Density);

  private:
    ProfileShape shape_;
    Semantics semantics_;
    double amplitude_;
    std::vector<double> sampled_cdf_;  // cumulative trapezoid, Sampled only

    void build_sampled_cdf();
};

// Density of the exponentially modified Gaussian with unit mass; numerically
// stable over the full range via the scaled complementary error function.
double exgaussian_pdf(double t, double onset, double lifetime, double sigma);
double exgaussian_cdf(double t, double onset, double lifetime, double sigma);

// exp(x^2) * erfc(x), computed without overflow for x >= 0.
double erfcx(double x);

}  // namespace upconv
