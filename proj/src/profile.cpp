#include "upconv/profile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace upconv {

namespace {

constexpr double kFwhmToSigma = 0.42466090014400953;  // 1 / (2 sqrt(2 ln 2))
constexpr double kGaussMassPerFwhm = 1.0644670194312262;  // sqrt(pi/ln2)/2
constexpr double kLn2 = std::numbers::ln2;
constexpr double kInf = std::numeric_limits<double>::infinity();

double std_normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Antiderivative of the standard normal CDF scaled by sigma:
// H(x) = x * Phi(x/s) + s * phi(x/s), with H' = Phi(x/s).
double cdf_antiderivative(double x, double s) {
    if (s <= 0.0) return std::max(x, 0.0);
    return x * std_normal_cdf(x / s) + s * std_normal_pdf(x / s);
}

struct FlatTopGeom {
    double lo, hi, sigma, peak;
};

FlatTopGeom flat_top_geometry(const FlatTop& ft) {
    FlatTopGeom g;
    g.sigma = ft.edge_fwhm_ps * kFwhmToSigma;
    g.lo = ft.center_ps - 0.5 * ft.fwhm_ps;
    g.hi = ft.center_ps + 0.5 * ft.fwhm_ps;
    g.peak = g.sigma > 0.0
                 ? std::erf(ft.fwhm_ps / (2.0 * std::numbers::sqrt2 * g.sigma))
                 : 1.0;
    return g;
}

double flat_top_raw(const FlatTop& ft, double t) {
    const FlatTopGeom g = flat_top_geometry(ft);
    if (g.sigma <= 0.0) {
        if (t < g.lo || t > g.hi) return 0.0;
        if (t == g.lo || t == g.hi) return 0.5;
        return 1.0;
    }
    const double rt2s = std::numbers::sqrt2 * g.sigma;
    double r = 0.5 * (std::erf((t - g.lo) / rt2s) - std::erf((t - g.hi) / rt2s));
    return std::max(r, 0.0) / g.peak;
}

double sampled_interp(const Sampled& s, double t) {
    const double n = static_cast<double>(s.values.size());
    const double x = (t - s.start_ps) / s.step_ps;
    if (x < 0.0 || x > n - 1.0) return 0.0;
    const auto i = static_cast<std::size_t>(x);
    if (i + 1 >= s.values.size()) return s.values.back();
    const double frac = x - static_cast<double>(i);
    return s.values[i] + frac * (s.values[i + 1] - s.values[i]);
}

double sampled_mass_raw(const Sampled& s) {
    if (s.values.size() < 2) return 0.0;
    double sum = 0.5 * (s.values.front() + s.values.back());
    for (std::size_t i = 1; i + 1 < s.values.size(); ++i) sum += s.values[i];
    return sum * s.step_ps;
}

void validate_shape(const ProfileShape& shape) {
    std::visit(
        [](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ExponentialDecay>) {
                if (!(v.lifetime_ps > 0.0) || !std::isfinite(v.onset_ps))
                    throw ConfigError("ExponentialDecay requires lifetime > 0 and finite onset");
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                if (!(v.fwhm_ps > 0.0) || !std::isfinite(v.center_ps))
                    throw ConfigError("Gaussian requires fwhm > 0 and finite center");
            } else if constexpr (std::is_same_v<T, FlatTop>) {
                if (!(v.fwhm_ps > 0.0) || v.edge_fwhm_ps < 0.0)
                    throw ConfigError("FlatTop requires fwhm > 0 and edge_fwhm >= 0");
            } else if constexpr (std::is_same_v<T, Constant>) {
                if (!(v.level >= 0.0) || !std::isfinite(v.level))
                    throw ConfigError("Constant level must be finite and >= 0");
            } else if constexpr (std::is_same_v<T, ExGaussian>) {
                if (!(v.lifetime_ps > 0.0) || v.sigma_ps < 0.0)
                    throw ConfigError("ExGaussian requires lifetime > 0 and sigma >= 0");
            } else if constexpr (std::is_same_v<T, Sampled>) {
                if (!(v.step_ps > 0.0))
                    throw ConfigError("Sampled step must be > 0");
                if (v.values.size() < 2)
                    throw ConfigError("Sampled needs at least two grid values");
                for (double x : v.values)
                    if (!std::isfinite(x) || x < 0.0)
                        throw ConfigError("Sampled values must be finite and >= 0");
            }
        },
        shape);
}

}  // namespace

double erfcx(double x) {
    if (x <= 26.0) return std::exp(x * x) * std::erfc(x);
    // Asymptotic series; relative error < 1e-14 for x > 26.
    const double ix2 = 1.0 / (x * x);
    double s = 1.0 + ix2 * (-0.5 + ix2 * (0.75 + ix2 * -1.875));
    return s / (x * std::sqrt(std::numbers::pi));
}

double exgaussian_pdf(double t, double onset, double lifetime, double sigma) {
    const double lam = 1.0 / lifetime;
    if (sigma <= 0.0) {
        if (t < onset) return 0.0;
        return lam * std::exp(-(t - onset) * lam);
    }
    const double d = t - onset;
    const double u = (lam * sigma * sigma - d) / (sigma * std::numbers::sqrt2);
    if (u >= 0.0) {
        return 0.5 * lam * erfcx(u) * std::exp(-0.5 * d * d / (sigma * sigma));
    }
    const double e = -lam * d + 0.5 * lam * lam * sigma * sigma;
    return 0.5 * lam * std::exp(e) * (2.0 - std::erfc(-u));
}

double exgaussian_cdf(double t, double onset, double lifetime, double sigma) {
    const double lam = 1.0 / lifetime;
    if (sigma <= 0.0) {
        if (t < onset) return 0.0;
        return 1.0 - std::exp(-(t - onset) * lam);
    }
    const double d = t - onset;
    const double v = d / sigma;
    const double u = (lam * sigma * sigma - d) / (sigma * std::numbers::sqrt2);
    double term;
    if (u >= 0.0) {
        term = 0.5 * erfcx(u) * std::exp(-0.5 * v * v);
    } else {
        const double e = -lam * d + 0.5 * lam * lam * sigma * sigma;
        term = 0.5 * std::exp(e) * std::erfc(u);
    }
    return std::clamp(std_normal_cdf(v) - term, 0.0, 1.0);
}

TemporalProfile::TemporalProfile(ProfileShape shape, Semantics semantics,
                                 double amplitude)
    : shape_(std::move(shape)), semantics_(semantics), amplitude_(amplitude) {
    if (!(amplitude_ >= 0.0) || !std::isfinite(amplitude_))
        throw ConfigError("profile amplitude must be finite and >= 0");
    validate_shape(shape_);
    if (is_sampled()) build_sampled_cdf();
}

void TemporalProfile::build_sampled_cdf() {
    const auto& s = std::get<Sampled>(shape_);
    sampled_cdf_.resize(s.values.size());
    sampled_cdf_[0] = 0.0;
    for (std::size_t i = 1; i < s.values.size(); ++i)
        sampled_cdf_[i] =
            sampled_cdf_[i - 1] + 0.5 * (s.values[i - 1] + s.values[i]) * s.step_ps;
}

TemporalProfile TemporalProfile::exponential_decay(double onset_ps, double lifetime_ps,
                                                   Semantics sem) {
    TemporalProfile p(ExponentialDecay{onset_ps, lifetime_ps}, Semantics::Power);
    return sem == Semantics::Density ? p.normalized() : p;
}

TemporalProfile TemporalProfile::gaussian(double center_ps, double fwhm_ps,
                                          Semantics sem) {
    TemporalProfile p(Gaussian{center_ps, fwhm_ps}, Semantics::Power);
    return sem == Semantics::Density ? p.normalized() : p;
}

TemporalProfile TemporalProfile::flat_top(double center_ps, double fwhm_ps,
                                          double edge_fwhm_ps, Semantics sem) {
    TemporalProfile p(FlatTop{center_ps, fwhm_ps, edge_fwhm_ps}, Semantics::Power);
    return sem == Semantics::Density ? p.normalized() : p;
}

TemporalProfile TemporalProfile::constant(double level) {
    return TemporalProfile(Constant{level}, Semantics::Power);
}

TemporalProfile TemporalProfile::ex_gaussian(double onset_ps, double lifetime_ps,
                                             double sigma_ps, Semantics sem) {
    TemporalProfile p(ExGaussian{onset_ps, lifetime_ps, sigma_ps}, Semantics::Power);
    return sem == Semantics::Density ? p.normalized() : p;
}

TemporalProfile TemporalProfile::sampled(double start_ps, double step_ps,
                                         std::vector<double> values, Semantics sem) {
    TemporalProfile p(Sampled{start_ps, step_ps, std::move(values)}, Semantics::Power);
    return sem == Semantics::Density ? p.normalized() : p;
}

double TemporalProfile::eval(double t) const {
    if (!std::isfinite(t)) throw PhysicsError("eval requires a finite time");
    double raw = std::visit(
        [t](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ExponentialDecay>) {
                if (t < v.onset_ps) return 0.0;
                return std::exp(-(t - v.onset_ps) / v.lifetime_ps);
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                const double x = (t - v.center_ps) / v.fwhm_ps;
                return std::exp(-4.0 * kLn2 * x * x);
            } else if constexpr (std::is_same_v<T, FlatTop>) {
                return flat_top_raw(v, t);
            } else if constexpr (std::is_same_v<T, Constant>) {
                return v.level;
            } else if constexpr (std::is_same_v<T, ExGaussian>) {
                return v.lifetime_ps * exgaussian_pdf(t, v.onset_ps, v.lifetime_ps, v.sigma_ps);
            } else {
                return sampled_interp(v, t);
            }
        },
        shape_);
    return amplitude_ * raw;
}

double TemporalProfile::mass() const {
    double raw = std::visit(
        [](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ExponentialDecay>) {
                return v.lifetime_ps;
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                return v.fwhm_ps * kGaussMassPerFwhm;
            } else if constexpr (std::is_same_v<T, FlatTop>) {
                return v.fwhm_ps / flat_top_geometry(v).peak;
            } else if constexpr (std::is_same_v<T, Constant>) {
                return v.level > 0.0 ? kInf : 0.0;
            } else if constexpr (std::is_same_v<T, ExGaussian>) {
                return v.lifetime_ps;
            } else {
                return sampled_mass_raw(v);
            }
        },
        shape_);
    return amplitude_ * raw;
}

TemporalProfile TemporalProfile::normalized() const {
    const double m = mass();
    if (!std::isfinite(m))
        throw ZeroMass("profile is not normalizable: infinite integral");
    if (!(m > 0.0)) throw ZeroMass("profile is not normalizable: zero integral");
    return TemporalProfile(shape_, Semantics::Density, amplitude_ / m);
}

namespace {

// Bisection for f(t) = half, with f monotone between lo and hi.
double bisect_half(const TemporalProfile& p, double half, double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const bool above = p.eval(mid) >= half;
        const bool lo_above = p.eval(lo) >= half;
        if (above == lo_above)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double sampled_fwhm(const Sampled& s) {
    const auto& v = s.values;
    std::size_t imax = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[imax]) imax = i;
    if (!(v[imax] > 0.0)) throw NoPeak("sampled profile is identically zero");
    const double half = 0.5 * v[imax];

    // Collect half-max crossings of the piecewise-linear curve.
    std::vector<double> ups, downs;
    if (v.front() >= half) ups.push_back(s.start_ps);
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        const double t0 = s.start_ps + static_cast<double>(i) * s.step_ps;
        if (v[i] < half && v[i + 1] >= half)
            ups.push_back(t0 + s.step_ps * (half - v[i]) / (v[i + 1] - v[i]));
        if (v[i] >= half && v[i + 1] < half)
            downs.push_back(t0 + s.step_ps * (v[i] - half) / (v[i] - v[i + 1]));
    }
    if (v.back() >= half)
        downs.push_back(s.start_ps + static_cast<double>(v.size() - 1) * s.step_ps);
    if (ups.size() != 1 || downs.size() != 1)
        throw Multimodal("profile has more than one half-maximum crossing pair");
    return downs.front() - ups.front();
}

}  // namespace

double TemporalProfile::fwhm() const {
    if (std::holds_alternative<Gaussian>(shape_))
        return std::get<Gaussian>(shape_).fwhm_ps;
    if (std::holds_alternative<ExponentialDecay>(shape_))
        return std::get<ExponentialDecay>(shape_).lifetime_ps * kLn2;
    if (std::holds_alternative<Constant>(shape_))
        throw Multimodal("constant profile has no unique maximum");
    if (std::holds_alternative<Sampled>(shape_))
        return sampled_fwhm(std::get<Sampled>(shape_));

    if (const auto* ft = std::get_if<FlatTop>(&shape_)) {
        const FlatTopGeom g = flat_top_geometry(*ft);
        const double peak = eval(ft->center_ps);
        const double half = 0.5 * peak;
        const double left =
            bisect_half(*this, half, g.lo - 8.0 * g.sigma - 1.0, ft->center_ps);
        const double right =
            bisect_half(*this, half, ft->center_ps, g.hi + 8.0 * g.sigma + 1.0);
        return right - left;
    }

    const auto& eg = std::get<ExGaussian>(shape_);
    if (eg.sigma_ps <= 0.0) return eg.lifetime_ps * kLn2;
    // Unimodal: locate the mode by ternary search, then bisect outward.
    double lo = eg.onset_ps - 4.0 * eg.sigma_ps;
    double hi = eg.onset_ps + 4.0 * eg.sigma_ps;
    for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        if (eval(m1) < eval(m2))
            lo = m1;
        else
            hi = m2;
    }
    const double mode = 0.5 * (lo + hi);
    const double half = 0.5 * eval(mode);
    double right_hi = mode + eg.lifetime_ps;
    while (eval(right_hi) > half) right_hi += eg.lifetime_ps;
    const double left =
        bisect_half(*this, half, mode - 9.0 * eg.sigma_ps - 1.0, mode);
    const double right = bisect_half(*this, half, mode, right_hi);
    return right - left;
}

namespace {

Sampled convolve_sampled(const Sampled& in, double sigma) {
    const double step = in.step_ps;
    const auto ext = static_cast<std::size_t>(std::ceil(5.0 * sigma / step));
    const std::size_t n = in.values.size();
    const std::size_t n_out = n + 2 * ext;
    Sampled out;
    out.step_ps = step;
    out.start_ps = in.start_ps - static_cast<double>(ext) * step;
    out.values.assign(n_out, 0.0);

    const double window = 8.0 * sigma;
    const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
    const double s2 = sigma * sigma;

    for (std::size_t j = 0; j < n_out; ++j) {
        const double t = out.start_ps + static_cast<double>(j) * step;
        // Segment nodes i with |s_i - t| within the kernel window.
        const double rel = (t - in.start_ps) / step;
        const auto i_lo = static_cast<long>(std::floor(rel - window / step)) - 1;
        const auto i_hi = static_cast<long>(std::ceil(rel + window / step)) + 1;
        const long lo = std::max<long>(0, i_lo);
        const long hi = std::min<long>(static_cast<long>(n) - 1, i_hi);
        if (lo >= hi) continue;

        // Exact integral of the piecewise-linear interpolant against the
        // Gaussian kernel: per segment, c0*(Phi(B)-Phi(A)) + m*s^2*(phi(A)-phi(B)).
        double prev_x = in.start_ps + static_cast<double>(lo) * step - t;
        double prev_cdf = std_normal_cdf(prev_x / sigma);
        double prev_pdf = norm * std::exp(-0.5 * prev_x * prev_x / s2);
        double acc = 0.0;
        for (long i = lo; i < hi; ++i) {
            const double x = prev_x + step;
            const double cdf = std_normal_cdf(x / sigma);
            const double pdf = norm * std::exp(-0.5 * x * x / s2);
            const double vi = in.values[static_cast<std::size_t>(i)];
            const double vj = in.values[static_cast<std::size_t>(i) + 1];
            const double m = (vj - vi) / step;
            const double c0 = vi - m * prev_x;  // value at offset x = s - t
            acc += c0 * (cdf - prev_cdf) + m * s2 * (prev_pdf - pdf);
            prev_x = x;
            prev_cdf = cdf;
            prev_pdf = pdf;
        }
        out.values[j] = std::max(acc, 0.0);
    }
    return out;
}

}  // namespace

TemporalProfile TemporalProfile::convolve_gaussian(double kernel_fwhm_ps) const {
    if (kernel_fwhm_ps < 0.0)
        throw PhysicsError("convolution kernel width must be >= 0");
    if (kernel_fwhm_ps == 0.0) return *this;
    const double ks = kernel_fwhm_ps * kFwhmToSigma;

    if (const auto* g = std::get_if<Gaussian>(&shape_)) {
        const double w = std::hypot(g->fwhm_ps, kernel_fwhm_ps);
        return TemporalProfile(Gaussian{g->center_ps, w}, semantics_,
                               amplitude_ * g->fwhm_ps / w);
    }
    if (const auto* e = std::get_if<ExponentialDecay>(&shape_)) {
        return TemporalProfile(ExGaussian{e->onset_ps, e->lifetime_ps, ks},
                               semantics_, amplitude_);
    }
    if (const auto* e = std::get_if<ExGaussian>(&shape_)) {
        return TemporalProfile(
            ExGaussian{e->onset_ps, e->lifetime_ps, std::hypot(e->sigma_ps, ks)},
            semantics_, amplitude_);
    }
    if (const auto* ft = std::get_if<FlatTop>(&shape_)) {
        FlatTop out{ft->center_ps, ft->fwhm_ps,
                    std::hypot(ft->edge_fwhm_ps, kernel_fwhm_ps)};
        const double scale =
            flat_top_geometry(out).peak / flat_top_geometry(*ft).peak;
        return TemporalProfile(out, semantics_, amplitude_ * scale);
    }
    if (std::holds_alternative<Constant>(shape_)) return *this;

    return TemporalProfile(convolve_sampled(std::get<Sampled>(shape_), ks),
                           semantics_, amplitude_);
}

double TemporalProfile::sample_time(RandomStream& rng) const {
    if (semantics_ != Semantics::Density)
        throw SemanticsError("sample_time requires density semantics");

    if (const auto* e = std::get_if<ExponentialDecay>(&shape_))
        return e->onset_ps + rng.exponential(e->lifetime_ps);
    if (const auto* g = std::get_if<Gaussian>(&shape_))
        return g->center_ps + rng.normal() * g->fwhm_ps * kFwhmToSigma;
    if (const auto* ft = std::get_if<FlatTop>(&shape_)) {
        const FlatTopGeom geom = flat_top_geometry(*ft);
        return rng.uniform(geom.lo, geom.hi) + rng.normal() * geom.sigma;
    }
    if (const auto* e = std::get_if<ExGaussian>(&shape_))
        return e->onset_ps + rng.exponential(e->lifetime_ps) +
               rng.normal() * e->sigma_ps;
    if (std::holds_alternative<Constant>(shape_))
        throw SemanticsError("constant profile cannot be sampled");

    // Table inversion on the trapezoidal CDF; exact for the piecewise-linear
    // density.
    const auto& s = std::get<Sampled>(shape_);
    const double total = sampled_cdf_.back();
    if (!(total > 0.0)) throw ZeroMass("sampled profile has zero mass");
    const double target = rng.uniform() * total;
    auto it = std::upper_bound(sampled_cdf_.begin(), sampled_cdf_.end(), target);
    std::size_t i = it == sampled_cdf_.begin()
                        ? 0
                        : static_cast<std::size_t>(it - sampled_cdf_.begin()) - 1;
    if (i + 1 >= s.values.size()) i = s.values.size() - 2;
    const double dc = target - sampled_cdf_[i];
    const double vi = s.values[i];
    const double m = (s.values[i + 1] - vi) / s.step_ps;
    double x;
    if (std::abs(m) < 1e-300) {
        x = vi > 0.0 ? dc / vi : 0.5 * s.step_ps;
    } else {
        const double q = std::max(vi * vi + 2.0 * m * dc, 0.0);
        x = (-vi + std::sqrt(q)) / m;
    }
    x = std::clamp(x, 0.0, s.step_ps);
    return s.start_ps + static_cast<double>(i) * s.step_ps + x;
}

double TemporalProfile::cdf(double t) const {
    double raw = std::visit(
        [t, this](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ExponentialDecay>) {
                return exgaussian_cdf(t, v.onset_ps, v.lifetime_ps, 0.0);
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                return std_normal_cdf((t - v.center_ps) / (v.fwhm_ps * kFwhmToSigma));
            } else if constexpr (std::is_same_v<T, FlatTop>) {
                const FlatTopGeom g = flat_top_geometry(v);
                return (cdf_antiderivative(t - g.lo, g.sigma) -
                        cdf_antiderivative(t - g.hi, g.sigma)) /
                       v.fwhm_ps;
            } else if constexpr (std::is_same_v<T, Constant>) {
                throw ZeroMass("constant profile has no CDF");
            } else if constexpr (std::is_same_v<T, ExGaussian>) {
                return exgaussian_cdf(t, v.onset_ps, v.lifetime_ps, v.sigma_ps);
            } else {
                const double total = sampled_cdf_.back();
                if (!(total > 0.0)) throw ZeroMass("sampled profile has zero mass");
                const double x = (t - v.start_ps) / v.step_ps;
                if (x <= 0.0) return 0.0;
                if (x >= static_cast<double>(v.values.size() - 1)) return 1.0;
                const auto i = static_cast<std::size_t>(x);
                const double frac = (x - static_cast<double>(i)) * v.step_ps;
                const double vi = v.values[i];
                const double m = (v.values[i + 1] - vi) / v.step_ps;
                return (sampled_cdf_[i] + vi * frac + 0.5 * m * frac * frac) / total;
            }
        },
        shape_);
    return std::clamp(raw, 0.0, 1.0);
}

std::pair<double, double> TemporalProfile::support() const {
    // Bounds beyond which values fall under ~1e-12 of the peak.
    constexpr double kDecades = 27.631;  // ln(1e12)
    return std::visit(
        [](const auto& v) -> std::pair<double, double> {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ExponentialDecay>) {
                return {v.onset_ps, v.onset_ps + kDecades * v.lifetime_ps};
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                const double r = v.fwhm_ps * std::sqrt(kDecades / (4.0 * kLn2));
                return {v.center_ps - r, v.center_ps + r};
            } else if constexpr (std::is_same_v<T, FlatTop>) {
                const double pad = 8.0 * v.edge_fwhm_ps * kFwhmToSigma;
                return {v.center_ps - 0.5 * v.fwhm_ps - pad,
                        v.center_ps + 0.5 * v.fwhm_ps + pad};
            } else if constexpr (std::is_same_v<T, Constant>) {
                return {-kInf, kInf};
            } else if constexpr (std::is_same_v<T, ExGaussian>) {
                return {v.onset_ps - 8.0 * v.sigma_ps,
                        v.onset_ps + kDecades * v.lifetime_ps + 8.0 * v.sigma_ps};
            } else {
                return {v.start_ps,
                        v.start_ps + static_cast<double>(v.values.size() - 1) * v.step_ps};
            }
        },
        shape_);
}

TemporalProfile TemporalProfile::to_sampled(double step_ps) const {
    if (!(step_ps > 0.0)) throw ConfigError("sampling step must be > 0");
    if (const auto* s = std::get_if<Sampled>(&shape_)) {
        if (s->step_ps == step_ps) return *this;
    }
    const auto [lo, hi] = support();
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw ZeroMass("cannot sample a profile with unbounded support");
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step_ps)) + 1;
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i)
        vals[i] = eval(lo + static_cast<double>(i) * step_ps);
    return TemporalProfile(Sampled{lo, step_ps, std::move(vals)}, semantics_, 1.0);
}

void TemporalProfile::write_csv(std::ostream& os) const {
    const auto* s = std::get_if<Sampled>(&shape_);
    if (s == nullptr)
        throw ConfigError("only sampled profiles serialize to CSV; use to_sampled()");
    os << "time_ps,value\n";
    char buf[64];
    for (std::size_t i = 0; i < s->values.size(); ++i) {
        const double t = s->start_ps + static_cast<double>(i) * s->step_ps;
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", t, amplitude_ * s->values[i]);
        os << buf;
    }
}

TemporalProfile TemporalProfile::read_csv(std::istream& is, Semantics sem) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("empty profile CSV");
    if (line.find("time_ps") == std::string::npos)
        throw ConfigError("profile CSV must start with a 'time_ps,value' header");
    std::vector<double> times, values;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        double t, v;
        char comma;
        if (!(row >> t >> comma >> v) || comma != ',')
            throw ConfigError("malformed profile CSV row: " + line);
        times.push_back(t);
        values.push_back(v);
    }
    if (times.size() < 2) throw ConfigError("profile CSV needs at least two rows");
    const double step = times[1] - times[0];
    if (!(step > 0.0)) throw ConfigError("profile CSV times must be increasing");
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double d = times[i] - times[i - 1];
        if (std::abs(d - step) > 1e-6 * step)
            throw ConfigError("profile CSV requires a uniform time grid");
    }
    TemporalProfile p(Sampled{times[0], step, std::move(values)}, Semantics::Power);
    return sem == Semantics::Density ? p.normalized() : p;
}

}  // namespace upconv
