// Decay-regime fits and golden-rule rate decomposition
//
// A decay curve M(t) is read in three regimes: a quadratic onset
// 1 - sigma^2 t^2, an exponential regime exp(-t / tau_phi), and an ergodic
// plateau. Rates measured over an (alpha, J_SE) grid are split into the
// flip-flop (XY) and Ising (ZZ) channels through
//     1/tau_phi = 1/tau_0(alpha) + (c_XY + c_ZZ alpha^2) J_SE^2 / J_E.

#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spinecho/ensemble.hpp"

namespace spinecho {

class FitError : public std::runtime_error {
public:
    enum class Reason { InsufficientSamples, WindowTooShort, PlateauBeforeOnset, NotDecaying, SingularRegression };

    FitError(Reason reason, const std::string& what) : std::runtime_error(what), reason_(reason) {}
    Reason reason() const { return reason_; }

private:
    Reason reason_;
};

struct LinearFit {
    double slope{0.0};
    double intercept{0.0};
    double slope_err{0.0};
    double intercept_err{0.0};
    double covariance{0.0};  // cov(slope, intercept)
    double r2{0.0};
    std::size_t n{0};
};

// Ordinary least squares y = intercept + slope x with standard errors.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw FitError(FitError::Reason::InsufficientSamples, "linear_fit: need >= 2 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw FitError(FitError::Reason::SingularRegression, "linear_fit: all abscissae coincide");
    LinearFit f;
    f.n = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        ssr += r * r;
    }
    f.r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
    if (n > 2) {
        const double s2 = ssr / static_cast<double>(n - 2);
        f.slope_err = std::sqrt(s2 / sxx);
        f.intercept_err = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
        f.covariance = -mx * s2 / sxx;
    }
    return f;
}

// sigma^2 from a least-squares fit of 1 - M(t) = sigma^2 t^2 over 0 < t <= t_cut.
inline double fit_quadratic(const TimeSeries& series, double t_cut = 0.5, std::size_t min_samples = 5) {
    double num = 0.0, den = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double t = series.times[i];
        if (!(t > 0.0) || t > t_cut) continue;
        const double x = t * t;
        num += x * (1.0 - series.values[i]);
        den += x * x;
        ++used;
    }
    if (used < min_samples)
        throw FitError(FitError::Reason::InsufficientSamples,
                       "fit_quadratic: " + std::to_string(used) + " samples below t_cut, need " +
                           std::to_string(min_samples));
    return num / den;
}

// Mean of the last tail_fraction of the samples.
inline double estimate_plateau(const TimeSeries& series, double tail_fraction = 0.2, std::size_t min_samples = 20) {
    const auto n = series.size();
    const auto tail = static_cast<std::size_t>(std::floor(tail_fraction * static_cast<double>(n)));
    if (tail < min_samples)
        throw FitError(FitError::Reason::InsufficientSamples,
                       "estimate_plateau: tail holds " + std::to_string(tail) + " samples, need " +
                           std::to_string(min_samples));
    CompensatedSum s;
    for (std::size_t i = n - tail; i < n; ++i) s.add(series.values[i]);
    return s.value() / static_cast<double>(tail);
}

// Mean over samples with t_from <= t <= t_to.
inline double estimate_plateau(const TimeSeries& series, double t_from, double t_to, std::size_t min_samples = 20) {
    CompensatedSum s;
    std::size_t used = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series.times[i] < t_from || series.times[i] > t_to) continue;
        s.add(series.values[i]);
        ++used;
    }
    if (used < min_samples)
        throw FitError(FitError::Reason::InsufficientSamples,
                       "estimate_plateau: window holds " + std::to_string(used) + " samples, need " +
                           std::to_string(min_samples));
    return s.value() / static_cast<double>(used);
}

// First time at which 1 - M departs from sigma^2 t^2 by more than `threshold` (relative).
inline std::optional<double> spreading_time(const TimeSeries& series, double sigma2, double threshold = 0.2) {
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double t = series.times[i];
        if (!(t > 0.0)) continue;
        const double quad = sigma2 * t * t;
        if (std::abs((1.0 - series.values[i]) - quad) > threshold * quad) return t;
    }
    return std::nullopt;
}

struct ExponentialFitOptions {
    double onset{2.0};           // first time admitted, hbar/J_E
    double plateau_guard{3.0};   // window ends at the last time with M >= guard * plateau
    std::optional<double> plateau;  // estimated from the tail when absent
    std::optional<double> window_end;  // hard cap on the window end
    double tail_fraction{0.2};
    double t_spread{1.0};        // spreading-time estimate hbar/J_E; onset may not precede it
    std::size_t min_samples{10};
    bool subtract_plateau{false};
};

struct RateFit {
    double sigma2{std::numeric_limits<double>::quiet_NaN()};
    double rate{0.0};  // 1/tau_phi
    double rate_err{0.0};
    double log_amplitude{0.0};
    std::pair<double, double> fit_window{0.0, 0.0};
    double plateau{0.0};
    double t_spread{0.0};
    double r2{0.0};
    std::size_t n_samples{0};
    bool plateau_subtracted{false};
};

// Linear regression of ln M (or ln(M - plateau)) on [onset, t_end].
inline RateFit fit_exponential(const TimeSeries& series, const ExponentialFitOptions& opt = {}) {
    if (opt.onset < opt.t_spread)
        throw std::invalid_argument("fit_exponential: onset precedes the spreading time");
    const double plateau = opt.plateau ? *opt.plateau : estimate_plateau(series, opt.tail_fraction);
    const double threshold = opt.plateau_guard * plateau;

    std::optional<std::size_t> first, last;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series.times[i] < opt.onset) continue;
        if (opt.window_end && series.times[i] > *opt.window_end) break;
        if (!first) first = i;
        if (series.values[i] >= threshold) last = i;
    }
    if (!first) throw FitError(FitError::Reason::WindowTooShort, "fit_exponential: no samples after the onset");
    if (series.values[*first] < threshold || !last)
        throw FitError(FitError::Reason::PlateauBeforeOnset,
                       "fit_exponential: curve is within the plateau guard before the onset (saturation too fast)");

    std::vector<double> x, y;
    for (std::size_t i = *first; i <= *last; ++i) {
        const double v = opt.subtract_plateau ? series.values[i] - plateau : series.values[i];
        if (!(v > 0.0)) continue;
        x.push_back(series.times[i]);
        y.push_back(std::log(v));
    }
    if (x.size() < opt.min_samples)
        throw FitError(FitError::Reason::WindowTooShort,
                       "fit_exponential: window [" + std::to_string(series.times[*first]) + ", " +
                           std::to_string(series.times[*last]) + "] holds " + std::to_string(x.size()) +
                           " samples, need " + std::to_string(opt.min_samples));
    const auto lf = linear_fit(x, y);
    if (!(lf.slope < 0.0)) throw FitError(FitError::Reason::NotDecaying, "fit_exponential: curve is not decaying");

    RateFit r;
    r.rate = -lf.slope;
    r.rate_err = lf.slope_err;
    r.log_amplitude = lf.intercept;
    r.fit_window = {x.front(), x.back()};
    r.plateau = plateau;
    r.t_spread = opt.t_spread;
    r.r2 = lf.r2;
    r.n_samples = x.size();
    r.plateau_subtracted = opt.subtract_plateau;
    return r;
}

// Golden-rule parameters; hbar = 1 so 1/tau_FGR = 2 Gamma = 2 pi sigma^2 N_1.
struct FgrParams {
    double sigma2{0.0};
    double gamma{0.0};
    double n1{0.0};
    double tau_fgr{std::numeric_limits<double>::infinity()};

    double rate() const { return 2.0 * gamma; }
};

inline FgrParams fgr_predict(double sigma2, double n1) {
    if (sigma2 < 0.0 || n1 < 0.0) throw std::invalid_argument("fgr_predict: sigma2 and n1 must be non-negative");
    FgrParams p;
    p.sigma2 = sigma2;
    p.n1 = n1;
    p.gamma = std::numbers::pi * sigma2 * n1;
    p.tau_fgr = p.gamma > 0.0 ? 1.0 / (2.0 * p.gamma) : std::numeric_limits<double>::infinity();
    return p;
}

// Parameters implied by a measured sigma^2 and exponential rate.
inline FgrParams fgr_from_measurement(double sigma2, double rate) {
    if (!(sigma2 > 0.0) || !(rate > 0.0)) throw std::invalid_argument("fgr_from_measurement: need positive inputs");
    FgrParams p;
    p.sigma2 = sigma2;
    p.gamma = 0.5 * rate;
    p.n1 = rate / (2.0 * std::numbers::pi * sigma2);
    p.tau_fgr = 1.0 / rate;
    return p;
}

struct FgrChannel {
    std::string name;
    double sigma2;
    double n1;
};

// Sum over independent channels of 2 pi |V_delta|^2 N_1delta.
inline double fgr_rate(std::span<const FgrChannel> channels) {
    double r = 0.0;
    for (const auto& c : channels) r += fgr_predict(c.sigma2, c.n1).rate();
    return r;
}

// exp[2 Gamma^2/sigma^2 - 2 sqrt(Gamma^4/sigma^4 + Gamma^2 t^2)]: Gaussian at short
// times, exp(-2 Gamma t) at long times.
inline TimeSeries interpolation_curve(const FgrParams& p, std::span<const double> times) {
    if (!(p.sigma2 > 0.0) || !(p.gamma > 0.0))
        throw std::invalid_argument("interpolation_curve: sigma2 and Gamma must be positive");
    const double g2s2 = p.gamma * p.gamma / p.sigma2;
    TimeSeries out;
    out.observable = Observable::Other;
    out.times.assign(times.begin(), times.end());
    for (double t : times) out.values.push_back(std::exp(2.0 * g2s2 - 2.0 * std::sqrt(g2s2 * g2s2 + p.gamma * p.gamma * t * t)));
    return out;
}

struct AlphaRateFit {
    double alpha{0.0};
    double slope{0.0};  // d(1/tau_phi) / d(J_SE^2)
    double slope_err{0.0};
    double offset_rate{0.0};  // 1/tau_0
    double offset_err{0.0};
    double covariance{0.0};
    double r2{0.0};
    std::size_t n_points{0};
};

struct FgrDecomposition {
    std::vector<AlphaRateFit> per_alpha;
    double slope_xy{0.0};  // units J_SE^2 / (hbar J_E)
    double slope_xy_err{0.0};
    double slope_zz{0.0};
    double slope_zz_err{0.0};
    double covariance{0.0};
    double alpha_r2{0.0};
    double j_e{1.0};
};

// rates keyed by (alpha, J_SE).
inline FgrDecomposition fgr_decompose(const std::map<std::pair<double, double>, RateFit>& rates, double j_e = 1.0) {
    std::map<double, std::vector<std::pair<double, double>>> by_alpha;
    for (const auto& [key, fit] : rates) by_alpha[key.first].push_back({key.second * key.second, fit.rate});
    if (by_alpha.size() < 3)
        throw FitError(FitError::Reason::InsufficientSamples, "fgr_decompose: need >= 3 alpha values");

    FgrDecomposition d;
    d.j_e = j_e;
    std::vector<double> a2, scaled;
    for (const auto& [alpha, pts] : by_alpha) {
        if (pts.size() < 3)
            throw FitError(FitError::Reason::InsufficientSamples,
                           "fgr_decompose: alpha = " + std::to_string(alpha) + " has fewer than 3 J_SE points");
        std::vector<double> x, y;
        for (const auto& [j2, r] : pts) {
            x.push_back(j2);
            y.push_back(r);
        }
        const auto lf = linear_fit(x, y);
        d.per_alpha.push_back({alpha, lf.slope, lf.slope_err, lf.intercept, lf.intercept_err, lf.covariance, lf.r2,
                               pts.size()});
        a2.push_back(alpha * alpha);
        scaled.push_back(lf.slope * j_e);
    }
    const auto lf = linear_fit(a2, scaled);
    d.slope_xy = lf.intercept;
    d.slope_xy_err = lf.intercept_err;
    d.slope_zz = lf.slope;
    d.slope_zz_err = lf.slope_err;
    d.covariance = lf.covariance;
    d.alpha_r2 = lf.r2;
    return d;
}

}  // namespace spinecho
