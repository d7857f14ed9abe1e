// Single-excitation (Jordan-Wigner) picture: tight-binding return
// probabilities, mesoscopic echo detection and the quenched-disorder echo.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinecho/ensemble.hpp"
#include "spinecho/model.hpp"

namespace spinecho {

// Real symmetric one-body Hamiltonian on sites 1..size. hoppings[n] couples
// sites n+1 and n+2; a ring adds ring_hopping between sites size and 1.
struct HoppingMatrix {
    int size{0};
    std::vector<double> hoppings;
    std::vector<double> site_energies;
    bool ring{false};
    double ring_hopping{0.0};

    void validate() const {
        if (size < 1) throw std::invalid_argument("HoppingMatrix: size must be >= 1");
        if (hoppings.size() != static_cast<std::size_t>(std::max(0, size - 1)))
            throw std::invalid_argument("HoppingMatrix: expected size-1 hoppings");
        if (site_energies.size() != static_cast<std::size_t>(size))
            throw std::invalid_argument("HoppingMatrix: expected one site energy per site");
    }

    bool tridiagonal() const { return !ring || size <= 2; }

    Eigen::MatrixXd dense() const {
        validate();
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(size, size);
        for (int i = 0; i < size; ++i) h(i, i) = site_energies[static_cast<std::size_t>(i)];
        for (int i = 0; i + 1 < size; ++i) h(i, i + 1) = h(i + 1, i) = hoppings[static_cast<std::size_t>(i)];
        if (ring && size > 1) {
            h(0, size - 1) += ring_hopping;
            h(size - 1, 0) += ring_hopping;
        }
        return h;
    }

    // Homogeneous XY chain: hopping J/2 per bond, the single-excitation image of build_leg.
    static HoppingMatrix chain(int m, double j, Boundary boundary = Boundary::Open) {
        HoppingMatrix h;
        h.size = m;
        h.hoppings.assign(static_cast<std::size_t>(std::max(0, m - 1)), j / 2.0);
        h.site_energies.assign(static_cast<std::size_t>(m), 0.0);
        h.ring = boundary == Boundary::Ring;
        h.ring_hopping = h.ring ? j / 2.0 : 0.0;
        return h;
    }
};

struct OneBodySpectrum {
    Eigen::VectorXd energies;
    Eigen::VectorXd site1_weights;  // |<1|k>|^2
};

inline OneBodySpectrum site1_spectrum(const HoppingMatrix& h) {
    h.validate();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    if (h.tridiagonal() && h.size > 1) {
        Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(h.site_energies.data(), h.size);
        Eigen::VectorXd sub = Eigen::Map<const Eigen::VectorXd>(h.hoppings.data(), h.size - 1);
        if (h.ring) sub[0] += h.ring_hopping;  // size 2 ring: the corner is the same bond
        solver.computeFromTridiagonal(diag, sub);
    } else {
        solver.compute(h.dense());
    }
    if (solver.info() != Eigen::Success) throw std::runtime_error("onebody: eigendecomposition did not converge");
    return {solver.eigenvalues(), solver.eigenvectors().row(0).transpose().array().square()};
}

inline std::complex<double> return_amplitude(const OneBodySpectrum& s, double t) {
    std::complex<double> a{};
    for (Eigen::Index k = 0; k < s.energies.size(); ++k) a += s.site1_weights[k] * std::polar(1.0, -s.energies[k] * t);
    return a;
}

// |<1| exp(-i h t) |1>|^2 on the given grid.
inline TimeSeries onebody_return(const HoppingMatrix& h, std::span<const double> times,
                                 Observable observable = Observable::P11) {
    const auto spec = site1_spectrum(h);
    TimeSeries out;
    out.observable = observable;
    out.times.assign(times.begin(), times.end());
    out.values.reserve(times.size());
    for (double t : times) out.values.push_back(std::norm(return_amplitude(spec, t)));
    return out;
}

struct MesoEchoResult {
    bool found{false};
    double t_peak{0.0};
    double peak_value{0.0};
    double t_heisenberg_estimate{0.0};  // hbar / Delta with Delta = J_E / m
};

// Topographic prominence of the local maximum at index i.
inline double peak_prominence(std::span<const double> y, std::size_t i) {
    double left_min = y[i];
    for (std::size_t j = i; j-- > 0;) {
        if (y[j] > y[i]) break;
        left_min = std::min(left_min, y[j]);
    }
    double right_min = y[i];
    for (std::size_t j = i + 1; j < y.size(); ++j) {
        if (y[j] > y[i]) break;
        right_min = std::min(right_min, y[j]);
    }
    return y[i] - std::max(left_min, right_min);
}

// Interior local maxima (plateaus count once, at their left edge).
inline std::vector<std::size_t> local_maxima(std::span<const double> y) {
    std::vector<std::size_t> peaks;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        if (!(y[i] > y[i - 1])) continue;
        std::size_t j = i;
        while (j + 1 < y.size() && y[j + 1] == y[i]) ++j;
        if (j + 1 < y.size() && y[j + 1] < y[i]) peaks.push_back(i);
        i = j;
    }
    return peaks;
}

// First revival after the initial decay whose prominence reaches `min_prominence`.
inline MesoEchoResult detect_meso_echo(const TimeSeries& series, int m, double j_e = 1.0,
                                       double min_prominence = 0.1) {
    if (series.times.size() != series.values.size())
        throw std::invalid_argument("detect_meso_echo: times/values length mismatch");
    MesoEchoResult r;
    r.t_heisenberg_estimate = static_cast<double>(m) / std::abs(j_e);
    const std::span<const double> y(series.values);
    for (std::size_t i : local_maxima(y)) {
        if (series.times[i] <= 0.0) continue;
        if (peak_prominence(y, i) >= min_prominence) {
            r.found = true;
            r.t_peak = series.times[i];
            r.peak_value = y[i];
            break;
        }
    }
    return r;
}

// Binary-alloy disorder: each site energy is +amplitude or -amplitude.
struct DisorderSpec {
    double amplitude{0.0};
    bool exhaustive{true};      // average over all 2^m sign patterns
    int n_realizations{100};    // used when !exhaustive
    std::uint64_t seed{7};
};

inline std::vector<std::vector<double>> disorder_patterns(int m, const DisorderSpec& d) {
    std::vector<std::vector<double>> patterns;
    if (d.exhaustive) {
        if (m > 24) throw std::length_error("disorder: exhaustive enumeration needs m <= 24");
        for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << m); ++bits) {
            std::vector<double> e(static_cast<std::size_t>(m));
            for (int n = 0; n < m; ++n) e[static_cast<std::size_t>(n)] = ((bits >> n) & 1U) ? d.amplitude : -d.amplitude;
            patterns.push_back(std::move(e));
        }
    } else {
        if (d.n_realizations < 1) throw std::invalid_argument("disorder: n_realizations must be >= 1");
        for (int r = 0; r < d.n_realizations; ++r) {
            std::vector<double> e(static_cast<std::size_t>(m));
            for (int n = 0; n < m; ++n)
                e[static_cast<std::size_t>(n)] =
                    counter_uniform(d.seed, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(n)) < 0.5
                        ? -d.amplitude
                        : d.amplitude;
            patterns.push_back(std::move(e));
        }
    }
    return patterns;
}

// Disorder-averaged |<1| e^{-i(-H_S + E) t/2} e^{-i(H_S + E) t/2} |1>|^2, t = 2 t_R.
// The site energies E are frozen during both halves of the echo.
inline TimeSeries quenched_le(int m, Boundary boundary, double j_s, const std::vector<std::vector<double>>& patterns,
                              std::span<const double> times) {
    if (patterns.empty()) throw std::invalid_argument("quenched_le: no disorder configurations");
    for (const auto& eps : patterns)
        if (eps.size() != static_cast<std::size_t>(m))
            throw std::invalid_argument("quenched_le: each configuration needs one energy per site");
    TimeSeries out;
    out.observable = Observable::MLE;
    out.times.assign(times.begin(), times.end());
    std::vector<CompensatedSum> acc(times.size());
    for (const auto& eps : patterns) {
        HoppingMatrix fwd = HoppingMatrix::chain(m, j_s, boundary);
        fwd.site_energies = eps;
        HoppingMatrix bwd = HoppingMatrix::chain(m, -j_s, boundary);
        bwd.site_energies = eps;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sf(fwd.dense()), sb(bwd.dense());
        if (sf.info() != Eigen::Success || sb.info() != Eigen::Success)
            throw std::runtime_error("quenched_le: eigendecomposition did not converge");
        const Eigen::MatrixXd& vf = sf.eigenvectors();
        const Eigen::MatrixXd& vb = sb.eigenvectors();
        for (std::size_t k = 0; k < times.size(); ++k) {
            const double tr = 0.5 * times[k];
            Eigen::VectorXcd col = vf.row(0).transpose().cast<cplx>();
            for (Eigen::Index q = 0; q < col.size(); ++q) col[q] *= std::polar(1.0, -sf.eigenvalues()[q] * tr);
            Eigen::VectorXcd psi = vf * col;                 // U_f(t_R) |1>
            Eigen::VectorXcd proj = vb.transpose() * psi;    // into backward eigenbasis
            cplx amp{};
            for (Eigen::Index q = 0; q < proj.size(); ++q)
                amp += vb(0, q) * std::polar(1.0, -sb.eigenvalues()[q] * tr) * proj[q];
            acc[k].add(std::norm(amp));
        }
    }
    out.values.resize(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) out.values[k] = acc[k].value() / static_cast<double>(patterns.size());
    return out;
}

inline TimeSeries quenched_le(int m, Boundary boundary, double j_s, const DisorderSpec& disorder,
                              std::span<const double> times) {
    return quenched_le(m, boundary, j_s, disorder_patterns(m, disorder), times);
}

// Disorder-averaged forward return probability (no reversal).
inline TimeSeries disordered_return(const HoppingMatrix& clean, const DisorderSpec& disorder,
                                    std::span<const double> times) {
    const auto patterns = disorder_patterns(clean.size, disorder);
    std::vector<CompensatedSum> acc(times.size());
    for (const auto& eps : patterns) {
        HoppingMatrix h = clean;
        for (std::size_t n = 0; n < eps.size(); ++n) h.site_energies[n] += eps[n];
        const auto spec = site1_spectrum(h);
        for (std::size_t k = 0; k < times.size(); ++k) acc[k].add(std::norm(return_amplitude(spec, times[k])));
    }
    TimeSeries out;
    out.observable = Observable::P11;
    out.times.assign(times.begin(), times.end());
    for (auto& a : acc) out.values.push_back(a.value() / static_cast<double>(patterns.size()));
    return out;
}

}  // namespace spinecho
