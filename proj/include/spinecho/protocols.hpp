// Forward autocorrelation, Loschmidt echo and survival-probability experiments

#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinecho/diagnostics.hpp"
#include "spinecho/ensemble.hpp"
#include "spinecho/hilbert.hpp"
#include "spinecho/model.hpp"
#include "spinecho/onebody.hpp"
#include "spinecho/propagate.hpp"

namespace spinecho {

// Reversal times t_R; every point is read out at total time 2 t_R.
struct LeSchedule {
    std::vector<double> t_r_values;

    void validate() const {
        if (t_r_values.empty()) throw std::invalid_argument("LeSchedule: no reversal times");
        for (std::size_t i = 0; i < t_r_values.size(); ++i) {
            if (!(t_r_values[i] > 0.0)) throw std::invalid_argument("LeSchedule: reversal times must be positive");
            if (i > 0 && !(t_r_values[i] > t_r_values[i - 1]))
                throw std::invalid_argument("LeSchedule: reversal times must be strictly increasing");
        }
    }

    // Readout times including the t = 0 reference point.
    std::vector<double> total_times() const {
        std::vector<double> t{0.0};
        for (double tr : t_r_values) t.push_back(2.0 * tr);
        return t;
    }

    static LeSchedule log_spaced(double t_total_min, double t_total_max, int points) {
        if (!(t_total_min > 0.0) || !(t_total_max > t_total_min) || points < 2)
            throw std::invalid_argument("LeSchedule::log_spaced: need 0 < t_min < t_max and >= 2 points");
        LeSchedule s;
        const double a = std::log(t_total_min), b = std::log(t_total_max);
        for (int i = 0; i < points; ++i) s.t_r_values.push_back(0.5 * std::exp(a + (b - a) * i / (points - 1)));
        return s;
    }

    // Total times step, 2 step, ..., up to t_total_max.
    static LeSchedule linear(double step, double t_total_max) {
        if (!(step > 0.0) || !(t_total_max >= step))
            throw std::invalid_argument("LeSchedule::linear: need 0 < step <= t_max");
        LeSchedule s;
        const auto n = static_cast<long>(std::floor(t_total_max / step + 1e-9));
        for (long i = 1; i <= n; ++i) s.t_r_values.push_back(0.5 * step * static_cast<double>(i));
        return s;
    }
};

inline std::vector<double> linear_grid(double step, double t_max) {
    std::vector<double> t;
    const auto n = static_cast<long>(std::floor(t_max / step + 1e-9));
    for (long i = 0; i <= n; ++i) t.push_back(step * static_cast<double>(i));
    return t;
}

// <S^z_site> under exp(-i H t), stepping incrementally through the grid.
struct ForwardRecipe {
    const Propagator* propagator;

    std::vector<double> trajectory(const StateVector& s, std::span<const double> times, int site) const {
        std::vector<double> out;
        out.reserve(times.size());
        StateVector psi = s;
        double now = 0.0;
        for (double t : times) {
            if (t != now) psi = propagator->evolve(psi, t - now);
            now = t;
            out.push_back(local_sz(psi, site));
        }
        return out;
    }
};

// <S^z_site> after exp(-i H_b t/2) exp(-i H_f t/2) for each total time t.
struct EchoRecipe {
    const Propagator* forward;
    const Propagator* backward;

    std::vector<double> trajectory(const StateVector& s, std::span<const double> times, int site) const {
        std::vector<double> out;
        out.reserve(times.size());
        StateVector psi = s;
        double now = 0.0;
        for (double t : times) {
            const double tr = 0.5 * t;
            if (tr != now) psi = forward->evolve(psi, tr - now);
            now = tr;
            out.push_back(local_sz(tr == 0.0 ? psi : backward->evolve(psi, tr), site));
        }
        return out;
    }
};

// Exact-trace ensemble with spectral propagators, evaluated sector by sector:
// the evolved ensemble members of one magnetization sector are the site-1-up
// columns of the block unitary, so each readout is two or four dense products.
// With `backward` null the evolution is exp(-i H_f t); otherwise it is the
// echo exp(-i H_b t/2) exp(-i H_f t/2).
inline TimeSeries exact_trace_curve(const SpectralPropagator& forward, const SpectralPropagator* backward,
                                    std::span<const double> times, int site, int workers, Observable observable) {
    if (backward && backward->n_sites() != forward.n_sites())
        throw std::invalid_argument("exact_trace_curve: forward/backward dimension mismatch");
    const int n_sites = forward.n_sites();
    if (site < 1 || site > n_sites) throw std::out_of_range("exact_trace_curve: site out of range");

    struct Block {
        Eigen::MatrixXd x0;      // V_f^T restricted to site-1-up columns
        Eigen::MatrixXd w;       // V_b^T V_f (echo only)
        Eigen::VectorXd sz;      // S^z_site on the sector codes
        const SpectralSector* f;
        const SpectralSector* b;
    };
    std::vector<Block> blocks;
    for (std::size_t k = 0; k < forward.sectors().size(); ++k) {
        const auto& f = forward.sectors()[k];
        std::vector<Eigen::Index> up;
        for (std::size_t i = 0; i < f.codes.size(); ++i)
            if (f.codes[i] & 1U) up.push_back(static_cast<Eigen::Index>(i));
        if (up.empty()) continue;
        Block blk;
        blk.f = &f;
        blk.b = backward ? &backward->sectors()[k] : nullptr;
        blk.x0.resize(f.vectors.rows(), static_cast<Eigen::Index>(up.size()));
        for (std::size_t c = 0; c < up.size(); ++c) blk.x0.col(static_cast<Eigen::Index>(c)) = f.vectors.row(up[c]).transpose();
        if (blk.b) blk.w = blk.b->vectors.transpose() * f.vectors;
        blk.sz.resize(static_cast<Eigen::Index>(f.codes.size()));
        for (std::size_t i = 0; i < f.codes.size(); ++i)
            blk.sz[static_cast<Eigen::Index>(i)] = spin_up(f.codes[i], site) ? 0.5 : -0.5;
        blocks.push_back(std::move(blk));
    }

    const double n_states = std::ldexp(1.0, n_sites - 1);
    TimeSeries out;
    out.observable = observable;
    out.times.assign(times.begin(), times.end());
    out.values.resize(times.size());
    parallel_for(times.size(), workers, [&](std::size_t k) {
        const double tf = backward ? 0.5 * times[k] : times[k];
        CompensatedSum total;
        for (const auto& blk : blocks) {
            const Eigen::ArrayXd ef = blk.f->energies.array() * tf;
            Eigen::MatrixXd re = ef.cos().matrix().asDiagonal() * blk.x0;
            Eigen::MatrixXd im = (-ef.sin()).matrix().asDiagonal() * blk.x0;
            const SpectralSector* last = blk.f;
            if (blk.b) {
                const Eigen::MatrixXd yr = blk.w * re, yi = blk.w * im;
                const Eigen::ArrayXd eb = blk.b->energies.array() * tf;
                const Eigen::VectorXd c = eb.cos().matrix(), s = eb.sin().matrix();
                re = c.asDiagonal() * yr + s.asDiagonal() * yi;
                im = c.asDiagonal() * yi - s.asDiagonal() * yr;
                last = blk.b;
            }
            const Eigen::MatrixXd ur = last->vectors * re, ui = last->vectors * im;
            const Eigen::VectorXd weight = (ur.array().square() + ui.array().square()).rowwise().sum().matrix();
            total.add(blk.sz.dot(weight));
        }
        out.values[k] = 2.0 * total.value() / n_states;
    });
    return out;
}

template <EvolutionRecipe Recipe>
TimeSeries ensemble_curve(const LadderSpec& spec, const EnsembleSpec& ensemble, const Recipe& recipe,
                          std::span<const double> times, int workers, Observable observable) {
    ensemble.validate();
    if (ensemble.mode == EnsembleMode::ExactTrace)
        return polarization_curve(exact_trace_states(spec, ensemble.exact_max_sites), recipe, times, 1, workers,
                                  observable);
    return polarization_curve(RandomPhaseStates(spec, ensemble.n_realizations, ensemble.seed), recipe, times, 1,
                              workers, observable);
}

inline TimeSeries forward_p11(const LadderSpec& spec, const Couplings& couplings, const EnsembleSpec& ensemble,
                              const EvolutionConfig& config, std::span<const double> times, int workers = 1) {
    const auto prop = prepare(total_hamiltonian(spec, couplings), config);
    TimeSeries out;
    if (ensemble.mode == EnsembleMode::ExactTrace && prop.spectral()) {
        exact_trace_states(spec, ensemble.exact_max_sites);  // cap check
        out = exact_trace_curve(*prop.spectral(), nullptr, times, 1, workers, Observable::P11);
    } else {
        out = ensemble_curve(spec, ensemble, ForwardRecipe{&prop}, times, workers, Observable::P11);
    }
    return out;
}

inline TimeSeries loschmidt_echo(const LadderSpec& spec, const Couplings& couplings, const EnsembleSpec& ensemble,
                                 const LeSchedule& schedule, const EvolutionConfig& config, int workers = 1) {
    schedule.validate();
    const auto staged = stage_hamiltonians(spec, couplings);
    const auto fwd = prepare(staged.forward, config);
    const auto bwd = prepare(staged.backward, config);
    const auto times = schedule.total_times();
    if (ensemble.mode == EnsembleMode::ExactTrace && fwd.spectral()) {
        exact_trace_states(spec, ensemble.exact_max_sites);
        return exact_trace_curve(*fwd.spectral(), bwd.spectral(), times, 1, workers, Observable::MLE);
    }
    return ensemble_curve(spec, ensemble, EchoRecipe{&fwd, &bwd}, times, workers, Observable::MLE);
}

// Single spin coupled by J_SE to the edge of an XY chain with coupling J_E,
// in the single-excitation picture: h_12 = J_SE/2, h_{n,n+1} = J_E/2.
inline TimeSeries sp_paradigm(double j_se, double j_e, int chain_length, std::span<const double> times) {
    if (chain_length < 2) throw std::invalid_argument("sp_paradigm: chain_length must be >= 2");
    const double t_max = times.empty() ? 0.0 : times.back();
    TimeSeries out;
    HoppingMatrix h = HoppingMatrix::chain(chain_length, j_e, Boundary::Open);
    h.hoppings[0] = j_se / 2.0;
    out = onebody_return(h, times, Observable::SP);
    if (static_cast<double>(chain_length) < 2.0 * t_max * std::abs(j_e)) {
        const std::string msg = "sp_paradigm: chain of " + std::to_string(chain_length) +
                                " sites is shorter than 2 t_max J_E; finite-size revivals may contaminate the curve";
        warn(msg);
        out.meta["warning"] = msg;
    }
    return out;
}

struct SweepPoint {
    double alpha;
    double j_se;
    TimeSeries series;
    std::string error;  // empty on success
};

// One echo curve per (alpha, J_SE); a failing point is recorded and the sweep continues.
inline std::vector<SweepPoint> le_sweep(const LadderSpec& spec, const Couplings& base, std::span<const double> alphas,
                                        std::span<const double> j_ses, const LeSchedule& schedule,
                                        const EnsembleSpec& ensemble, const EvolutionConfig& config, int workers = 1) {
    std::vector<SweepPoint> points;
    for (double a : alphas)
        for (double j : j_ses) points.push_back({a, j, {}, {}});
    parallel_for(points.size(), workers, [&](std::size_t i) {
        auto& p = points[i];
        try {
            Couplings c = base;
            c.alpha = p.alpha;
            c.j_se = p.j_se;
            p.series = loschmidt_echo(spec, c, ensemble, schedule, config, 1);
        } catch (const std::exception& e) {
            p.error = e.what();
        }
    });
    return points;
}

}  // namespace spinecho
