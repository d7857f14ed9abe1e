// Infinite-temperature "site 1 up" ensembles and polarization curves
//
// The initial excitation S+_1 |eq> is an equal-weight mixture of every Ising
// configuration with site 1 up. It is sampled either exactly (one product
// state per configuration) or by random-phase superpositions over all of them.
// Curves are reported as 2 <S^z_1>, so a fully retained excitation reads 1.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "spinecho/hilbert.hpp"
#include "spinecho/model.hpp"

namespace spinecho {

enum class EnsembleMode { ExactTrace, RandomPhase };

inline std::string_view to_string(EnsembleMode m) { return m == EnsembleMode::ExactTrace ? "exact" : "random"; }

inline EnsembleMode parse_ensemble_mode(std::string_view s) {
    if (s == "exact" || s == "trace") return EnsembleMode::ExactTrace;
    if (s == "random" || s == "random-phase") return EnsembleMode::RandomPhase;
    throw std::invalid_argument("unknown ensemble mode '" + std::string(s) + "' (expected exact or random)");
}

struct EnsembleSpec {
    EnsembleMode mode{EnsembleMode::ExactTrace};
    int n_realizations{10};
    std::uint64_t seed{20120101};
    int exact_max_sites{12};

    void validate() const {
        if (n_realizations < 1) throw std::invalid_argument("EnsembleSpec: n_realizations must be >= 1");
    }
};

enum class Observable { P11, MLE, SP, Other };

inline std::string_view to_string(Observable o) {
    switch (o) {
        case Observable::P11: return "P11";
        case Observable::MLE: return "MLE";
        case Observable::SP: return "SP";
        case Observable::Other: return "other";
    }
    return "?";
}

inline Observable parse_observable(std::string_view s) {
    if (s == "P11") return Observable::P11;
    if (s == "MLE") return Observable::MLE;
    if (s == "SP") return Observable::SP;
    return Observable::Other;
}

struct TimeSeries {
    std::vector<double> times;  // units of hbar / J_E
    std::vector<double> values;
    std::vector<double> std_errors;  // empty unless the estimate is statistical
    Observable observable{Observable::Other};
    std::map<std::string, std::string> meta;

    std::size_t size() const { return times.size(); }
};

// Order-independent accumulation is achieved by reducing stored per-member
// results in member order; Neumaier summation keeps the reduction accurate.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_{0.0};
    double comp_{0.0};
};

// Runs fn(i) for i in [0, n) on up to `workers` threads. fn must only write to slot i.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    const auto w = static_cast<std::size_t>(std::max(1, workers));
    if (w == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < std::min(w, n); ++k) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

// Counter-based uniform variate in [0, 1): a pure function of (seed, stream, counter).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
    h = splitmix64(h ^ (counter * 0xD1B54A32D192ED03ULL));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Lazily enumerates |up_1> (x) |beta_r> for all 2^(2m-1) configurations beta_r.
class ExactTraceStates {
public:
    explicit ExactTraceStates(const LadderSpec& spec, int max_sites = 12) : n_sites_(spec.n_sites()) {
        spec.validate();
        if (n_sites_ > max_sites)
            throw std::length_error("ExactTrace: " + std::to_string(n_sites_) + " sites exceeds the cap of " +
                                    std::to_string(max_sites) + " (2^" + std::to_string(n_sites_ - 1) +
                                    " evolutions); use the RandomPhase ensemble instead");
    }

    int n_sites() const { return n_sites_; }
    std::size_t size() const { return std::size_t{1} << (n_sites_ - 1); }
    BasisCode code(std::size_t i) const { return static_cast<BasisCode>((i << 1) | 1U); }
    StateVector state(std::size_t i) const { return StateVector::basis_state(n_sites_, code(i)); }

private:
    int n_sites_;
};

inline ExactTraceStates exact_trace_states(const LadderSpec& spec, int max_sites = 12) {
    return ExactTraceStates(spec, max_sites);
}

inline StateVector random_phase_state(const LadderSpec& spec, std::uint64_t seed, std::uint64_t realization) {
    spec.validate();
    const int n = spec.n_sites();
    StateVector s(n);
    const auto count = std::size_t{1} << (n - 1);
    const double weight = 1.0 / std::sqrt(static_cast<double>(count));
    for (std::size_t r = 0; r < count; ++r) {
        const double phi = 2.0 * std::numbers::pi * counter_uniform(seed, realization, r);
        s[(r << 1) | 1U] = std::polar(weight, phi);
    }
    return s;
}

class RandomPhaseStates {
public:
    RandomPhaseStates(const LadderSpec& spec, int n_realizations, std::uint64_t seed)
        : spec_(spec), n_(static_cast<std::size_t>(n_realizations)), seed_(seed) {
        if (n_realizations < 1) throw std::invalid_argument("RandomPhase: n_realizations must be >= 1");
    }

    int n_sites() const { return spec_.n_sites(); }
    std::size_t size() const { return n_; }
    StateVector state(std::size_t i) const { return random_phase_state(spec_, seed_, i); }

private:
    LadderSpec spec_;
    std::size_t n_;
    std::uint64_t seed_;
};

template <class S>
concept StateSource = requires(const S& s, std::size_t i) {
    { s.size() } -> std::convertible_to<std::size_t>;
    { s.state(i) } -> std::convertible_to<StateVector>;
};

// A recipe maps one initial state to <S^z_site> sampled at every requested time.
template <class R>
concept EvolutionRecipe = requires(const R& r, const StateVector& s, std::span<const double> times, int site) {
    { r.trajectory(s, times, site) } -> std::convertible_to<std::vector<double>>;
};

template <StateSource Source, EvolutionRecipe Recipe>
TimeSeries polarization_curve(const Source& states, const Recipe& recipe, std::span<const double> times,
                              int site = 1, int workers = 1, Observable observable = Observable::P11) {
    const std::size_t n = states.size();
    if (n == 0) throw std::invalid_argument("polarization_curve: empty ensemble");
    std::vector<std::vector<double>> per_member(n);
    parallel_for(n, workers, [&](std::size_t i) { per_member[i] = recipe.trajectory(states.state(i), times, site); });

    TimeSeries out;
    out.observable = observable;
    out.times.assign(times.begin(), times.end());
    out.values.resize(times.size());
    if (n > 1) out.std_errors.resize(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        CompensatedSum sum;
        for (std::size_t i = 0; i < n; ++i) sum.add(2.0 * per_member[i][k]);
        const double mean = sum.value() / static_cast<double>(n);
        out.values[k] = mean;
        if (n > 1) {
            CompensatedSum sq;
            for (std::size_t i = 0; i < n; ++i) sq.add((2.0 * per_member[i][k] - mean) * (2.0 * per_member[i][k] - mean));
            out.std_errors[k] = std::sqrt(sq.value() / static_cast<double>(n - 1) / static_cast<double>(n));
        }
    }
    return out;
}

}  // namespace spinecho
