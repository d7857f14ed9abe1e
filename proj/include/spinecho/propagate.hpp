// Exact (sector-blocked spectral) and Trotter-Suzuki time evolution

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "spinecho/diagnostics.hpp"
#include "spinecho/hilbert.hpp"
#include "spinecho/model.hpp"

namespace spinecho {

enum class Method { ExactSpectral, Trotter2, Trotter4 };

inline std::string_view to_string(Method m) {
    switch (m) {
        case Method::ExactSpectral: return "exact";
        case Method::Trotter2: return "trotter2";
        case Method::Trotter4: return "trotter4";
    }
    return "?";
}

inline Method parse_method(std::string_view s) {
    if (s == "exact" || s == "spectral") return Method::ExactSpectral;
    if (s == "trotter2") return Method::Trotter2;
    if (s == "trotter4") return Method::Trotter4;
    throw std::invalid_argument("unknown method '" + std::string(s) + "' (expected exact, trotter2 or trotter4)");
}

struct EvolutionConfig {
    Method method{Method::ExactSpectral};
    double dt{0.01};
    double t_max{500.0};
    int sample_stride{1};
    int spectral_max_sites{14};

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("EvolutionConfig: dt must be positive");
        if (!(t_max >= 0.0)) throw std::invalid_argument("EvolutionConfig: t_max must be non-negative");
        if (sample_stride < 1) throw std::invalid_argument("EvolutionConfig: sample_stride must be >= 1");
    }
};

// One magnetization block of an exactly diagonalized Hamiltonian.
struct SpectralSector {
    std::vector<BasisCode> codes;
    Eigen::MatrixXd vectors;  // columns are eigenvectors
    Eigen::VectorXd energies;
};

// Real symmetric block of H restricted to the codes of one magnetization sector.
inline Eigen::MatrixXd sector_block(const HamiltonianTerms& terms, const std::vector<BasisCode>& codes,
                                    const std::vector<int>& position) {
    const auto n = static_cast<Eigen::Index>(codes.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (const auto& t : terms.terms) {
        const BasisCode ma = site_mask(t.site_a), mb = site_mask(t.site_b);
        for (Eigen::Index i = 0; i < n; ++i) {
            const BasisCode s = codes[static_cast<std::size_t>(i)];
            const bool ua = s & ma, ub = s & mb;
            if (t.kind == TermKind::XYBond) {
                if (ua != ub) h(position[s ^ ma ^ mb], i) += t.amplitude;
            } else {
                h(i, i) += (ua == ub ? 0.25 : -0.25) * t.amplitude;
            }
        }
    }
    return h;
}

class SpectralPropagator {
public:
    SpectralPropagator(const HamiltonianTerms& terms, int max_sites) : n_sites_(terms.n_sites) {
        terms.validate();
        if (n_sites_ > max_sites)
            throw std::length_error("ExactSpectral: " + std::to_string(n_sites_) + " sites exceeds the cap of " +
                                    std::to_string(max_sites) + "; use a Trotter method");
        auto sectors = magnetization_sectors(n_sites_);
        std::vector<int> position(std::size_t{1} << n_sites_, 0);
        for (const auto& codes : sectors)
            for (std::size_t i = 0; i < codes.size(); ++i) position[codes[i]] = static_cast<int>(i);
        for (auto& codes : sectors) {
            SpectralSector sec;
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sector_block(terms, codes, position));
            if (solver.info() != Eigen::Success)
                throw std::runtime_error("ExactSpectral: eigendecomposition did not converge in sector of size " +
                                         std::to_string(codes.size()));
            sec.codes = std::move(codes);
            sec.vectors = solver.eigenvectors();
            sec.energies = solver.eigenvalues();
            sectors_.push_back(std::move(sec));
        }
    }

    int n_sites() const { return n_sites_; }
    const std::vector<SpectralSector>& sectors() const { return sectors_; }

    StateVector evolve(const StateVector& state, double t) const {
        if (state.n_sites() != n_sites_) throw std::invalid_argument("evolve: state/propagator dimension mismatch");
        StateVector out(n_sites_);
        const auto& in = state.amplitudes();
        auto& res = out.amplitudes();
        for (const auto& sec : sectors_) {
            const auto n = static_cast<Eigen::Index>(sec.codes.size());
            Eigen::VectorXcd local(n);
            bool any = false;
            for (Eigen::Index i = 0; i < n; ++i) {
                local[i] = in[sec.codes[static_cast<std::size_t>(i)]];
                any = any || local[i] != cplx{};
            }
            if (!any) continue;
            Eigen::VectorXcd coeff = sec.vectors.transpose() * local;
            for (Eigen::Index k = 0; k < n; ++k) coeff[k] *= std::polar(1.0, -sec.energies[k] * t);
            local = sec.vectors * coeff;
            for (Eigen::Index i = 0; i < n; ++i) res[sec.codes[static_cast<std::size_t>(i)]] = local[i];
        }
        return out;
    }

private:
    int n_sites_;
    std::vector<SpectralSector> sectors_;
};

// Exact exponential of xy (S+S- + h.c.) + zz S^z S^z on one pair of sites.
struct TwoSiteGate {
    BasisCode mask_a;
    BasisCode mask_b;
    double xy;
    double zz;

    void apply(Eigen::VectorXcd& psi, double tau) const {
        const cplx aligned = std::polar(1.0, -0.25 * zz * tau);
        const cplx anti = std::polar(1.0, 0.25 * zz * tau);
        const cplx c = anti * std::cos(xy * tau);
        const cplx s = anti * cplx{0.0, -std::sin(xy * tau)};
        const auto dim = static_cast<BasisCode>(psi.size());
        for (BasisCode st = 0; st < dim; ++st) {
            const bool ua = st & mask_a, ub = st & mask_b;
            if (ua == ub) {
                if (zz != 0.0) psi[st] *= aligned;
            } else if (ua) {
                const BasisCode partner = st ^ mask_a ^ mask_b;
                const cplx x = psi[st], y = psi[partner];
                psi[st] = c * x + s * y;
                psi[partner] = s * x + c * y;
            }
        }
    }
};

// Splits the terms into groups of site-disjoint gates. Within one stage the
// gates are tried as a single group, then as alternating (even/odd) groups,
// and otherwise each gate becomes its own group.
inline std::vector<std::vector<TwoSiteGate>> trotter_groups(const HamiltonianTerms& terms) {
    std::vector<Stage> stage_order;
    std::map<Stage, std::vector<TwoSiteGate>> by_stage;
    std::map<std::tuple<Stage, int, int>, std::size_t> index;
    for (const auto& t : terms.terms) {
        const int a = std::min(t.site_a, t.site_b), b = std::max(t.site_a, t.site_b);
        auto& gates = by_stage[t.stage];
        if (gates.empty() && std::find(stage_order.begin(), stage_order.end(), t.stage) == stage_order.end())
            stage_order.push_back(t.stage);
        auto key = std::make_tuple(t.stage, a, b);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, gates.size()).first;
            gates.push_back({site_mask(a), site_mask(b), 0.0, 0.0});
        }
        auto& g = gates[it->second];
        (t.kind == TermKind::XYBond ? g.xy : g.zz) += t.amplitude;
    }

    auto disjoint = [](const std::vector<TwoSiteGate>& group) {
        BasisCode used = 0;
        for (const auto& g : group) {
            if (used & (g.mask_a | g.mask_b)) return false;
            used |= g.mask_a | g.mask_b;
        }
        return true;
    };

    std::vector<std::vector<TwoSiteGate>> groups;
    for (Stage st : stage_order) {
        const auto& gates = by_stage[st];
        if (disjoint(gates)) {
            groups.push_back(gates);
            continue;
        }
        std::vector<TwoSiteGate> even, odd;
        for (std::size_t i = 0; i < gates.size(); ++i) (i % 2 == 0 ? even : odd).push_back(gates[i]);
        if (disjoint(even) && disjoint(odd)) {
            groups.push_back(std::move(even));
            groups.push_back(std::move(odd));
            continue;
        }
        for (const auto& g : gates) groups.push_back({g});
    }
    return groups;
}

class TrotterPropagator {
public:
    TrotterPropagator(const HamiltonianTerms& terms, Method order, double dt)
        : n_sites_(terms.n_sites), order_(order), dt_(dt), groups_(trotter_groups(terms)) {
        terms.validate();
        if (!(dt > 0.0)) throw std::invalid_argument("Trotter: dt must be positive");
    }

    int n_sites() const { return n_sites_; }
    double dt() const { return dt_; }
    const std::vector<std::vector<TwoSiteGate>>& groups() const { return groups_; }

    StateVector evolve(const StateVector& state, double t) const {
        if (state.n_sites() != n_sites_) throw std::invalid_argument("evolve: state/propagator dimension mismatch");
        StateVector out = state;
        if (t == 0.0 || groups_.empty()) return out;
        const double ratio = std::abs(t) / dt_;
        const auto steps = static_cast<long>(std::max(1.0, std::round(ratio)));
        double step = t / static_cast<double>(steps);
        if (std::abs(static_cast<double>(steps) - ratio) > 1e-9 * std::max(1.0, ratio))
            warn("Trotter: t = " + std::to_string(t) + " is not a multiple of dt = " + std::to_string(dt_) +
                 "; using " + std::to_string(steps) + " steps of " + std::to_string(step));
        auto& psi = out.amplitudes();
        for (long k = 0; k < steps; ++k) {
            if (order_ == Method::Trotter2) {
                strang_step(psi, step);
            } else {
                const double w = 1.0 / (2.0 - std::cbrt(2.0));
                strang_step(psi, w * step);
                strang_step(psi, (1.0 - 2.0 * w) * step);
                strang_step(psi, w * step);
            }
        }
        return out;
    }

private:
    void strang_step(Eigen::VectorXcd& psi, double tau) const {
        const std::size_t k = groups_.size();
        for (std::size_t i = 0; i + 1 < k; ++i)
            for (const auto& g : groups_[i]) g.apply(psi, 0.5 * tau);
        for (const auto& g : groups_[k - 1]) g.apply(psi, tau);
        for (std::size_t i = k - 1; i-- > 0;)
            for (const auto& g : groups_[i]) g.apply(psi, 0.5 * tau);
    }

    int n_sites_;
    Method order_;
    double dt_;
    std::vector<std::vector<TwoSiteGate>> groups_;
};

// exp(-i H t) for a fixed H and method. Immutable once prepared.
class Propagator {
public:
    explicit Propagator(SpectralPropagator p) : impl_(std::move(p)) {}
    explicit Propagator(TrotterPropagator p) : impl_(std::move(p)) {}

    StateVector evolve(const StateVector& state, double t) const {
        return std::visit([&](const auto& p) { return p.evolve(state, t); }, impl_);
    }

    int n_sites() const {
        return std::visit([](const auto& p) { return p.n_sites(); }, impl_);
    }

    const SpectralPropagator* spectral() const { return std::get_if<SpectralPropagator>(&impl_); }
    const TrotterPropagator* trotter() const { return std::get_if<TrotterPropagator>(&impl_); }

private:
    std::variant<SpectralPropagator, TrotterPropagator> impl_;
};

inline Propagator prepare(const HamiltonianTerms& terms, const EvolutionConfig& config) {
    config.validate();
    if (config.method == Method::ExactSpectral) return Propagator(SpectralPropagator(terms, config.spectral_max_sites));
    return Propagator(TrotterPropagator(terms, config.method, config.dt));
}

inline StateVector evolve(const Propagator& prop, const StateVector& state, double t) { return prop.evolve(state, t); }

}  // namespace spinecho
