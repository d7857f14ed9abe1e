// Spin-ladder geometry, couplings and the staged Hamiltonians of the echo protocol

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spinecho {

enum class Boundary { Open, Ring };

inline std::string_view to_string(Boundary b) { return b == Boundary::Ring ? "ring" : "open"; }

// Sites are numbered 1..2m: the system leg holds 1..m, the environment leg
// m+1..2m, and rung n joins n with n+m.
struct LadderSpec {
    int m{5};
    Boundary boundary{Boundary::Ring};

    int n_sites() const { return 2 * m; }
    std::size_t dim() const { return std::size_t{1} << n_sites(); }

    void validate() const {
        if (m < 2) throw std::invalid_argument("LadderSpec: m must be >= 2 (got " + std::to_string(m) + ")");
        if (m > 15) throw std::invalid_argument("LadderSpec: m > 15 does not fit the basis index");
    }
};

// Energies in units of J_E with hbar = 1.
struct Couplings {
    double j_s{1.0};
    double j_e{1.0};
    double j_se{0.1};
    double alpha{0.0};

    static constexpr double xy_alpha = 0.0;
    static constexpr double heisenberg_alpha = -0.5;
    static constexpr double dipolar_alpha = 1.0;

    void validate() const {
        if (!std::isfinite(j_s) || !std::isfinite(j_e) || !std::isfinite(j_se) || !std::isfinite(alpha))
            throw std::invalid_argument("Couplings: all couplings must be finite");
    }

    // True outside the weak-coupling regime |J_SE| < |J_E| the decay laws assume.
    bool strong_coupling() const { return std::abs(j_se) > std::abs(j_e); }
};

enum class TermKind { XYBond, ZZBond };
enum class Stage { SystemLeg, EnvironmentLeg, Rung };
enum class Leg { System, Environment };

// XYBond(a, b, J): J (S+_a S-_b + S-_a S+_b).  ZZBond(a, b, K): K S^z_a S^z_b.
struct Term {
    TermKind kind;
    int site_a;
    int site_b;
    double amplitude;
    Stage stage;

    bool operator==(const Term&) const = default;
};

struct HamiltonianTerms {
    int n_sites{0};
    std::vector<Term> terms;

    std::size_t size() const { return terms.size(); }
    bool empty() const { return terms.empty(); }

    double max_abs_amplitude() const {
        double r = 0.0;
        for (const auto& t : terms) r = std::max(r, std::abs(t.amplitude));
        return r;
    }

    void validate() const {
        for (const auto& t : terms) {
            if (t.site_a == t.site_b || t.site_a < 1 || t.site_b < 1 || t.site_a > n_sites || t.site_b > n_sites)
                throw std::invalid_argument("HamiltonianTerms: term must couple two distinct sites in 1.." +
                                            std::to_string(n_sites));
            if (!std::isfinite(t.amplitude)) throw std::invalid_argument("HamiltonianTerms: non-finite amplitude");
        }
    }

    HamiltonianTerms& operator+=(const HamiltonianTerms& other) {
        if (n_sites == 0) n_sites = other.n_sites;
        if (other.n_sites != 0 && other.n_sites != n_sites)
            throw std::invalid_argument("HamiltonianTerms: cannot combine operators on different site counts");
        terms.insert(terms.end(), other.terms.begin(), other.terms.end());
        return *this;
    }

    friend HamiltonianTerms operator+(HamiltonianTerms a, const HamiltonianTerms& b) { return a += b; }

    HamiltonianTerms scaled_stage(Stage stage, double factor) const {
        HamiltonianTerms out = *this;
        for (auto& t : out.terms)
            if (t.stage == stage) t.amplitude *= factor;
        return out;
    }

    HamiltonianTerms only(Stage stage) const {
        HamiltonianTerms out{n_sites, {}};
        for (const auto& t : terms)
            if (t.stage == stage) out.terms.push_back(t);
        return out;
    }
};

// Nearest-neighbour flip-flop chain on one leg: J/2 (S+S- + S-S+) per bond.
inline HamiltonianTerms build_leg(const LadderSpec& spec, double j, Leg leg) {
    spec.validate();
    const int offset = leg == Leg::System ? 0 : spec.m;
    const Stage stage = leg == Leg::System ? Stage::SystemLeg : Stage::EnvironmentLeg;
    const int n_bonds = spec.boundary == Boundary::Ring ? spec.m : spec.m - 1;
    HamiltonianTerms h{spec.n_sites(), {}};
    h.terms.reserve(static_cast<std::size_t>(n_bonds));
    for (int n = 1; n <= n_bonds; ++n) {
        const int a = offset + n;
        const int b = offset + (n % spec.m) + 1;
        h.terms.push_back({TermKind::XYBond, a, b, j / 2.0, stage});
    }
    return h;
}

// J_SE [2 alpha S^z S^z - 1/2 (S+S- + S-S+)] on every rung. Rungs ignore the leg boundary.
inline HamiltonianTerms build_rungs(const LadderSpec& spec, double j_se, double alpha) {
    spec.validate();
    HamiltonianTerms h{spec.n_sites(), {}};
    for (int n = 1; n <= spec.m; ++n) {
        if (alpha != 0.0) h.terms.push_back({TermKind::ZZBond, n, n + spec.m, 2.0 * alpha * j_se, Stage::Rung});
        h.terms.push_back({TermKind::XYBond, n, n + spec.m, -j_se / 2.0, Stage::Rung});
    }
    return h;
}

struct StagedHamiltonians {
    HamiltonianTerms forward;   // H_S + H_E + V_SE
    HamiltonianTerms backward;  // -H_S + H_E + V_SE
};

inline HamiltonianTerms total_hamiltonian(const LadderSpec& spec, const Couplings& c) {
    c.validate();
    return build_leg(spec, c.j_s, Leg::System) + build_leg(spec, c.j_e, Leg::Environment) +
           build_rungs(spec, c.j_se, c.alpha);
}

inline StagedHamiltonians stage_hamiltonians(const LadderSpec& spec, const Couplings& c) {
    auto forward = total_hamiltonian(spec, c);
    auto backward = forward.scaled_stage(Stage::SystemLeg, -1.0);
    return {std::move(forward), std::move(backward)};
}

}  // namespace spinecho
