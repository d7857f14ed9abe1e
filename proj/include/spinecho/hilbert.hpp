// Ising-basis state vectors and matrix-free Hamiltonian action

#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinecho/model.hpp"

namespace spinecho {

using cplx = std::complex<double>;

// Bit k-1 of a basis code is site k; a set bit is spin up.
using BasisCode = std::uint32_t;

inline BasisCode site_mask(int site) { return BasisCode{1} << (site - 1); }
inline bool spin_up(BasisCode code, int site) { return (code & site_mask(site)) != 0; }
inline int magnetization_label(BasisCode code) { return std::popcount(code); }

class StateVector {
public:
    StateVector() = default;
    explicit StateVector(int n_sites) : n_sites_(n_sites), amps_(Eigen::VectorXcd::Zero(Eigen::Index{1} << n_sites)) {}
    StateVector(int n_sites, Eigen::VectorXcd amps) : n_sites_(n_sites), amps_(std::move(amps)) {
        if (amps_.size() != (Eigen::Index{1} << n_sites))
            throw std::invalid_argument("StateVector: amplitude count does not match 2^n_sites");
    }

    static StateVector basis_state(int n_sites, BasisCode code) {
        StateVector s(n_sites);
        s.amps_[code] = 1.0;
        return s;
    }

    int n_sites() const { return n_sites_; }
    std::size_t dim() const { return static_cast<std::size_t>(amps_.size()); }
    const Eigen::VectorXcd& amplitudes() const { return amps_; }
    Eigen::VectorXcd& amplitudes() { return amps_; }
    cplx operator[](std::size_t i) const { return amps_[static_cast<Eigen::Index>(i)]; }
    cplx& operator[](std::size_t i) { return amps_[static_cast<Eigen::Index>(i)]; }

    double norm() const { return amps_.norm(); }

private:
    int n_sites_{0};
    Eigen::VectorXcd amps_;
};

inline void require_same_space(const StateVector& s, const HamiltonianTerms& h) {
    if (s.n_sites() != h.n_sites)
        throw std::invalid_argument("dimension mismatch: state on " + std::to_string(s.n_sites()) +
                                    " sites, operator on " + std::to_string(h.n_sites));
}

// scale * H |psi>, never materializing H.
inline StateVector apply_terms(const StateVector& state, const HamiltonianTerms& terms, double scale = 1.0) {
    require_same_space(state, terms);
    const auto& in = state.amplitudes();
    StateVector out(state.n_sites());
    auto& res = out.amplitudes();
    const auto dim = static_cast<BasisCode>(state.dim());
    for (const auto& t : terms.terms) {
        const BasisCode ma = site_mask(t.site_a), mb = site_mask(t.site_b);
        const double amp = scale * t.amplitude;
        if (t.kind == TermKind::XYBond) {
            for (BasisCode s = 0; s < dim; ++s) {
                if (((s & ma) != 0) != ((s & mb) != 0)) res[s ^ ma ^ mb] += amp * in[s];
            }
        } else {
            for (BasisCode s = 0; s < dim; ++s) {
                const bool aligned = ((s & ma) != 0) == ((s & mb) != 0);
                res[s] += (aligned ? 0.25 : -0.25) * amp * in[s];
            }
        }
    }
    return out;
}

inline double local_sz(const StateVector& state, int site) {
    if (site < 1 || site > state.n_sites())
        throw std::out_of_range("local_sz: site " + std::to_string(site) + " outside 1.." +
                                std::to_string(state.n_sites()));
    const BasisCode m = site_mask(site);
    const auto& a = state.amplitudes();
    double up = 0.0, down = 0.0;
    for (Eigen::Index s = 0; s < a.size(); ++s) {
        if (static_cast<BasisCode>(s) & m)
            up += std::norm(a[s]);
        else
            down += std::norm(a[s]);
    }
    return 0.5 * (up - down);
}

inline double total_sz(const StateVector& state) {
    const auto& a = state.amplitudes();
    double acc = 0.0;
    for (Eigen::Index s = 0; s < a.size(); ++s)
        acc += std::norm(a[s]) * (magnetization_label(static_cast<BasisCode>(s)) - 0.5 * state.n_sites());
    return acc;
}

struct DenseCap {
    int max_sites{14};
};

// Oracle path only: materializes the full 2^n x 2^n operator.
inline Eigen::MatrixXd dense_matrix(const HamiltonianTerms& terms, DenseCap cap = {}) {
    if (terms.n_sites > cap.max_sites)
        throw std::length_error("dense_matrix: " + std::to_string(terms.n_sites) + " sites exceeds the cap of " +
                                std::to_string(cap.max_sites));
    const auto dim = Eigen::Index{1} << terms.n_sites;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& t : terms.terms) {
        const BasisCode ma = site_mask(t.site_a), mb = site_mask(t.site_b);
        for (BasisCode s = 0; s < static_cast<BasisCode>(dim); ++s) {
            const bool ua = s & ma, ub = s & mb;
            if (t.kind == TermKind::XYBond) {
                if (ua != ub) h(s ^ ma ^ mb, s) += t.amplitude;
            } else {
                h(s, s) += (ua == ub ? 0.25 : -0.25) * t.amplitude;
            }
        }
    }
    return h;
}

inline Eigen::VectorXd total_sz_diagonal(int n_sites) {
    const auto dim = Eigen::Index{1} << n_sites;
    Eigen::VectorXd d(dim);
    for (Eigen::Index s = 0; s < dim; ++s) d[s] = magnetization_label(static_cast<BasisCode>(s)) - 0.5 * n_sites;
    return d;
}

// Basis codes grouped by number of up spins; sector k holds codes with popcount k, ascending.
inline std::vector<std::vector<BasisCode>> magnetization_sectors(int n_sites) {
    std::vector<std::vector<BasisCode>> sectors(static_cast<std::size_t>(n_sites) + 1);
    const auto dim = BasisCode{1} << n_sites;
    for (BasisCode s = 0; s < dim; ++s) sectors[static_cast<std::size_t>(magnetization_label(s))].push_back(s);
    return sectors;
}

// Debug dump: little-endian interleaved (re, im) doubles. Not a stable format.
inline void dump_state(const StateVector& state, const std::string& path) {
    static_assert(std::endian::native == std::endian::little, "dump_state assumes a little-endian host");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("dump_state: cannot open " + path);
    out.write(reinterpret_cast<const char*>(state.amplitudes().data()),
              static_cast<std::streamsize>(state.dim() * sizeof(cplx)));
}

}  // namespace spinecho
