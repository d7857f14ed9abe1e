#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "spinecho/ensemble.hpp"
#include "spinecho/hilbert.hpp"
#include "spinecho/model.hpp"

using namespace spinecho;

namespace {

// A single rung (sites 1, 2) as a bare two-site operator.
HamiltonianTerms single_rung(double j_se, double alpha) {
    HamiltonianTerms h{2, {{TermKind::XYBond, 1, 2, -j_se / 2.0, Stage::Rung}}};
    if (alpha != 0.0) h.terms.push_back({TermKind::ZZBond, 1, 2, 2.0 * alpha * j_se, Stage::Rung});
    return h;
}

StateVector random_state(int n_sites, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    StateVector s(n_sites);
    for (std::size_t i = 0; i < s.dim(); ++i) s[i] = {g(rng), g(rng)};
    s.amplitudes().normalize();
    return s;
}

}  // namespace

TEST(Basis, BitEncoding) {
    EXPECT_EQ(site_mask(1), 1u);
    EXPECT_EQ(site_mask(4), 8u);
    EXPECT_TRUE(spin_up(0b0101u, 3));
    EXPECT_FALSE(spin_up(0b0101u, 2));
    EXPECT_EQ(magnetization_label(0b1011u), 3);
}

TEST(Basis, SectorsPartitionTheSpace) {
    const auto sectors = magnetization_sectors(6);
    std::size_t total = 0;
    for (std::size_t k = 0; k < sectors.size(); ++k) {
        for (BasisCode c : sectors[k]) EXPECT_EQ(magnetization_label(c), static_cast<int>(k));
        total += sectors[k].size();
    }
    EXPECT_EQ(total, 64u);
    EXPECT_EQ(sectors[3].size(), 20u);
}

TEST(ApplyTerms, FlipFlop) {
    HamiltonianTerms h{2, {{TermKind::XYBond, 1, 2, 0.5, Stage::SystemLeg}}};
    const auto psi = StateVector::basis_state(2, site_mask(1));  // up_1 down_2
    const auto out = apply_terms(psi, h);
    EXPECT_NEAR(std::abs(out[site_mask(2)] - cplx{0.5, 0.0}), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(out[site_mask(1)]), 0.0, 1e-15);
}

TEST(ApplyTerms, IsingAligned) {
    const double alpha = 0.7, j_se = 0.3;
    HamiltonianTerms h{2, {{TermKind::ZZBond, 1, 2, 2 * alpha * j_se, Stage::Rung}}};
    const auto out = apply_terms(StateVector::basis_state(2, 0b11u), h);
    EXPECT_NEAR(out[0b11u].real(), alpha * j_se / 2.0, 1e-15);
}

TEST(ApplyTerms, PolarizedStateIsXYDark) {
    const LadderSpec spec{3, Boundary::Ring};
    HamiltonianTerms xy = build_leg(spec, 1.0, Leg::System) + build_leg(spec, 0.7, Leg::Environment) +
                          build_rungs(spec, 0.4, 0.0);
    const auto out = apply_terms(StateVector::basis_state(6, 0b111111u), xy);
    EXPECT_NEAR(out.amplitudes().norm(), 0.0, 1e-15);
}

TEST(ApplyTerms, ScaleAndDimensionCheck) {
    const auto h = single_rung(1.0, 1.0);
    const auto psi = random_state(2, 3);
    EXPECT_TRUE(apply_terms(psi, h, -2.0).amplitudes().isApprox(-2.0 * apply_terms(psi, h).amplitudes()));
    EXPECT_THROW(apply_terms(random_state(3, 1), h), std::invalid_argument);
}

TEST(LocalSz, ProductAndSuperposition) {
    EXPECT_DOUBLE_EQ(local_sz(StateVector::basis_state(4, 0b0001u), 1), 0.5);
    EXPECT_DOUBLE_EQ(local_sz(StateVector::basis_state(4, 0b0001u), 2), -0.5);
    StateVector s(3);
    s[0b100u] = 1.0 / std::sqrt(2.0);
    s[0b101u] = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(local_sz(s, 1), 0.0, 1e-15);
    EXPECT_THROW(local_sz(s, 0), std::out_of_range);
    EXPECT_THROW(local_sz(s, 4), std::out_of_range);
}

TEST(LocalSz, RandomPhaseStateHasSiteOneUp) {
    const LadderSpec spec{3, Boundary::Ring};
    for (std::uint64_t r = 0; r < 5; ++r) EXPECT_NEAR(local_sz(random_phase_state(spec, 99, r), 1), 0.5, 1e-14);
}

TEST(DenseMatrix, SingleRung) {
    const auto h = dense_matrix(single_rung(1.0, 1.0));
    // ZZ diagonal (1/2, -1/2, -1/2, 1/2) and XY element -1/2 between up-down and down-up.
    EXPECT_DOUBLE_EQ(h(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(h(1, 1), -0.5);
    EXPECT_DOUBLE_EQ(h(2, 2), -0.5);
    EXPECT_DOUBLE_EQ(h(3, 3), 0.5);
    EXPECT_DOUBLE_EQ(h(1, 2), -0.5);
    EXPECT_DOUBLE_EQ(h(2, 1), -0.5);
    EXPECT_DOUBLE_EQ(h(0, 3), 0.0);
}

// Property: the dense operator and the matrix-free action agree on random states.
TEST(DenseMatrix, MatchesMatrixFree) {
    unsigned seed = 1;
    for (auto b : {Boundary::Open, Boundary::Ring})
        for (int m : {2, 3, 4})
            for (double alpha : {0.0, -0.5, 1.0}) {
                const auto h = total_hamiltonian({m, b}, Couplings{0.9, 1.1, 0.33, alpha});
                const auto psi = random_state(2 * m, seed++);
                const Eigen::VectorXcd dense = dense_matrix(h).cast<cplx>() * psi.amplitudes();
                EXPECT_LE((dense - apply_terms(psi, h).amplitudes()).cwiseAbs().maxCoeff(), 1e-12);
            }
}

TEST(DenseMatrix, XYOnlyIsTraceless) {
    const LadderSpec spec{3, Boundary::Ring};
    const auto xy = build_leg(spec, 1.0, Leg::System) + build_rungs(spec, 0.5, 0.0);
    EXPECT_NEAR(dense_matrix(xy).trace(), 0.0, 1e-15);
}

TEST(DenseMatrix, CapEnforced) {
    const auto h = total_hamiltonian({4, Boundary::Ring}, Couplings{});
    EXPECT_THROW(dense_matrix(h, DenseCap{6}), std::length_error);
}

TEST(StateVector, DumpIsInterleavedLittleEndian) {
    StateVector s(2);
    s[1] = {0.25, -1.5};
    const auto path = std::filesystem::temp_directory_path() / "spinecho_dump_test.bin";
    dump_state(s, path.string());
    std::ifstream in(path, std::ios::binary);
    std::vector<double> data(8);
    in.read(reinterpret_cast<char*>(data.data()), 8 * sizeof(double));
    EXPECT_EQ(in.gcount(), static_cast<std::streamsize>(8 * sizeof(double)));
    EXPECT_EQ(data[2], 0.25);
    EXPECT_EQ(data[3], -1.5);
    std::filesystem::remove(path);
}

TEST(StateVector, TotalSz) {
    EXPECT_DOUBLE_EQ(total_sz(StateVector::basis_state(4, 0b0111u)), 1.0);
    EXPECT_DOUBLE_EQ(total_sz(StateVector::basis_state(4, 0b0000u)), -2.0);
}
