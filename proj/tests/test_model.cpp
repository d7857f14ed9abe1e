#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

#include "spinecho/hilbert.hpp"
#include "spinecho/model.hpp"

using namespace spinecho;

namespace {

std::set<std::pair<int, int>> bond_pairs(const HamiltonianTerms& h) {
    std::set<std::pair<int, int>> out;
    for (const auto& t : h.terms) out.insert({std::min(t.site_a, t.site_b), std::max(t.site_a, t.site_b)});
    return out;
}

int count_kind(const HamiltonianTerms& h, TermKind k) {
    int n = 0;
    for (const auto& t : h.terms) n += t.kind == k;
    return n;
}

}  // namespace

TEST(LadderSpec, SizesFollowRungCount) {
    LadderSpec s{5, Boundary::Ring};
    EXPECT_EQ(s.n_sites(), 10);
    EXPECT_EQ(s.dim(), 1024u);
}

TEST(LadderSpec, RejectsTooFewRungs) {
    EXPECT_THROW((LadderSpec{1, Boundary::Open}.validate()), std::invalid_argument);
    EXPECT_THROW((LadderSpec{-3, Boundary::Ring}.validate()), std::invalid_argument);
    EXPECT_NO_THROW((LadderSpec{2, Boundary::Open}.validate()));
}

TEST(Couplings, PresetsAndValidation) {
    EXPECT_EQ(Couplings::xy_alpha, 0.0);
    EXPECT_EQ(Couplings::heisenberg_alpha, -0.5);
    EXPECT_EQ(Couplings::dipolar_alpha, 1.0);
    Couplings c;
    c.j_se = std::numeric_limits<double>::infinity();
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c.j_se = std::nan("");
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Couplings, StrongCouplingFlag) {
    Couplings c;
    c.j_se = 0.5;
    EXPECT_FALSE(c.strong_coupling());
    c.j_se = 1.5;
    EXPECT_TRUE(c.strong_coupling());
}

TEST(BuildLeg, TwoSiteOpenChain) {
    const auto h = build_leg({2, Boundary::Open}, 1.0, Leg::System);
    ASSERT_EQ(h.size(), 1u);
    EXPECT_EQ(h.terms[0].kind, TermKind::XYBond);
    EXPECT_EQ(h.terms[0].site_a, 1);
    EXPECT_EQ(h.terms[0].site_b, 2);
    EXPECT_DOUBLE_EQ(h.terms[0].amplitude, 0.5);
}

TEST(BuildLeg, ThreeSiteRingCloses) {
    const auto h = build_leg({3, Boundary::Ring}, 1.0, Leg::System);
    EXPECT_EQ(h.size(), 3u);
    EXPECT_EQ(bond_pairs(h), (std::set<std::pair<int, int>>{{1, 2}, {2, 3}, {1, 3}}));
}

TEST(BuildLeg, EnvironmentLegIsOffset) {
    const auto h = build_leg({5, Boundary::Ring}, 1.0, Leg::Environment);
    EXPECT_EQ(h.size(), 5u);
    for (const auto& t : h.terms) {
        EXPECT_GE(std::min(t.site_a, t.site_b), 6);
        EXPECT_LE(std::max(t.site_a, t.site_b), 10);
        EXPECT_EQ(t.stage, Stage::EnvironmentLeg);
    }
}

TEST(BuildLeg, OpenChainHasOneBondFewer) {
    for (int m = 2; m <= 7; ++m) {
        EXPECT_EQ(build_leg({m, Boundary::Open}, 1.0, Leg::System).size(), static_cast<std::size_t>(m - 1));
        EXPECT_EQ(build_leg({m, Boundary::Ring}, 1.0, Leg::System).size(), static_cast<std::size_t>(m));
    }
}

TEST(BuildRungs, XYOnlyWhenAlphaZero) {
    const auto h = build_rungs({4, Boundary::Ring}, 0.3, 0.0);
    EXPECT_EQ(count_kind(h, TermKind::ZZBond), 0);
    EXPECT_EQ(count_kind(h, TermKind::XYBond), 4);
    for (const auto& t : h.terms) {
        EXPECT_DOUBLE_EQ(t.amplitude, -0.15);
        EXPECT_EQ(t.site_b - t.site_a, 4);
    }
}

TEST(BuildRungs, IsingMatrixElement) {
    // <up up| V |up up> on one rung with alpha = 1, j_se = 0.1.
    const auto h = build_rungs({2, Boundary::Open}, 0.1, 1.0);
    HamiltonianTerms rung1{h.n_sites, {}};
    for (const auto& t : h.terms)
        if (t.site_a == 1 || t.site_b == 1) rung1.terms.push_back(t);
    const auto dense = dense_matrix(rung1);
    const BasisCode both_up = site_mask(1) | site_mask(3);  // sites 2 and 4 down
    EXPECT_NEAR(dense(both_up, both_up), 0.05, 1e-15);
}

TEST(BuildRungs, HeisenbergRatio) {
    const auto h = build_rungs({3, Boundary::Ring}, 0.2, -0.5);
    double zz = 0, xy = 0;
    for (const auto& t : h.terms) (t.kind == TermKind::ZZBond ? zz : xy) = t.amplitude;
    EXPECT_DOUBLE_EQ(zz / xy, 2.0);
}

TEST(StageHamiltonians, BackwardNegatesOnlySystemLeg) {
    const LadderSpec spec{4, Boundary::Ring};
    Couplings c;
    c.j_se = 0.3;
    c.alpha = 1.0;
    const auto st = stage_hamiltonians(spec, c);
    ASSERT_EQ(st.forward.size(), st.backward.size());
    for (std::size_t i = 0; i < st.forward.size(); ++i) {
        const auto& f = st.forward.terms[i];
        const auto& b = st.backward.terms[i];
        EXPECT_EQ(f.site_a, b.site_a);
        EXPECT_EQ(f.stage, b.stage);
        EXPECT_DOUBLE_EQ(b.amplitude, f.stage == Stage::SystemLeg ? -f.amplitude : f.amplitude);
    }
}

TEST(StageHamiltonians, NoSystemCouplingMeansNoReversal) {
    const LadderSpec spec{3, Boundary::Ring};
    Couplings c;
    c.j_s = 0.0;
    c.alpha = 0.7;
    const auto st = stage_hamiltonians(spec, c);
    EXPECT_TRUE((dense_matrix(st.forward) - dense_matrix(st.backward)).isZero(0.0));
}

TEST(StageHamiltonians, DecoupledStagesDifferOnlyBySystemSign) {
    const LadderSpec spec{3, Boundary::Open};
    Couplings c;
    c.j_se = 0.0;
    const auto st = stage_hamiltonians(spec, c);
    const auto sys = dense_matrix(st.forward.only(Stage::SystemLeg));
    EXPECT_TRUE((dense_matrix(st.forward) - dense_matrix(st.backward) - 2.0 * sys).isZero(1e-15));
}

TEST(StageHamiltonians, TermCountRingDipolar) {
    Couplings c;
    c.alpha = 1.0;
    EXPECT_EQ(stage_hamiltonians({5, Boundary::Ring}, c).forward.size(), 20u);
}

TEST(HamiltonianTerms, TotalIsSumOfStages) {
    const LadderSpec spec{3, Boundary::Ring};
    Couplings c;
    c.j_se = 0.4;
    c.alpha = -0.5;
    const auto h = total_hamiltonian(spec, c);
    const auto sum = h.only(Stage::SystemLeg) + h.only(Stage::EnvironmentLeg) + h.only(Stage::Rung);
    EXPECT_TRUE((dense_matrix(h) - dense_matrix(sum)).isZero(1e-15));
}

TEST(HamiltonianTerms, RejectsInvalidTerms) {
    HamiltonianTerms h{4, {{TermKind::XYBond, 2, 2, 1.0, Stage::Rung}}};
    EXPECT_THROW(h.validate(), std::invalid_argument);
    h.terms[0] = {TermKind::ZZBond, 1, 5, 1.0, Stage::Rung};
    EXPECT_THROW(h.validate(), std::invalid_argument);
    HamiltonianTerms other{6, {}};
    EXPECT_THROW(h += other, std::invalid_argument);
}

// Property: every assembled operator is real symmetric and conserves total S^z.
TEST(HamiltonianTerms, HermitianAndMagnetizationConserving) {
    for (auto b : {Boundary::Open, Boundary::Ring})
        for (int m : {2, 3, 4})
            for (double alpha : {0.0, -0.5, 1.0}) {
                Couplings c{0.8, 1.3, 0.37, alpha};
                const auto h = dense_matrix(total_hamiltonian({m, b}, c));
                EXPECT_TRUE(h.isApprox(h.transpose(), 1e-15));
                const Eigen::MatrixXd sz = total_sz_diagonal(2 * m).asDiagonal();
                EXPECT_TRUE((h * sz - sz * h).isZero(1e-13)) << "m=" << m << " alpha=" << alpha;
            }
}

TEST(HamiltonianTerms, TwoRungRingDoublesTheBond) {
    const auto h = build_leg({2, Boundary::Ring}, 1.0, Leg::System);
    EXPECT_EQ(h.size(), 2u);
    EXPECT_EQ(bond_pairs(h).size(), 1u);
}
