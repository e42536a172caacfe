#include <gtest/gtest.h>

#include <cmath>

#include "tbsim/reduction.hpp"

using namespace tbsim;

TEST(Reduction, TwoByTwoCornerIsExact) {
    const auto chain = column_reduce(build_grid(2, 2, 1.0), 0);
    ASSERT_EQ(chain.nodes(), 3u);
    EXPECT_EQ(chain.shell_sizes(), (std::vector<std::size_t>{1, 2, 1}));
    ASSERT_EQ(chain.couplings.size(), 2u);
    EXPECT_NEAR(chain.couplings[0], std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(chain.couplings[1], std::sqrt(2.0), 1e-15);
    EXPECT_LT(verify_reduction(build_grid(2, 2, 1.0), 0, uniform_grid(0, 10, 0.05)), 1e-10);
}

TEST(Reduction, ChainFromEdgeIsItself) {
    const auto spec = build_chain(6, 1.0).with_bond_couplings({1, 2, 3, 4, 5});
    const auto chain = column_reduce(spec, 0);
    EXPECT_EQ(chain.couplings, (std::vector<double>{1, 2, 3, 4, 5}));
    EXPECT_LT(verify_reduction(spec, 0, uniform_grid(0, 10, 0.1)), 1e-10);
}

TEST(Reduction, ChainFromCenterFoldsSymmetrically) {
    const auto spec = build_chain(5, 1.0);
    const auto chain = column_reduce(spec, 2);
    EXPECT_EQ(chain.shell_sizes(), (std::vector<std::size_t>{1, 2, 2}));
    EXPECT_NEAR(chain.couplings[0], std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(chain.couplings[1], 1.0, 1e-15);
    EXPECT_LT(verify_reduction(spec, 2, uniform_grid(0, 10, 0.1)), 1e-10);
}

TEST(Reduction, ThreeByThreeCornerIsNotInvariant) {
    // The middle site of shell 2 has two bonds back to shell 1, the outer
    // sites one each, so uniform shell states are not closed under H.
    const auto g = build_grid(3, 3, 1.0);
    try {
        column_reduce(g, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotReducible);
    }
    const auto proj = project_shells(g, 0);
    EXPECT_NEAR(proj.leakage, std::sqrt(2.0) / 3.0, 1e-12);
    EXPECT_NEAR(proj.chain.couplings[0], std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(proj.chain.couplings[1], 4.0 / std::sqrt(6.0), 1e-15);
    EXPECT_NEAR(proj.chain.couplings[2], 4.0 / std::sqrt(6.0), 1e-15);
    EXPECT_NEAR(proj.chain.couplings[3], std::sqrt(2.0), 1e-15);
    EXPECT_GT(shell_deviation(g, 0, proj.chain, uniform_grid(0, 10, 0.1)), 0.1);
}

TEST(Reduction, BrokenSymmetryIsRejected) {
    EXPECT_THROW(column_reduce(apply_disorder(build_grid(2, 2, 1.0), {1.0, 3, 0}), 0), Error);
    EXPECT_THROW(column_reduce(build_grid(2, 2, 1.0).with_coupling(0, 1, 2.0), 0), Error);
    EXPECT_THROW(column_reduce(build_grid(3, 3, 1.0), 1), Error);
    // Centre root: every shell member sees the same bond counts.
    const auto centre = column_reduce(build_grid(3, 3, 1.0), 4);
    ASSERT_EQ(centre.couplings.size(), 2u);
    EXPECT_NEAR(centre.couplings[0], 2.0, 1e-12);
    EXPECT_NEAR(centre.couplings[1], 2.0, 1e-12);
}

TEST(Reduction, IsotropicStarkKeepsReducibility) {
    const auto spec = apply_stark(build_grid(2, 2, 1.0), {1.5, 1.5, std::nullopt});
    const auto chain = column_reduce(spec, 0);
    EXPECT_NEAR(chain.detunings[0], 0.0, 1e-15);
    EXPECT_NEAR(chain.detunings[1], 1.5, 1e-15);
    EXPECT_NEAR(chain.detunings[2], 3.0, 1e-15);
    EXPECT_LT(verify_reduction(spec, 0, uniform_grid(0, 10, 0.1)), 1e-10);
}
