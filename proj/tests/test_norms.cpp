#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include <semiheat/norms.hpp>

using namespace semiheat;

namespace {

Field k2_alt() {
    Field f(2);
    f << 1.0, -1.0;
    return f;
}

}  // namespace

TEST(Holder, ConstantHasPlainNorm) {
    auto s = diagonalize(build_graph("torus2d:6:scaled"));
    EXPECT_NEAR(holder_norm(s, Field::Constant(36, -2.5), 0.5).value, 2.5, 1e-12);
}

TEST(Holder, CompleteTwoClosedForm) {
    auto s = diagonalize(build_graph("complete:2"));
    auto r = holder_norm(s, k2_alt(), 0.5, 1, TimeGrid::log_spaced(1e-6, 400));
    // e^{-2} + max_t 2 t^{3/4} e^{-2t}, the maximum sitting at t = 3/8
    double expect = std::exp(-2.0) + 2 * std::pow(0.375, 0.75) * std::exp(-0.75);
    EXPECT_NEAR(r.value, expect, 1e-6);
    EXPECT_NEAR(r.value, 0.58806, 1e-5);
    EXPECT_NEAR(r.argmax_t, 0.375, 0.375 * 0.01);
}

TEST(Holder, RejectsLargeExponent) {
    auto s = diagonalize(build_graph("complete:2"));
    EXPECT_THROW(holder_norm(s, k2_alt(), 2.0), ValidationError);
}

TEST(Lambda, TwoPointAndIndicator) {
    auto k2 = build_graph("complete:2");
    EXPECT_DOUBLE_EQ(lambda_norm(k2_alt(), graph_distance(k2), 0.5).value, 3.0);
    auto c8 = build_graph("cycle:8");
    Field ind = Field::Zero(8);
    ind[3] = 1.0;
    EXPECT_DOUBLE_EQ(lambda_norm(ind, graph_distance(c8), 1.0).value, 2.0);
    EXPECT_DOUBLE_EQ(lambda_norm(Field::Constant(8, -4.0), graph_distance(c8), 0.7).value, 4.0);
    EXPECT_THROW(lambda_norm(ind, graph_distance(c8), 1.5), ValidationError);
}

TEST(Besov, ConstantAndEigenvector) {
    GraphSpace g = build_graph("complete:2");
    auto s = diagonalize(g);
    Quadrature quad = log_time_rule(1e-12, 12, 32);
    auto c = besov_norm(s, Field::Constant(2, 3.0), 0.5, 2, 2, 2, quad);
    EXPECT_NEAR(c.value, 3.0 * std::sqrt(2.0), 1e-12);

    // psi_1 = (1, -1) / sqrt 2, lambda = 2. Sup term squared is
    // int_0^1 t^{-1/2} (2t)^4 e^{-4t} dt / t = 16 Gamma(7/2) P(7/2, 4) / 4^{7/2}.
    Field psi = s.basis().col(1);
    auto r = besov_norm(s, psi, 0.5, 2, 2, 2, quad);
    double integral = 16 * boost::math::tgamma(3.5) * boost::math::gamma_p(3.5, 4.0) / std::pow(4.0, 3.5);
    EXPECT_NEAR(r.low_term, std::exp(-2.0), 1e-12);
    EXPECT_NEAR(r.sup_term, std::sqrt(integral), 1e-9);
    EXPECT_THROW(besov_norm(s, psi, 0.5, 2, 2, 0, quad), ValidationError);
}

TEST(Sobolev, ClosedForms) {
    auto s = diagonalize(build_graph("complete:2"));
    EXPECT_NEAR(sobolev_norm(s, k2_alt(), 2, 2).value, 3 * std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(sobolev_norm(s, k2_alt(), 0, 3).value, std::pow(2.0, 1.0 / 3), 1e-12);
    Field psi = s.basis().col(1);
    EXPECT_NEAR(sobolev_norm(s, psi, 1, 2).value, std::sqrt(3.0), 1e-12);
}

TEST(SpaceTime, ConstantField) {
    auto s = diagonalize(build_graph("cycle:6"));
    auto grid = TimeGrid::uniform(1.0, 8);
    SpaceTimeField u(grid, std::vector<Field>(grid.size(), Field::Constant(6, 1.5)));
    SpaceTimeParams prm;
    EXPECT_NEAR(spacetime_norm(&s, SpaceTimeKind::CTC, u, prm).value, 1.5, 1e-12);
    EXPECT_EQ(spacetime_norm(&s, SpaceTimeKind::CTH, u, prm).value, 0.0);
}

TEST(SpaceTime, WeightedLimitKeepsInitialNode) {
    auto s = diagonalize(build_graph("cycle:6"));
    auto grid = TimeGrid::uniform(1.0, 4);
    std::vector<Field> v;
    for (std::size_t k = 0; k < grid.size(); ++k) v.push_back(Field::Constant(6, 1.0 + static_cast<double>(k)));
    SpaceTimeField u(grid, v);
    SpaceTimeParams prm;
    prm.lambda = 200;
    EXPECT_NEAR(spacetime_norm(&s, SpaceTimeKind::WL, u, prm).value, 1.0, 1e-12);
    EXPECT_NEAR(spacetime_norm(&s, SpaceTimeKind::CTC, u, prm).value, 5.0, 1e-12);
    // time Holder with exponent 1/2: pairs k steps apart give k / (k/4)^{1/2}, largest for k = 4
    prm.alpha = 1.0;
    EXPECT_NEAR(spacetime_norm(&s, SpaceTimeKind::CTH, u, prm).value, 4.0, 1e-12);
}

TEST(SpaceTime, CthNeedsTwoNodes) {
    TimeGrid one({0.0}, "single");
    SpaceTimeField u(one, {Field::Zero(3)});
    EXPECT_THROW(spacetime_norm(nullptr, SpaceTimeKind::CTH, u, {}), ValidationError);
}
