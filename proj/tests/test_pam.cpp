#include <gtest/gtest.h>

#include <cmath>

#include <semiheat/pam.hpp>

using namespace semiheat;

namespace {

Field random_field(int n, std::uint64_t seed) {
    auto rng = make_rng(seed);
    return standard_normal_field(n, rng);
}

SpaceTimeField constant_in_time(const TimeGrid& grid, const Field& f) {
    return SpaceTimeField(grid, std::vector<Field>(grid.size(), f));
}

double max_distance(const SpaceTimeField& a, const SpaceTimeField& b) { return sup_distance(a, b); }

}  // namespace

TEST(Nonlinearity, DerivativesMatchFiniteDifferences) {
    for (const char* name : {"identity", "tanh", "sigmoid", "scaled-sigmoid", "zero", "one"}) {
        auto F = Nonlinearity::by_name(name);
        for (double x : {-1.3, 0.0, 0.4, 2.1}) {
            const double h = 1e-5;
            EXPECT_NEAR(F.dF(x), (F.F(x + h) - F.F(x - h)) / (2 * h), 1e-8) << name;
            EXPECT_NEAR(F.d2F(x), (F.dF(x + h) - F.dF(x - h)) / (2 * h), 1e-8) << name;
        }
    }
    EXPECT_NEAR(Nonlinearity::by_name("scaled-sigmoid").F(0.8), 2 / (1 + std::exp(-0.8)) - 1, 1e-15);
    EXPECT_THROW(Nonlinearity::by_name("cubic"), ValidationError);
    EXPECT_EQ(parse_solver_mode("global_linear"), SolverMode::GlobalLinear);
    EXPECT_THROW(parse_solver_mode("implicit"), ValidationError);
}

TEST(Resolution, ConstantSource) {
    auto s = diagonalize(build_graph("cycle:8"));
    auto grid = TimeGrid::uniform(1.0, 8);
    Field c = Field::Constant(8, 1.7);
    for (int b : {1, 2, 3}) {
        auto r = resolution(s, b, constant_in_time(grid, c));
        for (std::size_t k = 0; k < grid.size(); ++k)
            EXPECT_LT(sup_norm(Field(r.values[k] - grid[k] * c)), 1e-12) << "b " << b;
    }
}

TEST(Resolution, HeatDuhamelOnEigenmode) {
    auto s = diagonalize(build_graph("cycle:8"));
    Field psi = s.basis().col(2);
    const double l = s.lambdas()[2];
    auto grid = TimeGrid::uniform(1.0, 400);
    std::vector<Field> v;
    for (double t : grid.nodes()) v.push_back(std::exp(-t * l) * psi);
    auto r = resolution(s, 1, SpaceTimeField(grid, v));
    for (std::size_t k = 0; k < grid.size(); k += 50)
        EXPECT_LT(sup_norm(Field(r.values[k] - grid[k] * std::exp(-grid[k] * l) * psi)), 1e-6);
}

TEST(Resolution, HigherOrderKernelOnEigenmode) {
    // R(psi)_t = int_0^t phi_2((t - s) l) ds psi, compared against a fine Gauss rule
    auto s = diagonalize(build_graph("cycle:8"));
    Field psi = s.basis().col(4);
    const double l = s.lambdas()[4];
    auto grid = TimeGrid::uniform(2.0, 5);
    auto r = resolution(s, 2, constant_in_time(grid, psi));
    Quadrature q = linear_rule(0.0, 2.0, 20, 20);
    double expect = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) expect += q.w[i] * phi_a(2, q.t[i] * l);
    EXPECT_NEAR(s.inner(r.values.back(), psi), expect, 1e-12);
}

TEST(GradedGrid, Shape) {
    auto g = graded_grid(1.0, 1e-3, 2);
    EXPECT_EQ(g[0], 0.0);
    EXPECT_EQ(g.back(), 1.0);
    EXPECT_LE(g[1], 1e-3);
    EXPECT_THROW(graded_grid(1.0, 2.0, 2), ValidationError);
}

TEST(SolveDirect, ZeroNonlinearityIsHeatFlow) {
    auto s = diagonalize(build_graph("torus2d:6:scaled"));
    SolverConfig cfg;
    cfg.F = "zero";
    cfg.steps = 16;
    Field u0 = random_field(36, 1);
    auto tr = solve_direct(s, cfg, u0, random_field(36, 2), Field::Zero(36));
    ASSERT_FALSE(tr.aborted);
    EXPECT_LT(max_distance(tr.u, heat_flow(s, u0, cfg.grid())), 1e-12);
}

TEST(SolveDirect, UnitNonlinearityAddsStochasticConvolution) {
    auto s = diagonalize(build_graph("torus2d:6:scaled"));
    SolverConfig cfg;
    cfg.F = "one";
    cfg.steps = 16;
    Field u0 = random_field(36, 3), xi = random_field(36, 4);
    auto tr = solve_direct(s, cfg, u0, xi, Field::Constant(36, 5.0));
    auto heat0 = heat_flow(s, u0, cfg.grid());
    auto X = X_eps(s, xi, cfg.grid());
    for (std::size_t k = 0; k < tr.u.size(); ++k)
        EXPECT_LT(sup_norm(Field(tr.u.values[k] - heat0.values[k] - X.values[k])), 1e-10);
}

TEST(SolveDirect, SecondOrderInTime) {
    GraphSpace g = build_graph("torus2d:8:scaled");
    auto s = diagonalize(g);
    Field xi = regularize(s, random_field(g.size(), 5), 0.05);
    Field C = Field::Constant(g.size(), 0.3);
    Field u0 = Field::Constant(g.size(), 0.5);
    SolverConfig cfg;
    cfg.F = "tanh";
    auto run = [&](int steps) {
        cfg.steps = steps;
        return solve_direct(s, cfg, u0, xi, C).u.values.back();
    };
    Field ref = run(1024);
    double e1 = sup_norm(Field(run(32) - ref)), e2 = sup_norm(Field(run(64) - ref));
    EXPECT_GE(std::log2(e1 / e2), 1.8);
}

TEST(SolveDirect, DivergenceAborts) {
    auto s = diagonalize(build_graph("cycle:6"));
    SolverConfig cfg;
    cfg.divergence_cap = 10.0;
    cfg.steps = 32;
    auto tr = solve_direct(s, cfg, Field::Ones(6), Field::Constant(6, 50.0), Field::Zero(6));
    EXPECT_TRUE(tr.aborted);
    EXPECT_LT(tr.u.size(), cfg.grid().size());
    EXPECT_NE(tr.message.find("divergence"), std::string::npos);
}

TEST(Paracontrolled, ZeroNoiseConvergesImmediately) {
    auto s = diagonalize(build_graph("cycle:8"));
    ParaEngine e(s, {});
    SolverConfig cfg;
    cfg.steps = 8;
    cfg.F = "tanh";
    Field u0 = random_field(8, 6);
    auto sol = solve_paracontrolled(e, cfg, u0, zero_enhancement(e, cfg.grid()));
    EXPECT_FALSE(sol.trajectory.aborted);
    EXPECT_EQ(sol.trajectory.iterations, 1);
    EXPECT_LT(max_distance(sol.trajectory.u, heat_flow(s, u0, cfg.grid())), 1e-12);
}

TEST(Paracontrolled, ProductStructure) {
    GraphSpace g = build_graph("cycle:8");
    auto s = diagonalize(g);
    ParaEngine e(s, {});
    auto grid = TimeGrid::uniform(1.0, 4);
    NoiseModel m{Field::Ones(8), g.measure(), 3};
    auto zhat = enhance(e, m, sample_noise(m, 0), 0.2, grid, 1.0);
    auto zero = make_paracontrolled(e, SpaceTimeField::zeros(grid, 8), SpaceTimeField::zeros(grid, 8), zhat.X);
    EXPECT_EQ(sup_norm(paracontrolled_product(e, zero, zhat, 2)), 0.0);

    Field f = random_field(8, 7), fp = random_field(8, 8);
    auto pf = make_paracontrolled(e, constant_in_time(grid, f), constant_in_time(grid, fp), zhat.X);
    auto shifted = zhat;
    for (Field& v : shifted.zeta2.values) v.array() += 0.75;
    Field d = paracontrolled_product(e, pf, shifted, 3) - paracontrolled_product(e, pf, zhat, 3);
    EXPECT_LT(sup_norm(Field(d - 0.75 * fp)), 1e-12);
    EXPECT_LT(pf.invariant_defect(e), 1e-12);
}

TEST(Paracontrolled, LiftOfConstantNonlinearity) {
    auto s = diagonalize(build_graph("cycle:8"));
    ParaEngine e(s, {});
    auto grid = TimeGrid::uniform(1.0, 3);
    auto pf = make_paracontrolled(e, constant_in_time(grid, random_field(8, 9)),
                                  constant_in_time(grid, random_field(8, 10)), constant_in_time(grid, random_field(8, 11)));
    auto lf = nonlinear_lift(e, Nonlinearity::by_name("one"), pf);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        EXPECT_EQ(sup_norm(Field(lf.f.values[k] - Field::Ones(8))), 0.0);
        EXPECT_EQ(sup_norm(lf.fprime.values[k]), 0.0);
    }
}

TEST(GlobalLinear, ContractionImprovesWithLambda) {
    GraphSpace g = build_graph("torus2d:8:scaled");
    auto s = diagonalize(g);
    ParaEngine e(s, {});
    SolverConfig cfg;
    cfg.T = 2.0;
    cfg.steps = 16;
    cfg.picard_max = 8;
    NoiseModel m{Field::Ones(g.size()), g.measure(), 4};
    auto zhat = enhance(e, m, sample_noise(m, 0), 0.25, cfg.grid(), cfg.T);
    auto f = contraction_by_lambda(e, cfg, Field::Ones(g.size()), zhat, {1, 4, 16, 64});
    for (std::size_t i = 1; i < f.size(); ++i) EXPECT_LE(f[i], f[i - 1] + 1e-12);
}

TEST(Sweep, ZeroNoiseGivesZeroDifferences) {
    GraphSpace g = build_graph("torus2d:6:scaled");
    auto s = diagonalize(g);
    ParaEngine e(s, {});
    NoiseModel m{Field::Zero(g.size()), g.measure(), 1};
    SolverConfig cfg;
    cfg.steps = 16;
    auto rows = epsilon_sweep(e, m, 0, cfg, Field::Constant(g.size(), 0.5), {0.25, 0.125, 0.0625}, true);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].diff_norm, 0.0);
    EXPECT_EQ(rows[1].diff_norm, 0.0);
    EXPECT_TRUE(std::isnan(rows[2].diff_norm));
}

TEST(Schauder, ConstantsAreFinite) {
    auto s = diagonalize(build_graph("torus2d:8:scaled"));
    auto rep = schauder_check(s, 2, -0.5, 0.25, 4, graded_grid(1.0, 1e-3, 2), {1, 10, 100}, 3);
    EXPECT_TRUE(std::isfinite(rep.constant_CT) && rep.constant_CT > 0);
    EXPECT_TRUE(std::isfinite(rep.constant_Teps) && rep.constant_Teps > 0);
    EXPECT_EQ(rep.weighted.size(), 3u);
    EXPECT_THROW(schauder_check(s, 2, 0.5, 0.25, 4, graded_grid(1.0, 1e-3, 2), {1}, 3), ValidationError);
}
