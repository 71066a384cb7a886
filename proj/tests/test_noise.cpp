#include <gtest/gtest.h>

#include <cmath>

#include <semiheat/noise.hpp>

using namespace semiheat;

namespace {

Field random_field(int n, std::uint64_t seed) {
    auto rng = make_rng(seed);
    return standard_normal_field(n, rng);
}

NoiseModel unit_model(const GraphSpace& g, double w = 1.0, std::uint64_t seed = 1) {
    return {Field::Constant(g.size(), w), g.measure(), seed};
}

struct Moments {
    Field mean, se;
};

/// Per-vertex sample mean and standard error of draw -> sample(draw).
template <class Sample>
Moments monte_carlo(int n, int draws, Sample&& sample) {
    Field sum = Field::Zero(n), sq = Field::Zero(n);
    for (int k = 0; k < draws; ++k) {
        Field v = sample(static_cast<std::uint64_t>(k));
        sum += v;
        sq += v.cwiseProduct(v);
    }
    Field mean = sum / draws;
    Field var = (sq / draws - mean.cwiseProduct(mean)) * (static_cast<double>(draws) / (draws - 1));
    return {mean, (var / draws).cwiseSqrt()};
}

}  // namespace

TEST(SampleNoise, DeterministicPerDraw) {
    GraphSpace g = build_graph("cycle:8");
    NoiseModel m = unit_model(g, 1.0, 42);
    EXPECT_EQ(sup_norm(Field(sample_noise(m, 3).xi - sample_noise(m, 3).xi)), 0.0);
    EXPECT_GT(sup_norm(Field(sample_noise(m, 3).xi - sample_noise(m, 4).xi)), 0.0);
}

TEST(SampleNoise, PairingVariance) {
    GraphSpace g = build_graph("torus2d:8:scaled");
    const int n = g.size(), draws = 100000;
    Field omega(n);
    for (int x = 0; x < n; ++x) omega[x] = 0.5 + static_cast<double>(x) / n;
    NoiseModel m{omega, g.measure(), 5};
    std::vector<Field> fs;
    for (int k = 0; k < 10; ++k) fs.push_back(random_field(n, 100 + static_cast<std::uint64_t>(k)));
    std::vector<double> s2(fs.size(), 0.0), s4(fs.size(), 0.0);
    for (int d = 0; d < draws; ++d) {
        Field xi = sample_noise(m, static_cast<std::uint64_t>(d)).xi;
        for (std::size_t k = 0; k < fs.size(); ++k) {
            double p = pairing(xi, fs[k], g.measure());
            s2[k] += p * p;
            s4[k] += p * p * p * p;
        }
    }
    for (std::size_t k = 0; k < fs.size(); ++k) {
        double expect = fs[k].cwiseProduct(fs[k]).cwiseProduct(omega).dot(g.measure());
        double mean = s2[k] / draws;
        double se = std::sqrt((s4[k] / draws - mean * mean) / draws);
        EXPECT_LE(std::abs(mean - expect), 3 * se) << "field " << k;
    }
}

TEST(Regularize, PreservesMeanAndClosedForm) {
    GraphSpace g = build_graph("complete:2");
    auto s = diagonalize(g);
    Field xi(2);
    xi << 3.0, 1.0;
    Field r = regularize(s, xi, 0.2);
    // mean 2, oscillating part (1, -1) damped by e^{-2 eps}
    EXPECT_NEAR(r[0], 2 + std::exp(-0.4), 1e-14);
    EXPECT_NEAR(r[1], 2 - std::exp(-0.4), 1e-14);
    EXPECT_LT(sup_norm(Field(regularize(s, xi, 1e-14) - xi)), 1e-12);
    EXPECT_THROW(regularize(s, xi, 0.0), ValidationError);
}

TEST(XEps, ModesAndHeatEquation) {
    GraphSpace g = build_graph("cycle:8");
    auto s = diagonalize(g);
    auto grid = TimeGrid::uniform(1.0, 4);
    auto Xc = X_eps(s, Field::Constant(8, 2.0), grid);
    EXPECT_LT(sup_norm(Field(Xc.values[2] - Field::Constant(8, 1.0))), 1e-14);
    Field psi = s.basis().col(3);
    const double l = s.lambdas()[3];
    EXPECT_LT(sup_norm(Field(heat_integral(s, psi, 0.75) - psi * (-std::expm1(-0.75 * l) / l))), 1e-13);

    Field xi = random_field(8, 2);
    const double t = 0.6, h = 1e-4;
    Field dt = (heat_integral(s, xi, t + h) - heat_integral(s, xi, t - h)) / (2 * h);
    Field lhs = dt + g.apply_generator(heat_integral(s, xi, t));
    EXPECT_LT(sup_norm(Field(lhs - xi)), 1e-7);
}

TEST(ExpectedResonant, ZeroWeightAndHomogeneity) {
    GraphSpace g = build_graph("cycle:8");
    auto s = diagonalize(g);
    ParaEngine e(s, {});
    Field a = s.symbol([](double l) { return std::exp(-0.1 * l); });
    Field one = Field::Ones(8);
    EXPECT_EQ(sup_norm(expected_resonant(e, a, one, unit_model(g, 0.0))), 0.0);
    Field r1 = expected_resonant(e, a, one, unit_model(g, 1.0));
    Field r2 = expected_resonant(e, a, one, unit_model(g, 2.0));
    EXPECT_LT(sup_norm(Field(r2 - 2 * r1)), 1e-13 * sup_norm(r1));
}

TEST(ExpectedResonant, MatchesMonteCarloOnCompleteTwo) {
    GraphSpace g = build_graph("complete:2");
    auto s = diagonalize(g);
    ParaEngine e(s, {});
    NoiseModel m = unit_model(g, 1.0, 17);
    Field a = s.symbol([](double l) { return std::exp(-0.1 * l); });
    Field exact = expected_resonant(e, a, Field::Ones(2), m);
    auto mc = monte_carlo(2, 20000, [&](std::uint64_t d) {
        Field xi = sample_noise(m, d).xi;
        return e.resonant(s.apply_symbol(a, xi), xi);
    });
    for (int x = 0; x < 2; ++x) EXPECT_LE(std::abs(mc.mean[x] - exact[x]), 4 * mc.se[x]) << "vertex " << x;
}

TEST(RenormConstant, ZeroWeightRejectsAndGrows) {
    GraphSpace g = build_graph("torus2d:16:scaled");
    auto s = diagonalize(g);
    ParaEngine e(s, {});
    EXPECT_EQ(sup_norm(renorm_constant(e, unit_model(g, 0.0), 0.1, 1.0)), 0.0);
    EXPECT_THROW(renorm_constant(e, unit_model(g), 0.1, 0.0), ValidationError);
    Field prev = renorm_constant(e, unit_model(g), 0.25, 1.0);
    for (double eps = 0.125; eps > 1e-3; eps /= 2) {
        Field next = renorm_constant(e, unit_model(g), eps, 1.0);
        EXPECT_GE((next - prev).minCoeff(), -1e-12) << "eps " << eps;
        prev = next;
    }
}

TEST(Enhance, NoNoiseAndGridCheck) {
    GraphSpace g = build_graph("cycle:6");
    auto s = diagonalize(g);
    ParaEngine e(s, {});
    NoiseModel m = unit_model(g, 0.0);
    auto grid = TimeGrid::uniform(1.0, 4);
    auto z = enhance(e, m, sample_noise(m, 0), 0.1, grid, 1.0);
    EXPECT_EQ(sup_norm(z.zeta), 0.0);
    for (const Field& v : z.zeta2.values) EXPECT_EQ(sup_norm(v), 0.0);
    EXPECT_THROW(enhance(e, m, sample_noise(m, 0), 0.1, grid, 2.0), ValidationError);
}

TEST(Enhance, SecondOrderTermIsCentred) {
    GraphSpace g = build_graph("complete:2");
    auto s = diagonalize(g);
    ParaEngine e(s, {});
    NoiseModel m = unit_model(g, 1.0, 23);
    auto grid = TimeGrid::uniform(1.0, 2);
    auto mc = monte_carlo(2, 10000, [&](std::uint64_t d) {
        return enhance(e, m, sample_noise(m, d), 0.25, grid, 1.0).zeta2.values.back();
    });
    for (int x = 0; x < 2; ++x) EXPECT_LE(std::abs(mc.mean[x]), 4 * mc.se[x]) << "vertex " << x;
}

TEST(WeightCompat, ConstantWeightPasses) {
    GraphSpace g = build_graph("torus2d:6:scaled");
    auto rep = weight_compat_check(g, graph_distance(g), Field::Ones(36), {0.1, 0.5, 1.0}, 0.5, 0.5);
    EXPECT_NEAR(rep.constant, 1.0, 1e-12);
    EXPECT_TRUE(rep.pass);
}
