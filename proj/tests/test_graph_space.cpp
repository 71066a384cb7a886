#include <gtest/gtest.h>

#include <semiheat/graph_space.hpp>

using namespace semiheat;

namespace {

nlohmann::json three_vertex(double k01, double k12) {
    return {{"n", 3}, {"edges", {{0, 1, k01}, {1, 2, k12}, {0, 0, 1 - k01}, {2, 2, 1 - k12}}},
            {"mass", {1, 1, 1}}};
}

}  // namespace

TEST(GraphSpace, CompleteTwoHasUnitKernel) {
    GraphSpace g = build_graph("complete:2");
    EXPECT_EQ(g.size(), 2);
    EXPECT_DOUBLE_EQ(g.kernel(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(g.kernel(0, 0), 0.0);
}

TEST(GraphSpace, TorusRowsHaveFourQuarterEntries) {
    GraphSpace g = build_graph("torus2d:4");
    for (int x = 0; x < g.size(); ++x) {
        auto nb = g.neighbours(x);
        ASSERT_EQ(nb.size(), 4u);
        for (int y : nb) EXPECT_DOUBLE_EQ(g.kernel(x, y), 0.25);
    }
}

TEST(GraphSpace, ScaledTorusMassesAndSpacing) {
    GraphSpace g = build_graph("torus2d:8:scaled");
    EXPECT_DOUBLE_EQ(g.length_scale(), 0.125);
    EXPECT_DOUBLE_EQ(g.mass()[5], 1.0 / 64);
    EXPECT_DOUBLE_EQ(g.measure()[5], 1.0 / 64);
}

TEST(GraphSpace, GeneratorKillsConstants) {
    GraphSpace g = build_graph("cycle:8");
    Field c = Field::Constant(8, 3.0);
    EXPECT_LT(sup_norm(g.apply_generator(c)), 1e-14);
}

TEST(GraphSpace, RejectsSubMarkovRow) {
    auto j = three_vertex(0.5, 0.5);
    j["edges"][2] = {0, 0, 0.4};  // row 0 sums to 0.9
    EXPECT_THROW(graph_from_json(j), ValidationError);
}

TEST(GraphSpace, RejectsAsymmetricKernel) {
    Matrix k(2, 2);
    k << 0.0, 1.0, 0.9, 0.1;
    EXPECT_THROW(GraphSpace::from_dense(k, Field::Ones(2), Field::Ones(2), Field::Ones(2)), ValidationError);
}

TEST(GraphSpace, RejectsDisconnected) {
    nlohmann::json j = {{"n", 2}, {"edges", {{0, 0, 1.0}, {1, 1, 1.0}}}};
    EXPECT_THROW(graph_from_json(j), ValidationError);
}

TEST(GraphSpace, RejectsBadSpecs) {
    EXPECT_THROW(build_graph("hexagon:4"), ValidationError);
    EXPECT_THROW(build_graph("cycle:x"), ValidationError);
    EXPECT_THROW(build_graph("cycle:8:wobbly"), ValidationError);
    EXPECT_THROW(build_graph("complete:4:scaled"), ValidationError);
}

TEST(GraphSpace, JsonRoundTripPreservesHash) {
    GraphSpace g = build_graph("path:6");
    GraphSpace h = graph_from_json(g.to_json());
    EXPECT_EQ(g.content_hash(), h.content_hash());
    EXPECT_NE(g.content_hash(), build_graph("path:7").content_hash());
}

TEST(Distance, HopCounts) {
    EXPECT_EQ(graph_distance(build_graph("complete:2")).hops(0, 1), 1);
    EXPECT_EQ(graph_distance(build_graph("cycle:8")).hops(0, 4), 4);
    EXPECT_EQ(graph_distance(build_graph("torus2d:4")).diameter_hops(), 4);
}

TEST(Distance, MetricAxioms) {
    GraphSpace g = build_graph("torus2d:5:scaled");
    DistanceTable d = graph_distance(g);
    const int n = g.size();
    for (int x = 0; x < n; ++x) {
        EXPECT_EQ(d.metric(x, x), 0.0);
        for (int y = 0; y < n; ++y) {
            EXPECT_EQ(d.metric(x, y), d.metric(y, x));
            if (x != y) EXPECT_GT(d.metric(x, y), 0.0);
            for (int z = 0; z < n; z += 3) EXPECT_LE(d.metric(x, z), d.metric(x, y) + d.metric(y, z) + 1e-15);
        }
    }
}

TEST(Distance, BallVolumes) {
    GraphSpace k2 = build_graph("complete:2");
    EXPECT_DOUBLE_EQ(ball_volume(k2, graph_distance(k2), 0, 0.0), k2.measure()[0]);
    GraphSpace c8 = build_graph("cycle:8");
    EXPECT_DOUBLE_EQ(ball_volume(c8, graph_distance(c8), 0, 2.0), 5.0);
    GraphSpace t8 = build_graph("torus2d:8");
    // hop ball of radius 3 on the square lattice: 1 + 4 + 8 + 12
    EXPECT_DOUBLE_EQ(ball_volume(t8, graph_distance(t8), 0, 3.0), 25.0);
}

TEST(Geometry, AhlforsExponents) {
    GraphSpace t = build_graph("torus2d:16:scaled");
    auto rt = verify_geometry(t, graph_distance(t));
    EXPECT_GE(rt.ahlfors_nu, 1.8);
    EXPECT_LE(rt.ahlfors_nu, 2.2);
    EXPECT_TRUE(rt.doubling_pass);

    GraphSpace p = build_graph("path:64:scaled");
    auto rp = verify_geometry(p, graph_distance(p));
    EXPECT_GE(rp.ahlfors_nu, 0.9);
    EXPECT_LE(rp.ahlfors_nu, 1.1);
}

TEST(Geometry, TooSmall) {
    GraphSpace g = build_graph("complete:2");
    EXPECT_TRUE(verify_geometry(g, graph_distance(g)).too_small);
}
