#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include <semiheat/semiheat.hpp>

using namespace semiheat;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("semiheat_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

CommandContext small_context(const fs::path& out) {
    CommandContext ctx;
    ctx.cfg.graph.spec = "torus2d:4:scaled";
    ctx.cfg.solve.solver.steps = 8;
    ctx.out = out;
    return ctx;
}

}  // namespace

TEST(Config, RoundTrip) {
    RunConfig c;
    c.graph.spec = "cycle:12";
    c.noise.eps_ladder = {0.5, 0.25};
    c.solve.solver.F = "tanh";
    c.solve.solver.mode = SolverMode::Paracontrolled;
    c.norms.study_sizes = {8, 16};
    std::string text = serialize_config(c);
    RunConfig back = parse_config(text);
    EXPECT_EQ(serialize_config(back), text);
    EXPECT_EQ(back.solve.solver.mode, SolverMode::Paracontrolled);
    EXPECT_EQ(back.noise.eps_ladder.size(), 2u);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    EXPECT_THROW(parse_config(R"({"graph": {"spec": "cycle:8", "colour": 1}})"), ValidationError);
    EXPECT_THROW(parse_config(R"({"solver": {}})"), ValidationError);
    EXPECT_THROW(parse_config(R"({"pam": {"steps": "many"}})"), ValidationError);
    EXPECT_THROW(parse_config(R"({"pam": {"mode": "implicit"}})"), ValidationError);
    EXPECT_THROW(parse_config("{not json"), ValidationError);
    EXPECT_NO_THROW(parse_config("{}"));
}

TEST(Config, OmegaPerVertex) {
    RunConfig c;
    c.graph.spec = "cycle:4";
    c.graph.omega = {1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(configured_graph(c).weight()[2], 3.0);
    c.graph.omega = {1, 2};
    EXPECT_THROW(configured_graph(c), ValidationError);
}

TEST(Csv, SchemaLineAndParse) {
    CsvTable t("demo", 2, {"name", "value"});
    t.row() << "a,b" << 0.1;
    t.row() << "plain" << 3;
    std::string text = t.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "# schema=demo version=2");
    CsvData d = parse_csv(text);
    EXPECT_EQ(d.schema, "demo");
    ASSERT_EQ(d.rows.size(), 2u);
    EXPECT_EQ(d.rows[0][0], "a,b");
    EXPECT_DOUBLE_EQ(d.numbers("value")[0], 0.1);
    EXPECT_THROW(d.column("missing"), ValidationError);
}

TEST(Csv, ShortestRoundTripNumbers) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(1.0 / 3), "0.3333333333333333");
    for (double v : {1e-300, 123456.789, -2.5e17})
        EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
}

TEST(Svg, Deterministic) {
    PlotSpec p;
    p.title = "t <&>";
    p.log_y = true;
    p.series.push_back({"s", {1, 2, 3}, {1, 10, 100}});
    std::string a = render_svg(p), b = render_svg(p);
    EXPECT_EQ(a, b);
    EXPECT_NE(a.find("<svg"), std::string::npos);
    EXPECT_NE(a.find("t &lt;&amp;&gt;"), std::string::npos);
}

TEST(Manifest, RecordsChecksums) {
    fs::path dir = fresh_dir("manifest");
    {
        Manifest m(dir);
        m.write("a.csv", "x\n1\n", "demo");
        m.record_run("demo", 0.5, 0);
        m.save();
    }
    Manifest again(dir);
    ASSERT_EQ(again.files().size(), 1u);
    EXPECT_EQ(again.doc()["files"]["a.csv"]["checksum"], checksum_hex("x\n1\n"));
    EXPECT_EQ(again.doc()["runs"].size(), 1u);
    EXPECT_EQ(read_file(dir / "a.csv"), "x\n1\n");
    fs::remove_all(dir);
}

TEST(Bundle, RoundTripAndTamper) {
    fs::path dir = fresh_dir("bundle");
    Manifest m(dir);
    FieldBundle b;
    b.graph_hash = "abc";
    b.seed = 3;
    b.eps = 0.25;
    b.b = 3;
    b.grid_id = "none";
    b.n = 3;
    b.names = {"xi", "zeta"};
    b.fields = {Field::LinSpaced(3, 0, 1), Field::Constant(3, -2)};
    write_bundle(m, "noise", b, "demo");
    FieldBundle r = read_bundle(dir / "noise.json");
    EXPECT_EQ(r.key(), b.key());
    EXPECT_EQ((r.fields[1] - b.fields[1]).cwiseAbs().maxCoeff(), 0.0);
    atomic_write(dir / "noise.bin", std::string(48, '\0'));
    EXPECT_THROW(read_bundle(dir / "noise.json"), ValidationError);
    fs::remove_all(dir);
}

TEST(Commands, UnknownCommandExitsOne) {
    fs::path dir = fresh_dir("unknown");
    std::ostringstream log;
    EXPECT_EQ(run_command("frobnicate", small_context(dir), log), 1);
    EXPECT_NE(log.str().find("usage"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Commands, EmptyReportExitsOne) {
    fs::path dir = fresh_dir("report");
    std::ostringstream log;
    EXPECT_EQ(run_command("report", small_context(dir), log), 1);
    EXPECT_NE(log.str().find("missing inputs"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Commands, SolveWritesTrajectory) {
    fs::path dir = fresh_dir("solve");
    std::ostringstream log;
    ASSERT_EQ(run_command("solve", small_context(dir), log), 0) << log.str();
    CsvData d = parse_csv(read_file(dir / "trajectory.csv"));
    EXPECT_EQ(d.rows.size(), 9u * 16u);
    EXPECT_TRUE(Manifest::exists(dir));
    fs::remove_all(dir);
}

TEST(Commands, SolverAbortExitsTwo) {
    fs::path dir = fresh_dir("abort");
    CommandContext ctx = small_context(dir);
    ctx.cfg.solve.solver.divergence_cap = 0.5;
    std::ostringstream log;
    EXPECT_EQ(run_command("solve", ctx, log), 2);
    EXPECT_NE(log.str().find("aborted"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Commands, BadGraphSpecExitsOne) {
    fs::path dir = fresh_dir("badgraph");
    CommandContext ctx = small_context(dir);
    ctx.cfg.graph.spec = "torus2d:two";
    std::ostringstream log;
    EXPECT_EQ(run_command("spectrum", ctx, log), 1);
    fs::remove_all(dir);
}
