#pragma once

// Command implementations behind the CLI. Each command reads a RunConfig,
// writes its artifacts through the manifest of the output directory and
// returns the process exit code: 0 success, 1 validation error, 2 numerical
// abort (diagnostics are still written).

#include "semiheat/config.hpp"
#include "semiheat/io.hpp"

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace semiheat {

struct CommandContext {
    RunConfig cfg;
    std::filesystem::path out;
    std::string spectral_cache;
    bool oracle = false;
};

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"gen-graph",       "spectrum", "verify-geometry", "verify-kernel",
                                                "norm",            "paraproduct", "commutator-test", "sample-noise",
                                                "renorm-constant", "enhance",  "solve",           "sweep-eps",
                                                "report"};
    return names;
}

inline std::string usage() {
    std::string u = "usage: semiheat <command> [graph-spec] [--config FILE] [--seed N] [--out DIR]\n"
                    "                [--spectral-cache PATH] [--draws N] [--eps-ladder LIST] [--oracle]\n"
                    "commands:";
    for (const auto& c : command_names()) u += " " + c;
    return u + "\n";
}

namespace cmd {

struct Session {
    const CommandContext& ctx;
    Manifest& manifest;
    std::ostream& log;
    std::string command;

    GraphSpace graph() const {
        GraphSpace g = configured_graph(ctx.cfg);
        manifest.set_graph_hash(g.content_hash());
        return g;
    }
    SpectralDecomposition spectral(const GraphSpace& g) const { return diagonalize_cached(g, ctx.spectral_cache); }
    void write(const std::string& name, const std::string& bytes) const { manifest.write(name, bytes, command); }
    TimeGrid norm_grid() const { return TimeGrid::dyadic(ctx.cfg.norms.j_max); }
};

inline Field constant_field(int n, double v) { return Field::Constant(n, v); }

inline int gen_graph(const Session& s) {
    GraphSpace g = s.graph();
    s.write("graph.json", g.to_json().dump(2) + "\n");
    s.log << "graph " << g.name() << " n=" << g.size() << " hash=" << g.content_hash() << "\n";
    return 0;
}

inline int spectrum(const Session& s) {
    GraphSpace g = s.graph();
    SpectralDecomposition sp = s.spectral(g);
    CsvTable t("spectrum", 1, {"index", "lambda"});
    for (int i = 0; i < sp.size(); ++i) t.row() << i << sp.lambdas()[i];
    s.write("spectrum.csv", t.str());
    s.log << "lambda_max=" << format_double(sp.lambda_max()) << "\n";
    return 0;
}

inline int verify_geometry_cmd(const Session& s) {
    GraphSpace g = s.graph();
    DistanceTable d = graph_distance(g);
    const GeometryThresholds& th = s.ctx.cfg.geometry;
    GeometryReport r = verify_geometry(g, d, th);
    CsvTable t("geometry", 1, {"assumption", "value", "threshold", "pass"});
    t.row() << "doubling_constant" << r.doubling_constant << th.doubling_max << r.doubling_pass;
    t.row() << "ahlfors_nu" << r.ahlfors_nu << 0.9 << r.ahlfors_pass;
    t.row() << "ahlfors_c1" << r.ahlfors_c1 << 0.0 << r.ahlfors_pass;
    t.row() << "poincare_constant" << r.poincare_constant << th.poincare_max << r.poincare_pass;
    t.row() << "degiorgi_constant" << r.degiorgi_constant << th.degiorgi_max << r.degiorgi_pass;
    t.row() << "degiorgi_theta" << r.degiorgi_theta << 0.0 << r.degiorgi_pass;
    s.write("geometry.csv", t.str());
    nlohmann::json j = {{"too_small", r.too_small}, {"diameter_hops", r.diameter_hops},
                        {"doubling_constant", r.doubling_constant}, {"ahlfors_c1", r.ahlfors_c1},
                        {"ahlfors_nu", r.ahlfors_nu}, {"ahlfors_r2", r.ahlfors_r2},
                        {"poincare_constant", r.poincare_constant}, {"degiorgi_constant", r.degiorgi_constant},
                        {"degiorgi_theta", r.degiorgi_theta}, {"degiorgi_q", r.degiorgi_q},
                        {"doubling_pass", r.doubling_pass}, {"ahlfors_pass", r.ahlfors_pass},
                        {"poincare_pass", r.poincare_pass}, {"degiorgi_pass", r.degiorgi_pass}};
    s.write("geometry.json", j.dump(2) + "\n");
    if (r.too_small) s.log << "graph too small for the geometry fits\n";
    return 0;
}

inline int verify_kernel(const Session& s) {
    GraphSpace g = s.graph();
    DistanceTable d = graph_distance(g);
    SpectralDecomposition sp = s.spectral(g);
    CsvTable t("kernel_fit", 1, {"target", "C", "c", "q", "violation_max", "success"});
    for (const auto& name : s.ctx.cfg.spectral.kernel_targets) {
        KernelBoundFit f = fit_kernel_bounds(sp, d, parse_kernel_target(name), s.ctx.cfg.spectral.kernel_times,
                                             s.ctx.cfg.spectral.kernel);
        t.row() << to_string(f.target) << f.C << f.c << f.q << f.violation_max << f.success;
    }
    s.write("kernel.csv", t.str());
    return 0;
}

/// Field selected by norms.field: a noise draw or a manufactured field.
inline Field norm_input(const Session& s, const GraphSpace& g, const SpectralDecomposition& sp) {
    const std::string& src = s.ctx.cfg.norms.field;
    if (src == "noise") return sample_noise(NoiseModel::from_graph(g, s.ctx.cfg.noise.seed), s.ctx.cfg.noise.draw).xi;
    double alpha = std::stod(src.substr(std::string("manufactured:").size()));
    auto rng = make_rng(s.ctx.cfg.noise.seed, 0);
    return manufactured_field(sp, alpha, rng);
}

inline int norm(const Session& s) {
    const RunConfig& c = s.ctx.cfg;
    GraphSpace g = s.graph();
    SpectralDecomposition sp = s.spectral(g);
    Field f = norm_input(s, g, sp);
    std::vector<NormReport> reps;
    const TimeGrid grid = s.norm_grid();
    for (double sigma : c.norms.sigmas) reps.push_back(holder_norm(sp, f, sigma, c.norms.a, grid));
    DistanceTable d = graph_distance(g);
    for (double sigma : c.norms.sigmas)
        if (sigma > 0 && sigma < 1) reps.push_back(lambda_norm(f, d, sigma));
    const Quadrature quad = c.paraproducts.quad.build();
    for (double p : c.norms.besov_p)
        for (double sigma : c.norms.sigmas) reps.push_back(besov_norm(sp, f, sigma, p, c.norms.besov_q, c.norms.a, quad));
    for (double ss : c.norms.sobolev_s) reps.push_back(sobolev_norm(sp, f, ss, c.norms.sobolev_p));
    s.write("norms.csv", norm_reports_csv(reps));
    if (!c.norms.study_sizes.empty()) {
        RegularityStudy st = noise_regularity_study(c.norms.sigmas, c.norms.study_sizes, c.noise.draws, c.noise.seed,
                                                    c.norms.a, grid);
        CsvTable t("regularity", 1, {"sigma", "N", "median"});
        for (const auto& cell : st.cells) t.row() << cell.sigma << cell.N << cell.median;
        s.write("regularity.csv", t.str());
    }
    return 0;
}

inline int paraproduct_cmd(const Session& s) {
    const RunConfig& c = s.ctx.cfg;
    GraphSpace g = s.graph();
    SpectralDecomposition sp = s.spectral(g);
    ParaEngine e(sp, c.paraproducts);
    auto rng = make_rng(c.noise.seed, 1);
    Field f = manufactured_field(sp, c.commutator.alpha, rng);
    Field h = manufactured_field(sp, c.commutator.beta, rng);
    std::optional<TensorOracle> oracle;
    if (s.ctx.oracle) {
        require(sp.size() <= c.paraproducts.oracle_max_n,
                "paraproduct: --oracle needs n <= " + std::to_string(c.paraproducts.oracle_max_n));
        oracle.emplace(sp, c.paraproducts);
    }
    const double scale = sup_norm(f) * sup_norm(h);
    CsvTable t("paraproduct", 1, {"term", "sup_norm", "oracle_rel_error"});
    for (Term term : {Term::LowFreq, Term::ParaA, Term::ParaB, Term::S1, Term::S2, Term::S3, Term::S4, Term::R,
                      Term::Paraproduct, Term::Resonant}) {
        Field v = e.term(term, f, h);
        double err = std::numeric_limits<double>::quiet_NaN();
        if (oracle) err = sup_norm(Field(v - oracle->evaluate(term, f, h))) / scale;
        t.row() << term_name(term) << sup_norm(v) << err;
    }
    BonyDecomposition b = e.bony(f, h);
    t.row() << "bony_residual" << b.relative_residual(f, h) << std::numeric_limits<double>::quiet_NaN();
    s.write("paraproduct.csv", t.str());
    return 0;
}

inline int commutator_test(const Session& s) {
    const RunConfig& c = s.ctx.cfg;
    GraphSpace g = s.graph();
    SpectralDecomposition sp = s.spectral(g);
    ParaEngine e(sp, c.paraproducts);
    const double a = c.commutator.alpha, b = c.commutator.beta, gm = c.commutator.gamma;
    const TimeGrid grid = s.norm_grid();
    std::vector<std::array<double, 2>> vals(static_cast<std::size_t>(c.commutator.samples));
    parallel_for(c.commutator.samples, [&](int k) {
        auto rng = make_rng(c.noise.seed, 100 + static_cast<std::uint64_t>(k));
        Field f = manufactured_field(sp, a, rng), gg = manufactured_field(sp, b, rng), h = manufactured_field(sp, gm, rng);
        Field comm = e.commutator(f, gg, h);
        Field naive = e.resonant(e.paraproduct(gg, f), h);
        vals[static_cast<std::size_t>(k)] = {holder_norm(sp, comm, a + b + gm, c.norms.a, grid).value,
                                             holder_norm(sp, naive, a + gm, c.norms.a, grid).value};
    });
    CsvTable t("commutator", 1, {"sample", "commutator_norm", "naive_norm"});
    for (std::size_t k = 0; k < vals.size(); ++k) t.row() << k << vals[k][0] << vals[k][1];
    s.write("commutator.csv", t.str());
    return 0;
}

inline int sample_noise_cmd(const Session& s) {
    const RunConfig& c = s.ctx.cfg;
    GraphSpace g = s.graph();
    NoiseModel m = NoiseModel::from_graph(g, c.noise.seed);
    FieldBundle b;
    b.graph_hash = g.content_hash();
    b.seed = c.noise.seed;
    b.draw = static_cast<std::uint64_t>(c.noise.draw);
    b.grid_id = "none";
    b.n = g.size();
    CsvTable t("noise_draws", 1, {"draw", "mean", "sup", "pairing_one"});
    Field one = Field::Ones(g.size());
    for (int k = 0; k < c.noise.draws; ++k) {
        NoiseField xi = sample_noise(m, static_cast<std::uint64_t>(c.noise.draw + k));
        b.names.push_back("xi[" + std::to_string(xi.draw) + "]");
        b.fields.push_back(xi.xi);
        t.row() << static_cast<int>(xi.draw) << xi.xi.mean() << sup_norm(xi.xi) << pairing(xi.xi, one, g.measure());
    }
    write_bundle(s.manifest, "noise", b, s.command);
    s.write("noise.csv", t.str());
    return 0;
}

inline int renorm_cmd(const Session& s) {
    const RunConfig& c = s.ctx.cfg;
    GraphSpace g = s.graph();
    SpectralDecomposition sp = s.spectral(g);
    ParaEngine e(sp, c.paraproducts);
    NoiseModel m = NoiseModel::from_graph(g, c.noise.seed);
    CsvTable t("renorm_constant", 1, {"eps", "mean", "min", "max"});
    std::vector<double> x, y;
    for (double eps : c.noise.eps_ladder) {
        Field C = renorm_constant(e, m, eps, c.solve.solver.T, c.noise.projected);
        t.row() << eps << C.mean() << C.minCoeff() << C.maxCoeff();
        x.push_back(std::log(1 / eps));
        y.push_back(C.mean());
    }
    s.write("renorm.csv", t.str());
    if (x.size() >= 2) {
        LineFit f = fit_line(x, y);
        s.write("renorm_fit.json", nlohmann::json({{"a", f.slope}, {"b", f.intercept}, {"r2", f.r2}}).dump(2) + "\n");
    }
    return 0;
}

inline EnhancedNoise session_enhance(const Session& s, const ParaEngine& e, const GraphSpace& g, double eps) {
    const RunConfig& c = s.ctx.cfg;
    NoiseModel m = NoiseModel::from_graph(g, c.noise.seed);
    NoiseField xi = sample_noise(m, static_cast<std::uint64_t>(c.noise.draw));
    return enhance(e, m, xi, eps, c.solve.solver.grid(), c.solve.solver.T);
}

inline ParaConfig solver_para(const RunConfig& c) {
    ParaConfig p = c.paraproducts;
    p.b = c.solve.solver.b;
    return p;
}

inline int enhance_cmd(const Session& s) {
    const RunConfig& c = s.ctx.cfg;
    GraphSpace g = s.graph();
    SpectralDecomposition sp = s.spectral(g);
    ParaEngine e(sp, solver_para(c));
    EnhancedNoise z = session_enhance(s, e, g, c.solve.eps);
    FieldBundle b;
    b.graph_hash = g.content_hash();
    b.seed = c.noise.seed;
    b.draw = z.draw;
    b.eps = z.epsilon;
    b.b = z.cfg.b;
    b.grid_id = z.zeta2.times.id();
    b.n = g.size();
    b.names.push_back("zeta");
    b.fields.push_back(z.zeta);
    for (std::size_t k = 0; k < z.zeta2.size(); ++k) {
        b.names.push_back("zeta2[" + std::to_string(k) + "]");
        b.fields.push_back(z.zeta2.values[k]);
    }
    for (std::size_t k = 0; k < z.renorm.size(); ++k) {
        b.names.push_back("renorm[" + std::to_string(k) + "]");
        b.fields.push_back(z.renorm.values[k]);
    }
    write_bundle(s.manifest, "enhanced", b, s.command);
    return 0;
}

inline int solve(const Session& s) {
    const RunConfig& c = s.ctx.cfg;
    const SolverConfig& sc = c.solve.solver;
    GraphSpace g = s.graph();
    SpectralDecomposition sp = s.spectral(g);
    ParaEngine e(sp, solver_para(c));
    Field u0 = constant_field(g.size(), c.solve.u0);
    Trajectory tr;
    if (sc.mode == SolverMode::Direct) {
        NoiseModel m = NoiseModel::from_graph(g, c.noise.seed);
        NoiseField xi = sample_noise(m, static_cast<std::uint64_t>(c.noise.draw));
        Field C = renorm_constant(e, m, c.solve.eps, sc.T, c.noise.projected);
        tr = solve_direct(sp, sc, u0, regularize(sp, xi.xi, c.solve.eps), C);
    } else {
        EnhancedNoise z = session_enhance(s, e, g, c.solve.eps);
        tr = sc.mode == SolverMode::Paracontrolled ? solve_paracontrolled(e, sc, u0, z).trajectory
                                                   : solve_global_linear(e, sc, u0, z);
    }
    s.write("trajectory.csv", trajectory_csv(tr.u));
    s.write("trajectory.json", trajectory_diagnostics(tr).dump(2) + "\n");
    if (tr.aborted) {
        s.log << "solver aborted: " << tr.message << "\n";
        return 2;
    }
    return 0;
}

inline int sweep_eps(const Session& s) {
    const RunConfig& c = s.ctx.cfg;
    GraphSpace g = s.graph();
    SpectralDecomposition sp = s.spectral(g);
    ParaEngine e(sp, solver_para(c));
    NoiseModel m = NoiseModel::from_graph(g, c.noise.seed);
    Field u0 = constant_field(g.size(), c.solve.u0);
    auto rows = epsilon_sweep(e, m, static_cast<std::uint64_t>(c.noise.draw), c.solve.solver, u0, c.noise.eps_ladder, true);
    auto raw = epsilon_sweep(e, m, static_cast<std::uint64_t>(c.noise.draw), c.solve.solver, u0, c.noise.eps_ladder, false);
    rows.insert(rows.end(), raw.begin(), raw.end());
    s.write("sweep.csv", sweep_csv(rows));
    for (const auto& r : rows)
        if (r.aborted) s.log << "cell eps=" << format_double(r.eps) << " renormalized=" << r.renormalized
                             << " aborted: " << r.message << "\n";
    return 0;
}

inline int report(const Session& s) {
    const auto files = s.manifest.files();
    auto has = [&](const std::string& f) {
        return std::find(files.begin(), files.end(), f) != files.end() && std::filesystem::exists(s.ctx.out / f);
    };
    CsvTable summary("summary", 1, {"source", "metric", "value"});
    std::vector<std::string> missing;
    if (has("renorm.csv")) {
        CsvData d = parse_csv(read_file(s.ctx.out / "renorm.csv"));
        auto eps = d.numbers("eps"), mean = d.numbers("mean");
        std::vector<double> x;
        for (double e : eps) x.push_back(std::log(1 / e));
        PlotSpec p{"renormalization constant", "eps", "mean C^eps", true, false, {}, {}};
        p.series.push_back({"mean C^eps", eps, mean, false});
        if (x.size() >= 2) {
            LineFit f = fit_line(x, mean);
            std::vector<double> fit;
            for (double xi : x) fit.push_back(f.slope * xi + f.intercept);
            p.series.push_back({"a log(1/eps) + b", eps, fit, true});
            p.notes.push_back("a = " + detail::fixed(f.slope, 4));
            p.notes.push_back("b = " + detail::fixed(f.intercept, 4));
            p.notes.push_back("R^2 = " + detail::fixed(f.r2, 4));
            summary.row() << "renorm.csv" << "slope" << f.slope;
            summary.row() << "renorm.csv" << "intercept" << f.intercept;
            summary.row() << "renorm.csv" << "r2" << f.r2;
        }
        s.write("renorm.svg", render_svg(p));
    } else {
        missing.push_back("renorm.csv");
    }
    if (has("sweep.csv")) {
        CsvData d = parse_csv(read_file(s.ctx.out / "sweep.csv"));
        auto eps = d.numbers("eps"), ren = d.numbers("renormalized"), diff = d.numbers("diff_norm"),
             fin = d.numbers("final_sup");
        PlotSeries a{"renormalized", {}, {}, false}, b{"unrenormalized", {}, {}, true};
        PlotSeries fa{"renormalized", {}, {}, false}, fb{"unrenormalized", {}, {}, true};
        for (std::size_t i = 0; i < eps.size(); ++i) {
            PlotSeries& tgt = ren[i] > 0.5 ? a : b;
            PlotSeries& ftgt = ren[i] > 0.5 ? fa : fb;
            tgt.x.push_back(eps[i]);
            tgt.y.push_back(diff[i]);
            ftgt.x.push_back(eps[i]);
            ftgt.y.push_back(fin[i]);
            summary.row() << "sweep.csv" << std::string(ren[i] > 0.5 ? "final_sup_renormalized@" : "final_sup_raw@") +
                                                format_double(eps[i])
                          << fin[i];
        }
        s.write("sweep.svg", render_svg({"successive differences", "eps", "||u^eps - u^(eps/2)||", true, true, {a, b}, {}}));
        s.write("sweep_final.svg", render_svg({"final sup norm", "eps", "||u^eps(T)||_inf", true, true, {fa, fb}, {}}));
    } else {
        missing.push_back("sweep.csv");
    }
    if (has("regularity.csv")) {
        CsvData d = parse_csv(read_file(s.ctx.out / "regularity.csv"));
        auto sig = d.numbers("sigma"), N = d.numbers("N"), med = d.numbers("median");
        std::map<double, PlotSeries> by;
        for (std::size_t i = 0; i < sig.size(); ++i) {
            auto& ser = by[sig[i]];
            ser.label = "sigma = " + format_double(sig[i]);
            ser.x.push_back(N[i]);
            ser.y.push_back(med[i]);
            summary.row() << "regularity.csv" << "median@sigma=" + format_double(sig[i]) + ",N=" + format_double(N[i])
                          << med[i];
        }
        PlotSpec p{"noise norm medians", "N", "median ||xi||_{C^sigma}", true, true, {}, {}};
        for (auto& [k, v] : by) p.series.push_back(v);
        s.write("regularity.svg", render_svg(p));
    } else {
        missing.push_back("regularity.csv");
    }
    s.write("summary.csv", summary.str());
    if (summary.size() == 0) {
        s.log << "report: nothing to summarize; missing inputs:";
        for (const auto& m : missing) s.log << " " << m;
        s.log << "\n";
        return 1;
    }
    return 0;
}

}  // namespace cmd

/// Runs one command; updates and saves the manifest even on failure.
inline int run_command(const std::string& command, const CommandContext& ctx, std::ostream& log = std::cerr) {
    static const std::map<std::string, int (*)(const cmd::Session&)> table{
        {"gen-graph", cmd::gen_graph},           {"spectrum", cmd::spectrum},
        {"verify-geometry", cmd::verify_geometry_cmd}, {"verify-kernel", cmd::verify_kernel},
        {"norm", cmd::norm},                     {"paraproduct", cmd::paraproduct_cmd},
        {"commutator-test", cmd::commutator_test}, {"sample-noise", cmd::sample_noise_cmd},
        {"renorm-constant", cmd::renorm_cmd},    {"enhance", cmd::enhance_cmd},
        {"solve", cmd::solve},                   {"sweep-eps", cmd::sweep_eps},
        {"report", cmd::report}};
    auto it = table.find(command);
    if (it == table.end()) {
        log << "unknown command '" << command << "'\n" << usage();
        return 1;
    }
    int code = 0;
    auto t0 = std::chrono::steady_clock::now();
    std::unique_ptr<Manifest> manifest;
    try {
        std::filesystem::create_directories(ctx.out);
        manifest = std::make_unique<Manifest>(ctx.out);
        if (command != "report") manifest->set_config(to_json(ctx.cfg));
        cmd::Session s{ctx, *manifest, log, command};
        code = it->second(s);
    } catch (const ValidationError& e) {
        log << "error: " << e.what() << "\n";
        code = 1;
    } catch (const NumericalAbort& e) {
        log << "numerical abort: " << e.what() << "\n";
        code = 2;
    } catch (const std::filesystem::filesystem_error& e) {
        log << "error: " << e.what() << "\n";
        code = 1;
    }
    if (manifest) {
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        manifest->record_run(command, secs, code);
        try {
            manifest->save();
        } catch (const std::exception& e) {
            log << "error: cannot save manifest: " << e.what() << "\n";
            if (code == 0) code = 1;
        }
    }
    return code;
}

}  // namespace semiheat
