#pragma once

// Run configuration: one JSON document with a section per module. Every
// default lives here; serialization writes every field so a snapshot fully
// determines a run.

#include "semiheat/pam.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace semiheat {

struct GraphSection {
    std::string spec = "torus2d:8:scaled";
    std::vector<double> omega{1.0};  ///< one value (constant) or one per vertex
};

struct SpectralSection {
    int a = 2;
    std::vector<std::string> kernel_targets{"UE", "Lip", "Gq"};
    std::vector<double> kernel_times{0.0625, 0.125, 0.25, 0.5, 1.0};
    KernelFitOptions kernel{};
};

struct NormsSection {
    std::vector<double> sigmas{-0.5, 0.3, 0.5, 0.8};
    int a = 2;
    int j_max = 40;
    std::vector<double> besov_p{2.0};
    double besov_q = 2.0;
    std::vector<double> sobolev_s{1.0};
    double sobolev_p = 2.0;
    std::string field = "noise";  ///< "noise" or "manufactured:<alpha>"
    std::vector<int> study_sizes{};  ///< torus sizes for the regularity study (empty: skip)
};

struct NoiseSection {
    std::uint64_t seed = 1;
    std::vector<double> eps_ladder{0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625};
    int draws = 1;
    int draw = 0;          ///< draw used by enhance / solve / sweep-eps
    bool projected = false;
};

struct CommutatorSection {
    double alpha = 0.6, beta = 0.8, gamma = -0.9;
    int samples = 50;
};

struct SolveSection {
    SolverConfig solver{};
    double u0 = 1.0;       ///< constant initial datum
    double eps = 0.25;     ///< regularization for a single solve
};

struct RunConfig {
    GraphSection graph;
    SpectralSection spectral;
    ParaConfig paraproducts;
    NormsSection norms;
    NoiseSection noise;
    CommutatorSection commutator;
    SolveSection solve;
    GeometryThresholds geometry;
    std::string output_dir = "out";
};

inline std::string solver_mode_name(SolverMode m) {
    switch (m) {
        case SolverMode::Direct: return "direct";
        case SolverMode::Paracontrolled: return "paracontrolled";
        case SolverMode::GlobalLinear: return "global_linear";
    }
    return "direct";
}

inline nlohmann::json to_json(const RunConfig& c) {
    using nlohmann::json;
    const SolverConfig& s = c.solve.solver;
    const KernelFitOptions& k = c.spectral.kernel;
    const GeometryThresholds& g = c.geometry;
    json j;
    j["graph"] = {{"spec", c.graph.spec}, {"omega", c.graph.omega}};
    j["spectral"] = {{"a", c.spectral.a},
                     {"kernel_targets", c.spectral.kernel_targets},
                     {"kernel_times", c.spectral.kernel_times},
                     {"kernel", {{"q", k.q}, {"kappa", k.kappa}, {"dense_limit", k.dense_limit},
                                 {"resolution", k.resolution}, {"samples", k.samples}, {"seed", k.seed}}}};
    j["paraproducts"] = {{"b", c.paraproducts.b},
                         {"quadrature", {{"t_min", c.paraproducts.quad.t_min},
                                         {"panels", c.paraproducts.quad.panels},
                                         {"nodes", c.paraproducts.quad.nodes}}},
                         {"oracle_max_n", c.paraproducts.oracle_max_n},
                         {"tolerance", c.paraproducts.tolerance}};
    j["norms"] = {{"sigmas", c.norms.sigmas}, {"a", c.norms.a}, {"j_max", c.norms.j_max},
                  {"besov_p", c.norms.besov_p}, {"besov_q", c.norms.besov_q}, {"sobolev_s", c.norms.sobolev_s},
                  {"sobolev_p", c.norms.sobolev_p}, {"field", c.norms.field}, {"study_sizes", c.norms.study_sizes}};
    j["noise"] = {{"seed", c.noise.seed}, {"eps_ladder", c.noise.eps_ladder}, {"draws", c.noise.draws},
                  {"draw", c.noise.draw}, {"projected", c.noise.projected}};
    j["commutator"] = {{"alpha", c.commutator.alpha}, {"beta", c.commutator.beta},
                       {"gamma", c.commutator.gamma}, {"samples", c.commutator.samples}};
    j["pam"] = {{"T", s.T}, {"steps", s.steps}, {"b", s.b}, {"F", s.F}, {"picard_max", s.picard_max},
                {"picard_tol", s.picard_tol}, {"lambda", s.lambda}, {"lambda_cap", s.lambda_cap},
                {"alpha", s.alpha}, {"alpha_prime", s.alpha_prime}, {"divergence_cap", s.divergence_cap},
                {"mode", solver_mode_name(s.mode)}, {"u0", c.solve.u0}, {"eps", c.solve.eps}};
    j["geometry"] = {{"samples", g.samples}, {"seed", g.seed}, {"max_centers", g.max_centers},
                     {"degiorgi_q", g.degiorgi_q}, {"doubling_max", g.doubling_max},
                     {"poincare_max", g.poincare_max}, {"degiorgi_max", g.degiorgi_max},
                     {"min_diameter", g.min_diameter}};
    j["output"] = {{"dir", c.output_dir}};
    return j;
}

namespace detail {

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out, const std::string& section) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError("config: bad value for " + section + "." + key);
    }
}

inline const nlohmann::json& section(const nlohmann::json& j, const char* name) {
    static const nlohmann::json empty = nlohmann::json::object();
    if (!j.contains(name)) return empty;
    require(j.at(name).is_object(), std::string("config: section '") + name + "' must be an object");
    return j.at(name);
}

inline void reject_unknown(const nlohmann::json& j, const std::vector<std::string>& known, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw ValidationError("config: unknown key '" + it.key() + "' in " + where);
}

}  // namespace detail

inline void validate(const RunConfig& c) {
    require(!c.graph.spec.empty(), "config: graph.spec is empty");
    require(!c.graph.omega.empty(), "config: graph.omega is empty");
    for (double w : c.graph.omega) require(std::isfinite(w) && w >= 0, "config: graph.omega must be >= 0");
    require(c.spectral.a >= 1 && c.norms.a >= 1, "config: a must be >= 1");
    for (const auto& t : c.spectral.kernel_targets) parse_kernel_target(t);
    for (double t : c.spectral.kernel_times) require(t > 0, "config: kernel_times must be positive");
    require(c.paraproducts.b >= 1, "config: paraproducts.b must be >= 1");
    require(c.paraproducts.quad.t_min > 0 && c.paraproducts.quad.t_min < 1 && c.paraproducts.quad.panels >= 1 &&
                c.paraproducts.quad.nodes >= 1,
            "config: bad paraproducts.quadrature");
    require(c.paraproducts.tolerance > 0, "config: paraproducts.tolerance must be positive");
    require(c.norms.j_max >= 0, "config: norms.j_max must be >= 0");
    for (double s : c.norms.sigmas) require(s < 2, "config: norms.sigmas must be < 2");
    for (double p : c.norms.besov_p) require(p >= 1, "config: norms.besov_p must be >= 1");
    require(c.norms.field == "noise" || c.norms.field.rfind("manufactured:", 0) == 0,
            "config: norms.field must be 'noise' or 'manufactured:<alpha>'");
    for (int n : c.norms.study_sizes) require(n >= 3, "config: norms.study_sizes entries must be >= 3");
    require(!c.noise.eps_ladder.empty(), "config: noise.eps_ladder is empty");
    for (double e : c.noise.eps_ladder) require(e > 0, "config: eps_ladder entries must be positive");
    require(c.noise.draws >= 1 && c.noise.draw >= 0, "config: noise.draws must be >= 1, draw >= 0");
    require(c.commutator.samples >= 1, "config: commutator.samples must be >= 1");
    const SolverConfig& s = c.solve.solver;
    require(s.T > 0 && s.steps >= 1, "config: pam.T must be positive and steps >= 1");
    require(s.picard_tol > 0 && s.picard_max >= 1, "config: pam tolerances must be positive");
    require(s.lambda >= 1 && s.lambda_cap >= s.lambda, "config: pam.lambda must be >= 1 and <= lambda_cap");
    require(s.divergence_cap > 0, "config: pam.divergence_cap must be positive");
    require(c.solve.eps > 0, "config: pam.eps must be positive");
    Nonlinearity::by_name(s.F);
    if (s.mode == SolverMode::GlobalLinear) require(s.F == "identity", "config: global_linear needs F = identity");
    require(!c.output_dir.empty(), "config: output.dir is empty");
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    using detail::read_opt;
    using detail::section;
    require(j.is_object(), "config: top level must be an object");
    detail::reject_unknown(j, {"graph", "spectral", "paraproducts", "norms", "noise", "commutator", "pam", "geometry", "output"},
                           "top level");
    RunConfig c;
    {
        const auto& s = section(j, "graph");
        detail::reject_unknown(s, {"spec", "omega"}, "graph");
        read_opt(s, "spec", c.graph.spec, "graph");
        if (s.contains("omega") && s.at("omega").is_number()) c.graph.omega = {s.at("omega").get<double>()};
        else read_opt(s, "omega", c.graph.omega, "graph");
    }
    {
        const auto& s = section(j, "spectral");
        detail::reject_unknown(s, {"a", "kernel_targets", "kernel_times", "kernel"}, "spectral");
        read_opt(s, "a", c.spectral.a, "spectral");
        read_opt(s, "kernel_targets", c.spectral.kernel_targets, "spectral");
        read_opt(s, "kernel_times", c.spectral.kernel_times, "spectral");
        const auto& k = section(s, "kernel");
        detail::reject_unknown(k, {"q", "kappa", "dense_limit", "resolution", "samples", "seed"}, "spectral.kernel");
        read_opt(k, "q", c.spectral.kernel.q, "spectral.kernel");
        read_opt(k, "kappa", c.spectral.kernel.kappa, "spectral.kernel");
        read_opt(k, "dense_limit", c.spectral.kernel.dense_limit, "spectral.kernel");
        read_opt(k, "resolution", c.spectral.kernel.resolution, "spectral.kernel");
        read_opt(k, "samples", c.spectral.kernel.samples, "spectral.kernel");
        read_opt(k, "seed", c.spectral.kernel.seed, "spectral.kernel");
    }
    {
        const auto& s = section(j, "paraproducts");
        detail::reject_unknown(s, {"b", "quadrature", "oracle_max_n", "tolerance"}, "paraproducts");
        read_opt(s, "b", c.paraproducts.b, "paraproducts");
        read_opt(s, "oracle_max_n", c.paraproducts.oracle_max_n, "paraproducts");
        read_opt(s, "tolerance", c.paraproducts.tolerance, "paraproducts");
        const auto& q = section(s, "quadrature");
        detail::reject_unknown(q, {"t_min", "panels", "nodes"}, "paraproducts.quadrature");
        read_opt(q, "t_min", c.paraproducts.quad.t_min, "paraproducts.quadrature");
        read_opt(q, "panels", c.paraproducts.quad.panels, "paraproducts.quadrature");
        read_opt(q, "nodes", c.paraproducts.quad.nodes, "paraproducts.quadrature");
    }
    {
        const auto& s = section(j, "norms");
        detail::reject_unknown(s, {"sigmas", "a", "j_max", "besov_p", "besov_q", "sobolev_s", "sobolev_p", "field", "study_sizes"},
                               "norms");
        read_opt(s, "sigmas", c.norms.sigmas, "norms");
        read_opt(s, "a", c.norms.a, "norms");
        read_opt(s, "j_max", c.norms.j_max, "norms");
        read_opt(s, "besov_p", c.norms.besov_p, "norms");
        read_opt(s, "besov_q", c.norms.besov_q, "norms");
        read_opt(s, "sobolev_s", c.norms.sobolev_s, "norms");
        read_opt(s, "sobolev_p", c.norms.sobolev_p, "norms");
        read_opt(s, "field", c.norms.field, "norms");
        read_opt(s, "study_sizes", c.norms.study_sizes, "norms");
    }
    {
        const auto& s = section(j, "noise");
        detail::reject_unknown(s, {"seed", "eps_ladder", "draws", "draw", "projected"}, "noise");
        read_opt(s, "seed", c.noise.seed, "noise");
        read_opt(s, "eps_ladder", c.noise.eps_ladder, "noise");
        read_opt(s, "draws", c.noise.draws, "noise");
        read_opt(s, "draw", c.noise.draw, "noise");
        read_opt(s, "projected", c.noise.projected, "noise");
    }
    {
        const auto& s = section(j, "commutator");
        detail::reject_unknown(s, {"alpha", "beta", "gamma", "samples"}, "commutator");
        read_opt(s, "alpha", c.commutator.alpha, "commutator");
        read_opt(s, "beta", c.commutator.beta, "commutator");
        read_opt(s, "gamma", c.commutator.gamma, "commutator");
        read_opt(s, "samples", c.commutator.samples, "commutator");
    }
    {
        const auto& s = section(j, "pam");
        detail::reject_unknown(s, {"T", "steps", "b", "F", "picard_max", "picard_tol", "lambda", "lambda_cap", "alpha",
                                   "alpha_prime", "divergence_cap", "mode", "u0", "eps"},
                               "pam");
        SolverConfig& p = c.solve.solver;
        read_opt(s, "T", p.T, "pam");
        read_opt(s, "steps", p.steps, "pam");
        read_opt(s, "b", p.b, "pam");
        read_opt(s, "F", p.F, "pam");
        read_opt(s, "picard_max", p.picard_max, "pam");
        read_opt(s, "picard_tol", p.picard_tol, "pam");
        read_opt(s, "lambda", p.lambda, "pam");
        read_opt(s, "lambda_cap", p.lambda_cap, "pam");
        read_opt(s, "alpha", p.alpha, "pam");
        read_opt(s, "alpha_prime", p.alpha_prime, "pam");
        read_opt(s, "divergence_cap", p.divergence_cap, "pam");
        std::string mode = solver_mode_name(p.mode);
        read_opt(s, "mode", mode, "pam");
        p.mode = parse_solver_mode(mode);
        read_opt(s, "u0", c.solve.u0, "pam");
        read_opt(s, "eps", c.solve.eps, "pam");
    }
    {
        const auto& s = section(j, "geometry");
        detail::reject_unknown(s, {"samples", "seed", "max_centers", "degiorgi_q", "doubling_max", "poincare_max",
                                   "degiorgi_max", "min_diameter"},
                               "geometry");
        GeometryThresholds& g = c.geometry;
        read_opt(s, "samples", g.samples, "geometry");
        read_opt(s, "seed", g.seed, "geometry");
        read_opt(s, "max_centers", g.max_centers, "geometry");
        read_opt(s, "degiorgi_q", g.degiorgi_q, "geometry");
        read_opt(s, "doubling_max", g.doubling_max, "geometry");
        read_opt(s, "poincare_max", g.poincare_max, "geometry");
        read_opt(s, "degiorgi_max", g.degiorgi_max, "geometry");
        read_opt(s, "min_diameter", g.min_diameter, "geometry");
    }
    {
        const auto& s = section(j, "output");
        detail::reject_unknown(s, {"dir"}, "output");
        read_opt(s, "dir", c.output_dir, "output");
    }
    validate(c);
    return c;
}

inline RunConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return config_from_json(j);
}

inline std::string serialize_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Graph with the configured noise weight applied.
inline GraphSpace configured_graph(const RunConfig& c) {
    GraphSpace g = build_graph(c.graph.spec);
    if (c.graph.omega.size() == 1) return g.with_weight(Field::Constant(g.size(), c.graph.omega[0]));
    require(static_cast<int>(c.graph.omega.size()) == g.size(), "config: graph.omega has wrong length");
    return g.with_weight(Eigen::Map<const Field>(c.graph.omega.data(), g.size()));
}

inline ParaConfig configured_para(const RunConfig& c) { return c.paraproducts; }

}  // namespace semiheat
