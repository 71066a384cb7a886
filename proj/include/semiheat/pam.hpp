#pragma once

// Schauder resolution operator, paracontrolled calculus and solvers for the
// renormalized (generalized) parabolic Anderson model
//   (d/dt + L) u = F(u) xi^eps - c F'(u) F(u).

#include "semiheat/noise.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace semiheat {

/// F with its first two derivatives, applied vertexwise.
struct Nonlinearity {
    std::string name;
    std::function<double(double)> F, dF, d2F;

    static Nonlinearity by_name(const std::string& name) {
        if (name == "identity") return {name, [](double x) { return x; }, [](double) { return 1.0; }, [](double) { return 0.0; }};
        if (name == "tanh")
            return {name, [](double x) { return std::tanh(x); },
                    [](double x) { double c = 1.0 / std::cosh(x); return c * c; },
                    [](double x) { double c = 1.0 / std::cosh(x); return -2.0 * std::tanh(x) * c * c; }};
        if (name == "sigmoid")
            return {name, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                    [](double x) { double s = 1.0 / (1.0 + std::exp(-x)); return s * (1 - s); },
                    [](double x) { double s = 1.0 / (1.0 + std::exp(-x)); return s * (1 - s) * (1 - 2 * s); }};
        if (name == "scaled-sigmoid")  // 2 / (1 + e^{-x}) - 1
            return {name, [](double x) { return std::tanh(x / 2); },
                    [](double x) { double c = 1.0 / std::cosh(x / 2); return c * c / 2; },
                    [](double x) { double c = 1.0 / std::cosh(x / 2); return -std::tanh(x / 2) * c * c / 2; }};
        if (name == "zero") return {name, [](double) { return 0.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
        if (name == "one") return {name, [](double) { return 1.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
        throw ValidationError("unknown nonlinearity '" + name + "' (identity, tanh, sigmoid, scaled-sigmoid, zero, one)");
    }

    Field apply(const Field& u) const { return u.unaryExpr(F); }
    Field apply_d(const Field& u) const { return u.unaryExpr(dF); }
    Field apply_d2(const Field& u) const { return u.unaryExpr(d2F); }
};

enum class SolverMode { Direct, Paracontrolled, GlobalLinear };

inline SolverMode parse_solver_mode(const std::string& s) {
    if (s == "direct") return SolverMode::Direct;
    if (s == "paracontrolled") return SolverMode::Paracontrolled;
    if (s == "global_linear") return SolverMode::GlobalLinear;
    throw ValidationError("unknown solver mode '" + s + "'");
}

struct SolverConfig {
    double T = 1.0;
    int steps = 64;
    int b = 3;               ///< paraproduct order inside the paracontrolled product
    std::string F = "identity";
    int picard_max = 50;
    double picard_tol = 1e-10;
    double lambda = 1.0;
    double lambda_cap = 65536.0;
    double alpha = 0.75;
    double alpha_prime = 0.65;
    double divergence_cap = 1e8;
    SolverMode mode = SolverMode::Direct;

    TimeGrid grid() const { return TimeGrid::uniform(T, steps); }
};

struct Trajectory {
    SpaceTimeField u;
    std::vector<double> step_residuals;
    std::vector<double> step_contraction;
    std::vector<double> picard_distances;
    std::vector<double> contraction_factors;
    double lambda_used = 0.0;
    int iterations = 0;
    bool aborted = false;
    std::string message;
};

/// A paracontrolled triple (f, f', f#) with f = Pi_{f'}(Z) + f# at each node.
struct ParacontrolledFn {
    SpaceTimeField f, fprime, fsharp, Z;

    /// max over nodes of |f - Pi_{f'}(Z) - f#|
    double invariant_defect(const ParaEngine& e) const {
        double worst = 0.0;
        for (std::size_t k = 0; k < f.size(); ++k) {
            Field d = f.values[k] - e.paraproduct(fprime.values[k], Z.values[k]) - fsharp.values[k];
            worst = std::max(worst, sup_norm(d));
        }
        return worst;
    }
};

/// (f, f') with the sharp part recomputed from the defining identity.
inline ParacontrolledFn make_paracontrolled(const ParaEngine& e, SpaceTimeField f, SpaceTimeField fprime,
                                            SpaceTimeField Z) {
    require(f.times.same_as(fprime.times) && f.times.same_as(Z.times), "paracontrolled: grid mismatch");
    std::vector<Field> sharp;
    for (std::size_t k = 0; k < f.size(); ++k) sharp.push_back(f.values[k] - e.paraproduct(fprime.values[k], Z.values[k]));
    ParacontrolledFn out;
    out.fsharp = SpaceTimeField(f.times, std::move(sharp));
    out.f = std::move(f);
    out.fprime = std::move(fprime);
    out.Z = std::move(Z);
    return out;
}

// ---------------------------------------------------------------------------
// Resolution operator
// ---------------------------------------------------------------------------

namespace detail {

/// phi-functions of exponential integrators: phi1(z) = (e^z - 1)/z, phi2(z) = (e^z - 1 - z)/z^2.
inline double etd_phi1(double z) { return std::abs(z) < 1e-8 ? 1 + z / 2 : std::expm1(z) / z; }
inline double etd_phi2(double z) {
    if (std::abs(z) < 1e-2) return 0.5 + z / 6 + z * z / 24 + z * z * z / 120 + z * z * z * z / 720;
    return (std::expm1(z) - z) / (z * z);
}

/// int_{ua}^{ub} phi_b(u l) du and int_{ua}^{ub} u phi_b(u l) du.
inline std::pair<double, double> kernel_moments(int b, double l, double ua, double ub) {
    if (l == 0.0) return {ub - ua, 0.5 * (ub * ub - ua * ua)};
    if (l * (ub - ua) < 0.5) {
        static const auto rule = [] {
            std::vector<double> x, w;
            gauss_legendre(10, x, w);
            return std::make_pair(x, w);
        }();
        double m0 = 0, m1 = 0, half = 0.5 * (ub - ua), mid = 0.5 * (ub + ua);
        for (std::size_t i = 0; i < rule.first.size(); ++i) {
            double u = mid + half * rule.first[i];
            double v = phi_a(b, u * l) * half * rule.second[i];
            m0 += v;
            m1 += u * v;
        }
        return {m0, m1};
    }
    // int x^m e^{-x}/m! dx over [xa, xb] = phi_{m+1}(xa) - phi_{m+1}(xb)
    const double xa = l * ua, xb = l * ub;
    double m0 = 0, m1 = 0;
    for (int m = 0; m < b; ++m) {
        m0 += phi_a(m + 1, xa) - phi_a(m + 1, xb);
        m1 += (m + 1) * (phi_a(m + 2, xa) - phi_a(m + 2, xb));
    }
    return {m0 / l, m1 / (l * l)};
}

}  // namespace detail

/// R(v)_t = int_0^t P^{(b)}_{t-s} v(s) ds for v piecewise linear in time,
/// integrated exactly mode by mode. b = 1 is the Duhamel integral of the heat
/// equation.
inline SpaceTimeField resolution(const SpectralDecomposition& s, int b, const SpaceTimeField& v) {
    require(b >= 1, "resolution: b must be >= 1");
    require(v.size() >= 1 && v.times[0] == 0.0, "resolution: grid must start at 0");
    const int n = s.size();
    const std::size_t K = v.size();
    const Field& lam = s.lambdas();
    Matrix vh(n, static_cast<Eigen::Index>(K));
    for (std::size_t k = 0; k < K; ++k) vh.col(static_cast<Eigen::Index>(k)) = s.forward(v.values[k]);
    Matrix rh = Matrix::Zero(n, static_cast<Eigen::Index>(K));
    if (b == 1) {
        for (std::size_t k = 1; k < K; ++k) {
            const double h = v.times[k] - v.times[k - 1];
            for (int i = 0; i < n; ++i) {
                const double z = -h * lam[i];
                const double p1 = detail::etd_phi1(z), p2 = detail::etd_phi2(z);
                const auto ki = static_cast<Eigen::Index>(k);
                rh(i, ki) = std::exp(z) * rh(i, ki - 1) + h * (p1 - p2) * vh(i, ki - 1) + h * p2 * vh(i, ki);
            }
        }
    } else {
        for (std::size_t k = 1; k < K; ++k) {
            const double t = v.times[k];
            for (std::size_t j = 0; j < k; ++j) {
                const double s0 = v.times[j], s1 = v.times[j + 1], h = s1 - s0;
                for (int i = 0; i < n; ++i) {
                    // v(s) = v_j + (s - s0)/h (v_{j+1} - v_j), s = t - u
                    auto [m0, m1] = detail::kernel_moments(b, lam[i], t - s1, t - s0);
                    const double a0 = vh(i, static_cast<Eigen::Index>(j));
                    const double a1 = vh(i, static_cast<Eigen::Index>(j + 1));
                    const double slope = (a1 - a0) / h;
                    rh(i, static_cast<Eigen::Index>(k)) += a0 * m0 + slope * ((t - s0) * m0 - m1);
                }
            }
        }
    }
    std::vector<Field> out;
    for (std::size_t k = 0; k < K; ++k) out.push_back(s.backward(Field(rh.col(static_cast<Eigen::Index>(k)))));
    return SpaceTimeField(v.times, std::move(out));
}

/// 0 followed by geometric nodes T 2^{-k/per_octave} down to t_min: resolves
/// the weights e^{-lambda t} for large lambda.
inline TimeGrid graded_grid(double T, double t_min, int per_octave) {
    require(T > 0 && t_min > 0 && t_min < T && per_octave >= 1, "graded_grid: bad parameters");
    int count = static_cast<int>(std::ceil(std::log2(T / t_min) * per_octave));
    std::vector<double> t{0.0};
    for (int k = count; k >= 0; --k) t.push_back(T * std::exp2(-static_cast<double>(k) / per_octave));
    std::ostringstream id;
    id << "graded:" << T << ":" << t_min << ":" << per_octave;
    return TimeGrid(std::move(t), id.str());
}

/// e^{-tL} u0 on the grid.
inline SpaceTimeField heat_flow(const SpectralDecomposition& s, const Field& u0, const TimeGrid& grid) {
    std::vector<Field> v;
    for (double t : grid.nodes()) v.push_back(heat(s, t, u0));
    return SpaceTimeField(grid, std::move(v));
}

// ---------------------------------------------------------------------------
// Schauder estimates
// ---------------------------------------------------------------------------

struct SchauderReport {
    double constant_CT = 0.0;        ///< sup ||R(v)||_{C^{beta+2}} / ((1+T) sup ||v||_{C^beta})
    double constant_Teps = 0.0;      ///< sup ||R(v)||_{C^{beta+2-2eps}} / (T^eps sup ||v||_{C^beta})
    std::vector<double> lambdas;
    std::vector<double> weighted;    ///< ||R(v)||_{W_l C^{beta+2-2eps}} / ||v||_{W_l C^beta}, max over samples
    double weighted_slope = 0.0;     ///< log-log slope of `weighted` against lambda
    double constant_weighted = 0.0;  ///< max over lambda of lambda^{eps} * weighted
};

/// Empirical constants of the three Schauder inequalities over samples
/// v(t) = cos(pi t/T) f1 + sin(pi t/T) f2 with f1, f2 manufactured at regularity beta.
inline SchauderReport schauder_check(const SpectralDecomposition& s, int b, double beta, double eps_prime,
                                     int samples, const TimeGrid& grid, const std::vector<double>& lambdas,
                                     std::uint64_t seed, const TimeGrid& norm_grid = TimeGrid::dyadic()) {
    require(beta > -2 && beta < 0, "schauder_check: beta must lie in (-2, 0)");
    require(eps_prime > 0 && eps_prime < 1, "schauder_check: eps' must lie in (0, 1)");
    SchauderReport rep;
    rep.lambdas = lambdas;
    rep.weighted.assign(lambdas.size(), 0.0);
    require(grid[0] == 0.0 && grid.size() >= 2, "schauder_check: grid must start at 0");
    const double T = grid.back();
    const int n = s.size();
    const double pi = std::numbers::pi;
    std::vector<SchauderReport> per(static_cast<std::size_t>(samples));
    parallel_for(samples, [&](int k) {
        auto rng = make_rng(seed, static_cast<std::uint64_t>(k));
        Field f1 = manufactured_field(s, beta, rng), f2 = manufactured_field(s, beta, rng);
        std::vector<Field> vals;
        for (double t : grid.nodes()) vals.push_back(std::cos(pi * t / T) * f1 + std::sin(pi * t / T) * f2);
        SpaceTimeField v(grid, vals);
        SpaceTimeField r = resolution(s, b, v);
        Matrix V(n, static_cast<Eigen::Index>(grid.size())), R(n, static_cast<Eigen::Index>(grid.size()));
        for (std::size_t j = 0; j < grid.size(); ++j) {
            V.col(static_cast<Eigen::Index>(j)) = v.values[j];
            R.col(static_cast<Eigen::Index>(j)) = r.values[j];
        }
        auto nv = holder_norms(s, V, beta, 2, norm_grid);
        auto nr2 = holder_norms(s, R, std::min(beta + 2, 1.999), 2, norm_grid);
        auto nre = holder_norms(s, R, beta + 2 - 2 * eps_prime, 2, norm_grid);
        double sv = 0, sr2 = 0, sre = 0;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            sv = std::max(sv, nv[j].value);
            sr2 = std::max(sr2, nr2[j].value);
            sre = std::max(sre, nre[j].value);
        }
        SchauderReport& out = per[static_cast<std::size_t>(k)];
        out.constant_CT = sr2 / ((1 + T) * sv);
        out.constant_Teps = sre / (std::pow(T, eps_prime) * sv);
        for (double l : lambdas) {
            double wv = 0, wr = 0;
            for (std::size_t j = 0; j < grid.size(); ++j) {
                double w = std::exp(-l * grid[j]);
                wv = std::max(wv, w * nv[j].value);
                wr = std::max(wr, w * nre[j].value);
            }
            out.weighted.push_back(wr / wv);
        }
    });
    for (const auto& p : per) {
        rep.constant_CT = std::max(rep.constant_CT, p.constant_CT);
        rep.constant_Teps = std::max(rep.constant_Teps, p.constant_Teps);
        for (std::size_t i = 0; i < lambdas.size(); ++i) rep.weighted[i] = std::max(rep.weighted[i], p.weighted[i]);
    }
    if (lambdas.size() >= 2) {
        std::vector<double> x, y;
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            x.push_back(std::log(lambdas[i]));
            y.push_back(std::log(rep.weighted[i]));
        }
        rep.weighted_slope = fit_line(x, y).slope;
    }
    for (std::size_t i = 0; i < lambdas.size(); ++i)
        rep.constant_weighted = std::max(rep.constant_weighted, std::pow(lambdas[i], eps_prime) * rep.weighted[i]);
    return rep;
}

// ---------------------------------------------------------------------------
// Paracontrolled product and lift
// ---------------------------------------------------------------------------

/// f zeta for f paracontrolled by Z and the enhanced noise (zeta, zeta2), at node k:
///   Pi_f(zeta) + Pi_zeta(f) + Pi(f#, zeta) + C(Z, f', zeta) + f' zeta2 + Delta_{-1}(f, zeta).
/// The low-frequency part completes the Bony decomposition, so smooth data
/// reproduce f zeta - f' (Pi(Z, zeta) - zeta2).
inline Field paracontrolled_product(const ParaEngine& e, const ParacontrolledFn& pf, const EnhancedNoise& zhat,
                                    std::size_t k) {
    require(pf.f.times.same_as(zhat.zeta2.times) && pf.Z.times.same_as(zhat.zeta2.times),
            "paracontrolled_product: grid mismatch");
    require(k < pf.f.size(), "paracontrolled_product: node out of range");
    const Field& f = pf.f.values[k];
    const Field& fp = pf.fprime.values[k];
    const Field& zeta = zhat.zeta;
    return e.paraproduct(f, zeta) + e.paraproduct(zeta, f) + e.resonant(pf.fsharp.values[k], zeta) +
           e.commutator(pf.Z.values[k], fp, zeta) + fp.cwiseProduct(zhat.zeta2.values[k]) + e.low_freq(f, zeta);
}

/// (F(f), F'(f) f') with the sharp part recomputed.
inline ParacontrolledFn nonlinear_lift(const ParaEngine& e, const Nonlinearity& F, const ParacontrolledFn& pf) {
    std::vector<Field> f, fp;
    for (std::size_t k = 0; k < pf.f.size(); ++k) {
        f.push_back(F.apply(pf.f.values[k]));
        fp.push_back(F.apply_d(pf.f.values[k]).cwiseProduct(pf.fprime.values[k]));
    }
    return make_paracontrolled(e, SpaceTimeField(pf.f.times, std::move(f)), SpaceTimeField(pf.f.times, std::move(fp)),
                               pf.Z);
}

// ---------------------------------------------------------------------------
// Direct solver
// ---------------------------------------------------------------------------

/// Exponential time differencing, second order (Cox-Matthews ETDRK2):
///   a       = e^{-hL} u_n + h phi1(-hL) N(u_n, t_n)
///   u_{n+1} = a + h phi2(-hL) (N(a, t_{n+1}) - N(u_n, t_n))
/// with N(u, t) = F(u) xi - c(t) F'(u) F(u).
inline Trajectory solve_direct(const SpectralDecomposition& s, const SolverConfig& cfg, const Field& u0,
                               const Field& xi_eps, const std::function<Field(std::size_t)>& correction) {
    require(u0.size() == s.size() && xi_eps.size() == s.size(), "solve_direct: size mismatch");
    const Nonlinearity F = Nonlinearity::by_name(cfg.F);
    const TimeGrid grid = cfg.grid();
    const int n = s.size();
    const Field& lam = s.lambdas();
    auto rhs = [&](const Field& u, const Field& c) -> Field {
        Field Fu = F.apply(u);
        return Fu.cwiseProduct(xi_eps) - c.cwiseProduct(F.apply_d(u)).cwiseProduct(Fu);
    };
    Trajectory tr;
    std::vector<Field> vals{u0};
    Field u = u0;
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const double h = grid[k] - grid[k - 1];
        Field e(n), p1(n), p2(n);
        for (int i = 0; i < n; ++i) {
            double z = -h * lam[i];
            e[i] = std::exp(z);
            p1[i] = h * detail::etd_phi1(z);
            p2[i] = h * detail::etd_phi2(z);
        }
        Field c0 = correction(k - 1), c1 = correction(k);
        Field N0 = rhs(u, c0);
        Field uh = s.forward(u), N0h = s.forward(N0);
        Field ah = e.cwiseProduct(uh) + p1.cwiseProduct(N0h);
        Field a = s.backward(ah);
        Field N1 = rhs(a, c1);
        Field next = s.backward(Field(ah + p2.cwiseProduct(s.forward(Field(N1 - N0)))));
        // local Lipschitz factor of the right-hand side times the step
        Field dN = F.apply_d(u).cwiseProduct(xi_eps) -
                   c0.cwiseProduct(F.apply_d2(u).cwiseProduct(F.apply(u)) + F.apply_d(u).cwiseProduct(F.apply_d(u)));
        tr.step_contraction.push_back(h * sup_norm(dN));
        tr.step_residuals.push_back(sup_norm(Field(next - a)));
        u = next;
        if (!u.allFinite() || sup_norm(u) > cfg.divergence_cap) {
            tr.aborted = true;
            tr.message = "divergence: sup norm exceeded " + std::to_string(cfg.divergence_cap) + " at t = " +
                         std::to_string(grid[k]);
            std::vector<double> done(grid.nodes().begin(), grid.nodes().begin() + static_cast<std::ptrdiff_t>(k));
            tr.u = SpaceTimeField(TimeGrid(done, grid.id() + ":partial"), vals);
            return tr;
        }
        vals.push_back(u);
    }
    tr.u = SpaceTimeField(grid, std::move(vals));
    return tr;
}

inline Trajectory solve_direct(const SpectralDecomposition& s, const SolverConfig& cfg, const Field& u0,
                               const Field& xi_eps, const Field& C_eps) {
    return solve_direct(s, cfg, u0, xi_eps, [&](std::size_t) { return C_eps; });
}

/// Direct solve with the time-dependent correction c(t) carried by an enhanced noise.
inline Trajectory solve_direct(const SpectralDecomposition& s, const SolverConfig& cfg, const Field& u0,
                               const EnhancedNoise& zhat) {
    require(cfg.grid().same_as(zhat.renorm.times), "solve_direct: grid mismatch with enhanced noise");
    return solve_direct(s, cfg, u0, zhat.zeta, [&](std::size_t k) { return zhat.renorm.values[k]; });
}

// ---------------------------------------------------------------------------
// Picard solvers
// ---------------------------------------------------------------------------

namespace detail {

/// One application of Phi: (u, u') -> (e^{-tL} u0 + R(F(u) <> zeta), F(u)).
inline std::pair<SpaceTimeField, SpaceTimeField> picard_step(const ParaEngine& e, const Nonlinearity& F,
                                                             const SpaceTimeField& heat0, const SpaceTimeField& u,
                                                             const SpaceTimeField& up, const EnhancedNoise& zhat,
                                                             ParacontrolledFn* lifted) {
    ParacontrolledFn pu = make_paracontrolled(e, u, up, zhat.X);
    ParacontrolledFn lf = nonlinear_lift(e, F, pu);
    std::vector<Field> prod(u.size());
    parallel_for(static_cast<int>(u.size()), [&](int k) {
        prod[static_cast<std::size_t>(k)] = paracontrolled_product(e, lf, zhat, static_cast<std::size_t>(k));
    });
    SpaceTimeField r = resolution(e.spectral(), 1, SpaceTimeField(u.times, std::move(prod)));
    std::vector<Field> v, vp;
    for (std::size_t k = 0; k < u.size(); ++k) {
        v.push_back(heat0.values[k] + r.values[k]);
        vp.push_back(F.apply(u.values[k]));
    }
    if (lifted) *lifted = std::move(pu);
    return {SpaceTimeField(u.times, std::move(v)), SpaceTimeField(u.times, std::move(vp))};
}

inline double ctc_distance(const SpectralDecomposition& s, const SpaceTimeField& a, const SpaceTimeField& b,
                           double alpha, double lambda, bool weighted) {
    SpaceTimeParams prm;
    prm.alpha = alpha;
    prm.lambda = std::max(lambda, 1.0);
    return spacetime_norm(&s, weighted ? SpaceTimeKind::WL : SpaceTimeKind::CTC, a - b, prm).value;
}

}  // namespace detail

struct ParacontrolledSolution {
    Trajectory trajectory;
    ParacontrolledFn solution;
};

/// Picard iteration of Phi in C_T C^{alpha'}. Aborts when the contraction
/// factor is >= 1 on three consecutive iterations.
inline ParacontrolledSolution solve_paracontrolled(const ParaEngine& e, const SolverConfig& cfg, const Field& u0,
                                                   const EnhancedNoise& zhat) {
    const SpectralDecomposition& s = e.spectral();
    const TimeGrid grid = cfg.grid();
    require(grid.same_as(zhat.zeta2.times), "solve_paracontrolled: grid mismatch with enhanced noise");
    const Nonlinearity F = Nonlinearity::by_name(cfg.F);
    SpaceTimeField heat0 = heat_flow(s, u0, grid);
    SpaceTimeField u = heat0;
    std::vector<Field> up0;
    for (const Field& v : u.values) up0.push_back(F.apply(v));
    SpaceTimeField up(grid, std::move(up0));
    ParacontrolledSolution out;
    Trajectory& tr = out.trajectory;
    int bad = 0;
    for (int it = 1; it <= cfg.picard_max; ++it) {
        auto [v, vp] = detail::picard_step(e, F, heat0, u, up, zhat, nullptr);
        double dist = detail::ctc_distance(s, v, u, cfg.alpha_prime, 1.0, false);
        tr.picard_distances.push_back(dist);
        if (tr.picard_distances.size() >= 2) {
            double prev = tr.picard_distances[tr.picard_distances.size() - 2];
            double factor = prev > 0 ? dist / prev : 0.0;
            tr.contraction_factors.push_back(factor);
            bad = factor >= 1.0 ? bad + 1 : 0;
        }
        u = std::move(v);
        up = std::move(vp);
        tr.iterations = it;
        if (dist < cfg.picard_tol) break;
        if (sup_norm(u.values.back()) > cfg.divergence_cap || bad >= 3) {
            tr.aborted = true;
            tr.message = bad >= 3 ? "no contraction at this T" : "divergence in Picard iteration";
            break;
        }
    }
    if (!tr.aborted && tr.picard_distances.back() >= cfg.picard_tol) {
        tr.aborted = true;
        tr.message = "Picard iteration cap reached";
    }
    tr.u = u;
    out.solution = make_paracontrolled(e, u, up, zhat.X);
    return out;
}

/// Linear PAM (F = identity) on [0, T] with Picard distances in the weighted
/// norm of W_lambda C^{alpha'}. lambda starts at cfg.lambda and is multiplied
/// by 4 until the measured contraction factors drop below 1.
inline Trajectory solve_global_linear(const ParaEngine& e, const SolverConfig& cfg, const Field& u0,
                                      const EnhancedNoise& zhat) {
    require(cfg.F == "identity", "solve_global_linear: F must be the identity");
    const SpectralDecomposition& s = e.spectral();
    const TimeGrid grid = cfg.grid();
    require(grid.same_as(zhat.zeta2.times), "solve_global_linear: grid mismatch with enhanced noise");
    const Nonlinearity F = Nonlinearity::by_name("identity");
    SpaceTimeField heat0 = heat_flow(s, u0, grid);
    std::vector<SpaceTimeField> iterates{heat0};
    SpaceTimeField up = heat0;
    for (int it = 1; it <= cfg.picard_max; ++it) {
        auto [v, vp] = detail::picard_step(e, F, heat0, iterates.back(), up, zhat, nullptr);
        double d = sup_distance(v, iterates.back());
        iterates.push_back(std::move(v));
        up = std::move(vp);
        if (d < cfg.picard_tol || !iterates.back().values.back().allFinite()) break;
    }
    Trajectory tr;
    tr.u = iterates.back();
    tr.iterations = static_cast<int>(iterates.size()) - 1;
    for (double lambda = cfg.lambda; lambda <= cfg.lambda_cap; lambda *= 4) {
        std::vector<double> dist, fac;
        for (std::size_t k = 1; k < iterates.size(); ++k)
            dist.push_back(detail::ctc_distance(s, iterates[k], iterates[k - 1], cfg.alpha_prime, lambda, true));
        for (std::size_t k = 1; k < dist.size(); ++k) fac.push_back(dist[k - 1] > 0 ? dist[k] / dist[k - 1] : 0.0);
        tr.picard_distances = dist;
        tr.contraction_factors = fac;
        tr.lambda_used = lambda;
        bool contracting = std::all_of(fac.begin(), fac.end(), [](double f) { return f < 1.0; });
        if (contracting) return tr;
    }
    tr.aborted = true;
    tr.message = "lambda cap reached without contraction";
    return tr;
}

/// Contraction factors (max over iterations) of the same Picard sequence
/// measured in W_lambda C^{alpha'} for each lambda.
inline std::vector<double> contraction_by_lambda(const ParaEngine& e, const SolverConfig& cfg, const Field& u0,
                                                 const EnhancedNoise& zhat, const std::vector<double>& lambdas) {
    const SpectralDecomposition& s = e.spectral();
    const TimeGrid grid = cfg.grid();
    const Nonlinearity F = Nonlinearity::by_name("identity");
    SpaceTimeField heat0 = heat_flow(s, u0, grid);
    std::vector<SpaceTimeField> iterates{heat0};
    SpaceTimeField up = heat0;
    for (int it = 1; it <= cfg.picard_max; ++it) {
        auto [v, vp] = detail::picard_step(e, F, heat0, iterates.back(), up, zhat, nullptr);
        double d = sup_distance(v, iterates.back());
        iterates.push_back(std::move(v));
        up = std::move(vp);
        if (d < cfg.picard_tol) break;
    }
    std::vector<double> out;
    for (double lambda : lambdas) {
        std::vector<double> dist;
        for (std::size_t k = 1; k < iterates.size(); ++k)
            dist.push_back(detail::ctc_distance(s, iterates[k], iterates[k - 1], cfg.alpha_prime, lambda, true));
        double worst = 0.0;
        for (std::size_t k = 1; k < dist.size(); ++k)
            if (dist[k - 1] > 0) worst = std::max(worst, dist[k] / dist[k - 1]);
        out.push_back(worst);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Epsilon ladder
// ---------------------------------------------------------------------------

struct EpsSweepRow {
    double eps = 0.0;
    bool renormalized = false;
    double diff_norm = std::numeric_limits<double>::quiet_NaN();  ///< ||u^eps - u^{next eps}||_{C_T L^inf}
    double final_sup = std::numeric_limits<double>::quiet_NaN();
    bool aborted = false;
    std::string message;
};

/// For each eps: solve_direct with xi^eps and (renormalize ? C^eps(T) : 0);
/// diff_norm compares with the next (smaller) eps of the ladder. Solver
/// aborts are recorded per cell.
inline std::vector<EpsSweepRow> epsilon_sweep(const ParaEngine& e, const NoiseModel& model, std::uint64_t draw,
                                              const SolverConfig& cfg, const Field& u0,
                                              const std::vector<double>& ladder, bool renormalize) {
    const SpectralDecomposition& s = e.spectral();
    NoiseField xi = sample_noise(model, draw);
    std::vector<EpsSweepRow> rows(ladder.size());
    std::vector<Trajectory> traj(ladder.size());
    parallel_for(static_cast<int>(ladder.size()), [&](int i) {
        const double eps = ladder[static_cast<std::size_t>(i)];
        EpsSweepRow& row = rows[static_cast<std::size_t>(i)];
        row.eps = eps;
        row.renormalized = renormalize;
        try {
            Field xe = regularize(s, xi.xi, eps);
            Field C = renormalize ? renorm_constant(e, model, eps, cfg.T) : Field::Zero(s.size());
            traj[static_cast<std::size_t>(i)] = solve_direct(s, cfg, u0, xe, C);
            const Trajectory& t = traj[static_cast<std::size_t>(i)];
            row.aborted = t.aborted;
            row.message = t.message;
            if (!t.aborted) row.final_sup = sup_norm(t.u.values.back());
        } catch (const std::exception& ex) {
            row.aborted = true;
            row.message = ex.what();
        }
    });
    for (std::size_t i = 0; i + 1 < ladder.size(); ++i) {
        if (rows[i].aborted || rows[i + 1].aborted) continue;
        rows[i].diff_norm = sup_distance(traj[i].u, traj[i + 1].u);
    }
    return rows;
}

}  // namespace semiheat
