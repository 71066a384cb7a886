#pragma once

// Weighted Gaussian noise on a graph, its heat regularization, exact
// expectations of resonant products, the renormalization constant and the
// enhanced noise.

#include "semiheat/paraproducts.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace semiheat {

struct NoiseModel {
    Field weight;   ///< omega
    Field measure;  ///< mu
    std::uint64_t seed = 1;

    static NoiseModel from_graph(const GraphSpace& g, std::uint64_t seed) { return {g.weight(), g.measure(), seed}; }
    bool constant_weight() const {
        return weight.size() == 0 || (weight.array() == weight[0]).all();
    }
};

struct NoiseField {
    Field xi;
    std::uint64_t draw = 0;
};

/// Independent xi_x ~ N(0, omega_x / mu_x), so Var(sum_x f_x xi_x mu_x) = sum_x f_x^2 omega_x mu_x.
inline NoiseField sample_noise(const NoiseModel& model, std::uint64_t draw) {
    const int n = static_cast<int>(model.weight.size());
    auto rng = make_rng(model.seed, draw);
    Field z = standard_normal_field(n, rng);
    NoiseField out;
    out.draw = draw;
    out.xi = z.cwiseProduct(model.weight.cwiseQuotient(model.measure).cwiseSqrt());
    return out;
}

/// xi(f) = sum_x f_x xi_x mu_x
inline double pairing(const Field& xi, const Field& f, const Field& mu) { return (xi.cwiseProduct(f)).dot(mu); }

/// xi^eps = e^{-eps L} xi
inline Field regularize(const SpectralDecomposition& s, const Field& xi, double eps) {
    require(eps > 0, "regularize: eps must be positive");
    return heat(s, eps, xi);
}

/// X(t) = int_0^t e^{-(t-s)L} xi ds, mode by mode.
inline Field heat_integral(const SpectralDecomposition& s, const Field& xi, double t) {
    require(t >= 0, "X_eps: time must be nonnegative");
    return apply_fn(s, [t](double l) { return l * t < 1e-12 ? t * (1 - 0.5 * l * t) : -std::expm1(-t * l) / l; }, xi);
}

inline SpaceTimeField X_eps(const SpectralDecomposition& s, const Field& xi_eps, const TimeGrid& grid) {
    std::vector<Field> v;
    for (double t : grid.nodes()) v.push_back(heat_integral(s, xi_eps, t));
    return SpaceTimeField(grid, std::move(v));
}

/// Symbol of int_0^T e^{-s lambda} ds; `projected` uses int_0^inf and drops the zero mode.
inline double duhamel_symbol(double l, double T, bool projected) {
    if (projected) return l > 0 ? 1.0 / l : 0.0;
    return l * T < 1e-12 ? T * (1 - 0.5 * l * T) : -std::expm1(-T * l) / l;
}

/// x -> E[Pi(A xi, B xi)(x)] where A, B are functions of L given by their
/// spectral symbols and xi follows the model. Every resonant sub-term is a
/// bilinear form in xi; with Cov(xi_hat) = W = Psi^T diag(omega mu) Psi the
/// expectation of a vertexwise product (F1 xi)(y)(F2 xi)(y) is the diagonal
/// of Psi diag(s1) W diag(s2) Psi^T, and Gamma reduces to such diagonals
/// through its defining formula.
inline Field expected_resonant(const ParaEngine& e, const Field& symbol_f, const Field& symbol_g,
                               const NoiseModel& model) {
    const SpectralDecomposition& s = e.spectral();
    const GraphSpace& g = s.graph();
    const int n = s.size();
    require(symbol_f.size() == n && symbol_g.size() == n, "expected_resonant: symbol size mismatch");
    if ((model.weight.array() == 0.0).all()) return Field::Zero(n);
    const Quadrature& quad = e.quadrature();
    const int b = e.config().b;
    const double gb = gamma_int(b);
    const auto T = static_cast<Eigen::Index>(quad.size());
    const Field& lam = s.lambdas();
    const Matrix& psi = s.basis();

    // d(s1, s2) for all quadrature nodes at once (columns), given n x T symbol tables
    const bool uniform = model.constant_weight();
    Matrix psi2;
    double w0 = 0.0;
    Field omega_mu;
    if (uniform) {
        psi2 = psi.cwiseProduct(psi);
        w0 = model.weight[0];
    } else {
        omega_mu = model.weight.cwiseProduct(model.measure);
    }
    auto diag_contract = [&](const Matrix& s1, const Matrix& s2) -> Matrix {
        if (uniform) return w0 * (psi2 * s1.cwiseProduct(s2));
        Matrix out(n, T);
        for (Eigen::Index q = 0; q < T; ++q) {
            Matrix K1 = psi * s1.col(q).asDiagonal() * psi.transpose();
            Matrix K2 = psi * s2.col(q).asDiagonal() * psi.transpose();
            out.col(q) = (K1.cwiseProduct(K2)) * omega_mu;
        }
        return out;
    };
    // E[Gamma(F1 xi, F2 xi)] = -1/2 (L d(s1,s2) - d(s1, lam s2) - d(lam s1, s2))
    auto gamma_contract = [&](const Matrix& s1, const Matrix& s2) -> Matrix {
        Matrix d0 = diag_contract(s1, s2);
        Matrix d1 = diag_contract(s1, lam.asDiagonal() * s2);
        Matrix d2 = diag_contract(lam.asDiagonal() * s1, s2);
        return -0.5 * (g.apply_generator(d0) - d1 - d2);
    };

    Matrix sq(n, T), sp(n, T), slp(n, T), wq(n, T), wp(n, T);
    Field tv(T);
    for (Eigen::Index q = 0; q < T; ++q) {
        const double t = quad.t[static_cast<std::size_t>(q)];
        const double w = quad.w[static_cast<std::size_t>(q)] / gb;
        tv[q] = t;
        for (int i = 0; i < n; ++i) {
            const double x = t * lam[i];
            sq(i, q) = q_symbol(b - 1, x);
            sp(i, q) = phi_a(b, x);
            slp(i, q) = x * sp(i, q);
            wq(i, q) = w * sq(i, q);
            wp(i, q) = w * sp(i, q);
        }
    }
    auto fs = [&](const Matrix& m) -> Matrix { return symbol_f.asDiagonal() * m; };
    auto gs = [&](const Matrix& m) -> Matrix { return symbol_g.asDiagonal() * m; };

    Matrix p_inner = -diag_contract(fs(sq), gs(slp)) - diag_contract(fs(slp), gs(sq)) +
                     2.0 * gamma_contract(fs(sq), gs(sp)) * tv.asDiagonal() +
                     2.0 * gamma_contract(fs(sp), gs(sq)) * tv.asDiagonal();
    Matrix q_inner = -2.0 * gamma_contract(fs(sp), gs(sp)) * tv.asDiagonal();

    Field coef = (s.forward(p_inner).cwiseProduct(wp)).rowwise().sum() +
                 (s.forward(q_inner).cwiseProduct(wq)).rowwise().sum();
    return s.backward(coef);
}

/// g_s = E[Pi(e^{-sL} xi, xi)]
inline Field renorm_function(const ParaEngine& e, const NoiseModel& model, double s_time) {
    const SpectralDecomposition& s = e.spectral();
    Field a = s.symbol([s_time](double l) { return std::exp(-s_time * l); });
    return expected_resonant(e, a, Field::Ones(s.size()), model);
}

/// C^eps(T) = int_0^T E[Pi(e^{-sL} xi^eps, xi^eps)] ds. The s-integral is done
/// in closed form: by linearity it equals E[Pi(B xi^eps, xi^eps)] with B the
/// symbol int_0^T e^{-s lambda} ds. `projected` integrates to infinity with
/// the zero mode removed.
inline Field renorm_constant(const ParaEngine& e, const NoiseModel& model, double eps, double T,
                             bool projected = false) {
    require(eps > 0, "renorm_constant: eps must be positive");
    require(projected || T > 0, "renorm_constant: horizon must be positive");
    const SpectralDecomposition& s = e.spectral();
    Field reg = s.symbol([eps](double l) { return std::exp(-eps * l); });
    Field integ = s.symbol([T, projected](double l) { return duhamel_symbol(l, T, projected); });
    return expected_resonant(e, Field(reg.cwiseProduct(integ)), reg, model);
}

/// Time-dependent correction c(t) = int_0^t g^eps_s ds on a grid.
inline SpaceTimeField renorm_trajectory(const ParaEngine& e, const NoiseModel& model, double eps,
                                        const TimeGrid& grid) {
    std::vector<Field> v;
    for (double t : grid.nodes())
        v.push_back(t == 0.0 ? Field::Zero(e.spectral().size()) : renorm_constant(e, model, eps, t));
    return SpaceTimeField(grid, std::move(v));
}

struct EnhancedNoise {
    double epsilon = 0.0;
    Field zeta;            ///< xi^eps
    SpaceTimeField X;      ///< X^eps, the reference for paracontrolled expansions
    SpaceTimeField zeta2;  ///< Pi(X^eps(t), xi^eps) - int_0^t g^eps_s ds
    SpaceTimeField renorm; ///< the correction subtracted at each node
    ParaConfig cfg;
    std::uint64_t draw = 0;
};

/// Enhanced noise from one draw: zeta = xi^eps and the renormalized resonant
/// product zeta2(t) = Pi(X^eps(t), xi^eps) - E[Pi(X^eps(t), xi^eps)].
inline EnhancedNoise enhance(const ParaEngine& e, const NoiseModel& model, const NoiseField& xi, double eps,
                             const TimeGrid& grid, double T) {
    require(eps > 0, "enhance: eps must be positive");
    require(std::abs(grid.back() - T) <= 1e-12 * std::max(1.0, T) && grid[0] == 0.0,
            "enhance: grid must span [0, T]");
    const SpectralDecomposition& s = e.spectral();
    EnhancedNoise out;
    out.epsilon = eps;
    out.cfg = e.config();
    out.draw = xi.draw;
    out.zeta = regularize(s, xi.xi, eps);
    out.X = X_eps(s, out.zeta, grid);
    out.renorm = renorm_trajectory(e, model, eps, grid);
    std::vector<Field> z2;
    for (std::size_t k = 0; k < grid.size(); ++k)
        z2.push_back(e.resonant(out.X.values[k], out.zeta) - out.renorm.values[k]);
    out.zeta2 = SpaceTimeField(grid, std::move(z2));
    return out;
}

/// Enhanced noise identically zero (no noise) on a grid.
inline EnhancedNoise zero_enhancement(const ParaEngine& e, const TimeGrid& grid) {
    const int n = e.spectral().size();
    EnhancedNoise out;
    out.epsilon = 1.0;
    out.cfg = e.config();
    out.zeta = Field::Zero(n);
    out.X = SpaceTimeField::zeros(grid, n);
    out.zeta2 = SpaceTimeField::zeros(grid, n);
    out.renorm = SpaceTimeField::zeros(grid, n);
    return out;
}

// ---------------------------------------------------------------------------
// Weight compatibility and noise regularity
// ---------------------------------------------------------------------------

struct WeightCompatReport {
    double constant = 0.0;           ///< with equal exponents on both sides
    double adjusted_constant = 0.0;  ///< with exponent c_right on the right side
    double c = 0.0;
    double c_right = 0.0;
    bool pass = false;
};

/// Best K with omega(x) G_t(x,y) <= K omega(y) G_t(y,x) over all (t, x, y),
/// G_t(x,y) = exp(-c d^2/t) / V(x, sqrt t).
inline WeightCompatReport weight_compat_check(const GraphSpace& g, const DistanceTable& d, const Field& omega,
                                              const std::vector<double>& t_grid, double c, double c_right,
                                              double threshold = 1e6) {
    require(omega.size() == g.size(), "weight_compat_check: weight has wrong length");
    require(!t_grid.empty(), "weight_compat_check: empty time grid");
    WeightCompatReport rep;
    rep.c = c;
    rep.c_right = c_right;
    const int n = g.size();
    const double inf = std::numeric_limits<double>::infinity();
    for (double t : t_grid) {
        Field V = detail::volumes_at(g, d, std::sqrt(t));
        for (int x = 0; x < n; ++x) {
            if (omega[x] == 0) continue;
            for (int y = 0; y < n; ++y) {
                double d2 = d.metric(x, y) * d.metric(x, y) / t;
                if (omega[y] == 0) {
                    rep.constant = rep.adjusted_constant = inf;
                    continue;
                }
                double base = omega[x] * V[y] / (omega[y] * V[x]);
                rep.constant = std::max(rep.constant, base);
                rep.adjusted_constant = std::max(rep.adjusted_constant, base * std::exp(-(c - c_right) * d2));
            }
        }
    }
    rep.pass = std::isfinite(rep.adjusted_constant) && rep.adjusted_constant <= threshold;
    return rep;
}

struct RegularityCell {
    double sigma = 0.0;
    int N = 0;
    double median = 0.0;
};

struct RegularityStudy {
    std::vector<RegularityCell> cells;
    /// per sigma: max/min median across N, and the smallest growth factor between consecutive N
    std::vector<double> sigmas;
    std::vector<double> variation;
    std::vector<double> min_growth;
};

/// Median C^sigma norm of white noise (omega = 1) over draws on the scaled
/// torus2d N (unit torus with spacing 1/N), for each (sigma, N).
inline RegularityStudy noise_regularity_study(const std::vector<double>& sigmas, const std::vector<int>& Ns,
                                              int draws, std::uint64_t seed, int a = 2,
                                              const TimeGrid& grid = TimeGrid::dyadic()) {
    RegularityStudy st;
    st.sigmas = sigmas;
    std::vector<std::vector<double>> med(sigmas.size());
    for (int N : Ns) {
        GraphSpace g = build_graph("torus2d:" + std::to_string(N) + ":scaled");
        SpectralDecomposition s = diagonalize(g);
        NoiseModel model = NoiseModel::from_graph(g, seed);
        Matrix F(g.size(), draws);
        for (int k = 0; k < draws; ++k) F.col(k) = sample_noise(model, static_cast<std::uint64_t>(k)).xi;
        for (std::size_t si = 0; si < sigmas.size(); ++si) {
            auto reps = holder_norms(s, F, sigmas[si], a, grid);
            std::vector<double> vals;
            for (const auto& r : reps) vals.push_back(r.value);
            double m = median(vals);
            med[si].push_back(m);
            st.cells.push_back({sigmas[si], N, m});
        }
    }
    for (std::size_t si = 0; si < sigmas.size(); ++si) {
        const auto& m = med[si];
        st.variation.push_back(*std::max_element(m.begin(), m.end()) / *std::min_element(m.begin(), m.end()));
        double g = std::numeric_limits<double>::infinity();
        for (std::size_t k = 1; k < m.size(); ++k) g = std::min(g, m[k] / m[k - 1]);
        st.min_growth.push_back(g);
    }
    return st;
}

}  // namespace semiheat
