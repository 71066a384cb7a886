#pragma once

// Exact functional calculus of the graph generator through a dense
// eigendecomposition in the mu-weighted inner product.

#include "semiheat/graph_space.hpp"
#include "semiheat/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace semiheat {

/// gamma_a = Gamma(a) = (a-1)! for integer a >= 1.
inline double gamma_int(int a) {
    require(a >= 1, "gamma_int: order must be positive");
    double g = 1.0;
    for (int k = 2; k < a; ++k) g *= k;
    return g;
}

/// phi_a(x) = e^{-x} sum_{k<a} x^k / k!, the spectral symbol of P_t^{(a)} at x = t*lambda.
inline double phi_a(int a, double x) {
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < a; ++k) {
        term *= x / k;
        sum += term;
    }
    return sum * std::exp(-x);
}

/// x^a e^{-x}, the symbol of Q_t^{(a)}.
inline double q_symbol(int a, double x) { return (a == 0 ? 1.0 : std::pow(x, a)) * std::exp(-x); }

class SpectralDecomposition {
public:
    SpectralDecomposition(GraphSpace g, Field lambdas, Matrix basis)
        : graph_(std::move(g)), lambdas_(std::move(lambdas)), basis_(std::move(basis)) {
        require(lambdas_.size() == graph_.size() && basis_.rows() == graph_.size() &&
                    basis_.cols() == graph_.size(),
                "spectral: decomposition does not match the graph");
    }

    const GraphSpace& graph() const { return graph_; }
    int size() const { return graph_.size(); }
    const Field& lambdas() const { return lambdas_; }
    double lambda_max() const { return lambdas_[lambdas_.size() - 1]; }
    const Matrix& basis() const { return basis_; }
    const Field& measure() const { return graph_.measure(); }

    /// Spectral coefficients <f, psi_i>_mu.
    Field forward(const Field& f) const { return basis_.transpose() * measure().cwiseProduct(f); }
    Matrix forward(const Matrix& f) const { return basis_.transpose() * (measure().asDiagonal() * f); }
    Field backward(const Field& c) const { return basis_ * c; }
    Matrix backward(const Matrix& c) const { return basis_ * c; }

    /// sum_i sym[i] <f, psi_i> psi_i
    Field apply_symbol(const Field& sym, const Field& f) const {
        require(sym.size() == size() && f.size() == size(), "spectral: size mismatch");
        return backward(Field(sym.cwiseProduct(forward(f))));
    }

    template <class Phi>
    Field symbol(Phi&& phi) const {
        Field s(size());
        for (int i = 0; i < size(); ++i) {
            s[i] = phi(lambdas_[i]);
            require(std::isfinite(s[i]), "apply_fn: symbol is not finite at lambda = " +
                                             std::to_string(lambdas_[i]));
        }
        return s;
    }

    double inner(const Field& f, const Field& g) const { return (f.cwiseProduct(g)).dot(measure()); }

private:
    GraphSpace graph_;
    Field lambdas_;
    Matrix basis_;
};

/// Eigenpairs of L in <.,.>_mu. Requires mu = c * m (otherwise L is not
/// self-adjoint for mu). Eigenvalues ascend; lambda_0 = 0 with constant psi_0;
/// each other eigenvector is signed so its largest-magnitude entry (first on
/// ties) is positive.
inline SpectralDecomposition diagonalize(const GraphSpace& g) {
    const int n = g.size();
    const Field& m = g.mass();
    const Field& mu = g.measure();
    const double c = mu[0] / m[0];
    for (int x = 0; x < n; ++x) {
        require(std::abs(mu[x] / m[x] - c) <= 1e-12 * c,
                "diagonalize: L is not self-adjoint in the mu inner product (mu/m = " +
                    std::to_string(mu[x] / m[x]) + " at vertex " + std::to_string(x) + " but " +
                    std::to_string(c) + " at vertex 0; mu must be a constant multiple of m)");
    }
    // A = D^{1/2} L D^{-1/2} with D = diag(mu) is symmetric.
    Matrix A = Matrix::Zero(n, n);
    Field sq = mu.cwiseSqrt();
    for (int x = 0; x < n; ++x) {
        A(x, x) += 1.0 / m[x];
        for (SparseMatrix::InnerIterator it(g.kernel(), x); it; ++it) {
            const int y = static_cast<int>(it.col());
            A(x, y) -= it.value() / m[x] * sq[x] / sq[y];
        }
    }
    A = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(A);
    require(es.info() == Eigen::Success, "diagonalize: eigensolver failed");
    Field lambdas = es.eigenvalues();
    Matrix basis = sq.cwiseInverse().asDiagonal() * es.eigenvectors();

    lambdas[0] = 0.0;
    basis.col(0).setConstant(1.0 / std::sqrt(mu.sum()));
    for (int i = 1; i < n; ++i) {
        lambdas[i] = std::max(lambdas[i], 0.0);
        Eigen::Index arg = 0;
        double best = -1.0;
        for (int x = 0; x < n; ++x) {
            if (std::abs(basis(x, i)) > best * (1 + 1e-9)) {
                best = std::abs(basis(x, i));
                arg = x;
            }
        }
        if (basis(arg, i) < 0) basis.col(i) *= -1.0;
    }
    return SpectralDecomposition(g, std::move(lambdas), std::move(basis));
}

template <class Phi>
Field apply_fn(const SpectralDecomposition& s, Phi&& phi, const Field& f) {
    return s.apply_symbol(s.symbol(std::forward<Phi>(phi)), f);
}

inline Field heat(const SpectralDecomposition& s, double t, const Field& f) {
    require(t >= 0, "heat: time must be nonnegative");
    return apply_fn(s, [t](double l) { return std::exp(-t * l); }, f);
}

/// Q_t^{(a)} f = (tL)^a e^{-tL} f
inline Field Q(const SpectralDecomposition& s, int a, double t, const Field& f) {
    require(a >= 1, "Q: order must be >= 1 (use heat for a = 0)");
    require(t > 0, "Q: time must be positive");
    return apply_fn(s, [a, t](double l) { return q_symbol(a, t * l); }, f);
}

/// P_t^{(a)} f = phi_a(tL) f
inline Field P(const SpectralDecomposition& s, int a, double t, const Field& f) {
    require(a >= 1, "P: order must be >= 1");
    require(t >= 0, "P: time must be nonnegative");
    return apply_fn(s, [a, t](double l) { return phi_a(a, t * l); }, f);
}

/// Gamma(f, g) = -1/2 (L(fg) - f Lg - g Lf), vertexwise.
inline Field carre_du_champ(const GraphSpace& g, const Field& f, const Field& h) {
    Field fh = f.cwiseProduct(h);
    return -0.5 * (g.apply_generator(fh) - f.cwiseProduct(g.apply_generator(h)) -
                   h.cwiseProduct(g.apply_generator(f)));
}
inline Field carre_du_champ(const SpectralDecomposition& s, const Field& f, const Field& h) {
    return carre_du_champ(s.graph(), f, h);
}
/// Columnwise Gamma for batches of fields.
inline Matrix carre_du_champ(const GraphSpace& g, const Matrix& f, const Matrix& h) {
    Matrix fh = f.cwiseProduct(h);
    return -0.5 * (g.apply_generator(fh) - f.cwiseProduct(g.apply_generator(h)) -
                   h.cwiseProduct(g.apply_generator(f)));
}

/// sup |f - (gamma_a^{-1} int_0^1 Q_t^{(a)} f dt/t + P_1^{(a)} f)| / sup |f|.
inline double calderon_residual(const SpectralDecomposition& s, int a, const Field& f,
                                const Quadrature& quad) {
    require(a >= 1, "calderon: order must be >= 1");
    require(quad.size() > 0, "calderon: empty quadrature grid");
    const double scale = sup_norm(f);
    if (scale == 0.0) return 0.0;
    const double ga = gamma_int(a);
    Field sym = s.symbol([&](double l) {
        double acc = 0.0;
        for (std::size_t q = 0; q < quad.size(); ++q) acc += quad.w[q] * q_symbol(a, quad.t[q] * l);
        return acc / ga + phi_a(a, l);
    });
    Field recon = s.apply_symbol(sym, f);
    return sup_norm(Field(f - recon)) / scale;
}

/// p_t(x, y) = (e^{-tL} delta_y)(x) / mu_y, so (e^{-tL} f)(x) = sum_y p_t(x,y) f(y) mu_y.
inline Matrix heat_kernel(const SpectralDecomposition& s, double t) {
    Field e = s.symbol([t](double l) { return std::exp(-t * l); });
    return s.basis() * e.asDiagonal() * s.basis().transpose();
}

// ---------------------------------------------------------------------------
// Kernel bound certification
// ---------------------------------------------------------------------------

enum class KernelTarget { UE, Lip, Gq };

inline std::string to_string(KernelTarget t) {
    switch (t) {
        case KernelTarget::UE: return "UE";
        case KernelTarget::Lip: return "Lip";
        case KernelTarget::Gq: return "Gq";
    }
    return "?";
}

inline KernelTarget parse_kernel_target(const std::string& s) {
    if (s == "UE") return KernelTarget::UE;
    if (s == "Lip") return KernelTarget::Lip;
    if (s == "Gq") return KernelTarget::Gq;
    throw ValidationError("unknown kernel target '" + s + "' (expected UE, Lip or Gq)");
}

struct KernelFitOptions {
    double q = 2.0;            ///< Gq exponent
    double kappa = 10.0;       ///< accept c while C(c) <= kappa * C(0)
    int dense_limit = 4096;
    double resolution = 1e-12; ///< kernel entries below this fraction of the diagonal are not tested
    int samples = 64;          ///< Gq test fields for q != 2
    std::uint64_t seed = 7;
};

struct KernelBoundFit {
    KernelTarget target = KernelTarget::UE;
    double C = 0.0;
    double c = 0.0;  ///< Gaussian exponent; 0 for Gq (no Gaussian factor)
    double q = 2.0;
    double violation_max = 0.0;
    std::vector<double> t_grid;
    bool success = false;
};

namespace detail {

/// V(x, sqrt t) for all x.
inline Field volumes_at(const GraphSpace& g, const DistanceTable& d, double radius) {
    Field v(g.size());
    for (int x = 0; x < g.size(); ++x) v[x] = ball_volume(g, d, x, radius);
    return v;
}

/// Sampled inequality lhs <= C * base * exp(-c * e): terms stored as
/// (log lhs - log base, e). C(c) = exp(max_k (a_k + c e_k)).
struct LogTerms {
    std::vector<double> a;
    std::vector<double> e;

    double log_C(double c) const {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < a.size(); ++k) best = std::max(best, a[k] + c * e[k]);
        return best;
    }

    /// Largest c with C(c) <= kappa * C(0), by bisection (C is increasing in c).
    double largest_c(double kappa) const {
        const double limit = log_C(0.0) + std::log(kappa);
        double lo = 0.0, hi = 1.0;
        while (log_C(hi) <= limit && hi < 1e12) hi *= 2.0;
        if (hi >= 1e12) return hi;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            (log_C(mid) <= limit ? lo : hi) = mid;
        }
        return lo;
    }
};

}  // namespace detail

/// Fits the constants of (UE), (Lip) or (G_q) on the sampled times.
///
/// UE:  p_t(x,y) <= C exp(-c d(x,y)^2/t) / sqrt(V(x,sqrt t) V(y,sqrt t)).
/// Lip: |p_t(x,y) - p_t(z,y)| <= C (d(x,z)/sqrt t) exp(-c d(x,y)^2/t) / sqrt(V(x,sqrt t) V(y,sqrt t)),
///      over neighbouring x, z.
/// Gq:  ||sqrt(t Gamma(e^{-tL} f))||_q <= C ||f||_q; exact for q = 2, sampled otherwise.
/// For the Gaussian targets c is the largest value keeping C within kappa of its c = 0 value.
inline KernelBoundFit fit_kernel_bounds(const SpectralDecomposition& s, const DistanceTable& d,
                                        KernelTarget target, const std::vector<double>& t_grid,
                                        const KernelFitOptions& opt = {}) {
    const GraphSpace& g = s.graph();
    const int n = g.size();
    require(n <= opt.dense_limit, "fit_kernel_bounds: n = " + std::to_string(n) +
                                      " exceeds the dense kernel limit " + std::to_string(opt.dense_limit));
    require(!t_grid.empty(), "fit_kernel_bounds: empty time grid");
    for (double t : t_grid) require(t > 0 && t <= 1, "fit_kernel_bounds: times must lie in (0, 1]");

    KernelBoundFit fit;
    fit.target = target;
    fit.q = opt.q;
    fit.t_grid = t_grid;

    if (target == KernelTarget::Gq) {
        require(opt.q >= 1, "fit_kernel_bounds: q must be >= 1");
        double best = 0.0;
        auto lq = [&](const Field& f) {
            double acc = 0.0;
            for (int x = 0; x < n; ++x) acc += std::pow(std::abs(f[x]), opt.q) * g.measure()[x];
            return std::pow(acc, 1.0 / opt.q);
        };
        for (double t : t_grid) {
            if (opt.q == 2.0) {
                double m = 0.0;
                for (int i = 0; i < n; ++i) m = std::max(m, t * s.lambdas()[i] * std::exp(-2 * t * s.lambdas()[i]));
                best = std::max(best, std::sqrt(m));
                continue;
            }
            std::vector<Field> tests;
            for (int k = 0; k < opt.samples; ++k) {
                auto rng = make_rng(opt.seed, static_cast<std::uint64_t>(k));
                tests.push_back(standard_normal_field(n, rng));
            }
            for (int i = 1; i < std::min(n, 16); ++i) tests.push_back(s.basis().col(i));
            for (int x = 0; x < std::min(n, 16); ++x) {
                Field delta = Field::Zero(n);
                delta[x] = 1.0;
                tests.push_back(delta);
            }
            for (const Field& f : tests) {
                Field pf = heat(s, t, f);
                Field gam = carre_du_champ(g, pf, pf).cwiseMax(0.0);
                double den = lq(f);
                if (den > 0) best = std::max(best, lq(Field((t * gam).cwiseSqrt())) / den);
            }
        }
        fit.C = best;
        fit.c = 0.0;
        fit.violation_max = 0.0;
        fit.success = std::isfinite(best) && best > 0;
        return fit;
    }

    detail::LogTerms terms;
    std::vector<std::vector<int>> nbrs(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) nbrs[static_cast<std::size_t>(x)] = g.neighbours(x);
    for (double t : t_grid) {
        Matrix p = heat_kernel(s, t);
        Field V = detail::volumes_at(g, d, std::sqrt(t));
        double diag_min = p.diagonal().minCoeff();
        double floor = opt.resolution * diag_min;
        for (int x = 0; x < n; ++x) {
            for (int y = 0; y < n; ++y) {
                const double dist2 = d.metric(x, y) * d.metric(x, y);
                const double base = 1.0 / std::sqrt(V[x] * V[y]);
                if (target == KernelTarget::UE) {
                    if (p(x, y) <= floor) continue;
                    terms.a.push_back(std::log(p(x, y) / base));
                    terms.e.push_back(dist2 / t);
                } else {
                    for (int z : nbrs[static_cast<std::size_t>(x)]) {
                        double lhs = std::abs(p(x, y) - p(z, y));
                        if (lhs <= floor) continue;
                        double factor = d.metric(x, z) / std::sqrt(t);
                        terms.a.push_back(std::log(lhs / (base * factor)));
                        terms.e.push_back(dist2 / t);
                    }
                }
            }
        }
    }
    if (terms.a.empty()) {
        fit.success = false;
        return fit;
    }
    fit.c = terms.largest_c(opt.kappa);
    fit.C = std::exp(terms.log_C(fit.c));
    // worst residual lhs - C * rhs, relative to lhs
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < terms.a.size(); ++k) {
        double log_rhs = std::log(fit.C) - fit.c * terms.e[k];
        double log_lhs = terms.a[k];
        worst = std::max(worst, std::expm1(log_lhs - log_rhs));
    }
    fit.violation_max = worst;
    fit.success = std::isfinite(fit.C) && fit.C > 0 && fit.c > 0;
    return fit;
}

/// Gaussian majorant G_t(x,y) = exp(-c d(x,y)^2 / t) / V(x, sqrt t).
inline Matrix gaussian_majorant(const GraphSpace& g, const DistanceTable& d, double c, double t) {
    const int n = g.size();
    Field V = detail::volumes_at(g, d, std::sqrt(t));
    Matrix G(n, n);
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) G(x, y) = std::exp(-c * d.metric(x, y) * d.metric(x, y) / t) / V[x];
    return G;
}

/// Smallest K with sum_y G_s(x,y) G_t(y,z) mu_y <= K G'_s(x,z) for all x, z,
/// where G' uses the exponent c_right (the two sides may carry different c).
inline double gaussian_composition_constant(const GraphSpace& g, const DistanceTable& d, double c,
                                            double c_right, double s, double t) {
    require(s >= t && t > 0, "composition check: need s >= t > 0");
    Matrix Gs = gaussian_majorant(g, d, c, s);
    Matrix Gt = gaussian_majorant(g, d, c, t);
    Matrix conv = Gs * g.measure().asDiagonal() * Gt;
    Matrix rhs = gaussian_majorant(g, d, c_right, s);
    return conv.cwiseQuotient(rhs).maxCoeff();
}

// ---------------------------------------------------------------------------
// Spectral cache
// ---------------------------------------------------------------------------

/// Binary dump: magic, graph hash, n, lambdas, column-major basis.
inline void save_spectral_cache(const std::string& path, const SpectralDecomposition& s) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        require(static_cast<bool>(out), "spectral cache: cannot write '" + path + "'");
        const char magic[8] = {'S', 'H', 'S', 'P', 'E', 'C', '0', '1'};
        out.write(magic, 8);
        std::string hash = s.graph().content_hash();
        out.write(hash.data(), 16);
        std::int64_t n = s.size();
        out.write(reinterpret_cast<const char*>(&n), sizeof n);
        out.write(reinterpret_cast<const char*>(s.lambdas().data()), static_cast<std::streamsize>(sizeof(double) * n));
        out.write(reinterpret_cast<const char*>(s.basis().data()), static_cast<std::streamsize>(sizeof(double) * n * n));
    }
    std::rename(tmp.c_str(), path.c_str());
}

/// Loads a cache if it exists and matches the graph's content hash.
inline std::optional<SpectralDecomposition> load_spectral_cache(const std::string& path, const GraphSpace& g) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    char magic[8];
    char hash[16];
    std::int64_t n = 0;
    in.read(magic, 8);
    in.read(hash, 16);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    if (!in || std::memcmp(magic, "SHSPEC01", 8) != 0) return std::nullopt;
    if (std::string(hash, 16) != g.content_hash() || n != g.size()) return std::nullopt;
    Field lambdas(n);
    Matrix basis(n, n);
    in.read(reinterpret_cast<char*>(lambdas.data()), static_cast<std::streamsize>(sizeof(double) * n));
    in.read(reinterpret_cast<char*>(basis.data()), static_cast<std::streamsize>(sizeof(double) * n * n));
    if (!in) return std::nullopt;
    return SpectralDecomposition(g, std::move(lambdas), std::move(basis));
}

/// diagonalize with an optional on-disk cache keyed by the graph hash.
inline SpectralDecomposition diagonalize_cached(const GraphSpace& g, const std::string& cache_path) {
    if (!cache_path.empty()) {
        if (auto cached = load_spectral_cache(cache_path, g)) return *cached;
    }
    SpectralDecomposition s = diagonalize(g);
    if (!cache_path.empty()) save_spectral_cache(cache_path, s);
    return s;
}

}  // namespace semiheat
