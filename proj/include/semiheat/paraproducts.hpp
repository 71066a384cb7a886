#pragma once

// Semigroup paraproducts, resonant term, low-frequency part, commutator and
// composition defects; quadrature evaluation batched over time nodes, plus an
// exact spectral-tensor evaluator for small graphs.

#include "semiheat/norms.hpp"
#include "semiheat/spectral.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace semiheat {

struct ParaConfig {
    int b = 3;
    QuadratureSpec quad{};
    int oracle_max_n = 64;
    double tolerance = 1e-6;  ///< Bony residual budget, relative
};

/// The four pieces of fg and the residual fg minus their sum.
struct BonyDecomposition {
    Field para_g_f;
    Field para_f_g;
    Field resonant;
    Field low_freq;
    Field residual;
    double tolerance = 0.0;

    double relative_residual(const Field& f, const Field& g) const {
        double scale = sup_norm(Field(f.cwiseProduct(g)));
        return scale > 0 ? sup_norm(residual) / scale : sup_norm(residual);
    }
};

/// Time-integral pieces. Paraproduct = A + B, resonant = S1 + S2 + S3 + S4 + R:
///   A  = (tL)P (Q f . P g)          B  = Q ((tL)P f . P g)
///   S1 = -P (Q f . (tL)P g)         S2 = 2 P tGamma(Q f, P g)
///   S3 = -P ((tL)P f . Q g)         S4 = 2 P tGamma(P f, Q g)
///   R  = -2 Q tGamma(P f, P g)
/// with P = P_t^{(b)}, Q = Q_t^{(b-1)}, each integrated against dt/t and divided by gamma_b.
enum class Term { LowFreq, ParaA, ParaB, S1, S2, S3, S4, R, Paraproduct, Resonant };

inline Term parse_term(const std::string& s) {
    static const std::pair<const char*, Term> names[] = {
        {"low_freq", Term::LowFreq}, {"para_A", Term::ParaA}, {"para_B", Term::ParaB}, {"S1", Term::S1},
        {"S2", Term::S2},           {"S3", Term::S3},         {"S4", Term::S4},         {"R", Term::R},
        {"paraproduct", Term::Paraproduct}, {"resonant", Term::Resonant}};
    for (const auto& [name, t] : names)
        if (s == name) return t;
    throw ValidationError("unknown paraproduct term '" + s + "'");
}

inline const char* term_name(Term t) {
    switch (t) {
        case Term::LowFreq: return "low_freq";
        case Term::ParaA: return "para_A";
        case Term::ParaB: return "para_B";
        case Term::S1: return "S1";
        case Term::S2: return "S2";
        case Term::S3: return "S3";
        case Term::S4: return "S4";
        case Term::R: return "R";
        case Term::Paraproduct: return "paraproduct";
        case Term::Resonant: return "resonant";
    }
    return "?";
}

struct ResonantTerms {
    Field S1, S2, S3, S4, R;
    Field sum() const { return S1 + S2 + S3 + S4 + R; }
};

/// Quadrature evaluator. Holds the symbol tables of P_t^{(b)}, Q_t^{(b-1)}
/// and (tL)P_t^{(b)} at every node; each operation is a handful of dense
/// products with the eigenbasis.
class ParaEngine {
public:
    ParaEngine(const SpectralDecomposition& s, ParaConfig cfg) : s_(&s), cfg_(cfg) {
        require(cfg_.b >= 2, "paraproduct: b must be >= 2");
        quad_ = cfg_.quad.build();
        require(quad_.size() > 0, "paraproduct: empty quadrature");
        const int n = s.size();
        const auto T = static_cast<Eigen::Index>(quad_.size());
        sq_.resize(n, T);
        sp_.resize(n, T);
        slp_.resize(n, T);
        tvec_.resize(T);
        const double gb = gamma_int(cfg_.b);
        for (Eigen::Index q = 0; q < T; ++q) {
            const double t = quad_.t[static_cast<std::size_t>(q)];
            tvec_[q] = t;
            for (int i = 0; i < n; ++i) {
                double x = t * s.lambdas()[i];
                sq_(i, q) = q_symbol(cfg_.b - 1, x);
                sp_(i, q) = phi_a(cfg_.b, x);
                slp_(i, q) = x * sp_(i, q);
            }
        }
        Eigen::RowVectorXd w(T);
        for (Eigen::Index q = 0; q < T; ++q) w[q] = quad_.w[static_cast<std::size_t>(q)] / gb;
        wq_ = sq_.array().rowwise() * w.array();
        wp_ = sp_.array().rowwise() * w.array();
        wlp_ = slp_.array().rowwise() * w.array();
        p1_.resize(n);
        for (int i = 0; i < n; ++i) p1_[i] = phi_a(cfg_.b, s.lambdas()[i]);
    }

    const SpectralDecomposition& spectral() const { return *s_; }
    const ParaConfig& config() const { return cfg_; }
    const Quadrature& quadrature() const { return quad_; }

    Field low_freq(const Field& f, const Field& g) const {
        Field pf = s_->apply_symbol(p1_, f);
        Field pg = s_->apply_symbol(p1_, g);
        return s_->apply_symbol(p1_, Field(pf.cwiseProduct(pg)));
    }

    /// Pi_g(f)
    Field paraproduct(const Field& g, const Field& f) const {
        Slots F = slots(f, true, true, true), G = slots(g, false, true, false);
        Matrix inner_a = F.q.cwiseProduct(G.p);
        Matrix inner_b = F.lp.cwiseProduct(G.p);
        return integrate({{&inner_a, &wlp_}, {&inner_b, &wq_}});
    }

    /// Individual paraproduct pieces (A, B).
    std::pair<Field, Field> paraproduct_terms(const Field& g, const Field& f) const {
        Slots F = slots(f, true, true, true), G = slots(g, false, true, false);
        Matrix inner_a = F.q.cwiseProduct(G.p);
        Matrix inner_b = F.lp.cwiseProduct(G.p);
        return {integrate({{&inner_a, &wlp_}}), integrate({{&inner_b, &wq_}})};
    }

    Field resonant(const Field& f, const Field& g) const {
        Slots F = slots(f, true, true, true), G = slots(g, true, true, true);
        const GraphSpace& gr = s_->graph();
        Matrix p_inner = -F.q.cwiseProduct(G.lp) - F.lp.cwiseProduct(G.q) +
                         2.0 * time_scaled(carre_du_champ(gr, F.q, G.p)) +
                         2.0 * time_scaled(carre_du_champ(gr, F.p, G.q));
        Matrix q_inner = -2.0 * time_scaled(carre_du_champ(gr, F.p, G.p));
        return integrate({{&p_inner, &wp_}, {&q_inner, &wq_}});
    }

    ResonantTerms resonant_terms(const Field& f, const Field& g) const {
        Slots F = slots(f, true, true, true), G = slots(g, true, true, true);
        const GraphSpace& gr = s_->graph();
        Matrix s1 = -F.q.cwiseProduct(G.lp);
        Matrix s2 = 2.0 * time_scaled(carre_du_champ(gr, F.q, G.p));
        Matrix s3 = -F.lp.cwiseProduct(G.q);
        Matrix s4 = 2.0 * time_scaled(carre_du_champ(gr, F.p, G.q));
        Matrix r = -2.0 * time_scaled(carre_du_champ(gr, F.p, G.p));
        ResonantTerms out;
        out.S1 = integrate({{&s1, &wp_}});
        out.S2 = integrate({{&s2, &wp_}});
        out.S3 = integrate({{&s3, &wp_}});
        out.S4 = integrate({{&s4, &wp_}});
        out.R = integrate({{&r, &wq_}});
        return out;
    }

    Field term(Term t, const Field& f, const Field& g) const {
        switch (t) {
            case Term::LowFreq: return low_freq(f, g);
            case Term::ParaA: return paraproduct_terms(g, f).first;
            case Term::ParaB: return paraproduct_terms(g, f).second;
            case Term::Paraproduct: return paraproduct(g, f);
            case Term::Resonant: return resonant(f, g);
            default: break;
        }
        ResonantTerms r = resonant_terms(f, g);
        switch (t) {
            case Term::S1: return r.S1;
            case Term::S2: return r.S2;
            case Term::S3: return r.S3;
            case Term::S4: return r.S4;
            default: return r.R;
        }
    }

    BonyDecomposition bony(const Field& f, const Field& g) const {
        BonyDecomposition d;
        d.para_g_f = paraproduct(g, f);
        d.para_f_g = paraproduct(f, g);
        d.resonant = resonant(f, g);
        d.low_freq = low_freq(f, g);
        d.residual = f.cwiseProduct(g) - (d.para_g_f + d.para_f_g + d.resonant + d.low_freq);
        d.tolerance = cfg_.tolerance;
        return d;
    }

    /// C(f, g, h) = Pi(Pi_g(f), h) - g Pi(f, h)
    Field commutator(const Field& f, const Field& g, const Field& h) const {
        return resonant(paraproduct(g, f), h) - g.cwiseProduct(resonant(f, h));
    }

    /// R_F(f) = F(f) - Pi_{F'(f)}(f)
    Field paralinearization_remainder(const std::function<double(double)>& F,
                                      const std::function<double(double)>& dF, const Field& f) const {
        return f.unaryExpr(F) - paraproduct(Field(f.unaryExpr(dF)), f);
    }

    /// Pi_u(Pi_v(f)) - Pi_{uv}(f)
    Field composition_defect(const Field& u, const Field& v, const Field& f) const {
        return paraproduct(u, paraproduct(v, f)) - paraproduct(Field(u.cwiseProduct(v)), f);
    }

private:
    struct Slots {
        Matrix q, p, lp;
    };

    /// Vertex values of Q f, P f, (tL)P f at every node (columns).
    Slots slots(const Field& f, bool want_q, bool want_p, bool want_lp) const {
        Field c = s_->forward(f);
        Slots out;
        if (want_q) out.q = s_->backward(Matrix(c.asDiagonal() * sq_));
        if (want_p) out.p = s_->backward(Matrix(c.asDiagonal() * sp_));
        if (want_lp) out.lp = s_->backward(Matrix(c.asDiagonal() * slp_));
        return out;
    }

    Matrix time_scaled(Matrix m) const { return m * tvec_.asDiagonal(); }

    /// sum over nodes of outer-symbol-weighted spectral coefficients, back to vertices.
    Field integrate(std::initializer_list<std::pair<const Matrix*, const Matrix*>> parts) const {
        Field coef = Field::Zero(s_->size());
        for (const auto& [inner, weights] : parts) {
            Matrix hat = s_->forward(*inner);
            coef += hat.cwiseProduct(*weights).rowwise().sum();
        }
        return s_->backward(coef);
    }

    const SpectralDecomposition* s_;
    ParaConfig cfg_;
    Quadrature quad_;
    Matrix sq_, sp_, slp_;
    Matrix wq_, wp_, wlp_;
    Field tvec_;
    Field p1_;
};

// Free-function surface ------------------------------------------------------

inline Field low_freq(const ParaEngine& e, const Field& f, const Field& g) { return e.low_freq(f, g); }
inline Field paraproduct(const ParaEngine& e, const Field& g, const Field& f) { return e.paraproduct(g, f); }
inline Field resonant(const ParaEngine& e, const Field& f, const Field& g) { return e.resonant(f, g); }
inline BonyDecomposition bony_decompose(const ParaEngine& e, const Field& f, const Field& g) { return e.bony(f, g); }
inline Field commutator(const ParaEngine& e, const Field& f, const Field& g, const Field& h) {
    return e.commutator(f, g, h);
}

// ---------------------------------------------------------------------------
// Exact spectral-tensor evaluator
// ---------------------------------------------------------------------------

/// int_0^1 t^{p-1} e^{-L t} dt for integer p >= 1, L >= 0.
inline double time_moment(int p, double L) {
    if (L < 1e-3) {
        double sum = 0.0, term = 1.0;
        for (int k = 0; k < 40; ++k) {
            sum += term / (p + k);
            term *= -L / (k + 1);
            if (std::abs(term) < 1e-18) break;
        }
        return sum;
    }
    // regularized lower incomplete gamma times Gamma(p) / L^p
    return boost::math::gamma_p(static_cast<double>(p), L) * std::exp(std::lgamma(static_cast<double>(p)) - p * std::log(L));
}

/// Each time integral of the calculus is a finite sum of t^p e^{-t(l_i+l_j+l_k)}
/// against the triple-product coefficients c_ijk = <psi_i psi_j, psi_k>_mu,
/// and is integrated in closed form.
class TensorOracle {
public:
    TensorOracle(const SpectralDecomposition& s, ParaConfig cfg) : s_(&s), cfg_(cfg) {
        const int n = s.size();
        require(n <= cfg_.oracle_max_n, "tensor oracle: n = " + std::to_string(n) + " exceeds oracle_max_n = " +
                                            std::to_string(cfg_.oracle_max_n));
        require(cfg_.b >= 2, "tensor oracle: b must be >= 2");
        c_.assign(static_cast<std::size_t>(n) * n * n, 0.0);
        const Matrix& psi = s.basis();
        const Field& mu = s.measure();
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                Field prod = psi.col(i).cwiseProduct(psi.col(j)).cwiseProduct(mu);
                for (int k = 0; k < n; ++k) {
                    double v = prod.dot(psi.col(k));
                    c_[idx(i, j, k)] = v;
                    c_[idx(j, i, k)] = v;
                }
            }
    }

    Field evaluate(Term which, const Field& f, const Field& g) const {
        const int b = cfg_.b;
        Field fh = s_->forward(f), gh = s_->forward(g);
        Field out = Field::Zero(s_->size());
        switch (which) {
            case Term::LowFreq: {
                const int n = s_->size();
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        for (int k = 0; k < n; ++k)
                            out[k] += fh[i] * gh[j] * c_[idx(i, j, k)] * phi_a(b, lam(i)) * phi_a(b, lam(j)) *
                                      phi_a(b, lam(k));
                return s_->backward(out);
            }
            case Term::Paraproduct:
                return evaluate(Term::ParaA, f, g) + evaluate(Term::ParaB, f, g);
            case Term::Resonant: {
                Field acc = Field::Zero(s_->size());
                for (Term t : {Term::S1, Term::S2, Term::S3, Term::S4, Term::R}) acc += evaluate(t, f, g);
                return acc;
            }
            default: break;
        }
        Spec sp = spec(which);
        const int n = s_->size();
        const double gb = gamma_int(b);
        for (int i = 0; i < n; ++i) {
            if (fh[i] == 0.0) continue;
            Poly pf = symbol(sp.f, lam(i));
            for (int j = 0; j < n; ++j) {
                if (gh[j] == 0.0) continue;
                Poly pg = symbol(sp.g, lam(j));
                Poly pfg = mul(pf, pg);
                for (int k = 0; k < n; ++k) {
                    double c = c_[idx(i, j, k)];
                    if (c == 0.0) continue;
                    Poly poly = mul(pfg, symbol(sp.outer, lam(k)));
                    int shift = 0;
                    if (sp.gamma) {
                        c *= 0.5 * (lam(i) + lam(j) - lam(k));
                        shift = 1;
                    }
                    if (c == 0.0) continue;
                    const double L = lam(i) + lam(j) + lam(k);
                    double integral = 0.0;
                    for (std::size_t p = 0; p < poly.size(); ++p) {
                        if (poly[p] == 0.0) continue;
                        const int power = static_cast<int>(p) + shift;
                        require(power >= 1, "tensor oracle: nonintegrable term");
                        integral += poly[p] * time_moment(power, L);
                    }
                    out[k] += sp.factor / gb * fh[i] * gh[j] * c * integral;
                }
            }
        }
        return s_->backward(out);
    }

    double coefficient(int i, int j, int k) const { return c_[idx(i, j, k)]; }

private:
    enum class Sym { P, Q, LP };
    struct Spec {
        Sym f, g, outer;
        bool gamma;
        double factor;
    };
    using Poly = std::vector<double>;  // coefficients of t^p (times e^{-t lambda})

    static Spec spec(Term t) {
        switch (t) {
            case Term::ParaA: return {Sym::Q, Sym::P, Sym::LP, false, 1.0};
            case Term::ParaB: return {Sym::LP, Sym::P, Sym::Q, false, 1.0};
            case Term::S1: return {Sym::Q, Sym::LP, Sym::P, false, -1.0};
            case Term::S2: return {Sym::Q, Sym::P, Sym::P, true, 2.0};
            case Term::S3: return {Sym::LP, Sym::Q, Sym::P, false, -1.0};
            case Term::S4: return {Sym::P, Sym::Q, Sym::P, true, 2.0};
            case Term::R: return {Sym::P, Sym::P, Sym::Q, true, -2.0};
            default: throw ValidationError("tensor oracle: composite term has no single symbol");
        }
    }

    Poly symbol(Sym s, double l) const {
        const int b = cfg_.b;
        Poly p(static_cast<std::size_t>(b + 1), 0.0);
        switch (s) {
            case Sym::P: {
                double c = 1.0;
                for (int m = 0; m < b; ++m) {
                    p[static_cast<std::size_t>(m)] = c;
                    c *= l / (m + 1);
                }
                break;
            }
            case Sym::Q: p[static_cast<std::size_t>(b - 1)] = std::pow(l, b - 1); break;
            case Sym::LP: {
                double c = l;
                for (int m = 0; m < b; ++m) {
                    p[static_cast<std::size_t>(m + 1)] = c;
                    c *= l / (m + 1);
                }
                break;
            }
        }
        return p;
    }

    static Poly mul(const Poly& a, const Poly& b) {
        Poly r(a.size() + b.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i] == 0.0) continue;
            for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
        }
        return r;
    }

    double lam(int i) const { return s_->lambdas()[i]; }
    std::size_t idx(int i, int j, int k) const {
        const auto n = static_cast<std::size_t>(s_->size());
        return (static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)) * n + static_cast<std::size_t>(k);
    }

    const SpectralDecomposition* s_;
    ParaConfig cfg_;
    std::vector<double> c_;
};

inline Field tensor_oracle(const TensorOracle& o, Term which, const Field& f, const Field& g) {
    return o.evaluate(which, f, g);
}

// ---------------------------------------------------------------------------
// Test fields
// ---------------------------------------------------------------------------

/// Gaussian field of regularity alpha: (1 + L)^{-(alpha + d/2)/2} applied to
/// white noise with Var(xi_x) = 1/mu_x (coefficients iid N(0,1) in the mu basis).
inline Field manufactured_field(const SpectralDecomposition& s, double alpha, std::mt19937_64& rng,
                                double dimension = 2.0) {
    Field coef = standard_normal_field(s.size(), rng);
    const double e = -(alpha + dimension / 2) / 2;
    for (int i = 0; i < s.size(); ++i) coef[i] *= std::pow(1.0 + s.lambdas()[i], e);
    return s.backward(coef);
}

}  // namespace semiheat
