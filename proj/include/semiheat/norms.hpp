#pragma once

// Semigroup-defined function-space norms and their space-time variants.

#include "semiheat/spectral.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace semiheat {

/// Strictly increasing sample times.
class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(std::vector<double> nodes, std::string id) : nodes_(std::move(nodes)), id_(std::move(id)) {
        require(!nodes_.empty(), "time grid: empty");
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            require(std::isfinite(nodes_[i]) && nodes_[i] >= 0, "time grid: nodes must be finite and nonnegative");
            if (i) require(nodes_[i] > nodes_[i - 1], "time grid: nodes must increase strictly");
        }
    }

    /// t = 2^{-j}, j = j_max..0, for suprema over (0, 1].
    static TimeGrid dyadic(int j_max = 40) {
        require(j_max >= 0, "time grid: j_max must be nonnegative");
        std::vector<double> t;
        for (int j = j_max; j >= 0; --j) t.push_back(std::ldexp(1.0, -j));
        return TimeGrid(std::move(t), "dyadic:" + std::to_string(j_max));
    }

    /// Geometric refinement of dyadic: `per_octave` nodes per factor 2.
    static TimeGrid log_spaced(double t_min, int per_octave) {
        require(t_min > 0 && t_min < 1 && per_octave >= 1, "time grid: bad log-spaced parameters");
        int count = static_cast<int>(std::ceil(-std::log2(t_min) * per_octave));
        std::vector<double> t;
        for (int k = count; k >= 0; --k) t.push_back(std::exp2(-static_cast<double>(k) / per_octave));
        std::ostringstream id;
        id << "logspaced:" << t_min << ":" << per_octave;
        return TimeGrid(std::move(t), id.str());
    }

    /// 0, T/K, ..., T for trajectories.
    static TimeGrid uniform(double T, int steps) {
        require(T > 0 && steps >= 1, "time grid: need T > 0 and at least one step");
        std::vector<double> t;
        for (int k = 0; k <= steps; ++k) t.push_back(T * k / steps);
        t.back() = T;
        std::ostringstream id;
        id << "uniform:" << T << ":" << steps;
        return TimeGrid(std::move(t), id.str());
    }

    const std::vector<double>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    double operator[](std::size_t i) const { return nodes_[i]; }
    double back() const { return nodes_.back(); }
    const std::string& id() const { return id_; }
    bool same_as(const TimeGrid& o) const { return nodes_ == o.nodes_; }

private:
    std::vector<double> nodes_;
    std::string id_;
};

/// One field per grid node over [0, T].
struct SpaceTimeField {
    TimeGrid times;
    std::vector<Field> values;

    SpaceTimeField() = default;
    SpaceTimeField(TimeGrid g, std::vector<Field> v) : times(std::move(g)), values(std::move(v)) {
        require(values.size() == times.size(), "space-time field: one field per node required");
        for (const Field& f : values) require(f.size() == values.front().size(), "space-time field: inconsistent sizes");
    }
    static SpaceTimeField zeros(const TimeGrid& g, int n) {
        return SpaceTimeField(g, std::vector<Field>(g.size(), Field::Zero(n)));
    }
    double T() const { return times.back(); }
    std::size_t size() const { return values.size(); }
    int vertices() const { return values.empty() ? 0 : static_cast<int>(values.front().size()); }
};

inline SpaceTimeField operator-(const SpaceTimeField& a, const SpaceTimeField& b) {
    require(a.times.same_as(b.times), "space-time field: grid mismatch");
    std::vector<Field> v;
    for (std::size_t k = 0; k < a.size(); ++k) v.push_back(a.values[k] - b.values[k]);
    return SpaceTimeField(a.times, std::move(v));
}

struct NormReport {
    std::string kind;
    double value = 0.0;
    double low_term = 0.0;
    double sup_term = 0.0;
    double argmax_t = 0.0;
    std::map<std::string, double> params;
    std::string grid_id;

    static std::string csv_header() { return "kind,params,value,low_term,sup_term,argmax_t,grid"; }
    std::string csv_row() const {
        std::ostringstream out;
        out.precision(17);
        out << kind << ',';
        bool first = true;
        for (const auto& [k, v] : params) {
            out << (first ? "" : ";") << k << '=' << v;
            first = false;
        }
        out << ',' << value << ',' << low_term << ',' << sup_term << ',' << argmax_t << ',' << grid_id;
        return out.str();
    }
};

/// mu-weighted L^p norm.
inline double lp_norm(const Field& f, const Field& mu, double p) {
    require(p >= 1, "lp_norm: p must be >= 1");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i) acc += std::pow(std::abs(f[i]), p) * mu[i];
    return std::pow(acc, 1.0 / p);
}

/// C^sigma norms of the columns of F:
/// ||e^{-L} f||_inf + max_{t in grid} t^{-sigma/2} ||Q_t^{(a)} f||_inf.
inline std::vector<NormReport> holder_norms(const SpectralDecomposition& s, const Matrix& F, double sigma,
                                            int a, const TimeGrid& grid) {
    require(sigma < 2, "holder_norm: sigma must be < 2");
    require(a >= 1, "holder_norm: a must be >= 1");
    for (double t : grid.nodes()) require(t > 0 && t <= 1, "holder_norm: grid must lie in (0, 1]");
    const int n = s.size();
    const Eigen::Index m = F.cols();
    Matrix coef = s.forward(F);
    std::vector<NormReport> out(static_cast<std::size_t>(m));
    Field e1 = s.symbol([](double l) { return std::exp(-l); });
    Matrix low = s.backward(Matrix(e1.asDiagonal() * coef));
    for (Eigen::Index j = 0; j < m; ++j) {
        auto& r = out[static_cast<std::size_t>(j)];
        r.kind = "holder";
        r.low_term = low.col(j).cwiseAbs().maxCoeff();
        r.params = {{"sigma", sigma}, {"a", a}};
        r.grid_id = grid.id();
    }
    for (double t : grid.nodes()) {
        Field sym(n);
        for (int i = 0; i < n; ++i) sym[i] = q_symbol(a, t * s.lambdas()[i]);
        Matrix qt = s.backward(Matrix(sym.asDiagonal() * coef));
        const double wt = std::pow(t, -sigma / 2);
        for (Eigen::Index j = 0; j < m; ++j) {
            double v = wt * qt.col(j).cwiseAbs().maxCoeff();
            auto& r = out[static_cast<std::size_t>(j)];
            if (v > r.sup_term) {
                r.sup_term = v;
                r.argmax_t = t;
            }
        }
    }
    for (auto& r : out) r.value = r.low_term + r.sup_term;
    return out;
}

inline NormReport holder_norm(const SpectralDecomposition& s, const Field& f, double sigma, int a = 2,
                              const TimeGrid& grid = TimeGrid::dyadic()) {
    Matrix F = f;
    return holder_norms(s, F, sigma, a, grid).front();
}

/// Lambda^sigma: ||f||_inf + max_{0 < d(x,y) <= 1} |f(x) - f(y)| / d(x,y)^sigma (metric distance).
inline NormReport lambda_norm(const Field& f, const DistanceTable& d, double sigma) {
    require(sigma > 0 && sigma <= 1, "lambda_norm: sigma must lie in (0, 1]");
    require(f.size() == d.size(), "lambda_norm: size mismatch");
    NormReport r;
    r.kind = "lambda";
    r.params = {{"sigma", sigma}};
    r.low_term = sup_norm(f);
    const int n = d.size();
    for (int x = 0; x < n; ++x) {
        for (int y = x + 1; y < n; ++y) {
            double dist = d.metric(x, y);
            if (dist <= 0 || dist > 1 + 1e-12) continue;
            r.sup_term = std::max(r.sup_term, std::abs(f[x] - f[y]) / std::pow(dist, sigma));
        }
    }
    r.value = r.low_term + r.sup_term;
    return r;
}

/// Besov B^sigma_{p,q}: ||e^{-L} f||_p + (int_0^1 t^{-q sigma/2} ||Q_t^{(a)} f||_p^q dt/t)^{1/q}.
inline NormReport besov_norm(const SpectralDecomposition& s, const Field& f, double sigma, double p, double q,
                             int a, const Quadrature& quad) {
    require(p > 1 && q > 1 && std::isfinite(p) && std::isfinite(q), "besov_norm: p, q must lie in (1, inf)");
    require(a > sigma / 2, "besov_norm: need a > sigma/2");
    require(quad.size() > 0, "besov_norm: empty quadrature");
    NormReport r;
    r.kind = "besov";
    r.params = {{"sigma", sigma}, {"p", p}, {"q", q}, {"a", a}};
    r.grid_id = quad.id;
    Field coef = s.forward(f);
    auto apply = [&](auto&& phi) {
        Field sym = s.symbol(phi);
        return s.backward(Field(sym.cwiseProduct(coef)));
    };
    r.low_term = lp_norm(apply([](double l) { return std::exp(-l); }), s.measure(), p);
    double acc = 0.0, best = -1.0;
    for (std::size_t k = 0; k < quad.size(); ++k) {
        const double t = quad.t[k];
        double v = std::pow(t, -sigma / 2) * lp_norm(apply([&](double l) { return q_symbol(a, t * l); }), s.measure(), p);
        acc += quad.w[k] * std::pow(v, q);
        if (v > best) {
            best = v;
            r.argmax_t = t;
        }
    }
    r.sup_term = std::pow(acc, 1.0 / q);
    r.value = r.low_term + r.sup_term;
    return r;
}

/// W^{s,p}: ||(1 + L)^{s/2} f||_p.
inline NormReport sobolev_norm(const SpectralDecomposition& s, const Field& f, double sobolev_s, double p) {
    require(p > 1 && std::isfinite(p), "sobolev_norm: p must lie in (1, inf)");
    NormReport r;
    r.kind = "sobolev";
    r.params = {{"s", sobolev_s}, {"p", p}};
    Field g = apply_fn(s, [sobolev_s](double l) { return std::pow(1.0 + l, sobolev_s / 2); }, f);
    r.value = lp_norm(g, s.measure(), p);
    r.sup_term = r.value;
    return r;
}

// ---------------------------------------------------------------------------
// Space-time norms
// ---------------------------------------------------------------------------

enum class SpaceTimeKind { CTC, CTH, WL, WLH };

inline SpaceTimeKind parse_spacetime_kind(const std::string& s) {
    if (s == "CTC") return SpaceTimeKind::CTC;
    if (s == "CTH") return SpaceTimeKind::CTH;
    if (s == "WL") return SpaceTimeKind::WL;
    if (s == "WLH") return SpaceTimeKind::WLH;
    throw ValidationError("unknown space-time norm '" + s + "'");
}

struct SpaceTimeParams {
    double alpha = 0.5;
    double lambda = 1.0;  ///< weight exponent for WL / WLH
    int a = 2;
    TimeGrid grid = TimeGrid::dyadic();
};

/// CTC: max_t ||u(t)||_{C^alpha}.  CTH: max_{s<t} ||u(t)-u(s)||_inf / |t-s|^{alpha/2}.
/// WL, WLH: the same with the factor e^{-lambda t} (t the later time).
inline NormReport spacetime_norm(const SpectralDecomposition* s, SpaceTimeKind kind, const SpaceTimeField& u,
                                 const SpaceTimeParams& prm) {
    NormReport r;
    r.params = {{"alpha", prm.alpha}, {"lambda", prm.lambda}};
    r.grid_id = u.times.id();
    const bool weighted = kind == SpaceTimeKind::WL || kind == SpaceTimeKind::WLH;
    if (weighted) require(prm.lambda >= 1, "spacetime_norm: weighted kinds need lambda >= 1");
    auto weight = [&](double t) { return weighted ? std::exp(-prm.lambda * t) : 1.0; };
    if (kind == SpaceTimeKind::CTC || kind == SpaceTimeKind::WL) {
        r.kind = kind == SpaceTimeKind::CTC ? "CTC" : "WL";
        require(s != nullptr, "spacetime_norm: C^alpha kinds need a spectral decomposition");
        Matrix F(u.vertices(), static_cast<Eigen::Index>(u.size()));
        for (std::size_t k = 0; k < u.size(); ++k) F.col(static_cast<Eigen::Index>(k)) = u.values[k];
        auto norms = holder_norms(*s, F, prm.alpha, prm.a, prm.grid);
        for (std::size_t k = 0; k < u.size(); ++k) {
            double v = weight(u.times[k]) * norms[k].value;
            if (v > r.value || k == 0) {
                r.value = v;
                r.argmax_t = u.times[k];
            }
        }
    } else {
        r.kind = kind == SpaceTimeKind::CTH ? "CTH" : "WLH";
        require(u.size() >= 2, "spacetime_norm: time-Holder kinds need at least 2 nodes");
        for (std::size_t j = 1; j < u.size(); ++j) {
            for (std::size_t i = 0; i < j; ++i) {
                double dt = u.times[j] - u.times[i];
                double v = weight(u.times[j]) * sup_norm(Field(u.values[j] - u.values[i])) / std::pow(dt, prm.alpha / 2);
                if (v > r.value) {
                    r.value = v;
                    r.argmax_t = u.times[j];
                }
            }
        }
    }
    r.sup_term = r.value;
    return r;
}

/// C_T L^inf distance.
inline double sup_distance(const SpaceTimeField& a, const SpaceTimeField& b) {
    require(a.times.same_as(b.times), "sup_distance: grid mismatch");
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, sup_norm(Field(a.values[k] - b.values[k])));
    return m;
}

}  // namespace semiheat
