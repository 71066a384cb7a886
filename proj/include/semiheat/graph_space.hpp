#pragma once

// Finite weighted graphs viewed as Dirichlet spaces: a symmetric Markov
// kernel k, vertex masses m, a reference measure mu and a noise weight omega.
// The generator is (L f)(x) = (f(x) - sum_y k(x,y) f(y)) / m(x).

#include "semiheat/util.hpp"

#include <Eigen/Sparse>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace semiheat {

struct Edge {
    int x = 0;
    int y = 0;
    double k = 0.0;
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class GraphSpace {
public:
    /// Validating constructor. `edges` lists each undirected edge once
    /// (self-loops allowed); the kernel is symmetrized from it.
    GraphSpace(int n, const std::vector<Edge>& edges, Field mass, Field measure, Field weight,
               double length_scale = 1.0, std::string name = "custom",
               std::vector<std::string> labels = {})
        : n_(n),
          mass_(std::move(mass)),
          measure_(std::move(measure)),
          weight_(std::move(weight)),
          length_scale_(length_scale),
          name_(std::move(name)),
          labels_(std::move(labels)) {
        require(n_ >= 1, "graph: vertex count must be positive");
        require(mass_.size() == n_, "graph: mass has wrong length");
        require(measure_.size() == n_, "graph: measure has wrong length");
        require(weight_.size() == n_, "graph: weight has wrong length");
        require(labels_.empty() || static_cast<int>(labels_.size()) == n_,
                "graph: labels have wrong length");
        require(length_scale_ > 0 && std::isfinite(length_scale_), "graph: length scale must be positive");

        std::map<std::pair<int, int>, double> entries;
        for (const Edge& e : edges) {
            require(e.x >= 0 && e.x < n_ && e.y >= 0 && e.y < n_, "graph: edge endpoint out of range");
            require(std::isfinite(e.k) && e.k >= 0, "graph: kernel entries must be finite and nonnegative");
            auto key = std::minmax(e.x, e.y);
            auto [it, inserted] = entries.emplace(std::pair<int, int>(key.first, key.second), e.k);
            if (!inserted) {
                require(std::abs(it->second - e.k) <= 1e-14 * std::max(1.0, std::abs(e.k)),
                        "graph: asymmetric kernel (edge " + std::to_string(e.x) + "," +
                            std::to_string(e.y) + " listed with two different values)");
            }
        }
        std::vector<Eigen::Triplet<double>> trips;
        for (const auto& [key, k] : entries) {
            if (k == 0.0) continue;
            trips.emplace_back(key.first, key.second, k);
            if (key.first != key.second) trips.emplace_back(key.second, key.first, k);
        }
        kernel_.resize(n_, n_);
        kernel_.setFromTriplets(trips.begin(), trips.end());
        kernel_.makeCompressed();
        validate();
    }

    /// Builds from a dense kernel; rejects asymmetry instead of symmetrizing.
    static GraphSpace from_dense(const Matrix& k, Field mass, Field measure, Field weight,
                                 double length_scale = 1.0, std::string name = "custom") {
        require(k.rows() == k.cols(), "graph: kernel must be square");
        const int n = static_cast<int>(k.rows());
        std::vector<Edge> edges;
        for (int x = 0; x < n; ++x) {
            for (int y = x; y < n; ++y) {
                require(std::abs(k(x, y) - k(y, x)) <= 1e-12, "graph: asymmetric kernel at (" +
                                                                   std::to_string(x) + "," +
                                                                   std::to_string(y) + ")");
                if (k(x, y) != 0.0) edges.push_back({x, y, k(x, y)});
            }
        }
        return GraphSpace(n, edges, std::move(mass), std::move(measure), std::move(weight),
                          length_scale, std::move(name));
    }

    int size() const { return n_; }
    const SparseMatrix& kernel() const { return kernel_; }
    double kernel(int x, int y) const { return kernel_.coeff(x, y); }
    const Field& mass() const { return mass_; }
    const Field& measure() const { return measure_; }
    const Field& weight() const { return weight_; }
    double length_scale() const { return length_scale_; }
    const std::string& name() const { return name_; }
    const std::vector<std::string>& labels() const { return labels_; }

    /// Copy with a different noise weight.
    GraphSpace with_weight(Field weight) const {
        require(weight.size() == n_, "graph: weight has wrong length");
        GraphSpace g = *this;
        g.weight_ = std::move(weight);
        g.validate();
        return g;
    }

    /// Neighbours y != x with k(x,y) > 0.
    std::vector<int> neighbours(int x) const {
        std::vector<int> out;
        for (SparseMatrix::InnerIterator it(kernel_, x); it; ++it)
            if (it.col() != x && it.value() > 0) out.push_back(static_cast<int>(it.col()));
        return out;
    }

    /// The generator applied columnwise: (F - K F) / m.
    Matrix apply_generator(const Matrix& f) const {
        Matrix out = f - kernel_ * f;
        return mass_.cwiseInverse().asDiagonal() * out;
    }
    Field apply_generator(const Field& f) const {
        Field out = f - kernel_ * f;
        return out.cwiseQuotient(mass_);
    }

    std::vector<Edge> edges() const {
        std::vector<Edge> out;
        for (int x = 0; x < n_; ++x)
            for (SparseMatrix::InnerIterator it(kernel_, x); it; ++it)
                if (it.col() >= x) out.push_back({x, static_cast<int>(it.col()), it.value()});
        return out;
    }

    std::string content_hash() const {
        Fnv1a h;
        h.update(static_cast<std::int64_t>(n_));
        for (const Edge& e : edges()) {
            h.update(static_cast<std::int64_t>(e.x));
            h.update(static_cast<std::int64_t>(e.y));
            h.update(e.k);
        }
        for (int i = 0; i < n_; ++i) {
            h.update(mass_[i]);
            h.update(measure_[i]);
            h.update(weight_[i]);
        }
        h.update(length_scale_);
        return h.hex();
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["n"] = n_;
        nlohmann::json edges_json = nlohmann::json::array();
        for (const Edge& e : edges()) edges_json.push_back({e.x, e.y, e.k});
        j["edges"] = edges_json;
        j["mass"] = std::vector<double>(mass_.data(), mass_.data() + n_);
        j["measure"] = std::vector<double>(measure_.data(), measure_.data() + n_);
        j["weight"] = std::vector<double>(weight_.data(), weight_.data() + n_);
        if (length_scale_ != 1.0) j["length_scale"] = length_scale_;
        if (!labels_.empty()) j["labels"] = labels_;
        j["name"] = name_;
        return j;
    }

private:
    void validate() const {
        for (int x = 0; x < n_; ++x) {
            require(std::isfinite(mass_[x]) && mass_[x] > 0, "graph: nonpositive mass at vertex " + std::to_string(x));
            require(std::isfinite(measure_[x]) && measure_[x] > 0,
                    "graph: nonpositive measure at vertex " + std::to_string(x));
            require(std::isfinite(weight_[x]) && weight_[x] >= 0,
                    "graph: negative weight at vertex " + std::to_string(x));
            double row = 0.0;
            for (SparseMatrix::InnerIterator it(kernel_, x); it; ++it) row += it.value();
            require(std::abs(row - 1.0) <= 1e-12, "graph: kernel row " + std::to_string(x) +
                                                      " sums to " + std::to_string(row) + " (Markov requires 1)");
        }
        // connectivity
        std::vector<char> seen(static_cast<std::size_t>(n_), 0);
        std::queue<int> frontier;
        frontier.push(0);
        seen[0] = 1;
        int reached = 1;
        while (!frontier.empty()) {
            int x = frontier.front();
            frontier.pop();
            for (int y : neighbours(x)) {
                if (!seen[static_cast<std::size_t>(y)]) {
                    seen[static_cast<std::size_t>(y)] = 1;
                    ++reached;
                    frontier.push(y);
                }
            }
        }
        require(reached == n_, "graph: disconnected (" + std::to_string(reached) + " of " +
                                   std::to_string(n_) + " vertices reachable from 0)");
    }

    int n_;
    SparseMatrix kernel_;
    Field mass_;
    Field measure_;
    Field weight_;
    double length_scale_;
    std::string name_;
    std::vector<std::string> labels_;
};

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

namespace detail {

inline int parse_positive_int(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(s, &used);
    } catch (const std::exception&) {
        throw ValidationError("graph spec: " + what + " must be an integer, got '" + s + "'");
    }
    require(used == s.size(), "graph spec: trailing characters in '" + s + "'");
    return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

}  // namespace detail

/// Parses a graph document {"n", "edges":[[x,y,k],...], "mass", "measure", "weight"}.
inline GraphSpace graph_from_json(const nlohmann::json& j) {
    require(j.is_object() && j.contains("n") && j.contains("edges"), "graph file: needs 'n' and 'edges'");
    const int n = j.at("n").get<int>();
    require(n >= 1, "graph file: n must be positive");
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
        require(e.is_array() && e.size() == 3, "graph file: each edge is [x, y, k]");
        edges.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
    }
    auto read_field = [&](const char* key, std::optional<Field> fallback) -> Field {
        if (!j.contains(key)) {
            require(fallback.has_value(), std::string("graph file: missing '") + key + "'");
            return *fallback;
        }
        auto v = j.at(key).get<std::vector<double>>();
        require(static_cast<int>(v.size()) == n, std::string("graph file: '") + key + "' has wrong length");
        return Eigen::Map<const Field>(v.data(), n);
    };
    Field mass = read_field("mass", Field::Ones(n));
    Field measure = read_field("measure", mass);
    Field weight = read_field("weight", Field::Ones(n));
    double scale = j.value("length_scale", 1.0);
    std::vector<std::string> labels;
    if (j.contains("labels")) labels = j.at("labels").get<std::vector<std::string>>();
    return GraphSpace(n, edges, mass, measure, weight, scale, j.value("name", std::string("file")),
                      labels);
}

inline GraphSpace load_graph_file(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), "graph file: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("graph file: " + std::string(e.what()));
    }
    return graph_from_json(j);
}

/// Built-in generators, "name:param[:option...]".
///   complete:N   cycle:N   path:N   torus2d:N
/// Options: "scaled" discretizes the unit interval/torus (spacing h = 1/N,
/// masses h^d, metric distance h * hops); "mass=VALUE" sets uniform masses.
/// Anything containing ".json" or without a ':' is read as a graph file.
inline GraphSpace build_graph(const std::string& spec) {
    if (spec.find(".json") != std::string::npos || spec.find(':') == std::string::npos) {
        return load_graph_file(spec);
    }
    auto parts = detail::split(spec, ':');
    require(parts.size() >= 2, "graph spec: expected name:param, got '" + spec + "'");
    const std::string& name = parts[0];
    const int N = detail::parse_positive_int(parts[1], "size");
    bool scaled = false;
    std::optional<double> mass_value;
    for (std::size_t i = 2; i < parts.size(); ++i) {
        if (parts[i] == "scaled") {
            scaled = true;
        } else if (parts[i].rfind("mass=", 0) == 0) {
            try {
                mass_value = std::stod(parts[i].substr(5));
            } catch (const std::exception&) {
                throw ValidationError("graph spec: bad mass value in '" + spec + "'");
            }
        } else {
            throw ValidationError("graph spec: unknown option '" + parts[i] + "'");
        }
    }

    std::vector<Edge> edges;
    int n = 0;
    int dim = 1;
    if (name == "complete") {
        require(N >= 2, "complete graph needs N >= 2");
        require(!scaled, "complete graph has no scaled variant");
        n = N;
        for (int x = 0; x < N; ++x)
            for (int y = x + 1; y < N; ++y) edges.push_back({x, y, 1.0 / (N - 1)});
    } else if (name == "cycle") {
        require(N >= 3, "cycle needs N >= 3");
        n = N;
        for (int x = 0; x < N; ++x) edges.push_back({x, (x + 1) % N, 0.5});
    } else if (name == "path") {
        require(N >= 2, "path needs N >= 2");
        n = N;
        for (int x = 0; x + 1 < N; ++x) edges.push_back({x, x + 1, 0.5});
        // reflecting ends keep the kernel Markov
        edges.push_back({0, 0, 0.5});
        edges.push_back({N - 1, N - 1, 0.5});
    } else if (name == "torus2d") {
        require(N >= 3, "torus2d needs N >= 3");
        n = N * N;
        dim = 2;
        auto id = [N](int i, int j) { return ((i + N) % N) * N + (j + N) % N; };
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < N; ++j) {
                edges.push_back({id(i, j), id(i + 1, j), 0.25});
                edges.push_back({id(i, j), id(i, j + 1), 0.25});
            }
        }
    } else {
        throw ValidationError("graph spec: unknown generator '" + name + "'");
    }

    double h = scaled ? 1.0 / N : 1.0;
    double m = mass_value.value_or(std::pow(h, dim));
    require(m > 0, "graph spec: mass must be positive");
    Field mass = Field::Constant(n, m);
    return GraphSpace(n, edges, mass, mass, Field::Ones(n), h, spec);
}

// ---------------------------------------------------------------------------
// Distances and volumes
// ---------------------------------------------------------------------------

/// Hop distances over edges with k > 0; metric distance = length_scale * hops.
class DistanceTable {
public:
    DistanceTable() = default;
    DistanceTable(int n, std::vector<int> hops, double scale)
        : n_(n), hops_(std::move(hops)), scale_(scale) {}

    int size() const { return n_; }
    int hops(int x, int y) const {
        return hops_[static_cast<std::size_t>(x) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(y)];
    }
    double metric(int x, int y) const { return scale_ * hops(x, y); }
    double scale() const { return scale_; }
    int diameter_hops() const { return hops_.empty() ? 0 : *std::max_element(hops_.begin(), hops_.end()); }

private:
    int n_ = 0;
    std::vector<int> hops_;
    double scale_ = 1.0;
};

inline DistanceTable graph_distance(const GraphSpace& g) {
    const int n = g.size();
    std::vector<int> hops(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), -1);
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) adj[static_cast<std::size_t>(x)] = g.neighbours(x);
    std::vector<int> queue(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        int* row = hops.data() + static_cast<std::size_t>(s) * static_cast<std::size_t>(n);
        std::size_t head = 0, tail = 0;
        row[s] = 0;
        queue[tail++] = s;
        while (head < tail) {
            int x = queue[head++];
            for (int y : adj[static_cast<std::size_t>(x)]) {
                if (row[y] < 0) {
                    row[y] = row[x] + 1;
                    queue[tail++] = y;
                }
            }
        }
    }
    return DistanceTable(n, std::move(hops), g.length_scale());
}

/// mu(B(x, r)) for a closed metric ball.
inline double ball_volume(const GraphSpace& g, const DistanceTable& d, int x, double r) {
    require(r >= 0, "ball_volume: radius must be nonnegative");
    const double limit = r * (1 + 1e-12) + 1e-300;
    double v = 0.0;
    for (int y = 0; y < g.size(); ++y)
        if (d.metric(x, y) <= limit) v += g.measure()[y];
    return v;
}

// ---------------------------------------------------------------------------
// Geometry certification
// ---------------------------------------------------------------------------

struct GeometryThresholds {
    int samples = 200;                 ///< random fields for Poincare / De Giorgi
    std::uint64_t seed = 20240601;
    int max_centers = 64;              ///< ball centres sampled (evenly spaced)
    double degiorgi_q = 4.0;
    double doubling_max = 16.0;
    double poincare_max = 10.0;
    double degiorgi_max = 10.0;
    int min_diameter = 4;
};

struct GeometryReport {
    bool too_small = false;
    double doubling_constant = 0.0;
    double ahlfors_c1 = 0.0;
    double ahlfors_nu = 0.0;
    double ahlfors_r2 = 0.0;
    double poincare_constant = 0.0;
    double degiorgi_constant = 0.0;
    double degiorgi_theta = 0.0;
    double degiorgi_q = 0.0;
    int diameter_hops = 0;
    bool doubling_pass = false;
    bool ahlfors_pass = false;
    bool poincare_pass = false;
    bool degiorgi_pass = false;
};

/// Volume doubling constant, Ahlfors exponent, Poincare and De Giorgi constants.
///
/// Ahlfors: nu is the least-squares slope of log mean_x V(x, r) against the
/// log of the effective radius (r + 1/2) * h of a hop ball (a hop ball of
/// radius r covers the cells whose centres lie within r). c1 is then the
/// smallest V(x, r) / rho^nu. Poincare and De Giorgi constants are maxima of
/// the inequality ratios over Gaussian fields, smoothed by powers of the
/// kernel, and over ball pairs.
inline GeometryReport verify_geometry(const GraphSpace& g, const DistanceTable& d,
                                      const GeometryThresholds& th = {}) {
    GeometryReport rep;
    const int n = g.size();
    rep.diameter_hops = d.diameter_hops();
    rep.degiorgi_q = th.degiorgi_q;
    if (rep.diameter_hops < th.min_diameter) {
        rep.too_small = true;
        return rep;
    }
    const double h = d.scale();
    const int diam = rep.diameter_hops;

    // volumes by hop radius: vol[x][r]
    std::vector<std::vector<double>> vol(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(diam) + 1, 0.0));
    for (int x = 0; x < n; ++x) {
        auto& v = vol[static_cast<std::size_t>(x)];
        for (int y = 0; y < n; ++y) v[static_cast<std::size_t>(d.hops(x, y))] += g.measure()[y];
        for (int r = 1; r <= diam; ++r) v[static_cast<std::size_t>(r)] += v[static_cast<std::size_t>(r) - 1];
    }
    auto V = [&](int x, int r) { return vol[static_cast<std::size_t>(x)][static_cast<std::size_t>(std::min(r, diam))]; };

    double dbl = 1.0;
    for (int x = 0; x < n; ++x)
        for (int r = 1; r <= diam; ++r) dbl = std::max(dbl, V(x, 2 * r) / V(x, r));
    rep.doubling_constant = dbl;

    std::vector<double> lx, ly;
    for (int r = 1; r <= diam / 2; ++r) {
        double mean = 0.0;
        for (int x = 0; x < n; ++x) mean += V(x, r);
        mean /= n;
        lx.push_back(std::log((r + 0.5) * h));
        ly.push_back(std::log(mean));
    }
    if (lx.size() >= 2) {
        LineFit fit = fit_line(lx, ly);
        rep.ahlfors_nu = fit.slope;
        rep.ahlfors_r2 = fit.r2;
        double c1 = std::numeric_limits<double>::infinity();
        for (int x = 0; x < n; ++x)
            for (int r = 1; r <= diam / 2; ++r)
                c1 = std::min(c1, V(x, r) / std::pow((r + 0.5) * h, rep.ahlfors_nu));
        rep.ahlfors_c1 = c1;
    }

    // centres and radii for the functional inequalities
    std::vector<int> centres;
    int stride = std::max(1, n / th.max_centers);
    for (int x = 0; x < n && static_cast<int>(centres.size()) < th.max_centers; x += stride) centres.push_back(x);
    std::vector<int> radii;
    for (int r = 1; r <= std::max(1, diam / 2); r *= 2) radii.push_back(r);

    std::vector<std::vector<std::vector<int>>> balls(centres.size());
    for (std::size_t c = 0; c < centres.size(); ++c) {
        for (int r : radii) {
            std::vector<int> members;
            for (int y = 0; y < n; ++y)
                if (d.hops(centres[c], y) <= r) members.push_back(y);
            balls[c].push_back(std::move(members));
        }
    }

    const double q = th.degiorgi_q;
    const int levels[] = {0, 1, 4, 16};
    const int per_level = std::max(1, th.samples / 4);
    const int total = per_level * 4;
    std::vector<double> poinc(static_cast<std::size_t>(total), 0.0);
    // dg_ratio[sample][pair]
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t a = 0; a < radii.size(); ++a)
        for (std::size_t b = a + 1; b < radii.size(); ++b) pairs.emplace_back(static_cast<int>(a), static_cast<int>(b));
    std::vector<std::vector<double>> dg(static_cast<std::size_t>(total), std::vector<double>(pairs.size(), 0.0));

    parallel_for(total, [&](int s) {
        auto rng = make_rng(th.seed, static_cast<std::uint64_t>(s));
        Field f = standard_normal_field(n, rng);
        for (int j = 0; j < levels[s / per_level]; ++j) f = g.kernel() * f;
        Field Lf = g.apply_generator(f);
        Field gam = -0.5 * (g.apply_generator(Field(f.cwiseProduct(f))) - 2.0 * f.cwiseProduct(Lf));
        gam = gam.cwiseMax(0.0);
        double best = 0.0;
        for (std::size_t c = 0; c < centres.size(); ++c) {
            std::vector<double> grad_q(radii.size()), lf_sup(radii.size());
            for (std::size_t ri = 0; ri < radii.size(); ++ri) {
                const auto& B = balls[c][ri];
                double vb = 0, mean = 0;
                for (int y : B) {
                    vb += g.measure()[y];
                    mean += f[y] * g.measure()[y];
                }
                mean /= vb;
                double osc = 0, energy = 0, gq = 0, ls = 0;
                for (int y : B) {
                    osc += (f[y] - mean) * (f[y] - mean) * g.measure()[y];
                    energy += gam[y] * g.measure()[y];
                    gq += std::pow(std::sqrt(gam[y]), q) * g.measure()[y];
                    ls = std::max(ls, std::abs(Lf[y]));
                }
                osc /= vb;
                energy /= vb;
                double rho = radii[ri] * h;
                if (energy > 1e-300) best = std::max(best, std::sqrt(osc) / (rho * std::sqrt(energy)));
                grad_q[ri] = std::pow(gq / vb, 1.0 / q);
                lf_sup[ri] = ls;
            }
            for (std::size_t p = 0; p < pairs.size(); ++p) {
                auto [a, b] = pairs[p];
                double R = radii[static_cast<std::size_t>(b)] * h;
                double denom = grad_q[static_cast<std::size_t>(b)] + R * lf_sup[static_cast<std::size_t>(b)];
                if (denom > 1e-300)
                    dg[static_cast<std::size_t>(s)][p] = std::max(dg[static_cast<std::size_t>(s)][p], grad_q[static_cast<std::size_t>(a)] / denom);
            }
        }
        poinc[static_cast<std::size_t>(s)] = best;
    });
    rep.poincare_constant = *std::max_element(poinc.begin(), poinc.end());

    if (!pairs.empty()) {
        std::vector<double> worst(pairs.size(), 0.0), lratio;
        for (std::size_t p = 0; p < pairs.size(); ++p)
            for (int s = 0; s < total; ++s) worst[p] = std::max(worst[p], dg[static_cast<std::size_t>(s)][p]);
        double theta = 0.0;
        if (pairs.size() >= 2) {
            std::vector<double> lx2, ly2;
            for (std::size_t p = 0; p < pairs.size(); ++p) {
                double ratio = static_cast<double>(radii[static_cast<std::size_t>(pairs[p].second)]) /
                               radii[static_cast<std::size_t>(pairs[p].first)];
                lx2.push_back(std::log(ratio));
                ly2.push_back(std::log(std::max(worst[p], 1e-300)));
            }
            bool spread = *std::max_element(lx2.begin(), lx2.end()) > *std::min_element(lx2.begin(), lx2.end());
            if (spread) theta = std::clamp(fit_line(lx2, ly2).slope, 0.0, 0.999);
        }
        double cst = 0.0;
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            double ratio = static_cast<double>(radii[static_cast<std::size_t>(pairs[p].second)]) /
                           radii[static_cast<std::size_t>(pairs[p].first)];
            cst = std::max(cst, worst[p] * std::pow(ratio, -theta));
        }
        rep.degiorgi_theta = theta;
        rep.degiorgi_constant = cst;
    }

    rep.doubling_pass = rep.doubling_constant <= th.doubling_max;
    rep.ahlfors_pass = rep.ahlfors_nu > 0 && rep.ahlfors_c1 > 0 && std::isfinite(rep.ahlfors_c1);
    rep.poincare_pass = rep.poincare_constant > 0 && rep.poincare_constant <= th.poincare_max;
    rep.degiorgi_pass = rep.degiorgi_theta < 1.0 && rep.degiorgi_constant <= th.degiorgi_max;
    return rep;
}

}  // namespace semiheat
