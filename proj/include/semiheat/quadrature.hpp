#pragma once

// Quadrature rules for the time integrals of the semigroup calculus.

#include "semiheat/util.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace semiheat {

/// Nodes and weights; sum_q w[q] F(t[q]) approximates the target integral.
struct Quadrature {
    std::vector<double> t;
    std::vector<double> w;
    std::string id;

    std::size_t size() const { return t.size(); }
};

/// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    require(n >= 1, "gauss_legendre: need at least one node");
    x.assign(static_cast<std::size_t>(n), 0.0);
    w.assign(static_cast<std::size_t>(n), 0.0);
    const double pi = std::numbers::pi;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = 0.0;
        for (int k = 1; k <= n; ++k) {
            double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
        }
        dp = n * (z * p0 - p1) / (z * z - 1.0);
        const double wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[static_cast<std::size_t>(i)] = -z;
        x[static_cast<std::size_t>(n - 1 - i)] = z;
        w[static_cast<std::size_t>(i)] = wi;
        w[static_cast<std::size_t>(n - 1 - i)] = wi;
    }
}

/// Rule for int_0^1 F(t) dt/t: composite Gauss-Legendre in u = log t over
/// [log t_min, 0]. The part below t_min is dropped; integrands of the
/// calculus vanish like t^a there.
inline Quadrature log_time_rule(double t_min = 1e-10, int panels = 8, int nodes = 32) {
    require(t_min > 0 && t_min < 1, "quadrature: t_min must lie in (0, 1)");
    require(panels >= 1 && nodes >= 1, "quadrature: empty grid");
    std::vector<double> x, w;
    gauss_legendre(nodes, x, w);
    Quadrature q;
    const double a = std::log(t_min);
    const double width = -a / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        for (int i = 0; i < nodes; ++i) {
            double u = lo + 0.5 * width * (x[static_cast<std::size_t>(i)] + 1.0);
            q.t.push_back(std::exp(u));
            q.w.push_back(0.5 * width * w[static_cast<std::size_t>(i)]);
        }
    }
    q.id = "logt:" + std::to_string(t_min) + ":" + std::to_string(panels) + "x" + std::to_string(nodes);
    return q;
}

/// Composite Gauss-Legendre rule for int_a^b F(s) ds.
inline Quadrature linear_rule(double a, double b, int panels = 8, int nodes = 16) {
    require(b > a, "quadrature: empty interval");
    require(panels >= 1 && nodes >= 1, "quadrature: empty grid");
    std::vector<double> x, w;
    gauss_legendre(nodes, x, w);
    Quadrature q;
    const double width = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        for (int i = 0; i < nodes; ++i) {
            q.t.push_back(lo + 0.5 * width * (x[static_cast<std::size_t>(i)] + 1.0));
            q.w.push_back(0.5 * width * w[static_cast<std::size_t>(i)]);
        }
    }
    q.id = "lin:" + std::to_string(a) + ":" + std::to_string(b) + ":" + std::to_string(panels) + "x" +
           std::to_string(nodes);
    return q;
}

/// Quadrature configuration as it appears in run configs.
struct QuadratureSpec {
    double t_min = 1e-10;
    int panels = 8;
    int nodes = 32;

    Quadrature build() const { return log_time_rule(t_min, panels, nodes); }
};

}  // namespace semiheat
