#include "scm/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace scm::quadrature {

void legendre(int n, double x, double& value, double& derivative) {
    if (n == 0) {
        value = 1.0;
        derivative = 0.0;
        return;
    }
    double p0 = 1.0;
    double p1 = x;
    double d0 = 0.0;
    double d1 = 1.0;
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        const double d2 = d0 + (2 * k - 1) * p1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
    }
    value = p1;
    derivative = d1;
}

Rule1D gauss_rule(int n) {
    if (n < 1 || n > 13) throw std::out_of_range("gauss_rule: n must be in [1, 13], got " + std::to_string(n));
    Rule1D r;
    r.points.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = -std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double v, d;
            legendre(n, x, v, d);
            const double dx = v / d;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double v, d;
        legendre(n, x, v, d);
        r.points[i] = x;
        r.weights[i] = 2.0 / ((1.0 - x * x) * d * d);
    }
    if (n % 2 == 1) r.points[n / 2] = 0.0;
    return r;
}

Rule1D gll_rule(int p) {
    if (p < 1 || p > 12) throw std::out_of_range("gll_rule: p must be in [1, 12], got " + std::to_string(p));
    Rule1D r;
    r.points.resize(p + 1);
    r.weights.resize(p + 1);
    r.points[0] = -1.0;
    r.points[p] = 1.0;
    // Interior nodes are the roots of L_p'.
    for (int i = 1; i < p; ++i) {
        double x = -std::cos(std::numbers::pi * i / p);
        for (int it = 0; it < 100; ++it) {
            double v, d;
            legendre(p, x, v, d);
            const double dd = (2.0 * x * d - p * (p + 1.0) * v) / (1.0 - x * x);
            const double dx = d / dd;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        r.points[i] = x;
    }
    if (p % 2 == 0) r.points[p / 2] = 0.0;
    for (int i = 0; i <= p; ++i) {
        double v, d;
        legendre(p, r.points[i], v, d);
        r.weights[i] = 2.0 / (p * (p + 1.0) * v * v);
    }
    return r;
}

geometry::Point to_physical(const geometry::Box& b, double xi, double eta) {
    return {b.x0 + 0.5 * (xi + 1.0) * b.width(), b.y0 + 0.5 * (eta + 1.0) * b.height()};
}

namespace {

void subdivide(const geometry::ImplicitDomain& domain, const geometry::Box& element_bbox, const geometry::Box& cell,
               int level, int k, std::vector<QuadtreeCell>& out) {
    const auto lo = to_physical(element_bbox, cell.x0, cell.y0);
    const auto hi = to_physical(element_bbox, cell.x1, cell.y1);
    const auto status = geometry::classify_element(domain, {lo.x, lo.y, hi.x, hi.y}, 1);
    if (status == geometry::ElementStatus::Uncut) {
        out.push_back({cell, level, CellStatus::Physical});
        return;
    }
    if (status == geometry::ElementStatus::FullyFictitious) {
        out.push_back({cell, level, CellStatus::Fictitious});
        return;
    }
    if (level >= k) {
        out.push_back({cell, level, CellStatus::CutLeaf});
        return;
    }
    const double xm = 0.5 * (cell.x0 + cell.x1);
    const double ym = 0.5 * (cell.y0 + cell.y1);
    subdivide(domain, element_bbox, {cell.x0, cell.y0, xm, ym}, level + 1, k, out);
    subdivide(domain, element_bbox, {xm, cell.y0, cell.x1, ym}, level + 1, k, out);
    subdivide(domain, element_bbox, {cell.x0, ym, xm, cell.y1}, level + 1, k, out);
    subdivide(domain, element_bbox, {xm, ym, cell.x1, cell.y1}, level + 1, k, out);
}

}  // namespace

std::vector<QuadtreeCell> build_quadtree(const geometry::ImplicitDomain& domain, const geometry::Box& element_bbox,
                                         int k) {
    if (k < 0 || k > 12) throw std::out_of_range("build_quadtree: depth must be in [0, 12]");
    std::vector<QuadtreeCell> cells;
    if (k == 0) {
        cells.push_back({{-1.0, -1.0, 1.0, 1.0}, 0, CellStatus::CutLeaf});
        return cells;
    }
    subdivide(domain, element_bbox, {-1.0, -1.0, 1.0, 1.0}, 0, k, cells);
    return cells;
}

std::vector<QuadPoint> leaf_points(const geometry::ImplicitDomain& domain, const geometry::Box& element_bbox,
                                   const std::vector<QuadtreeCell>& cells, const Rule1D& rule) {
    std::vector<QuadPoint> pts;
    const std::size_t n = rule.points.size();
    pts.reserve(cells.size() * n * n);
    for (const auto& c : cells) {
        const double hx = c.bbox.width();
        const double hy = c.bbox.height();
        const double det = 0.25 * hx * hy;
        for (std::size_t j = 0; j < n; ++j) {
            const double eta = c.bbox.y0 + 0.5 * (rule.points[j] + 1.0) * hy;
            for (std::size_t i = 0; i < n; ++i) {
                const double xi = c.bbox.x0 + 0.5 * (rule.points[i] + 1.0) * hx;
                bool phys = c.status == CellStatus::Physical;
                if (c.status == CellStatus::CutLeaf) {
                    phys = geometry::membership(domain, to_physical(element_bbox, xi, eta)) ==
                           geometry::Membership::Physical;
                }
                pts.push_back({xi, eta, rule.weights[i] * rule.weights[j] * det, phys});
            }
        }
    }
    return pts;
}

std::vector<QuadPoint> tensor_points(const Rule1D& rule) {
    std::vector<QuadPoint> pts;
    const std::size_t n = rule.points.size();
    pts.reserve(n * n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
            pts.push_back({rule.points[i], rule.points[j], rule.weights[i] * rule.weights[j], true});
    return pts;
}

double composed_integral(const std::function<double(double, double)>& f, const std::vector<QuadPoint>& points,
                         double alpha0) {
    double sum = 0.0;
    for (const auto& q : points) sum += f(q.xi, q.eta) * (q.physical ? 1.0 : alpha0) * q.weight;
    return sum;
}

}  // namespace scm::quadrature
