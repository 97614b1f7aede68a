#include "scm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scm::geometry {

Primitive solid_rect(Point min, Point max) { return {Rect{min, max}, Sense::Solid}; }

Primitive void_circle(Point center, double radius) { return {Circle{center, radius}, Sense::Void}; }

Primitive solid_half_plane(double nx, double ny, double offset) {
    return {HalfPlane{nx, ny, offset}, Sense::Solid};
}

namespace {

// Signed level value: negative inside, zero on the boundary, positive outside.
double level(const HalfPlane& h, Point x) { return h.nx * x.x + h.ny * x.y - h.offset; }

double level(const Circle& c, Point x) {
    const double dx = x.x - c.center.x;
    const double dy = x.y - c.center.y;
    return dx * dx + dy * dy - c.radius * c.radius;
}

double level(const Rect& r, Point x) {
    const double gx = std::max(r.min.x - x.x, x.x - r.max.x);
    const double gy = std::max(r.min.y - x.y, x.y - r.max.y);
    return std::max(gx, gy);
}

bool inside_closed(const Primitive& p, Point x) {
    return std::visit([&](const auto& s) { return level(s, x) <= 0.0; }, p.shape);
}

bool inside_open(const Primitive& p, Point x) {
    return std::visit([&](const auto& s) { return level(s, x) < 0.0; }, p.shape);
}

bool crosses(const HalfPlane& h, const Box& b) {
    const double v[4] = {level(h, {b.x0, b.y0}), level(h, {b.x1, b.y0}), level(h, {b.x0, b.y1}),
                         level(h, {b.x1, b.y1})};
    const auto [lo, hi] = std::minmax_element(v, v + 4);
    return *lo < 0.0 && *hi > 0.0;
}

bool crosses(const Circle& c, const Box& b) {
    const double cx = std::clamp(c.center.x, b.x0, b.x1);
    const double cy = std::clamp(c.center.y, b.y0, b.y1);
    const double dmin2 = (cx - c.center.x) * (cx - c.center.x) + (cy - c.center.y) * (cy - c.center.y);
    const double fx = std::max(std::abs(b.x0 - c.center.x), std::abs(b.x1 - c.center.x));
    const double fy = std::max(std::abs(b.y0 - c.center.y), std::abs(b.y1 - c.center.y));
    const double dmax2 = fx * fx + fy * fy;
    const double r2 = c.radius * c.radius;
    return dmin2 < r2 && r2 < dmax2;
}

bool crosses(const Rect& r, const Box& b) {
    const double ox = std::min(r.max.x, b.x1) - std::max(r.min.x, b.x0);
    const double oy = std::min(r.max.y, b.y1) - std::max(r.min.y, b.y0);
    if (ox <= 0.0 || oy <= 0.0) return false;
    const bool contained = r.min.x <= b.x0 && r.min.y <= b.y0 && r.max.x >= b.x1 && r.max.y >= b.y1;
    return !contained;
}

}  // namespace

Membership membership(const ImplicitDomain& domain, Point x) {
    for (const auto& p : domain.primitives) {
        if (p.sense == Sense::Solid && !inside_closed(p, x)) return Membership::Fictitious;
        if (p.sense == Sense::Void && inside_open(p, x)) return Membership::Fictitious;
    }
    return Membership::Physical;
}

double alpha(const ImplicitDomain& domain, const IndicatorConfig& cfg, Point x) {
    return membership(domain, x) == Membership::Physical ? 1.0 : cfg.alpha0;
}

bool boundary_crosses(const Primitive& prim, const Box& box) {
    return std::visit([&](const auto& s) { return crosses(s, box); }, prim.shape);
}

ElementStatus classify_element(const ImplicitDomain& domain, const Box& bbox, int probe_depth) {
    if (probe_depth < 1) throw std::invalid_argument("classify_element: probe_depth must be >= 1");
    for (const auto& p : domain.primitives) {
        if (boundary_crosses(p, bbox)) return ElementStatus::Cut;
    }
    // Sample cell centres of a regular grid so that no sample sits on the box
    // edges, where a boundary may run without entering the element. The
    // crossing tests above are exact, so a coarse grid suffices.
    const int n = 1 << std::min(probe_depth, 4);
    std::size_t n_phys = 0;
    for (int j = 0; j < n; ++j) {
        const double y = bbox.y0 + bbox.height() * (j + 0.5) / n;
        for (int i = 0; i < n; ++i) {
            const double x = bbox.x0 + bbox.width() * (i + 0.5) / n;
            if (membership(domain, {x, y}) == Membership::Physical) ++n_phys;
        }
    }
    if (n_phys == static_cast<std::size_t>(n) * n) return ElementStatus::Uncut;
    if (n_phys == 0) return ElementStatus::FullyFictitious;
    return ElementStatus::Cut;
}

}  // namespace scm::geometry
