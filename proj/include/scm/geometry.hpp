#pragma once

#include <variant>
#include <vector>

namespace scm::geometry {

struct Point {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point&) const = default;
};

/// Axis-aligned rectangle [x0, x1] x [y0, y1].
struct Box {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;
    bool operator==(const Box&) const = default;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
};

/// Region n . x <= offset.
struct HalfPlane {
    double nx = 1.0;
    double ny = 0.0;
    double offset = 0.0;
    bool operator==(const HalfPlane&) const = default;
};

struct Circle {
    Point center;
    double radius = 0.0;
    bool operator==(const Circle&) const = default;
};

struct Rect {
    Point min;
    Point max;
    bool operator==(const Rect&) const = default;
};

enum class Sense { Solid, Void };

struct Primitive {
    std::variant<HalfPlane, Circle, Rect> shape;
    Sense sense = Sense::Void;
    bool operator==(const Primitive&) const = default;
};

/// Physical region = intersection of all solid primitives (the whole plane if
/// there are none) minus the union of the void primitives. Solids are closed
/// and voids are open, so boundary points count as physical.
struct ImplicitDomain {
    std::vector<Primitive> primitives;
    bool operator==(const ImplicitDomain&) const = default;
};

struct IndicatorConfig {
    double alpha0 = 0.0;
};

enum class Membership { Physical, Fictitious };

enum class ElementStatus { Uncut, Cut, FullyFictitious };

Primitive solid_rect(Point min, Point max);
Primitive void_circle(Point center, double radius);
Primitive solid_half_plane(double nx, double ny, double offset);

Membership membership(const ImplicitDomain& domain, Point x);

double alpha(const ImplicitDomain& domain, const IndicatorConfig& cfg, Point x);

/// True if the boundary of the primitive passes through the open interior of
/// the box. Boundaries that only touch the box edges do not count.
bool boundary_crosses(const Primitive& prim, const Box& box);

ElementStatus classify_element(const ImplicitDomain& domain, const Box& bbox, int probe_depth);

}  // namespace scm::geometry
