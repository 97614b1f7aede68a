#pragma once

#include <functional>
#include <vector>

#include "scm/geometry.hpp"

namespace scm::quadrature {

struct Rule1D {
    std::vector<double> points;
    std::vector<double> weights;
};

/// Gauss-Lobatto-Legendre rule with p+1 nodes (1 <= p <= 12).
Rule1D gll_rule(int p);

/// n-point Gauss-Legendre rule (1 <= n <= 13).
Rule1D gauss_rule(int n);

/// Legendre polynomial L_n(x) and its derivative.
void legendre(int n, double x, double& value, double& derivative);

enum class CellStatus { Physical, Fictitious, CutLeaf };

struct QuadtreeCell {
    geometry::Box bbox;  ///< in reference coordinates, subset of [-1,1]^2
    int level = 0;
    CellStatus status = CellStatus::CutLeaf;
};

/// Leaves of the quadtree over a cut element. Cells are split while they are
/// cut by the boundary and their level is below k.
std::vector<QuadtreeCell> build_quadtree(const geometry::ImplicitDomain& domain,
                                         const geometry::Box& element_bbox, int k);

/// A single integration point in reference coordinates. `weight` already
/// contains the subcell Jacobian; `physical` is the membership at the point.
struct QuadPoint {
    double xi = 0.0;
    double eta = 0.0;
    double weight = 0.0;
    bool physical = true;
};

/// Tensor Gauss points of each leaf. Membership is taken from the cell status
/// on uniform cells and evaluated pointwise on cut leaves.
std::vector<QuadPoint> leaf_points(const geometry::ImplicitDomain& domain, const geometry::Box& element_bbox,
                                   const std::vector<QuadtreeCell>& cells, const Rule1D& rule);

/// Plain tensor rule over the full reference element, all points physical.
std::vector<QuadPoint> tensor_points(const Rule1D& rule);

/// Sum of f * alpha * weight over the leaf points.
double composed_integral(const std::function<double(double, double)>& f, const std::vector<QuadPoint>& points,
                         double alpha0);

geometry::Point to_physical(const geometry::Box& element_bbox, double xi, double eta);

}  // namespace scm::quadrature
