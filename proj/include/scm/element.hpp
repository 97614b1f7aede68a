#pragma once

#include <Eigen/Dense>
#include <vector>

#include "scm/geometry.hpp"
#include "scm/quadrature.hpp"

namespace scm::element {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Geometry is given in millimetres; element integrals are formed in SI units.
inline constexpr double kMetresPerUnit = 1e-3;

enum class PlaneState { PlaneStress, PlaneStrain };

struct Material {
    double E = 210e9;    ///< Pa
    double nu = 0.3;
    double rho = 7850.0;  ///< kg/m^3
    PlaneState state = PlaneState::PlaneStress;
    bool operator==(const Material&) const = default;
};

void validate(const Material& m);

/// Lame constants of the isotropic solid.
double lame_lambda(const Material& m);
double lame_mu(const Material& m);

/// Voigt ordering xx, yy, xy (engineering shear strain).
Eigen::Matrix3d constitutive(const Material& m);

/// Lagrange basis on the GLL nodes of order p.
std::vector<double> shape_functions(int p, double xi);
std::vector<double> shape_gradients(int p, double xi);

/// Node coordinates in lexicographic order (xi fastest).
std::vector<geometry::Point> node_coords(const geometry::Box& bbox, int p);

/// Number of DOFs of an element of order p: 2 (p+1)^2.
inline int n_dof(int p) { return 2 * (p + 1) * (p + 1); }

/// Integrals over the physical and the fictitious parts of an element, kept
/// separate so the matrices for any alpha0 are a linear combination.
struct ElementIntegrals {
    Matrix K_phys;
    Matrix K_fict;
    Matrix M_phys;  ///< consistent, physical part
    Matrix M_fict;
    double chi = 1.0;
    bool cut = false;
    int n_leaves = 0;
};

struct ElementOptions {
    int p = 1;
    int k = 0;  ///< quadtree depth for cut elements
};

ElementIntegrals integrate_element(const geometry::ImplicitDomain& domain, const Material& material,
                                   const geometry::Box& bbox, const ElementOptions& opt);

/// Integrals of an element that is entirely physical, bypassing the tree.
ElementIntegrals integrate_uncut(const Material& material, const geometry::Box& bbox, int p);

struct ElementMatrices {
    Matrix K_c;
    Matrix M_c_consistent;
    Vector M_c_lumped;  ///< nodal quadrature if uncut, HRZ if cut
    double chi = 1.0;
    bool cut = false;
};

ElementMatrices combine(const ElementIntegrals& in, const geometry::IndicatorConfig& cfg, const Material& material,
                        const geometry::Box& bbox, int p);

Matrix element_stiffness(const geometry::ImplicitDomain& domain, const geometry::IndicatorConfig& cfg,
                         const Material& material, const geometry::Box& bbox, int p, int k);

Matrix element_mass_consistent(const geometry::ImplicitDomain& domain, const geometry::IndicatorConfig& cfg,
                               const Material& material, const geometry::Box& bbox, int p, int k);

/// Diagonal mass from GLL nodal quadrature. Only valid for uncut elements.
Vector lump_nodal_quadrature(int p, const geometry::Box& bbox, const Material& material, bool cut = false);

/// HRZ lumping: diagonal scaled to conserve the total mass.
Vector lump_hrz(const Matrix& M);

/// Row-sum lumping; entries may be zero or negative.
Vector lump_rowsum(const Matrix& M);

/// HRZ applied to each quadtree leaf separately and summed.
Vector lump_hrz_per_subcell(const geometry::ImplicitDomain& domain, const geometry::IndicatorConfig& cfg,
                            const Material& material, const geometry::Box& bbox, int p, int k);

double volume_fraction(const geometry::ImplicitDomain& domain, const geometry::Box& bbox, int k);

}  // namespace scm::element
