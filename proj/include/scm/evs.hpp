#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scm/element.hpp"
#include "scm/linalg.hpp"

namespace scm::evs {

using linalg::EigResult;
using linalg::Matrix;
using linalg::Vector;

enum class EigBasis { CMM, LMM };
enum class LumpScheme { None, HRZ, RowSum };
enum class FactorLaw { Constant, Loehnert, GarhuomEig, GarhuomMat };
/// How RBM-dominated modes are removed after projection against the RBMs.
enum class RbmCriterion { SmallestEigenvalue, FixedNorm };

struct EvsConfig {
    bool stabilize_K = false;
    bool stabilize_M = false;
    EigBasis eig_basis_M = EigBasis::CMM;
    LumpScheme lump_Ms = LumpScheme::HRZ;
    bool lump_Mc = true;
    double alpha0 = 1e-5;
    double eps_S = 1e-3;
    double eps_lambda = 1e-3;
    FactorLaw factor_law = FactorLaw::Constant;
    double law_beta = 5.0;      ///< exponent of the eigenvalue law
    double law_n_epsS = 80.0;   ///< divisor of the eigenvalue law
    double law_mat_beta = 1.0;  ///< exponent of the material law
    RbmCriterion rbm_criterion = RbmCriterion::SmallestEigenvalue;
    double rbm_norm_threshold = 1e-3;
    bool operator==(const EvsConfig&) const = default;
};

/// Expand a variant code ("0a" .. "3l") to its flag tuple.
EvsConfig variant(std::string_view code, double eps_S = 1e-3, double eps_lambda = 1e-3);

/// Inverse of `variant` on the flag tuple; empty if no row matches.
std::optional<std::string> variant_code(const EvsConfig& cfg);

const std::vector<std::string>& all_variant_codes();

/// Indices i with lambda_i / lambda_max < eps_lambda; negative values always selected.
std::vector<int> select_modes(const EigResult& eig, double eps_lambda);

struct Factor {
    double value = 0.0;
    bool clamped = false;  ///< nonpositive eigenvalue clamped under the eigenvalue law
};

Factor stabilization_factor(const EvsConfig& cfg, double lambda_i, double lambda_max, double chi,
                            double lame_lambda);

/// Power-of-ten factor n_alpha = 10^round(log10(ref_max / stab_max * eps_S)).
double scale_stabilization(double stab_max, double ref_max, double eps_S);

/// Inputs shared by both pipelines.
struct StabContext {
    double ref_max = 0.0;  ///< largest |entry| of the uncut reference matrix
    double chi = 0.0;
    double lame_lambda = 0.0;
    bool apply_scaling = true;
};

struct MassStabilization {
    Matrix matrix;                ///< scaled, lumped per lump_Ms
    std::vector<int> selected;
    std::vector<double> factors;  ///< per selected mode
    double scale = 1.0;
    bool clamped = false;
};

MassStabilization mass_stabilization(const Matrix& M_basis, const EvsConfig& cfg, const StabContext& ctx);

/// Translation x, translation y and rotation about the centroid of the corner
/// nodes, mutually orthonormalized. Columns of an n_DOF x 3 matrix.
Matrix rbm_vectors(const std::vector<geometry::Point>& node_coords, int p);

struct StiffnessStabilization {
    Matrix matrix;
    int n_s = 0;  ///< selected modes
    int n_u = 0;  ///< stabilized (unphysical) modes
    int n_0 = 0;  ///< removed RBM-dominated modes
    std::vector<double> factors;
    double scale = 1.0;
    bool warning = false;  ///< fewer selected modes than RBMs
    bool clamped = false;
};

StiffnessStabilization stiffness_stabilization(const Matrix& K_c, const std::vector<geometry::Point>& node_coords,
                                               int p, const EvsConfig& cfg, const StabContext& ctx);

struct StabilizationResult {
    Matrix M_stab;
    Matrix K_stab;
    Matrix M_mod;
    Matrix K_mod;
    bool M_mod_diagonal = false;
    int n_stab_modes_M = 0;
    int n_u = 0;
    int n_0 = 0;
    double scale_m = 1.0;
    double scale_k = 1.0;
    bool warning = false;
};

/// Apply the variant to one element. `reference` is an uncut element of the
/// same size, order and material; its maxima calibrate the scaling.
StabilizationResult stabilize_element(const element::ElementMatrices& em,
                                      const std::vector<geometry::Point>& node_coords, int p, const EvsConfig& cfg,
                                      const element::ElementMatrices& reference, double lame_lambda);

/// Max |eig(A + A_stab) - (lambda_i + eps_i)| over modes matched in sorted order.
/// `factors_per_mode` has one entry per eigenpair of `eig` (zero if unselected).
double spectral_identity_check(const Matrix& A, const Matrix& A_stab, const EigResult& eig,
                               const std::vector<double>& factors_per_mode);

std::string to_string(EigBasis b);
std::string to_string(LumpScheme s);
std::string to_string(FactorLaw l);
std::string to_string(RbmCriterion c);
EigBasis parse_eig_basis(std::string_view s);
LumpScheme parse_lump_scheme(std::string_view s);
FactorLaw parse_factor_law(std::string_view s);
RbmCriterion parse_rbm_criterion(std::string_view s);

}  // namespace scm::evs
