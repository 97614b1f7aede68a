#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>

namespace scm::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct EigResult {
    Vector values;   ///< ascending
    Matrix vectors;  ///< column i belongs to values[i], unit norm
};

/// Full symmetric eigendecomposition by cyclic Jacobi rotations. The input is
/// symmetrized first. Each eigenvector is signed so that its largest-magnitude
/// component is positive.
EigResult sym_eig(const Matrix& A);

/// Eigenvalues only, ascending. Jacobi without accumulation up to n = 300,
/// Householder tridiagonalization and QR above.
Vector sym_eigenvalues(const Matrix& A);

/// Largest eigenvalue of the symmetric operator `op` (y = A x) of size n by
/// Lanczos with full reorthogonalization.
double lanczos_max(const std::function<void(const Vector&, Vector&)>& op, Eigen::Index n, double rel_tol = 1e-12,
                   int max_iter = 400);

/// Largest eigenvalue of M^{-1/2} K M^{-1/2} for a diagonal M.
double spectral_radius_generalized(const Matrix& K, const Vector& M_diag);

/// Largest eigenvalue of K phi = lambda M phi for a symmetric positive
/// definite M (Cholesky reduction). Throws std::domain_error if M is not SPD.
double spectral_radius_generalized(const Matrix& K, const Matrix& M);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// ||A|| ||A^-1|| in the spectral norm; +inf when the smallest |lambda| < 1e-300.
double cond_inv(const Matrix& A);

/// ||A|| ||x|| / ||A x||; +inf when A x = 0.
double cond_mvp(const Matrix& A, const Vector& x);

/// Largest |entry|.
inline double max_abs(const Matrix& A) { return A.size() ? A.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace scm::linalg
