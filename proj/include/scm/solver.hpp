#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "scm/element.hpp"
#include "scm/evs.hpp"
#include "scm/geometry.hpp"

namespace scm::solver {

using linalg::Matrix;
using linalg::Vector;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Zero mass on a free DOF; the explicit update cannot proceed.
class SingularMass : public std::runtime_error {
public:
    SingularMass(long dof, const std::string& what) : std::runtime_error(what), dof_(dof) {}
    long dof() const { return dof_; }

private:
    long dof_;
};

/// Non-finite displacement during time stepping.
class Divergence : public std::runtime_error {
public:
    Divergence(long step, const std::string& what) : std::runtime_error(what), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

/// A run of n equal elements covering `length` mm.
struct Segment {
    double length = 0.0;
    int n = 1;
    bool operator==(const Segment&) const = default;
};

/// Tensor-product grid of axis-aligned elements. Lines are element edges in mm.
struct Mesh {
    std::vector<double> xlines;
    std::vector<double> ylines;

    int nx() const { return static_cast<int>(xlines.size()) - 1; }
    int ny() const { return static_cast<int>(ylines.size()) - 1; }
    geometry::Box element_box(int ex, int ey) const {
        return {xlines[ex], ylines[ey], xlines[ex + 1], ylines[ey + 1]};
    }
};

Mesh rectilinear_mesh(double x0, double y0, const std::vector<Segment>& xs, const std::vector<Segment>& ys);

/// Fixes `component` (0 = u_x, 1 = u_y) at every node whose coordinate along
/// `axis` (0 = x, 1 = y) equals `coord` mm.
struct DirichletLine {
    int axis = 0;
    double coord = 0.0;
    int component = 0;
    bool operator==(const DirichletLine&) const = default;
};

/// C = alpha_R M + beta_R K.
struct Damping {
    double alpha_R = 0.0;
    double beta_R = 0.0;
    bool operator==(const Damping&) const = default;
};

struct ModelOptions {
    int p = 1;
    int k = 8;
    element::Material material;
    evs::EvsConfig evs;
    std::vector<DirichletLine> dirichlet;
    Damping damping;
    int workers = 1;
};

struct ElementInfo {
    int ex = 0;
    int ey = 0;
    geometry::Box bbox;
    bool cut = false;
    double chi = 1.0;
    int op = 0;             ///< index into Model::K_ops
    std::vector<int> dofs;  ///< free DOF index per local DOF, -1 if constrained
    int n_u = 0;
    int n_0 = 0;
    double scale_m = 1.0;
    double scale_k = 1.0;
};

/// Global system on the free DOFs. Elements outside the physical domain are
/// skipped; DOFs that no active element touches are dropped with the
/// Dirichlet DOFs.
class Model {
public:
    Mesh mesh;
    int p = 1;
    int nodes_x = 0;
    int nodes_y = 0;
    std::vector<ElementInfo> elements;
    std::vector<Matrix> K_ops;
    std::vector<std::vector<int>> op_members;
    std::vector<int> free_of_global;  ///< -1 if not a free DOF
    std::vector<int> global_of_free;
    bool mass_diagonal = true;
    Vector M_diag;
    SparseMatrix M_sparse;
    Damping damping;
    int workers = 1;
    bool stab_warning = false;

    Eigen::Index n_free() const { return static_cast<Eigen::Index>(global_of_free.size()); }
    int node_index(int I, int J) const { return J * nodes_x + I; }
    geometry::Point node_point(int I, int J) const;
    /// Node located at `x` (within 1e-9 mm), if any.
    std::optional<int> node_at(geometry::Point x) const;
    /// Free DOF index of a node component, -1 if constrained or inactive.
    int free_dof(int node, int component) const { return free_of_global[2 * node + component]; }

    /// f = K u on the free DOFs, element by element.
    void apply_K(const Vector& u, Vector& f) const;
    SparseMatrix assemble_K() const;
    Matrix dense_K() const;
    Matrix dense_M() const;
};

Model build_model(const Mesh& mesh, const geometry::ImplicitDomain& domain, const ModelOptions& opt);

/// Operators of M U'' + C U' + K U = F on n DOFs.
struct GlobalSystem {
    Eigen::Index n = 0;
    std::function<void(const Vector&, Vector&)> apply_K;
    std::function<SparseMatrix()> assemble_K;
    bool mass_diagonal = true;
    Vector M_diag;
    SparseMatrix M;
    Damping damping;
};

/// View of a model as a GlobalSystem. The model must outlive the result.
GlobalSystem system_of(const Model& model);

/// Small systems from dense matrices (mass diagonal if `M_diag` is given).
GlobalSystem dense_system(const Matrix& K, const Vector& M_diag, Damping damping = {});
GlobalSystem dense_system(const Matrix& K, const Matrix& M, Damping damping = {});

struct CdmStart {
    Vector U_minus1;
    Vector A0;
};

CdmStart cdm_init(const GlobalSystem& sys, double dt, const Vector& U0, const Vector& V0, const Vector& F0);

struct CdmState {
    Vector U_prev;
    Vector U_curr;
    double t = 0.0;
    long step = 0;
    double dt = 0.0;
};

/// Central difference integrator with the effective matrix prepared once.
class Cdm {
public:
    Cdm(const GlobalSystem& sys, double dt);
    ~Cdm();
    Cdm(const Cdm&) = delete;
    Cdm& operator=(const Cdm&) = delete;

    CdmState start(const Vector& U0, const Vector& V0, const Vector& F0) const;
    /// Advances from t_i to t_{i+1} with the load F_i at t_i.
    void step(CdmState& s, const Vector& F_i) const;

private:
    struct Factor;
    const GlobalSystem& sys_;
    double dt_;
    Vector inv_eff_;  // diagonal path
    std::unique_ptr<Factor> factor_;
    SparseMatrix K_;  // assembled only if beta_R > 0
};

/// omega_max^2 of K phi = omega^2 M phi.
double omega_max_sq(const GlobalSystem& sys);

/// 2 / omega_max; independent of damping.
double critical_dt(const GlobalSystem& sys);

/// Spectral radius of the one-step amplification matrix of the CDM for a
/// single DOF.
double amplification_spectral_radius(double m, double c, double k, double dt);

}  // namespace scm::solver
