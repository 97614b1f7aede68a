#include "scm/solver.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <utility>

#include "scm/parallel.hpp"
#include "scm/quadrature.hpp"

namespace scm::solver {

using geometry::Box;
using geometry::Point;

namespace {

constexpr double kNodeTol = 1e-7;  // mm

bool is_diagonal(const Matrix& A) {
    for (Eigen::Index j = 0; j < A.cols(); ++j)
        for (Eigen::Index i = 0; i < A.rows(); ++i)
            if (i != j && A(i, j) != 0.0) return false;
    return true;
}

std::pair<long long, long long> size_key(const Box& b) {
    return {std::llround(b.width() * 1e9), std::llround(b.height() * 1e9)};
}

SparseMatrix diagonal_sparse(const Vector& d) {
    SparseMatrix S(d.size(), d.size());
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, d[i]);
    S.setFromTriplets(t.begin(), t.end());
    return S;
}

void check_mass_diagonal(const Vector& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i)
        if (!(m[i] != 0.0) || !std::isfinite(m[i]))
            throw SingularMass(static_cast<long>(i), "singular mass: zero diagonal entry at free DOF " + std::to_string(i));
}

Vector apply_M(const GlobalSystem& sys, const Vector& x) {
    if (sys.mass_diagonal) return sys.M_diag.cwiseProduct(x);
    return sys.M * x;
}

Matrix dense_of(const GlobalSystem& sys) {
    if (sys.assemble_K) return Matrix(sys.assemble_K());
    Matrix K(sys.n, sys.n);
    Vector e = Vector::Zero(sys.n);
    Vector y(sys.n);
    for (Eigen::Index j = 0; j < sys.n; ++j) {
        e[j] = 1.0;
        sys.apply_K(e, y);
        K.col(j) = y;
        e[j] = 0.0;
    }
    return K;
}

}  // namespace

Mesh rectilinear_mesh(double x0, double y0, const std::vector<Segment>& xs, const std::vector<Segment>& ys) {
    auto lines = [](double start, const std::vector<Segment>& segs) {
        if (segs.empty()) throw std::invalid_argument("mesh: at least one segment per direction required");
        std::vector<double> v{start};
        double pos = start;
        for (const auto& s : segs) {
            if (!(s.length > 0.0) || s.n < 1) throw std::invalid_argument("mesh: segments need length > 0 and n >= 1");
            for (int i = 1; i <= s.n; ++i) v.push_back(pos + s.length * i / s.n);
            pos += s.length;
        }
        return v;
    };
    return {lines(x0, xs), lines(y0, ys)};
}

Point Model::node_point(int I, int J) const {
    const auto& r = quadrature::gll_rule(p).points;
    auto coord = [&](int idx, const std::vector<double>& lines) {
        const int ne = static_cast<int>(lines.size()) - 1;
        const int e = std::min(idx / p, ne - 1);
        const int i = idx - e * p;
        return lines[e] + 0.5 * (r[i] + 1.0) * (lines[e + 1] - lines[e]);
    };
    return {coord(I, mesh.xlines), coord(J, mesh.ylines)};
}

std::optional<int> Model::node_at(Point x) const {
    int I = -1;
    int J = -1;
    for (int i = 0; i < nodes_x && I < 0; ++i)
        if (std::abs(node_point(i, 0).x - x.x) < kNodeTol) I = i;
    for (int j = 0; j < nodes_y && J < 0; ++j)
        if (std::abs(node_point(0, j).y - x.y) < kNodeTol) J = j;
    if (I < 0 || J < 0) return std::nullopt;
    return node_index(I, J);
}

void Model::apply_K(const Vector& u, Vector& f) const {
    f.setZero(n_free());
    std::vector<Matrix> out(K_ops.size());
    parallel_for(K_ops.size(), workers, [&](std::size_t o) {
        const auto& members = op_members[o];
        const Eigen::Index nd = K_ops[o].rows();
        Matrix U(nd, static_cast<Eigen::Index>(members.size()));
        for (std::size_t c = 0; c < members.size(); ++c) {
            const auto& dofs = elements[members[c]].dofs;
            for (Eigen::Index a = 0; a < nd; ++a) U(a, c) = dofs[a] >= 0 ? u[dofs[a]] : 0.0;
        }
        out[o].noalias() = K_ops[o] * U;
    });
    for (std::size_t o = 0; o < K_ops.size(); ++o) {
        const auto& members = op_members[o];
        for (std::size_t c = 0; c < members.size(); ++c) {
            const auto& dofs = elements[members[c]].dofs;
            for (std::size_t a = 0; a < dofs.size(); ++a)
                if (dofs[a] >= 0) f[dofs[a]] += out[o](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c));
        }
    }
}

SparseMatrix Model::assemble_K() const {
    std::vector<Eigen::Triplet<double>> t;
    for (const auto& e : elements) {
        const Matrix& Ke = K_ops[e.op];
        for (std::size_t b = 0; b < e.dofs.size(); ++b) {
            if (e.dofs[b] < 0) continue;
            for (std::size_t a = 0; a < e.dofs.size(); ++a)
                if (e.dofs[a] >= 0) t.emplace_back(e.dofs[a], e.dofs[b], Ke(a, b));
        }
    }
    SparseMatrix K(n_free(), n_free());
    K.setFromTriplets(t.begin(), t.end());
    return K;
}

Matrix Model::dense_K() const { return Matrix(assemble_K()); }

Matrix Model::dense_M() const { return mass_diagonal ? Matrix(M_diag.asDiagonal()) : Matrix(M_sparse); }

Model build_model(const Mesh& mesh, const geometry::ImplicitDomain& domain, const ModelOptions& opt) {
    element::validate(opt.material);
    if (opt.p < 1) throw std::invalid_argument("model: p must be >= 1");
    Model m;
    m.mesh = mesh;
    m.p = opt.p;
    m.nodes_x = mesh.nx() * opt.p + 1;
    m.nodes_y = mesh.ny() * opt.p + 1;
    m.damping = opt.damping;
    m.workers = std::max(1, opt.workers);
    const int p = opt.p;
    const int nd = element::n_dof(p);
    const double lame = element::lame_lambda(opt.material);

    struct Pending {
        int ex, ey;
        Box bbox;
        geometry::ElementStatus status;
        element::ElementIntegrals in;
        evs::StabilizationResult st;
        bool skip = false;
    };
    std::vector<Pending> pend;
    for (int ey = 0; ey < mesh.ny(); ++ey)
        for (int ex = 0; ex < mesh.nx(); ++ex) {
            const Box b = mesh.element_box(ex, ey);
            const auto s = geometry::classify_element(domain, b, std::max(opt.k, 1));
            if (s == geometry::ElementStatus::FullyFictitious) continue;
            pend.push_back({ex, ey, b, s, {}, {}, false});
        }

    // One reference (and one shared operator) per distinct uncut element size.
    std::map<std::pair<long long, long long>, int> size_index;
    std::vector<element::ElementMatrices> refs;
    std::vector<Box> ref_boxes;
    for (const auto& e : pend) {
        const auto key = size_key(e.bbox);
        if (size_index.count(key)) continue;
        size_index[key] = static_cast<int>(refs.size());
        ref_boxes.push_back(e.bbox);
        refs.push_back(element::combine(element::integrate_uncut(opt.material, e.bbox, p), {0.0}, opt.material,
                                        e.bbox, p));
    }

    const geometry::IndicatorConfig ind{opt.evs.alpha0};
    parallel_for(pend.size(), m.workers, [&](std::size_t i) {
        auto& e = pend[i];
        if (e.status != geometry::ElementStatus::Cut) return;
        e.in = element::integrate_element(domain, opt.material, e.bbox, {p, opt.k});
        if (!(e.in.chi > 0.0)) {
            e.skip = true;
            return;
        }
        const auto em = element::combine(e.in, ind, opt.material, e.bbox, p);
        e.st = evs::stabilize_element(em, element::node_coords(e.bbox, p), p, opt.evs,
                                      refs[size_index.at(size_key(e.bbox))], lame);
    });

    // Operators: shared ones for uncut sizes first, then one per cut element.
    m.K_ops.resize(refs.size());
    m.op_members.resize(refs.size());
    std::vector<Vector> uncut_mass_diag(refs.size());
    std::vector<Matrix> uncut_mass_full(refs.size());
    for (std::size_t r = 0; r < refs.size(); ++r) {
        m.K_ops[r] = refs[r].K_c;
        uncut_mass_diag[r] = refs[r].M_c_lumped;
        uncut_mass_full[r] = refs[r].M_c_consistent;
    }
    const bool uncut_lumped = opt.evs.lump_Mc;
    std::vector<Matrix> elem_mass;
    std::vector<char> elem_mass_diag;
    for (auto& e : pend) {
        if (e.skip) continue;
        ElementInfo info;
        info.ex = e.ex;
        info.ey = e.ey;
        info.bbox = e.bbox;
        if (e.status == geometry::ElementStatus::Uncut) {
            const int r = size_index.at(size_key(e.bbox));
            info.op = r;
            info.cut = false;
            info.chi = 1.0;
            m.op_members[r].push_back(static_cast<int>(m.elements.size()));
            elem_mass.push_back(uncut_lumped ? Matrix(uncut_mass_diag[r].asDiagonal()) : uncut_mass_full[r]);
            elem_mass_diag.push_back(uncut_lumped);
        } else {
            info.op = static_cast<int>(m.K_ops.size());
            info.cut = true;
            info.chi = e.in.chi;
            info.n_u = e.st.n_u;
            info.n_0 = e.st.n_0;
            info.scale_m = e.st.scale_m;
            info.scale_k = e.st.scale_k;
            m.stab_warning = m.stab_warning || e.st.warning;
            m.K_ops.push_back(std::move(e.st.K_mod));
            m.op_members.push_back({static_cast<int>(m.elements.size())});
            elem_mass_diag.push_back(e.st.M_mod_diagonal || is_diagonal(e.st.M_mod));
            elem_mass.push_back(std::move(e.st.M_mod));
        }
        m.elements.push_back(std::move(info));
    }

    // DOF maps.
    const int n_nodes = m.nodes_x * m.nodes_y;
    std::vector<char> active(2 * n_nodes, 0);
    std::vector<std::vector<int>> local_global(m.elements.size());
    for (std::size_t i = 0; i < m.elements.size(); ++i) {
        const auto& e = m.elements[i];
        auto& lg = local_global[i];
        lg.resize(nd);
        for (int j = 0; j <= p; ++j)
            for (int ii = 0; ii <= p; ++ii) {
                const int a = j * (p + 1) + ii;
                const int node = m.node_index(e.ex * p + ii, e.ey * p + j);
                lg[2 * a] = 2 * node;
                lg[2 * a + 1] = 2 * node + 1;
                active[2 * node] = active[2 * node + 1] = 1;
            }
    }
    for (const auto& d : opt.dirichlet) {
        if (d.axis < 0 || d.axis > 1 || d.component < 0 || d.component > 1)
            throw std::invalid_argument("dirichlet: axis and component must be 0 or 1");
        for (int J = 0; J < m.nodes_y; ++J)
            for (int I = 0; I < m.nodes_x; ++I) {
                const Point x = m.node_point(I, J);
                const double c = d.axis == 0 ? x.x : x.y;
                if (std::abs(c - d.coord) < kNodeTol) active[2 * m.node_index(I, J) + d.component] = 0;
            }
    }
    m.free_of_global.assign(2 * n_nodes, -1);
    for (int g = 0; g < 2 * n_nodes; ++g)
        if (active[g]) {
            m.free_of_global[g] = static_cast<int>(m.global_of_free.size());
            m.global_of_free.push_back(g);
        }
    for (std::size_t i = 0; i < m.elements.size(); ++i) {
        auto& dofs = m.elements[i].dofs;
        dofs.resize(nd);
        for (int a = 0; a < nd; ++a) dofs[a] = m.free_of_global[local_global[i][a]];
    }

    // Mass.
    m.mass_diagonal = true;
    for (char d : elem_mass_diag) m.mass_diagonal = m.mass_diagonal && d;
    const Eigen::Index nf = m.n_free();
    if (m.mass_diagonal) {
        m.M_diag = Vector::Zero(nf);
        for (std::size_t i = 0; i < m.elements.size(); ++i) {
            const auto& dofs = m.elements[i].dofs;
            for (int a = 0; a < nd; ++a)
                if (dofs[a] >= 0) m.M_diag[dofs[a]] += elem_mass[i](a, a);
        }
    } else {
        std::vector<Eigen::Triplet<double>> t;
        for (std::size_t i = 0; i < m.elements.size(); ++i) {
            const auto& dofs = m.elements[i].dofs;
            for (int b = 0; b < nd; ++b) {
                if (dofs[b] < 0) continue;
                for (int a = 0; a < nd; ++a)
                    if (dofs[a] >= 0 && elem_mass[i](a, b) != 0.0) t.emplace_back(dofs[a], dofs[b], elem_mass[i](a, b));
            }
        }
        m.M_sparse.resize(nf, nf);
        m.M_sparse.setFromTriplets(t.begin(), t.end());
    }
    return m;
}

GlobalSystem system_of(const Model& model) {
    GlobalSystem s;
    s.n = model.n_free();
    s.apply_K = [&model](const Vector& u, Vector& f) { model.apply_K(u, f); };
    s.assemble_K = [&model] { return model.assemble_K(); };
    s.mass_diagonal = model.mass_diagonal;
    s.M_diag = model.M_diag;
    s.M = model.M_sparse;
    s.damping = model.damping;
    return s;
}

GlobalSystem dense_system(const Matrix& K, const Vector& M_diag, Damping damping) {
    GlobalSystem s;
    s.n = K.rows();
    s.apply_K = [K](const Vector& u, Vector& f) { f.noalias() = K * u; };
    s.assemble_K = [K] { return SparseMatrix(K.sparseView()); };
    s.mass_diagonal = true;
    s.M_diag = M_diag;
    s.damping = damping;
    return s;
}

GlobalSystem dense_system(const Matrix& K, const Matrix& M, Damping damping) {
    GlobalSystem s = dense_system(K, Vector(M.diagonal()), damping);
    s.mass_diagonal = false;
    s.M = M.sparseView();
    s.M_diag.resize(0);
    return s;
}

CdmStart cdm_init(const GlobalSystem& sys, double dt, const Vector& U0, const Vector& V0, const Vector& F0) {
    if (!(dt > 0.0)) throw std::invalid_argument("cdm: dt must be positive");
    Vector KU(sys.n);
    sys.apply_K(U0, KU);
    Vector rhs = F0 - KU - sys.damping.alpha_R * apply_M(sys, V0);
    if (sys.damping.beta_R != 0.0) {
        Vector KV(sys.n);
        sys.apply_K(V0, KV);
        rhs -= sys.damping.beta_R * KV;
    }
    CdmStart out;
    if (sys.mass_diagonal) {
        check_mass_diagonal(sys.M_diag);
        out.A0 = rhs.cwiseQuotient(sys.M_diag);
    } else {
        Eigen::SimplicialLDLT<SparseMatrix> ldlt(sys.M);
        if (ldlt.info() != Eigen::Success) throw SingularMass(-1, "singular mass: factorization failed");
        out.A0 = ldlt.solve(rhs);
    }
    // Second-order Taylor expansion backwards in time.
    out.U_minus1 = U0 - dt * V0 + 0.5 * dt * dt * out.A0;
    return out;
}

struct Cdm::Factor {
    Eigen::SimplicialLDLT<SparseMatrix> ldlt;
};

Cdm::Cdm(const GlobalSystem& sys, double dt) : sys_(sys), dt_(dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("cdm: dt must be positive");
    const double a = sys.damping.alpha_R;
    const double b = sys.damping.beta_R;
    if (sys.mass_diagonal && b == 0.0) {
        check_mass_diagonal(sys.M_diag);
        inv_eff_ = (sys.M_diag * (1.0 / (dt * dt) + a / (2.0 * dt))).cwiseInverse();
        return;
    }
    // Stiffness-proportional damping or a full mass couples the update.
    const SparseMatrix M = sys.mass_diagonal ? diagonal_sparse(sys.M_diag) : sys.M;
    SparseMatrix eff = (1.0 / (dt * dt) + a / (2.0 * dt)) * M;
    if (b != 0.0) {
        K_ = sys.assemble_K();
        eff += (b / (2.0 * dt)) * K_;
    }
    factor_ = std::make_unique<Factor>();
    factor_->ldlt.compute(eff);
    if (factor_->ldlt.info() != Eigen::Success)
        throw SingularMass(-1, "singular mass: effective matrix factorization failed");
}

Cdm::~Cdm() = default;

CdmState Cdm::start(const Vector& U0, const Vector& V0, const Vector& F0) const {
    const auto s0 = cdm_init(sys_, dt_, U0, V0, F0);
    CdmState s;
    s.U_prev = s0.U_minus1;
    s.U_curr = U0;
    s.t = 0.0;
    s.step = 0;
    s.dt = dt_;
    return s;
}

void Cdm::step(CdmState& s, const Vector& F_i) const {
    const double dt = dt_;
    const double a = sys_.damping.alpha_R;
    const double b = sys_.damping.beta_R;
    Vector KU(sys_.n);
    sys_.apply_K(s.U_curr, KU);
    Vector rhs = F_i - KU;
    if (sys_.mass_diagonal) {
        rhs += sys_.M_diag.cwiseProduct((2.0 / (dt * dt)) * s.U_curr - (1.0 / (dt * dt) - a / (2.0 * dt)) * s.U_prev);
    } else {
        rhs += sys_.M * ((2.0 / (dt * dt)) * s.U_curr - (1.0 / (dt * dt) - a / (2.0 * dt)) * s.U_prev);
    }
    if (b != 0.0) rhs += (b / (2.0 * dt)) * (K_ * s.U_prev);
    Vector next = factor_ ? Vector(factor_->ldlt.solve(rhs)) : Vector(rhs.cwiseProduct(inv_eff_));
    if (!next.allFinite())
        throw Divergence(s.step + 1, "divergence: non-finite displacement at step " + std::to_string(s.step + 1));
    s.U_prev = std::move(s.U_curr);
    s.U_curr = std::move(next);
    ++s.step;
    s.t = s.step * dt;
}

double omega_max_sq(const GlobalSystem& sys) {
    const Eigen::Index n = sys.n;
    if (n == 0) throw std::domain_error("critical_dt: system has no free DOFs");
    constexpr Eigen::Index dense_limit = 300;
    if (sys.mass_diagonal) {
        check_mass_diagonal(sys.M_diag);
        if (n <= dense_limit) return linalg::spectral_radius_generalized(dense_of(sys), sys.M_diag);
        for (Eigen::Index i = 0; i < n; ++i)
            if (!(sys.M_diag[i] > 0.0)) throw std::domain_error("critical_dt: negative mass entry at DOF " + std::to_string(i));
        const Vector s = sys.M_diag.cwiseSqrt().cwiseInverse();
        Vector tmp(n);
        return linalg::lanczos_max(
            [&](const Vector& x, Vector& y) {
                sys.apply_K(s.cwiseProduct(x), tmp);
                y = s.cwiseProduct(tmp);
            },
            n, 1e-12, 600);
    }
    if (n <= dense_limit) return linalg::spectral_radius_generalized(dense_of(sys), Matrix(sys.M));
    Eigen::SimplicialLLT<SparseMatrix> llt(sys.M);
    if (llt.info() != Eigen::Success) throw SingularMass(-1, "singular mass: mass matrix not positive definite");
    Vector tmp(n);
    return linalg::lanczos_max(
        [&](const Vector& x, Vector& y) {
            // y = L^{-1} P K P^T L^{-T} x
            Vector z = llt.matrixU().solve(x);
            z = llt.permutationPinv() * z;
            sys.apply_K(z, tmp);
            z = llt.permutationP() * tmp;
            y = llt.matrixL().solve(z);
        },
        n, 1e-12, 600);
}

double critical_dt(const GlobalSystem& sys) {
    const double w2 = omega_max_sq(sys);
    if (!(w2 > 0.0)) throw std::domain_error("critical_dt: spectral radius is not positive");
    return 2.0 / std::sqrt(w2);
}

double amplification_spectral_radius(double m, double c, double k, double dt) {
    if (!(m > 0.0) || k < 0.0 || c < 0.0) throw std::invalid_argument("amplification: need m > 0, k >= 0, c >= 0");
    const double kh = m + 0.5 * dt * c;
    const double a11 = 2.0 * m - dt * dt * k;
    const double a12 = 0.5 * dt * c - m;
    // lambda^2 - (a11/kh) lambda - a12/kh = 0
    const double b = -a11 / kh;
    const double c0 = -a12 / kh;
    const std::complex<double> d = std::sqrt(std::complex<double>(b * b - 4.0 * c0, 0.0));
    const std::complex<double> r1 = 0.5 * (-b + d);
    const std::complex<double> r2 = 0.5 * (-b - d);
    return std::max(std::abs(r1), std::abs(r2));
}

}  // namespace scm::solver
