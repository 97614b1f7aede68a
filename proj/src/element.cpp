#include "scm/element.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace scm::element {

using geometry::Box;

void validate(const Material& m) {
    if (!(m.E > 0.0)) throw std::invalid_argument("material: E must be positive");
    if (!(m.nu > -1.0 && m.nu < 0.5)) throw std::invalid_argument("material: nu must lie in (-1, 0.5)");
    if (!(m.rho > 0.0)) throw std::invalid_argument("material: rho must be positive");
}

double lame_lambda(const Material& m) { return m.E * m.nu / ((1.0 + m.nu) * (1.0 - 2.0 * m.nu)); }

double lame_mu(const Material& m) { return m.E / (2.0 * (1.0 + m.nu)); }

Eigen::Matrix3d constitutive(const Material& m) {
    Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
    if (m.state == PlaneState::PlaneStress) {
        const double f = m.E / (1.0 - m.nu * m.nu);
        C(0, 0) = C(1, 1) = f;
        C(0, 1) = C(1, 0) = f * m.nu;
        C(2, 2) = f * 0.5 * (1.0 - m.nu);
    } else {
        const double l = lame_lambda(m);
        const double mu = lame_mu(m);
        C(0, 0) = C(1, 1) = l + 2.0 * mu;
        C(0, 1) = C(1, 0) = l;
        C(2, 2) = mu;
    }
    return C;
}

namespace {

struct Basis1D {
    std::vector<double> nodes;
    std::vector<double> denom;  // prod_{j != i} (x_i - x_j)

    explicit Basis1D(int p) : nodes(quadrature::gll_rule(p).points), denom(p + 1, 1.0) {
        for (int i = 0; i <= p; ++i)
            for (int j = 0; j <= p; ++j)
                if (j != i) denom[i] *= nodes[i] - nodes[j];
    }

    void eval(double x, double* N, double* dN) const {
        const int n = static_cast<int>(nodes.size());
        for (int i = 0; i < n; ++i) {
            double v = 1.0;
            double d = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const double f = x - nodes[j];
                d = d * f + v;
                v *= f;
            }
            if (N) N[i] = v / denom[i];
            if (dN) dN[i] = d / denom[i];
        }
    }
};

const Basis1D& basis(int p) {
    if (p < 1 || p > 12) throw std::out_of_range("polynomial order must be in [1, 12], got " + std::to_string(p));
    static const std::vector<Basis1D> cache = [] {
        std::vector<Basis1D> v;
        for (int q = 1; q <= 12; ++q) v.emplace_back(q);
        return v;
    }();
    return cache[p - 1];
}

struct Accumulator {
    int p;
    int nn;
    double hx;  // metres
    double hy;
    Eigen::Matrix3d C;
    double rho;
    std::vector<double> Nx, dNx, Ny, dNy;
    Eigen::MatrixXd B;
    Eigen::MatrixXd CB;
    Eigen::VectorXd N;

    Accumulator(int p_, const Box& bbox, const Material& m)
        : p(p_),
          nn((p_ + 1) * (p_ + 1)),
          hx(bbox.width() * kMetresPerUnit),
          hy(bbox.height() * kMetresPerUnit),
          C(constitutive(m)),
          rho(m.rho),
          Nx(p_ + 1),
          dNx(p_ + 1),
          Ny(p_ + 1),
          dNy(p_ + 1),
          B(Eigen::MatrixXd::Zero(3, 2 * nn)),
          CB(3, 2 * nn),
          N(nn) {}

    // Adds the point contribution with weight w (reference measure) to K and the scalar mass m.
    void add(double xi, double eta, double w, Eigen::MatrixXd& K, Eigen::MatrixXd& m) {
        const auto& b = basis(p);
        b.eval(xi, Nx.data(), dNx.data());
        b.eval(eta, Ny.data(), dNy.data());
        const double sx = 2.0 / hx;
        const double sy = 2.0 / hy;
        for (int j = 0; j <= p; ++j) {
            for (int i = 0; i <= p; ++i) {
                const int a = j * (p + 1) + i;
                const double gx = dNx[i] * Ny[j] * sx;
                const double gy = Nx[i] * dNy[j] * sy;
                N[a] = Nx[i] * Ny[j];
                B(0, 2 * a) = gx;
                B(1, 2 * a + 1) = gy;
                B(2, 2 * a) = gy;
                B(2, 2 * a + 1) = gx;
            }
        }
        const double wd = w * 0.25 * hx * hy;
        CB.noalias() = C * B;
        K.noalias() += (wd * B.transpose()) * CB;
        m.noalias() += (wd * rho) * N * N.transpose();
    }
};

Matrix expand_scalar_mass(const Matrix& m) {
    const int nn = static_cast<int>(m.rows());
    Matrix M = Matrix::Zero(2 * nn, 2 * nn);
    for (int b = 0; b < nn; ++b)
        for (int a = 0; a < nn; ++a) {
            M(2 * a, 2 * b) = m(a, b);
            M(2 * a + 1, 2 * b + 1) = m(a, b);
        }
    return M;
}

void symmetrize(Matrix& A) { A = 0.5 * (A + A.transpose()).eval(); }

}  // namespace

std::vector<double> shape_functions(int p, double xi) {
    std::vector<double> N(p + 1);
    basis(p).eval(xi, N.data(), nullptr);
    return N;
}

std::vector<double> shape_gradients(int p, double xi) {
    std::vector<double> dN(p + 1);
    basis(p).eval(xi, nullptr, dN.data());
    return dN;
}

std::vector<geometry::Point> node_coords(const Box& bbox, int p) {
    const auto& x = basis(p).nodes;
    std::vector<geometry::Point> pts;
    pts.reserve((p + 1) * (p + 1));
    for (int j = 0; j <= p; ++j)
        for (int i = 0; i <= p; ++i) pts.push_back(quadrature::to_physical(bbox, x[i], x[j]));
    return pts;
}

ElementIntegrals integrate_uncut(const Material& material, const Box& bbox, int p) {
    const int nn = (p + 1) * (p + 1);
    Accumulator acc(p, bbox, material);
    ElementIntegrals out;
    out.K_phys = Matrix::Zero(2 * nn, 2 * nn);
    Matrix m = Matrix::Zero(nn, nn);
    for (const auto& q : quadrature::tensor_points(quadrature::gauss_rule(p + 1)))
        acc.add(q.xi, q.eta, q.weight, out.K_phys, m);
    symmetrize(out.K_phys);
    symmetrize(m);
    out.M_phys = expand_scalar_mass(m);
    out.K_fict = Matrix::Zero(2 * nn, 2 * nn);
    out.M_fict = Matrix::Zero(2 * nn, 2 * nn);
    out.chi = 1.0;
    out.cut = false;
    out.n_leaves = 1;
    return out;
}

ElementIntegrals integrate_element(const geometry::ImplicitDomain& domain, const Material& material, const Box& bbox,
                                   const ElementOptions& opt) {
    const int p = opt.p;
    const auto status = geometry::classify_element(domain, bbox, std::max(opt.k, 1));
    if (status == geometry::ElementStatus::Uncut) return integrate_uncut(material, bbox, p);
    if (status == geometry::ElementStatus::FullyFictitious) {
        ElementIntegrals full = integrate_uncut(material, bbox, p);
        std::swap(full.K_phys, full.K_fict);
        std::swap(full.M_phys, full.M_fict);
        full.chi = 0.0;
        full.cut = false;
        return full;
    }
    const int nn = (p + 1) * (p + 1);
    const auto cells = quadrature::build_quadtree(domain, bbox, opt.k);
    const auto pts = quadrature::leaf_points(domain, bbox, cells, quadrature::gauss_rule(p + 1));
    Accumulator acc(p, bbox, material);
    Matrix Kp = Matrix::Zero(2 * nn, 2 * nn);
    Matrix Kf = Matrix::Zero(2 * nn, 2 * nn);
    Matrix mp = Matrix::Zero(nn, nn);
    Matrix mf = Matrix::Zero(nn, nn);
    double phys_measure = 0.0;
    for (const auto& q : pts) {
        if (q.physical) {
            acc.add(q.xi, q.eta, q.weight, Kp, mp);
            phys_measure += q.weight;
        } else {
            acc.add(q.xi, q.eta, q.weight, Kf, mf);
        }
    }
    symmetrize(Kp);
    symmetrize(Kf);
    symmetrize(mp);
    symmetrize(mf);
    ElementIntegrals out;
    out.K_phys = std::move(Kp);
    out.K_fict = std::move(Kf);
    out.M_phys = expand_scalar_mass(mp);
    out.M_fict = expand_scalar_mass(mf);
    out.chi = phys_measure / 4.0;
    out.cut = true;
    out.n_leaves = static_cast<int>(cells.size());
    return out;
}

ElementMatrices combine(const ElementIntegrals& in, const geometry::IndicatorConfig& cfg, const Material& material,
                        const Box& bbox, int p) {
    ElementMatrices em;
    em.K_c = in.K_phys + cfg.alpha0 * in.K_fict;
    em.M_c_consistent = in.M_phys + cfg.alpha0 * in.M_fict;
    em.chi = in.chi;
    em.cut = in.cut;
    if (!in.cut) {
        em.M_c_lumped = lump_nodal_quadrature(p, bbox, material);
        if (in.chi == 0.0) em.M_c_lumped *= cfg.alpha0;
    } else if (em.M_c_consistent.sum() > 0.0) {
        em.M_c_lumped = lump_hrz(em.M_c_consistent);
    } else {
        em.M_c_lumped = Vector::Zero(em.M_c_consistent.rows());
    }
    return em;
}

Matrix element_stiffness(const geometry::ImplicitDomain& domain, const geometry::IndicatorConfig& cfg,
                         const Material& material, const Box& bbox, int p, int k) {
    const auto in = integrate_element(domain, material, bbox, {p, k});
    return in.K_phys + cfg.alpha0 * in.K_fict;
}

Matrix element_mass_consistent(const geometry::ImplicitDomain& domain, const geometry::IndicatorConfig& cfg,
                               const Material& material, const Box& bbox, int p, int k) {
    const auto in = integrate_element(domain, material, bbox, {p, k});
    return in.M_phys + cfg.alpha0 * in.M_fict;
}

Vector lump_nodal_quadrature(int p, const Box& bbox, const Material& material, bool cut) {
    if (cut) throw std::logic_error("nodal quadrature lumping is only defined for uncut elements");
    const auto r = quadrature::gll_rule(p);
    const double det = 0.25 * bbox.width() * bbox.height() * kMetresPerUnit * kMetresPerUnit;
    Vector d(n_dof(p));
    for (int j = 0; j <= p; ++j)
        for (int i = 0; i <= p; ++i) {
            const int a = j * (p + 1) + i;
            const double v = material.rho * r.weights[i] * r.weights[j] * det;
            d[2 * a] = v;
            d[2 * a + 1] = v;
        }
    return d;
}

Vector lump_hrz(const Matrix& M) {
    const double total = M.sum();
    const double diag = M.diagonal().sum();
    if (!(total > 0.0) || !(diag > 0.0))
        throw std::domain_error("HRZ lumping: element carries no mass (zero total or diagonal sum)");
    return (total / diag) * M.diagonal();
}

Vector lump_rowsum(const Matrix& M) { return M.rowwise().sum(); }

Vector lump_hrz_per_subcell(const geometry::ImplicitDomain& domain, const geometry::IndicatorConfig& cfg,
                            const Material& material, const Box& bbox, int p, int k) {
    const int nn = (p + 1) * (p + 1);
    const auto status = geometry::classify_element(domain, bbox, std::max(k, 1));
    if (status != geometry::ElementStatus::Cut) {
        return lump_hrz(element_mass_consistent(domain, cfg, material, bbox, p, k));
    }
    const auto cells = quadrature::build_quadtree(domain, bbox, k);
    const auto rule = quadrature::gauss_rule(p + 1);
    Accumulator acc(p, bbox, material);
    Matrix Kdummy = Matrix::Zero(2 * nn, 2 * nn);
    Vector diag = Vector::Zero(2 * nn);
    for (const auto& c : cells) {
        const auto pts = quadrature::leaf_points(domain, bbox, {c}, rule);
        Matrix m = Matrix::Zero(nn, nn);
        for (const auto& q : pts) {
            const double a = q.physical ? 1.0 : cfg.alpha0;
            if (a == 0.0) continue;
            acc.add(q.xi, q.eta, q.weight * a, Kdummy, m);
        }
        if (!(m.sum() > 0.0)) continue;
        const Vector ds = lump_hrz(m);
        for (int a = 0; a < nn; ++a) {
            diag[2 * a] += ds[a];
            diag[2 * a + 1] += ds[a];
        }
    }
    return diag;
}

double volume_fraction(const geometry::ImplicitDomain& domain, const Box& bbox, int k) {
    const auto status = geometry::classify_element(domain, bbox, std::max(k, 1));
    if (status == geometry::ElementStatus::Uncut) return 1.0;
    if (status == geometry::ElementStatus::FullyFictitious) return 0.0;
    const auto cells = quadrature::build_quadtree(domain, bbox, k);
    // The fraction only needs the physical measure; a 2-point rule per leaf is exact for f = 1.
    const auto pts = quadrature::leaf_points(domain, bbox, cells, quadrature::gauss_rule(2));
    return quadrature::composed_integral([](double, double) { return 1.0; }, pts, 0.0) / 4.0;
}

}  // namespace scm::element
