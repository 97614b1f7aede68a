#include <doctest.h>

#include <cmath>

#include "scm/evs.hpp"
#include "scm/scenarios.hpp"

using namespace scm;
using namespace scm::evs;

namespace {

struct CutElement {
    element::ElementMatrices em;
    element::ElementMatrices ref;
    std::vector<geometry::Point> nodes;
    element::Material mat;
};

CutElement cut_element(int p, double alpha0) {
    const auto s = scenarios::single_cut_element();
    const auto box = scenarios::mesh_of(s).element_box(0, 0);
    CutElement c;
    c.mat = s.material;
    c.em = element::combine(element::integrate_element(s.domain, s.material, box, {p, s.k}), {alpha0}, s.material,
                            box, p);
    c.ref = element::combine(element::integrate_uncut(s.material, box, p), {alpha0}, s.material, box, p);
    c.nodes = element::node_coords(box, p);
    return c;
}

EigResult diag_eig(std::vector<double> v) {
    EigResult e;
    e.values = Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    e.vectors = Matrix::Identity(e.values.size(), e.values.size());
    return e;
}

int rank(const Matrix& A) {
    const auto ev = linalg::sym_eigenvalues(A);
    const double tol = 1e-10 * ev.cwiseAbs().maxCoeff();
    int r = 0;
    for (int i = 0; i < ev.size(); ++i) r += std::abs(ev[i]) > tol;
    return r;
}

double off_diagonal_norm(const Matrix& A) {
    Matrix B = A;
    B.diagonal().setZero();
    return B.norm();
}

/// Fixes both components of the upper-right corner and u_y of the upper-left
/// corner, removing the three rigid body modes.
Matrix minimally_constrained(const Matrix& K, int p) {
    const int nn = (p + 1) * (p + 1);
    const std::vector<int> fixed = {2 * (nn - 1), 2 * (nn - 1) + 1, 2 * (p * (p + 1)) + 1};
    std::vector<int> keep;
    for (int i = 0; i < 2 * nn; ++i)
        if (std::find(fixed.begin(), fixed.end(), i) == fixed.end()) keep.push_back(i);
    Matrix R(keep.size(), keep.size());
    for (std::size_t j = 0; j < keep.size(); ++j)
        for (std::size_t i = 0; i < keep.size(); ++i) R(i, j) = K(keep[i], keep[j]);
    return R;
}

}  // namespace

TEST_CASE("variant codes") {
    const auto& codes = all_variant_codes();
    CHECK(codes.size() == 32);
    for (const auto& c : codes) {
        const auto cfg = variant(c);
        REQUIRE(variant_code(cfg).has_value());
        CHECK(*variant_code(cfg) == c);
    }
    const auto v0e = variant("0e");
    CHECK_FALSE(v0e.stabilize_K);
    CHECK_FALSE(v0e.stabilize_M);
    CHECK(v0e.lump_Mc);
    CHECK(v0e.alpha0 == 1e-5);
    const auto v2b = variant("2b");
    CHECK_FALSE(v2b.stabilize_K);
    CHECK(v2b.stabilize_M);
    CHECK(v2b.eig_basis_M == EigBasis::CMM);
    CHECK(v2b.lump_Ms == LumpScheme::HRZ);
    CHECK(v2b.lump_Mc);
    CHECK(v2b.alpha0 == 0.0);
    const auto v3l = variant("3l");
    CHECK(v3l.stabilize_K);
    CHECK(v3l.eig_basis_M == EigBasis::LMM);
    CHECK(v3l.lump_Ms == LumpScheme::RowSum);
    CHECK_FALSE(v3l.lump_Mc);
    CHECK_THROWS_AS(variant("4a"), std::invalid_argument);
    for (auto b : {EigBasis::CMM, EigBasis::LMM}) CHECK(parse_eig_basis(to_string(b)) == b);
    for (auto l : {LumpScheme::None, LumpScheme::HRZ, LumpScheme::RowSum}) CHECK(parse_lump_scheme(to_string(l)) == l);
    for (auto f : {FactorLaw::Constant, FactorLaw::Loehnert, FactorLaw::GarhuomEig, FactorLaw::GarhuomMat})
        CHECK(parse_factor_law(to_string(f)) == f);
    CHECK_THROWS_AS(parse_factor_law("linear"), std::invalid_argument);
}

TEST_CASE("mode selection") {
    CHECK(select_modes(diag_eig({0.0, 1e-6, 0.5, 1.0}), 1e-3) == std::vector<int>{0, 1});
    CHECK(select_modes(diag_eig({0.1, 0.2, 0.5, 1.0}), 1e-3).empty());
    CHECK(select_modes(diag_eig({-1e-15, 0.2, 1.0}), 1e-3) == std::vector<int>{0});
    // Strict inequality.
    CHECK(select_modes(diag_eig({1e-3, 1.0}), 1e-3).empty());
    CHECK_THROWS(select_modes(diag_eig({0.0, 0.0}), 1e-3));

    const auto c = cut_element(4, 0.0);
    CHECK_FALSE(select_modes(linalg::sym_eig(c.em.M_c_consistent), 1e-4).empty());
}

TEST_CASE("stabilization factor laws") {
    EvsConfig cfg;
    cfg.eps_S = 1e-2;
    CHECK(stabilization_factor(cfg, 1e-9, 1.0, 0.3, 1e9).value == 1e-2);
    cfg.factor_law = FactorLaw::Loehnert;
    CHECK(stabilization_factor(cfg, 1e-2 * 5.0, 5.0, 0.3, 1e9).value == doctest::Approx(0.0));
    CHECK(stabilization_factor(cfg, 1e-3, 1.0, 0.3, 1e9).value == doctest::Approx(1e-2 - 1e-3));
    CHECK(stabilization_factor(cfg, 0.5, 1.0, 0.3, 1e9).value == 0.0);
    cfg.factor_law = FactorLaw::GarhuomMat;
    CHECK(stabilization_factor(cfg, 1e-3, 1.0, 1.0, 1e9).value == 0.0);
    CHECK(stabilization_factor(cfg, 1e-3, 1.0, 0.5, 1e9).value == doctest::Approx(1e-2 * 1e9 * 0.5));
    cfg.factor_law = FactorLaw::GarhuomEig;
    CHECK(stabilization_factor(cfg, 32.0, 1.0, 0.5, 1e9).value == doctest::Approx(1e-2 / (80.0 * 2.0)));
    const auto f = stabilization_factor(cfg, -1.0, 1.0, 0.5, 1e9);
    CHECK(f.clamped);
    CHECK(std::isfinite(f.value));
}

TEST_CASE("scaling parameter") {
    CHECK(scale_stabilization(2.0, 1e9, 1e-2) == doctest::Approx(1e7));
    CHECK(scale_stabilization(3.0, 3.0, 1.0) == 1.0);
    CHECK(scale_stabilization(0.0, 3.0, 1e-3) == 1.0);
    for (double f : {1e-20, 1e-3, 7.0, 1e15})
        CHECK(scale_stabilization(2.0 * f, 1e9 * f, 1e-2) == doctest::Approx(1e7));
    // Half-way ties round away from zero.
    CHECK(scale_stabilization(1.0, std::sqrt(10.0), 1.0) == doctest::Approx(10.0));
    CHECK_THROWS_AS(scale_stabilization(1.0, 0.0, 1e-3), std::domain_error);
}

TEST_CASE("mass stabilization") {
    StabContext ctx{1.0, 0.5, 1e9, false};
    EvsConfig cfg;
    cfg.lump_Ms = LumpScheme::None;
    const Matrix D = Vector::LinSpaced(5, 1.0, 5.0).asDiagonal();
    CHECK(mass_stabilization(D, cfg, ctx).matrix.isZero(0.0));

    // Diagonal basis: eigenvectors are unit vectors, the result is diagonal.
    Vector d(6);
    d << 1.0, 1e-7, 2.0, 1e-9, 3.0, 0.5;
    cfg.eps_S = 0.25;
    const auto ms = mass_stabilization(Matrix(d.asDiagonal()), cfg, ctx);
    Vector expect = Vector::Zero(6);
    expect[1] = expect[3] = 0.25;
    CHECK((ms.matrix - Matrix(expect.asDiagonal())).norm() < 1e-15);

    const auto c = cut_element(3, 0.0);
    cfg.eps_S = 1e-3;
    cfg.eps_lambda = 1e-3;
    const auto mc = mass_stabilization(c.em.M_c_consistent, cfg, ctx);
    REQUIRE_FALSE(mc.selected.empty());
    CHECK(rank(mc.matrix) == static_cast<int>(mc.selected.size()));
    CHECK((mc.matrix - mc.matrix.transpose()).norm() <= 1e-14 * mc.matrix.norm());
    CHECK(linalg::sym_eigenvalues(mc.matrix).minCoeff() > -1e-14 * mc.matrix.norm());
}

TEST_CASE("rigid body modes") {
    const auto nodes1 = element::node_coords({0.0, 0.0, 1.0, 1.0}, 1);
    const auto R1 = rbm_vectors(nodes1, 1);
    Vector phi1(8);
    phi1 << 1, 0, 1, 0, 1, 0, 1, 0;
    CHECK((R1.col(0) - phi1 / 2.0).norm() < 1e-15);
    for (int p = 1; p <= 6; ++p) {
        const geometry::Box box{0.0, 0.0, 1000.0, 1000.0};
        const auto R = rbm_vectors(element::node_coords(box, p), p);
        CHECK(std::abs(R.col(2).dot(R.col(0))) < 1e-12);
        CHECK(std::abs(R.col(2).dot(R.col(1))) < 1e-12);
        CHECK((R.transpose() * R - Matrix::Identity(3, 3)).norm() < 1e-12);
        const auto K = element::combine(element::integrate_uncut({}, box, p), {0.0}, {}, box, p).K_c;
        for (int j = 0; j < 3; ++j) CHECK((K * R.col(j)).norm() <= 1e-8 * K.norm());
    }
    CHECK_THROWS_AS(rbm_vectors(nodes1, 2), std::invalid_argument);
}

TEST_CASE("stiffness stabilization") {
    EvsConfig cfg = variant("1a", 1e-3, 1e-4);
    const auto uncut = cut_element(2, 0.0).ref;
    const auto nodes2 = cut_element(2, 0.0).nodes;
    StabContext ctx{linalg::max_abs(uncut.K_c), 1.0, 1e9, true};
    const auto u = stiffness_stabilization(uncut.K_c, nodes2, 2, cfg, ctx);
    CHECK(u.n_s == 3);
    CHECK(u.n_u == 0);
    CHECK(u.matrix.isZero(0.0));

    for (int p = 2; p <= 5; ++p) {
        const auto c = cut_element(p, 0.0);
        StabContext cc{linalg::max_abs(c.ref.K_c), c.em.chi, 1e9, true};
        const auto ks = stiffness_stabilization(c.em.K_c, c.nodes, p, cfg, cc);
        CHECK(ks.n_s > 3);
        CHECK(ks.n_u == ks.n_s - 3);
        CHECK(ks.n_0 == 3);
        const Matrix K_mod = c.em.K_c + ks.matrix;
        const auto ev = linalg::sym_eigenvalues(K_mod);
        int zero = 0;
        for (int i = 0; i < ev.size(); ++i) zero += ev[i] < 1e-6 * ev.maxCoeff();
        CHECK(zero == 3);
        const auto R = rbm_vectors(c.nodes, p);
        for (int j = 0; j < 3; ++j) {
            CHECK((ks.matrix * R.col(j)).norm() <= 1e-8 * ks.matrix.norm());
            CHECK((K_mod * R.col(j) - c.em.K_c * R.col(j)).norm() <= 1e-8 * c.em.K_c.norm());
        }
        CHECK(linalg::sym_eigenvalues(ks.matrix).minCoeff() > -1e-10 * ks.matrix.norm());
    }

    // Too small a threshold selects fewer modes than RBMs.
    const auto c = cut_element(2, 1e-5);
    cfg.eps_lambda = 1e-30;
    const auto w = stiffness_stabilization(c.em.K_c, c.nodes, 2, cfg, ctx);
    CHECK(w.warning);
    CHECK(w.matrix.isZero(0.0));
}

TEST_CASE("element stabilization by variant") {
    const auto c0 = cut_element(4, 1e-5);
    const double lam = element::lame_lambda(c0.mat);
    const auto r0 = stabilize_element(c0.em, c0.nodes, 4, variant("0e"), c0.ref, lam);
    CHECK(r0.M_stab.isZero(0.0));
    CHECK(r0.K_stab.isZero(0.0));
    CHECK(r0.M_mod_diagonal);
    CHECK((r0.M_mod.diagonal() - c0.em.M_c_lumped).norm() == 0.0);

    const auto c = cut_element(4, 0.0);
    const auto r2 = stabilize_element(c.em, c.nodes, 4, variant("2b"), c.ref, lam);
    CHECK(r2.n_stab_modes_M > 0);
    CHECK(r2.M_mod_diagonal);
    CHECK(off_diagonal_norm(r2.M_mod) == 0.0);
    CHECK(r2.K_stab.isZero(0.0));
    CHECK((r2.K_mod - c.em.K_c).norm() == 0.0);
    CHECK(r2.M_mod.diagonal().minCoeff() > 0.0);

    for (const char* code : {"2a", "3b", "3g"}) {
        const auto r = stabilize_element(c.em, c.nodes, 4, variant(code, 0.0), c.ref, lam);
        CHECK(r.M_stab.isZero(0.0));
        CHECK(r.K_stab.isZero(0.0));
    }
    const auto ra = stabilize_element(c.em, c.nodes, 4, variant("3a", 0.0), c.ref, lam);
    CHECK((ra.M_mod - c.em.M_c_lumped.asDiagonal().toDenseMatrix()).norm() == 0.0);
    CHECK((ra.K_mod - c.em.K_c).norm() == 0.0);
    const auto rd = stabilize_element(c.em, c.nodes, 4, variant("3d", 0.0), c.ref, lam);
    CHECK((rd.M_mod - c.em.M_c_consistent).norm() == 0.0);

    // Variants with a diagonal eigenbasis coincide.
    const auto g = stabilize_element(c.em, c.nodes, 4, variant("2g"), c.ref, lam).M_mod;
    const auto h = stabilize_element(c.em, c.nodes, 4, variant("2h"), c.ref, lam).M_mod;
    const auto i = stabilize_element(c.em, c.nodes, 4, variant("2i"), c.ref, lam).M_mod;
    CHECK(off_diagonal_norm(g) == 0.0);
    CHECK((g - h).norm() <= 1e-14 * g.norm());
    CHECK((g - i).norm() <= 1e-14 * g.norm());
}

TEST_CASE("spectral identity of the stabilized matrices") {
    const auto c = cut_element(3, 0.0);
    const Matrix& M = c.em.M_c_consistent;
    const auto eig = linalg::sym_eig(M);
    const double lmax = eig.values.maxCoeff();
    EvsConfig cfg;
    cfg.lump_Ms = LumpScheme::None;
    cfg.eps_S = 1e-2 * lmax;
    cfg.eps_lambda = 1e-3;
    const StabContext ctx{1.0, c.em.chi, 1e9, false};

    // Nothing selected.
    CHECK(spectral_identity_check(M, Matrix::Zero(M.rows(), M.cols()), eig, std::vector<double>(M.rows(), 0.0)) <=
          1e-8 * lmax);

    // Partial selection.
    const auto ms = mass_stabilization(M, cfg, ctx);
    REQUIRE_FALSE(ms.selected.empty());
    std::vector<double> per_mode(M.rows(), 0.0);
    for (std::size_t j = 0; j < ms.selected.size(); ++j) per_mode[ms.selected[j]] = ms.factors[j];
    CHECK(spectral_identity_check(M, ms.matrix, eig, per_mode) <= 1e-8 * lmax);
    CHECK(off_diagonal_norm(ms.matrix) > 1e-6 * ms.matrix.norm());

    // All modes: a uniform shift, A_stab = eps_S I.
    cfg.eps_lambda = 2.0;
    const auto all = mass_stabilization(M, cfg, ctx);
    CHECK(all.selected.size() == static_cast<std::size_t>(M.rows()));
    CHECK((all.matrix - cfg.eps_S * Matrix::Identity(M.rows(), M.cols())).norm() <= 1e-12 * cfg.eps_S);
    CHECK(spectral_identity_check(M, all.matrix, eig, std::vector<double>(M.rows(), cfg.eps_S)) <= 1e-8 * lmax);

    // Stiffness pipeline: removed RBM modes keep their eigenvalue.
    const Matrix& K = c.em.K_c;
    const auto ek = linalg::sym_eig(K);
    const double kmax = ek.values.maxCoeff();
    EvsConfig kc = variant("1a", 1e-2 * kmax, 1e-4);
    const auto ks = stiffness_stabilization(K, c.nodes, 3, kc, {1.0, c.em.chi, 1e9, false});
    REQUIRE(ks.n_u > 0);
    std::vector<double> kmode(K.rows(), 0.0);
    const auto sel = select_modes(ek, 1e-4);
    // The n_0 smallest selected modes are the RBMs; the rest are shifted.
    for (std::size_t j = 3; j < sel.size(); ++j) kmode[sel[j]] = kc.eps_S;
    CHECK(spectral_identity_check(K, ks.matrix, ek, kmode) <= 1e-8 * kmax);
}

TEST_CASE("stiffness stabilization lowers the condition number") {
    for (int p = 2; p <= 8; ++p) {
        const auto c = cut_element(p, 0.0);
        const auto r = stabilize_element(c.em, c.nodes, p, variant("1a", 1e-2, 1e-3), c.ref,
                                         element::lame_lambda(c.mat));
        const double before = linalg::cond_inv(minimally_constrained(c.em.K_c, p));
        const double after = linalg::cond_inv(minimally_constrained(r.K_mod, p));
        CHECK(std::isfinite(after));
        CHECK(after <= before);
    }
}
