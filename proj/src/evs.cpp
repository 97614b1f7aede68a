#include "scm/evs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace scm::evs {

namespace {

struct Row {
    const char* code;
    bool K;
    bool M;
    EigBasis basis;
    LumpScheme lump_s;
    bool lump_c;
    double alpha0;
};

std::vector<Row> make_rows() {
    std::vector<Row> rows = {
        {"0a", false, false, EigBasis::CMM, LumpScheme::None, true, 0.0},
        {"0b", false, false, EigBasis::CMM, LumpScheme::None, false, 0.0},
        {"0c", false, false, EigBasis::CMM, LumpScheme::None, true, 1e-12},
        {"0d", false, false, EigBasis::CMM, LumpScheme::None, false, 1e-12},
        {"0e", false, false, EigBasis::CMM, LumpScheme::None, true, 1e-5},
        {"0f", false, false, EigBasis::CMM, LumpScheme::None, false, 1e-5},
        {"1a", true, false, EigBasis::CMM, LumpScheme::None, true, 0.0},
        {"1b", true, false, EigBasis::CMM, LumpScheme::None, false, 0.0},
    };
    static const char* letters = "abcdefghijkl";
    const LumpScheme schemes[3] = {LumpScheme::None, LumpScheme::HRZ, LumpScheme::RowSum};
    static std::array<std::string, 24> names;
    for (int group = 2; group <= 3; ++group) {
        for (int i = 0; i < 12; ++i) {
            auto& name = names[(group - 2) * 12 + i];
            name = std::to_string(group) + letters[i];
            const EigBasis basis = i < 6 ? EigBasis::CMM : EigBasis::LMM;
            const bool lump_c = (i % 6) < 3;
            rows.push_back({name.c_str(), group == 3, true, basis, schemes[i % 3], lump_c, 0.0});
        }
    }
    return rows;
}

const std::vector<Row>& rows() {
    static const std::vector<Row> r = make_rows();
    return r;
}

Matrix lump(const Matrix& A, LumpScheme scheme) {
    switch (scheme) {
        case LumpScheme::None:
            return A;
        case LumpScheme::RowSum:
            return Matrix(element::lump_rowsum(A).asDiagonal());
        case LumpScheme::HRZ: {
            // A stabilization matrix without net mass contributes nothing.
            if (!(A.sum() > 0.0) || !(A.diagonal().sum() > 0.0)) return Matrix::Zero(A.rows(), A.cols());
            return Matrix(element::lump_hrz(A).asDiagonal());
        }
    }
    return A;
}

bool is_diagonal(const Matrix& A) {
    for (Eigen::Index j = 0; j < A.cols(); ++j)
        for (Eigen::Index i = 0; i < A.rows(); ++i)
            if (i != j && A(i, j) != 0.0) return false;
    return true;
}

}  // namespace

EvsConfig variant(std::string_view code, double eps_S, double eps_lambda) {
    for (const auto& r : rows()) {
        if (code == r.code) {
            EvsConfig c;
            c.stabilize_K = r.K;
            c.stabilize_M = r.M;
            c.eig_basis_M = r.basis;
            c.lump_Ms = r.lump_s;
            c.lump_Mc = r.lump_c;
            c.alpha0 = r.alpha0;
            c.eps_S = eps_S;
            c.eps_lambda = eps_lambda;
            return c;
        }
    }
    throw std::invalid_argument("unknown variant code '" + std::string(code) + "'");
}

std::optional<std::string> variant_code(const EvsConfig& cfg) {
    for (const auto& r : rows()) {
        if (r.K != cfg.stabilize_K || r.M != cfg.stabilize_M || r.lump_c != cfg.lump_Mc || r.alpha0 != cfg.alpha0)
            continue;
        if (r.M && (r.basis != cfg.eig_basis_M || r.lump_s != cfg.lump_Ms)) continue;
        return std::string(r.code);
    }
    return std::nullopt;
}

const std::vector<std::string>& all_variant_codes() {
    static const std::vector<std::string> codes = [] {
        std::vector<std::string> v;
        for (const auto& r : rows()) v.emplace_back(r.code);
        return v;
    }();
    return codes;
}

std::vector<int> select_modes(const EigResult& eig, double eps_lambda) {
    const Eigen::Index n = eig.values.size();
    if (n == 0) throw std::invalid_argument("select_modes: empty spectrum");
    const double lmax = eig.values[n - 1];
    if (!(lmax > 0.0)) throw std::domain_error("select_modes: spectrum has no positive eigenvalue");
    std::vector<int> sel;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double l = eig.values[i];
        if (l < 0.0 || l / lmax < eps_lambda) sel.push_back(static_cast<int>(i));
    }
    return sel;
}

Factor stabilization_factor(const EvsConfig& cfg, double lambda_i, double lambda_max, double chi,
                            double lame_lambda) {
    switch (cfg.factor_law) {
        case FactorLaw::Constant:
            return {cfg.eps_S, false};
        case FactorLaw::Loehnert: {
            const double d = cfg.eps_S * lambda_max - lambda_i;
            return {d > 0.0 ? d : 0.0, false};
        }
        case FactorLaw::GarhuomEig: {
            bool clamped = false;
            double l = lambda_i;
            if (!(l > 0.0)) {
                l = 1e-300;
                clamped = true;
            }
            return {cfg.eps_S / (cfg.law_n_epsS * std::pow(l, 1.0 / cfg.law_beta)), clamped};
        }
        case FactorLaw::GarhuomMat:
            return {cfg.eps_S * lame_lambda * std::pow(1.0 - chi, cfg.law_mat_beta), false};
    }
    return {cfg.eps_S, false};
}

double scale_stabilization(double stab_max, double ref_max, double eps_S) {
    if (!(stab_max > 0.0)) return 1.0;
    if (!(ref_max > 0.0)) throw std::domain_error("scale_stabilization: reference maximum must be positive");
    if (!(eps_S > 0.0)) return 1.0;
    const double gamma = std::round(std::log10(ref_max / stab_max * eps_S));
    return std::pow(10.0, gamma);
}

MassStabilization mass_stabilization(const Matrix& M_basis, const EvsConfig& cfg, const StabContext& ctx) {
    const auto eig = linalg::sym_eig(M_basis);
    MassStabilization out;
    out.selected = select_modes(eig, cfg.eps_lambda);
    const Eigen::Index n = M_basis.rows();
    const double lmax = eig.values[n - 1];
    Matrix raw = Matrix::Zero(n, n);
    for (int i : out.selected) {
        const auto f = stabilization_factor(cfg, eig.values[i], lmax, ctx.chi, ctx.lame_lambda);
        out.clamped = out.clamped || f.clamped;
        out.factors.push_back(f.value);
        if (f.value != 0.0) raw.noalias() += f.value * eig.vectors.col(i) * eig.vectors.col(i).transpose();
    }
    Matrix lumped = lump(raw, cfg.lump_Ms);
    out.scale = ctx.apply_scaling ? scale_stabilization(linalg::max_abs(raw), ctx.ref_max, cfg.eps_S) : 1.0;
    out.matrix = out.scale * lumped;
    return out;
}

Matrix rbm_vectors(const std::vector<geometry::Point>& nodes, int p) {
    const int nn = (p + 1) * (p + 1);
    if (static_cast<int>(nodes.size()) != nn) throw std::invalid_argument("rbm_vectors: node count mismatch");
    const std::array<int, 4> corners = {0, p, p * (p + 1), nn - 1};
    double xc = 0.0;
    double yc = 0.0;
    for (int c : corners) {
        xc += 0.25 * nodes[c].x;
        yc += 0.25 * nodes[c].y;
    }
    Matrix R = Matrix::Zero(2 * nn, 3);
    for (int a = 0; a < nn; ++a) {
        const double dx = nodes[a].x - xc;
        const double dy = nodes[a].y - yc;
        R(2 * a, 0) = 1.0;
        R(2 * a + 1, 1) = 1.0;
        R(2 * a, 2) = -dy;
        R(2 * a + 1, 2) = dx;
    }
    for (int j = 0; j < 3; ++j) {
        for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i < j; ++i) R.col(j) -= R.col(i).dot(R.col(j)) * R.col(i);
        const double nrm = R.col(j).norm();
        if (!(nrm > 0.0)) throw std::invalid_argument("rbm_vectors: degenerate element geometry");
        R.col(j) /= nrm;
    }
    return R;
}

StiffnessStabilization stiffness_stabilization(const Matrix& K_c, const std::vector<geometry::Point>& nodes, int p,
                                               const EvsConfig& cfg, const StabContext& ctx) {
    const Eigen::Index n = K_c.rows();
    StiffnessStabilization out;
    out.matrix = Matrix::Zero(n, n);
    const auto eig = linalg::sym_eig(K_c);
    const auto sel = select_modes(eig, cfg.eps_lambda);
    out.n_s = static_cast<int>(sel.size());
    if (out.n_s < 3) {
        out.warning = true;
        return out;
    }
    const Matrix R = rbm_vectors(nodes, p);
    double lmin = std::abs(eig.values[sel.front()]);
    for (int i : sel) lmin = std::min(lmin, std::abs(eig.values[i]));

    std::vector<Vector> kept;
    std::vector<int> kept_index;
    for (int i : sel) {
        Vector v = eig.vectors.col(i);
        for (int pass = 0; pass < 2; ++pass) v -= R * (R.transpose() * v);
        const double n2 = v.squaredNorm();
        const bool remove = cfg.rbm_criterion == RbmCriterion::SmallestEigenvalue
                                ? n2 < lmin
                                : std::sqrt(n2) < cfg.rbm_norm_threshold;
        if (remove) {
            ++out.n_0;
            continue;
        }
        kept.push_back(v / std::sqrt(n2));
        kept_index.push_back(i);
    }
    // Second orthogonalization among the survivors. Vectors that become
    // linearly dependent (mixed RBM/spurious clusters) are dropped.
    std::vector<Vector> basis;
    std::vector<int> basis_index;
    for (std::size_t k = 0; k < kept.size(); ++k) {
        Vector v = kept[k];
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& b : basis) v -= b.dot(v) * b;
            v -= R * (R.transpose() * v);
        }
        const double nrm = v.norm();
        if (nrm < 1e-8) {
            ++out.n_0;
            continue;
        }
        basis.push_back(v / nrm);
        basis_index.push_back(kept_index[k]);
    }
    std::vector<double> basis_lambda;
    for (int i : basis_index) basis_lambda.push_back(eig.values[i]);
    if (out.n_0 != 3) {
        // RBMs smeared over several near-zero modes: no single projection is
        // small. Use the Ritz vectors of K_c on the orthogonal complement of
        // the RBMs within the selected subspace instead.
        const Eigen::Index m = static_cast<Eigen::Index>(sel.size());
        Matrix S(n, m);
        for (Eigen::Index j = 0; j < m; ++j) S.col(j) = eig.vectors.col(sel[j]);
        const Eigen::JacobiSVD<Matrix> svd(S.transpose() * R, Eigen::ComputeFullU);
        const Matrix Q = S * svd.matrixU().rightCols(m - 3);
        const auto ritz = linalg::sym_eig(Q.transpose() * K_c * Q);
        basis.clear();
        basis_lambda.clear();
        for (Eigen::Index j = 0; j < m - 3; ++j) {
            Vector v = Q * ritz.vectors.col(j);
            v -= R * (R.transpose() * v);
            basis.push_back(v / v.norm());
            basis_lambda.push_back(ritz.values[j]);
        }
        out.n_0 = 3;
    }
    out.n_u = static_cast<int>(basis.size());
    const double lmax = eig.values[n - 1];
    Matrix raw = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < basis.size(); ++k) {
        const auto f = stabilization_factor(cfg, basis_lambda[k], lmax, ctx.chi, ctx.lame_lambda);
        out.clamped = out.clamped || f.clamped;
        out.factors.push_back(f.value);
        if (f.value != 0.0) raw.noalias() += f.value * basis[k] * basis[k].transpose();
    }
    out.scale = ctx.apply_scaling ? scale_stabilization(linalg::max_abs(raw), ctx.ref_max, cfg.eps_S) : 1.0;
    out.matrix = out.scale * raw;
    return out;
}

StabilizationResult stabilize_element(const element::ElementMatrices& em, const std::vector<geometry::Point>& nodes,
                                      int p, const EvsConfig& cfg, const element::ElementMatrices& reference,
                                      double lame_lambda) {
    StabilizationResult r;
    const Eigen::Index n = em.K_c.rows();
    r.M_stab = Matrix::Zero(n, n);
    r.K_stab = Matrix::Zero(n, n);
    if (cfg.stabilize_M && cfg.eps_S > 0.0) {
        StabContext ctx;
        ctx.chi = em.chi;
        ctx.lame_lambda = lame_lambda;
        // Both bases are calibrated against the consistent uncut mass.
        ctx.ref_max = linalg::max_abs(reference.M_c_consistent);
        const Matrix basis =
            cfg.eig_basis_M == EigBasis::CMM ? em.M_c_consistent : Matrix(em.M_c_lumped.asDiagonal());
        auto ms = mass_stabilization(basis, cfg, ctx);
        r.M_stab = std::move(ms.matrix);
        r.n_stab_modes_M = static_cast<int>(ms.selected.size());
        r.scale_m = ms.scale;
    }
    if (cfg.stabilize_K && cfg.eps_S > 0.0) {
        StabContext ctx;
        ctx.chi = em.chi;
        ctx.lame_lambda = lame_lambda;
        ctx.ref_max = linalg::max_abs(reference.K_c);
        auto ks = stiffness_stabilization(em.K_c, nodes, p, cfg, ctx);
        r.K_stab = std::move(ks.matrix);
        r.n_u = ks.n_u;
        r.n_0 = ks.n_0;
        r.scale_k = ks.scale;
        r.warning = ks.warning;
    }
    const Matrix base = cfg.lump_Mc ? Matrix(em.M_c_lumped.asDiagonal()) : em.M_c_consistent;
    r.M_mod = base + r.M_stab;
    r.M_mod_diagonal = cfg.lump_Mc && is_diagonal(r.M_stab);
    r.K_mod = em.K_c + r.K_stab;
    return r;
}

double spectral_identity_check(const Matrix& A, const Matrix& A_stab, const EigResult& eig,
                               const std::vector<double>& factors_per_mode) {
    const Eigen::Index n = A.rows();
    if (static_cast<Eigen::Index>(factors_per_mode.size()) != n)
        throw std::invalid_argument("spectral_identity_check: one factor per mode required");
    std::vector<double> expected(n);
    for (Eigen::Index i = 0; i < n; ++i) expected[i] = eig.values[i] + factors_per_mode[i];
    std::sort(expected.begin(), expected.end());
    const Vector actual = linalg::sym_eigenvalues(A + A_stab);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) worst = std::max(worst, std::abs(actual[i] - expected[i]));
    return worst;
}

std::string to_string(EigBasis b) { return b == EigBasis::CMM ? "CMM" : "LMM"; }

std::string to_string(LumpScheme s) {
    switch (s) {
        case LumpScheme::None:
            return "None";
        case LumpScheme::HRZ:
            return "HRZ";
        case LumpScheme::RowSum:
            return "RowSum";
    }
    return "None";
}

std::string to_string(FactorLaw l) {
    switch (l) {
        case FactorLaw::Constant:
            return "Constant";
        case FactorLaw::Loehnert:
            return "Loehnert";
        case FactorLaw::GarhuomEig:
            return "GarhuomEig";
        case FactorLaw::GarhuomMat:
            return "GarhuomMat";
    }
    return "Constant";
}

std::string to_string(RbmCriterion c) {
    return c == RbmCriterion::SmallestEigenvalue ? "SmallestEigenvalue" : "FixedNorm";
}

EigBasis parse_eig_basis(std::string_view s) {
    if (s == "CMM") return EigBasis::CMM;
    if (s == "LMM") return EigBasis::LMM;
    throw std::invalid_argument("eig_basis_M must be CMM or LMM, got '" + std::string(s) + "'");
}

LumpScheme parse_lump_scheme(std::string_view s) {
    if (s == "None") return LumpScheme::None;
    if (s == "HRZ") return LumpScheme::HRZ;
    if (s == "RowSum") return LumpScheme::RowSum;
    throw std::invalid_argument("lump scheme must be None, HRZ or RowSum, got '" + std::string(s) + "'");
}

FactorLaw parse_factor_law(std::string_view s) {
    if (s == "Constant") return FactorLaw::Constant;
    if (s == "Loehnert") return FactorLaw::Loehnert;
    if (s == "GarhuomEig") return FactorLaw::GarhuomEig;
    if (s == "GarhuomMat") return FactorLaw::GarhuomMat;
    throw std::invalid_argument("factor_law must be Constant, Loehnert, GarhuomEig or GarhuomMat, got '" +
                                std::string(s) + "'");
}

RbmCriterion parse_rbm_criterion(std::string_view s) {
    if (s == "SmallestEigenvalue") return RbmCriterion::SmallestEigenvalue;
    if (s == "FixedNorm") return RbmCriterion::FixedNorm;
    throw std::invalid_argument("rbm_criterion must be SmallestEigenvalue or FixedNorm, got '" + std::string(s) +
                                "'");
}

}  // namespace scm::evs
