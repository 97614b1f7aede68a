#include "scm/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <stdexcept>
#include <vector>

namespace scm::linalg {

namespace {

// Cyclic Jacobi. A pair is rotated while |a_pq| exceeds tol * sqrt(|a_pp a_qq|),
// which keeps small eigenvalues of graded matrices accurate in a relative sense.
void jacobi(Matrix& A, Matrix* V) {
    const Eigen::Index n = A.rows();
    constexpr double tol = 1e-15;
    constexpr double tiny = 1e-300;
    constexpr int max_sweeps = 80;
    double* a = A.data();
    auto at = [&](Eigen::Index r, Eigen::Index c) -> double& { return a[c * n + r]; };
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = at(p, q);
                const double app = at(p, p);
                const double aqq = at(q, q);
                if (std::abs(apq) <= tiny) continue;
                if (std::abs(apq) <= tol * std::sqrt(std::abs(app) * std::abs(aqq))) continue;
                rotated = true;
                const double theta = (aqq - app) / (2.0 * apq);
                double t;
                if (std::abs(theta) > 1e150) {
                    t = 0.5 / theta;
                } else {
                    t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);
                double* colp = a + p * n;
                double* colq = a + q * n;
                for (Eigen::Index r = 0; r < n; ++r) {
                    if (r == p || r == q) continue;
                    const double g = colp[r];
                    const double h = colq[r];
                    colp[r] = g - s * (h + g * tau);
                    colq[r] = h + s * (g - h * tau);
                }
                at(p, p) = app - t * apq;
                at(q, q) = aqq + t * apq;
                at(p, q) = 0.0;
                at(q, p) = 0.0;
                for (Eigen::Index r = 0; r < n; ++r) {
                    if (r == p || r == q) continue;
                    at(p, r) = colp[r];
                    at(q, r) = colq[r];
                }
                if (V) {
                    double* vp = V->data() + p * n;
                    double* vq = V->data() + q * n;
                    for (Eigen::Index r = 0; r < n; ++r) {
                        const double g = vp[r];
                        const double h = vq[r];
                        vp[r] = g - s * (h + g * tau);
                        vq[r] = h + s * (g - h * tau);
                    }
                }
            }
        }
        if (!rotated) return;
    }
}

Matrix prepared(const Matrix& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("sym_eig: matrix must be square");
    if (!A.allFinite()) throw std::domain_error("sym_eig: non-finite matrix entry");
    return 0.5 * (A + A.transpose());
}

}  // namespace

EigResult sym_eig(const Matrix& A) {
    Matrix W = prepared(A);
    const Eigen::Index n = W.rows();
    Matrix V = Matrix::Identity(n, n);
    jacobi(W, &V);
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return W(i, i) < W(j, j); });
    EigResult r;
    r.values.resize(n);
    r.vectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index i = order[k];
        r.values[k] = W(i, i);
        Vector v = V.col(i);
        v /= v.norm();
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v[imax] < 0.0) v = -v;
        r.vectors.col(k) = v;
    }
    return r;
}

Vector sym_eigenvalues(const Matrix& A) {
    Matrix W = prepared(A);
    if (W.rows() > 300) {
        // Jacobi sweeps cost O(n^3) each; assembled systems go through the
        // tridiagonal QR instead.
        return Eigen::SelfAdjointEigenSolver<Matrix>(W, Eigen::EigenvaluesOnly).eigenvalues();
    }
    jacobi(W, nullptr);
    Vector d = W.diagonal();
    std::sort(d.data(), d.data() + d.size());
    return d;
}

double lanczos_max(const std::function<void(const Vector&, Vector&)>& op, Eigen::Index n, double rel_tol,
                   int max_iter) {
    if (n <= 0) throw std::invalid_argument("lanczos_max: empty operator");
    const int m_max = static_cast<int>(std::min<Eigen::Index>(max_iter, n));
    Matrix Q(n, m_max + 1);
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> dist(0.5, 1.5);
    Vector q(n);
    for (Eigen::Index i = 0; i < n; ++i) q[i] = dist(rng);
    q /= q.norm();
    Q.col(0) = q;
    std::vector<double> alpha;
    std::vector<double> beta;
    Vector w(n);
    double theta = 0.0;
    for (int j = 0; j < m_max; ++j) {
        op(Q.col(j), w);
        if (j > 0) w -= beta[j - 1] * Q.col(j - 1);
        const double aj = Q.col(j).dot(w);
        alpha.push_back(aj);
        w -= aj * Q.col(j);
        for (int pass = 0; pass < 2; ++pass) {
            const Vector h = Q.leftCols(j + 1).transpose() * w;
            w -= Q.leftCols(j + 1) * h;
        }
        const double bj = w.norm();
        const int m = j + 1;
        const bool check = (m % 5 == 0) || m == m_max || bj == 0.0;
        if (check) {
            Vector d = Eigen::Map<Vector>(alpha.data(), m);
            Vector e = m > 1 ? Vector(Eigen::Map<Vector>(beta.data(), m - 1)) : Vector(0);
            Eigen::SelfAdjointEigenSolver<Matrix> es;
            es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
            theta = es.eigenvalues()[m - 1];
            const double resid = std::abs(bj * es.eigenvectors()(m - 1, m - 1));
            if (resid <= rel_tol * std::abs(theta) || bj <= 1e-300 || m == m_max) return theta;
        }
        beta.push_back(bj);
        Q.col(j + 1) = w / bj;
    }
    return theta;
}

double spectral_radius_generalized(const Matrix& K, const Vector& M_diag) {
    const Eigen::Index n = K.rows();
    if (M_diag.size() != n) throw std::invalid_argument("spectral_radius_generalized: size mismatch");
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(M_diag[i] > 0.0))
            throw std::domain_error("spectral_radius_generalized: nonpositive mass at DOF " + std::to_string(i));
    const Vector s = M_diag.cwiseSqrt().cwiseInverse();
    const Matrix S = s.asDiagonal() * (0.5 * (K + K.transpose())) * s.asDiagonal();
    if (n <= 300) return sym_eigenvalues(S)[n - 1];
    return lanczos_max([&](const Vector& x, Vector& y) { y.noalias() = S * x; }, n, 1e-13);
}

double spectral_radius_generalized(const Matrix& K, const Matrix& M) {
    const Eigen::Index n = K.rows();
    Eigen::LLT<Matrix> llt(0.5 * (M + M.transpose()));
    if (llt.info() != Eigen::Success) throw std::domain_error("spectral_radius_generalized: mass not positive definite");
    const Matrix L = llt.matrixL();
    Matrix X = L.triangularView<Eigen::Lower>().solve(0.5 * (K + K.transpose()));
    Matrix S = L.triangularView<Eigen::Lower>().solve(X.transpose());
    if (!S.allFinite()) throw std::domain_error("spectral_radius_generalized: reduction overflow");
    if (n <= 300) return sym_eigenvalues(S)[n - 1];
    S = 0.5 * (S + S.transpose()).eval();
    return lanczos_max([&](const Vector& x, Vector& y) { y.noalias() = S * x; }, n, 1e-13);
}

double cond_inv(const Matrix& A) {
    const Vector l = sym_eigenvalues(A).cwiseAbs();
    const double lmin = l.minCoeff();
    const double lmax = l.maxCoeff();
    if (lmin < 1e-300) return kInfinity;
    return lmax / lmin;
}

double cond_mvp(const Matrix& A, const Vector& x) {
    const double ax = (A * x).norm();
    if (ax == 0.0) return kInfinity;
    const double norm_a = sym_eigenvalues(A).cwiseAbs().maxCoeff();
    return norm_a * x.norm() / ax;
}

}  // namespace scm::linalg
