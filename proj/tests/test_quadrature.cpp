#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "scm/quadrature.hpp"

using namespace scm;
using namespace scm::quadrature;

namespace {

double integrate(const Rule1D& r, int degree) {
    double s = 0.0;
    for (std::size_t i = 0; i < r.points.size(); ++i) s += r.weights[i] * std::pow(r.points[i], degree);
    return s;
}

double exact_monomial(int degree) { return degree % 2 ? 0.0 : 2.0 / (degree + 1); }

const geometry::Box kUnit{0.0, 0.0, 1000.0, 1000.0};

}  // namespace

TEST_CASE("GLL rules") {
    auto r1 = gll_rule(1);
    CHECK(r1.points == std::vector<double>{-1.0, 1.0});
    CHECK(r1.weights[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r1.weights[1] == doctest::Approx(1.0).epsilon(1e-14));

    auto r2 = gll_rule(2);
    CHECK(r2.points[1] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(r2.weights[0] == doctest::Approx(1.0 / 3).epsilon(1e-14));
    CHECK(r2.weights[1] == doctest::Approx(4.0 / 3).epsilon(1e-14));
    CHECK(integrate(r2, 2) == doctest::Approx(2.0 / 3).epsilon(1e-14));

    auto r4 = gll_rule(4);
    CHECK(r4.points[1] == doctest::Approx(-std::sqrt(3.0 / 7.0)).epsilon(1e-13));
    CHECK(r4.points[3] == doctest::Approx(std::sqrt(3.0 / 7.0)).epsilon(1e-13));
    for (int d = 0; d <= 7; ++d) CHECK(integrate(r4, d) == doctest::Approx(exact_monomial(d)).epsilon(1e-13));

    for (int p = 1; p <= 12; ++p) {
        const auto r = gll_rule(p);
        REQUIRE(r.points.size() == static_cast<std::size_t>(p + 1));
        CHECK(r.points.front() == -1.0);
        CHECK(r.points.back() == 1.0);
        double sum = 0.0;
        for (std::size_t i = 0; i < r.points.size(); ++i) {
            if (i) CHECK(r.points[i] > r.points[i - 1]);
            CHECK(r.weights[i] > 0.0);
            sum += r.weights[i];
        }
        CHECK(std::abs(sum - 2.0) < 1e-12);
        for (int d = 0; d <= 2 * p - 1; ++d) CHECK(std::abs(integrate(r, d) - exact_monomial(d)) < 1e-12);
        // Interior nodes are roots of L_p'.
        for (std::size_t i = 1; i + 1 < r.points.size(); ++i) {
            double v, dv;
            legendre(p, r.points[i], v, dv);
            CHECK(std::abs(dv) < 1e-10);
            CHECK(r.weights[i] == doctest::Approx(2.0 / (p * (p + 1) * v * v)).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(gll_rule(0), std::out_of_range);
    CHECK_THROWS_AS(gll_rule(13), std::out_of_range);
}

TEST_CASE("Gauss-Legendre rules") {
    auto g1 = gauss_rule(1);
    CHECK(g1.points[0] == doctest::Approx(0.0));
    CHECK(g1.weights[0] == doctest::Approx(2.0).epsilon(1e-14));
    auto g2 = gauss_rule(2);
    CHECK(g2.points[0] == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-14));
    CHECK(g2.points[1] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));
    CHECK(g2.weights[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(integrate(gauss_rule(3), 4) == doctest::Approx(0.4).epsilon(1e-14));
    for (int n = 1; n <= 13; ++n) {
        const auto r = gauss_rule(n);
        for (int d = 0; d <= 2 * n - 1; ++d) CHECK(std::abs(integrate(r, d) - exact_monomial(d)) < 1e-12);
    }
    CHECK_THROWS_AS(gauss_rule(0), std::out_of_range);
    CHECK_THROWS_AS(gauss_rule(14), std::out_of_range);
}

TEST_CASE("quadtree over a cut element") {
    const geometry::ImplicitDomain circle{{geometry::void_circle({0.0, 0.0}, 1200.0)}};
    const auto k0 = build_quadtree(circle, kUnit, 0);
    REQUIRE(k0.size() == 1);
    CHECK(k0[0].status == CellStatus::CutLeaf);
    CHECK(k0[0].bbox == geometry::Box{-1, -1, 1, 1});

    const geometry::ImplicitDomain half{{geometry::solid_half_plane(1.0, 0.0, 500.0)}};
    const auto k1 = build_quadtree(half, kUnit, 1);
    REQUIRE(k1.size() == 4);
    int phys = 0, fict = 0, cut = 0;
    for (const auto& c : k1) {
        phys += c.status == CellStatus::Physical;
        fict += c.status == CellStatus::Fictitious;
        cut += c.status == CellStatus::CutLeaf;
    }
    CHECK(phys == 2);
    CHECK(fict == 2);
    CHECK(cut == 0);

    auto cut_leaves = [&](int k) {
        int n = 0;
        for (const auto& c : build_quadtree(circle, kUnit, k)) n += c.status == CellStatus::CutLeaf;
        return n;
    };
    for (int k = 3; k < 5; ++k) {
        const double ratio = static_cast<double>(cut_leaves(k + 1)) / cut_leaves(k);
        CHECK(ratio >= 1.8);
        CHECK(ratio <= 2.2);
    }

    for (int k = 0; k <= 8; ++k) {
        double area = 0.0;
        for (const auto& c : build_quadtree(circle, kUnit, k)) {
            area += c.bbox.width() * c.bbox.height();
            CHECK(c.level <= k);
            if (c.level < k) CHECK(c.status != CellStatus::CutLeaf);
        }
        CHECK(area == 4.0);
    }
}

TEST_CASE("composed integrals") {
    const geometry::ImplicitDomain circle{{geometry::void_circle({0.0, 0.0}, 1200.0)}};
    const geometry::ImplicitDomain half{{geometry::solid_half_plane(1.0, 0.0, 500.0)}};
    auto one = [](double, double) { return 1.0; };
    for (int n : {1, 3, 5}) {
        const auto rule = gauss_rule(n);
        CHECK(composed_integral(one, tensor_points(rule), 0.0) == doctest::Approx(4.0).epsilon(1e-14));
        for (int k = 1; k <= 4; ++k) {
            const auto pts = leaf_points(half, kUnit, build_quadtree(half, kUnit, k), rule);
            CHECK(composed_integral(one, pts, 0.0) == doctest::Approx(2.0).epsilon(1e-14));
        }
    }
    const auto rule = gauss_rule(3);
    const auto pts = leaf_points(circle, kUnit, build_quadtree(circle, kUnit, 8), rule);
    CHECK(composed_integral(one, pts, 0.0) == doctest::Approx(4.0 * 0.049).epsilon(0.03));

    // With alpha = 1 everywhere the tree reproduces the plain tensor rule of a polynomial.
    auto f = [](double x, double y) { return 1.0 + x * x * y + 0.3 * std::pow(y, 4); };
    const auto plain = composed_integral(f, tensor_points(gauss_rule(4)), 1.0);
    for (int k = 0; k <= 5; ++k) {
        const auto p = leaf_points(circle, kUnit, build_quadtree(circle, kUnit, k), gauss_rule(4));
        CHECK(std::abs(composed_integral(f, p, 1.0) - plain) < 1e-12);
    }
}

TEST_CASE("cut integrals converge with the tree depth") {
    const geometry::ImplicitDomain circle{{geometry::void_circle({0.0, 0.0}, 1200.0)}};
    auto f = [](double x, double y) { return 2.0 + x + 0.5 * y * y; };
    auto integral = [&](int k) {
        return composed_integral(f, leaf_points(circle, kUnit, build_quadtree(circle, kUnit, k), gauss_rule(3)), 0.0);
    };
    const double ref = integral(12);
    std::vector<double> err;
    for (int k = 1; k <= 10; ++k) err.push_back(std::abs(integral(k) - ref));
    // First-order in the leaf size; cancellation makes single levels non-monotone.
    for (int k = 1; k <= 10; ++k) CHECK(err[k - 1] <= std::ldexp(1.0, -k));
    for (std::size_t i = 3; i < err.size(); ++i) CHECK(err[i] < err[i - 3]);
}
