#include "support.hpp"
#include "thetalat/lattice.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

using namespace thetalat;

namespace {

const double kSqrt3 = std::sqrt(3.0);

std::vector<double> shell_norms(const BravaisLattice& l, int count) {
    std::vector<double> out;
    for (const Shell& s : enumerate_shells(l, Vector::Zero(l.dim()), count)) out.push_back(s.sq_norm);
    return out;
}

// Squared distance to the nearest point among the 5x5 coefficient neighbours of the cell containing x.
double brute_nearest_sq(const BravaisLattice& l, const Vector& x) {
    const Vector c = l.to_coords(x);
    double best = INFINITY;
    for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j) {
            Vector k(2);
            k << std::floor(c[0]) + i, std::floor(c[1]) + j;
            best = std::min(best, (l.to_cartesian(k) - x).squaredNorm());
        }
    return best;
}

}  // namespace

TEST_CASE("presets and covolumes") {
    const BravaisLattice z2 = make_preset("Zd", {2});
    CHECK((z2.basis() - Matrix::Identity(2, 2)).norm() == 0.0);
    CHECK(z2.covolume() == doctest::Approx(1.0));
    CHECK(make_preset("Lyt", {1, 1}).covolume() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(make_preset("A2", {1}).covolume() == doctest::Approx(kSqrt3 / 2).epsilon(1e-14));
    CHECK(make_preset("Ly", {4}).covolume() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(make_preset("nope"), std::invalid_argument);
    CHECK_THROWS_AS(make_preset("A2", {-1}), std::invalid_argument);
    CHECK_THROWS_AS(make_preset("Ly", {0.5}), std::invalid_argument);
    CHECK_THROWS_AS(BravaisLattice(Matrix::Zero(2, 2)), std::exception);
}

TEST_CASE("normalized Lyt(1,1) is the unit-density BCC") {
    const BravaisLattice bcc = normalize_density(make_preset("Lyt", {1, 1}));
    CHECK(bcc.covolume() == doctest::Approx(1.0).epsilon(1e-14));
    const BravaisLattice ref = normalize_density(make_preset("BCC"));
    const auto a = shell_norms(bcc, 6), b = shell_norms(ref, 6);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    CHECK((bcc.basis() - make_preset("Lyt", {1, 1}).basis() * std::cbrt(2.0)).norm() <= 1e-14);
}

TEST_CASE("dual") {
    const BravaisLattice z3 = make_preset("Zd", {3});
    CHECK((dual(z3).basis() - z3.basis()).norm() == 0.0);

    const auto bcc_dual = shell_norms(dual(normalize_density(make_preset("BCC"))), 6);
    const auto fcc = shell_norms(normalize_density(make_preset("FCC")), 6);
    REQUIRE(bcc_dual.size() == fcc.size());
    for (std::size_t i = 0; i < fcc.size(); ++i) CHECK(bcc_dual[i] == doctest::Approx(fcc[i]).epsilon(1e-12));

    for (double y : {1.0, 1.7, 3.0}) {
        for (double t : {0.5, 1.0, 2.0}) {
            Matrix expected(3, 3);
            const double sy = std::sqrt(y);
            expected << 1 / sy, 0, 0, 0, sy, 0, -1 / t, -1 / t, 2 / t;
            CHECK((dual(make_preset("Lyt", {y, t})).basis() - expected).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }

    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) {
        const int d = 2 + i % 2;
        const BravaisLattice l(testsupport::random_basis(rng, d));
        CHECK((dual(dual(l)).basis() - l.basis()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(dual(l).covolume() * l.covolume() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("normalize_density") {
    const BravaisLattice z2 = make_preset("Zd", {2});
    CHECK((normalize_density(z2).basis() - z2.basis()).norm() <= 1e-15);
    const BravaisLattice a2 = normalize_density(make_preset("A2", {1}));
    CHECK(a2.basis().col(0).norm() == doctest::Approx(std::sqrt(2.0) * std::pow(3.0, -0.25)).epsilon(1e-14));
}

TEST_CASE("iwasawa decomposition") {
    const IwasawaQDT id = iwasawa_qdt(Matrix::Identity(3, 3));
    CHECK((id.q - Matrix::Identity(3, 3)).norm() <= 1e-14);
    CHECK((id.d_diag - Vector::Ones(3)).norm() <= 1e-14);
    CHECK((id.t_lower - Matrix::Identity(3, 3)).norm() <= 1e-14);

    Matrix lower(3, 3);
    lower << 1, 0, 0, 0.3, 1, 0, -0.7, 2.5, 1;
    const IwasawaQDT lt = iwasawa_qdt(lower);
    CHECK((lt.q - Matrix::Identity(3, 3)).norm() <= 1e-12);
    CHECK((lt.d_diag - Vector::Ones(3)).norm() <= 1e-12);
    CHECK((lt.t_lower - lower).norm() <= 1e-12);

    std::mt19937_64 rng(2);
    for (int i = 0; i < 100; ++i) {
        const int d = 2 + i % 2;
        Matrix m = testsupport::random_basis(rng, d, 1.5);
        if (i % 5 == 0) m.col(0) *= -1.0;
        const IwasawaQDT f = iwasawa_qdt(m);
        Matrix target = m;
        if (f.last_column_negated) target.col(d - 1) *= -1.0;
        CHECK(f.last_column_negated == (m.determinant() < 0));
        const Matrix rec = f.scale * f.q * f.d_diag.asDiagonal() * f.t_lower;
        CHECK((rec - target).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((f.q.transpose() * f.q - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(f.q.determinant() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(f.d_diag.minCoeff() > 0.0);
        CHECK(f.d_diag.prod() == doctest::Approx(1.0).epsilon(1e-12));
        for (int r = 0; r < d; ++r) {
            CHECK(f.t_lower(r, r) == 1.0);
            for (int c = r + 1; c < d; ++c) CHECK(f.t_lower(r, c) == 0.0);
        }
    }
    CHECK_THROWS_AS(iwasawa_qdt(Matrix::Zero(2, 2)), std::domain_error);
}

TEST_CASE("shell examples") {
    const auto z2 = enumerate_shells(make_preset("Zd", {2}), Vector::Zero(2), 2);
    REQUIRE(z2.size() == 2);
    CHECK(z2[0].points.size() == 1);
    CHECK(z2[1].sq_norm == doctest::Approx(1.0));
    CHECK(z2[1].points.size() == 4);

    const auto a2 = enumerate_shells(make_preset("A2", {1}), Vector::Zero(2), 2);
    CHECK(a2[1].sq_norm == doctest::Approx(1.0));
    CHECK(a2[1].points.size() == 6);

    // The first dual shell of (2/sqrt3) A2 lies at squared norm 1 (the lattice is A2 of side 2/sqrt3).
    const auto d = enumerate_shells(dual(make_preset("A2", {2 / kSqrt3})), Vector::Zero(2), 2);
    CHECK(d[1].points.size() == 6);
    CHECK(d[1].sq_norm == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("shells are exhaustive and well formed") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        const int d = 2 + i % 2;
        const BravaisLattice l = testsupport::random_unit_lattice(rng, d);
        const Vector center = testsupport::random_shift(rng, l) * 0.37;
        const auto shells = enumerate_shells(l, center, 25);
        REQUIRE(shells.size() == 25);
        const double r2 = 0.5 * (shells[23].sq_norm + shells[24].sq_norm);
        std::size_t listed = 0;
        for (std::size_t s = 0; s < shells.size(); ++s) {
            if (s > 0) CHECK(shells[s].sq_norm > shells[s - 1].sq_norm);
            CHECK(std::is_sorted(shells[s].points.begin(), shells[s].points.end(), [](const Vector& a, const Vector& b) {
                return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
            }));
            for (std::size_t k = 0; k < shells[s].points.size(); ++k) {
                const Vector& p = shells[s].points[k];
                CHECK(std::abs(p.squaredNorm() - shells[s].sq_norm) <= 1e-9 * std::max(1.0, shells[s].sq_norm));
                CHECK((l.to_cartesian(shells[s].coeffs[k].cast<double>()) - center - p).norm() <= 1e-12);
            }
            if (shells[s].sq_norm < r2) listed += shells[s].points.size();
        }
        // Box oracle: every lattice point with |p - center|^2 < r2.
        const int K = 12;
        std::size_t brute = 0;
        std::vector<int> k(d, -K);
        while (true) {
            Vector c(d);
            for (int j = 0; j < d; ++j) c[j] = k[j];
            if ((l.to_cartesian(c) - center).squaredNorm() < r2) ++brute;
            int j = 0;
            while (j < d && ++k[j] > K) k[j++] = -K;
            if (j == d) break;
        }
        CHECK(listed == brute);
    }
}

TEST_CASE("reduce_2d") {
    Matrix b(2, 2);
    b << 1, 5, 0, 1;
    const BravaisLattice r = reduce_2d(BravaisLattice(b));
    CHECK(r.basis().col(0).norm() == doctest::Approx(1.0));
    CHECK(r.basis().col(1).norm() == doctest::Approx(1.0));
    CHECK(std::abs(r.basis().col(0).dot(r.basis().col(1))) <= 1e-14);

    const BravaisLattice a2 = make_preset("A2", {1});
    CHECK((reduce_2d(a2).basis() - a2.basis()).norm() <= 1e-15);

    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> ui(-6, 6);
    for (int i = 0; i < 30; ++i) {
        Eigen::Matrix2d u;
        do {
            u << ui(rng), ui(rng), ui(rng), ui(rng);
        } while (std::abs(std::abs(u.determinant()) - 1.0) > 0.5);
        Eigen::Matrix2i unimodular;
        const BravaisLattice scrambled(a2.basis() * u);
        const BravaisLattice red = reduce_2d(scrambled, unimodular);
        CHECK(red.basis().col(0).norm() == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(red.basis().col(1).norm() == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(std::abs(std::abs(red.basis().col(0).dot(red.basis().col(1))) - 0.5) <= 1e-10);
        CHECK((scrambled.basis() * unimodular.cast<double>() - red.basis()).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK(std::abs(unimodular.cast<double>().determinant()) == 1.0);
    }

    // Shortest vector oracle on random lattices.
    for (int i = 0; i < 30; ++i) {
        const BravaisLattice l(testsupport::random_basis(rng, 2, 3.0));
        const BravaisLattice red = reduce_2d(l);
        double shortest = INFINITY;
        for (int a = -30; a <= 30; ++a)
            for (int c = -30; c <= 30; ++c)
                if (a != 0 || c != 0) {
                    Vector k(2);
                    k << a, c;
                    shortest = std::min(shortest, l.to_cartesian(k).squaredNorm());
                }
        CHECK(red.basis().col(0).squaredNorm() == doctest::Approx(shortest).epsilon(1e-10));
        CHECK(red.basis().col(0).norm() <= red.basis().col(1).norm() + 1e-12);
        CHECK(std::abs(red.basis().col(0).dot(red.basis().col(1))) <= red.basis().col(0).squaredNorm() / 2 + 1e-12);
    }
}

TEST_CASE("deep holes of A2 and Z2") {
    const BravaisLattice a2 = make_preset("A2", {1});
    const DeepHoles h = deep_holes_2d(a2);
    CHECK(h.distance == doctest::Approx(1 / kSqrt3).epsilon(1e-12));
    REQUIRE(h.points.size() == 2);
    Vector b1(2), b2(2);
    b1 << 0.5, 0.5 / kSqrt3;
    b2 << 1.0, 1 / kSqrt3;
    const bool direct = a2.contains(h.points[0] - b1) && a2.contains(h.points[1] - b2);
    const bool swapped = a2.contains(h.points[0] - b2) && a2.contains(h.points[1] - b1);
    CHECK((direct || swapped));

    const DeepHoles z = deep_holes_2d(make_preset("Zd", {2}));
    REQUIRE(z.points.size() == 1);
    CHECK(z.points[0][0] == doctest::Approx(0.5));
    CHECK(z.points[0][1] == doctest::Approx(0.5));
    CHECK(z.distance == doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-12));
}

TEST_CASE("deep hole of L_4 against a dense grid") {
    const BravaisLattice l = make_preset("Ly", {4});
    const DeepHoles h = deep_holes_2d(l);
    REQUIRE(h.points.size() == 1);
    CHECK(h.points[0][0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(h.points[0][1] == doctest::Approx(0.25).epsilon(1e-12));

    const int n = 2000;
    double best = 0.0;
    Vector arg(2);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Vector c(2);
            c << (i + 0.5) / n, (j + 0.5) / n;
            const Vector x = l.to_cartesian(c);
            const double d2 = brute_nearest_sq(l, x);
            if (d2 > best) {
                best = d2;
                arg = x;
            }
        }
    CHECK(std::abs(std::sqrt(best) - h.distance) <= 2.5 / n);
    CHECK(h.distance * h.distance == doctest::Approx(1.0 + 1.0 / 16).epsilon(1e-12));
    CHECK((arg - h.points[0]).norm() <= 3.0 / n);
}

TEST_CASE("deep hole distance is invariant under rotation and rebasing") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> ang(0.0, 2 * std::numbers::pi);
    for (int i = 0; i < 30; ++i) {
        const BravaisLattice l(testsupport::random_basis(rng, 2));
        const DeepHoles h = deep_holes_2d(l);
        const double th = ang(rng);
        Eigen::Matrix2d rot;
        rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
        Eigen::Matrix2d u;
        u << 2, 1, 3, 2;
        CHECK(deep_holes_2d(BravaisLattice(rot * l.basis())).distance == doctest::Approx(h.distance).epsilon(1e-10));
        CHECK(deep_holes_2d(BravaisLattice(l.basis() * u)).distance == doctest::Approx(h.distance).epsilon(1e-10));
        for (const Vector& p : h.points) CHECK(brute_nearest_sq(l, p) == doctest::Approx(h.distance * h.distance).epsilon(1e-10));
        // No grid point is farther from the lattice than the reported holes.
        double far = 0.0;
        for (int a = 0; a < 100; ++a)
            for (int b = 0; b < 100; ++b) {
                Vector c(2);
                c << a / 100.0, b / 100.0;
                far = std::max(far, brute_nearest_sq(l, l.to_cartesian(c)));
            }
        CHECK(far <= h.distance * h.distance * (1 + 1e-12));
    }
}

TEST_CASE("lattice spec parsing") {
    const BravaisLattice a = parse_lattice_spec("preset:A2:1");
    CHECK(a.covolume() == doctest::Approx(kSqrt3 / 2));
    const BravaisLattice j = parse_lattice_spec(R"({"basis":[[1,0.5],[0,2]]})");
    CHECK(j.basis()(0, 1) == 0.5);
    CHECK(j.basis()(1, 1) == 2.0);
    CHECK_THROWS(parse_lattice_spec("preset:Q9"));
    CHECK_THROWS(parse_lattice_spec("{not json"));
}
