#include "support.hpp"
#include "thetalat/theta_sum.hpp"
#include "thetalat/translation.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

using namespace thetalat;

namespace {

const double kSqrt3 = std::sqrt(3.0);

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

// Distance on the torus R^d / Z^d between lattice coordinates.
double torus_dist(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        double d = std::abs(a[i] - b[i]);
        d = std::min(d, 1.0 - d);
        s = std::max(s, d);
    }
    return s;
}

// Every point is near some target and every target is near some point.
bool covers(const std::vector<Vector>& got, const std::vector<Vector>& want, double tol) {
    auto near = [tol](const std::vector<Vector>& a, const Vector& x) {
        return std::any_of(a.begin(), a.end(), [&](const Vector& y) { return torus_dist(x, y) <= tol; });
    };
    return std::all_of(got.begin(), got.end(), [&](const Vector& g) { return near(want, g); }) &&
           std::all_of(want.begin(), want.end(), [&](const Vector& w) { return near(got, w); });
}

bool matches(const std::vector<Vector>& got, const std::vector<Vector>& want, double tol) {
    if (got.size() != want.size()) return false;
    for (const Vector& w : want)
        if (std::none_of(got.begin(), got.end(), [&](const Vector& g) { return torus_dist(g, w) <= tol; })) return false;
    return true;
}

// Lattice whose dual is generated by (1,0) and (-1/2, 1.2); entries chosen so the dual Gram ties are exact.
BravaisLattice quarter_exemplar() {
    Matrix b(2, 2);
    b << 1.0, 0.0, 5.0 / 12.0, 5.0 / 6.0;
    return BravaisLattice(b);
}

}  // namespace

TEST_CASE("argmin examples") {
    const MinimizerReport z = argmin_shift_grid(make_preset("Zd", {2}), 1.0, 64, 2);
    CHECK(matches(z.minimizers, {vec({0.5, 0.5})}, 1e-9));
    CHECK(z.value == doctest::Approx(theta(make_preset("Zd", {2}), vec({0.5, 0.5}), 1.0).value).epsilon(1e-12));

    const MinimizerReport a = argmin_shift_grid(make_preset("A2", {1}), 1.0, 96, 2);
    CHECK(matches(a.minimizers, {vec({1.0 / 3, 1.0 / 3}), vec({2.0 / 3, 2.0 / 3})}, 1e-6));
    // the lattice coordinates (1/3,1/3) and (2/3,2/3) are the Cartesian barycentres
    const BravaisLattice a2 = make_preset("A2", {1});
    CHECK((a2.to_cartesian(vec({1.0 / 3, 1.0 / 3})) - vec({0.5, 0.5 / kSqrt3})).norm() <= 1e-15);
    CHECK((a2.to_cartesian(vec({2.0 / 3, 2.0 / 3})) - vec({1.0, 1.0 / kSqrt3})).norm() <= 1e-15);

    const MinimizerReport c = argmin_shift_grid(make_preset("Zd", {3}), 2.0, 32, 1);
    CHECK(matches(c.minimizers, {vec({0.5, 0.5, 0.5})}, 1e-9));

    CHECK(z.resolution == doctest::Approx(1.0 / (64 * 16)));
    for (const Vector& m : a.minimizers)
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            CHECK(m[i] >= 0.0);
            CHECK(m[i] < 1.0);
        }
    CHECK_THROWS(argmin_shift_grid(make_preset("Zd", {2}), 1.0, 4, 1));
}

TEST_CASE("argmin agrees with brute force on random lattices at moderate alpha") {
    std::mt19937_64 rng(41);
    for (int i = 0; i < 6; ++i) {
        const BravaisLattice l = testsupport::random_unit_lattice(rng, 2);
        const double alpha = 0.7 + 0.4 * i;
        const MinimizerReport r = argmin_shift_grid(l, alpha, 64, 2);
        REQUIRE(!r.minimizers.empty());
        double best = INFINITY;
        for (int a = 0; a < 200; ++a)
            for (int b = 0; b < 200; ++b) best = std::min(best, theta(l, l.to_cartesian(vec({a / 200.0, b / 200.0})), alpha).value);
        CHECK(r.value <= best + 1e-13);
        CHECK(theta(l, l.to_cartesian(r.minimizers[0]), alpha).value == doctest::Approx(r.value).epsilon(1e-12));
    }
}

TEST_CASE("deep hole crossing") {
    const BravaisLattice z2 = make_preset("Zd", {2});
    const auto ax = deep_hole_crossing(z2, vec({0.3, 0.3}), 20.0);
    REQUIRE(ax.has_value());
    CHECK(*ax <= 20.0);
    CHECK(theta(z2, vec({0.5, 0.5}), 20.0).value <= theta(z2, vec({0.3, 0.3}), 20.0).value);
    CHECK(theta(z2, vec({0.5, 0.5}), *ax).value <= theta(z2, vec({0.3, 0.3}), *ax).value);

    const BravaisLattice a2 = make_preset("A2", {1});
    const auto aa = deep_hole_crossing(a2, vec({0.1, 0.0}), 50.0);
    REQUIRE(aa.has_value());
    for (double alpha : {*aa, 20.0, 50.0})
        CHECK(theta(a2, vec({0.5, 0.5 / kSqrt3}), alpha).value <= theta(a2, vec({0.1, 0.0}), alpha).value);

    CHECK_THROWS_AS(deep_hole_crossing(z2, vec({0.5, 0.5}), 20.0), std::invalid_argument);
    CHECK_THROWS_AS(deep_hole_crossing(z2, vec({1.5, -0.5}), 20.0), std::invalid_argument);
}

TEST_CASE("classification exemplars") {
    const ClassificationResult tri = classify_asymptotic_2d(make_preset("A2", {2 / kSqrt3}));
    CHECK(tri.case_label == AsymptoticCase::Triangular);
    CHECK(tri.C.size() == 1);
    CHECK(tri.c1_size == 6);
    CHECK(matches(tri.C, {vec({1.0 / 3, 1.0 / 3})}, 1e-12));

    const ClassificationResult sq = classify_asymptotic_2d(make_preset("Zd", {2}));
    CHECK(sq.case_label == AsymptoticCase::RhombicC1Four);
    CHECK(sq.c1_size == 4);
    CHECK(matches(sq.C, {vec({0.5, 0.5})}, 1e-12));

    const ClassificationResult rect = classify_asymptotic_2d(make_preset("Ly", {2}));
    CHECK(rect.case_label == AsymptoticCase::GenericC2Small);
    CHECK(matches(rect.C, {vec({0.5, 0.5})}, 1e-12));

    const ClassificationResult q = classify_asymptotic_2d(quarter_exemplar());
    CHECK(q.case_label == AsymptoticCase::GenericQuarter);
    CHECK(q.c1_size == 2);
    CHECK(q.canonical_x == doctest::Approx(1.2).epsilon(1e-12));
    CHECK(matches(q.C, {vec({0.5, 0.25}), vec({0.5, 0.75})}, 1e-12));
    CHECK(to_string(q.case_label) == "generic_quarter");

    // classification is a property of the lattice, not of its basis
    Matrix u(2, 2);
    u << 1, 1, 0, 1;
    const ClassificationResult q2 = classify_asymptotic_2d(BravaisLattice(quarter_exemplar().basis() * u));
    CHECK(q2.case_label == AsymptoticCase::GenericQuarter);
    CHECK_THROWS(classify_asymptotic_2d(make_preset("Zd", {3})));
}

TEST_CASE("classification matches the small-alpha argmin") {
    struct Case {
        BravaisLattice l;
        double alpha;
    };
    for (const auto& [l, alpha] : {Case{make_preset("Zd", {2}), 0.05}, Case{make_preset("Ly", {2}), 0.05},
                                   Case{quarter_exemplar(), 0.05}}) {
        const ClassificationResult c = classify_asymptotic_2d(l);
        const MinimizerReport r = argmin_shift_grid(l, alpha, 512, 2);
        CHECK(matches(r.minimizers, c.C, 2.0 / 512));
    }
    // the triangular C holds one barycentre; the grid also finds its mirror image
    const BravaisLattice a2 = make_preset("A2", {2 / kSqrt3});
    const ClassificationResult c = classify_asymptotic_2d(a2);
    REQUIRE(c.C.size() == 1);
    const MinimizerReport r = argmin_shift_grid(a2, 0.05, 512, 2);
    Vector mirror = -c.C[0];
    for (Eigen::Index i = 0; i < mirror.size(); ++i) mirror[i] -= std::floor(mirror[i]);
    CHECK(matches(r.minimizers, {c.C[0], mirror}, 2.0 / 512));
}

TEST_CASE("the two quarter points tie and nothing else does") {
    const BravaisLattice l = quarter_exemplar();
    const MinimizerReport r = argmin_shift_grid(l, 0.05, 512, 2);
    REQUIRE(r.minimizers.size() == 2);
    CHECK(matches(r.minimizers, {vec({0.5, 0.25}), vec({0.5, 0.75})}, 1e-9));
    const double v1 = theta(l, l.to_cartesian(vec({0.5, 0.25})), 0.05).value;
    const double v2 = theta(l, l.to_cartesian(vec({0.5, 0.75})), 0.05).value;
    CHECK(std::abs(v1 - v2) <= 1e-12 * v1);
    CHECK(r.precision_digits > 16);
}

TEST_CASE("deciding layer") {
    const DecidingLayerResult z = deciding_layer_2d(make_preset("Zd", {2}), 8);
    CHECK(z.layer_index == 1);
    CHECK(matches(z.refined, {vec({0.5, 0.5})}, 1e-9));

    // grid points cluster around the two barycentres and tighten under refinement
    const DecidingLayerResult t = deciding_layer_2d(make_preset("A2", {1}), 8);
    const std::vector<Vector> bary{vec({1.0 / 3, 1.0 / 3}), vec({2.0 / 3, 2.0 / 3})};
    REQUIRE(!t.survivor_sets.empty());
    CHECK(covers(t.survivor_sets[0], bary, 2.0 / 512));
    CHECK(covers(t.refined, bary, 2.0 / (512 * 16)));

    // On the line s = 1/2 left by the first shell, the shells at squared norms 1.69, 3.69 and 4 are constant and
    // the shell {+-(1,2)} at 5.76 contributes -2 cos(4 pi t), minimal at t in {0, 1/2}.
    const DecidingLayerResult q = deciding_layer_2d(quarter_exemplar(), 12);
    CHECK(q.layer_index == 5);
    REQUIRE(q.survivor_sets.size() >= 5);
    CHECK(q.survivor_sets[0].size() == 512);
    for (const Vector& p : q.survivor_sets[3]) CHECK(p[0] == 0.5);
    CHECK(q.survivor_sets[3].size() == 512);
    CHECK(matches(q.survivor_sets[4], {vec({0.5, 0.0}), vec({0.5, 0.5})}, 1e-12));
    CHECK(matches(q.refined, {vec({0.5, 0.0}), vec({0.5, 0.5})}, 1e-12));
    // the small-alpha argmin of the same lattice is the quarter pair, see the classification tests
}

TEST_CASE("the lattice points maximise every theta profile") {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 12; ++i) {
        const BravaisLattice l = testsupport::random_unit_lattice(rng, 2);
        for (double alpha : {0.2, 1.0, 5.0}) {
            const std::vector<double> g = shift_profile_grid(l, alpha, 32);
            REQUIRE(g.size() == 32u * 32u);
            CHECK(*std::max_element(g.begin(), g.end()) == g[0]);
            // strictness below the resolution of the profile values
            for (int a = 0; a < 32; ++a)
                for (int b = 0; b < 32; ++b) {
                    if (a == 0 && b == 0) continue;
                    const Vector u = l.to_cartesian(vec({a / 32.0, b / 32.0}));
                    CHECK(theta_shift_difference(l, Vector::Zero(2), u, alpha) > 0.0);
                }
        }
    }
    const std::vector<double> g3 = shift_profile_grid(make_preset("Zd", {3}), 1.0, 8);
    CHECK(*std::max_element(g3.begin(), g3.end()) == g3[0]);
}

TEST_CASE("theta shift difference") {
    std::mt19937_64 rng(43);
    for (int i = 0; i < 10; ++i) {
        const BravaisLattice l = testsupport::random_unit_lattice(rng, 2);
        const Vector x = testsupport::random_shift(rng, l), y = testsupport::random_shift(rng, l);
        for (double alpha : {0.3, 2.0}) {
            const double d = theta_shift_difference(l, x, y, alpha);
            const ThetaResult tx = theta(l, x, alpha), ty = theta(l, y, alpha);
            CHECK(std::abs(d - (tx.value - ty.value)) <= tx.abs_error + ty.abs_error + 1e-14);
        }
    }
}

TEST_CASE("large-alpha minimizers approach the deep holes") {
    for (const BravaisLattice& l : {make_preset("A2", {1}), make_preset("Zd", {2}), make_preset("Ly", {3})}) {
        const DeepHoles h = deep_holes_2d(l);
        std::vector<Vector> want;
        for (const Vector& p : h.points) want.push_back(l.to_coords(p));
        const MinimizerReport r = argmin_shift_grid(l, 50.0, 512, 2);
        CHECK(matches(r.minimizers, want, 1e-6));
    }
    // on a generic lattice the offset from the deep hole shrinks as alpha grows
    Matrix b(2, 2);
    b << 1.0, 0.31, 0.0, 1.17;
    const BravaisLattice l(b);
    const Vector hole = l.to_coords(deep_holes_2d(l).points[0]);
    double prev = INFINITY;
    for (double alpha : {10.0, 50.0, 250.0}) {
        const MinimizerReport r = argmin_shift_grid(l, alpha, 256, 2);
        REQUIRE(!r.minimizers.empty());
        const double off = torus_dist(r.minimizers[0], hole);
        CHECK(off < prev);
        prev = off;
    }
}
