#pragma once

#include "thetalat/lattice.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace testsupport {

using thetalat::BravaisLattice;
using thetalat::Matrix;
using thetalat::Vector;

// Identity plus a uniform perturbation; conditioned well enough for brute-force oracles.
inline Matrix random_basis(std::mt19937_64& rng, int d, double spread = 0.6) {
    std::uniform_real_distribution<double> u(-spread, spread);
    Matrix b = Matrix::Identity(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) b(i, j) += u(rng);
    if (b.determinant() < 0) b.col(0) *= -1.0;
    return b;
}

inline BravaisLattice random_unit_lattice(std::mt19937_64& rng, int d) {
    return thetalat::normalize_density(BravaisLattice(random_basis(rng, d)));
}

// Reduced 2D basis sampled from the fundamental domain |x| <= 1/2, x^2 + y^2 >= 1, y <= ymax, unit covolume.
inline BravaisLattice random_reduced_2d(std::mt19937_64& rng, double ymax = 2.0) {
    std::uniform_real_distribution<double> ux(-0.5, 0.5), uy(std::sqrt(3.0) / 2.0, ymax);
    double x = 0.0, y = 0.0;
    do {
        x = ux(rng);
        y = uy(rng);
    } while (x * x + y * y < 1.0);
    Matrix b(2, 2);
    b << 1.0, x, 0.0, y;
    return thetalat::normalize_density(BravaisLattice(b));
}

inline Vector random_shift(std::mt19937_64& rng, const BravaisLattice& l) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector c(l.dim());
    for (int i = 0; i < l.dim(); ++i) c[i] = u(rng);
    return l.to_cartesian(c);
}

// Box summation of exp(-pi alpha |B k + u|^2) over |k_i| <= K in long double.
inline long double box_theta(const BravaisLattice& l, const Vector& u, double alpha, int K) {
    const int d = l.dim();
    long double s = 0.0L;
    std::vector<int> k(d, -K);
    while (true) {
        Vector c(d);
        for (int i = 0; i < d; ++i) c[i] = k[i];
        const Vector p = l.to_cartesian(c) + u;
        s += std::exp(-static_cast<long double>(std::numbers::pi) * alpha * static_cast<long double>(p.squaredNorm()));
        int i = 0;
        while (i < d && ++k[i] > K) k[i++] = -K;
        if (i == d) break;
    }
    return s;
}

}  // namespace testsupport
