#pragma once

#include "thetalat/lattice.hpp"

#include <vector>

namespace thetalat {

// Integer vectors c with |B (c + w)|^2 <= r2, stored flat (dim ints per point).
struct PointList {
    int dim = 0;
    std::vector<int> coeffs;
    std::vector<double> sq_norms;

    std::size_t size() const { return sq_norms.size(); }
    const int* coeff(std::size_t i) const { return coeffs.data() + i * dim; }
};

// Fincke-Pohst enumeration over the Cholesky factor of the Gram matrix.
PointList enumerate_ball(const BravaisLattice& lattice, const Vector& w, double r2);

}  // namespace thetalat
