#pragma once

#include "thetalat/lattice.hpp"

#include <functional>
#include <string>

namespace thetalat {

enum class ThetaMethod { Direct, Poisson };
std::string to_string(ThetaMethod m);

struct ThetaResult {
    double value = 0.0;
    double abs_error = 0.0;
    ThetaMethod method = ThetaMethod::Direct;
    long points_summed = 0;
};

// Tail factor (2 pi g)^{d/2} exp(-d pi g + d/2) bounding the Gaussian mass outside radius sqrt(d g / alpha),
// relative to the full untranslated sum; valid for g > 1/(2 pi).
double gaussian_tail_factor(int dim, double gamma);
// Smallest gamma > 1/(2 pi) with gaussian_tail_factor(dim, gamma) <= target.
double gamma_for_tail(int dim, double target);

// theta_{L+u}(alpha) = sum_p exp(-pi alpha |p+u|^2)
ThetaResult theta_direct(const BravaisLattice& lattice, const Vector& u, double alpha, double rtol = 1e-13);
// Same value through the cosine sum over the dual lattice.
ThetaResult theta_poisson(const BravaisLattice& lattice, const Vector& u, double alpha, double rtol = 1e-13);
// Direct when alpha * lambda_min(gram) >= 1, Poisson otherwise; falls back to direct when the
// Poisson sum cancels below 100 rtol relative accuracy and the direct ball stays small.
ThetaResult theta(const BravaisLattice& lattice, const Vector& u, double alpha, double rtol = 1e-13);
ThetaResult theta(const BravaisLattice& lattice, double alpha, double rtol = 1e-13);

// theta_L(alpha) - theta_{L+u}(alpha). In the Poisson regime it is a sum of non-negative dual terms,
// so the error bound is relative to the gap itself.
ThetaResult theta_gap(const BravaisLattice& lattice, const Vector& u, double alpha, double rtol = 1e-13);

// theta_{L+u}(alpha) / theta_L(alpha); exactly 1 when u is a lattice point.
double rho(const BravaisLattice& lattice, const Vector& u, double alpha, double rtol = 1e-13);

struct RadialInteraction {
    std::function<double(double)> evaluator;  // argument is the squared distance
    double decay_exponent = 0.0;              // f(r) = O(r^{-decay_exponent}) with decay_exponent > dim/2
};

struct RadialEnergy {
    double value = 0.0;
    double tail_estimate = 0.0;
    bool converged = false;  // tail_estimate <= rtol * value
    long points_summed = 0;
};

RadialEnergy radial_energy(const BravaisLattice& lattice, const Vector& u, const RadialInteraction& f, double radius,
                           double rtol = 1e-8);

// theta_L(alpha) + delta * theta_{L+u}(alpha)
ThetaResult ho_mueller_energy(const BravaisLattice& lattice, const Vector& u, double delta, double alpha,
                              double rtol = 1e-13);

using Perturbation = std::function<Vector(const Vector&)>;

// Ratio of the Gaussian sum over {p + pert(p)} to theta_{L0}(alpha); sup_bound bounds |pert|.
double degeneracy_ratio(const BravaisLattice& base, const Perturbation& pert, double sup_bound, double alpha,
                        double rtol = 1e-12);

}  // namespace thetalat
