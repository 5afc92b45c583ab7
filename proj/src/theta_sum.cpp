#include "thetalat/theta_sum.hpp"

#include "thetalat/enumerate.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace thetalat {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kMaxGamma = 60.0;
constexpr double kMaxFallbackPoints = 2e7;

void check_theta_args(double alpha, double rtol) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::domain_error("theta: alpha must be positive");
    if (!(rtol > 0.0)) throw std::invalid_argument("theta: rtol must be positive");
}

// Lattice coordinates of u, shifted to the representative nearest the origin.
Vector centered_coords(const BravaisLattice& lattice, const Vector& u) {
    if (u.size() != lattice.dim()) throw std::invalid_argument("theta: shift has wrong dimension");
    Vector c = lattice.to_coords(u);
    return c - c.array().round().matrix();
}

}  // namespace

std::string to_string(ThetaMethod m) { return m == ThetaMethod::Direct ? "direct" : "poisson"; }

double gaussian_tail_factor(int dim, double gamma) {
    const double d = dim;
    return std::exp(0.5 * d * std::log(2.0 * kPi * gamma) - d * kPi * gamma + 0.5 * d);
}

double gamma_for_tail(int dim, double target) {
    double lo = 1.0 / (2.0 * kPi), hi = 1.0;
    while (gaussian_tail_factor(dim, hi) > target && hi < 1e6) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (gaussian_tail_factor(dim, mid) > target ? lo : hi) = mid;
    }
    return hi;
}

ThetaResult theta_direct(const BravaisLattice& lattice, const Vector& u, double alpha, double rtol) {
    check_theta_args(alpha, rtol);
    const int d = lattice.dim();
    const Vector w = centered_coords(lattice, u);
    const bool shifted = w.cwiseAbs().maxCoeff() > 0.0;
    double target = std::min(0.25, rtol / 2.0);
    ThetaResult res;
    res.method = ThetaMethod::Direct;
    for (int attempt = 0; attempt < 8; ++attempt) {
        const double gamma = std::min(gamma_for_tail(d, target), kMaxGamma);
        const double r2 = d * gamma / alpha;
        const PointList pl = enumerate_ball(lattice, w, r2);
        double s = 0.0;
        for (double q : pl.sq_norms) s += std::exp(-kPi * alpha * q);
        double s0 = s;
        if (shifted) {
            s0 = 0.0;
            const PointList p0 = enumerate_ball(lattice, Vector::Zero(d), r2);
            for (double q : p0.sq_norms) s0 += std::exp(-kPi * alpha * q);
        }
        // the untranslated sum is at most s0 / (1 - B) <= 2 s0 while B <= 1/2
        const double tail = gaussian_tail_factor(d, gamma) * 2.0 * s0;
        res.value = s;
        res.abs_error = tail + 2.0 * static_cast<double>(pl.size() + 1) * kEps * s;
        res.points_summed = static_cast<long>(pl.size());
        if (tail <= rtol * s || gamma >= kMaxGamma) break;
        target = gaussian_tail_factor(d, gamma) * (s > 0.0 ? 0.5 * rtol * s / tail : 1e-30);
    }
    return res;
}

ThetaResult theta_poisson(const BravaisLattice& lattice, const Vector& u, double alpha, double rtol) {
    check_theta_args(alpha, rtol);
    const int d = lattice.dim();
    const Vector c = centered_coords(lattice, u);
    const BravaisLattice dl = dual(lattice);
    const double pref = std::pow(alpha, -0.5 * d) / lattice.covolume();
    double target = std::min(0.25, rtol / 2.0);
    ThetaResult res;
    res.method = ThetaMethod::Poisson;
    for (int attempt = 0; attempt < 8; ++attempt) {
        const double gamma = std::min(gamma_for_tail(d, target), kMaxGamma);
        const double r2 = d * gamma * alpha;
        const PointList pl = enumerate_ball(dl, Vector::Zero(d), r2);
        double s = 0.0, s0 = 0.0;
        for (std::size_t i = 0; i < pl.size(); ++i) {
            const double wgt = std::exp(-kPi * pl.sq_norms[i] / alpha);
            double phase = 0.0;
            const int* m = pl.coeff(i);
            for (int k = 0; k < d; ++k) phase += m[k] * c[k];
            s += wgt * std::cos(2.0 * kPi * phase);
            s0 += wgt;
        }
        const double tail = gaussian_tail_factor(d, gamma) * 2.0 * s0;
        res.value = pref * s;
        res.abs_error = pref * (tail + 4.0 * static_cast<double>(pl.size() + 1) * kEps * s0);
        res.points_summed = static_cast<long>(pl.size());
        if (tail <= rtol * std::abs(s) || gamma >= kMaxGamma) break;
        target = gaussian_tail_factor(d, gamma) * (std::abs(s) > 0.0 ? 0.5 * rtol * std::abs(s) / tail : 1e-30);
    }
    return res;
}

ThetaResult theta(const BravaisLattice& lattice, const Vector& u, double alpha, double rtol) {
    check_theta_args(alpha, rtol);
    if (alpha * lattice.lambda_min() >= 1.0) return theta_direct(lattice, u, alpha, rtol);
    const ThetaResult p = theta_poisson(lattice, u, alpha, rtol);
    if (p.abs_error <= 100.0 * rtol * std::abs(p.value)) return p;
    // the cosine sum cancelled; the direct sum keeps relative accuracy if the ball is affordable
    const int d = lattice.dim();
    const double radius = std::sqrt(d * gamma_for_tail(d, std::min(0.25, rtol / 2.0)) / alpha);
    const double ball = std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0) * std::pow(radius + 1.0 / std::sqrt(lattice.lambda_min()), d);
    if (ball / lattice.covolume() > kMaxFallbackPoints) return p;
    return theta_direct(lattice, u, alpha, rtol);
}

ThetaResult theta_gap(const BravaisLattice& lattice, const Vector& u, double alpha, double rtol) {
    check_theta_args(alpha, rtol);
    if (alpha * lattice.lambda_min() >= 1.0) {
        const ThetaResult a = theta_direct(lattice, Vector::Zero(lattice.dim()), alpha, rtol);
        const ThetaResult b = theta_direct(lattice, u, alpha, rtol);
        return {a.value - b.value, a.abs_error + b.abs_error, ThetaMethod::Direct, a.points_summed + b.points_summed};
    }
    const int d = lattice.dim();
    const Vector c = centered_coords(lattice, u);
    const BravaisLattice dl = dual(lattice);
    const double pref = std::pow(alpha, -0.5 * d) / lattice.covolume();
    double target = std::min(0.25, rtol / 2.0);
    ThetaResult res;
    res.method = ThetaMethod::Poisson;
    for (int attempt = 0; attempt < 8; ++attempt) {
        const double gamma = std::min(gamma_for_tail(d, target), kMaxGamma);
        const PointList pl = enumerate_ball(dl, Vector::Zero(d), d * gamma * alpha);
        double s = 0.0, s0 = 0.0;
        for (std::size_t i = 0; i < pl.size(); ++i) {
            const double wgt = std::exp(-kPi * pl.sq_norms[i] / alpha);
            double phase = 0.0;
            const int* m = pl.coeff(i);
            for (int k = 0; k < d; ++k) phase += m[k] * c[k];
            const double sn = std::sin(kPi * phase);
            s += 2.0 * wgt * sn * sn;
            s0 += wgt;
        }
        // 1 - cos <= 2 on the discarded terms
        const double tail = 4.0 * gaussian_tail_factor(d, gamma) * s0;
        res.value = pref * s;
        res.abs_error = pref * (tail + 4.0 * static_cast<double>(pl.size() + 1) * kEps * s);
        res.points_summed = static_cast<long>(pl.size());
        if (tail <= rtol * s || gamma >= kMaxGamma) break;
        target = gaussian_tail_factor(d, gamma) * (s > 0.0 ? 0.5 * rtol * s / tail : 1e-300);
    }
    return res;
}

ThetaResult theta(const BravaisLattice& lattice, double alpha, double rtol) {
    return theta(lattice, Vector::Zero(lattice.dim()), alpha, rtol);
}

double rho(const BravaisLattice& lattice, const Vector& u, double alpha, double rtol) {
    if (lattice.contains(u, 1e-9)) return 1.0;
    const double num = theta(lattice, u, alpha, rtol).value;
    const double den = theta(lattice, alpha, rtol).value;
    return std::min(1.0, num / den);
}

RadialEnergy radial_energy(const BravaisLattice& lattice, const Vector& u, const RadialInteraction& f, double radius,
                           double rtol) {
    const int d = lattice.dim();
    if (!f.evaluator) throw std::invalid_argument("radial_energy: missing evaluator");
    if (!(f.decay_exponent > 0.5 * d))
        throw std::invalid_argument("radial_energy: decay exponent must exceed dim/2, the sum may diverge");
    if (!(radius > 0.0)) throw std::invalid_argument("radial_energy: radius must be positive");
    const Vector w = centered_coords(lattice, u);
    const PointList pl = enumerate_ball(lattice, w, radius * radius);
    RadialEnergy out;
    double s = 0.0;
    for (double q : pl.sq_norms) {
        const double v = f.evaluator(q);
        if (v < 0.0) throw std::invalid_argument("radial_energy: interaction must be non-negative");
        s += v;
    }
    const double omega = 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d);
    const double p = f.decay_exponent;
    out.value = s;
    out.tail_estimate = f.evaluator(radius * radius) * omega * std::pow(radius, d) / ((2.0 * p - d) * lattice.covolume());
    out.converged = out.tail_estimate <= rtol * std::abs(s) || s == 0.0;
    out.points_summed = static_cast<long>(pl.size());
    return out;
}

ThetaResult ho_mueller_energy(const BravaisLattice& lattice, const Vector& u, double delta, double alpha, double rtol) {
    if (!(delta >= -1.0 && delta <= 1.0)) throw std::invalid_argument("ho_mueller_energy: delta must lie in [-1,1]");
    const ThetaResult a = theta(lattice, alpha, rtol);
    ThetaResult out = a;
    if (delta != 0.0) {
        const ThetaResult b = theta(lattice, u, alpha, rtol);
        out.value = a.value + delta * b.value;
        out.abs_error = a.abs_error + std::abs(delta) * b.abs_error;
        out.points_summed = a.points_summed + b.points_summed;
    }
    return out;
}

double degeneracy_ratio(const BravaisLattice& base, const Perturbation& pert, double sup_bound, double alpha,
                        double rtol) {
    check_theta_args(alpha, rtol);
    if (!(sup_bound >= 0.0) || !std::isfinite(sup_bound))
        throw std::invalid_argument("degeneracy_ratio: perturbation must have a finite sup bound");
    if (!pert) throw std::invalid_argument("degeneracy_ratio: missing perturbation");
    const int d = base.dim();
    const ThetaResult ref = theta(base, alpha, rtol);
    // beyond radius R >= 2M, |p + u(p)| >= |p| (1 - M/R), so the tail is a Gaussian tail at alpha (1 - M/R)^2
    double gamma = gamma_for_tail(d, rtol / 4.0);
    double r = std::max(std::sqrt(d * gamma / alpha), 4.0 * sup_bound);
    for (int attempt = 0; attempt < 6; ++attempt) {
        const double shrink = 1.0 - sup_bound / r;
        const double alpha_t = alpha * shrink * shrink;
        const double g_t = alpha_t * r * r / d;
        const PointList pl = enumerate_ball(base, Vector::Zero(d), r * r);
        double s = 0.0, s_t = 0.0;
        for (std::size_t i = 0; i < pl.size(); ++i) {
            Vector c(d);
            for (int k = 0; k < d; ++k) c[k] = pl.coeff(i)[k];
            const Vector p = base.to_cartesian(c);
            const Vector up = pert(p);
            if (up.size() != d) throw std::invalid_argument("degeneracy_ratio: perturbation has wrong dimension");
            if (up.norm() > sup_bound * (1.0 + 1e-12)) throw std::invalid_argument("degeneracy_ratio: perturbation exceeds its declared bound");
            s += std::exp(-kPi * alpha * (p + up).squaredNorm());
            s_t += std::exp(-kPi * alpha_t * pl.sq_norms[i]);
        }
        const double tail = g_t > 1.0 / (2.0 * kPi) ? gaussian_tail_factor(d, g_t) * 2.0 * s_t : s_t;
        if (tail <= rtol * s || attempt == 5) return s / ref.value;
        r *= 1.5;
    }
    return 0.0;
}

}  // namespace thetalat
