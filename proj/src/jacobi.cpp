#include "thetalat/jacobi.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace thetalat {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kSmallX = 0.2;

void check_args(double x, double rtol) {
    if (!(x > 0.0) || !std::isfinite(x))
        throw std::domain_error("jacobi_theta: x must be positive and finite, got " + std::to_string(x));
    if (!(rtol > 0.0))
        throw std::invalid_argument("jacobi_theta: rtol must be positive");
}

// Direct series for x >= kSmallX, all four derivative orders at once.
// Term k contributes c_k (-pi q_k)^n e^{-pi q_k x} with q_k = k^2 or (k+1/2)^2.
std::array<SeriesValue, 4> direct_series(JacobiKind kind, double x, double rtol) {
    std::array<double, 4> sum{};
    std::array<double, 4> mag{};
    const bool half = kind == JacobiKind::Two;
    int k = half ? 0 : 1;
    int terms = 0;
    if (!half) {
        sum[0] = 1.0;
        mag[0] = 1.0;
        terms = 1;
    }
    // Terms beyond the peak of q^3 e^{-pi q x} are decreasing in k for every order.
    const double q_peak = 3.0 / (kPi * x);
    auto q_of = [half](int j) {
        const double h = half ? j + 0.5 : static_cast<double>(j);
        return h * h;
    };
    auto term_mag = [x](double q, int n) { return std::pow(kPi * q, n) * std::exp(-kPi * q * x); };
    for (;; ++k) {
        const double q = q_of(k);
        const double e = 2.0 * std::exp(-kPi * q * x);
        const double sign = (kind == JacobiKind::Four && (k % 2 != 0)) ? -1.0 : 1.0;
        double pw = 1.0;
        for (int n = 0; n < 4; ++n) {
            const double t = sign * pw * e;
            sum[n] += t;
            mag[n] += std::abs(t);
            pw *= -kPi * q;
        }
        ++terms;
        const double qn = q_of(k + 1);
        if (qn > q_peak) {
            bool done = true;
            for (int n = 0; n < 4 && done; ++n) {
                const double next = 2.0 * term_mag(qn, n);
                if (next >= rtol * std::abs(sum[n]) && next > 0.0) done = false;
            }
            if (done) break;
        }
        if (k > 100000) throw std::runtime_error("jacobi_theta: series failed to converge");
    }
    std::array<SeriesValue, 4> out;
    const double q1 = q_of(k + 1);
    const double q2 = q_of(k + 2);
    for (int n = 0; n < 4; ++n) {
        const double a1 = 2.0 * term_mag(q1, n);
        const double a2 = 2.0 * term_mag(q2, n);
        // the ratio of successive terms decreases past the peak, so the tail is a geometric majorant
        const double r = a1 > 0.0 ? a2 / a1 : 0.0;
        const double tail = r < 1.0 ? a1 / (1.0 - r) : a1 * 1e3;
        out[n].value = sum[n];
        out[n].abs_error = tail + 4.0 * terms * kEps * mag[n];
        out[n].terms_used = terms;
    }
    return out;
}

JacobiKind modular_partner(JacobiKind kind) {
    switch (kind) {
        case JacobiKind::Two: return JacobiKind::Four;
        case JacobiKind::Four: return JacobiKind::Two;
        default: return JacobiKind::Three;
    }
}

// theta_i(x) = x^{-1/2} theta_j(1/x); derivatives by chain rule in h = 1/x and Leibniz in p = x^{-1/2}.
std::array<SeriesValue, 4> modular_series(JacobiKind kind, double x, double rtol) {
    const double h = 1.0 / x;
    const auto g = direct_series(modular_partner(kind), h, rtol);
    const double h1 = -h * h, h2 = 2.0 * h * h * h, h3 = -6.0 * h * h * h * h;
    std::array<double, 4> G{}, Ge{};
    for (int n = 0; n < 4; ++n) {
        G[n] = g[n].value;
        Ge[n] = g[n].abs_error;
    }
    // derivatives of the composed factor theta_j(1/x) in x
    const std::array<double, 4> comp{
        G[0], G[1] * h1, G[2] * h1 * h1 + G[1] * h2, G[3] * h1 * h1 * h1 + 3.0 * G[2] * h1 * h2 + G[1] * h3};
    const std::array<double, 4> comp_err{
        Ge[0], Ge[1] * std::abs(h1), Ge[2] * h1 * h1 + Ge[1] * std::abs(h2),
        Ge[3] * std::abs(h1 * h1 * h1) + 3.0 * Ge[2] * std::abs(h1 * h2) + Ge[1] * std::abs(h3)};
    const double s = 1.0 / std::sqrt(x);
    const std::array<double, 4> p{s, -0.5 * s * h, 0.75 * s * h * h, -1.875 * s * h * h * h};
    static constexpr int binom[4][4] = {{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
    std::array<SeriesValue, 4> out;
    for (int n = 0; n < 4; ++n) {
        double v = 0.0, e = 0.0, m = 0.0;
        for (int j = 0; j <= n; ++j) {
            const double t = binom[n][j] * p[n - j] * comp[j];
            v += t;
            m += std::abs(t);
            e += binom[n][j] * std::abs(p[n - j]) * comp_err[j];
        }
        out[n].value = v;
        out[n].abs_error = e + 16.0 * kEps * m;
        out[n].terms_used = g[n].terms_used;
    }
    return out;
}

}  // namespace

JacobiKind jacobi_kind(int tag) {
    switch (tag) {
        case 2: return JacobiKind::Two;
        case 3: return JacobiKind::Three;
        case 4: return JacobiKind::Four;
        default: throw std::invalid_argument("jacobi kind must be 2, 3 or 4, got " + std::to_string(tag));
    }
}

std::array<SeriesValue, 4> jacobi_theta_all(JacobiKind kind, double x, double rtol) {
    check_args(x, rtol);
    return x < kSmallX ? modular_series(kind, x, rtol) : direct_series(kind, x, rtol);
}

SeriesValue jacobi_theta(JacobiKind kind, double x, int deriv_order, double rtol) {
    if (deriv_order < 0 || deriv_order > 3)
        throw std::invalid_argument("jacobi_theta: deriv_order must be in [0,3]");
    return jacobi_theta_all(kind, x, rtol)[deriv_order];
}

double elliptic_ratio(double x, double rtol) {
    const auto t2 = jacobi_theta(JacobiKind::Two, x, 0, rtol);
    const auto t3 = jacobi_theta(JacobiKind::Three, x, 0, rtol);
    return t2.value / t3.value;
}

}  // namespace thetalat
