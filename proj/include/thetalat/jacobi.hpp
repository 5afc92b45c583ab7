#pragma once

#include <array>

namespace thetalat {

enum class JacobiKind { Two = 2, Three = 3, Four = 4 };

// Accepts 2, 3 or 4; anything else throws std::invalid_argument.
JacobiKind jacobi_kind(int tag);

struct SeriesValue {
    double value = 0.0;
    double abs_error = 0.0;
    int terms_used = 0;
};

inline constexpr double kDefaultRtol = 1e-13;

// theta_2(x) = sum_k exp(-pi (k+1/2)^2 x), theta_3(x) = sum_k exp(-pi k^2 x),
// theta_4(x) = sum_k (-1)^k exp(-pi k^2 x), and term-wise x-derivatives up to order 3.
SeriesValue jacobi_theta(JacobiKind kind, double x, int deriv_order = 0, double rtol = kDefaultRtol);

// Orders 0..3 in one pass; cheaper than four separate calls.
std::array<SeriesValue, 4> jacobi_theta_all(JacobiKind kind, double x, double rtol = kDefaultRtol);

// theta_2(x) / theta_3(x)
double elliptic_ratio(double x, double rtol = kDefaultRtol);

}  // namespace thetalat
