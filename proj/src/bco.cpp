#include "thetalat/bco.hpp"

#include <boost/math/tools/roots.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace thetalat {

namespace {

constexpr int kBinom[4][4] = {{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_positive(const char* what, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::domain_error(std::string(what) + " must be positive");
}

double bisect_root(const std::function<double(double)>& f, double lo, double hi, double tol, const char* what) {
    const double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) throw std::runtime_error(std::string(what) + ": root is not bracketed");
    auto done = [tol](double a, double b) { return std::abs(b - a) <= tol; };
    std::uintmax_t iters = 400;
    const auto r = boost::math::tools::bisect(f, lo, hi, done, iters);
    return 0.5 * (r.first + r.second);
}

namespace mp = boost::multiprecision;
using Big = mp::mpfr_float;

class PrecisionScope {
public:
    explicit PrecisionScope(unsigned digits) : saved_(Big::default_precision()) { Big::default_precision(digits); }
    ~PrecisionScope() { Big::default_precision(saved_); }
    PrecisionScope(const PrecisionScope&) = delete;
    PrecisionScope& operator=(const PrecisionScope&) = delete;

private:
    unsigned saved_;
};

// theta_i and its first two x-derivatives by the plain series, summed until terms drop below 10^-digits.
std::array<Big, 3> theta_big(JacobiKind kind, const Big& x, unsigned digits) {
    const Big pi = mp::acos(Big(-1));
    const Big eps = mp::pow(Big(10), -static_cast<int>(digits));
    std::array<Big, 3> s{Big(0), Big(0), Big(0)};
    for (long n = 0;; ++n) {
        const Big m = kind == JacobiKind::Two ? Big(n) + Big(0.5) : Big(n);
        const Big e = -pi * m * m;
        Big w = mp::exp(e * x) * (n == 0 && kind != JacobiKind::Two ? 1 : 2);
        if (kind == JacobiKind::Four && (n & 1)) w = -w;
        s[0] += w;
        s[1] += w * e;
        s[2] += w * e * e;
        if (n > 0 && mp::abs(w) * (1 + e * e) < eps * mp::abs(s[0])) break;
    }
    return s;
}

Big h_at_one_big(double alpha, unsigned digits) {
    const Big a(alpha);
    const auto t3 = theta_big(JacobiKind::Three, a, digits);
    const auto t2 = theta_big(JacobiKind::Two, a, digits);
    const Big num = a * t3[2] * t3[0] - a * t3[1] * t3[1] + t3[0] * t3[1];
    const Big den = -a * t2[2] * t2[0] + a * t2[1] * t2[1] - t2[0] * t2[1];
    return num / den;
}

Big rho_big(double t, double alpha, unsigned digits) {
    const Big x = Big(t) * Big(t) * Big(alpha);
    return theta_big(JacobiKind::Two, x, digits)[0] / theta_big(JacobiKind::Three, x, digits)[0];
}

}  // namespace

void validate(const BcoPoint& p) {
    if (!(p.y >= 1.0) || !std::isfinite(p.y)) throw std::domain_error("bco: y must be >= 1");
    check_positive("bco: t", p.t);
    check_positive("bco: alpha", p.alpha);
}

std::array<ValueWithError, 4> f_i_all(JacobiKind kind, double alpha, double y) {
    check_positive("f_i: alpha", alpha);
    check_positive("f_i: y", y);
    if (kind == JacobiKind::Four) throw std::invalid_argument("f_i: kind must be 2 or 3");
    const auto ta = jacobi_theta_all(kind, alpha * y);
    const auto tb = jacobi_theta_all(kind, alpha / y);
    // A(y) = theta(alpha y), B(y) = theta(alpha / y)
    std::array<double, 4> a{}, ae{}, b{}, be{};
    double pw = 1.0;
    for (int n = 0; n < 4; ++n) {
        a[n] = pw * ta[n].value;
        ae[n] = pw * ta[n].abs_error;
        pw *= alpha;
    }
    const double g1 = -alpha / (y * y), g2 = 2.0 * alpha / (y * y * y), g3 = -6.0 * alpha / (y * y * y * y);
    b[0] = tb[0].value;
    b[1] = tb[1].value * g1;
    b[2] = tb[2].value * g1 * g1 + tb[1].value * g2;
    b[3] = tb[3].value * g1 * g1 * g1 + 3.0 * tb[2].value * g1 * g2 + tb[1].value * g3;
    be[0] = tb[0].abs_error;
    be[1] = tb[1].abs_error * std::abs(g1);
    be[2] = tb[2].abs_error * g1 * g1 + tb[1].abs_error * std::abs(g2);
    be[3] = tb[3].abs_error * std::abs(g1 * g1 * g1) + 3.0 * tb[2].abs_error * std::abs(g1 * g2) +
            tb[1].abs_error * std::abs(g3);
    std::array<ValueWithError, 4> out;
    for (int n = 0; n < 4; ++n) {
        double v = 0.0, e = 0.0, m = 0.0;
        for (int j = 0; j <= n; ++j) {
            const double term = kBinom[n][j] * a[j] * b[n - j];
            v += term;
            m += std::abs(term);
            e += kBinom[n][j] * (std::abs(a[j]) * be[n - j] + ae[j] * std::abs(b[n - j]) + ae[j] * be[n - j]);
        }
        out[n] = {v, e + 8.0 * kEps * m};
    }
    return out;
}

double f_i(JacobiKind kind, double alpha, double y, int deriv_order) {
    if (deriv_order < 0 || deriv_order > 3) throw std::invalid_argument("f_i: deriv_order must be in [0,3]");
    return f_i_all(kind, alpha, y)[deriv_order].value;
}

double rho_t(double t, double alpha) {
    check_positive("rho_t: t", t);
    check_positive("rho_t: alpha", alpha);
    return elliptic_ratio(t * t * alpha);
}

std::array<ValueWithError, 4> e_tilde_all(const BcoPoint& p) {
    check_positive("e_tilde: y", p.y);
    check_positive("e_tilde: t", p.t);
    check_positive("e_tilde: alpha", p.alpha);
    const auto f3 = f_i_all(JacobiKind::Three, p.alpha, p.y);
    const auto f2 = f_i_all(JacobiKind::Two, p.alpha, p.y);
    const double r = rho_t(p.t, p.alpha);
    std::array<ValueWithError, 4> out;
    for (int n = 0; n < 4; ++n) {
        const double v = f3[n].value + r * f2[n].value;
        out[n] = {v, f3[n].abs_error + r * f2[n].abs_error + 1e-13 * std::abs(f2[n].value) + 4.0 * kEps * std::abs(v)};
    }
    return out;
}

double e_tilde(const BcoPoint& p, int deriv_order) {
    if (deriv_order < 0 || deriv_order > 3) throw std::invalid_argument("e_tilde: deriv_order must be in [0,3]");
    return e_tilde_all(p)[deriv_order].value;
}

double bco_energy(const BcoPoint& p) {
    const double s = jacobi_theta(JacobiKind::Three, p.t * p.t * p.alpha).value;
    return s * e_tilde(p, 0);
}

double h_alpha(double y, double alpha) {
    check_positive("h_alpha: alpha", alpha);
    if (y == 1.0) throw std::domain_error("h_alpha: y = 1 is a removable singularity, use h_alpha_at_one");
    if (!(y > 1.0)) throw std::domain_error("h_alpha: y must exceed 1");
    const double num = f_i(JacobiKind::Three, alpha, y, 0) - f_i(JacobiKind::Three, alpha, 1.0, 0);
    const double den = f_i(JacobiKind::Two, alpha, 1.0, 0) - f_i(JacobiKind::Two, alpha, y, 0);
    return num / den;
}

double h_alpha_at_one(double alpha) {
    check_positive("h_alpha: alpha", alpha);
    const auto t3 = jacobi_theta_all(JacobiKind::Three, alpha);
    const auto t2 = jacobi_theta_all(JacobiKind::Two, alpha);
    const double num = alpha * t3[2].value * t3[0].value - alpha * t3[1].value * t3[1].value + t3[0].value * t3[1].value;
    const double den = -alpha * t2[2].value * t2[0].value + alpha * t2[1].value * t2[1].value - t2[0].value * t2[1].value;
    return num / den;
}

double t0(double alpha, double tol) {
    check_positive("t0: alpha", alpha);
    const double h = h_alpha_at_one(alpha);
    if (h < 1.0 - 1e-6) return bisect_root([&](double t) { return rho_t(t, alpha) - h; }, 1e-3, 10.0, tol, "t0");
    // 1 - h_alpha(1) is of order exp(-2 pi / alpha) here, below double resolution
    const unsigned digits = 40 + static_cast<unsigned>(std::ceil(4.0 / alpha));
    PrecisionScope scope(digits);
    const Big hb = h_at_one_big(alpha, digits);
    return bisect_root([&](double t) { return static_cast<double>((rho_big(t, alpha, digits) - hb) / (1 - hb)); }, 1e-3,
                       10.0, tol, "t0");
}

double alpha1(double tol) {
    return bisect_root([](double a) { return h_alpha_at_one(a) - rho_t(1.0, a); }, 1.0, 5.0, tol, "alpha1");
}

double k_alpha(double alpha) {
    check_positive("k_alpha: alpha", alpha);
    const double r = std::sqrt(3.0);
    double k = 0.0;
    for (JacobiKind kind : {JacobiKind::Two, JacobiKind::Three}) {
        const auto u = jacobi_theta_all(kind, alpha);
        const auto v = jacobi_theta_all(kind, alpha / r);
        const double a = alpha, a2 = alpha * alpha, a3 = a2 * alpha;
        const double t0a = u[0].value, t1a = std::abs(u[1].value), t2a = u[2].value, t3a = std::abs(u[3].value);
        const double t0b = v[0].value, t1b = std::abs(v[1].value), t2b = v[2].value, t3b = std::abs(v[3].value);
        k += a3 * t3a * t0b + a3 * t0a * t3b + 3.0 * a3 * t2a * t1b + 5.0 * a2 * t1a * t1b + 3.0 * a2 * t1a * t2b +
             6.0 * a * t0a * t0b + 2.0 * a2 * t1a * t0b + 2.0 * a2 * t0a * t1b + 4.0 * a2 * t0a * t2b;
    }
    return k;
}

std::string to_string(Verdict v) { return v == Verdict::CertifiedIncreasing ? "certified_increasing" : "inconclusive"; }

Certificate certify_increasing(double alpha, double t, const CertifyOptions& opts) {
    check_positive("certify_increasing: alpha", alpha);
    check_positive("certify_increasing: t", t);
    Certificate cert;
    cert.alpha = alpha;
    cert.t = t;
    cert.k_alpha = k_alpha(alpha);
    const double K = cert.k_alpha;
    const double target = std::sqrt(3.0);
    double y = 1.0;
    for (long i = 0;; ++i) {
        if (y >= target) {
            cert.verdict = Verdict::CertifiedIncreasing;
            cert.final_y = y;
            return cert;
        }
        if (i >= opts.max_steps) {
            cert.reason = "step cap reached before sqrt(3)";
            break;
        }
        const auto e = e_tilde_all({y, t, alpha});
        cert.steps.push_back({y, e[1].value, e[2].value});
        // y = 1 is a critical point by the y <-> 1/y symmetry, so a_0 is exactly zero
        const double a = i == 0 ? 0.0 : e[1].value - opts.slack_factor * e[1].abs_error;
        const double b = e[2].value - opts.slack_factor * e[2].abs_error;
        if (a < 0.0) {
            cert.reason = "first derivative not certified non-negative";
            break;
        }
        if (!(b > 0.0)) {
            cert.reason = "second derivative not certified positive";
            break;
        }
        const double step = (b + std::sqrt(b * b + 2.0 * K * a)) / K;
        if (!(step >= opts.min_step)) {
            cert.reason = "step underflow";
            break;
        }
        y += step;
    }
    cert.verdict = Verdict::Inconclusive;
    cert.final_y = y;
    return cert;
}

GArgmin g_alpha_argmin(double alpha, double tol) {
    check_positive("g_alpha_argmin: alpha", alpha);
    auto g = [alpha](double y) { return f_i(JacobiKind::Three, alpha, y, 0) + f_i(JacobiKind::Two, alpha, y, 0); };
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 1.0, b = 3.0;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double gc = g(c), gd = g(d);
    for (int i = 0; i < 500 && b - a > tol; ++i) {
        if (gc < gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    GArgmin out;
    out.argmin = 0.5 * (a + b);
    out.g2_at_one = f_i(JacobiKind::Three, alpha, 1.0, 2) + f_i(JacobiKind::Two, alpha, 1.0, 2);
    return out;
}

FlowFamily flow_family(const std::string& name) {
    if (name == "U2") return FlowFamily::U2;
    if (name == "U3") return FlowFamily::U3;
    if (name == "U4") return FlowFamily::U4;
    if (name == "Q") return FlowFamily::Q;
    if (name == "P34") return FlowFamily::P34;
    if (name == "P23") return FlowFamily::P23;
    throw std::invalid_argument("unknown family " + name + " (expected U2, U3, U4, Q, P34, P23)");
}

std::string to_string(FlowFamily f) {
    switch (f) {
        case FlowFamily::U2: return "U2";
        case FlowFamily::U3: return "U3";
        case FlowFamily::U4: return "U4";
        case FlowFamily::Q: return "Q";
        case FlowFamily::P34: return "P34";
        default: return "P23";
    }
}

double diagonal_flow_value(const std::vector<double>& c_list, double alpha, FlowFamily which, double t) {
    double v = 1.0;
    for (double c : c_list) {
        const double x = std::pow(c, t) * alpha;
        auto th = [x](JacobiKind k) { return jacobi_theta(k, x).value; };
        switch (which) {
            case FlowFamily::U2: v *= th(JacobiKind::Two); break;
            case FlowFamily::U3: v *= th(JacobiKind::Three); break;
            case FlowFamily::U4: v *= th(JacobiKind::Four); break;
            case FlowFamily::Q: v *= th(JacobiKind::Two) / th(JacobiKind::Three); break;
            case FlowFamily::P34: v *= th(JacobiKind::Three) * th(JacobiKind::Four); break;
            case FlowFamily::P23: v *= th(JacobiKind::Two) * th(JacobiKind::Three); break;
        }
    }
    return v;
}

std::vector<std::pair<double, double>> diagonal_flow_scan(const std::vector<double>& c_list, double alpha, FlowFamily which,
                                                  const std::vector<double>& t_grid) {
    check_positive("diagonal_flow_scan: alpha", alpha);
    if (c_list.empty()) throw std::invalid_argument("diagonal_flow_scan: empty c_list");
    double prod = 1.0;
    bool all_one = true;
    for (double c : c_list) {
        check_positive("diagonal_flow_scan: c_i", c);
        prod *= c;
        all_one = all_one && std::abs(c - 1.0) <= 1e-12;
    }
    if (std::abs(prod - 1.0) > 1e-12) throw std::invalid_argument("diagonal_flow_scan: the c_i must have product 1");
    if (all_one) throw std::invalid_argument("diagonal_flow_scan: the c_i must not all equal 1");
    std::vector<std::pair<double, double>> out;
    out.reserve(t_grid.size());
    for (double t : t_grid) out.emplace_back(t, diagonal_flow_value(c_list, alpha, which, t));
    return out;
}

}  // namespace thetalat
