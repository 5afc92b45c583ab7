#pragma once

#include "thetalat/jacobi.hpp"

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace thetalat {

// Parameters of the body-centred-orthorhombic lattice L_{y,t} at Gaussian parameter alpha.
struct BcoPoint {
    double y = 1.0;
    double t = 1.0;
    double alpha = 1.0;
};
void validate(const BcoPoint& p);

struct ValueWithError {
    double value = 0.0;
    double abs_error = 0.0;
};

// f_i(y) = theta_i(alpha y) theta_i(alpha / y) and its y-derivatives of orders 0..3.
std::array<ValueWithError, 4> f_i_all(JacobiKind kind, double alpha, double y);
double f_i(JacobiKind kind, double alpha, double y, int deriv_order);

// rho_{t,alpha} = theta_2(t^2 alpha) / theta_3(t^2 alpha)
double rho_t(double t, double alpha);

// Reduced energy f_3 + rho_{t,alpha} f_2 and its y-derivatives of orders 0..3.
std::array<ValueWithError, 4> e_tilde_all(const BcoPoint& p);
double e_tilde(const BcoPoint& p, int deriv_order);

// theta of L_{y,t} at alpha: theta_3(t^2 alpha) times the reduced energy.
double bco_energy(const BcoPoint& p);

// (f_3(y) - f_3(1)) / (f_2(1) - f_2(y)) for y > 1.
double h_alpha(double y, double alpha);
// Limit of h_alpha as y -> 1, from second derivatives at 1.
double h_alpha_at_one(double alpha);

// Root of t -> rho_{t,alpha} - h_alpha(1) in [1e-3, 10].
double t0(double alpha, double tol = 1e-12);
// Root of alpha -> h_alpha(1) - rho_{1,alpha} in [1, 5].
double alpha1(double tol = 1e-10);

// Bound on |third y-derivative of the reduced energy| over [1, sqrt 3].
double k_alpha(double alpha);

struct CertificateStep {
    double y = 0.0;
    double a = 0.0;  // first derivative at y
    double b = 0.0;  // second derivative at y
};

enum class Verdict { CertifiedIncreasing, Inconclusive };
std::string to_string(Verdict v);

struct Certificate {
    double alpha = 0.0;
    double t = 0.0;
    std::vector<CertificateStep> steps;
    Verdict verdict = Verdict::Inconclusive;
    double k_alpha = 0.0;
    double final_y = 1.0;
    std::string reason;
};

struct CertifyOptions {
    double slack_factor = 10.0;   // a and b are lowered by this multiple of their evaluation error
    double min_step = 1e-12;      // smaller steps are treated as stalling
    long max_steps = 200000;
};

Certificate certify_increasing(double alpha, double t, const CertifyOptions& opts = {});

struct GArgmin {
    double argmin = 0.0;
    double g2_at_one = 0.0;  // second derivative of f_3 + f_2 at y = 1
};
// Golden-section minimization of f_3 + f_2 over y in [1, 3].
GArgmin g_alpha_argmin(double alpha, double tol = 1e-9);

enum class FlowFamily { U2, U3, U4, Q, P34, P23 };
FlowFamily flow_family(const std::string& name);
std::string to_string(FlowFamily f);

// Products over i of theta functions at c_i^t alpha; the c_i have product 1 and are not all 1.
std::vector<std::pair<double, double>> diagonal_flow_scan(const std::vector<double>& c_list, double alpha, FlowFamily which,
                                                  const std::vector<double>& t_grid);
double diagonal_flow_value(const std::vector<double>& c_list, double alpha, FlowFamily which, double t);

}  // namespace thetalat
