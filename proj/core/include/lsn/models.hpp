#pragma once

#include <string>
#include <vector>

#include "lsn/autodiff.hpp"

namespace lsn {

struct Point {
    double x = 0.0;
    double t = 0.0;
};

struct Domain {
    double x_min = 0.0;
    double x_max = 1.0;
    double t_max = 1.0;
    bool operator==(const Domain&) const = default;
};

enum class ModelKind {
    BlackScholes,
    Vasicek,
    KdV,              // u_t = u_xxx + u u_x, no reference solution
    KdVManufactured,  // KdV with a source chosen so u* = sin(pi x) e^{-t}
    Maxwellian,       // u_xt + u_x + u^2 = 0, steady solution 1/x on [1,2]
};

/// One PDE in forward-time form u_t = L[u], u(x,0) = phi(x), u|dOmega = psi,
/// together with its parameters and (when known) the exact solution. Models
/// are immutable value objects.
struct PdeModel {
    ModelKind kind = ModelKind::BlackScholes;
    Domain domain{};

    // Black-Scholes: strike K, rate r, volatility sigma
    double strike = 10.0, rate = 0.1, volatility = 0.2;
    // Vasicek: alpha = sigma_v^2/2, beta, gamma, mean-reversion speed
    double alpha = 0.03, beta = 0.08, gamma = -1.0, reversion = 1.0;

    std::string name() const;
    bool is_linear() const;
    bool has_oracle() const;

    /// L[u] = 1/2 sigma(x)^2 u_xx + mu(x) u_x + upsilon(x) u for linear kinds.
    double coeff_sigma(double x) const;
    double coeff_mu(double x) const;
    double coeff_upsilon(double x) const;

    double vasicek_sigma_v() const;  // sqrt(2 alpha)

    /// Exact solution in forward time (t = time remaining for the finance
    /// models). Only valid when has_oracle().
    double exact(double x, double t) const;

    double initial_datum(double x) const;
    double boundary_datum(double y, double t) const;

    /// The third-order KdV operator needs one derivative condition besides
    /// the two Dirichlet data for a determined problem; it lives on the low-x
    /// edge for this dispersion orientation.
    bool boundary_needs_derivative(double y) const;
    double boundary_derivative_datum(double y, double t) const;

    /// Partials the interior residual consumes.
    ad::DerivSet required_partials() const;
};

PdeModel make_black_scholes(double rate, double volatility, double strike = 10.0,
                            Domain domain = {0.0, 20.0, 1.0});
PdeModel make_vasicek(double alpha = 0.03, double beta = 0.08, double gamma = -1.0,
                      double reversion = 1.0, Domain domain = {0.0, 1.0, 1.0});
PdeModel make_kdv(bool manufactured = false, Domain domain = {0.0, 1.0, 1.0});
PdeModel make_maxwellian(Domain domain = {1.0, 2.0, 1.0});

/// The four preconfigured models with their conventional domains and data;
/// Black-Scholes ships with r = 0.1, sigma = 0.2 (both free in the config).
std::vector<PdeModel> model_catalog();

// ---------------------------------------------------------------------------
// Residuals (forward time): R_i = u_t - L[u] for the linear models,
// R_i = u_t - u_xxx - u u_x (- source) for KdV, R_i = u_xt + u_x + u^2 for
// the Maxwellian tails model.
// ---------------------------------------------------------------------------

ad::Var interior_residual(ad::Tape& tape, const PdeModel& model, ad::Var u, double x, double t);

double initial_residual(const PdeModel& model, double u_value, double x);
ad::Var initial_residual(ad::Tape& tape, const PdeModel& model, ad::Var u, double x);

double boundary_residual(const PdeModel& model, double u_value, double y, double t);
ad::Var boundary_residual(ad::Tape& tape, const PdeModel& model, ad::Var u, double y, double t);

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

/// European call price with time-to-expiry tau; max(x-K, 0) at tau = 0 and 0
/// at x = 0 by limit. Negative x or tau is a domain error.
double bs_exact(double x, double tau, double strike, double rate, double volatility);

/// Zero-coupon bond price exp(A(tau) + x C(tau)); reversion <= 0 is a domain
/// error. sigma_v is the short-rate diffusion, sigma_v = sqrt(2 alpha).
double vasicek_exact(double x, double tau, double reversion, double beta, double sigma_v);

/// The same closed forms evaluated through the jet engine (x strictly inside
/// the positive axis, tau > 0).
ad::Var bs_exact_jet(ad::Tape& tape, ad::Var x, ad::Var tau, double strike, double rate,
                     double volatility);
ad::Var vasicek_exact_jet(ad::Tape& tape, ad::Var x, ad::Var tau, double reversion, double beta,
                          double sigma_v);

/// Source term of the manufactured KdV problem and its x-antiderivative
/// (S with D_x S = source, used by the mass-conservation law).
double kdv_source(double x, double t);
double kdv_source_antiderivative(double x, double t);
ad::Var kdv_source_antiderivative_jet(ad::Tape& tape, ad::Var x, ad::Var t);

}  // namespace lsn
