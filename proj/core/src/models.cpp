#include "lsn/models.hpp"

#include <cmath>
#include <stdexcept>

#include "lsn/special.hpp"

namespace lsn {

namespace {
constexpr double kPi = 3.14159265358979323846264338;

void require(bool cond, const char* what) {
    if (!cond) throw std::invalid_argument(what);
}
}  // namespace

std::string PdeModel::name() const {
    switch (kind) {
        case ModelKind::BlackScholes: return "black_scholes";
        case ModelKind::Vasicek: return "vasicek";
        case ModelKind::KdV: return "kdv";
        case ModelKind::KdVManufactured: return "kdv_manufactured";
        case ModelKind::Maxwellian: return "maxwellian";
    }
    return "?";
}

bool PdeModel::is_linear() const {
    return kind == ModelKind::BlackScholes || kind == ModelKind::Vasicek;
}

bool PdeModel::has_oracle() const { return kind != ModelKind::KdV; }

double PdeModel::coeff_sigma(double x) const {
    switch (kind) {
        case ModelKind::BlackScholes: return volatility * x;
        case ModelKind::Vasicek: return vasicek_sigma_v();
        default: throw std::logic_error("coeff_sigma: not a linear parabolic model");
    }
}

double PdeModel::coeff_mu(double x) const {
    switch (kind) {
        case ModelKind::BlackScholes: return rate * x;
        case ModelKind::Vasicek: return reversion * (beta - x);
        default: throw std::logic_error("coeff_mu: not a linear parabolic model");
    }
}

double PdeModel::coeff_upsilon(double x) const {
    switch (kind) {
        case ModelKind::BlackScholes: return -rate;
        case ModelKind::Vasicek: return gamma * x;
        default: throw std::logic_error("coeff_upsilon: not a linear parabolic model");
    }
}

double PdeModel::vasicek_sigma_v() const { return std::sqrt(2.0 * alpha); }

double PdeModel::exact(double x, double t) const {
    switch (kind) {
        case ModelKind::BlackScholes: return bs_exact(x, t, strike, rate, volatility);
        case ModelKind::Vasicek: return vasicek_exact(x, t, reversion, beta, vasicek_sigma_v());
        case ModelKind::KdVManufactured: return std::sin(kPi * x) * std::exp(-t);
        case ModelKind::Maxwellian: return 1.0 / x;
        case ModelKind::KdV: break;
    }
    throw std::logic_error("exact: model has no reference solution");
}

double PdeModel::initial_datum(double x) const {
    switch (kind) {
        case ModelKind::BlackScholes: return std::max(x - strike, 0.0);
        case ModelKind::Vasicek: return 1.0;
        case ModelKind::KdV: return std::sin(kPi * x);
        case ModelKind::KdVManufactured: return std::sin(kPi * x);
        case ModelKind::Maxwellian: return 1.0 / x;
    }
    return 0.0;
}

double PdeModel::boundary_datum(double y, double t) const {
    switch (kind) {
        case ModelKind::BlackScholes:
            // the paper-given datum at x=0 is 0; the far boundary takes the
            // closed-form price
            return (y <= 0.0) ? 0.0 : bs_exact(y, t, strike, rate, volatility);
        case ModelKind::Vasicek: return vasicek_exact(y, t, reversion, beta, vasicek_sigma_v());
        case ModelKind::KdV: return 0.0;  // sin(pi x) vanishes at x = 0, 1
        case ModelKind::KdVManufactured: return std::sin(kPi * y) * std::exp(-t);
        case ModelKind::Maxwellian: return 1.0 / y;
    }
    return 0.0;
}

bool PdeModel::boundary_needs_derivative(double y) const {
    return kind == ModelKind::KdVManufactured && y == domain.x_min;
}

double PdeModel::boundary_derivative_datum(double y, double t) const {
    if (!boundary_needs_derivative(y))
        throw std::logic_error("boundary_derivative_datum: no derivative condition at this edge");
    return kPi * std::cos(kPi * y) * std::exp(-t);
}

ad::DerivSet PdeModel::required_partials() const {
    using ad::Partial;
    switch (kind) {
        case ModelKind::BlackScholes:
        case ModelKind::Vasicek:
            return ad::DerivSet::of({Partial::T, Partial::X, Partial::XX});
        case ModelKind::KdV:
        case ModelKind::KdVManufactured:
            return ad::DerivSet::of({Partial::T, Partial::X, Partial::XX, Partial::XXX});
        case ModelKind::Maxwellian:
            return ad::DerivSet::of({Partial::T, Partial::X, Partial::XT});
    }
    return ad::DerivSet::none();
}

PdeModel make_black_scholes(double rate, double volatility, double strike, Domain domain) {
    require(domain.x_min < domain.x_max && domain.t_max > 0, "domain: x_min < x_max, t_max > 0");
    PdeModel m;
    m.kind = ModelKind::BlackScholes;
    m.domain = domain;
    m.strike = strike;
    m.rate = rate;
    m.volatility = volatility;
    return m;
}

PdeModel make_vasicek(double alpha, double beta, double gamma, double reversion, Domain domain) {
    require(reversion > 0, "vasicek: reversion speed must be positive");
    PdeModel m;
    m.kind = ModelKind::Vasicek;
    m.domain = domain;
    m.alpha = alpha;
    m.beta = beta;
    m.gamma = gamma;
    m.reversion = reversion;
    return m;
}

PdeModel make_kdv(bool manufactured, Domain domain) {
    PdeModel m;
    m.kind = manufactured ? ModelKind::KdVManufactured : ModelKind::KdV;
    m.domain = domain;
    return m;
}

PdeModel make_maxwellian(Domain domain) {
    require(domain.x_min > 0, "maxwellian: domain must avoid x = 0");
    PdeModel m;
    m.kind = ModelKind::Maxwellian;
    m.domain = domain;
    return m;
}

std::vector<PdeModel> model_catalog() {
    return {make_black_scholes(0.1, 0.2), make_vasicek(), make_kdv(false), make_kdv(true),
            make_maxwellian()};
}

// ---------------------------------------------------------------------------
// Residuals
// ---------------------------------------------------------------------------

ad::Var interior_residual(ad::Tape& tape, const PdeModel& model, ad::Var u, double x, double t) {
    if (!tape.spec().contains(model.required_partials()))
        throw std::invalid_argument("interior_residual: tape lacks a required partial");

    switch (model.kind) {
        case ModelKind::BlackScholes:
        case ModelKind::Vasicek: {
            const double s = model.coeff_sigma(x);
            const double half_s2 = 0.5 * s * s;
            const double mu = model.coeff_mu(x);
            const double up = model.coeff_upsilon(x);
            return u.slot_t() - (u.slot_xx() * half_s2 + u.slot_x() * mu + u.slot_v() * up);
        }
        case ModelKind::KdV:
            return u.slot_t() - u.slot_xxx() - u.slot_v() * u.slot_x();
        case ModelKind::KdVManufactured:
            return u.slot_t() - u.slot_xxx() - u.slot_v() * u.slot_x() - kdv_source(x, t);
        case ModelKind::Maxwellian:
            return u.slot_xt() + u.slot_x() + square(u.slot_v());
    }
    throw std::logic_error("interior_residual: unhandled model");
}

double initial_residual(const PdeModel& model, double u_value, double x) {
    return u_value - model.initial_datum(x);
}

ad::Var initial_residual(ad::Tape& tape, const PdeModel& model, ad::Var u, double x) {
    (void)tape;
    return u.slot_v() - model.initial_datum(x);
}

double boundary_residual(const PdeModel& model, double u_value, double y, double t) {
    return u_value - model.boundary_datum(y, t);
}

ad::Var boundary_residual(ad::Tape& tape, const PdeModel& model, ad::Var u, double y, double t) {
    (void)tape;
    return u.slot_v() - model.boundary_datum(y, t);
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

double bs_exact(double x, double tau, double strike, double rate, double volatility) {
    if (x < 0.0 || tau < 0.0) throw std::domain_error("bs_exact: x and tau must be non-negative");
    if (x == 0.0) return 0.0;
    if (tau == 0.0) return std::max(x - strike, 0.0);
    const double sq = volatility * std::sqrt(tau);
    const double d1 = (std::log(x / strike) + (rate + 0.5 * volatility * volatility) * tau) / sq;
    const double d2 = d1 - sq;
    return x * normal_cdf(d1) - strike * std::exp(-rate * tau) * normal_cdf(d2);
}

ad::Var bs_exact_jet(ad::Tape& tape, ad::Var x, ad::Var tau, double strike, double rate,
                     double volatility) {
    (void)tape;
    ad::Var sq = sqrt(tau) * volatility;
    ad::Var d1 = (log(x / strike) + tau * (rate + 0.5 * volatility * volatility)) / sq;
    ad::Var d2 = d1 - sq;
    return x * normal_cdf(d1) - exp(tau * -rate) * normal_cdf(d2) * strike;
}

namespace {
double vasicek_A(double tau, double lam, double beta, double sv) {
    const double l2 = lam * lam, l3 = l2 * lam, s2 = sv * sv;
    return (4.0 * l2 * beta - 3.0 * s2) / (4.0 * l3) + (s2 - 2.0 * l2 * beta) / (2.0 * l2) * tau +
           (s2 - l2 * beta) / l3 * std::exp(-lam * tau) - s2 / (4.0 * l3) * std::exp(-2.0 * lam * tau);
}
}  // namespace

double vasicek_exact(double x, double tau, double reversion, double beta, double sigma_v) {
    if (!(reversion > 0.0)) throw std::domain_error("vasicek_exact: reversion must be positive");
    const double C = -(1.0 - std::exp(-reversion * tau)) / reversion;
    return std::exp(vasicek_A(tau, reversion, beta, sigma_v) + x * C);
}

ad::Var vasicek_exact_jet(ad::Tape& tape, ad::Var x, ad::Var tau, double reversion, double beta,
                          double sigma_v) {
    if (!(reversion > 0.0)) throw std::domain_error("vasicek_exact_jet: reversion must be positive");
    const double lam = reversion, l2 = lam * lam, l3 = l2 * lam, s2 = sigma_v * sigma_v;
    ad::Var e1 = exp(tau * -lam);
    ad::Var e2 = e1 * e1;
    ad::Var A = tau * ((s2 - 2.0 * l2 * beta) / (2.0 * l2)) + e1 * ((s2 - l2 * beta) / l3) +
                e2 * (-s2 / (4.0 * l3)) + (4.0 * l2 * beta - 3.0 * s2) / (4.0 * l3);
    ad::Var C = (e1 - 1.0) * (1.0 / lam);
    (void)tape;
    return exp(A + x * C);
}

double kdv_source(double x, double t) {
    const double et = std::exp(-t);
    return et * (-std::sin(kPi * x) + kPi * kPi * kPi * std::cos(kPi * x)) -
           0.5 * kPi * std::sin(2.0 * kPi * x) * et * et;
}

double kdv_source_antiderivative(double x, double t) {
    const double et = std::exp(-t);
    return et * ((std::cos(kPi * x) - 1.0) / kPi + kPi * kPi * std::sin(kPi * x)) +
           et * et * (std::cos(2.0 * kPi * x) - 1.0) * 0.25;
}

ad::Var kdv_source_antiderivative_jet(ad::Tape& tape, ad::Var x, ad::Var t) {
    (void)tape;
    ad::Var et = exp(-t);
    return et * ((cos(x * kPi) - 1.0) * (1.0 / kPi) + sin(x * kPi) * (kPi * kPi)) +
           et * et * (cos(x * (2.0 * kPi)) - 1.0) * 0.25;
}

}  // namespace lsn
