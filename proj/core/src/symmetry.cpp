#include "lsn/symmetry.hpp"

#include <cmath>
#include <stdexcept>

namespace lsn {

using ad::Var;

// ---------------------------------------------------------------------------
// Free functions
// ---------------------------------------------------------------------------

namespace {
struct FreeFuncEntry {
    const char* token;
    double (*f)(double);
    double (*df)(double);
};

const FreeFuncEntry kFreeFuncs[] = {
    {"zero", [](double) { return 0.0; }, [](double) { return 0.0; }},
    {"one", [](double) { return 1.0; }, [](double) { return 0.0; }},
    {"t", [](double t) { return t; }, [](double) { return 1.0; }},
    {"t2", [](double t) { return t * t; }, [](double t) { return 2.0 * t; }},
    {"sin_t", [](double t) { return std::sin(t); }, [](double t) { return std::cos(t); }},
    {"cos_t", [](double t) { return std::cos(t); }, [](double t) { return -std::sin(t); }},
};

const FreeFuncEntry& lookup(std::string_view token) {
    for (const auto& e : kFreeFuncs)
        if (token == e.token) return e;
    throw std::invalid_argument("unknown free function token: " + std::string(token));
}
}  // namespace

double FreeFunc::operator()(double t) const { return lookup(token).f(t); }
double FreeFunc::deriv(double t) const { return lookup(token).df(t); }

FreeFunc FreeFunc::parse(std::string_view token) {
    lookup(token);  // validate
    FreeFunc f;
    f.token = std::string(token);
    return f;
}

// ---------------------------------------------------------------------------
// Law plumbing
// ---------------------------------------------------------------------------

std::string ConservationLaw::name() const {
    switch (kind) {
        case LawKind::BsG2: return "bs_g2";
        case LawKind::VasicekG5: return "vasicek_g5";
        case LawKind::VasicekG6: return "vasicek_g6";
        case LawKind::KdvMass: return "kdv_mass";
        case LawKind::Custom: return custom_name.empty() ? "custom" : custom_name;
    }
    return "?";
}

ad::DerivSet ConservationLaw::required_partials() const {
    using ad::Partial;
    switch (kind) {
        case LawKind::BsG2:
            return mode == LawMode::Literal
                       ? ad::DerivSet::of({Partial::T, Partial::X, Partial::XX, Partial::XT})
                       : ad::DerivSet::of({Partial::T, Partial::X, Partial::XX});
        case LawKind::VasicekG5:
            return ad::DerivSet::of({Partial::T, Partial::X, Partial::XX, Partial::XT});
        case LawKind::VasicekG6:
            return ad::DerivSet::of({Partial::T, Partial::X, Partial::XX});
        case LawKind::KdvMass:
            return ad::DerivSet::of({Partial::T, Partial::X, Partial::XX, Partial::XXX});
        case LawKind::Custom:
            return custom_required;
    }
    return ad::DerivSet::full();
}

void ConservationLaw::validate_for(const PdeModel& model) const {
    switch (kind) {
        case LawKind::BsG2:
            if (model.kind != ModelKind::BlackScholes)
                throw std::invalid_argument("bs_g2 law requires the Black-Scholes model");
            if (coeff_b == 0.0)
                throw std::invalid_argument("bs_g2 law degenerates with B = 0");
            return;
        case LawKind::VasicekG5:
        case LawKind::VasicekG6:
            if (model.kind != ModelKind::Vasicek)
                throw std::invalid_argument("vasicek law requires the Vasicek model");
            if (model.reversion == 0.0 || model.gamma == 0.0)
                throw std::invalid_argument("vasicek law undefined for lambda = 0 or gamma = 0");
            return;
        case LawKind::KdvMass:
            if (model.kind != ModelKind::KdV && model.kind != ModelKind::KdVManufactured)
                throw std::invalid_argument("kdv_mass law requires a KdV model");
            return;
        case LawKind::Custom:
            if (!custom_vectors)
                throw std::invalid_argument("custom law has no vector evaluators");
            return;
    }
}

ConservationLaw make_bs_g2(LawMode mode, FreeFunc l, FreeFunc g, double A, double B) {
    ConservationLaw law;
    law.kind = LawKind::BsG2;
    law.mode = mode;
    law.l = std::move(l);
    law.g = std::move(g);
    law.coeff_a = A;
    law.coeff_b = B;
    return law;
}

ConservationLaw make_vasicek_g5(LawMode mode) {
    ConservationLaw law;
    law.kind = LawKind::VasicekG5;
    law.mode = mode;
    return law;
}

ConservationLaw make_vasicek_g6(LawMode mode) {
    ConservationLaw law;
    law.kind = LawKind::VasicekG6;
    law.mode = mode;
    return law;
}

ConservationLaw make_kdv_mass() {
    ConservationLaw law;
    law.kind = LawKind::KdvMass;
    law.mode = LawMode::Consistent;
    return law;
}

VasicekAdjoint vasicek_adjoint(const PdeModel& model) {
    if (model.reversion == 0.0 || model.gamma == 0.0)
        throw std::domain_error("vasicek adjoint undefined for lambda = 0 or gamma = 0");
    VasicekAdjoint adj{};
    adj.q = -model.gamma / model.reversion;
    adj.p = model.alpha * adj.q * adj.q - model.reversion * model.beta * adj.q + model.reversion;
    return adj;
}

double VasicekAdjoint::operator()(double x, double t) const { return std::exp(p * t + q * x); }

// ---------------------------------------------------------------------------
// Conserved vectors (literal, as published)
// ---------------------------------------------------------------------------

std::pair<double, double> conserved_vectors_bs_g2(const ad::Jet& u, double x, double t,
                                                  const PdeModel& model,
                                                  const ConservationLaw& law) {
    if (!(x > 0.0)) throw std::domain_error("bs_g2 vectors require x > 0");
    const double r = model.rate, s2 = model.volatility * model.volatility;
    const double A = law.coeff_a, B = law.coeff_b;
    const double ert = std::exp(-r * t);
    const double lt = law.l(t), dlt = law.l.deriv(t), gt = law.g(t);

    const double Tt = -u.x * lt + A / x + 2.0 * B * u.v * ert / (s2 * x);
    const double Tx = u.t * lt + u.v * dlt + gt - B * u.v * ert +
                      B * (u.x + 2.0 * r * u.v / (s2 * x)) * x * ert;
    return {Tt, Tx};
}

std::pair<double, double> conserved_vectors_vasicek(LawKind which, const ad::Jet& u, double x,
                                                    double t, const PdeModel& model) {
    const VasicekAdjoint adj = vasicek_adjoint(model);
    const double nu = adj(x, t);
    const double nux = adj.q * nu;
    const double al = model.alpha, lam = model.reversion, be = model.beta, ga = model.gamma;

    if (which == LawKind::VasicekG6) {
        const double Tt = u.v * nu;
        const double Tx = al * u.x * nu - u.v * (lam * (x - be) * nu + al * nux);
        return {Tt, Tx};
    }
    if (which == LawKind::VasicekG5) {
        const double w = std::exp(-lam * t) / (ga * lam);
        const double Tt = w * nu * (lam * u.x - ga * u.v);
        const double Tx = w * (ga * u.v * (al * nux - be * lam * nu) -
                               al * u.x * (ga * nu + lam * nux) - lam * u.t * nu);
        return {Tt, Tx};
    }
    throw std::invalid_argument("conserved_vectors_vasicek: not a vasicek law");
}

double lie_prefactor_bs_g2(double x, double t, const PdeModel& model, double B) {
    if (!(x > 0.0)) throw std::domain_error("bs_g2 prefactor requires x > 0");
    const double s2 = model.volatility * model.volatility;
    return 2.0 * B * std::exp(-model.rate * t) / (s2 * x);
}

// ---------------------------------------------------------------------------
// Linear slot representations
// ---------------------------------------------------------------------------

SlotCoeffs interior_coeffs(const PdeModel& model, double x, double t) {
    SlotCoeffs c;
    switch (model.kind) {
        case ModelKind::BlackScholes:
        case ModelKind::Vasicek: {
            const double s = model.coeff_sigma(x);
            c.t = 1.0;
            c.xx = -0.5 * s * s;
            c.x = -model.coeff_mu(x);
            c.v = -model.coeff_upsilon(x);
            return c;
        }
        case ModelKind::KdV:
        case ModelKind::KdVManufactured:
            // linear part only; the caller adds -u u_x
            c.t = 1.0;
            c.xxx = -1.0;
            if (model.kind == ModelKind::KdVManufactured) c.c0 = -kdv_source(x, t);
            return c;
        case ModelKind::Maxwellian:
            // linear part only; the caller adds u^2
            c.xt = 1.0;
            c.x = 1.0;
            return c;
    }
    throw std::logic_error("interior_coeffs: unhandled model");
}

namespace {

SlotCoeffs bs_g2_literal_coeffs(const ConservationLaw& law, const PdeModel& model, double x,
                                double t) {
    if (!(x > 0.0)) throw std::domain_error("bs_g2 law requires x > 0");
    const double r = model.rate, s2 = model.volatility * model.volatility;
    const double B = law.coeff_b;
    const double e = std::exp(-r * t);
    const double lt = law.l(t), dlt = law.l.deriv(t);

    SlotCoeffs c;
    // D_t T^t terms
    c.xt += -lt;
    c.x += -dlt;
    c.t += 2.0 * B * e / (s2 * x);
    c.v += -2.0 * r * B * e / (s2 * x);
    // D_x T^x terms
    c.xt += lt;
    c.x += dlt;
    c.x += -B * e;
    c.xx += B * x * e;
    c.x += 2.0 * r * B * e / s2;
    c.v += -2.0 * r * B * e / (s2 * x);
    c.x += B * e;
    c.v += 2.0 * r * B * e / (s2 * x);
    return c;
}

SlotCoeffs vasicek_literal_coeffs(LawKind which, const PdeModel& model, double x, double t) {
    const VasicekAdjoint adj = vasicek_adjoint(model);
    const double nu = adj(x, t);
    const double p = adj.p, q = adj.q;
    const double al = model.alpha, lam = model.reversion, be = model.beta, ga = model.gamma;

    SlotCoeffs c;
    if (which == LawKind::VasicekG6) {
        const double drift = lam * (x - be) + al * q;
        c.t = nu;
        c.v = nu * p - q * nu * drift - nu * lam;
        c.x = q * nu * al - nu * drift;
        c.xx = nu * al;
        return c;
    }
    // G5; every coefficient cancels analytically for the exact adjoint, the
    // expansion is kept term by term
    const double w = std::exp(-lam * t) * nu / (ga * lam);
    c.x += w * (p - lam) * lam;
    c.v += -w * (p - lam) * ga;
    c.xt += w * lam;
    c.t += -w * ga;
    c.v += w * q * ga * (al * q - be * lam);
    c.x += -w * q * al * (ga + lam * q);
    c.t += -w * q * lam;
    c.x += w * ga * (al * q - be * lam);
    c.xx += -w * al * (ga + lam * q);
    c.xt += -w * lam;
    return c;
}

}  // namespace

SlotCoeffs lie_coeffs(const ConservationLaw& law, const PdeModel& model, double x, double t) {
    law.validate_for(model);
    switch (law.kind) {
        case LawKind::BsG2: {
            if (law.mode == LawMode::Literal) return bs_g2_literal_coeffs(law, model, x, t);
            const double pref = lie_prefactor_bs_g2(x, t, model, law.coeff_b);
            SlotCoeffs c = interior_coeffs(model, x, t);
            c.c0 *= pref; c.v *= pref; c.t *= pref; c.x *= pref;
            c.xx *= pref; c.xt *= pref; c.xxx *= pref;
            return c;
        }
        case LawKind::VasicekG5:
        case LawKind::VasicekG6: {
            SlotCoeffs c = vasicek_literal_coeffs(law.kind, model, x, t);
            if (law.mode == LawMode::Consistent) {
                // forward-time convention: first-order time slots flip sign
                c.t = -c.t;
                c.xt = -c.xt;
            }
            return c;
        }
        case LawKind::KdvMass:
            // algebraically identical to the interior residual; linear part here
            return interior_coeffs(model, x, t);
        case LawKind::Custom:
            throw std::invalid_argument("custom laws have no linear slot representation");
    }
    throw std::logic_error("lie_coeffs: unhandled law");
}

// ---------------------------------------------------------------------------
// Residual nodes
// ---------------------------------------------------------------------------

ad::Var lie_residual_bs_g2(ad::Tape& tape, Var u, double x, double t, const PdeModel& model,
                           const ConservationLaw& law) {
    if (!(x > 0.0)) throw std::domain_error("bs_g2 law requires x > 0");
    if (!tape.spec().contains(law.required_partials()))
        throw std::invalid_argument("lie_residual_bs_g2: tape lacks a required partial");

    if (law.mode == LawMode::Consistent) {
        Var ri = interior_residual(tape, model, u, x, t);
        return ri * lie_prefactor_bs_g2(x, t, model, law.coeff_b);
    }

    // Literal divergence, the two expansions kept term by term.
    const double r = model.rate, s2 = model.volatility * model.volatility;
    const double B = law.coeff_b;
    const double e = std::exp(-r * t);
    const double lt = law.l(t), dlt = law.l.deriv(t);

    Var ut = u.slot_t(), ux = u.slot_x(), uxx = u.slot_xx(), uxt = u.slot_xt(), uv = u.slot_v();
    Var dt_term = -uxt * lt - ux * dlt + ut * (2.0 * B * e / (s2 * x)) -
                  uv * (2.0 * r * B * e / (s2 * x));
    Var dx_term = uxt * lt + ux * dlt - ux * (B * e) +
                  (uxx + ux * (2.0 * r / (s2 * x)) - uv * (2.0 * r / (s2 * x * x))) * (B * x * e) +
                  (ux + uv * (2.0 * r / (s2 * x))) * (B * e);
    return dt_term + dx_term;
}

ad::Var lie_residual_vasicek(ad::Tape& tape, LawKind which, Var u, double x, double t,
                             const PdeModel& model, LawMode mode) {
    ConservationLaw law;
    law.kind = which;
    law.mode = mode;
    law.validate_for(model);
    if (!tape.spec().contains(law.required_partials()))
        throw std::invalid_argument("lie_residual_vasicek: tape lacks a required partial");

    const SlotCoeffs c = lie_coeffs(law, model, x, t);
    Var r = u.slot_v() * c.v + u.slot_t() * c.t + u.slot_x() * c.x + u.slot_xx() * c.xx;
    if (which == LawKind::VasicekG5) r = r + u.slot_xt() * c.xt;
    return r;
}

ad::Var lie_residual_kdv(ad::Tape& tape, Var u, double x, double t, const PdeModel& model) {
    using ad::Partial;
    if (!tape.spec().contains(
            ad::DerivSet::of({Partial::T, Partial::X, Partial::XX, Partial::XXX})))
        throw std::invalid_argument("lie_residual_kdv: tape lacks a required partial");

    // divergence route: T^t = u, T^x = -u_xx - u^2/2 (- S for the forced problem)
    Var ux_germ = shift_x(u);
    Var uxx_germ = shift_x(ux_germ);
    Var Tx = -uxx_germ - square(u) * 0.5;
    if (model.kind == ModelKind::KdVManufactured) {
        Var xj = Var(&tape, tape.input(ad::Axis::X, x));
        Var tj = Var(&tape, tape.input(ad::Axis::T, t));
        Tx = Tx - kdv_source_antiderivative_jet(tape, xj, tj);
    }
    return u.slot_t() + Tx.slot_x();
}

ad::Var lie_residual(ad::Tape& tape, const ConservationLaw& law, const PdeModel& model, Var u,
                     double x, double t) {
    law.validate_for(model);
    switch (law.kind) {
        case LawKind::BsG2:
            return lie_residual_bs_g2(tape, u, x, t, model, law);
        case LawKind::VasicekG5:
        case LawKind::VasicekG6:
            return lie_residual_vasicek(tape, law.kind, u, x, t, model, law.mode);
        case LawKind::KdvMass:
            return lie_residual_kdv(tape, u, x, t, model);
        case LawKind::Custom: {
            Var xj = Var(&tape, tape.input(ad::Axis::X, x));
            Var tj = Var(&tape, tape.input(ad::Axis::T, t));
            auto [Tt, Tx] = law.custom_vectors(tape, u, xj, tj);
            return Tt.slot_t() + Tx.slot_x();
        }
    }
    throw std::logic_error("lie_residual: unhandled law");
}

ad::Var lie_residual(ad::Tape& tape, const ConservationLaw& law, const PdeModel& model, Var u,
                     double x, double t, ad::Var interior) {
    if (law.kind == LawKind::BsG2 && law.mode == LawMode::Consistent)
        return interior * lie_prefactor_bs_g2(x, t, model, law.coeff_b);
    return lie_residual(tape, law, model, u, x, t);
}

ad::Var combine_laws(ad::Tape& tape, const Mlp& mlp, const PdeModel& model,
                     std::span<const ConservationLaw> laws, std::span<const Point> points) {
    if (laws.empty()) throw std::invalid_argument("combine_laws: need at least one law");
    if (points.empty()) throw std::invalid_argument("combine_laws: need at least one point");

    Var total;
    bool first_law = true;
    for (const ConservationLaw& law : laws) {
        law.validate_for(model);
        Var acc;
        bool first = true;
        for (const Point& pt : points) {
            Var u = mlp.forward_jet(tape, pt.x, pt.t);
            Var r = lie_residual(tape, law, model, u, pt.x, pt.t);
            Var sq = square(r);
            acc = first ? sq : acc + sq;
            first = false;
        }
        Var risk = acc * (1.0 / static_cast<double>(points.size()));
        total = first_law ? risk : total + risk;
        first_law = false;
    }
    return total;
}

}  // namespace lsn
