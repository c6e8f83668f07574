#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>

#include "lsn/autodiff.hpp"
#include "lsn/models.hpp"
#include "lsn/network.hpp"

namespace lsn {

enum class LawKind { BsG2, VasicekG5, VasicekG6, KdvMass, Custom };

/// How a backward-time conservation law is evaluated against the
/// forward-time-trained network.
///
/// Literal keeps the published divergence expansion verbatim (backward-time
/// signs on the spatial operator). Consistent maps it onto the forward
/// interior residual so the model's exact solution carries zero Lie risk:
/// for Black-Scholes G2 that is the prefactor form (2B e^{-rt}/(sigma^2 x)) * R_i,
/// for the Vasicek laws the adjoint weight stays at forward time and the
/// first-order time slots enter sign-flipped.
enum class LawMode { Consistent, Literal };

/// Named scalar function of t with its analytic first derivative. The free
/// functions l(t), g(t) of the Black-Scholes G2 conservation law.
struct FreeFunc {
    std::string token = "t";
    double operator()(double t) const;
    double deriv(double t) const;

    /// Tokens: zero, one, t, t2, sin_t, cos_t.
    static FreeFunc parse(std::string_view token);
};

/// A conserved-vector pair (T^t, T^x) with its free functions/constants and
/// evaluation mode. Custom laws supply jet-expression evaluators for the two
/// vector components; the divergence is then taken through the jet engine.
struct ConservationLaw {
    LawKind kind = LawKind::BsG2;
    LawMode mode = LawMode::Consistent;
    FreeFunc l = FreeFunc::parse("t");
    FreeFunc g = FreeFunc::parse("t2");
    double coeff_a = 1.0;  // paper's script-A
    double coeff_b = 1.0;  // paper's script-B; must stay nonzero for BsG2

    using VectorBuilder =
        std::function<std::pair<ad::Var, ad::Var>(ad::Tape&, ad::Var u, ad::Var x, ad::Var t)>;
    VectorBuilder custom_vectors;
    std::string custom_name;
    ad::DerivSet custom_required = ad::DerivSet::full();

    std::string name() const;
    ad::DerivSet required_partials() const;
    /// Throws if the law cannot be evaluated against this model.
    void validate_for(const PdeModel& model) const;
};

ConservationLaw make_bs_g2(LawMode mode = LawMode::Consistent, FreeFunc l = FreeFunc::parse("t"),
                           FreeFunc g = FreeFunc::parse("t2"), double A = 1.0, double B = 1.0);
ConservationLaw make_vasicek_g5(LawMode mode = LawMode::Consistent);
ConservationLaw make_vasicek_g6(LawMode mode = LawMode::Consistent);
ConservationLaw make_kdv_mass();

/// Adjoint exponents of the Vasicek pair: nu = e^{pt+qx} with q = -gamma/lambda
/// and p = alpha q^2 - lambda beta q + lambda.
struct VasicekAdjoint {
    double p, q;
    double operator()(double x, double t) const;
};
VasicekAdjoint vasicek_adjoint(const PdeModel& model);

/// Conserved vectors, evaluated literally as published (backward-time form).
/// x <= 0 is a domain error for the Black-Scholes pair.
std::pair<double, double> conserved_vectors_bs_g2(const ad::Jet& u, double x, double t,
                                                  const PdeModel& model,
                                                  const ConservationLaw& law);
std::pair<double, double> conserved_vectors_vasicek(LawKind which, const ad::Jet& u, double x,
                                                    double t, const PdeModel& model);

/// Consistent-mode Black-Scholes weight 2B e^{-rt} / (sigma^2 x).
double lie_prefactor_bs_g2(double x, double t, const PdeModel& model, double B);

/// Lie conservation residual R_Lie = D_t T^t + D_x T^x as a tape node.
ad::Var lie_residual(ad::Tape& tape, const ConservationLaw& law, const PdeModel& model, ad::Var u,
                     double x, double t);
/// Overload reusing an already-built interior residual node (consistent modes).
ad::Var lie_residual(ad::Tape& tape, const ConservationLaw& law, const PdeModel& model, ad::Var u,
                     double x, double t, ad::Var interior);

ad::Var lie_residual_bs_g2(ad::Tape& tape, ad::Var u, double x, double t, const PdeModel& model,
                           const ConservationLaw& law);
ad::Var lie_residual_vasicek(ad::Tape& tape, LawKind which, ad::Var u, double x, double t,
                             const PdeModel& model, LawMode mode);
ad::Var lie_residual_kdv(ad::Tape& tape, ad::Var u, double x, double t, const PdeModel& model);

/// Linear representation r = c0 + c.v u + c.t u_t + ... of a residual at a
/// fixed point. Valid for the interior residual of the linear models and for
/// every built-in law on its model (the KdV nonlinearity is handled by the
/// caller). Used by the batched trainer.
struct SlotCoeffs {
    double c0 = 0, v = 0, t = 0, x = 0, xx = 0, xt = 0, xxx = 0;
    double apply(const ad::Jet& j) const {
        return c0 + v * j.v + t * j.t + x * j.x + xx * j.xx + xt * j.xt + xxx * j.xxx;
    }
};
SlotCoeffs interior_coeffs(const PdeModel& model, double x, double t);
SlotCoeffs lie_coeffs(const ConservationLaw& law, const PdeModel& model, double x, double t);

/// Sum over laws of the mean squared Lie residual over the points, as a tape
/// node: sum_law (1/N) sum_n |R_Lie|^2. Empty law list is a usage error.
ad::Var combine_laws(ad::Tape& tape, const Mlp& mlp, const PdeModel& model,
                     std::span<const ConservationLaw> laws, std::span<const Point> points);

}  // namespace lsn
