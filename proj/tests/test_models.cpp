#include <doctest.h>

#include <cmath>

#include <stdexcept>

#include "lsn/models.hpp"
#include "lsn/rng.hpp"

using namespace lsn;
using ad::Axis;
using ad::DerivSet;
using ad::Partial;
using ad::Tape;
using ad::Var;

namespace {
// interior residual of a closed-form solution, evaluated through the jet engine
double oracle_residual_worst(const PdeModel& m, int n) {
    Tape tape(m.required_partials());
    double worst = 0.0;
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
            const double x =
                m.domain.x_min + (m.domain.x_max - m.domain.x_min) * i / double(n + 1);
            const double t = m.domain.t_max * j / double(n + 1);
            tape.reset();
            Var xj(&tape, tape.input(Axis::X, x));
            Var tj(&tape, tape.input(Axis::T, t));
            Var u = [&]() -> Var {
                switch (m.kind) {
                    case ModelKind::BlackScholes:
                        return bs_exact_jet(tape, xj, tj, m.strike, m.rate, m.volatility);
                    case ModelKind::Vasicek:
                        return vasicek_exact_jet(tape, xj, tj, m.reversion, m.beta,
                                                 m.vasicek_sigma_v());
                    case ModelKind::KdVManufactured:
                        return sin(xj * 3.14159265358979323846) * exp(-tj);
                    case ModelKind::Maxwellian:
                        return 1.0 / xj;
                    default: throw std::logic_error("no oracle");
                }
            }();
            Var r = interior_residual(tape, m, u, x, t);
            worst = std::max(worst, std::abs(r.value()) / (1.0 + std::abs(u.value())));
        }
    }
    return worst;
}
}  // namespace

TEST_CASE("model catalog carries the conventional setups") {
    const auto cat = model_catalog();
    REQUIRE(cat.size() == 5);
    const PdeModel& bs = cat[0];
    CHECK(bs.kind == ModelKind::BlackScholes);
    CHECK(bs.strike == 10.0);
    CHECK(bs.domain.x_min == 0.0);
    CHECK(bs.domain.x_max == 20.0);
    CHECK(bs.domain.t_max == 1.0);
    const PdeModel& vas = cat[1];
    CHECK(vas.alpha == 0.03);
    CHECK(vas.beta == 0.08);
    CHECK(vas.gamma == -1.0);
    CHECK(vas.domain.x_max == 1.0);
    const PdeModel& mx = cat[4];
    CHECK(mx.domain.x_min == 1.0);
    CHECK(mx.domain.x_max == 2.0);
}

TEST_CASE("interior residual, constant and linear profiles") {
    const PdeModel bs = make_black_scholes(0.1, 0.2);
    Tape tape(bs.required_partials());

    // constant c: R = r c
    Var c(&tape, tape.constant(3.0));
    Var r1 = interior_residual(tape, bs, c, 5.0, 0.5);
    CHECK(r1.value() == doctest::Approx(0.1 * 3.0).epsilon(1e-15));

    // u = x: the operator annihilates linear-homogeneous profiles
    tape.reset();
    Var x(&tape, tape.input(Axis::X, 5.0));
    Var r2 = interior_residual(tape, bs, x, 5.0, 0.5);
    CHECK(std::abs(r2.value()) <= 1e-15);
}

TEST_CASE("missing partial is a usage error") {
    const PdeModel bs = make_black_scholes(0.1, 0.2);
    Tape thin(DerivSet::of({Partial::T}));
    Var c(&thin, thin.constant(1.0));
    CHECK_THROWS_AS((void)interior_residual(thin, bs, c, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("initial and boundary residuals") {
    const PdeModel bs = make_black_scholes(0.1, 0.2);
    CHECK(initial_residual(bs, std::max(15.0 - 10.0, 0.0), 15.0) == 0.0);
    CHECK(initial_residual(bs, 0.0, 15.0) == -5.0);
    CHECK(boundary_residual(bs, 0.0, 0.0, 0.7) == 0.0);
    const double psi = bs_exact(20.0, 0.7, 10.0, 0.1, 0.2);
    CHECK(boundary_residual(bs, psi, 20.0, 0.7) == 0.0);

    const PdeModel vas = make_vasicek();
    CHECK(initial_residual(vas, 1.0, 0.3) == 0.0);
    const double bond = vasicek_exact(1.0, 0.4, 1.0, 0.08, vas.vasicek_sigma_v());
    CHECK(std::abs(boundary_residual(vas, bond, 1.0, 0.4)) <= 1e-12);
}

TEST_CASE("bs closed form") {
    CHECK(bs_exact(0.0, 0.5, 10, 0.1, 0.2) == 0.0);
    CHECK(bs_exact(15.0, 0.0, 10, 0.1, 0.2) == 5.0);
    CHECK(bs_exact(10.0, 1.0, 10, 0.1, 0.2) ==
          doctest::Approx(1.3269676584660885).epsilon(1e-12));
    CHECK_THROWS_AS((void)bs_exact(-1.0, 0.5, 10, 0.1, 0.2), std::domain_error);
    CHECK_THROWS_AS((void)bs_exact(1.0, -0.5, 10, 0.1, 0.2), std::domain_error);

    // payoff continuity as tau -> 0+
    for (double x : {5.0, 9.99, 10.01, 15.0})
        CHECK(std::abs(bs_exact(x, 1e-8, 10, 0.1, 0.2) - std::max(x - 10.0, 0.0)) <= 1e-6);
}

TEST_CASE("vasicek closed form") {
    CHECK(vasicek_exact(0.37, 0.0, 1.0, 0.08, 0.03) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(vasicek_exact(0.05, 1.0, 1.0, 0.08, 0.03) ==
          doctest::Approx(0.94086017517340002).epsilon(1e-14));
    CHECK_THROWS_AS((void)vasicek_exact(0.05, 1.0, 0.0, 0.08, 0.03), std::domain_error);
}

TEST_CASE("oracle residual property on interior grids") {
    CHECK(oracle_residual_worst(make_black_scholes(0.1, 0.2), 30) <= 1e-7);
    CHECK(oracle_residual_worst(make_vasicek(), 30) <= 1e-7);
    CHECK(oracle_residual_worst(make_kdv(true), 20) <= 1e-7);
    CHECK(oracle_residual_worst(make_maxwellian(), 20) <= 1e-7);
}

TEST_CASE("vasicek oracle residual at random points stays below 1e-8") {
    const PdeModel vas = make_vasicek();
    Tape tape(vas.required_partials());
    Rng rng(31);
    for (int i = 0; i < 100; ++i) {
        const double x = rng.uniform(0.01, 0.99), t = rng.uniform(0.01, 1.0);
        tape.reset();
        Var xj(&tape, tape.input(Axis::X, x));
        Var tj(&tape, tape.input(Axis::T, t));
        Var u = vasicek_exact_jet(tape, xj, tj, vas.reversion, vas.beta, vas.vasicek_sigma_v());
        Var r = interior_residual(tape, vas, u, x, t);
        CHECK(std::abs(r.value()) <= 1e-8);
    }
}

TEST_CASE("kdv residual examples") {
    const PdeModel kdv = make_kdv(false);
    Tape tape(kdv.required_partials());
    // constants solve KdV
    Var c(&tape, tape.constant(2.5));
    CHECK(interior_residual(tape, kdv, c, 0.3, 0.4).value() == 0.0);
    // u = x: residual -x
    tape.reset();
    Var x(&tape, tape.input(Axis::X, 0.5));
    CHECK(interior_residual(tape, kdv, x, 0.5, 0.2).value() == doctest::Approx(-0.5));
}

TEST_CASE("manufactured kdv source is consistent with its antiderivative") {
    Rng rng(8);
    for (int i = 0; i < 50; ++i) {
        const double x = rng.uniform(0.0, 1.0), t = rng.uniform(0.0, 1.0);
        const double h = 1e-6;
        const double fd =
            (kdv_source_antiderivative(x + h, t) - kdv_source_antiderivative(x - h, t)) / (2 * h);
        CHECK(std::abs(fd - kdv_source(x, t)) <= 1e-5);
    }
}

TEST_CASE("kdv derivative boundary condition") {
    // the third-order operator carries a u_x datum on the low-x edge
    const PdeModel kdv = make_kdv(true);
    CHECK(kdv.boundary_needs_derivative(0.0));
    CHECK(!kdv.boundary_needs_derivative(1.0));
    CHECK(kdv.boundary_derivative_datum(0.0, 0.0) ==
          doctest::Approx(3.14159265358979323846).epsilon(1e-15));
    CHECK(kdv.boundary_derivative_datum(0.0, 1.0) ==
          doctest::Approx(3.14159265358979323846 * std::exp(-1.0)).epsilon(1e-14));
    CHECK(!make_kdv(false).boundary_needs_derivative(0.0));
    CHECK(!make_black_scholes(0.1, 0.2).boundary_needs_derivative(0.0));
    CHECK_THROWS_AS((void)kdv.boundary_derivative_datum(1.0, 0.5), std::logic_error);
}

TEST_CASE("maxwellian steady solution") {
    const PdeModel mx = make_maxwellian();
    CHECK(mx.exact(1.5, 0.7) == doctest::Approx(1.0 / 1.5));
    CHECK(mx.initial_datum(1.25) == doctest::Approx(0.8));
    CHECK(mx.boundary_datum(2.0, 0.3) == doctest::Approx(0.5));
}
