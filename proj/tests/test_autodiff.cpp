#include <doctest.h>

#include <cmath>
#include <vector>

#include "lsn/autodiff.hpp"
#include "lsn/rng.hpp"
#include "lsn/special.hpp"

using namespace lsn;
using ad::Axis;
using ad::DerivSet;
using ad::Partial;
using ad::Slot;
using ad::Tape;
using ad::Var;

namespace {

struct JetBatteryCase {
    const char* name;
    double x, t;
    double slots[6];  // u, u_t, u_x, u_xx, u_xt, u_xxx
};

#include "jet_battery_table.inc"

Var build_case(Tape& tape, int idx, Var x, Var t) {
    switch (idx) {
        case 0: return x * x * x + x * x * t * 2.0 - t + 1.0;
        case 1: return x * t;
        case 2: return (x * x * x) / x;
        case 3: return tanh(x);
        case 4: return tanh(exp(x));
        case 5: return exp(x * t);
        case 6: return x * sin(t);
        case 7: return log(1.0 + x * x);
        case 8: return sin(x) * cos(t);
        case 9: return normal_cdf(x - t);
        case 10: return pow(x, 2.5);
        case 11: return 1.0 / (x + t);
        case 12: return exp(-(x * x) * 0.5) * cos(t * 3.0);
        case 13: return tanh(x * t + x * x);
        case 14: return log(x) * exp(t);
        case 15: return normal_cdf(x) * x - exp(-t) * normal_cdf(x - 1.0);
        case 16: return (x * x + t) / (1.0 + x * t);
        case 17: return sin(x * x) * t + cos(x);
        case 18: return pow(1.0 + x * x + t * t, -1.5);
        case 19: return x * normal_cdf(log(x) + t);
        default: FAIL("bad case index"); return x;
    }
}

}  // namespace

TEST_CASE("deriv set closure") {
    const DerivSet xt = DerivSet::of({Partial::XT});
    CHECK(xt.has(Partial::X));
    CHECK(xt.has(Partial::T));
    CHECK(!xt.has(Partial::XX));
    const DerivSet xxx = DerivSet::of({Partial::XXX});
    CHECK(xxx.has(Partial::XX));
    CHECK(xxx.has(Partial::X));
    CHECK(!xxx.has(Partial::T));
}

TEST_CASE("jet input seeds") {
    Tape tape(DerivSet::full());
    const ad::Jet jx = tape.jet(tape.input(Axis::X, 2.0));
    CHECK(jx.v == 2.0);
    CHECK(jx.x == 1.0);
    CHECK(jx.t == 0.0);
    const ad::Jet jt = tape.jet(tape.input(Axis::T, 0.3));
    CHECK(jt.v == 0.3);
    CHECK(jt.t == 1.0);
    CHECK(jt.x == 0.0);

    // inactive slots stay exactly zero under a reduced spec
    Tape tonly(DerivSet::of({Partial::T}));
    const ad::Jet j = tonly.jet(tonly.input(Axis::X, 5.0));
    CHECK(j.v == 5.0);
    CHECK(j.x == 0.0);
    CHECK(j.t == 0.0);
}

TEST_CASE("jet arithmetic, spec examples") {
    Tape tape(DerivSet::full());
    Var x(&tape, tape.input(Axis::X, 3.0));
    const ad::Jet sq = (x * x).jet();
    CHECK(sq.v == 9.0);
    CHECK(sq.x == 6.0);
    CHECK(sq.xx == 2.0);
    CHECK(sq.xxx == 0.0);

    Tape tape2(DerivSet::full());
    Var x2(&tape2, tape2.input(Axis::X, 2.0));
    Var t2(&tape2, tape2.input(Axis::T, 5.0));
    const ad::Jet xt = (x2 * t2).jet();
    CHECK(xt.v == 10.0);
    CHECK(xt.x == 5.0);
    CHECK(xt.t == 2.0);
    CHECK(xt.xt == 1.0);
    CHECK(xt.xx == 0.0);

    // (x^3)/x at x=2 equals the x^2 jet
    const ad::Jet q = ((x2 * x2 * x2) / x2).jet();
    CHECK(q.v == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(q.x == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(q.xx == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(q.xxx == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("unary examples") {
    Tape tape(DerivSet::full());
    Var x(&tape, tape.input(Axis::X, 0.0));
    const ad::Jet th = tanh(x).jet();
    CHECK(th.v == 0.0);
    CHECK(th.x == 1.0);
    CHECK(th.xx == 0.0);
    CHECK(th.xxx == -2.0);

    const ad::Jet ex = exp(x).jet();
    CHECK(ex.v == 1.0);
    CHECK(ex.x == 1.0);
    CHECK(ex.xx == 1.0);
    CHECK(ex.xxx == 1.0);

    const ad::Jet nc = normal_cdf(x).jet();
    CHECK(nc.v == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(nc.x == doctest::Approx(0.3989422804014327).epsilon(1e-14));
}

TEST_CASE("domain errors") {
    Tape tape(DerivSet::full());
    Var x(&tape, tape.input(Axis::X, 0.0));
    CHECK_THROWS_AS((void)(1.0 / x), std::domain_error);
    CHECK_THROWS_AS((void)log(x), std::domain_error);
    Var neg(&tape, tape.input(Axis::X, -1.0));
    CHECK_THROWS_AS((void)pow(neg, 0.5), std::domain_error);
}

TEST_CASE("jet battery against symbolic oracle") {
    // 20 composite expressions; all six raw partials frozen from symbolic
    // differentiation at 25 digits
    for (int i = 0; i < 20; ++i) {
        const JetBatteryCase& c = kJetBattery[i];
        CAPTURE(c.name);
        Tape tape(DerivSet::full());
        Var x(&tape, tape.input(Axis::X, c.x));
        Var t(&tape, tape.input(Axis::T, c.t));
        const ad::Jet j = build_case(tape, i, x, t).jet();
        const double got[6] = {j.v, j.t, j.x, j.xx, j.xt, j.xxx};
        for (int s = 0; s < 6; ++s) {
            CAPTURE(s);
            const double err =
                std::abs(got[s] - c.slots[s]) / std::max(1.0, std::abs(c.slots[s]));
            CHECK(err <= 1e-10);
        }
    }
}

TEST_CASE("polynomial exactness under partial specs") {
    // every sub-spec must reproduce the symbolic values in its active slots
    const DerivSet specs[] = {
        DerivSet::of({Partial::T}),
        DerivSet::of({Partial::X}),
        DerivSet::of({Partial::XX}),
        DerivSet::of({Partial::XT}),
        DerivSet::of({Partial::XXX}),
        DerivSet::full(),
    };
    for (const DerivSet& spec : specs) {
        Tape tape(spec);
        Var x(&tape, tape.input(Axis::X, 1.3));
        Var t(&tape, tape.input(Axis::T, 0.7));
        const ad::Jet j = (x * x * x + x * x * t * 2.0 - t + 1.0).jet();
        CHECK(j.v == doctest::Approx(4.863).epsilon(4e-16));
        if (spec.has(Partial::T)) CHECK(j.t == doctest::Approx(2.38).epsilon(4e-16));
        else CHECK(j.t == 0.0);
        if (spec.has(Partial::X)) CHECK(j.x == doctest::Approx(8.71).epsilon(4e-16));
        if (spec.has(Partial::XX)) CHECK(j.xx == doctest::Approx(10.6).epsilon(4e-16));
        if (spec.has(Partial::XT)) CHECK(j.xt == doctest::Approx(5.2).epsilon(4e-16));
        if (spec.has(Partial::XXX)) CHECK(j.xxx == doctest::Approx(6.0).epsilon(4e-16));
    }
}

TEST_CASE("tape backward, spec examples") {
    std::vector<double> theta{2.0, 3.0};
    {
        Tape tape(DerivSet::none(), theta);
        Var a(&tape, tape.param(0));
        Var b(&tape, tape.param(1));
        Var f = a * b;
        std::vector<double> grad(2, 0.0);
        tape.backward(f.id(), grad);
        CHECK(grad[0] == 3.0);
        CHECK(grad[1] == 2.0);
    }
    {
        std::vector<double> th{4.0};
        Tape tape(DerivSet::none(), th);
        Var a(&tape, tape.param(0));
        Var f = a * a;
        std::vector<double> grad(1, 0.0);
        tape.backward(f.id(), grad);
        CHECK(grad[0] == 8.0);
    }
    {
        // out-of-range seed is a usage error
        Tape tape(DerivSet::none(), theta);
        tape.param(0);
        std::vector<double> grad(2, 0.0);
        CHECK_THROWS_AS(tape.backward(ad::NodeId{99}, grad), std::out_of_range);
    }
}

TEST_CASE("gradient of a second-derivative slot matches finite differences") {
    // loss = u_xx of tanh(theta * x) at x = 1
    std::vector<double> theta{0.5};
    auto build = [](Tape& tape) {
        Var x(&tape, tape.input(Axis::X, 1.0));
        Var th(&tape, tape.param(0));
        return tanh(th * x).slot_xx();
    };
    const double err = ad::grad_check(build, DerivSet::of({Partial::XX}), theta, 1e-4);
    CHECK(err <= 1e-6);
}

TEST_CASE("grad_check conventions") {
    // quadratic: central differences are exact up to roundoff
    {
        std::vector<double> theta{1.0, -2.0, 3.0};
        auto build = [](Tape& tape) {
            Var a(&tape, tape.param(0));
            Var b(&tape, tape.param(1));
            Var c(&tape, tape.param(2));
            return a * a + b * b * 2.0 + c * c * 3.0;
        };
        CHECK(ad::grad_check(build, DerivSet::none(), theta, 1e-4) <= 1e-9);
    }
    // constant: 0/0 counts as zero error
    {
        std::vector<double> theta{1.0};
        auto build = [](Tape& tape) {
            tape.param(0);
            return Var(&tape, tape.constant(7.0));
        };
        CHECK(ad::grad_check(build, DerivSet::none(), theta, 1e-4) == 0.0);
    }
}

TEST_CASE("backward determinism is bit-exact") {
    Rng rng(17);
    std::vector<double> theta(40);
    for (double& v : theta) v = rng.uniform(-1.0, 1.0);
    auto run = [&] {
        Tape tape(DerivSet::of({Partial::X, Partial::XX}), theta);
        Var x(&tape, tape.input(Axis::X, 0.7));
        Var acc(&tape, tape.constant(0.0));
        for (std::size_t i = 0; i < theta.size(); ++i)
            acc = acc + tanh(Var(&tape, tape.param(i)) * x).slot_xx();
        std::vector<double> g(theta.size(), 0.0);
        tape.backward(acc.id(), g);
        return g;
    };
    const auto g1 = run(), g2 = run();
    for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == g2[i]);
}

TEST_CASE("replay reproduces the forward bit for bit") {
    std::vector<double> theta{0.3, -0.8, 1.2};
    Tape tape(DerivSet::full(), theta);
    Var x(&tape, tape.input(Axis::X, 1.1));
    Var t(&tape, tape.input(Axis::T, 0.4));
    Var u = tanh(Var(&tape, tape.param(0)) * x + Var(&tape, tape.param(1)) * t) *
            Var(&tape, tape.param(2));
    const ad::Jet before = u.jet();
    tape.replay();
    const ad::Jet after = u.jet();
    CHECK(before.v == after.v);
    CHECK(before.xx == after.xx);
    CHECK(before.xxx == after.xxx);
}

TEST_CASE("shift germs expose derivative jets") {
    Tape tape(DerivSet::full());
    Var x(&tape, tape.input(Axis::X, 0.6));
    Var t(&tape, tape.input(Axis::T, 0.2));
    Var u = sin(x) * exp(t);
    const ad::Jet j = u.jet();
    const ad::Jet jx = shift_x(u).jet();
    CHECK(jx.v == j.x);
    CHECK(jx.t == j.xt);
    CHECK(jx.x == j.xx);
    CHECK(jx.xx == j.xxx);
    const ad::Jet jt = shift_t(u).jet();
    CHECK(jt.v == j.t);
    CHECK(jt.x == j.xt);
}

TEST_CASE("extract slots feed adjoints to the right channel") {
    // d/dtheta of u_x where u = theta * x^2: u_x = 2 theta x -> d = 2x
    std::vector<double> theta{1.5};
    Tape tape(DerivSet::of({Partial::X}), theta);
    Var x(&tape, tape.input(Axis::X, 3.0));
    Var u = Var(&tape, tape.param(0)) * x * x;
    std::vector<double> grad(1, 0.0);
    tape.backward(u.slot_x().id(), grad);
    CHECK(grad[0] == doctest::Approx(6.0).epsilon(1e-15));
}
