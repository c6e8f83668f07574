#include <doctest.h>

#include <cmath>
#include <sstream>

#include "lsn/rng.hpp"
#include "lsn/training.hpp"

using namespace lsn;
using ad::DerivSet;
using ad::Partial;
using ad::Tape;
using ad::Var;

namespace {
Mlp small_net(int hidden, int width, std::uint64_t seed) {
    MlpConfig c;
    c.hidden_layers = hidden;
    c.width = width;
    c.seed = seed;
    return Mlp::init(c);
}

CollocationSet tiny_data(const PdeModel& m, std::uint64_t seed, std::size_t ni = 8,
                         std::size_t nb = 8, std::size_t nt = 8) {
    return make_collocation(m.domain, ni, nb, nt, SampleDist::Gaussian, seed);
}
}  // namespace

TEST_CASE("adam first step and invariances") {
    // single parameter, g = 1, lr = 1e-3: bias-corrected step is
    // -lr * 1/(1 + eps) = -0.000999999...
    std::vector<double> theta{0.0};
    std::vector<double> grad{1.0};
    AdamState adam(1);
    adam.step(theta, grad, 1e-3);
    CHECK(theta[0] == doctest::Approx(-0.000999999990).epsilon(1e-9));

    // zero gradient leaves parameters unchanged
    std::vector<double> theta2{0.7, -0.3};
    AdamState adam2(2);
    adam2.step(theta2, std::vector<double>{0.0, 0.0}, 1e-3);
    CHECK(theta2[0] == 0.7);
    CHECK(theta2[1] == -0.3);

    // equal gradients update equally
    std::vector<double> theta3{0.1, 0.1};
    AdamState adam3(2);
    adam3.step(theta3, std::vector<double>{0.5, 0.5}, 1e-3);
    CHECK(theta3[0] == theta3[1]);

    // non-finite gradients abort
    AdamState adam4(1);
    std::vector<double> theta4{0.0};
    CHECK_THROWS_AS(
        adam4.step(theta4, std::vector<double>{std::numeric_limits<double>::quiet_NaN()}, 1e-3),
        std::invalid_argument);
}

TEST_CASE("learning rate schedule") {
    CHECK(lr_schedule(0, 1e-3, 0.95, 1000) == 1e-3);
    CHECK(lr_schedule(1000, 1e-3, 0.95, 1000) == doctest::Approx(0.95e-3));
    CHECK(lr_schedule(2000, 1e-3, 0.99, 1000) == doctest::Approx(0.0009801).epsilon(1e-12));
    CHECK(lr_schedule(999, 1e-3, 0.5, 1000) == 1e-3);
    CHECK_THROWS_AS((void)lr_schedule(0, 1e-3, 0.95, 0), std::invalid_argument);
}

TEST_CASE("structural risk: PINN reduction and weight linearity") {
    const PdeModel bs = make_black_scholes(0.1, 0.2);
    const Mlp net = small_net(2, 6, 31);
    const CollocationSet data = tiny_data(bs, 77);
    const std::vector<ConservationLaw> laws{make_bs_g2()};
    const DerivSet spec = DerivSet::of({Partial::T, Partial::X, Partial::XX});

    // lambda4 = 0 equals the plain PINN empirical loss
    Tape t1(spec, net.params());
    const double with_zero_lie =
        structural_risk(t1, net, bs, laws, LossWeights{0.3, 0.7, 0.9, 0.0}, data).value();
    Tape t2(spec, net.params());
    const double no_laws =
        structural_risk(t2, net, bs, {}, LossWeights{0.3, 0.7, 0.9, 0.0}, data).value();
    CHECK(with_zero_lie == doctest::Approx(no_laws).epsilon(1e-15));

    // doubling every weight doubles the loss and the gradient
    Tape t3(spec, net.params());
    Var l1 = structural_risk(t3, net, bs, laws, LossWeights{0.3, 0.7, 0.9, 0.2}, data);
    std::vector<double> g1(net.param_count(), 0.0);
    t3.backward(l1.id(), g1);
    Tape t4(spec, net.params());
    Var l2 = structural_risk(t4, net, bs, laws, LossWeights{0.6, 1.4, 1.8, 0.4}, data);
    std::vector<double> g2(net.param_count(), 0.0);
    t4.backward(l2.id(), g2);
    CHECK(l2.value() == doctest::Approx(2.0 * l1.value()).epsilon(1e-13));
    for (std::size_t i = 0; i < g1.size(); ++i)
        CHECK(g2[i] == doctest::Approx(2.0 * g1[i]).epsilon(1e-11));

    // zero network on BS: boundary residual vanishes on the x = 0 side only
    Mlp zero = small_net(1, 4, 0);
    for (double& p : zero.params()) p = 0.0;
    Tape t5(spec, zero.params());
    const double ic_only =
        structural_risk(t5, zero, bs, {}, LossWeights{0.0, 0.0, 1.0, 0.0}, data).value();
    double expect = 0.0;
    for (double x : data.initial) expect += std::pow(std::max(x - 10.0, 0.0), 2);
    expect /= static_cast<double>(data.initial.size());
    CHECK(ic_only == doctest::Approx(expect).epsilon(1e-14));

    // weighted-but-empty region is a usage error
    CollocationSet empty = data;
    empty.initial.clear();
    Tape t6(spec, net.params());
    CHECK_THROWS_AS(
        (void)structural_risk(t6, net, bs, laws, LossWeights{0.3, 0.7, 0.9, 0.2}, empty),
        std::invalid_argument);
}

TEST_CASE("structural risk gradient passes the finite-difference check") {
    const PdeModel bs = make_black_scholes(0.1, 0.2);
    const std::vector<ConservationLaw> laws{make_bs_g2()};
    const LossWeights w{0.7, 1.0, 0.5, 0.3};
    double worst = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
        Mlp net = small_net(2, 8, derive_seed(40, rep));
        const CollocationSet data = tiny_data(bs, derive_seed(41, rep), 10, 6, 6);
        auto build = [&](Tape& tape) { return structural_risk(tape, net, bs, laws, w, data); };
        worst = std::max(worst, ad::grad_check(build, DerivSet::of({Partial::T, Partial::X,
                                                                    Partial::XX}),
                                               net.params(), 1e-4));
    }
    CHECK(worst <= 1e-5);
}

TEST_CASE("batched engine agrees with the tape engine") {
    struct Case {
        PdeModel model;
        std::vector<ConservationLaw> laws;
    };
    std::vector<Case> cases;
    cases.push_back({make_black_scholes(0.1, 0.2), {make_bs_g2(LawMode::Consistent)}});
    cases.push_back({make_black_scholes(0.15, 0.4), {make_bs_g2(LawMode::Literal)}});
    cases.push_back({make_vasicek(),
                     {make_vasicek_g5(LawMode::Consistent), make_vasicek_g6(LawMode::Consistent)}});
    cases.push_back({make_kdv(true), {make_kdv_mass()}});
    cases.push_back({make_maxwellian(), {}});

    for (std::size_t ci = 0; ci < cases.size(); ++ci) {
        CAPTURE(ci);
        const PdeModel& model = cases[ci].model;
        const auto& laws = cases[ci].laws;
        const LossWeights w{0.4, 1.0, 0.6, laws.empty() ? 0.0 : 0.8};
        const Mlp net = small_net(2, 10, derive_seed(50, ci));
        const CollocationSet data = tiny_data(model, derive_seed(51, ci), 12, 10, 10);

        std::vector<double> g_tape(net.param_count(), 0.0);
        const LossBreakdown a =
            loss_and_gradient_tape(net, model, laws, w, data, g_tape, 1);

        // the batched engine is internal; drive it through train() with one
        // step at lr = 0 so the recorded losses are those of the fixed net
        TrainConfig cfg;
        cfg.iterations = 1;
        cfg.lr0 = 0.0;
        cfg.snapshot_every = 1;
        cfg.engine = TrainEngine::Batched;
        const TrainResult r = train(net, model, laws, w, data, cfg);
        const SnapshotRow& row = r.history.rows.front();
        CHECK(std::abs(row.l_pde - a.pde) <= 1e-11 * std::max(1.0, std::abs(a.pde)));
        CHECK(std::abs(row.l_bc - a.bc) <= 1e-11 * std::max(1.0, std::abs(a.bc)));
        CHECK(std::abs(row.l_ic - a.ic) <= 1e-11 * std::max(1.0, std::abs(a.ic)));
        CHECK(std::abs(row.l_lie - a.lie) <= 1e-11 * std::max(1.0, std::abs(a.lie)));
    }
}

TEST_CASE("one-step parameter agreement between engines") {
    const PdeModel bs = make_black_scholes(0.1, 0.2);
    const std::vector<ConservationLaw> laws{make_bs_g2()};
    const LossWeights w{0.001, 1.0, 0.1, 1.0};
    const Mlp net = small_net(2, 8, 5150);
    const CollocationSet data = tiny_data(bs, 5151, 16, 12, 12);

    auto run = [&](TrainEngine engine) {
        TrainConfig cfg;
        cfg.iterations = 3;
        cfg.engine = engine;
        cfg.snapshot_every = 1;
        return train(net, bs, laws, w, data, cfg);
    };
    const TrainResult rt = run(TrainEngine::Tape);
    const TrainResult rb = run(TrainEngine::Batched);
    REQUIRE(rt.mlp.param_count() == rb.mlp.param_count());
    double worst = 0.0;
    for (std::size_t i = 0; i < rt.mlp.param_count(); ++i)
        worst = std::max(worst, std::abs(rt.mlp.params()[i] - rb.mlp.params()[i]));
    // engines differ only in summation order; after 3 Adam steps the
    // parameters must still agree to high precision
    CHECK(worst <= 1e-9);
}

TEST_CASE("tape engine is thread-count invariant") {
    const PdeModel bs = make_black_scholes(0.1, 0.2);
    const std::vector<ConservationLaw> laws{make_bs_g2()};
    const LossWeights w{0.01, 1.0, 0.1, 0.5};
    const Mlp net = small_net(2, 8, 888);
    const CollocationSet data = tiny_data(bs, 889, 40, 100, 100);

    std::vector<double> g1(net.param_count(), 0.0), g4(net.param_count(), 0.0);
    const LossBreakdown a = loss_and_gradient_tape(net, bs, laws, w, data, g1, 1);
    const LossBreakdown b = loss_and_gradient_tape(net, bs, laws, w, data, g4, 4);
    CHECK(a.pde == b.pde);
    CHECK(a.bc == b.bc);
    CHECK(a.ic == b.ic);
    CHECK(a.lie == b.lie);
    for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == g4[i]);
}

TEST_CASE("train: zero iterations, determinism, divergence") {
    const PdeModel bs = make_black_scholes(0.1, 0.2);
    const std::vector<ConservationLaw> laws{make_bs_g2()};
    const LossWeights w{0.001, 1.0, 0.1, 1.0};
    const CollocationSet data = tiny_data(bs, 99, 8, 16, 16);
    const Mlp net = small_net(2, 8, 2024);

    // zero iterations: initial network unchanged, one history row
    TrainConfig cfg0;
    cfg0.iterations = 0;
    const TrainResult r0 = train(net, bs, laws, w, data, cfg0);
    REQUIRE(r0.history.rows.size() == 1);
    for (std::size_t i = 0; i < net.param_count(); ++i)
        CHECK(r0.mlp.params()[i] == net.params()[i]);

    // same config twice: identical histories
    TrainConfig cfg;
    cfg.iterations = 30;
    cfg.snapshot_every = 10;
    const TrainResult ra = train(net, bs, laws, w, data, cfg);
    const TrainResult rb = train(net, bs, laws, w, data, cfg);
    REQUIRE(ra.history.rows.size() == rb.history.rows.size());
    std::ostringstream csva, csvb;
    ra.history.to_csv(csva);
    rb.history.to_csv(csvb);
    CHECK(csva.str() == csvb.str());

    // exploding learning rate ends in a graceful diverged result
    TrainConfig bad;
    bad.iterations = 400;
    bad.lr0 = 1e200;  // parameters overflow within a few steps
    bad.snapshot_every = 50;
    const TrainResult rd = train(net, bs, laws, w, data, bad);
    CHECK(rd.diverged);
    CHECK(!rd.diagnostic.empty());
    for (double p : rd.mlp.params()) CHECK(std::isfinite(p));
}

TEST_CASE("history csv schema") {
    TrainHistory h;
    SnapshotRow r;
    r.step = 5;
    r.l_pde = 1.0;
    h.rows.push_back(r);
    std::ostringstream out;
    h.to_csv(out);
    CHECK(out.str().rfind("step,l_pde,l_bc,l_ic,l_lie,total,rel_err,cons_err,lr,seconds\n", 0) ==
          0);
}
