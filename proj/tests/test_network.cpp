#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "lsn/network.hpp"
#include "lsn/rng.hpp"

using namespace lsn;
using ad::Axis;
using ad::DerivSet;
using ad::Partial;
using ad::Tape;
using ad::Var;

TEST_CASE("init is deterministic and Glorot-bounded") {
    MlpConfig c;
    c.hidden_layers = 2;
    c.width = 10;
    c.seed = 42;
    const Mlp a = Mlp::init(c);
    const Mlp b = Mlp::init(c);
    REQUIRE(a.param_count() == 151);  // (2+1)*10 + (10+1)*10 + (10+1)*1
    for (std::size_t i = 0; i < a.param_count(); ++i) CHECK(a.params()[i] == b.params()[i]);

    for (const Mlp::Layer& layer : a.layers()) {
        const double limit = std::sqrt(6.0 / (layer.in + layer.out));
        for (int i = 0; i < layer.in * layer.out; ++i)
            CHECK(std::abs(a.params()[layer.w_off + i]) <= limit);
        for (int i = 0; i < layer.out; ++i) CHECK(a.params()[layer.b_off + i] == 0.0);
    }

    c.seed = 43;
    const Mlp other = Mlp::init(c);
    bool same = true;
    for (std::size_t i = 0; i < a.param_count(); ++i)
        if (a.params()[i] != other.params()[i]) same = false;
    CHECK(!same);
}

TEST_CASE("zero net evaluates to zero, affine case is exact") {
    MlpConfig c;
    c.hidden_layers = 1;
    c.width = 4;
    Mlp zero = Mlp::init(c);
    for (double& p : zero.params()) p = 0.0;
    CHECK(zero.forward_scalar(1.3, 0.8) == 0.0);
    Tape tape(DerivSet::full(), zero.params());
    CHECK(zero.forward_jet(tape, 1.3, 0.8).jet().v == 0.0);

    // 0-hidden-layer configuration: u = w1 x + w2 t + b
    MlpConfig lin;
    lin.hidden_layers = 0;
    lin.width = 1;
    Mlp aff = Mlp::init(lin);
    REQUIRE(aff.param_count() == 3);
    aff.params()[0] = 2.0;
    aff.params()[1] = 3.0;
    aff.params()[2] = 1.0;
    CHECK(aff.forward_scalar(1.0, 1.0) == 6.0);
    Tape tape2(DerivSet::full(), aff.params());
    const ad::Jet j = aff.forward_jet(tape2, 1.0, 1.0).jet();
    CHECK(j.v == 6.0);
    CHECK(j.x == 2.0);
    CHECK(j.t == 3.0);
    CHECK(j.xx == 0.0);
    CHECK(j.xt == 0.0);
    CHECK(j.xxx == 0.0);
}

TEST_CASE("forward_scalar equals the jet value slot bit for bit") {
    MlpConfig c;
    c.hidden_layers = 3;
    c.width = 12;
    c.seed = 7;
    const Mlp net = Mlp::init(c);
    Rng rng(99);
    Tape tape(DerivSet::none(), net.params());
    for (int i = 0; i < 100; ++i) {
        const double x = rng.uniform(-2.0, 2.0), t = rng.uniform(0.0, 1.0);
        tape.reset();
        const double jet_value = net.forward_jet(tape, x, t).value();
        CHECK(net.forward_scalar(x, t) == jet_value);
    }
}

TEST_CASE("jet partials match finite differences of scalar passes") {
    MlpConfig c;
    c.hidden_layers = 2;
    c.width = 16;
    c.seed = 11;
    const Mlp net = Mlp::init(c);
    auto f = [&](double x, double t) { return net.forward_scalar(x, t); };

    Rng rng(5);
    for (int rep = 0; rep < 5; ++rep) {
        const double x = rng.uniform(-1.0, 1.0), t = rng.uniform(0.1, 0.9);
        Tape tape(DerivSet::full(), net.params());
        const ad::Jet j = net.forward_jet(tape, x, t).jet();

        const double h = 1e-4;
        const double fdx = (f(x + h, t) - f(x - h, t)) / (2 * h);
        const double fdt = (f(x, t + h) - f(x, t - h)) / (2 * h);
        const double fdxx = (f(x + h, t) - 2 * f(x, t) + f(x - h, t)) / (h * h);
        const double fdxt =
            (f(x + h, t + h) - f(x + h, t - h) - f(x - h, t + h) + f(x - h, t - h)) / (4 * h * h);
        // third order: Richardson-refined central stencil at a wider step
        auto d3 = [&](double hh) {
            return (f(x + 2 * hh, t) - 2 * f(x + hh, t) + 2 * f(x - hh, t) - f(x - 2 * hh, t)) /
                   (2 * hh * hh * hh);
        };
        const double fdxxx = (4.0 * d3(0.005) - d3(0.01)) / 3.0;

        CHECK(std::abs(j.x - fdx) / std::max(1.0, std::abs(fdx)) <= 1e-5);
        CHECK(std::abs(j.t - fdt) / std::max(1.0, std::abs(fdt)) <= 1e-5);
        CHECK(std::abs(j.xx - fdxx) / std::max(1.0, std::abs(fdxx)) <= 1e-5);
        CHECK(std::abs(j.xt - fdxt) / std::max(1.0, std::abs(fdxt)) <= 1e-5);
        CHECK(std::abs(j.xxx - fdxxx) / std::max(1.0, std::abs(fdxxx)) <= 1e-5);
    }
}

TEST_CASE("checkpoint round trip preserves outputs exactly") {
    MlpConfig c;
    c.hidden_layers = 2;
    c.width = 8;
    c.seed = 2024;
    const Mlp net = Mlp::init(c);
    const auto path = std::filesystem::temp_directory_path() / "lsn_test_ckpt.txt";
    net.save(path);
    const Mlp back = Mlp::load(path);
    std::filesystem::remove(path);

    REQUIRE(back.param_count() == net.param_count());
    Rng rng(1);
    for (int i = 0; i < 20; ++i) {
        const double x = rng.uniform(-3.0, 3.0), t = rng.uniform(0.0, 1.0);
        CHECK(net.forward_scalar(x, t) == back.forward_scalar(x, t));
    }
}

TEST_CASE("config validation") {
    MlpConfig bad;
    bad.hidden_layers = -1;
    CHECK_THROWS_AS(Mlp::init(bad), std::invalid_argument);
    bad.hidden_layers = 1;
    bad.width = 0;
    CHECK_THROWS_AS(Mlp::init(bad), std::invalid_argument);
}
