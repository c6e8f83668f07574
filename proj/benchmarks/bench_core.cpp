#include <benchmark/benchmark.h>

#include <vector>

#include "lsn/models.hpp"
#include "lsn/network.hpp"
#include "lsn/sampling.hpp"
#include "lsn/special.hpp"
#include "lsn/symmetry.hpp"
#include "lsn/training.hpp"

using namespace lsn;
using ad::DerivSet;
using ad::Partial;
using ad::Tape;
using ad::Var;

namespace {

Mlp paper_net() {
    MlpConfig c;
    c.hidden_layers = 9;
    c.width = 50;
    c.seed = 1;
    return Mlp::init(c);
}

void BM_NormalCdf(benchmark::State& state) {
    double z = -4.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(normal_cdf(z));
        z += 1e-6;
    }
}
BENCHMARK(BM_NormalCdf);

void BM_BsExact(benchmark::State& state) {
    double x = 5.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(bs_exact(x, 0.5, 10.0, 0.1, 0.2));
        x = x < 19.0 ? x + 1e-5 : 5.0;
    }
}
BENCHMARK(BM_BsExact);

void BM_ForwardScalar(benchmark::State& state) {
    const Mlp net = paper_net();
    double x = 3.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.forward_scalar(x, 0.4));
        x = x < 19.0 ? x + 1e-4 : 3.0;
    }
}
BENCHMARK(BM_ForwardScalar);

void BM_ForwardJetInterior(benchmark::State& state) {
    const Mlp net = paper_net();
    Tape tape(DerivSet::of({Partial::T, Partial::X, Partial::XX}), net.params());
    for (auto _ : state) {
        tape.reset();
        benchmark::DoNotOptimize(net.forward_jet(tape, 7.3, 0.4).jet());
    }
}
BENCHMARK(BM_ForwardJetInterior);

void BM_PointGradient(benchmark::State& state) {
    // forward + interior residual + reverse sweep for one collocation point
    const Mlp net = paper_net();
    const PdeModel bs = make_black_scholes(0.1, 0.2);
    Tape tape(DerivSet::of({Partial::T, Partial::X, Partial::XX}), net.params());
    std::vector<double> grad(net.param_count());
    for (auto _ : state) {
        tape.reset();
        std::fill(grad.begin(), grad.end(), 0.0);
        Var u = net.forward_jet(tape, 7.3, 0.4);
        Var sq = square(interior_residual(tape, bs, u, 7.3, 0.4));
        tape.backward(sq.id(), grad);
        benchmark::DoNotOptimize(grad.data());
    }
}
BENCHMARK(BM_PointGradient);

void BM_TrainStepSmallData(benchmark::State& state) {
    // one full-batch step of the desk-scale configuration (50/1000/1000)
    const PdeModel bs = make_black_scholes(0.1, 0.2);
    const std::vector<ConservationLaw> laws{make_bs_g2()};
    const LossWeights w{0.001, 0.999, 0.001, 0.001};
    const CollocationSet data =
        make_collocation(bs.domain, 50, 1000, 1000, SampleDist::Gaussian, 99);
    const Mlp net = paper_net();
    TrainConfig tc;
    tc.iterations = 1;
    tc.snapshot_every = 1000000;
    for (auto _ : state) {
        benchmark::DoNotOptimize(train(net, bs, laws, w, data, tc));
    }
}
BENCHMARK(BM_TrainStepSmallData)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
