#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <vector>

#include "lsn/training.hpp"

namespace lsn::detail {

/// Layer-vectorised evaluation of the structural risk and its parameter
/// gradient. Mathematically identical to the per-point tape engine (same
/// truncated-jet propagation rules applied per layer over point batches);
/// the two are cross-checked in the test suite.
///
/// Supports every built-in conservation law. Custom laws need the tape engine.
class BatchedEngine {
public:
    BatchedEngine(const Mlp& mlp, const PdeModel& model, std::span<const ConservationLaw> laws,
                  const LossWeights& weights, const CollocationSet& data);

    static bool supports(std::span<const ConservationLaw> laws);

    /// Evaluates at theta, accumulating the weighted gradient into grad
    /// (assumed zeroed). Deterministic for fixed shapes.
    LossBreakdown loss_grad(std::span<const double> theta, std::span<double> grad);

private:
    using Mat = Eigen::MatrixXd;
    using Arr = Eigen::ArrayXXd;

    static constexpr int kSlots = 6;  // v, t, x, xx, xt, xxx

    struct Channels {
        std::array<Mat, kSlots> m;
    };

    /// One batch of points pushed through the network with a fixed set of
    /// active jet channels: cached activations and pre-activations per layer.
    struct Pipe {
        bool active[kSlots] = {true, false, false, false, false, false};
        std::vector<Channels> act;  // act[0] holds the input seeds
        std::vector<Channels> z;
        std::size_t rows = 0;
    };

    void forward(Pipe& p, std::span<const double> theta) const;
    void backward(Pipe& p, std::span<const double> theta, std::span<double> grad,
                  Channels seed) const;

    const Mlp& mlp_;
    const PdeModel& model_;
    LossWeights weights_;
    std::vector<ConservationLaw> laws_;

    // interior batch
    std::vector<Point> interior_;
    std::vector<SlotCoeffs> pde_coeffs_;               // per point
    std::vector<std::vector<SlotCoeffs>> law_coeffs_;  // per law, per point
    std::vector<bool> law_is_kdv_mass_;
    Pipe interior_pipe_;

    // boundary + initial batch (boundary rows first); carries an x channel
    // when the model imposes a derivative boundary condition
    std::size_t n_boundary_ = 0, n_initial_ = 0;
    Eigen::VectorXd value_targets_;
    std::vector<char> deriv_row_;          // row carries a u_x condition
    Eigen::VectorXd deriv_targets_;
    Pipe value_pipe_;
};

}  // namespace lsn::detail
