#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lsn/metrics.hpp"
#include "lsn/models.hpp"
#include "lsn/network.hpp"
#include "lsn/sampling.hpp"
#include "lsn/symmetry.hpp"

namespace lsn {

/// Structural-risk weights lambda_1..lambda_4 (PDE, boundary, initial, Lie).
/// lie = 0 recovers the plain PINN loss.
struct LossWeights {
    double pde = 1.0;
    double boundary = 1.0;
    double initial = 1.0;
    double lie = 0.0;
    bool operator==(const LossWeights&) const = default;
};

struct LossBreakdown {
    double pde = 0.0, bc = 0.0, ic = 0.0, lie = 0.0;
    double total(const LossWeights& w) const {
        return w.pde * pde + w.boundary * bc + w.initial * ic + w.lie * lie;
    }
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Standard Adam with bias correction. Moment vectors match the parameter
/// count; non-finite gradient entries abort the update.
class AdamState {
public:
    AdamState(std::size_t n, AdamConfig cfg = {});
    void step(std::span<double> theta, std::span<const double> grad, double lr);
    std::size_t steps_taken() const { return step_; }

private:
    AdamConfig cfg_;
    std::vector<double> m_, v_;
    std::size_t step_ = 0;
};

/// lr0 * decay^floor(step / interval)
double lr_schedule(std::size_t step, double lr0, double decay, std::size_t interval);

enum class TrainEngine {
    Batched,  // layer-vectorised forward/backward (default)
    Tape,     // per-point jet tapes, optionally threaded
};

struct TrainConfig {
    std::size_t iterations = 200000;
    double lr0 = 1e-3;
    double lr_decay = 0.95;           // paper's Gamma
    std::size_t decay_interval = 1000;
    std::uint64_t seed = 0;
    std::size_t snapshot_every = 500;
    bool deterministic = true;  // index-ordered reductions, timing column zeroed
    TrainEngine engine = TrainEngine::Batched;
    int threads = 0;  // tape engine fan-out; 0 = LSN_THREADS or hardware
};

struct SnapshotRow {
    std::size_t step = 0;
    double l_pde = 0, l_bc = 0, l_ic = 0, l_lie = 0, total = 0;
    double rel_err = 0, cons_err = 0, lr = 0, seconds = 0;
};

struct TrainHistory {
    std::vector<SnapshotRow> rows;
    void to_csv(std::ostream& out) const;
};

struct TrainResult {
    Mlp mlp;
    TrainHistory history;
    bool diverged = false;
    std::size_t steps_completed = 0;
    std::string diagnostic;
};

/// The empirical structural risk as one tape node:
/// lambda1 mean|R_i|^2 + lambda2 mean|R_s|^2 + lambda3 mean|R_t|^2
/// + lambda4 sum_laws mean|R_Lie|^2 over the interior points.
/// Regions with positive weight must be nonempty.
ad::Var structural_risk(ad::Tape& tape, const Mlp& mlp, const PdeModel& model,
                        std::span<const ConservationLaw> laws, const LossWeights& weights,
                        const CollocationSet& data);

/// Loss components and parameter gradient of the structural risk at the
/// network's current parameters (tape engine; used in tests and as the
/// reference for the batched engine).
LossBreakdown loss_and_gradient_tape(const Mlp& mlp, const PdeModel& model,
                                     std::span<const ConservationLaw> laws,
                                     const LossWeights& weights, const CollocationSet& data,
                                     std::span<double> grad, int threads = 1);

/// Full-batch Adam on the structural risk. Snapshots metrics every
/// config.snapshot_every steps (plus step 0 and the final step); on a
/// non-finite loss or gradient the run aborts and returns the last finite
/// parameters with diverged = true. Bit-reproducible for a fixed config.
TrainResult train(const Mlp& initial, const PdeModel& model,
                  std::span<const ConservationLaw> laws, const LossWeights& weights,
                  const CollocationSet& data, const TrainConfig& config,
                  std::span<const Point> eval_grid = {});

int resolve_thread_count(int requested);

}  // namespace lsn
