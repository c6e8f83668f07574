#include "lsn/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "batched_engine.hpp"

namespace lsn {

using ad::Tape;
using ad::Var;

int resolve_thread_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("LSN_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

AdamState::AdamState(std::size_t n, AdamConfig cfg)
    : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

void AdamState::step(std::span<double> theta, std::span<const double> grad, double lr) {
    if (theta.size() != m_.size() || grad.size() != m_.size())
        throw std::invalid_argument("AdamState::step: length mismatch");
    for (double g : grad)
        if (!std::isfinite(g))
            throw std::invalid_argument("AdamState::step: non-finite gradient entry");

    ++step_;
    const double b1 = cfg_.beta1, b2 = cfg_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (std::size_t i = 0; i < m_.size(); ++i) {
        const double g = grad[i];
        m_[i] = b1 * m_[i] + (1.0 - b1) * g;
        v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
        const double mhat = m_[i] / c1;
        const double vhat = v_[i] / c2;
        theta[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
}

double lr_schedule(std::size_t step, double lr0, double decay, std::size_t interval) {
    if (interval < 1) throw std::invalid_argument("lr_schedule: interval >= 1 required");
    return lr0 * std::pow(decay, static_cast<double>(step / interval));
}

// ---------------------------------------------------------------------------
// Structural risk on a single tape
// ---------------------------------------------------------------------------

namespace {

ad::DerivSet spec_for(const PdeModel& model, std::span<const ConservationLaw> laws) {
    ad::DerivSet spec = model.required_partials();
    for (const ConservationLaw& law : laws) spec = spec | law.required_partials();
    return spec;
}

Var mean_square(Tape& tape, const std::vector<Var>& rs) {
    Var acc;
    bool first = true;
    for (const Var& r : rs) {
        Var sq = square(r);
        acc = first ? sq : acc + sq;
        first = false;
    }
    return acc * (1.0 / static_cast<double>(rs.size()));
}

}  // namespace

Var structural_risk(Tape& tape, const Mlp& mlp, const PdeModel& model,
                    std::span<const ConservationLaw> laws, const LossWeights& weights,
                    const CollocationSet& data) {
    if (!(weights.pde >= 0 && weights.boundary >= 0 && weights.initial >= 0 && weights.lie >= 0))
        throw std::invalid_argument("structural_risk: weights must be non-negative");
    if ((weights.pde > 0 || weights.lie > 0) && data.interior.empty())
        throw std::invalid_argument("structural_risk: weighted interior region is empty");
    if (weights.boundary > 0 && data.boundary.empty())
        throw std::invalid_argument("structural_risk: weighted boundary region is empty");
    if (weights.initial > 0 && data.initial.empty())
        throw std::invalid_argument("structural_risk: weighted initial region is empty");
    if (weights.lie > 0)
        for (const ConservationLaw& law : laws) law.validate_for(model);

    Var total = Var(&tape, tape.constant(0.0));

    if (!data.interior.empty()) {
        std::vector<Var> r_pde;
        std::vector<std::vector<Var>> r_laws(laws.size());
        r_pde.reserve(data.interior.size());
        for (const Point& p : data.interior) {
            Var u = mlp.forward_jet(tape, p.x, p.t);
            Var ri = interior_residual(tape, model, u, p.x, p.t);
            r_pde.push_back(ri);
            for (std::size_t k = 0; k < laws.size(); ++k)
                r_laws[k].push_back(lie_residual(tape, laws[k], model, u, p.x, p.t, ri));
        }
        total = total + mean_square(tape, r_pde) * weights.pde;
        for (std::size_t k = 0; k < laws.size(); ++k)
            total = total + mean_square(tape, r_laws[k]) * weights.lie;
    }
    if (!data.boundary.empty()) {
        std::vector<Var> rs;
        rs.reserve(data.boundary.size());
        for (const Point& p : data.boundary) {
            Var u = mlp.forward_jet(tape, p.x, p.t);
            rs.push_back(boundary_residual(tape, model, u, p.x, p.t));
            if (model.boundary_needs_derivative(p.x))
                rs.push_back(u.slot_x() - model.boundary_derivative_datum(p.x, p.t));
        }
        // normalised by the boundary point count, not the residual count
        Var acc;
        bool first = true;
        for (const Var& r : rs) {
            Var sq = square(r);
            acc = first ? sq : acc + sq;
            first = false;
        }
        total = total +
                acc * (weights.boundary / static_cast<double>(data.boundary.size()));
    }
    if (!data.initial.empty()) {
        std::vector<Var> rs;
        rs.reserve(data.initial.size());
        for (double x : data.initial) {
            Var u = mlp.forward_jet(tape, x, 0.0);
            rs.push_back(initial_residual(tape, model, u, x));
        }
        total = total + mean_square(tape, rs) * weights.initial;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Tape engine: per-point tapes, block-parallel, index-ordered reduction
// ---------------------------------------------------------------------------

namespace {

struct BlockAccum {
    std::vector<double> grad;
    double pde = 0, bc = 0, ic = 0;
    std::vector<double> lie;  // per law
};

constexpr std::size_t kBlock = 64;

}  // namespace

LossBreakdown loss_and_gradient_tape(const Mlp& mlp, const PdeModel& model,
                                     std::span<const ConservationLaw> laws,
                                     const LossWeights& weights, const CollocationSet& data,
                                     std::span<double> grad, int threads) {
    const std::size_t np = mlp.param_count();
    if (grad.size() != np)
        throw std::invalid_argument("loss_and_gradient_tape: gradient length mismatch");
    for (const ConservationLaw& law : laws) law.validate_for(model);

    const ad::DerivSet spec = spec_for(model, laws);
    const std::size_t ni = data.interior.size();
    const std::size_t nb = data.boundary.size();
    const std::size_t nt = data.initial.size();
    const std::size_t total_pts = ni + nb + nt;
    const std::size_t n_blocks = (total_pts + kBlock - 1) / kBlock;

    std::vector<BlockAccum> blocks(n_blocks);
    // worker over a fixed block partition; the final reduction is in block
    // order, so the result is independent of the thread count
    auto run_block = [&](std::size_t bi) {
        BlockAccum& acc = blocks[bi];
        acc.grad.assign(np, 0.0);
        acc.lie.assign(laws.size(), 0.0);
        const std::size_t lo = bi * kBlock;
        const std::size_t hi = std::min(lo + kBlock, total_pts);

        const bool bc_deriv = model.boundary_needs_derivative(model.domain.x_min) ||
                              model.boundary_needs_derivative(model.domain.x_max);
        Tape jet_tape(spec, mlp.params());
        Tape val_tape(bc_deriv ? ad::DerivSet::of({ad::Partial::X}) : ad::DerivSet::none(),
                      mlp.params());
        std::vector<Tape::Seed> seeds;

        for (std::size_t idx = lo; idx < hi; ++idx) {
            if (idx < ni) {
                const Point& p = data.interior[idx];
                jet_tape.reset();
                seeds.clear();
                Var u = mlp.forward_jet(jet_tape, p.x, p.t);
                Var ri = interior_residual(jet_tape, model, u, p.x, p.t);
                Var sq = square(ri);
                acc.pde += sq.value();
                if (weights.pde != 0.0)
                    seeds.push_back({sq.id(), weights.pde / static_cast<double>(ni)});
                for (std::size_t k = 0; k < laws.size(); ++k) {
                    Var rl = lie_residual(jet_tape, laws[k], model, u, p.x, p.t, ri);
                    Var sql = square(rl);
                    acc.lie[k] += sql.value();
                    if (weights.lie != 0.0)
                        seeds.push_back({sql.id(), weights.lie / static_cast<double>(ni)});
                }
                if (!seeds.empty()) jet_tape.backward(seeds, acc.grad);
            } else if (idx < ni + nb) {
                const Point& p = data.boundary[idx - ni];
                val_tape.reset();
                seeds.clear();
                Var u = mlp.forward_jet(val_tape, p.x, p.t);
                Var sq = square(boundary_residual(val_tape, model, u, p.x, p.t));
                acc.bc += sq.value();
                if (weights.boundary != 0.0)
                    seeds.push_back({sq.id(), weights.boundary / static_cast<double>(nb)});
                if (model.boundary_needs_derivative(p.x)) {
                    Var sqd =
                        square(u.slot_x() - model.boundary_derivative_datum(p.x, p.t));
                    acc.bc += sqd.value();
                    if (weights.boundary != 0.0)
                        seeds.push_back({sqd.id(), weights.boundary / static_cast<double>(nb)});
                }
                if (!seeds.empty()) val_tape.backward(seeds, acc.grad);
            } else {
                const double x = data.initial[idx - ni - nb];
                val_tape.reset();
                Var u = mlp.forward_jet(val_tape, x, 0.0);
                Var r = initial_residual(val_tape, model, u, x);
                Var sq = square(r);
                acc.ic += sq.value();
                if (weights.initial != 0.0) {
                    const Tape::Seed s{sq.id(), weights.initial / static_cast<double>(nt)};
                    val_tape.backward(std::span<const Tape::Seed>(&s, 1), acc.grad);
                }
            }
        }
    };

    const int nthreads = std::max(1, std::min<int>(resolve_thread_count(threads),
                                                   static_cast<int>(n_blocks)));
    if (nthreads <= 1) {
        for (std::size_t bi = 0; bi < n_blocks; ++bi) run_block(bi);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (int w = 0; w < nthreads; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t bi = static_cast<std::size_t>(w); bi < n_blocks;
                     bi += static_cast<std::size_t>(nthreads))
                    run_block(bi);
            });
        for (auto& th : pool) th.join();
    }

    LossBreakdown out;
    std::vector<double> lie_sums(laws.size(), 0.0);
    for (const BlockAccum& acc : blocks) {
        for (std::size_t i = 0; i < np; ++i) grad[i] += acc.grad[i];
        out.pde += acc.pde;
        out.bc += acc.bc;
        out.ic += acc.ic;
        for (std::size_t k = 0; k < laws.size(); ++k) lie_sums[k] += acc.lie[k];
    }
    if (ni) out.pde /= static_cast<double>(ni);
    if (nb) out.bc /= static_cast<double>(nb);
    if (nt) out.ic /= static_cast<double>(nt);
    for (std::size_t k = 0; k < laws.size(); ++k)
        out.lie += ni ? lie_sums[k] / static_cast<double>(ni) : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

void TrainHistory::to_csv(std::ostream& out) const {
    out << "step,l_pde,l_bc,l_ic,l_lie,total,rel_err,cons_err,lr,seconds\n";
    char buf[256];
    for (const SnapshotRow& r : rows) {
        std::snprintf(buf, sizeof buf,
                      "%zu,%.10e,%.10e,%.10e,%.10e,%.10e,%.10e,%.10e,%.10e,%.6f\n", r.step,
                      r.l_pde, r.l_bc, r.l_ic, r.l_lie, r.total, r.rel_err, r.cons_err, r.lr,
                      r.seconds);
        out << buf;
    }
}

TrainResult train(const Mlp& initial, const PdeModel& model,
                  std::span<const ConservationLaw> laws, const LossWeights& weights,
                  const CollocationSet& data, const TrainConfig& config,
                  std::span<const Point> eval_grid) {
    TrainResult result{initial, {}, false, 0, {}};
    Mlp& mlp = result.mlp;
    const std::size_t np = mlp.param_count();

    const bool use_batched =
        config.engine == TrainEngine::Batched && detail::BatchedEngine::supports(laws);
    std::optional<detail::BatchedEngine> engine;
    if (use_batched) engine.emplace(mlp, model, laws, weights, data);

    std::vector<double> grad(np, 0.0);
    AdamState adam(np);
    Mlp last_good = mlp;

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        if (config.deterministic) return 0.0;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    auto eval_loss_grad = [&]() -> LossBreakdown {
        std::fill(grad.begin(), grad.end(), 0.0);
        if (use_batched) return engine->loss_grad(mlp.params(), grad);
        return loss_and_gradient_tape(mlp, model, laws, weights, data, grad, config.threads);
    };

    auto snapshot = [&](std::size_t step, const LossBreakdown& parts, double lr) {
        SnapshotRow row;
        row.step = step;
        row.l_pde = parts.pde;
        row.l_bc = parts.bc;
        row.l_ic = parts.ic;
        row.l_lie = parts.lie;
        row.total = parts.total(weights);
        row.cons_err = parts.lie;
        row.lr = lr;
        row.seconds = elapsed();
        if (!eval_grid.empty() && model.has_oracle()) {
            std::vector<double> u_hat(eval_grid.size()), u_star(eval_grid.size());
            for (std::size_t i = 0; i < eval_grid.size(); ++i) {
                u_hat[i] = mlp.forward_scalar(eval_grid[i].x, eval_grid[i].t);
                u_star[i] = model.exact(eval_grid[i].x, eval_grid[i].t);
            }
            row.rel_err = relative_test_error(u_hat, u_star, ErrorMode::GlobalL2);
        } else {
            row.rel_err = std::numeric_limits<double>::quiet_NaN();
        }
        result.history.rows.push_back(row);
    };

    for (std::size_t step = 0; step < config.iterations; ++step) {
        const LossBreakdown parts = eval_loss_grad();
        const double total = parts.total(weights);
        if (!std::isfinite(total)) {
            result.diverged = true;
            result.diagnostic = "non-finite loss at step " + std::to_string(step);
            result.mlp = last_good;
            return result;
        }
        bool grad_ok = true;
        for (double g : grad)
            if (!std::isfinite(g)) { grad_ok = false; break; }
        if (!grad_ok) {
            result.diverged = true;
            result.diagnostic = "non-finite gradient at step " + std::to_string(step);
            result.mlp = last_good;
            return result;
        }

        const double lr = lr_schedule(step, config.lr0, config.lr_decay, config.decay_interval);
        if (step % config.snapshot_every == 0) {
            snapshot(step, parts, lr);
            last_good = mlp;
        }
        adam.step(mlp.params(), grad, lr);
        result.steps_completed = step + 1;
    }

    // final snapshot at the trained parameters
    const LossBreakdown parts = eval_loss_grad();
    snapshot(config.iterations, parts,
             lr_schedule(config.iterations, config.lr0, config.lr_decay, config.decay_interval));
    return result;
}

}  // namespace lsn
