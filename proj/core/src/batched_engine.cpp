#include "batched_engine.hpp"

#include <stdexcept>

namespace lsn::detail {

namespace {
constexpr int V = 0, T = 1, X = 2, XX = 3, XT = 4, XXX = 5;

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMajorMutMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

bool slot_active(ad::DerivSet s, int slot) {
    using ad::Partial;
    switch (slot) {
        case V: return true;
        case T: return s.has(Partial::T);
        case X: return s.has(Partial::X);
        case XX: return s.has(Partial::XX);
        case XT: return s.has(Partial::XT);
        case XXX: return s.has(Partial::XXX);
    }
    return false;
}

double coeff_for(const SlotCoeffs& c, int slot) {
    switch (slot) {
        case V: return c.v;
        case T: return c.t;
        case X: return c.x;
        case XX: return c.xx;
        case XT: return c.xt;
        case XXX: return c.xxx;
    }
    return 0.0;
}
}  // namespace

bool BatchedEngine::supports(std::span<const ConservationLaw> laws) {
    for (const ConservationLaw& law : laws)
        if (law.kind == LawKind::Custom) return false;
    return true;
}

BatchedEngine::BatchedEngine(const Mlp& mlp, const PdeModel& model,
                             std::span<const ConservationLaw> laws, const LossWeights& weights,
                             const CollocationSet& data)
    : mlp_(mlp), model_(model), weights_(weights), laws_(laws.begin(), laws.end()) {
    if (!supports(laws)) throw std::invalid_argument("BatchedEngine: custom law unsupported");

    const std::size_t L = mlp.layers().size();

    // ----- interior pipe -----
    ad::DerivSet spec = model.required_partials();
    for (const ConservationLaw& law : laws_) {
        law.validate_for(model);
        spec = spec | law.required_partials();
    }
    interior_ = data.interior;
    const std::size_t ni = interior_.size();
    interior_pipe_.rows = ni;
    interior_pipe_.act.resize(L);
    interior_pipe_.z.resize(L);
    for (int s = 0; s < kSlots; ++s) interior_pipe_.active[s] = slot_active(spec, s);

    pde_coeffs_.reserve(ni);
    for (const Point& p : interior_) pde_coeffs_.push_back(interior_coeffs(model, p.x, p.t));
    for (const ConservationLaw& law : laws_) {
        law_is_kdv_mass_.push_back(law.kind == LawKind::KdvMass);
        auto& per_point = law_coeffs_.emplace_back();
        if (law.kind == LawKind::KdvMass) continue;  // residual shared with the PDE term
        per_point.reserve(ni);
        for (const Point& p : interior_) per_point.push_back(lie_coeffs(law, model, p.x, p.t));
    }

    if (ni > 0) {
        Channels& a0 = interior_pipe_.act[0];
        for (int s = 0; s < kSlots; ++s)
            if (interior_pipe_.active[s]) a0.m[s] = Mat::Zero(ni, 2);
        for (std::size_t i = 0; i < ni; ++i) {
            a0.m[V](i, 0) = interior_[i].x;
            a0.m[V](i, 1) = interior_[i].t;
        }
        if (interior_pipe_.active[X]) a0.m[X].col(0).setOnes();
        if (interior_pipe_.active[T]) a0.m[T].col(1).setOnes();
    }

    // ----- boundary + initial pipe -----
    n_boundary_ = data.boundary.size();
    n_initial_ = data.initial.size();
    const std::size_t bv = n_boundary_ + n_initial_;
    value_pipe_.rows = bv;
    value_pipe_.act.resize(L);
    value_pipe_.z.resize(L);
    value_targets_.resize(bv);
    deriv_row_.assign(bv, 0);
    deriv_targets_ = Eigen::VectorXd::Zero(bv);

    bool any_deriv = false;
    Mat inputs(bv, 2);
    for (std::size_t i = 0; i < n_boundary_; ++i) {
        inputs(i, 0) = data.boundary[i].x;
        inputs(i, 1) = data.boundary[i].t;
        value_targets_(i) = model.boundary_datum(data.boundary[i].x, data.boundary[i].t);
        if (model.boundary_needs_derivative(data.boundary[i].x)) {
            deriv_row_[i] = 1;
            deriv_targets_(i) =
                model.boundary_derivative_datum(data.boundary[i].x, data.boundary[i].t);
            any_deriv = true;
        }
    }
    for (std::size_t i = 0; i < n_initial_; ++i) {
        inputs(n_boundary_ + i, 0) = data.initial[i];
        inputs(n_boundary_ + i, 1) = 0.0;
        value_targets_(n_boundary_ + i) = model.initial_datum(data.initial[i]);
    }
    value_pipe_.active[X] = any_deriv;
    if (bv > 0) {
        Channels& a0 = value_pipe_.act[0];
        a0.m[V] = inputs;
        if (any_deriv) {
            a0.m[X] = Mat::Zero(bv, 2);
            a0.m[X].col(0).setOnes();
        }
    }
}

void BatchedEngine::forward(Pipe& p, std::span<const double> theta) const {
    const auto layers = mlp_.layers();
    const bool* on = p.active;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& ly = layers[l];
        RowMajorMap W(theta.data() + ly.w_off, ly.out, ly.in);
        Eigen::Map<const Eigen::RowVectorXd> b(theta.data() + ly.b_off, ly.out);

        Channels& z = p.z[l];
        const Channels& a = p.act[l];
        for (int s = 0; s < kSlots; ++s)
            if (on[s]) z.m[s].noalias() = a.m[s] * W.transpose();
        z.m[V].rowwise() += b;

        if (l + 1 == layers.size()) break;
        Channels& an = p.act[l + 1];
        Arr av = z.m[V].array().tanh();
        Arr d1 = 1.0 - av.square();
        an.m[V] = av;
        if (on[T]) an.m[T] = d1 * z.m[T].array();
        if (on[X]) an.m[X] = d1 * z.m[X].array();
        if (on[XX] || on[XT] || on[XXX]) {
            Arr d2 = -2.0 * av * d1;
            if (on[XX]) an.m[XX] = d2 * z.m[X].array().square() + d1 * z.m[XX].array();
            if (on[XT])
                an.m[XT] = d2 * z.m[X].array() * z.m[T].array() + d1 * z.m[XT].array();
            if (on[XXX]) {
                Arr d3 = -2.0 * (d1.square() + av * d2);
                an.m[XXX] = d3 * z.m[X].array().cube() +
                            3.0 * d2 * z.m[X].array() * z.m[XX].array() + d1 * z.m[XXX].array();
            }
        }
    }
}

void BatchedEngine::backward(Pipe& p, std::span<const double> theta, std::span<double> grad,
                             Channels seed) const {
    const auto layers = mlp_.layers();
    const bool* on = p.active;
    Channels zbar = std::move(seed);  // adjoint of the output pre-activation slots
    for (std::size_t li = layers.size(); li-- > 0;) {
        const auto& ly = layers[li];
        RowMajorMap W(theta.data() + ly.w_off, ly.out, ly.in);
        RowMajorMutMap GW(grad.data() + ly.w_off, ly.out, ly.in);
        Eigen::Map<Eigen::VectorXd> GB(grad.data() + ly.b_off, ly.out);

        const Channels& a = p.act[li];
        for (int s = 0; s < kSlots; ++s)
            if (on[s]) GW.noalias() += zbar.m[s].transpose() * a.m[s];
        GB.noalias() += zbar.m[V].colwise().sum().transpose();
        if (li == 0) break;

        Channels abar;
        for (int s = 0; s < kSlots; ++s)
            if (on[s]) abar.m[s].noalias() = zbar.m[s] * W;

        // pullback through the tanh jet of layer li-1
        const Channels& z = p.z[li - 1];
        const auto& av = p.act[li].m[V].array();
        Arr d1 = 1.0 - av.square();
        Arr d2 = -2.0 * av * d1;

        Channels nz;
        auto arr = [&](int s) { return z.m[s].array(); };
        auto bar = [&](int s) { return abar.m[s].array(); };

        Arr zv_bar = bar(V) * d1;
        if (on[T]) zv_bar += bar(T) * d2 * arr(T);
        if (on[X]) zv_bar += bar(X) * d2 * arr(X);
        if (on[XX] || on[XT] || on[XXX]) {
            Arr d3 = -2.0 * (d1.square() + av * d2);
            if (on[XX]) zv_bar += bar(XX) * (d3 * arr(X).square() + d2 * arr(XX));
            if (on[XT]) zv_bar += bar(XT) * (d3 * arr(X) * arr(T) + d2 * arr(XT));
            if (on[XXX]) {
                Arr d4 = -2.0 * (3.0 * d1 * d2 + av * d3);
                zv_bar += bar(XXX) *
                          (d4 * arr(X).cube() + 3.0 * d3 * arr(X) * arr(XX) + d2 * arr(XXX));
            }
        }
        nz.m[V] = zv_bar;

        if (on[T]) {
            Arr zt_bar = bar(T) * d1;
            if (on[XT]) zt_bar += bar(XT) * d2 * arr(X);
            nz.m[T] = zt_bar;
        }
        if (on[X]) {
            Arr zx_bar = bar(X) * d1;
            if (on[XX]) zx_bar += 2.0 * bar(XX) * d2 * arr(X);
            if (on[XT]) zx_bar += bar(XT) * d2 * arr(T);
            if (on[XXX]) {
                Arr d3 = -2.0 * (d1.square() + av * d2);
                zx_bar += bar(XXX) * (3.0 * d3 * arr(X).square() + 3.0 * d2 * arr(XX));
            }
            nz.m[X] = zx_bar;
        }
        if (on[XX]) {
            Arr zxx_bar = bar(XX) * d1;
            if (on[XXX]) zxx_bar += 3.0 * bar(XXX) * d2 * arr(X);
            nz.m[XX] = zxx_bar;
        }
        if (on[XT]) nz.m[XT] = bar(XT) * d1;
        if (on[XXX]) nz.m[XXX] = bar(XXX) * d1;
        zbar = std::move(nz);
    }
}

LossBreakdown BatchedEngine::loss_grad(std::span<const double> theta, std::span<double> grad) {
    LossBreakdown out;
    const std::size_t ni = interior_.size();

    // ----- boundary and initial -----
    if (value_pipe_.rows > 0) {
        forward(value_pipe_, theta);
        const Channels& zout = value_pipe_.z.back();
        const Eigen::VectorXd resid = zout.m[V].col(0) - value_targets_;

        Eigen::VectorXd seed_v = Eigen::VectorXd::Zero(value_pipe_.rows);
        Eigen::VectorXd seed_x;
        if (value_pipe_.active[X]) seed_x = Eigen::VectorXd::Zero(value_pipe_.rows);

        if (n_boundary_ > 0) {
            const double wb = 2.0 * weights_.boundary / static_cast<double>(n_boundary_);
            double acc = 0.0;
            for (std::size_t i = 0; i < n_boundary_; ++i) {
                acc += resid(i) * resid(i);
                seed_v(i) = wb * resid(i);
                if (deriv_row_[i]) {
                    const double rd = zout.m[X](i, 0) - deriv_targets_(i);
                    acc += rd * rd;
                    seed_x(i) = wb * rd;
                }
            }
            out.bc = acc / static_cast<double>(n_boundary_);
        }
        if (n_initial_ > 0) {
            const double wi = 2.0 * weights_.initial / static_cast<double>(n_initial_);
            double acc = 0.0;
            for (std::size_t i = n_boundary_; i < value_pipe_.rows; ++i) {
                acc += resid(i) * resid(i);
                seed_v(i) = wi * resid(i);
            }
            out.ic = acc / static_cast<double>(n_initial_);
        }

        Channels seed;
        seed.m[V] = seed_v;
        if (value_pipe_.active[X]) seed.m[X] = seed_x;
        backward(value_pipe_, theta, grad, std::move(seed));
    }

    // ----- interior -----
    if (ni > 0) {
        forward(interior_pipe_, theta);
        const Channels& zout = interior_pipe_.z.back();
        const bool* on = interior_pipe_.active;
        auto slot = [&](int s, std::size_t i) -> double {
            return on[s] ? zout.m[s](i, 0) : 0.0;
        };

        const bool kdv =
            model_.kind == ModelKind::KdV || model_.kind == ModelKind::KdVManufactured;
        const bool maxwell = model_.kind == ModelKind::Maxwellian;

        Eigen::VectorXd r_pde(ni);
        for (std::size_t i = 0; i < ni; ++i) {
            ad::Jet j{slot(V, i), slot(T, i), slot(X, i), slot(XX, i), slot(XT, i), slot(XXX, i)};
            double r = pde_coeffs_[i].apply(j);
            if (kdv) r -= j.v * j.x;
            if (maxwell) r += j.v * j.v;
            r_pde(i) = r;
        }
        out.pde = r_pde.squaredNorm() / static_cast<double>(ni);

        // law residuals are evaluated even at zero weight so the history can
        // report the conservation error of a plain PINN run
        std::vector<Eigen::VectorXd> r_laws(laws_.size());
        for (std::size_t k = 0; k < laws_.size(); ++k) {
            if (law_is_kdv_mass_[k]) {
                r_laws[k] = r_pde;
            } else {
                r_laws[k].resize(ni);
                for (std::size_t i = 0; i < ni; ++i) {
                    ad::Jet j{slot(V, i), slot(T, i), slot(X, i),
                              slot(XX, i), slot(XT, i), slot(XXX, i)};
                    r_laws[k](i) = law_coeffs_[k][i].apply(j);
                }
            }
            out.lie += r_laws[k].squaredNorm() / static_cast<double>(ni);
        }

        Channels seed;
        for (int s = 0; s < kSlots; ++s)
            if (on[s]) seed.m[s] = Mat::Zero(ni, 1);
        const double wp = 2.0 * weights_.pde / static_cast<double>(ni);
        const double wl = 2.0 * weights_.lie / static_cast<double>(ni);
        for (std::size_t i = 0; i < ni; ++i) {
            for (int s = 0; s < kSlots; ++s) {
                if (!on[s]) continue;
                double c = coeff_for(pde_coeffs_[i], s);
                if (kdv && s == V) c -= slot(X, i);
                if (kdv && s == X) c -= slot(V, i);
                if (maxwell && s == V) c += 2.0 * slot(V, i);
                double acc = wp * r_pde(i) * c;
                if (weights_.lie != 0.0) {
                    for (std::size_t k = 0; k < laws_.size(); ++k) {
                        const double ck =
                            law_is_kdv_mass_[k] ? c : coeff_for(law_coeffs_[k][i], s);
                        acc += wl * r_laws[k](i) * ck;
                    }
                }
                seed.m[s](i, 0) = acc;
            }
        }
        backward(interior_pipe_, theta, grad, std::move(seed));
    }

    return out;
}

}  // namespace lsn::detail
