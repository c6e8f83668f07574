#include "lsn/autodiff.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "lsn/special.hpp"

namespace lsn::ad {

Tape::Tape(DerivSet spec, std::span<const double> params)
    : spec_(spec), params_(params) {
    need_t_ = spec.has(Partial::T);
    need_x_ = spec.has(Partial::X);
    need_xx_ = spec.has(Partial::XX);
    need_xt_ = spec.has(Partial::XT);
    need_xxx_ = spec.has(Partial::XXX);
}

void Tape::bind_params(std::span<const double> params) {
    if (params.size() != params_.size() && !op_.empty())
        throw std::invalid_argument("bind_params: parameter count changed under a live tape");
    params_ = params;
}

void Tape::reset() {
    op_.clear();
    affine_.clear();
    v_.clear(); dt_.clear(); dx_.clear(); dxx_.clear(); dxt_.clear(); dxxx_.clear();
    u1_.clear(); u2_.clear(); u3_.clear(); u4_.clear();
}

void Tape::replay() {
    const std::size_t n = op_.size();
    for (std::size_t i = 0; i < n; ++i) eval(static_cast<NodeId>(i), op_[i]);
}

NodeId Tape::push(const Rec& r) {
    const NodeId id = static_cast<NodeId>(op_.size());
    op_.push_back(r);
    v_.push_back(0.0);
    if (need_t_) dt_.push_back(0.0);
    if (need_x_) dx_.push_back(0.0);
    if (need_xx_) dxx_.push_back(0.0);
    if (need_xt_) dxt_.push_back(0.0);
    if (need_xxx_) dxxx_.push_back(0.0);
    if (r.op == OpUnary) {
        u1_.resize(op_.size(), 0.0);
        if (!spec_.empty()) {
            u2_.resize(op_.size(), 0.0);
            u3_.resize(op_.size(), 0.0);
            u4_.resize(op_.size(), 0.0);
        }
    }
    eval(id, r);
    return id;
}

NodeId Tape::input(Axis which, double value) {
    Rec r{};
    r.op = OpInput;
    r.a = static_cast<NodeId>(which);
    r.imm = value;
    return push(r);
}

NodeId Tape::constant(double value) {
    Rec r{};
    r.op = OpConst;
    r.imm = value;
    return push(r);
}

NodeId Tape::param(std::size_t index) {
    if (index >= params_.size()) throw std::invalid_argument("param index out of range");
    Rec r{};
    r.op = OpParam;
    r.a = static_cast<NodeId>(index);
    return push(r);
}

NodeId Tape::add(NodeId a, NodeId b) {
    Rec r{};
    r.op = OpAdd; r.a = a; r.b = b;
    return push(r);
}

NodeId Tape::sub(NodeId a, NodeId b) {
    Rec r{};
    r.op = OpSub; r.a = a; r.b = b;
    return push(r);
}

NodeId Tape::mul(NodeId a, NodeId b) {
    Rec r{};
    r.op = OpMul; r.a = a; r.b = b;
    return push(r);
}

NodeId Tape::div(NodeId a, NodeId b) { return mul(a, unary(UnaryFunc::Recip, b)); }

NodeId Tape::add_imm(NodeId a, double c) {
    Rec r{};
    r.op = OpAddImm; r.a = a; r.imm = c;
    return push(r);
}

NodeId Tape::mul_imm(NodeId a, double c) {
    Rec r{};
    r.op = OpMulImm; r.a = a; r.imm = c;
    return push(r);
}

NodeId Tape::unary(UnaryFunc f, NodeId a, double exponent) {
    Rec r{};
    r.op = OpUnary; r.fn = f; r.a = a; r.imm = exponent;
    return push(r);
}

NodeId Tape::affine(NodeId first, std::uint32_t n, std::size_t w_offset, std::size_t b_index) {
    if (first + n > op_.size()) throw std::invalid_argument("affine: input range out of bounds");
    if (w_offset + n > params_.size() || b_index >= params_.size())
        throw std::invalid_argument("affine: parameter range out of bounds");
    Rec r{};
    r.op = OpAffine;
    r.a = static_cast<NodeId>(affine_.size());
    affine_.push_back(AffineRec{first, n, static_cast<std::uint32_t>(w_offset),
                                static_cast<std::uint32_t>(b_index)});
    return push(r);
}

NodeId Tape::extract(NodeId a, Slot s) {
    Rec r{};
    r.op = OpExtract; r.a = a; r.b = static_cast<NodeId>(s);
    return push(r);
}

NodeId Tape::shift_x(NodeId a) {
    Rec r{};
    r.op = OpShiftX; r.a = a;
    return push(r);
}

NodeId Tape::shift_t(NodeId a) {
    Rec r{};
    r.op = OpShiftT; r.a = a;
    return push(r);
}

Jet Tape::jet(NodeId id) const {
    Jet j;
    j.v = v_[id];
    if (need_t_) j.t = dt_[id];
    if (need_x_) j.x = dx_[id];
    if (need_xx_) j.xx = dxx_[id];
    if (need_xt_) j.xt = dxt_[id];
    if (need_xxx_) j.xxx = dxxx_[id];
    return j;
}

// shared by tape affine nodes and Mlp::forward_scalar so the two paths round
// identically
double dot_bias(const double* w, const double* x, std::size_t n, double b) {
    double acc = b;
    for (std::size_t k = 0; k < n; ++k) acc += w[k] * x[k];
    return acc;
}

namespace {
double dot(const double* w, const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += w[k] * x[k];
    return acc;
}
}  // namespace

void Tape::eval_unary(NodeId id, const Rec& r) {
    const double fv = v_[r.a];
    double h, d1 = 0, d2 = 0, d3 = 0, d4 = 0;
    switch (r.fn) {
        case UnaryFunc::Tanh: {
            h = std::tanh(fv);
            d1 = 1.0 - h * h;
            d2 = -2.0 * h * d1;
            d3 = -2.0 * (d1 * d1 + h * d2);
            d4 = -2.0 * (3.0 * d1 * d2 + h * d3);
            break;
        }
        case UnaryFunc::Exp: {
            h = std::exp(fv);
            d1 = d2 = d3 = d4 = h;
            break;
        }
        case UnaryFunc::Sin: {
            h = std::sin(fv);
            d1 = std::cos(fv);
            d2 = -h; d3 = -d1; d4 = h;
            break;
        }
        case UnaryFunc::Cos: {
            h = std::cos(fv);
            d1 = -std::sin(fv);
            d2 = -h; d3 = -d1; d4 = h;
            break;
        }
        case UnaryFunc::Log: {
            if (!(fv > 0.0)) throw std::domain_error("log of non-positive jet value");
            h = std::log(fv);
            const double iu = 1.0 / fv;
            d1 = iu; d2 = -iu * iu; d3 = 2.0 * iu * iu * iu; d4 = -6.0 * iu * iu * iu * iu;
            break;
        }
        case UnaryFunc::NormalCdf: {
            // the fault hook shifts the whole germ so an injected corruption
            // stays self-consistent and therefore visible to residual checks
            const double zf =
                fv + testing::cdf_fault_shift.load(std::memory_order_relaxed);
            h = lsn::normal_cdf(fv);  // applies the same shift internally
            d1 = lsn::normal_pdf(zf);
            d2 = -zf * d1;
            d3 = (zf * zf - 1.0) * d1;
            d4 = zf * (3.0 - zf * zf) * d1;
            break;
        }
        case UnaryFunc::Recip: {
            if (fv == 0.0) throw std::domain_error("division by zero jet value");
            h = 1.0 / fv;
            d1 = -h * h;
            d2 = -2.0 * h * d1;      //  2/u^3
            d3 = -3.0 * h * d2;      // -6/u^4
            d4 = -4.0 * h * d3;      // 24/u^5
            break;
        }
        case UnaryFunc::PowP: {
            const double p = r.imm;
            if (!(fv > 0.0)) throw std::domain_error("pow of non-positive jet value");
            h = std::pow(fv, p);
            const double iu = 1.0 / fv;
            d1 = p * h * iu;
            d2 = (p - 1.0) * d1 * iu;
            d3 = (p - 2.0) * d2 * iu;
            d4 = (p - 3.0) * d3 * iu;
            break;
        }
        default: throw std::logic_error("unhandled unary");
    }

    v_[id] = h;
    u1_[id] = d1;
    if (!spec_.empty()) {
        u2_[id] = d2; u3_[id] = d3; u4_[id] = d4;
        const double ft = need_t_ ? dt_[r.a] : 0.0;
        const double fx = need_x_ ? dx_[r.a] : 0.0;
        if (need_t_) dt_[id] = d1 * ft;
        if (need_x_) dx_[id] = d1 * fx;
        if (need_xx_) dxx_[id] = d2 * fx * fx + d1 * dxx_[r.a];
        if (need_xt_) dxt_[id] = d2 * fx * ft + d1 * dxt_[r.a];
        if (need_xxx_)
            dxxx_[id] = d3 * fx * fx * fx + 3.0 * d2 * fx * dxx_[r.a] + d1 * dxxx_[r.a];
    }
}

void Tape::eval(NodeId id, const Rec& r) {
    switch (r.op) {
        case OpInput: {
            v_[id] = r.imm;
            if (need_t_) dt_[id] = (static_cast<Axis>(r.a) == Axis::T) ? 1.0 : 0.0;
            if (need_x_) dx_[id] = (static_cast<Axis>(r.a) == Axis::X) ? 1.0 : 0.0;
            if (need_xx_) dxx_[id] = 0.0;
            if (need_xt_) dxt_[id] = 0.0;
            if (need_xxx_) dxxx_[id] = 0.0;
            break;
        }
        case OpConst:
        case OpParam: {
            v_[id] = (r.op == OpConst) ? r.imm : params_[r.a];
            if (need_t_) dt_[id] = 0.0;
            if (need_x_) dx_[id] = 0.0;
            if (need_xx_) dxx_[id] = 0.0;
            if (need_xt_) dxt_[id] = 0.0;
            if (need_xxx_) dxxx_[id] = 0.0;
            break;
        }
        case OpAdd: {
            v_[id] = v_[r.a] + v_[r.b];
            if (need_t_) dt_[id] = dt_[r.a] + dt_[r.b];
            if (need_x_) dx_[id] = dx_[r.a] + dx_[r.b];
            if (need_xx_) dxx_[id] = dxx_[r.a] + dxx_[r.b];
            if (need_xt_) dxt_[id] = dxt_[r.a] + dxt_[r.b];
            if (need_xxx_) dxxx_[id] = dxxx_[r.a] + dxxx_[r.b];
            break;
        }
        case OpSub: {
            v_[id] = v_[r.a] - v_[r.b];
            if (need_t_) dt_[id] = dt_[r.a] - dt_[r.b];
            if (need_x_) dx_[id] = dx_[r.a] - dx_[r.b];
            if (need_xx_) dxx_[id] = dxx_[r.a] - dxx_[r.b];
            if (need_xt_) dxt_[id] = dxt_[r.a] - dxt_[r.b];
            if (need_xxx_) dxxx_[id] = dxxx_[r.a] - dxxx_[r.b];
            break;
        }
        case OpMul: {
            const NodeId a = r.a, b = r.b;
            const double fv = v_[a], gv = v_[b];
            v_[id] = fv * gv;
            if (need_t_) dt_[id] = dt_[a] * gv + fv * dt_[b];
            if (need_x_) dx_[id] = dx_[a] * gv + fv * dx_[b];
            if (need_xx_) {
                const double leib2 =
                    2.0 + testing::jet_mul_xx_skew.load(std::memory_order_relaxed);
                dxx_[id] = dxx_[a] * gv + leib2 * dx_[a] * dx_[b] + fv * dxx_[b];
            }
            if (need_xt_)
                dxt_[id] = dxt_[a] * gv + dx_[a] * dt_[b] + dt_[a] * dx_[b] + fv * dxt_[b];
            if (need_xxx_)
                dxxx_[id] = dxxx_[a] * gv + 3.0 * dxx_[a] * dx_[b] + 3.0 * dx_[a] * dxx_[b] +
                            fv * dxxx_[b];
            break;
        }
        case OpAddImm: {
            v_[id] = v_[r.a] + r.imm;
            if (need_t_) dt_[id] = dt_[r.a];
            if (need_x_) dx_[id] = dx_[r.a];
            if (need_xx_) dxx_[id] = dxx_[r.a];
            if (need_xt_) dxt_[id] = dxt_[r.a];
            if (need_xxx_) dxxx_[id] = dxxx_[r.a];
            break;
        }
        case OpMulImm: {
            const double c = r.imm;
            v_[id] = v_[r.a] * c;
            if (need_t_) dt_[id] = dt_[r.a] * c;
            if (need_x_) dx_[id] = dx_[r.a] * c;
            if (need_xx_) dxx_[id] = dxx_[r.a] * c;
            if (need_xt_) dxt_[id] = dxt_[r.a] * c;
            if (need_xxx_) dxxx_[id] = dxxx_[r.a] * c;
            break;
        }
        case OpUnary:
            eval_unary(id, r);
            break;
        case OpAffine: {
            const AffineRec& ar = affine_[r.a];
            const double* w = params_.data() + ar.w_off;
            v_[id] = dot_bias(w, v_.data() + ar.first, ar.n, params_[ar.b_idx]);
            if (need_t_) dt_[id] = dot(w, dt_.data() + ar.first, ar.n);
            if (need_x_) dx_[id] = dot(w, dx_.data() + ar.first, ar.n);
            if (need_xx_) dxx_[id] = dot(w, dxx_.data() + ar.first, ar.n);
            if (need_xt_) dxt_[id] = dot(w, dxt_.data() + ar.first, ar.n);
            if (need_xxx_) dxxx_[id] = dot(w, dxxx_.data() + ar.first, ar.n);
            break;
        }
        case OpExtract: {
            double s = 0.0;
            switch (static_cast<Slot>(r.b)) {
                case Slot::V: s = v_[r.a]; break;
                case Slot::T: s = need_t_ ? dt_[r.a] : 0.0; break;
                case Slot::X: s = need_x_ ? dx_[r.a] : 0.0; break;
                case Slot::XX: s = need_xx_ ? dxx_[r.a] : 0.0; break;
                case Slot::XT: s = need_xt_ ? dxt_[r.a] : 0.0; break;
                case Slot::XXX: s = need_xxx_ ? dxxx_[r.a] : 0.0; break;
            }
            v_[id] = s;
            if (need_t_) dt_[id] = 0.0;
            if (need_x_) dx_[id] = 0.0;
            if (need_xx_) dxx_[id] = 0.0;
            if (need_xt_) dxt_[id] = 0.0;
            if (need_xxx_) dxxx_[id] = 0.0;
            break;
        }
        case OpShiftX: {
            v_[id] = need_x_ ? dx_[r.a] : 0.0;
            if (need_t_) dt_[id] = need_xt_ ? dxt_[r.a] : 0.0;
            if (need_x_) dx_[id] = need_xx_ ? dxx_[r.a] : 0.0;
            if (need_xx_) dxx_[id] = need_xxx_ ? dxxx_[r.a] : 0.0;
            if (need_xt_) dxt_[id] = 0.0;
            if (need_xxx_) dxxx_[id] = 0.0;
            break;
        }
        case OpShiftT: {
            v_[id] = need_t_ ? dt_[r.a] : 0.0;
            if (need_t_) dt_[id] = 0.0;
            if (need_x_) dx_[id] = need_xt_ ? dxt_[r.a] : 0.0;
            if (need_xx_) dxx_[id] = 0.0;
            if (need_xt_) dxt_[id] = 0.0;
            if (need_xxx_) dxxx_[id] = 0.0;
            break;
        }
        default: throw std::logic_error("unhandled op");
    }
}

void Tape::backward(NodeId loss, std::span<double> grad) {
    const Seed s{loss, 1.0};
    backward(std::span<const Seed>(&s, 1), grad);
}

void Tape::backward(std::span<const Seed> seeds, std::span<double> grad) {
    const std::size_t n = op_.size();
    if (grad.size() != params_.size())
        throw std::invalid_argument("backward: gradient length must equal parameter count");
    for (const Seed& s : seeds)
        if (s.node >= n) throw std::out_of_range("backward: seed node id out of range");

    av_.assign(n, 0.0);
    if (need_t_) at_.assign(n, 0.0);
    if (need_x_) ax_.assign(n, 0.0);
    if (need_xx_) axx_.assign(n, 0.0);
    if (need_xt_) axt_.assign(n, 0.0);
    if (need_xxx_) axxx_.assign(n, 0.0);

    for (const Seed& s : seeds) av_[s.node] += s.weight;

    for (std::size_t ii = n; ii-- > 0;) {
        const NodeId id = static_cast<NodeId>(ii);
        const Rec& r = op_[ii];
        const double hv = av_[id];
        const double ht = need_t_ ? at_[id] : 0.0;
        const double hx = need_x_ ? ax_[id] : 0.0;
        const double hxx = need_xx_ ? axx_[id] : 0.0;
        const double hxt = need_xt_ ? axt_[id] : 0.0;
        const double hxxx = need_xxx_ ? axxx_[id] : 0.0;
        if (hv == 0.0 && ht == 0.0 && hx == 0.0 && hxx == 0.0 && hxt == 0.0 && hxxx == 0.0)
            continue;

        switch (r.op) {
            case OpInput:
            case OpConst:
                break;
            case OpParam:
                grad[r.a] += hv;
                break;
            case OpAdd: {
                av_[r.a] += hv; av_[r.b] += hv;
                if (need_t_) { at_[r.a] += ht; at_[r.b] += ht; }
                if (need_x_) { ax_[r.a] += hx; ax_[r.b] += hx; }
                if (need_xx_) { axx_[r.a] += hxx; axx_[r.b] += hxx; }
                if (need_xt_) { axt_[r.a] += hxt; axt_[r.b] += hxt; }
                if (need_xxx_) { axxx_[r.a] += hxxx; axxx_[r.b] += hxxx; }
                break;
            }
            case OpSub: {
                av_[r.a] += hv; av_[r.b] -= hv;
                if (need_t_) { at_[r.a] += ht; at_[r.b] -= ht; }
                if (need_x_) { ax_[r.a] += hx; ax_[r.b] -= hx; }
                if (need_xx_) { axx_[r.a] += hxx; axx_[r.b] -= hxx; }
                if (need_xt_) { axt_[r.a] += hxt; axt_[r.b] -= hxt; }
                if (need_xxx_) { axxx_[r.a] += hxxx; axxx_[r.b] -= hxxx; }
                break;
            }
            case OpMul: {
                const NodeId a = r.a, b = r.b;
                const double fv = v_[a], gv = v_[b];
                const double ft = need_t_ ? dt_[a] : 0.0, gt = need_t_ ? dt_[b] : 0.0;
                const double fx = need_x_ ? dx_[a] : 0.0, gx = need_x_ ? dx_[b] : 0.0;
                const double fxx = need_xx_ ? dxx_[a] : 0.0, gxx = need_xx_ ? dxx_[b] : 0.0;
                const double fxt = need_xt_ ? dxt_[a] : 0.0, gxt = need_xt_ ? dxt_[b] : 0.0;
                const double fxxx = need_xxx_ ? dxxx_[a] : 0.0, gxxx = need_xxx_ ? dxxx_[b] : 0.0;

                av_[a] += hv * gv + ht * gt + hx * gx + hxx * gxx + hxt * gxt + hxxx * gxxx;
                av_[b] += hv * fv + ht * ft + hx * fx + hxx * fxx + hxt * fxt + hxxx * fxxx;
                if (need_t_) {
                    at_[a] += ht * gv + hxt * gx;
                    at_[b] += ht * fv + hxt * fx;
                }
                if (need_x_) {
                    ax_[a] += hx * gv + 2.0 * hxx * gx + hxt * gt + 3.0 * hxxx * gxx;
                    ax_[b] += hx * fv + 2.0 * hxx * fx + hxt * ft + 3.0 * hxxx * fxx;
                }
                if (need_xx_) {
                    axx_[a] += hxx * gv + 3.0 * hxxx * gx;
                    axx_[b] += hxx * fv + 3.0 * hxxx * fx;
                }
                if (need_xt_) { axt_[a] += hxt * gv; axt_[b] += hxt * fv; }
                if (need_xxx_) { axxx_[a] += hxxx * gv; axxx_[b] += hxxx * fv; }
                break;
            }
            case OpAddImm: {
                av_[r.a] += hv;
                if (need_t_) at_[r.a] += ht;
                if (need_x_) ax_[r.a] += hx;
                if (need_xx_) axx_[r.a] += hxx;
                if (need_xt_) axt_[r.a] += hxt;
                if (need_xxx_) axxx_[r.a] += hxxx;
                break;
            }
            case OpMulImm: {
                const double c = r.imm;
                av_[r.a] += hv * c;
                if (need_t_) at_[r.a] += ht * c;
                if (need_x_) ax_[r.a] += hx * c;
                if (need_xx_) axx_[r.a] += hxx * c;
                if (need_xt_) axt_[r.a] += hxt * c;
                if (need_xxx_) axxx_[r.a] += hxxx * c;
                break;
            }
            case OpUnary: {
                const NodeId a = r.a;
                const double d1 = u1_[id];
                if (spec_.empty()) {
                    av_[a] += hv * d1;
                    break;
                }
                const double d2 = u2_[id], d3 = u3_[id], d4 = u4_[id];
                const double ft = need_t_ ? dt_[a] : 0.0;
                const double fx = need_x_ ? dx_[a] : 0.0;
                const double fxx = need_xx_ ? dxx_[a] : 0.0;
                const double fxt = need_xt_ ? dxt_[a] : 0.0;
                const double fxxx = need_xxx_ ? dxxx_[a] : 0.0;

                av_[a] += hv * d1 + ht * d2 * ft + hx * d2 * fx +
                          hxx * (d3 * fx * fx + d2 * fxx) +
                          hxt * (d3 * fx * ft + d2 * fxt) +
                          hxxx * (d4 * fx * fx * fx + 3.0 * d3 * fx * fxx + d2 * fxxx);
                if (need_t_) at_[a] += ht * d1 + hxt * d2 * fx;
                if (need_x_)
                    ax_[a] += hx * d1 + 2.0 * hxx * d2 * fx + hxt * d2 * ft +
                              hxxx * (3.0 * d3 * fx * fx + 3.0 * d2 * fxx);
                if (need_xx_) axx_[a] += hxx * d1 + 3.0 * hxxx * d2 * fx;
                if (need_xt_) axt_[a] += hxt * d1;
                if (need_xxx_) axxx_[a] += hxxx * d1;
                break;
            }
            case OpAffine: {
                const AffineRec& ar = affine_[r.a];
                const double* w = params_.data() + ar.w_off;
                const NodeId f = ar.first;
                auto pull = [&](std::vector<double>& adj, const std::vector<double>& val,
                                double hbar) {
                    if (hbar == 0.0) return;
                    double* as = adj.data() + f;
                    const double* vs = val.data() + f;
                    for (std::uint32_t k = 0; k < ar.n; ++k) as[k] += w[k] * hbar;
                    double* gw = grad.data() + ar.w_off;
                    for (std::uint32_t k = 0; k < ar.n; ++k) gw[k] += vs[k] * hbar;
                };
                pull(av_, v_, hv);
                if (need_t_) pull(at_, dt_, ht);
                if (need_x_) pull(ax_, dx_, hx);
                if (need_xx_) pull(axx_, dxx_, hxx);
                if (need_xt_) pull(axt_, dxt_, hxt);
                if (need_xxx_) pull(axxx_, dxxx_, hxxx);
                grad[ar.b_idx] += hv;
                break;
            }
            case OpExtract: {
                switch (static_cast<Slot>(r.b)) {
                    case Slot::V: av_[r.a] += hv; break;
                    case Slot::T: if (need_t_) at_[r.a] += hv; break;
                    case Slot::X: if (need_x_) ax_[r.a] += hv; break;
                    case Slot::XX: if (need_xx_) axx_[r.a] += hv; break;
                    case Slot::XT: if (need_xt_) axt_[r.a] += hv; break;
                    case Slot::XXX: if (need_xxx_) axxx_[r.a] += hv; break;
                }
                break;
            }
            case OpShiftX: {
                if (need_x_) ax_[r.a] += hv;
                if (need_xt_ && need_t_) axt_[r.a] += ht;
                if (need_xx_ && need_x_) axx_[r.a] += hx;
                if (need_xxx_ && need_xx_) axxx_[r.a] += hxx;
                break;
            }
            case OpShiftT: {
                if (need_t_) at_[r.a] += hv;
                if (need_xt_ && need_x_) axt_[r.a] += hx;
                break;
            }
            default: throw std::logic_error("unhandled op in backward");
        }
    }
}

double grad_check(const std::function<Var(Tape&)>& build_loss, DerivSet spec,
                  std::span<double> theta, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("grad_check: h must be positive");

    Tape tape(spec, theta);
    Var loss = build_loss(tape);
    const double f0 = loss.value();

    std::vector<double> grad(theta.size(), 0.0);
    tape.backward(loss.id(), grad);

    const double floor = 1e-6 * std::max(1.0, std::abs(f0));
    double worst = 0.0;
    auto eval_at = [&](std::size_t k, double delta) {
        const double saved = theta[k];
        theta[k] = saved + delta;
        tape.replay();
        const double f = loss.value();
        theta[k] = saved;
        return f;
    };
    for (std::size_t k = 0; k < theta.size(); ++k) {
        // one Richardson step on the central difference removes the O(h^2)
        // truncation term, which otherwise dominates on stiff losses
        const double d_h = (eval_at(k, h) - eval_at(k, -h)) / (2.0 * h);
        const double d_h2 = (eval_at(k, 0.5 * h) - eval_at(k, -0.5 * h)) / h;
        const double fd = (4.0 * d_h2 - d_h) / 3.0;
        const double err =
            std::abs(grad[k] - fd) / (floor + std::max(std::abs(grad[k]), std::abs(fd)));
        if (err > worst) worst = err;
    }
    tape.replay();  // restore original values
    return worst;
}

}  // namespace lsn::ad
