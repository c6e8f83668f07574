#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace lsn::ad {

// ---------------------------------------------------------------------------
// Derivative slot bookkeeping
// ---------------------------------------------------------------------------

/// The partial derivatives a jet carries besides its value.
enum class Partial : std::uint8_t {
    T   = 1u << 0,
    X   = 1u << 1,
    XX  = 1u << 2,
    XT  = 1u << 3,
    XXX = 1u << 4,
};

/// A request set of partials, closed under the chain-rule dependencies:
/// XT pulls in X and T, XXX pulls in XX, XX pulls in X.
class DerivSet {
public:
    constexpr DerivSet() = default;

    static constexpr DerivSet none() { return DerivSet{}; }
    static constexpr DerivSet full() { return DerivSet(0x1f); }
    static constexpr DerivSet of(std::initializer_list<Partial> ps) {
        std::uint8_t b = 0;
        for (Partial p : ps) b |= static_cast<std::uint8_t>(p);
        return DerivSet(b);
    }

    constexpr bool has(Partial p) const {
        return (bits_ & static_cast<std::uint8_t>(p)) != 0;
    }
    constexpr bool contains(DerivSet other) const {
        return (bits_ & other.bits_) == other.bits_;
    }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr DerivSet operator|(DerivSet o) const { return DerivSet(bits_ | o.bits_); }
    constexpr bool operator==(const DerivSet&) const = default;
    constexpr std::uint8_t bits() const { return bits_; }

private:
    explicit constexpr DerivSet(std::uint8_t b) : bits_(closure(b)) {}

    static constexpr std::uint8_t closure(std::uint8_t b) {
        // fixed point of the implication rules
        for (int i = 0; i < 3; ++i) {
            if (b & static_cast<std::uint8_t>(Partial::XT))
                b |= static_cast<std::uint8_t>(Partial::X) | static_cast<std::uint8_t>(Partial::T);
            if (b & static_cast<std::uint8_t>(Partial::XXX))
                b |= static_cast<std::uint8_t>(Partial::XX);
            if (b & static_cast<std::uint8_t>(Partial::XX))
                b |= static_cast<std::uint8_t>(Partial::X);
        }
        return b;
    }

    std::uint8_t bits_ = 0;
};

/// Raw partial derivatives of a scalar in (x, t), truncated to the six slots
/// {u, u_t, u_x, u_xx, u_xt, u_xxx}. No factorial scaling: each slot holds the
/// partial derivative itself. Slots outside the governing DerivSet are zero.
struct Jet {
    double v   = 0.0;
    double t   = 0.0;
    double x   = 0.0;
    double xx  = 0.0;
    double xt  = 0.0;
    double xxx = 0.0;
};

enum class Axis : std::uint8_t { X, T };

enum class Slot : std::uint8_t { V, T, X, XX, XT, XXX };

using NodeId = std::uint32_t;

enum class UnaryFunc : std::uint8_t {
    Tanh, Exp, Sin, Cos, Log, NormalCdf, Recip, PowP,
};

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

/// Append-only record of jet operations with eager forward evaluation and
/// exact reverse accumulation of d(value)/d(parameter).
///
/// Storage is slot-major: inactive slots cost nothing to propagate. A tape is
/// confined to one thread; tapes for different collocation points may be built
/// and differentiated concurrently, and the resulting parameter gradients
/// combine by index-ordered addition.
class Tape {
public:
    explicit Tape(DerivSet spec, std::span<const double> params = {});

    DerivSet spec() const { return spec_; }
    std::size_t size() const { return op_.size(); }
    std::size_t param_count() const { return params_.size(); }

    /// Swap in a new parameter vector of identical length (for replay()).
    void bind_params(std::span<const double> params);

    /// Drop all nodes, keep capacity and parameter binding.
    void reset();

    /// Recompute every node value from the recorded operations, e.g. after
    /// bind_params. Reproduces the original forward bit for bit when the
    /// parameter values are unchanged.
    void replay();

    // -- leaves ------------------------------------------------------------
    NodeId input(Axis which, double value);
    NodeId constant(double value);
    /// Parameter leaf: value slot tracks params[index], derivative slots zero,
    /// adjoint flows to gradient entry `index`.
    NodeId param(std::size_t index);

    // -- arithmetic ----------------------------------------------------------
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    /// Quotient, recorded as a * recip(b). Zero denominator value is a domain error.
    NodeId div(NodeId a, NodeId b);
    NodeId add_imm(NodeId a, double c);
    NodeId mul_imm(NodeId a, double c);

    NodeId unary(UnaryFunc f, NodeId a, double exponent = 0.0);

    /// Fused affine combination b + sum_k w_k * in_k over a contiguous node
    /// range [first, first+n); weights and bias live in the bound parameter
    /// vector at [w_offset, w_offset+n) and b_index.
    NodeId affine(NodeId first, std::uint32_t n, std::size_t w_offset, std::size_t b_index);

    /// Value-only copy of one slot of `a`; derivative slots of the result are
    /// dead. The adjoint flows back into that slot of `a`.
    NodeId extract(NodeId a, Slot s);

    /// Germ of the x-derivative: (v,t,x,xx) <- (x, xt, xx, xxx) of `a`.
    /// Slots with no source (xt, xxx of the result) are zero and must not be
    /// consumed downstream.
    NodeId shift_x(NodeId a);
    /// Germ of the t-derivative: v <- t, x <- xt of `a`. Other result slots are
    /// zero and must not be consumed downstream.
    NodeId shift_t(NodeId a);

    // -- reads ---------------------------------------------------------------
    Jet jet(NodeId id) const;
    double value(NodeId id) const { return v_[id]; }

    // -- reverse sweep ---------------------------------------------------------
    struct Seed {
        NodeId node;
        double weight;
    };

    /// Reverse-accumulate the seeded nodes' value slots into grad (+=).
    /// grad.size() must equal param_count().
    void backward(std::span<const Seed> seeds, std::span<double> grad);
    void backward(NodeId loss, std::span<double> grad);

private:
    struct Rec {
        UnaryFunc fn;        // valid for Op::Unary
        std::uint8_t op;     // Op enum
        NodeId a = 0, b = 0;
        double imm = 0.0;    // constant / immediate / exponent
    };

    enum Op : std::uint8_t {
        OpInput, OpConst, OpParam, OpAdd, OpSub, OpMul,
        OpAddImm, OpMulImm, OpUnary, OpAffine, OpExtract, OpShiftX, OpShiftT,
    };

    struct AffineRec {
        NodeId first;
        std::uint32_t n;
        std::uint32_t w_off;
        std::uint32_t b_idx;
    };

    NodeId push(const Rec& r);
    void eval(NodeId id, const Rec& r);
    void eval_unary(NodeId id, const Rec& r);

    DerivSet spec_;
    std::span<const double> params_;

    std::vector<Rec> op_;
    std::vector<AffineRec> affine_;

    // slot-major node storage
    std::vector<double> v_, dt_, dx_, dxx_, dxt_, dxxx_;
    // cached local derivatives of unary nodes (phi' .. phi'''')
    std::vector<double> u1_, u2_, u3_, u4_;
    // adjoint workspace
    std::vector<double> av_, at_, ax_, axx_, axt_, axxx_;

    bool need_t_, need_x_, need_xx_, need_xt_, need_xxx_;
};

// ---------------------------------------------------------------------------
// Expression handle
// ---------------------------------------------------------------------------

/// Lightweight node handle with operator sugar, so residuals and closed-form
/// solutions read like the formulas they implement.
class Var {
public:
    Var() = default;
    Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

    Tape& tape() const { return *tape_; }
    NodeId id() const { return id_; }
    double value() const { return tape_->value(id_); }
    Jet jet() const { return tape_->jet(id_); }

    Var slot_v() const { return wrap(tape_->extract(id_, Slot::V)); }
    Var slot_t() const { return wrap(tape_->extract(id_, Slot::T)); }
    Var slot_x() const { return wrap(tape_->extract(id_, Slot::X)); }
    Var slot_xx() const { return wrap(tape_->extract(id_, Slot::XX)); }
    Var slot_xt() const { return wrap(tape_->extract(id_, Slot::XT)); }
    Var slot_xxx() const { return wrap(tape_->extract(id_, Slot::XXX)); }

private:
    Var wrap(NodeId id) const { return Var(tape_, id); }

    Tape* tape_ = nullptr;
    NodeId id_ = 0;
};

inline Var operator+(Var a, Var b) { return Var(&a.tape(), a.tape().add(a.id(), b.id())); }
inline Var operator-(Var a, Var b) { return Var(&a.tape(), a.tape().sub(a.id(), b.id())); }
inline Var operator*(Var a, Var b) { return Var(&a.tape(), a.tape().mul(a.id(), b.id())); }
inline Var operator/(Var a, Var b) { return Var(&a.tape(), a.tape().div(a.id(), b.id())); }

inline Var operator+(Var a, double c) { return Var(&a.tape(), a.tape().add_imm(a.id(), c)); }
inline Var operator+(double c, Var a) { return a + c; }
inline Var operator-(Var a, double c) { return a + (-c); }
inline Var operator-(double c, Var a) { return Var(&a.tape(), a.tape().mul_imm(a.id(), -1.0)) + c; }
inline Var operator*(Var a, double c) { return Var(&a.tape(), a.tape().mul_imm(a.id(), c)); }
inline Var operator*(double c, Var a) { return a * c; }
inline Var operator/(Var a, double c) { return a * (1.0 / c); }
inline Var operator/(double c, Var a) {
    return Var(&a.tape(), a.tape().unary(UnaryFunc::Recip, a.id())) * c;
}
inline Var operator-(Var a) { return a * -1.0; }

inline Var tanh(Var a) { return Var(&a.tape(), a.tape().unary(UnaryFunc::Tanh, a.id())); }
inline Var exp(Var a) { return Var(&a.tape(), a.tape().unary(UnaryFunc::Exp, a.id())); }
inline Var sin(Var a) { return Var(&a.tape(), a.tape().unary(UnaryFunc::Sin, a.id())); }
inline Var cos(Var a) { return Var(&a.tape(), a.tape().unary(UnaryFunc::Cos, a.id())); }
inline Var log(Var a) { return Var(&a.tape(), a.tape().unary(UnaryFunc::Log, a.id())); }
inline Var normal_cdf(Var a) { return Var(&a.tape(), a.tape().unary(UnaryFunc::NormalCdf, a.id())); }
inline Var pow(Var a, double p) { return Var(&a.tape(), a.tape().unary(UnaryFunc::PowP, a.id(), p)); }
inline Var sqrt(Var a) { return pow(a, 0.5); }

inline Var shift_x(Var a) { return Var(&a.tape(), a.tape().shift_x(a.id())); }
inline Var shift_t(Var a) { return Var(&a.tape(), a.tape().shift_t(a.id())); }

inline Var square(Var a) { return a * a; }

// ---------------------------------------------------------------------------
// Gradient verification
// ---------------------------------------------------------------------------

/// Max discrepancy between the tape gradient of a scalar loss and central
/// finite differences (f(theta+h e_k) - f(theta-h e_k)) / 2h, refined by one
/// Richardson step (h and h/2) to cancel the O(h^2) truncation term.
///
/// Per-entry error is |ad - fd| / (floor + max(|ad|, |fd|)) with
/// floor = 1e-6 * max(1, |f(theta)|), which makes the measure relative for
/// entries of ordinary size and absolute near zero (0/0 counts as 0).
double grad_check(const std::function<Var(Tape&)>& build_loss, DerivSet spec,
                  std::span<double> theta, double h);

}  // namespace lsn::ad
