#pragma once

#include <cstdint>
#include <vector>

namespace gam::ad {

// Scalar expression graph with reverse-mode adjoints. Hessian-vector products
// come from a tangent (dual-number) pass layered over the same graph: each
// node carries value+tangent forward, and the reverse sweep propagates
// adjoint+adjoint-tangent. The adjoint tangent of an input node is the HVP
// coordinate for the tangent direction seeded at the inputs.
class Tape {
 public:
  enum class Op : std::uint8_t {
    kConst,
    kInput,
    kAdd,
    kSub,
    kMul,
    kDiv,
    kNeg,
    kSquare,
    kTanh,
    kExp,
    kLog,
    kRelu,
    kSin,
    kCos,
  };

  // Clears the graph but keeps buffer capacity. with_tangent selects whether
  // dual arithmetic runs; gradient-only queries skip it.
  void reset(bool with_tangent);

  bool tangent_active() const { return tangent_; }
  std::size_t size() const { return nodes_.size(); }

  std::uint32_t input(double value, double tangent);
  std::uint32_t constant(double value);

  std::uint32_t add(std::uint32_t a, std::uint32_t b);
  std::uint32_t sub(std::uint32_t a, std::uint32_t b);
  std::uint32_t mul(std::uint32_t a, std::uint32_t b);
  std::uint32_t div(std::uint32_t a, std::uint32_t b);
  std::uint32_t neg(std::uint32_t a);
  std::uint32_t square(std::uint32_t a);
  std::uint32_t tanh(std::uint32_t a);
  std::uint32_t exp(std::uint32_t a);
  std::uint32_t log(std::uint32_t a);
  std::uint32_t relu(std::uint32_t a);
  std::uint32_t sin(std::uint32_t a);
  std::uint32_t cos(std::uint32_t a);

  double value(std::uint32_t i) const { return val_[i]; }
  double tangent(std::uint32_t i) const { return dot_[i]; }

  // Reverse sweep seeded with adjoint 1 at root. Overwrites prior adjoints.
  void backward(std::uint32_t root);

  double adjoint(std::uint32_t i) const { return bar_[i]; }
  double adjoint_tangent(std::uint32_t i) const { return bar_dot_[i]; }

 private:
  struct Node {
    Op op;
    std::uint32_t a;
    std::uint32_t b;
  };

  template <bool kTan>
  void backward_impl(std::uint32_t root);

  std::uint32_t push(Op op, std::uint32_t a, std::uint32_t b, double v,
                     double d);

  std::vector<Node> nodes_;
  std::vector<double> val_;
  std::vector<double> dot_;
  std::vector<double> bar_;
  std::vector<double> bar_dot_;
  bool tangent_ = false;
};

// Node handle with operator sugar so model code reads like math. Vars are
// only valid for the tape and generation they were created on.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t idx) : tape_(tape), idx_(idx) {}

  Tape* tape() const { return tape_; }
  std::uint32_t index() const { return idx_; }
  double value() const { return tape_->value(idx_); }

 private:
  Tape* tape_ = nullptr;
  std::uint32_t idx_ = 0;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double c);
Var operator+(double c, Var a);
Var operator-(Var a, double c);
Var operator-(double c, Var a);
Var operator*(Var a, double c);
Var operator*(double c, Var a);
Var operator/(Var a, double c);
Var operator/(double c, Var a);

Var square(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
Var relu(Var a);
Var sin(Var a);
Var cos(Var a);

}  // namespace gam::ad
