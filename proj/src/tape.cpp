#include "gam/tape.hpp"

#include <cmath>

namespace gam::ad {

void Tape::reset(bool with_tangent) {
  nodes_.clear();
  val_.clear();
  dot_.clear();
  tangent_ = with_tangent;
}

std::uint32_t Tape::push(Op op, std::uint32_t a, std::uint32_t b, double v,
                         double d) {
  nodes_.push_back(Node{op, a, b});
  val_.push_back(v);
  dot_.push_back(tangent_ ? d : 0.0);
  return static_cast<std::uint32_t>(nodes_.size() - 1);
}

std::uint32_t Tape::input(double value, double tangent) {
  return push(Op::kInput, 0, 0, value, tangent);
}

std::uint32_t Tape::constant(double value) {
  return push(Op::kConst, 0, 0, value, 0.0);
}

std::uint32_t Tape::add(std::uint32_t a, std::uint32_t b) {
  return push(Op::kAdd, a, b, val_[a] + val_[b], dot_[a] + dot_[b]);
}

std::uint32_t Tape::sub(std::uint32_t a, std::uint32_t b) {
  return push(Op::kSub, a, b, val_[a] - val_[b], dot_[a] - dot_[b]);
}

std::uint32_t Tape::mul(std::uint32_t a, std::uint32_t b) {
  return push(Op::kMul, a, b, val_[a] * val_[b],
              dot_[a] * val_[b] + val_[a] * dot_[b]);
}

std::uint32_t Tape::div(std::uint32_t a, std::uint32_t b) {
  double vb = val_[b];
  return push(Op::kDiv, a, b, val_[a] / vb,
              (dot_[a] * vb - val_[a] * dot_[b]) / (vb * vb));
}

std::uint32_t Tape::neg(std::uint32_t a) {
  return push(Op::kNeg, a, 0, -val_[a], -dot_[a]);
}

std::uint32_t Tape::square(std::uint32_t a) {
  return push(Op::kSquare, a, 0, val_[a] * val_[a], 2.0 * val_[a] * dot_[a]);
}

std::uint32_t Tape::tanh(std::uint32_t a) {
  double y = std::tanh(val_[a]);
  return push(Op::kTanh, a, 0, y, (1.0 - y * y) * dot_[a]);
}

std::uint32_t Tape::exp(std::uint32_t a) {
  double y = std::exp(val_[a]);
  return push(Op::kExp, a, 0, y, y * dot_[a]);
}

std::uint32_t Tape::log(std::uint32_t a) {
  return push(Op::kLog, a, 0, std::log(val_[a]), dot_[a] / val_[a]);
}

std::uint32_t Tape::relu(std::uint32_t a) {
  // Subgradient 0 at the kink; second derivative is 0 almost everywhere, so
  // HVPs through relu are exact away from activations sitting exactly at 0.
  bool on = val_[a] > 0.0;
  return push(Op::kRelu, a, 0, on ? val_[a] : 0.0, on ? dot_[a] : 0.0);
}

std::uint32_t Tape::sin(std::uint32_t a) {
  return push(Op::kSin, a, 0, std::sin(val_[a]), std::cos(val_[a]) * dot_[a]);
}

std::uint32_t Tape::cos(std::uint32_t a) {
  return push(Op::kCos, a, 0, std::cos(val_[a]), -std::sin(val_[a]) * dot_[a]);
}

template <bool kTan>
void Tape::backward_impl(std::uint32_t root) {
  bar_.assign(nodes_.size(), 0.0);
  if constexpr (kTan) bar_dot_.assign(nodes_.size(), 0.0);
  bar_[root] = 1.0;
  for (std::uint32_t i = static_cast<std::uint32_t>(nodes_.size()); i-- > 0;) {
    const Node n = nodes_[i];
    const double w = bar_[i];
    double wd = 0.0;
    if constexpr (kTan) wd = bar_dot_[i];
    if (w == 0.0 && wd == 0.0) continue;
    // For each parent x: bar_x += w * p where p = d(node)/dx, and in tangent
    // mode bar_dot_x += wd * p + w * pdot with (p, pdot) the dual partial.
    switch (n.op) {
      case Op::kConst:
      case Op::kInput:
        break;
      case Op::kAdd:
        bar_[n.a] += w;
        bar_[n.b] += w;
        if constexpr (kTan) {
          bar_dot_[n.a] += wd;
          bar_dot_[n.b] += wd;
        }
        break;
      case Op::kSub:
        bar_[n.a] += w;
        bar_[n.b] -= w;
        if constexpr (kTan) {
          bar_dot_[n.a] += wd;
          bar_dot_[n.b] -= wd;
        }
        break;
      case Op::kMul:
        bar_[n.a] += w * val_[n.b];
        bar_[n.b] += w * val_[n.a];
        if constexpr (kTan) {
          bar_dot_[n.a] += wd * val_[n.b] + w * dot_[n.b];
          bar_dot_[n.b] += wd * val_[n.a] + w * dot_[n.a];
        }
        break;
      case Op::kDiv: {
        const double vb = val_[n.b];
        const double pa = 1.0 / vb;
        const double pb = -val_[n.a] / (vb * vb);
        bar_[n.a] += w * pa;
        bar_[n.b] += w * pb;
        if constexpr (kTan) {
          const double pa_dot = -dot_[n.b] / (vb * vb);
          const double pb_dot =
              (-dot_[n.a] * vb + 2.0 * val_[n.a] * dot_[n.b]) / (vb * vb * vb);
          bar_dot_[n.a] += wd * pa + w * pa_dot;
          bar_dot_[n.b] += wd * pb + w * pb_dot;
        }
        break;
      }
      case Op::kNeg:
        bar_[n.a] -= w;
        if constexpr (kTan) bar_dot_[n.a] -= wd;
        break;
      case Op::kSquare: {
        const double p = 2.0 * val_[n.a];
        bar_[n.a] += w * p;
        if constexpr (kTan) bar_dot_[n.a] += wd * p + w * 2.0 * dot_[n.a];
        break;
      }
      case Op::kTanh: {
        const double y = val_[i];
        const double p = 1.0 - y * y;
        bar_[n.a] += w * p;
        if constexpr (kTan) bar_dot_[n.a] += wd * p + w * (-2.0 * y * dot_[i]);
        break;
      }
      case Op::kExp: {
        const double y = val_[i];
        bar_[n.a] += w * y;
        if constexpr (kTan) bar_dot_[n.a] += wd * y + w * dot_[i];
        break;
      }
      case Op::kLog: {
        const double va = val_[n.a];
        bar_[n.a] += w / va;
        if constexpr (kTan)
          bar_dot_[n.a] += wd / va + w * (-dot_[n.a] / (va * va));
        break;
      }
      case Op::kRelu:
        if (val_[n.a] > 0.0) {
          bar_[n.a] += w;
          if constexpr (kTan) bar_dot_[n.a] += wd;
        }
        break;
      case Op::kSin: {
        const double c = std::cos(val_[n.a]);
        bar_[n.a] += w * c;
        if constexpr (kTan)
          bar_dot_[n.a] += wd * c + w * (-val_[i] * dot_[n.a]);
        break;
      }
      case Op::kCos: {
        const double s = std::sin(val_[n.a]);
        bar_[n.a] += w * -s;
        if constexpr (kTan)
          bar_dot_[n.a] += wd * -s + w * (-val_[i] * dot_[n.a]);
        break;
      }
    }
  }
}

void Tape::backward(std::uint32_t root) {
  if (tangent_) {
    backward_impl<true>(root);
  } else {
    backward_impl<false>(root);
  }
}

namespace {
inline Var make(Tape* t, std::uint32_t i) { return Var(t, i); }
}  // namespace

Var operator+(Var a, Var b) { return make(a.tape(), a.tape()->add(a.index(), b.index())); }
Var operator-(Var a, Var b) { return make(a.tape(), a.tape()->sub(a.index(), b.index())); }
Var operator*(Var a, Var b) { return make(a.tape(), a.tape()->mul(a.index(), b.index())); }
Var operator/(Var a, Var b) { return make(a.tape(), a.tape()->div(a.index(), b.index())); }
Var operator-(Var a) { return make(a.tape(), a.tape()->neg(a.index())); }

Var operator+(Var a, double c) { return a + make(a.tape(), a.tape()->constant(c)); }
Var operator+(double c, Var a) { return a + c; }
Var operator-(Var a, double c) { return a - make(a.tape(), a.tape()->constant(c)); }
Var operator-(double c, Var a) { return make(a.tape(), a.tape()->constant(c)) - a; }
Var operator*(Var a, double c) { return a * make(a.tape(), a.tape()->constant(c)); }
Var operator*(double c, Var a) { return a * c; }
Var operator/(Var a, double c) { return a / make(a.tape(), a.tape()->constant(c)); }
Var operator/(double c, Var a) { return make(a.tape(), a.tape()->constant(c)) / a; }

Var square(Var a) { return make(a.tape(), a.tape()->square(a.index())); }
Var tanh(Var a) { return make(a.tape(), a.tape()->tanh(a.index())); }
Var exp(Var a) { return make(a.tape(), a.tape()->exp(a.index())); }
Var log(Var a) { return make(a.tape(), a.tape()->log(a.index())); }
Var relu(Var a) { return make(a.tape(), a.tape()->relu(a.index())); }
Var sin(Var a) { return make(a.tape(), a.tape()->sin(a.index())); }
Var cos(Var a) { return make(a.tape(), a.tape()->cos(a.index())); }

}  // namespace gam::ad
