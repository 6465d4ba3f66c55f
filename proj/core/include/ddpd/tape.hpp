#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

namespace ddpd {

// Reverse-mode gradient tape over scalars.
//
// Each node stores at most two parents together with precomputed local
// partials, so backward() is a single reverse sweep multiplying adjoints into
// parents. Higher-order derivatives are obtained by evaluating expressions
// with forward-mode duals on top of Var (see dual.hpp), never by taping the
// backward pass itself.
class Tape {
 public:
  struct Rec {
    int32_t a;
    int32_t b;
    double wa;
    double wb;
  };

  void clear() {
    val_.clear();
    rec_.clear();
  }

  void reserve(std::size_t n) {
    val_.reserve(n);
    rec_.reserve(n);
  }

  std::size_t size() const { return val_.size(); }

  int32_t leaf(double v) { return push(v, -1, -1, 0.0, 0.0); }

  int32_t push(double v, int32_t a, int32_t b, double wa, double wb) {
    val_.push_back(v);
    rec_.push_back(Rec{a, b, wa, wb});
    return static_cast<int32_t>(val_.size()) - 1;
  }

  double value(int32_t i) const { return val_[i]; }

  // Seeds the root with unit adjoint and sweeps the tape in reverse.
  void backward(int32_t root) {
    adj_.assign(val_.size(), 0.0);
    adj_[root] = 1.0;
    for (int32_t i = static_cast<int32_t>(rec_.size()) - 1; i >= 0; --i) {
      const double a = adj_[i];
      if (a == 0.0) continue;
      const Rec& r = rec_[i];
      if (r.a >= 0) adj_[r.a] += a * r.wa;
      if (r.b >= 0) adj_[r.b] += a * r.wb;
    }
  }

  double adjoint(int32_t i) const { return adj_[i]; }

 private:
  std::vector<double> val_;
  std::vector<double> adj_;
  std::vector<Rec> rec_;
};

// Handle to a tape node. Copyable value type; all arithmetic appends nodes.
struct Var {
  Tape* tape = nullptr;
  int32_t idx = -1;

  Var() = default;
  Var(Tape& t, int32_t i) : tape(&t), idx(i) {}

  double val() const { return tape->value(idx); }
};

inline Var make_leaf(Tape& t, double v) { return Var(t, t.leaf(v)); }

inline Var operator+(Var a, Var b) {
  assert(a.tape == b.tape);
  return Var(*a.tape, a.tape->push(a.val() + b.val(), a.idx, b.idx, 1.0, 1.0));
}
inline Var operator+(Var a, double c) {
  return Var(*a.tape, a.tape->push(a.val() + c, a.idx, -1, 1.0, 0.0));
}
inline Var operator+(double c, Var a) { return a + c; }

inline Var operator-(Var a, Var b) {
  assert(a.tape == b.tape);
  return Var(*a.tape, a.tape->push(a.val() - b.val(), a.idx, b.idx, 1.0, -1.0));
}
inline Var operator-(Var a, double c) {
  return Var(*a.tape, a.tape->push(a.val() - c, a.idx, -1, 1.0, 0.0));
}
inline Var operator-(double c, Var a) {
  return Var(*a.tape, a.tape->push(c - a.val(), a.idx, -1, -1.0, 0.0));
}
inline Var operator-(Var a) {
  return Var(*a.tape, a.tape->push(-a.val(), a.idx, -1, -1.0, 0.0));
}

inline Var operator*(Var a, Var b) {
  assert(a.tape == b.tape);
  return Var(*a.tape,
             a.tape->push(a.val() * b.val(), a.idx, b.idx, b.val(), a.val()));
}
inline Var operator*(Var a, double c) {
  return Var(*a.tape, a.tape->push(a.val() * c, a.idx, -1, c, 0.0));
}
inline Var operator*(double c, Var a) { return a * c; }

inline Var operator/(Var a, Var b) {
  assert(a.tape == b.tape);
  const double ib = 1.0 / b.val();
  return Var(*a.tape, a.tape->push(a.val() * ib, a.idx, b.idx, ib,
                                   -a.val() * ib * ib));
}
inline Var operator/(Var a, double c) { return a * (1.0 / c); }
inline Var operator/(double c, Var a) {
  const double ia = 1.0 / a.val();
  return Var(*a.tape, a.tape->push(c * ia, a.idx, -1, -c * ia * ia, 0.0));
}

inline Var& operator+=(Var& a, Var b) { return a = a + b; }
inline Var& operator-=(Var& a, Var b) { return a = a - b; }
inline Var& operator*=(Var& a, Var b) { return a = a * b; }
inline Var& operator+=(Var& a, double b) { return a = a + b; }
inline Var& operator*=(Var& a, double b) { return a = a * b; }

inline Var exp(Var a) {
  const double e = std::exp(a.val());
  return Var(*a.tape, a.tape->push(e, a.idx, -1, e, 0.0));
}
inline Var log(Var a) {
  return Var(*a.tape, a.tape->push(std::log(a.val()), a.idx, -1,
                                   1.0 / a.val(), 0.0));
}
inline Var log1p(Var a) {
  return Var(*a.tape, a.tape->push(std::log1p(a.val()), a.idx, -1,
                                   1.0 / (1.0 + a.val()), 0.0));
}
inline Var sqrt(Var a) {
  const double s = std::sqrt(a.val());
  return Var(*a.tape, a.tape->push(s, a.idx, -1, 0.5 / s, 0.0));
}
inline Var abs(Var a) {
  const double v = a.val();
  const double sg = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  return Var(*a.tape, a.tape->push(std::fabs(v), a.idx, -1, sg, 0.0));
}
inline Var sigmoid(Var a) {
  const double v = a.val();
  const double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                            : std::exp(v) / (1.0 + std::exp(v));
  return Var(*a.tape, a.tape->push(s, a.idx, -1, s * (1.0 - s), 0.0));
}
inline Var softplus(Var a) {
  const double v = a.val();
  const double sp = v > 30.0 ? v : std::log1p(std::exp(-std::fabs(v))) +
                                       (v > 0.0 ? v : 0.0);
  const double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                            : std::exp(v) / (1.0 + std::exp(v));
  return Var(*a.tape, a.tape->push(sp, a.idx, -1, s, 0.0));
}
inline Var silu(Var a) {
  const double v = a.val();
  const double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                            : std::exp(v) / (1.0 + std::exp(v));
  return Var(*a.tape,
             a.tape->push(v * s, a.idx, -1, s * (1.0 + v * (1.0 - s)), 0.0));
}

}  // namespace ddpd
