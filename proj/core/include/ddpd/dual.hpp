#pragma once

#include <cmath>
#include <type_traits>

#include "ddpd/tape.hpp"

namespace ddpd {

// double overloads so generic code can call these unqualified on any scalar.
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double log1p(double x) { return std::log1p(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double abs(double x) { return std::fabs(x); }
inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}
inline double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(-std::fabs(x))) + (x > 0.0 ? x : 0.0);
}
inline double silu(double x) { return x * sigmoid(x); }

inline double val(double x) { return x; }
inline double val(Var x) { return x.val(); }

// Forward-mode dual number over an arbitrary scalar T (double, Var, or a
// nested Dual). Layering Dual on Var yields input derivatives that are
// themselves tape nodes, so parameter gradients flow through them.
template <class T>
struct Dual {
  T v;
  T d;
};

template <class T>
inline double val(const Dual<T>& x) {
  return val(x.v);
}

template <class T>
struct is_dual : std::false_type {};
template <class T>
struct is_dual<Dual<T>> : std::true_type {};

// Constant of the same scalar kind as a prototype value.
inline double const_like(double, double c) { return c; }
inline Var const_like(Var proto, double c) {
  return Var(*proto.tape, proto.tape->leaf(c));
}
template <class T>
inline Dual<T> const_like(const Dual<T>& proto, double c) {
  return Dual<T>{const_like(proto.v, c), const_like(proto.v, 0.0)};
}

// x as a dual constant (zero tangent) and as a seeded directional input.
template <class T>
inline Dual<T> dual_const(const T& x) {
  return Dual<T>{x, const_like(x, 0.0)};
}
template <class T>
inline Dual<T> dual_seed(const T& x, double tangent = 1.0) {
  return Dual<T>{x, const_like(x, tangent)};
}
// Doubly-seeded input: f(seed2(x)).d.d is the second derivative along x.
template <class T>
inline Dual<Dual<T>> dual_seed2(const T& x) {
  return Dual<Dual<T>>{Dual<T>{x, const_like(x, 1.0)},
                       Dual<T>{const_like(x, 1.0), const_like(x, 0.0)}};
}

template <class T>
inline Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  return {a.v + b.v, a.d + b.d};
}
template <class T>
inline Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  return {a.v - b.v, a.d - b.d};
}
template <class T>
inline Dual<T> operator-(const Dual<T>& a) {
  return {-a.v, -a.d};
}
template <class T>
inline Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  return {a.v * b.v, a.v * b.d + a.d * b.v};
}
template <class T>
inline Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  T q = a.v / b.v;
  return {q, (a.d - q * b.d) / b.v};
}

// Mixed arithmetic against any scalar U the component type can combine with
// (double against Dual<Var>, Var against Dual<Dual<Var>>, ...).
template <class T, class U>
  requires(!std::same_as<U, Dual<T>> && requires(T t, U u) { t + u; })
inline Dual<T> operator+(const Dual<T>& a, const U& u) {
  return {a.v + u, a.d};
}
template <class T, class U>
  requires(!std::same_as<U, Dual<T>> && requires(T t, U u) { u + t; })
inline Dual<T> operator+(const U& u, const Dual<T>& a) {
  return {u + a.v, a.d};
}
template <class T, class U>
  requires(!std::same_as<U, Dual<T>> && requires(T t, U u) { t - u; })
inline Dual<T> operator-(const Dual<T>& a, const U& u) {
  return {a.v - u, a.d};
}
template <class T, class U>
  requires(!std::same_as<U, Dual<T>> && requires(T t, U u) { u - t; })
inline Dual<T> operator-(const U& u, const Dual<T>& a) {
  return {u - a.v, -a.d};
}
template <class T, class U>
  requires(!std::same_as<U, Dual<T>> && requires(T t, U u) { t* u; })
inline Dual<T> operator*(const Dual<T>& a, const U& u) {
  return {a.v * u, a.d * u};
}
template <class T, class U>
  requires(!std::same_as<U, Dual<T>> && requires(T t, U u) { u* t; })
inline Dual<T> operator*(const U& u, const Dual<T>& a) {
  return {u * a.v, u * a.d};
}
template <class T, class U>
  requires(!std::same_as<U, Dual<T>> && requires(T t, U u) { t / u; })
inline Dual<T> operator/(const Dual<T>& a, const U& u) {
  return {a.v / u, a.d / u};
}
template <class T, class U>
  requires(!std::same_as<U, Dual<T>> && requires(T t, U u) { u / t; })
inline Dual<T> operator/(const U& u, const Dual<T>& a) {
  T q = u / a.v;
  return {q, -(q / a.v) * a.d};
}

template <class T>
inline Dual<T>& operator+=(Dual<T>& a, const Dual<T>& b) {
  return a = a + b;
}
template <class T>
inline Dual<T>& operator-=(Dual<T>& a, const Dual<T>& b) {
  return a = a - b;
}

template <class T>
inline Dual<T> exp(const Dual<T>& a) {
  T e = exp(a.v);
  return {e, a.d * e};
}
template <class T>
inline Dual<T> log(const Dual<T>& a) {
  return {log(a.v), a.d / a.v};
}
template <class T>
inline Dual<T> log1p(const Dual<T>& a) {
  return {log1p(a.v), a.d / (1.0 + a.v)};
}
template <class T>
inline Dual<T> sqrt(const Dual<T>& a) {
  T s = sqrt(a.v);
  return {s, a.d / (2.0 * s)};
}
template <class T>
inline Dual<T> abs(const Dual<T>& a) {
  const double sg = val(a.v) > 0.0 ? 1.0 : (val(a.v) < 0.0 ? -1.0 : 0.0);
  return {abs(a.v), a.d * sg};
}
template <class T>
inline Dual<T> sigmoid(const Dual<T>& a) {
  T s = sigmoid(a.v);
  return {s, a.d * (s * (1.0 - s))};
}
template <class T>
inline Dual<T> softplus(const Dual<T>& a) {
  return {softplus(a.v), a.d * sigmoid(a.v)};
}
template <class T>
inline Dual<T> silu(const Dual<T>& a) {
  T s = sigmoid(a.v);
  return {a.v * s, a.d * (s * (1.0 + a.v * (1.0 - s)))};
}

}  // namespace ddpd
