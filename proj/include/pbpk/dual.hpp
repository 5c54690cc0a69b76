#pragma once

// Forward-mode dual numbers: value plus one directional derivative.

#include <cmath>

namespace pbpk {

template <typename T>
struct Dual {
  T value{};
  T deriv{};

  constexpr Dual() = default;
  constexpr Dual(T v) : value(v) {}  // NOLINT: constants promote implicitly
  constexpr Dual(T v, T d) : value(v), deriv(d) {}

  static constexpr Dual variable(T v) { return {v, T(1)}; }

  constexpr Dual& operator+=(const Dual& o) {
    value += o.value;
    deriv += o.deriv;
    return *this;
  }
  constexpr Dual& operator-=(const Dual& o) {
    value -= o.value;
    deriv -= o.deriv;
    return *this;
  }
  constexpr Dual& operator*=(const Dual& o) { return *this = *this * o; }
  constexpr Dual& operator/=(const Dual& o) { return *this = *this / o; }

  friend constexpr Dual operator+(const Dual& a, const Dual& b) { return {a.value + b.value, a.deriv + b.deriv}; }
  friend constexpr Dual operator-(const Dual& a, const Dual& b) { return {a.value - b.value, a.deriv - b.deriv}; }
  friend constexpr Dual operator-(const Dual& a) { return {-a.value, -a.deriv}; }
  friend constexpr Dual operator*(const Dual& a, const Dual& b) {
    return {a.value * b.value, a.deriv * b.value + a.value * b.deriv};
  }
  friend constexpr Dual operator/(const Dual& a, const Dual& b) {
    return {a.value / b.value, (a.deriv * b.value - a.value * b.deriv) / (b.value * b.value)};
  }
};

template <typename T>
Dual<T> tanh(const Dual<T>& x) {
  const T t = std::tanh(x.value);
  return {t, (T(1) - t * t) * x.deriv};
}

template <typename T>
Dual<T> sin(const Dual<T>& x) {
  return {std::sin(x.value), std::cos(x.value) * x.deriv};
}

template <typename T>
Dual<T> cos(const Dual<T>& x) {
  return {std::cos(x.value), -std::sin(x.value) * x.deriv};
}

template <typename T>
Dual<T> exp(const Dual<T>& x) {
  const T e = std::exp(x.value);
  return {e, e * x.deriv};
}

}  // namespace pbpk
