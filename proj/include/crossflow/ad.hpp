// Copyright 2026 The Crossflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Forward-mode algorithmic differentiation with dual numbers.
//
// Dual<T, N> carries a value and N directional derivatives. Nesting
// Dual<Dual<double, N>, N> yields exact second derivatives in one pass, which
// is how element Hessians are formed. The primitive set is closed under
// +, -, *, /, sin, cos, sqrt, pow, exp and log; every primitive checks its
// domain and throws DomainError rather than producing NaN.

#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace crossflow::ad {

class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

template <typename T, int N>
struct Dual {
  T v{};
  std::array<T, N> d{};

  constexpr Dual() = default;
  constexpr Dual(double c) : v(c) {}  // NOLINT: implicit constant promotion
  constexpr Dual(const T& value, const std::array<T, N>& derivs)
      : v(value), d(derivs) {}

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (int i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o);
};

// Innermost double value of a (possibly nested) dual number.
inline double value_of(double x) { return x; }
template <typename T, int N>
double value_of(const Dual<T, N>& x) {
  return value_of(x.v);
}

template <typename T>
struct is_dual : std::false_type {};
template <typename T, int N>
struct is_dual<Dual<T, N>> : std::true_type {};

template <typename T, int N>
Dual<T, N> operator-(const Dual<T, N>& a) {
  Dual<T, N> r;
  r.v = -a.v;
  for (int i = 0; i < N; ++i) r.d[i] = -a.d[i];
  return r;
}

template <typename T, int N>
Dual<T, N> operator+(Dual<T, N> a, const Dual<T, N>& b) {
  return a += b;
}
template <typename T, int N>
Dual<T, N> operator-(Dual<T, N> a, const Dual<T, N>& b) {
  return a -= b;
}
template <typename T, int N>
Dual<T, N> operator*(Dual<T, N> a, const Dual<T, N>& b) {
  return a *= b;
}

template <typename T, int N>
Dual<T, N> operator/(const Dual<T, N>& a, const Dual<T, N>& b) {
  if (value_of(b) == 0.0) throw DomainError("division by zero");
  Dual<T, N> r;
  const T inv = T(1.0) / b.v;
  r.v = a.v * inv;
  for (int i = 0; i < N; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
  return r;
}

template <typename T, int N>
Dual<T, N>& Dual<T, N>::operator/=(const Dual<T, N>& o) {
  *this = *this / o;
  return *this;
}

// Mixed scalar arithmetic.
template <typename T, int N>
Dual<T, N> operator+(Dual<T, N> a, double b) {
  a.v += b;
  return a;
}
template <typename T, int N>
Dual<T, N> operator+(double a, Dual<T, N> b) {
  b.v += a;
  return b;
}
template <typename T, int N>
Dual<T, N> operator-(Dual<T, N> a, double b) {
  a.v -= b;
  return a;
}
template <typename T, int N>
Dual<T, N> operator-(double a, const Dual<T, N>& b) {
  Dual<T, N> r = -b;
  r.v += a;
  return r;
}
template <typename T, int N>
Dual<T, N> operator*(Dual<T, N> a, double b) {
  a.v *= b;
  for (int i = 0; i < N; ++i) a.d[i] *= b;
  return a;
}
template <typename T, int N>
Dual<T, N> operator*(double a, Dual<T, N> b) {
  return b * a;
}
template <typename T, int N>
Dual<T, N> operator/(const Dual<T, N>& a, double b) {
  if (b == 0.0) throw DomainError("division by zero");
  return a * (1.0 / b);
}
template <typename T, int N>
Dual<T, N> operator/(double a, const Dual<T, N>& b) {
  return Dual<T, N>(a) / b;
}

template <typename T, int N>
bool operator<(const Dual<T, N>& a, const Dual<T, N>& b) {
  return value_of(a) < value_of(b);
}
template <typename T, int N>
bool operator>(const Dual<T, N>& a, const Dual<T, N>& b) {
  return value_of(a) > value_of(b);
}

// Elementary functions. Each applies the chain rule with the derivative
// expressed in T, so nesting differentiates the derivative itself.
namespace detail {
template <typename T, int N>
Dual<T, N> chain(const Dual<T, N>& x, const T& fx, const T& dfx) {
  Dual<T, N> r;
  r.v = fx;
  for (int i = 0; i < N; ++i) r.d[i] = dfx * x.d[i];
  return r;
}
}  // namespace detail

using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;

template <typename T, int N>
Dual<T, N> sin(const Dual<T, N>& x) {
  return detail::chain(x, T(sin(x.v)), T(cos(x.v)));
}

template <typename T, int N>
Dual<T, N> cos(const Dual<T, N>& x) {
  return detail::chain(x, T(cos(x.v)), T(-sin(x.v)));
}

template <typename T, int N>
Dual<T, N> exp(const Dual<T, N>& x) {
  const T e = exp(x.v);
  return detail::chain(x, e, e);
}

template <typename T, int N>
Dual<T, N> log(const Dual<T, N>& x) {
  if (value_of(x) <= 0.0) throw DomainError("log of non-positive value");
  return detail::chain(x, T(log(x.v)), T(1.0) / x.v);
}

template <typename T, int N>
Dual<T, N> sqrt(const Dual<T, N>& x) {
  const double xv = value_of(x);
  if (xv < 0.0) throw DomainError("sqrt of negative value");
  if (xv == 0.0 && N > 0) throw DomainError("sqrt is not differentiable at 0");
  const T r = sqrt(x.v);
  return detail::chain(x, r, T(0.5) / r);
}

template <typename T, int N>
Dual<T, N> pow(const Dual<T, N>& x, double p) {
  const double xv = value_of(x);
  if (xv < 0.0 && p != std::floor(p)) {
    throw DomainError("pow of negative base with fractional exponent");
  }
  if (xv == 0.0 && p < 1.0 && N > 0) {
    throw DomainError("pow is not differentiable at 0 for exponent < 1");
  }
  if (p == 0.0) return Dual<T, N>(1.0);
  return detail::chain(x, T(pow(x.v, p)), T(p * pow(x.v, p - 1.0)));
}

// Result of a gradient evaluation.
template <int N>
struct ValueGradient {
  double value = 0.0;
  std::array<double, N> gradient{};
};

// Seeds x as N independent directions and evaluates f once. `f` receives a
// const std::array<Dual<double, N>, N>& and returns a Dual<double, N>.
template <int N, typename F>
ValueGradient<N> gradient(F&& f, const std::array<double, N>& x) {
  using D = Dual<double, N>;
  std::array<D, N> in;
  for (int i = 0; i < N; ++i) {
    in[i].v = x[i];
    in[i].d[i] = 1.0;
  }
  const D out = f(in);
  ValueGradient<N> r;
  r.value = out.v;
  r.gradient = out.d;
  return r;
}

// Dense Jacobian of an NIn -> NOut map; `f(in, out)` writes NOut duals.
template <int NIn, int NOut, typename F>
void jacobian(F&& f, const std::array<double, NIn>& x,
              std::array<double, NOut>& values,
              std::array<std::array<double, NIn>, NOut>& jac) {
  using D = Dual<double, NIn>;
  std::array<D, NIn> in;
  for (int i = 0; i < NIn; ++i) {
    in[i].v = x[i];
    in[i].d[i] = 1.0;
  }
  std::array<D, NOut> out;
  f(in, out);
  for (int r = 0; r < NOut; ++r) {
    values[r] = out[r].v;
    jac[r] = out[r].d;
  }
}

// Value, gradient and full Hessian of a scalar function by nested duals.
template <int N>
struct ValueGradientHessian {
  double value = 0.0;
  std::array<double, N> gradient{};
  std::array<std::array<double, N>, N> hessian{};
};

template <int N, typename F>
ValueGradientHessian<N> hessian(F&& f, const std::array<double, N>& x) {
  using Inner = Dual<double, N>;
  using Outer = Dual<Inner, N>;
  std::array<Outer, N> in;
  for (int i = 0; i < N; ++i) {
    in[i].v.v = x[i];
    in[i].v.d[i] = 1.0;
    in[i].d[i].v = 1.0;
  }
  const Outer out = f(in);
  ValueGradientHessian<N> r;
  r.value = out.v.v;
  r.gradient = out.v.d;
  for (int i = 0; i < N; ++i) r.hessian[i] = out.d[i].d;
  return r;
}

}  // namespace crossflow::ad
