#pragma once

#include <cmath>
#include <cstdlib>

namespace gtf {

// Forward-mode dual number: value + one directional derivative.
// Nesting (Dual<Dual<double>>) yields second directional derivatives.
template <class T>
struct Dual {
    T v{};  // value
    T d{};  // derivative

    constexpr Dual() = default;
    constexpr Dual(double x) : v(x), d(0.0) {}  // NOLINT: implicit by design
    constexpr Dual(T v_, T d_) : v(v_), d(d_) {}

    Dual operator-() const { return {-v, -d}; }

    Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
    Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
};

template <class T> Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) { return {a.v + b.v, a.d + b.d}; }
template <class T> Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) { return {a.v - b.v, a.d - b.d}; }
template <class T> Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
    return {a.v * b.v, a.d * b.v + a.v * b.d};
}
template <class T> Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
    T q = a.v / b.v;
    return {q, (a.d - q * b.d) / b.v};
}

template <class T> Dual<T> operator+(const Dual<T>& a, double b) { return a + Dual<T>(b); }
template <class T> Dual<T> operator+(double a, const Dual<T>& b) { return Dual<T>(a) + b; }
template <class T> Dual<T> operator-(const Dual<T>& a, double b) { return a - Dual<T>(b); }
template <class T> Dual<T> operator-(double a, const Dual<T>& b) { return Dual<T>(a) - b; }
template <class T> Dual<T> operator*(const Dual<T>& a, double b) { return a * Dual<T>(b); }
template <class T> Dual<T> operator*(double a, const Dual<T>& b) { return Dual<T>(a) * b; }
template <class T> Dual<T> operator/(const Dual<T>& a, double b) { return a / Dual<T>(b); }
template <class T> Dual<T> operator/(double a, const Dual<T>& b) { return Dual<T>(a) / b; }

// Plain value of a (possibly nested) dual.
inline double value_of(double x) { return x; }
template <class T> double value_of(const Dual<T>& x) { return value_of(x.v); }

// First derivative component as a plain double.
inline double deriv_of(const Dual<double>& x) { return x.d; }
template <class T> double deriv_of(const Dual<Dual<T>>& x) { return value_of(x.d); }

template <class T> bool operator<(const Dual<T>& a, const Dual<T>& b) { return value_of(a) < value_of(b); }
template <class T> bool operator>(const Dual<T>& a, const Dual<T>& b) { return value_of(a) > value_of(b); }
template <class T> bool operator<=(const Dual<T>& a, const Dual<T>& b) { return value_of(a) <= value_of(b); }
template <class T> bool operator>=(const Dual<T>& a, const Dual<T>& b) { return value_of(a) >= value_of(b); }

using std::abs;
using std::cos;
using std::cosh;
using std::exp;
using std::log;
using std::sin;
using std::sqrt;
using std::tan;
using std::tanh;

template <class T> Dual<T> sin(const Dual<T>& x) { return {sin(x.v), x.d * cos(x.v)}; }
template <class T> Dual<T> cos(const Dual<T>& x) { return {cos(x.v), -x.d * sin(x.v)}; }
template <class T> Dual<T> tan(const Dual<T>& x) {
    T t = tan(x.v);
    return {t, x.d * (1.0 + t * t)};
}
template <class T> Dual<T> exp(const Dual<T>& x) {
    T e = exp(x.v);
    return {e, x.d * e};
}
template <class T> Dual<T> log(const Dual<T>& x) { return {log(x.v), x.d / x.v}; }
template <class T> Dual<T> tanh(const Dual<T>& x) {
    T t = tanh(x.v);
    return {t, x.d * (1.0 - t * t)};
}
template <class T> Dual<T> sqrt(const Dual<T>& x) {
    T s = sqrt(x.v);
    return {s, x.d / (2.0 * s)};
}
template <class T> Dual<T> abs(const Dual<T>& x) {
    return value_of(x) >= 0.0 ? x : -x;
}

inline double dmin(double a, double b) { return a < b ? a : b; }
inline double dmax(double a, double b) { return a > b ? a : b; }
template <class T> Dual<T> dmin(const Dual<T>& a, const Dual<T>& b) { return a < b ? a : b; }
template <class T> Dual<T> dmax(const Dual<T>& a, const Dual<T>& b) { return a > b ? a : b; }

// x^k for integer k by repeated multiplication; k may be negative.
template <class T> T powi(const T& x, int k) {
    if (k < 0) return T(1.0) / powi(x, -k);
    T r(1.0);
    T base = x;
    int e = k;
    while (e > 0) {
        if (e & 1) r = r * base;
        base = base * base;
        e >>= 1;
    }
    return r;
}

using D1 = Dual<double>;
using D2 = Dual<Dual<double>>;

}  // namespace gtf
