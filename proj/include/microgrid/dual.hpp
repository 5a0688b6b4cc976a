#pragma once

#include <cmath>
#include <limits>

namespace microgrid {

// First-order dual number: carries a value and the derivative along one seed
// direction. Evaluating a function once per input direction yields exact first
// derivatives of arbitrary compositions of the operators below.
struct Dual {
    double v = 0.0;
    double d = 0.0;

    constexpr Dual() = default;
    constexpr Dual(double value) : v(value), d(0.0) {}
    constexpr Dual(double value, double deriv) : v(value), d(deriv) {}

    constexpr Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
    constexpr Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
    constexpr Dual& operator*=(const Dual& o) {
        d = d * o.v + v * o.d;
        v *= o.v;
        return *this;
    }
    constexpr Dual& operator/=(const Dual& o) {
        d = (d * o.v - v * o.d) / (o.v * o.v);
        v /= o.v;
        return *this;
    }
};

constexpr Dual operator+(Dual a, const Dual& b) { return a += b; }
constexpr Dual operator-(Dual a, const Dual& b) { return a -= b; }
constexpr Dual operator*(Dual a, const Dual& b) { return a *= b; }
constexpr Dual operator/(Dual a, const Dual& b) { return a /= b; }
constexpr Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
constexpr Dual operator+(const Dual& a) { return a; }

constexpr Dual operator+(double a, Dual b) { return Dual(a) + b; }
constexpr Dual operator-(double a, const Dual& b) { return Dual(a) - b; }
constexpr Dual operator*(double a, Dual b) { return Dual(a) * b; }
constexpr Dual operator/(double a, const Dual& b) { return Dual(a) / b; }
constexpr Dual operator+(Dual a, double b) { return a += Dual(b); }
constexpr Dual operator-(Dual a, double b) { return a -= Dual(b); }
constexpr Dual operator*(Dual a, double b) { return a *= Dual(b); }
constexpr Dual operator/(Dual a, double b) { return a /= Dual(b); }

inline Dual sqrt(const Dual& a) {
    double r = std::sqrt(a.v);
    return {r, r > 0.0 ? a.d / (2.0 * r) : std::numeric_limits<double>::quiet_NaN()};
}

constexpr Dual sq(const Dual& a) { return a * a; }
constexpr double sq(double a) { return a * a; }

inline Dual pow(Dual a, int n) {
    Dual r(1.0);
    bool inv = n < 0;
    for (int k = inv ? -n : n; k > 0; --k) r *= a;
    return inv ? Dual(1.0) / r : r;
}

inline Dual abs(const Dual& a) { return a.v < 0.0 ? -a : a; }

}  // namespace microgrid
