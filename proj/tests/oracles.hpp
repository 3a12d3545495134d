#pragma once

// Independent test oracles: finite differences, brute-force root finding,
// closed-form trajectories. Kept free of the library's differentiation and
// solver paths so they can check them.

#include <cmath>
#include <functional>
#include <random>

#include "gtf/field.hpp"

namespace oracle {

using gtf::Mat;
using gtf::Vec;

// Central-difference Jacobian of an arbitrary vector map.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h = 1e-6) {
    Vec f0 = f(x);
    Mat J(f0.size(), x.size());
    for (int j = 0; j < x.size(); ++j) {
        Vec xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        J.col(j) = (f(xp) - f(xm)) / (2 * h);
    }
    return J;
}

// Central-difference directional derivative.
inline Vec fd_dir(const std::function<Vec(const Vec&)>& f, const Vec& x, const Vec& d,
                  double h = 1e-6) {
    return (f(x + h * d) - f(x - h * d)) / (2 * h);
}

// Bisection root of a scalar function on [lo, hi] (f(lo), f(hi) must straddle 0).
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     double tol = 1e-13) {
    double flo = f(lo);
    for (int i = 0; i < 200 && hi - lo > tol; ++i) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if ((flo <= 0) == (fm <= 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Closed-form integral curve of v1 = (cos x1, -sin x1) from the origin.
inline Vec example_v1_flow_from_origin(double t) {
    Vec x(2);
    x[0] = std::asin(std::tanh(t));
    x[1] = -std::log(std::cosh(t));
    return x;
}

// Closed form for the band-width function of the singular example, obtained
// from the reflection symmetry of the two reference orbits about x1 = pi/2.
inline double psi_closed_form(double z1) {
    double x1 = std::asin(std::tanh(std::abs(z1)));
    return -2.0 * std::log(std::tan(0.5 * x1));
}

// Deterministic uniform draw in a box.
inline Vec draw_in_box(std::mt19937_64& rng, const Vec& lo, const Vec& hi) {
    Vec x(lo.size());
    for (int i = 0; i < lo.size(); ++i) {
        std::uniform_real_distribution<double> d(lo[i], hi[i]);
        x[i] = d(rng);
    }
    return x;
}

}  // namespace oracle
