#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "gtf/field.hpp"

namespace gtf {

// C^1 curve t -> x(t) on [t0, t1].
class Curve {
public:
    Curve(double t0, double t1, int dim) : t0_(t0), t1_(t1), dim_(dim) {}
    virtual ~Curve() = default;

    virtual Vec eval(double t) const = 0;
    virtual Vec deriv(double t) const = 0;

    double t_begin() const { return t0_; }
    double t_end() const { return t1_; }
    int dim() const { return dim_; }

protected:
    double t0_, t1_;
    int dim_;
};

using CurvePtr = std::shared_ptr<const Curve>;

// Cubic Hermite interpolation through sampled values and derivatives.
class HermiteCurve : public Curve {
public:
    HermiteCurve(std::vector<double> ts, std::vector<Vec> xs, std::vector<Vec> vs);

    Vec eval(double t) const override;
    Vec deriv(double t) const override;

    const std::vector<double>& knots() const { return ts_; }

private:
    size_t segment(double t) const;
    std::vector<double> ts_;
    std::vector<Vec> xs_, vs_;
};

// Vector polynomial x(t) = sum_k c_k s^k with s = (t - t0)/(t1 - t0).
class PolyCurve : public Curve {
public:
    PolyCurve(double t0, double t1, std::vector<Vec> coeffs);
    Vec eval(double t) const override;
    Vec deriv(double t) const override;

private:
    std::vector<Vec> coeffs_;
};

// Curve defined by callables (used for pullback curves evaluated on demand).
class FnCurve : public Curve {
public:
    FnCurve(double t0, double t1, int dim, std::function<Vec(double)> f,
            std::function<Vec(double)> df)
        : Curve(t0, t1, dim), f_(std::move(f)), df_(std::move(df)) {}
    Vec eval(double t) const override { return f_(t); }
    Vec deriv(double t) const override { return df_(t); }

private:
    std::function<Vec(double)> f_, df_;
};

// Two curves joined at the first one's right endpoint.
class ConcatCurve : public Curve {
public:
    ConcatCurve(CurvePtr left, CurvePtr right);
    Vec eval(double t) const override;
    Vec deriv(double t) const override;

private:
    CurvePtr left_, right_;
};

// Quintic with prescribed endpoint values/derivatives, an interior knot value
// at the midpoint, and zero initial second derivative.
CurvePtr quintic_hermite(double t0, const Vec& x0, const Vec& v0, double t1, const Vec& x1,
                         const Vec& v1, const Vec& x_mid);

// Scalar cubic spline sampled on a uniform-ish grid (natural end conditions).
class CubicSpline1D {
public:
    CubicSpline1D() = default;
    CubicSpline1D(std::vector<double> ts, std::vector<double> ys);
    double eval(double t) const;
    double deriv(double t) const;
    double deriv2(double t) const;
    double t_begin() const { return ts_.front(); }
    double t_end() const { return ts_.back(); }

private:
    size_t segment(double t) const;
    std::vector<double> ts_, ys_, m_;  // m = second derivatives at knots
};

}  // namespace gtf
