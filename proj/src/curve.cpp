#include "gtf/curve.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace gtf {

HermiteCurve::HermiteCurve(std::vector<double> ts, std::vector<Vec> xs, std::vector<Vec> vs)
    : Curve(ts.front(), ts.back(), static_cast<int>(xs.front().size())),
      ts_(std::move(ts)),
      xs_(std::move(xs)),
      vs_(std::move(vs)) {
    if (ts_.size() < 2 || ts_.size() != xs_.size() || ts_.size() != vs_.size())
        throw Error("hermite curve: inconsistent sample arrays");
    for (size_t i = 1; i < ts_.size(); ++i)
        if (!(ts_[i] > ts_[i - 1])) throw Error("hermite curve: knots must increase");
}

size_t HermiteCurve::segment(double t) const {
    if (t <= ts_.front()) return 0;
    if (t >= ts_.back()) return ts_.size() - 2;
    auto it = std::upper_bound(ts_.begin(), ts_.end(), t);
    return static_cast<size_t>(it - ts_.begin()) - 1;
}

Vec HermiteCurve::eval(double t) const {
    size_t i = segment(t);
    double h = ts_[i + 1] - ts_[i];
    double s = (t - ts_[i]) / h;
    double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * xs_[i] + ((s3 - 2 * s2 + s) * h) * vs_[i] +
           (-2 * s3 + 3 * s2) * xs_[i + 1] + ((s3 - s2) * h) * vs_[i + 1];
}

Vec HermiteCurve::deriv(double t) const {
    size_t i = segment(t);
    double h = ts_[i + 1] - ts_[i];
    double s = (t - ts_[i]) / h;
    return ((6 * s * s - 6 * s) / h) * xs_[i] + (3 * s * s - 4 * s + 1) * vs_[i] +
           ((-6 * s * s + 6 * s) / h) * xs_[i + 1] + (3 * s * s - 2 * s) * vs_[i + 1];
}

PolyCurve::PolyCurve(double t0, double t1, std::vector<Vec> coeffs)
    : Curve(t0, t1, static_cast<int>(coeffs.front().size())), coeffs_(std::move(coeffs)) {}

Vec PolyCurve::eval(double t) const {
    double s = (t - t0_) / (t1_ - t0_);
    Vec out = Vec::Zero(dim_);
    double p = 1.0;
    for (const auto& c : coeffs_) {
        out += p * c;
        p *= s;
    }
    return out;
}

Vec PolyCurve::deriv(double t) const {
    double w = t1_ - t0_;
    double s = (t - t0_) / w;
    Vec out = Vec::Zero(dim_);
    double p = 1.0;
    for (size_t k = 1; k < coeffs_.size(); ++k) {
        out += (static_cast<double>(k) * p) * coeffs_[k];
        p *= s;
    }
    return out / w;
}

ConcatCurve::ConcatCurve(CurvePtr left, CurvePtr right)
    : Curve(left->t_begin(), right->t_end(), left->dim()), left_(std::move(left)),
      right_(std::move(right)) {
    if (std::abs(left_->t_end() - right_->t_begin()) > 1e-12)
        throw Error("concat curve: pieces do not abut");
}

Vec ConcatCurve::eval(double t) const {
    return t <= left_->t_end() ? left_->eval(t) : right_->eval(t);
}

Vec ConcatCurve::deriv(double t) const {
    return t <= left_->t_end() ? left_->deriv(t) : right_->deriv(t);
}

CurvePtr quintic_hermite(double t0, const Vec& x0, const Vec& v0, double t1, const Vec& x1,
                         const Vec& v1, const Vec& x_mid) {
    const double w = t1 - t0;
    // Monomial coefficients in s = (t-t0)/w; constraints:
    // x(0), x'(0), x''(0)=0, x(1/2)=x_mid, x(1), x'(1).
    Eigen::Matrix<double, 6, 6> A;
    auto row_val = [](double s) {
        Eigen::Matrix<double, 1, 6> r;
        for (int k = 0; k < 6; ++k) r(0, k) = std::pow(s, k);
        return r;
    };
    auto row_d1 = [](double s) {
        Eigen::Matrix<double, 1, 6> r;
        r.setZero();
        for (int k = 1; k < 6; ++k) r(0, k) = k * std::pow(s, k - 1);
        return r;
    };
    auto row_d2 = [](double s) {
        Eigen::Matrix<double, 1, 6> r;
        r.setZero();
        for (int k = 2; k < 6; ++k) r(0, k) = k * (k - 1) * std::pow(s, k - 2);
        return r;
    };
    A.row(0) = row_val(0.0);
    A.row(1) = row_d1(0.0);
    A.row(2) = row_d2(0.0);
    A.row(3) = row_val(0.5);
    A.row(4) = row_val(1.0);
    A.row(5) = row_d1(1.0);
    Eigen::PartialPivLU<Eigen::Matrix<double, 6, 6>> lu(A);

    const int n = static_cast<int>(x0.size());
    std::vector<Vec> coeffs(6, Vec::Zero(n));
    for (int i = 0; i < n; ++i) {
        Eigen::Matrix<double, 6, 1> rhs;
        rhs << x0[i], w * v0[i], 0.0, x_mid[i], x1[i], w * v1[i];
        Eigen::Matrix<double, 6, 1> c = lu.solve(rhs);
        for (int k = 0; k < 6; ++k) coeffs[static_cast<size_t>(k)][i] = c[k];
    }
    return std::make_shared<PolyCurve>(t0, t1, std::move(coeffs));
}

CubicSpline1D::CubicSpline1D(std::vector<double> ts, std::vector<double> ys)
    : ts_(std::move(ts)), ys_(std::move(ys)) {
    const size_t n = ts_.size();
    if (n < 3 || ys_.size() != n) throw Error("spline needs at least 3 samples");
    // Natural spline: tridiagonal solve for second derivatives.
    std::vector<double> a(n, 0), b(n, 0), c(n, 0), d(n, 0);
    m_.assign(n, 0.0);
    b[0] = 1.0;
    b[n - 1] = 1.0;
    for (size_t i = 1; i + 1 < n; ++i) {
        double hl = ts_[i] - ts_[i - 1], hr = ts_[i + 1] - ts_[i];
        a[i] = hl / 6.0;
        b[i] = (hl + hr) / 3.0;
        c[i] = hr / 6.0;
        d[i] = (ys_[i + 1] - ys_[i]) / hr - (ys_[i] - ys_[i - 1]) / hl;
    }
    // Thomas algorithm.
    for (size_t i = 1; i < n; ++i) {
        double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
    }
    m_[n - 1] = d[n - 1] / b[n - 1];
    for (size_t i = n - 1; i-- > 0;) m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
}

size_t CubicSpline1D::segment(double t) const {
    if (t <= ts_.front()) return 0;
    if (t >= ts_.back()) return ts_.size() - 2;
    auto it = std::upper_bound(ts_.begin(), ts_.end(), t);
    return static_cast<size_t>(it - ts_.begin()) - 1;
}

double CubicSpline1D::eval(double t) const {
    size_t i = segment(t);
    double h = ts_[i + 1] - ts_[i];
    double A = (ts_[i + 1] - t) / h, B = (t - ts_[i]) / h;
    return A * ys_[i] + B * ys_[i + 1] +
           ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
}

double CubicSpline1D::deriv(double t) const {
    size_t i = segment(t);
    double h = ts_[i + 1] - ts_[i];
    double A = (ts_[i + 1] - t) / h, B = (t - ts_[i]) / h;
    return (ys_[i + 1] - ys_[i]) / h +
           ((-3 * A * A + 1) * m_[i] + (3 * B * B - 1) * m_[i + 1]) * h / 6.0;
}

double CubicSpline1D::deriv2(double t) const {
    size_t i = segment(t);
    double h = ts_[i + 1] - ts_[i];
    double A = (ts_[i + 1] - t) / h, B = (t - ts_[i]) / h;
    return A * m_[i] + B * m_[i + 1];
}

}  // namespace gtf
