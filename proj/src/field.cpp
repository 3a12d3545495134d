#include "gtf/field.hpp"

namespace gtf {

namespace {
constexpr double kFdStep = 1e-5;
}

void VectorField::value_d1(const DVec<D1>& x, DVec<D1>& out) const {
    // Central difference along the dual direction.
    const int n = n_;
    Vec base(n), dir(n);
    for (int i = 0; i < n; ++i) {
        base[i] = x[i].v;
        dir[i] = x[i].d;
    }
    double scale = dir.norm();
    out.assign(n, D1{});
    if (scale == 0.0) {
        Vec v = value(base);
        for (int i = 0; i < n; ++i) out[i] = D1{v[i], 0.0};
        return;
    }
    Vec unit = dir / scale;
    Vec vp = value(base + kFdStep * unit);
    Vec vm = value(base - kFdStep * unit);
    Vec v0 = value(base);
    for (int i = 0; i < n; ++i) out[i] = D1{v0[i], scale * (vp[i] - vm[i]) / (2.0 * kFdStep)};
}

void VectorField::value_d2(const DVec<D2>& x, DVec<D2>& out) const {
    const int n = n_;
    DVec<D1> base(n), dir(n);
    for (int i = 0; i < n; ++i) {
        base[i] = x[i].v;
        dir[i] = x[i].d;
    }
    double scale = 0.0;
    for (int i = 0; i < n; ++i)
        scale += value_of(dir[i]) * value_of(dir[i]) + dir[i].d * dir[i].d;
    scale = std::sqrt(scale);
    out.assign(n, D2{});
    if (scale == 0.0) {
        DVec<D1> v;
        value_d1(base, v);
        for (int i = 0; i < n; ++i) out[i] = D2{v[i], D1{}};
        return;
    }
    DVec<D1> xp(n), xm(n), v0;
    for (int i = 0; i < n; ++i) {
        D1 step = dir[i] * (kFdStep / scale);
        xp[i] = base[i] + step;
        xm[i] = base[i] - step;
    }
    DVec<D1> vp, vm;
    value_d1(xp, vp);
    value_d1(xm, vm);
    value_d1(base, v0);
    for (int i = 0; i < n; ++i)
        out[i] = D2{v0[i], (vp[i] - vm[i]) * (scale / (2.0 * kFdStep))};
}

Vec VectorField::jac_vec(const Vec& x, const Vec& v) const {
    DVec<D1> xd(n_), out;
    for (int i = 0; i < n_; ++i) xd[i] = D1{x[i], v[i]};
    value_d1(xd, out);
    Vec r(n_);
    for (int i = 0; i < n_; ++i) r[i] = out[i].d;
    return r;
}

Mat VectorField::jacobian(const Vec& x) const {
    Mat J(n_, n_);
    DVec<D1> xd(n_), out;
    for (int j = 0; j < n_; ++j) {
        for (int i = 0; i < n_; ++i) xd[i] = D1{x[i], i == j ? 1.0 : 0.0};
        value_d1(xd, out);
        for (int i = 0; i < n_; ++i) J(i, j) = out[i].d;
    }
    return J;
}

AnalyticField::AnalyticField(std::vector<ExprPtr> comps, Box b)
    : VectorField(static_cast<int>(comps.size())), comps_(std::move(comps)) {
    box = std::move(b);
    constant_ = true;
    for (const auto& c : comps_)
        if (!is_constant_expr(*c)) constant_ = false;
}

void AnalyticField::value(const Vec& x, Vec& out) const {
    out.resize(n_);
    std::vector<double> env(x.data(), x.data() + n_);
    for (int i = 0; i < n_; ++i) out[i] = eval<double>(*comps_[i], env, nullptr);
}

void AnalyticField::value_d1(const DVec<D1>& x, DVec<D1>& out) const {
    out.resize(n_);
    for (int i = 0; i < n_; ++i) out[i] = eval<D1>(*comps_[i], x, nullptr);
}

void AnalyticField::value_d2(const DVec<D2>& x, DVec<D2>& out) const {
    out.resize(n_);
    for (int i = 0; i < n_; ++i) out[i] = eval<D2>(*comps_[i], x, nullptr);
}

BracketField::BracketField(FieldPtr v, FieldPtr w)
    : VectorField(v->dim()), v_(std::move(v)), w_(std::move(w)) {
    if (v_->dim() != w_->dim()) throw Error("lie bracket: dimension mismatch");
    box = v_->box;
    for (int i = 0; i < box.dim(); ++i) {
        box.lo[i] = std::max(box.lo[i], w_->box.lo[i]);
        box.hi[i] = std::min(box.hi[i], w_->box.hi[i]);
    }
    zero_ = v_->is_constant() && w_->is_constant();
}

void BracketField::value(const Vec& x, Vec& out) const {
    out.resize(n_);
    if (zero_) {
        out.setZero();
        return;
    }
    // (dw/dx) v - (dv/dx) w via two dual passes.
    Vec vx = v_->value(x);
    Vec wx = w_->value(x);
    out = w_->jac_vec(x, vx) - v_->jac_vec(x, wx);
}

void BracketField::value_d1(const DVec<D1>& x, DVec<D1>& out) const {
    out.assign(n_, D1{});
    if (zero_) return;
    const int n = n_;
    // All quantities as duals in the incoming direction; Jacobians of the
    // operands come from their second-level duals.
    DVec<D1> vx, wx;
    v_->value_d1(x, vx);
    w_->value_d1(x, wx);
    DVec<D2> xd(n), col;
    for (int j = 0; j < n; ++j) {
        // Differentiate w and v along the j-th coordinate, carrying x's dual.
        for (int i = 0; i < n; ++i) xd[i] = D2{x[i], D1{i == j ? 1.0 : 0.0, 0.0}};
        w_->value_d2(xd, col);
        for (int i = 0; i < n; ++i) out[i] += col[i].d * vx[j];
        v_->value_d2(xd, col);
        for (int i = 0; i < n; ++i) out[i] += -(col[i].d * wx[j]);
    }
}

LinCombField::LinCombField(std::vector<FieldPtr> fields, Vec coeffs)
    : VectorField(fields.empty() ? 0 : fields[0]->dim()),
      fields_(std::move(fields)),
      coeffs_(std::move(coeffs)) {
    if (fields_.empty()) throw Error("linear combination of no fields");
    box = fields_[0]->box;
    constant_ = true;
    for (const auto& f : fields_) {
        if (f->dim() != n_) throw Error("linear combination: dimension mismatch");
        if (!f->is_constant()) constant_ = false;
        for (int i = 0; i < box.dim(); ++i) {
            box.lo[i] = std::max(box.lo[i], f->box.lo[i]);
            box.hi[i] = std::min(box.hi[i], f->box.hi[i]);
        }
    }
}

void LinCombField::value(const Vec& x, Vec& out) const {
    out = Vec::Zero(n_);
    Vec tmp(n_);
    for (size_t k = 0; k < fields_.size(); ++k) {
        fields_[k]->value(x, tmp);
        out += coeffs_[static_cast<int>(k)] * tmp;
    }
}

void LinCombField::value_d1(const DVec<D1>& x, DVec<D1>& out) const {
    out.assign(n_, D1{});
    DVec<D1> tmp;
    for (size_t k = 0; k < fields_.size(); ++k) {
        fields_[k]->value_d1(x, tmp);
        double c = coeffs_[static_cast<int>(k)];
        for (int i = 0; i < n_; ++i) out[i] += c * tmp[i];
    }
}

void LinCombField::value_d2(const DVec<D2>& x, DVec<D2>& out) const {
    out.assign(n_, D2{});
    DVec<D2> tmp;
    for (size_t k = 0; k < fields_.size(); ++k) {
        fields_[k]->value_d2(x, tmp);
        double c = coeffs_[static_cast<int>(k)];
        for (int i = 0; i < n_; ++i) out[i] += c * tmp[i];
    }
}

double ScalarGain::operator()(const Vec& x, double u) const {
    std::vector<double> env(x.data(), x.data() + n_);
    env.push_back(u);
    return eval<double>(*expr_, env, nullptr);
}

double ScalarGain::du(const Vec& x, double u) const {
    std::vector<D1> env(n_ + 1);
    for (int i = 0; i < n_; ++i) env[i] = D1{x[i], 0.0};
    env[n_] = D1{u, 1.0};
    return eval<D1>(*expr_, env, nullptr).d;
}

FieldPtr ad_field(FieldPtr v, FieldPtr w, int k) {
    FieldPtr cur = std::move(w);
    for (int i = 0; i < k; ++i) cur = std::make_shared<BracketField>(v, cur);
    return cur;
}

}  // namespace gtf
