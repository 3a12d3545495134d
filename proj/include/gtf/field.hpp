#pragma once

#include <Eigen/Dense>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "gtf/expr.hpp"

namespace gtf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Axis-aligned validity box.
struct Box {
    Vec lo, hi;

    static Box unbounded(int n) {
        Box b;
        b.lo = Vec::Constant(n, -std::numeric_limits<double>::infinity());
        b.hi = Vec::Constant(n, std::numeric_limits<double>::infinity());
        return b;
    }
    static Box cube(int n, double half) {
        Box b;
        b.lo = Vec::Constant(n, -half);
        b.hi = Vec::Constant(n, half);
        return b;
    }

    int dim() const { return static_cast<int>(lo.size()); }
    bool contains(const Vec& x, double margin = 0.0) const {
        for (int i = 0; i < x.size(); ++i)
            if (x[i] < lo[i] + margin || x[i] > hi[i] - margin) return false;
        return true;
    }
    // Distance from x to the boundary (negative if outside).
    double margin(const Vec& x) const {
        double m = std::numeric_limits<double>::infinity();
        for (int i = 0; i < x.size(); ++i) {
            m = std::min(m, x[i] - lo[i]);
            m = std::min(m, hi[i] - x[i]);
        }
        return m;
    }
    bool empty() const {
        for (int i = 0; i < lo.size(); ++i)
            if (!(lo[i] < hi[i])) return true;
        return false;
    }
};

template <class T>
using DVec = std::vector<T>;  // small dense vectors for dual passes

// Smooth vector field on (a box of) R^n with forward-mode derivatives.
class VectorField {
public:
    explicit VectorField(int n) : box(Box::unbounded(n)), n_(n) {}
    virtual ~VectorField() = default;

    int dim() const { return n_; }

    virtual void value(const Vec& x, Vec& out) const = 0;
    // Evaluation at a dual point; the default is a central difference over value().
    virtual void value_d1(const DVec<D1>& x, DVec<D1>& out) const;
    // Second-level duals; default is a central difference over value_d1().
    virtual void value_d2(const DVec<D2>& x, DVec<D2>& out) const;

    // Constant fields get closed-form flows and identity pushforwards.
    virtual bool is_constant() const { return false; }

    Vec value(const Vec& x) const {
        Vec out(n_);
        value(x, out);
        return out;
    }
    // J(x) * v in a single dual pass.
    Vec jac_vec(const Vec& x, const Vec& v) const;
    Mat jacobian(const Vec& x) const;

    Box box;

protected:
    int n_;
};

using FieldPtr = std::shared_ptr<const VectorField>;

// Field whose components are expressions in the state variables x_1..x_n.
class AnalyticField : public VectorField {
public:
    AnalyticField(std::vector<ExprPtr> comps, Box b);

    void value(const Vec& x, Vec& out) const override;
    void value_d1(const DVec<D1>& x, DVec<D1>& out) const override;
    void value_d2(const DVec<D2>& x, DVec<D2>& out) const override;
    bool is_constant() const override { return constant_; }

    const std::vector<ExprPtr>& components() const { return comps_; }

private:
    std::vector<ExprPtr> comps_;
    bool constant_;
};

// Fixed vector as a field.
class ConstantField : public VectorField {
public:
    ConstantField(Vec v, Box b) : VectorField(static_cast<int>(v.size())), v_(std::move(v)) {
        box = std::move(b);
    }
    void value(const Vec&, Vec& out) const override { out = v_; }
    void value_d1(const DVec<D1>&, DVec<D1>& out) const override {
        out.assign(v_.size(), D1{});
        for (int i = 0; i < v_.size(); ++i) out[i] = D1{v_[i], 0.0};
    }
    void value_d2(const DVec<D2>&, DVec<D2>& out) const override {
        out.assign(v_.size(), D2{});
        for (int i = 0; i < v_.size(); ++i) out[i] = D2{D1{v_[i], 0.0}, D1{}};
    }
    bool is_constant() const override { return true; }

private:
    Vec v_;
};

// Lie bracket [v,w] = (dw/dx) v - (dv/dx) w as a field.
// Values are exact through the operands' first duals; its own first duals use
// the operands' second duals, and second duals fall back to differencing.
class BracketField : public VectorField {
public:
    BracketField(FieldPtr v, FieldPtr w);
    void value(const Vec& x, Vec& out) const override;
    void value_d1(const DVec<D1>& x, DVec<D1>& out) const override;
    bool is_constant() const override { return zero_; }

private:
    FieldPtr v_, w_;
    bool zero_;  // bracket of constant fields
};

// Fixed linear combination of fields sharing a dimension.
class LinCombField : public VectorField {
public:
    LinCombField(std::vector<FieldPtr> fields, Vec coeffs);
    void value(const Vec& x, Vec& out) const override;
    void value_d1(const DVec<D1>& x, DVec<D1>& out) const override;
    void value_d2(const DVec<D2>& x, DVec<D2>& out) const override;
    bool is_constant() const override { return constant_; }

private:
    std::vector<FieldPtr> fields_;
    Vec coeffs_;
    bool constant_;
};

// Scalar gain beta(x, u): expression over state variables plus `u`.
class ScalarGain {
public:
    ScalarGain(ExprPtr e, int n) : expr_(std::move(e)), n_(n) {}

    double operator()(const Vec& x, double u) const;
    // d/du at (x, u)
    double du(const Vec& x, double u) const;
    const Expr& expr() const { return *expr_; }
    int state_dim() const { return n_; }

private:
    ExprPtr expr_;
    int n_;
};

// Iterated bracket ad_v^k w as a field chain.
FieldPtr ad_field(FieldPtr v, FieldPtr w, int k);

}  // namespace gtf
