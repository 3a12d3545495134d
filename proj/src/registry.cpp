#include <cmath>
#include <mutex>

#include "gtf/curve.hpp"
#include "gtf/ode.hpp"
#include "gtf/system.hpp"

namespace gtf {

namespace {

// --- Example 3.1 machinery ---------------------------------------------------
//
// Fields v1 = (cos x1, -sin x1), v2 = (sin x1, cos x1) on R^2. The strip system
// transports f = (f1, 0), g = (0, 1) of the singular triangular system through
// the diffeomorphism phi_0(z) = Phi_{v2}^{z2} Phi_{v1}^{z1} (0,0).

std::vector<ExprPtr> example_field_exprs(bool second) {
    SymbolTable syms;
    syms.vars = {"x1", "x2"};
    if (!second) return {parse_expr("cos(x1)", syms), parse_expr("-sin(x1)", syms)};
    return {parse_expr("sin(x1)", syms), parse_expr("cos(x1)", syms)};
}

FieldPtr example_v1(const Box& b) { return std::make_shared<AnalyticField>(example_field_exprs(false), b); }
FieldPtr example_v2(const Box& b) { return std::make_shared<AnalyticField>(example_field_exprs(true), b); }

// psi(z1): the v2-flow time from Phi_{v1}^{z1}(0,0) to the v1-orbit through
// (pi, 0), found by event bisection on x2 - ln(-cos x1), memoized on a
// geometric grid in ln z1 and interpolated by a natural cubic spline.
class PsiFunction : public Scalar1D {
public:
    PsiFunction() {
        const double lmin = std::log(1e-5), lmax = std::log(4.5);
        const int N = 1024;
        std::vector<double> ls(N), ys(N);
        Box big = Box::cube(2, 50.0);
        FieldPtr v1 = example_v1(big), v2 = example_v2(big);
        IntegratorSettings s;
        s.rtol = 1e-12;
        s.atol = 1e-14;
        Vec origin = Vec::Zero(2);
        for (int i = 0; i < N; ++i) {
            double l = lmin + (lmax - lmin) * i / (N - 1);
            ls[i] = l;
            ys[i] = root_find(std::exp(l), *v1, *v2, s, origin);
        }
        spline_ = CubicSpline1D(ls, ys);
        lmin_ = lmin;
        lmax_ = lmax;
    }

    double value(double z1) const override {
        double l = lambda(z1);
        return spline_.eval(l);
    }
    double deriv(double z1) const override {
        double l = lambda(z1);
        if (l <= lmin_ || l >= lmax_) return 0.0;
        return spline_.deriv(l) / z1;
    }
    double deriv2(double z1) const override {
        double l = lambda(z1);
        if (l <= lmin_ || l >= lmax_) return 0.0;
        return (spline_.deriv2(l) - spline_.deriv(l)) / (z1 * z1);
    }

    static double root_find(double z1, const VectorField& v1, const VectorField& v2,
                            const IntegratorSettings& s, const Vec& origin) {
        Vec p = flow(v1, origin, z1, s);
        // Positive until the v2-trajectory reaches the orbit x2 = ln(-cos x1).
        EventFn hit = [](double, const Vec& x) {
            double c = std::cos(x[0]);
            if (c >= -1e-12) return 1.0;
            return x[1] - std::log(-c);
        };
        Rhs rhs = [&v2](double, const Vec& x, Vec& dx) { v2.value(x, dx); };
        IntegrateResult r = integrate(rhs, 0.0, 60.0, p, s, nullptr, &hit);
        if (!r.stopped_at_event) throw SolverError("psi: no intersection found");
        return r.t;
    }

private:
    double lambda(double z1) const {
        double l = std::log(std::max(std::abs(z1), 1e-300));
        return std::min(std::max(l, lmin_), lmax_);
    }

    CubicSpline1D spline_;
    double lmin_ = 0, lmax_ = 0;
};

std::shared_ptr<const Scalar1D> psi_function() {
    static std::shared_ptr<const Scalar1D> psi = std::make_shared<PsiFunction>();
    return psi;
}

// Pushforward of a base field through phi_0: value(x) = J phi_0(z) * f(z) with
// z = phi_0^{-1}(x) found by damped Newton on the two-segment flow map.
class StripPushforwardField : public VectorField {
public:
    StripPushforwardField(FieldPtr base, Box strip_box)
        : VectorField(2), base_(std::move(base)) {
        box = std::move(strip_box);
        Box big = Box::cube(2, 80.0);
        v1_ = example_v1(big);
        v2_ = example_v2(big);
        settings_.rtol = 1e-12;
        settings_.atol = 1e-14;
    }

    void value(const Vec& x, Vec& out) const override {
        Vec z = invert(x);
        Mat J = forward_jacobian(z);
        out = J * base_->value(z);
    }

    // z with phi_0(z) = x.
    Vec invert(const Vec& x) const {
        thread_local Vec seed = Vec::Zero(2);
        Vec z = seed;
        if (!z.allFinite() || std::abs(z[0]) > 10 || std::abs(z[1]) > 30) z.setZero();
        bool ok = false;
        for (int it = 0; it < 60; ++it) {
            Vec fx = forward(z) - x;
            double r0 = fx.norm();
            if (r0 < 1e-12) {
                ok = true;
                break;
            }
            Mat J = forward_jacobian(z);
            Vec step = J.partialPivLu().solve(fx);
            double damp = 1.0;
            Vec znew = z - step;
            for (int h = 0; h < 30; ++h) {
                znew = z - damp * step;
                if ((forward(znew) - x).norm() < r0) break;
                damp *= 0.5;
            }
            z = znew;
        }
        if (!ok && (forward(z) - x).norm() > 1e-9)
            throw SolverError("strip field: inversion did not converge");
        seed = z;
        return z;
    }

    Vec forward(const Vec& z) const {
        Vec p = flow(*v1_, origin(), z[0], settings_);
        return flow(*v2_, p, z[1], settings_);
    }

    Mat forward_jacobian(const Vec& z) const {
        Vec p = flow(*v1_, origin(), z[0], settings_);
        auto [q, M2] = flow_with_jacobian(*v2_, p, z[1], settings_);
        Mat J(2, 2);
        J.col(0) = M2 * v1_->value(p);
        J.col(1) = v2_->value(q);
        return J;
    }

private:
    static Vec origin() { return Vec::Zero(2); }

    FieldPtr base_;
    FieldPtr v1_, v2_;
    IntegratorSettings settings_;
};

System make_integrator(int n) {
    SymbolTable syms;
    for (int i = 1; i <= n; ++i) syms.vars.push_back("x" + std::to_string(i));
    SymbolTable csyms = syms;
    csyms.vars.push_back("u");

    System sys;
    sys.name = "integrator" + std::to_string(n);
    sys.n = n;
    sys.box = Box::cube(n, 25.0);
    for (int i = 1; i <= n; ++i) sys.state_names.push_back("x" + std::to_string(i));

    std::vector<ExprPtr> a, b;
    for (int i = 1; i <= n; ++i) {
        a.push_back(parse_expr(i < n ? "x" + std::to_string(i + 1) : "0", syms));
        b.push_back(parse_expr(i < n ? "0" : "1", syms));
    }
    sys.a = std::make_shared<AnalyticField>(a, sys.box);
    sys.b = std::make_shared<AnalyticField>(b, sys.box);
    sys.beta = std::make_shared<ScalarGain>(parse_expr("u", csyms), n);
    for (int i = 1; i <= n; ++i)
        sys.triangular.push_back(parse_expr(i < n ? "x" + std::to_string(i + 1) : "u", csyms));
    return sys;
}

System make_ex9() {
    SymbolTable syms;
    syms.vars = {"z1", "z2"};
    syms.opaque_fns["psi"] = psi_function();
    SymbolTable csyms = syms;
    csyms.vars.push_back("u");

    System sys;
    sys.name = "ex9-singular";
    sys.n = 2;
    sys.box = Box::cube(2, 4.0);
    sys.state_names = {"z1", "z2"};

    const std::string f1 =
        "piecewise(z2 <= 0 : z2^5 * sin(z2), z2 <= psi(z1) : 0, "
        "else : (z2 - psi(z1))^5 * sin(z2 - psi(z1)))";
    std::vector<ExprPtr> a = {parse_expr(f1, syms), parse_expr("0", syms)};
    std::vector<ExprPtr> b = {parse_expr("0", syms), parse_expr("1", syms)};
    sys.a = std::make_shared<AnalyticField>(a, sys.box);
    sys.b = std::make_shared<AnalyticField>(b, sys.box);
    sys.beta = std::make_shared<ScalarGain>(parse_expr("u", csyms), 2);
    sys.triangular = {parse_expr(f1, csyms), parse_expr("u", csyms)};
    return sys;
}

System make_strip() {
    System ex9 = make_ex9();

    System sys;
    sys.name = "example31-strip";
    sys.n = 2;
    sys.box = Box::unbounded(2);
    sys.box.lo[0] = -M_PI + 0.03;
    sys.box.hi[0] = M_PI - 0.03;
    sys.box.lo[1] = -8.0;
    sys.box.hi[1] = 8.0;
    sys.state_names = {"x1", "x2"};

    sys.a = std::make_shared<StripPushforwardField>(ex9.a, sys.box);
    sys.b = std::make_shared<StripPushforwardField>(ex9.b, sys.box);
    SymbolTable csyms;
    csyms.vars = {"x1", "x2", "u"};
    sys.beta = std::make_shared<ScalarGain>(parse_expr("u", csyms), 2);

    // The example's own fields span the nested distributions on the strip.
    sys.frame = {example_v1(sys.box), example_v2(sys.box)};
    sys.named_fields["v1"] = example_v1(Box::cube(2, 80.0));
    sys.named_fields["v2"] = example_v2(Box::cube(2, 80.0));
    return sys;
}

}  // namespace

bool is_registry_name(const std::string& name) {
    return name == "integrator2" || name == "integrator3" || name == "ex9-singular" ||
           name == "example31-strip";
}

System make_registry_system(const std::string& name) {
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    if (name == "integrator2") return make_integrator(2);
    if (name == "integrator3") return make_integrator(3);
    if (name == "ex9-singular") return make_ex9();
    if (name == "example31-strip") return make_strip();
    throw Error("unknown registry system `" + name + "`");
}

}  // namespace gtf
