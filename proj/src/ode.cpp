#include "gtf/ode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace gtf {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                 e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                 e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

Vec hermite(double t, double ta, const Vec& xa, const Vec& fa, double tb, const Vec& xb,
            const Vec& fb) {
    double h = tb - ta;
    double s = (t - ta) / h;
    double s2 = s * s, s3 = s2 * s;
    double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2,
           h11 = s3 - s2;
    return h00 * xa + (h10 * h) * fa + h01 * xb + (h11 * h) * fb;
}

Vec hermite_deriv(double t, double ta, const Vec& xa, const Vec& fa, double tb, const Vec& xb,
                  const Vec& fb) {
    double h = tb - ta;
    double s = (t - ta) / h;
    double d00 = (6 * s * s - 6 * s) / h, d10 = 3 * s * s - 4 * s + 1,
           d01 = (-6 * s * s + 6 * s) / h, d11 = 3 * s * s - 2 * s;
    return d00 * xa + d10 * fa + d01 * xb + d11 * fb;
}

}  // namespace

std::pair<const DenseOutput::Node*, const DenseOutput::Node*> DenseOutput::bracket(double t) const {
    if (nodes_.size() < 2) throw Error("dense output has fewer than two nodes");
    bool fwd = nodes_.back().t >= nodes_.front().t;
    size_t lo = 0, hi = nodes_.size() - 1;
    while (hi - lo > 1) {
        size_t mid = (lo + hi) / 2;
        bool left = fwd ? (t >= nodes_[mid].t) : (t <= nodes_[mid].t);
        if (left) lo = mid;
        else hi = mid;
    }
    return {&nodes_[lo], &nodes_[lo + 1]};
}

Vec DenseOutput::eval(double t) const {
    auto [a, b] = bracket(t);
    return hermite(t, a->t, a->x, a->f, b->t, b->x, b->f);
}

Vec DenseOutput::deriv(double t) const {
    auto [a, b] = bracket(t);
    return hermite_deriv(t, a->t, a->x, a->f, b->t, b->x, b->f);
}

namespace {

IntegrateResult integrate_rk4(const Rhs& rhs, double t0, double t1, const Vec& x0,
                              const IntegratorSettings& s, DenseOutput* dense,
                              const EventFn* event);

}  // namespace

IntegrateResult integrate(const Rhs& rhs, double t0, double t1, const Vec& x0,
                          const IntegratorSettings& s, DenseOutput* dense, const EventFn* event) {
    s.validate();
    if (s.method == IntegratorSettings::Method::RK4Fixed)
        return integrate_rk4(rhs, t0, t1, x0, s, dense, event);

    const int n = static_cast<int>(x0.size());
    IntegrateResult res;
    res.x = x0;
    res.t = t0;
    if (t1 == t0) {
        if (dense) {
            Vec f(n);
            rhs(t0, x0, f);
            dense->push(t0, x0, f);
            dense->push(t0, x0, f);
        }
        return res;
    }
    const double dir = t1 > t0 ? 1.0 : -1.0;

    Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), xt(n), xnew(n), err(n);
    rhs(t0, x0, k1);

    double g_prev = 0.0;
    if (event) {
        g_prev = (*event)(t0, x0);
        if (g_prev <= 0.0) throw SolverError("event function not positive at the initial point");
    }
    if (dense) dense->push(t0, res.x, k1);

    // Initial step: conservative fraction of the interval, bounded by max_step.
    double h = dir * std::min({std::abs(t1 - t0), s.max_step,
                               std::max(1e-8, 0.01 * std::abs(t1 - t0))});

    long steps = 0;
    const double t_eps = 4e-16 * (std::abs(t0) + std::abs(t1) + 1.0);
    while (dir * (t1 - res.t) > t_eps) {
        if (++steps > s.max_steps)
            throw SolverError("integrator exhausted max step count (possible stiffness)");
        bool last = false;
        if (dir * (res.t + h) >= dir * t1) {
            h = t1 - res.t;
            last = true;
        }

        const double t = res.t;
        const Vec& x = res.x;
        xt = x + h * (a21 * k1);
        rhs(t + c2 * h, xt, k2);
        xt = x + h * (a31 * k1 + a32 * k2);
        rhs(t + c3 * h, xt, k3);
        xt = x + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * h, xt, k4);
        xt = x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * h, xt, k5);
        xt = x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(t + h, xt, k6);
        xnew = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        rhs(t + h, xnew, k7);
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double norm = 0.0;
        for (int i = 0; i < n; ++i) {
            double sc = s.atol + s.rtol * std::max(std::abs(x[i]), std::abs(xnew[i]));
            double q = err[i] / sc;
            norm += q * q;
        }
        norm = std::sqrt(norm / n);

        if (norm <= 1.0 || std::abs(h) <= 1e-14 * std::max(1.0, std::abs(t))) {
            double t_new = t + h;
            if (event) {
                double g_new = (*event)(t_new, xnew);
                if (g_new <= 0.0) {
                    // Bisect the crossing on this step's Hermite interpolant.
                    double lo = t, hi = t_new;
                    Vec xm(n);
                    while (std::abs(hi - lo) > 1e-10) {
                        double mid = 0.5 * (lo + hi);
                        xm = hermite(mid, t, x, k1, t_new, xnew, k7);
                        if ((*event)(mid, xm) <= 0.0) hi = mid;
                        else lo = mid;
                    }
                    res.t = hi;
                    res.x = hermite(hi, t, x, k1, t_new, xnew, k7);
                    res.stopped_at_event = true;
                    res.steps = steps;
                    if (dense) {
                        Vec f(n);
                        rhs(res.t, res.x, f);
                        dense->push(res.t, res.x, f);
                    }
                    return res;
                }
                g_prev = g_new;
            }
            res.t = last ? t1 : t_new;
            res.x = xnew;
            k1 = k7;  // FSAL
            if (dense) dense->push(res.t, res.x, k1);
        }

        double fac = norm > 0.0 ? 0.9 * std::pow(norm, -0.2) : 5.0;
        fac = std::clamp(fac, 0.2, 5.0);
        h *= fac;
        if (std::abs(h) > s.max_step) h = dir * s.max_step;
        if (std::abs(h) < 1e-15 * std::max(1.0, std::abs(res.t)))
            throw SolverError("integrator step size underflow");
    }
    res.steps = steps;
    return res;
}

namespace {

IntegrateResult integrate_rk4(const Rhs& rhs, double t0, double t1, const Vec& x0,
                              const IntegratorSettings& s, DenseOutput* dense,
                              const EventFn* event) {
    const int n = static_cast<int>(x0.size());
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    long nsteps = std::max<long>(1, static_cast<long>(std::ceil(std::abs(t1 - t0) / s.fixed_step)));
    if (nsteps > s.max_steps) throw SolverError("fixed-step count exceeds max_steps");
    double h = (t1 - t0) / static_cast<double>(nsteps);

    IntegrateResult res;
    res.x = x0;
    res.t = t0;
    Vec k1(n), k2(n), k3(n), k4(n), xt(n), xprev(n);
    rhs(t0, x0, k1);
    if (dense) dense->push(t0, x0, k1);
    double g_prev = event ? (*event)(t0, x0) : 1.0;
    if (event && g_prev <= 0.0)
        throw SolverError("event function not positive at the initial point");

    for (long i = 0; i < nsteps; ++i) {
        xprev = res.x;
        double t = res.t;
        rhs(t, res.x, k1);
        xt = res.x + 0.5 * h * k1;
        rhs(t + 0.5 * h, xt, k2);
        xt = res.x + 0.5 * h * k2;
        rhs(t + 0.5 * h, xt, k3);
        xt = res.x + h * k3;
        rhs(t + h, xt, k4);
        res.x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        res.t = t + h;
        res.steps++;
        Vec fnew(n);
        rhs(res.t, res.x, fnew);
        if (event) {
            double g = (*event)(res.t, res.x);
            if (g <= 0.0) {
                double t_end = res.t;
                Vec x_end = res.x;
                double lo = t, hi = t_end;
                Vec xm(n);
                while (std::abs(hi - lo) > 1e-10) {
                    double mid = 0.5 * (lo + hi);
                    xm = hermite(mid, t, xprev, k1, t_end, x_end, fnew);
                    if ((*event)(mid, xm) <= 0.0) hi = mid;
                    else lo = mid;
                }
                res.t = hi;
                res.x = hermite(hi, t, xprev, k1, t_end, x_end, fnew);
                res.stopped_at_event = true;
                if (dense) dense->push(res.t, res.x, fnew);
                return res;
            }
        }
        if (dense) dense->push(res.t, res.x, fnew);
    }
    return res;
}

// Exact straight-line flow for constant fields, with analytic box-exit time.
Vec constant_flow(const VectorField& v, const Vec& x0, double t, DenseOutput* dense) {
    Vec vv = v.value(x0);
    if (t != 0.0) {
        double s_exit = std::numeric_limits<double>::infinity();  // in |t| units
        double dir = t > 0 ? 1.0 : -1.0;
        for (int i = 0; i < x0.size(); ++i) {
            double vi = dir * vv[i];
            if (vi > 0.0 && std::isfinite(v.box.hi[i]))
                s_exit = std::min(s_exit, (v.box.hi[i] - x0[i]) / vi);
            if (vi < 0.0 && std::isfinite(v.box.lo[i]))
                s_exit = std::min(s_exit, (v.box.lo[i] - x0[i]) / vi);
        }
        if (s_exit < std::abs(t))
            throw BoxExit("flow left the validity box", dir * s_exit);
    }
    Vec out = x0 + t * vv;
    if (dense) {
        dense->push(0.0, x0, vv);
        dense->push(t, out, vv);
    }
    return out;
}

}  // namespace

Vec flow(const VectorField& v, const Vec& x0, double t, const IntegratorSettings& s,
         DenseOutput* dense) {
    if (!v.box.contains(x0)) throw BoxExit("initial point outside the validity box", 0.0);
    if (t == 0.0) {
        if (dense) {
            Vec f = v.value(x0);
            dense->push(0.0, x0, f);
            dense->push(0.0, x0, f);
        }
        return x0;
    }
    if (v.is_constant()) return constant_flow(v, x0, t, dense);

    Rhs rhs = [&v](double, const Vec& x, Vec& dx) { v.value(x, dx); };
    bool bounded = false;
    for (int i = 0; i < v.box.dim(); ++i)
        if (std::isfinite(v.box.lo[i]) || std::isfinite(v.box.hi[i])) bounded = true;
    if (!bounded) {
        return integrate(rhs, 0.0, t, x0, s, dense).x;
    }
    EventFn exit_box = [&v](double, const Vec& x) { return v.box.margin(x); };
    IntegrateResult r = integrate(rhs, 0.0, t, x0, s, dense, &exit_box);
    if (r.stopped_at_event) throw BoxExit("flow left the validity box", r.t);
    return r.x;
}

Vec flow_sequence(const FlowSequence& seq, const Vec& x0, const IntegratorSettings& s) {
    Vec x = x0;
    for (size_t i = 0; i < seq.size(); ++i) {
        try {
            x = flow(*seq[i].field, x, seq[i].duration, s);
        } catch (const BoxExit& e) {
            throw BoxExit("segment " + std::to_string(i) + ": " + e.what(), e.t_exit);
        }
    }
    return x;
}

Vec inverse_flow_sequence(const FlowSequence& seq, const Vec& x, const IntegratorSettings& s) {
    Vec y = x;
    for (size_t i = seq.size(); i-- > 0;) {
        try {
            y = flow(*seq[i].field, y, -seq[i].duration, s);
        } catch (const BoxExit& e) {
            throw BoxExit("segment " + std::to_string(i) + ": " + e.what(), e.t_exit);
        }
    }
    return y;
}

std::pair<Vec, Mat> flow_with_jacobian(const VectorField& v, const Vec& x0, double t,
                                       const IntegratorSettings& s) {
    const int n = v.dim();
    if (v.is_constant() || t == 0.0) {
        Vec y = flow(v, x0, t, s);
        return {y, Mat::Identity(n, n)};
    }
    // Augmented state [x; vec(M)], M' = J_v(x) M.
    Vec z0(n + n * n);
    z0.head(n) = x0;
    Mat id = Mat::Identity(n, n);
    for (int j = 0; j < n; ++j) z0.segment(n + j * n, n) = id.col(j);

    Rhs rhs = [&](double, const Vec& z, Vec& dz) {
        dz.resize(n + n * n);
        Vec x = z.head(n);
        Vec fx(n);
        v.value(x, fx);
        dz.head(n) = fx;
        Mat J(n, n);
        DVec<D1> xdl(n), out;
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) xdl[i] = D1{x[i], i == j ? 1.0 : 0.0};
            v.value_d1(xdl, out);
            for (int i = 0; i < n; ++i) J(i, j) = out[i].d;
        }
        for (int j = 0; j < n; ++j) dz.segment(n + j * n, n) = J * z.segment(n + j * n, n);
    };
    EventFn exit_box = [&v, n](double, const Vec& z) { return v.box.margin(z.head(n)); };
    bool bounded = false;
    for (int i = 0; i < v.box.dim(); ++i)
        if (std::isfinite(v.box.lo[i]) || std::isfinite(v.box.hi[i])) bounded = true;
    IntegrateResult r = integrate(rhs, 0.0, t, z0, s, nullptr, bounded ? &exit_box : nullptr);
    if (r.stopped_at_event) throw BoxExit("flow left the validity box", r.t);
    Vec y = r.x.head(n);
    Mat M(n, n);
    for (int j = 0; j < n; ++j) M.col(j) = r.x.segment(n + j * n, n);
    return {y, M};
}

Vec pushforward(const FlowSequence& seq, const Vec& x, const Vec& xi,
                const IntegratorSettings& s) {
    const int n = static_cast<int>(x.size());
    Vec base = x, tangent = xi;
    for (size_t k = 0; k < seq.size(); ++k) {
        const VectorField& v = *seq[k].field;
        double t = seq[k].duration;
        if (v.is_constant() || t == 0.0) {
            base = flow(v, base, t, s);
            continue;  // identity tangent map
        }
        Vec z0(2 * n);
        z0.head(n) = base;
        z0.tail(n) = tangent;
        Rhs rhs = [&v, n](double, const Vec& z, Vec& dz) {
            dz.resize(2 * n);
            Vec xx = z.head(n);
            Vec fx(n);
            v.value(xx, fx);
            dz.head(n) = fx;
            dz.tail(n) = v.jac_vec(xx, z.tail(n));
        };
        EventFn exit_box = [&v, n](double, const Vec& z) { return v.box.margin(z.head(n)); };
        IntegrateResult r = integrate(rhs, 0.0, t, z0, s, nullptr, &exit_box);
        if (r.stopped_at_event)
            throw BoxExit("segment " + std::to_string(k) + ": flow left the validity box", r.t);
        base = r.x.head(n);
        tangent = r.x.tail(n);
    }
    return tangent;
}

std::pair<Vec, Mat> pushforward_matrix(const FlowSequence& seq, const Vec& x,
                                       const IntegratorSettings& s) {
    const int n = static_cast<int>(x.size());
    Vec base = x;
    Mat M = Mat::Identity(n, n);
    for (const auto& seg : seq) {
        auto [y, Mi] = flow_with_jacobian(*seg.field, base, seg.duration, s);
        base = y;
        M = Mi * M;
    }
    return {base, M};
}

void write_trajectory_csv(const std::string& path, const DenseOutput& dense, int n_samples) {
    if (dense.empty()) throw Error("empty trajectory");
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path + " for writing");
    int n = static_cast<int>(dense.node(0).x.size());
    os << "t";
    for (int i = 1; i <= n; ++i) os << ",x" << i;
    os << "\n";
    double ta = dense.t_front(), tb = dense.t_back();
    char buf[40];
    for (int k = 0; k < n_samples; ++k) {
        double t = ta + (tb - ta) * k / (n_samples - 1);
        Vec x = dense.eval(t);
        std::snprintf(buf, sizeof(buf), "%.17g", t);
        os << buf;
        for (int i = 0; i < n; ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", x[i]);
            os << "," << buf;
        }
        os << "\n";
    }
}

}  // namespace gtf
