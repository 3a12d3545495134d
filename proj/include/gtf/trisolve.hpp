#pragma once

#include "gtf/chart.hpp"
#include "gtf/curve.hpp"

namespace gtf {

// View of a system in triangular coordinates: row functions f_i depending on
// (zeta_1..zeta_{i+1}) (drift rows), inside the coordinate box |zeta_k| < sigma_k.
class TriangularView {
public:
    TriangularView(int n, int p, Vec sigma) : n(n), p(p), sigma(std::move(sigma)) {}
    virtual ~TriangularView() = default;

    int n;
    int p;      // subsystem level: states zeta_1..zeta_p, control zeta_{p+1}
    Vec sigma;  // per-coordinate box half-widths

    // Row value; 1-based i; prefix carries zeta_1..zeta_{i+1} (at least).
    virtual double f(int i, double t, const Vec& prefix) const = 0;
    // d f_i / d zeta_j, 1-based indices, j <= i+1.
    virtual double df(int i, int j, double t, const Vec& prefix) const;

    // Max |df_i/dzeta_j| over probes for j > i+1 (dependency-pattern check).
    double probe_dependency(double t, const Vec& zeta, int n_probes = 8) const;
};

// Rows are expressions in zeta_1..zeta_n (unit tests and explicit forms).
class ExprTriangular : public TriangularView {
public:
    ExprTriangular(std::vector<ExprPtr> rows, int p, Vec sigma);
    double f(int i, double t, const Vec& prefix) const override;
    double df(int i, int j, double t, const Vec& prefix) const override;

private:
    std::vector<ExprPtr> rows_;
};

// Rows are the drift transported through a fixed canonical chart:
// f_i = <grad phi_i(x), a(x)> at x = forward(zeta), with trailing coordinates
// padded from a reference curve (canonical coordinates make rows independent
// of the padding up to the chart's flattening residual).
class ChartTriangular : public TriangularView {
public:
    ChartTriangular(std::shared_ptr<const CanonicalChart> chart, FieldPtr drift, int p,
                    CurvePtr pad);
    double f(int i, double t, const Vec& prefix) const override;
    double df(int i, int j, double t, const Vec& prefix) const override;

    const CanonicalChart& chart() const { return *chart_; }

private:
    Vec assemble(int i, double t, const Vec& prefix) const;
    std::shared_ptr<const CanonicalChart> chart_;
    FieldPtr drift_;
    CurvePtr pad_;
};

// Reference control w(.) with w(t1) = zeta*_{p+1}(t1) solving
// d zeta*_p/dt = f_p(zeta*_1.., w) along the reference, with sigma shrunk
// until the root branch stays in the box with a fixed derivative sign.
struct RefControl {
    double sigma = 0.0;
    CubicSpline1D w;
    int halvings = 0;
    double worst_residual = 0.0;  // equation residual along the accepted branch
};

RefControl reference_control(const TriangularView& tri, const Curve& zeta_star, double t1,
                             double sigma_bar, int max_halvings = 20, int grid = 257);

// Time-varying linearization along (zeta*, w).
struct LtvSystem {
    int p = 0;
    std::function<void(double, Mat&, Vec&)> eval;  // A (p x p), B (p)
};

LtvSystem linearize_ltv(const TriangularView& tri, const Curve& zeta_star,
                        const CubicSpline1D& w);

// Gramian basis controls w_1..w_p with double zeros at both endpoints; each
// steers the linearization from 0 to e_i over [t1, t1+sigma].
struct BasisControls {
    std::vector<CubicSpline1D> w;       // p splines
    std::vector<CubicSpline1D> dw;      // their derivatives (sampled analytically)
    double gramian_min_eig = 0.0;
    double endpoint_worst = 0.0;        // |endpoint - e_i| under the LTV itself
};

BasisControls basis_controls(const LtvSystem& ltv, double t1, double sigma,
                             double gram_eig_floor = 1e-12);

// Endpoint of the nonlinear subsystem under a control signal.
Vec shoot(const TriangularView& tri, double t1, double sigma, const Vec& zeta_init,
          const std::function<double(double)>& control, const IntegratorSettings& s,
          DenseOutput* dense = nullptr);

// Shooting Jacobian dF/dlambda via joint sensitivity integration.
Mat shoot_jacobian(const TriangularView& tri, double t1, double sigma, const Vec& zeta_init,
                   const std::function<double(double)>& base_control,
                   const BasisControls& basis, const Vec& lambda,
                   const IntegratorSettings& s);

// Damped Newton (with target continuation fallback) for F_hat(lambda) = target.
struct LambdaSolve {
    Vec lambda;
    double residual = 0.0;
    int newton_iters = 0;
    bool used_homotopy = false;
};

LambdaSolve solve_lambda(const TriangularView& tri, double t1, double sigma,
                         const Vec& zeta_init, const std::function<double(double)>& hat_w,
                         const BasisControls& basis, const Vec& target,
                         const IntegratorSettings& s, double lambda_cap,
                         double tol = 1e-9);

// Corrected control: w plus a cubic Hermite bridge matching prescribed endpoint
// values and derivatives; fails if the box margin would be violated.
struct CorrectedControl {
    std::function<double(double)> value;
    std::function<double(double)> deriv;
    double l1_distance = 0.0;  // integral |w_hat - w|
};

CorrectedControl correct_control(const CubicSpline1D& w, double t1, double sigma,
                                 double left_deriv, double right_value, double right_deriv,
                                 double box_bound);

// Glued coordinate curve on [t1, t1+sigma]: rows 1..p from the subsystem under
// w_hat_{lambda*}, row p+1 the control itself, rows p+2..n Hermite fillers.
struct GlueResult {
    CurvePtr zeta_bar;             // n-dim coords curve
    double junction_mismatch = 0;  // one-sided derivative mismatch at t1+sigma
    double box_violation = 0;      // max overshoot of |zeta_k| - sigma_k (<=0 ok)
};

GlueResult glue_segment(const TriangularView& tri, double t1, double sigma,
                        const std::function<double(double)>& w_lam,
                        const std::function<double(double)>& dw_lam, const Vec& zeta_init_full,
                        const Vec& filler_init_deriv, const Vec& tail_value,
                        const Vec& tail_deriv, const IntegratorSettings& s);

}  // namespace gtf
