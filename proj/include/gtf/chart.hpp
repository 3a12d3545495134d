#pragma once

#include <random>

#include "gtf/curve.hpp"
#include "gtf/ode.hpp"
#include "gtf/system.hpp"

namespace gtf {

struct NewtonSettings {
    int max_iter = 30;
    double tol = 1e-12;
};

// Canonical coordinate chart at a base point: the composed frame-field flow
// (t_1..t_n) -> Phi_{v_n}^{t_n} o ... o Phi_{v_1}^{t_1}(base), v_1 applied
// first, with a Newton inverse. Frame ordering: Delta_i = span{v_{n-i}..v_n}.
class CanonicalChart {
public:
    CanonicalChart(Vec base, std::vector<FieldPtr> frame, IntegratorSettings s = {},
                   NewtonSettings ns = {});

    int dim() const { return n_; }
    const Vec& base() const { return base_; }
    const std::vector<FieldPtr>& frame() const { return frame_; }
    bool constant_frame() const { return const_frame_; }

    const Vec& coord_box() const { return sigma_; }  // |zeta_k| < sigma_k
    void set_coord_box(Vec sigma) { sigma_ = std::move(sigma); }

    Vec forward(const Vec& coords) const;

    struct ForwardJac {
        Vec x;
        Mat J_tau;  // d forward / d coords
        Mat J_xi;   // d forward / d base
    };
    ForwardJac forward_jac(const Vec& coords, bool with_xi = false) const;

    // Newton inversion; throws SolverError on divergence.
    Vec inverse(const Vec& x, const Vec* seed = nullptr) const;

    // Rows of dphi/dx at x (inverse of the forward Jacobian at phi(x)).
    Mat grad_rows(const Vec& x, Vec* coords_out = nullptr, const Vec* seed = nullptr) const;

    // Shrink-by-halves box sizing: axis probes inside sys_box, then corner
    // condition-number checks.
    void size_box(const Box& sys_box, double cond_cap = 1e6, double probe_cap = 6.0);

    const IntegratorSettings& settings() const { return settings_; }
    const NewtonSettings& newton() const { return newton_; }

    // Constant-frame fast path matrices (valid when constant_frame()).
    const Mat& V() const { return V_; }
    const Mat& Vinv() const { return Vinv_; }

private:
    int n_;
    Vec base_;
    std::vector<FieldPtr> frame_;
    Vec sigma_;
    IntegratorSettings settings_;
    NewtonSettings newton_;
    bool const_frame_ = false;
    Mat V_, Vinv_;
};

struct CanonicalReport {
    double worst_residual = 0.0;
    Vec witness_state;
    int witness_i = -1, witness_k = -1;
    bool pass(double tol) const { return worst_residual <= tol; }
};

// Definition check: <grad phi_i(x), w> ~ 0 for every Delta_k basis vector w,
// k = 0..n-2, i = 1..n-k-1, at states sampled inside the chart box.
CanonicalReport verify_canonical(const CanonicalChart& chart, const System& sys, int n_samples,
                                 std::mt19937_64& rng);

struct TriangularizeReport {
    double max_offdiag = 0.0;   // |d row_i / d zeta_j| for j > i+1
    double min_gn = 0.0;        // min |<grad phi_n, b>|
    std::vector<Vec> grid;      // coords used
    std::vector<Vec> drift_rows;  // per grid point: <grad phi_i, a>, i=1..n
    std::vector<double> gn;     // per grid point
};

TriangularizeReport triangularize(const CanonicalChart& chart, const System& sys,
                                  const std::vector<Vec>& grid);

// Max level-nesting residual of the chart frame against the bracket basis at
// the chart base (test helper; requires a regular base point).
double frame_nesting_residual(const CanonicalChart& chart, const System& sys);

// Moving chart family phi(t, x) = chart at base z(t); continuous in t, with
// d phi/d t computed from the base-motion variational formula.
class ChartFamily {
public:
    ChartFamily(CurvePtr z, std::vector<FieldPtr> frame, IntegratorSettings s = {},
                NewtonSettings ns = {});

    int dim() const { return n_; }
    const Curve& base_curve() const { return *z_; }
    bool constant_frame() const { return const_frame_; }
    const std::vector<FieldPtr>& frame() const { return frame_; }

    struct Eval {
        Vec coords;
        Mat grads;    // d phi / d x
        Vec dphi_dt;  // d phi / d t at fixed x
        Mat J_tau;    // inverse of grads
    };
    // seed_io: in/out Newton seed for the generic path (may be null).
    Eval eval(double t, const Vec& x, Vec* seed_io = nullptr, bool need_dt = true) const;

    CanonicalChart chart_at(double t) const;

private:
    int n_;
    CurvePtr z_;
    std::vector<FieldPtr> frame_;
    IntegratorSettings settings_;
    NewtonSettings newton_;
    bool const_frame_ = false;
    Mat V_, Vinv_;
};

// Orthonormalized constant frame from the bracket basis at a regular point:
// v_n along b(x*), v_{n-1} along ad_a b(x*), ..., Gram-Schmidt level by level.
std::vector<FieldPtr> constant_bracket_frame(const System& sys, const Vec& x_star);

// The system frame if present, else the constant bracket frame at x_star.
std::vector<FieldPtr> frame_for(const System& sys, const Vec& x_star);

}  // namespace gtf
