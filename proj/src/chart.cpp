#include "gtf/chart.hpp"

#include "gtf/lie.hpp"

namespace gtf {

CanonicalChart::CanonicalChart(Vec base, std::vector<FieldPtr> frame, IntegratorSettings s,
                               NewtonSettings ns)
    : n_(static_cast<int>(base.size())),
      base_(std::move(base)),
      frame_(std::move(frame)),
      settings_(s),
      newton_(ns) {
    if (static_cast<int>(frame_.size()) != n_) throw Error("chart frame must have n fields");
    const_frame_ = true;
    for (const auto& f : frame_) {
        if (f->dim() != n_) throw Error("chart frame dimension mismatch");
        if (!f->is_constant()) const_frame_ = false;
    }
    sigma_ = Vec::Constant(n_, 1.0);
    if (const_frame_) {
        V_.resize(n_, n_);
        for (int j = 0; j < n_; ++j) V_.col(j) = frame_[static_cast<size_t>(j)]->value(base_);
        Eigen::FullPivLU<Mat> lu(V_);
        if (!lu.isInvertible()) throw Error("chart frame is singular");
        Vinv_ = lu.inverse();
    }
}

Vec CanonicalChart::forward(const Vec& coords) const {
    if (coords.size() != n_) throw Error("chart forward: coordinate dimension mismatch");
    if (const_frame_) return base_ + V_ * coords;
    Vec x = base_;
    for (int i = 0; i < n_; ++i) x = flow(*frame_[static_cast<size_t>(i)], x, coords[i], settings_);
    return x;
}

CanonicalChart::ForwardJac CanonicalChart::forward_jac(const Vec& coords, bool with_xi) const {
    ForwardJac out;
    if (const_frame_) {
        out.x = base_ + V_ * coords;
        out.J_tau = V_;
        if (with_xi) out.J_xi = Mat::Identity(n_, n_);
        return out;
    }
    Vec x = base_;
    Mat P = Mat::Identity(n_, n_);  // pushforward of the whole prefix
    Mat cols = Mat::Zero(n_, n_);
    for (int i = 0; i < n_; ++i) {
        auto [y, M] = flow_with_jacobian(*frame_[static_cast<size_t>(i)], x, coords[i], settings_);
        for (int j = 0; j < i; ++j) cols.col(j) = M * cols.col(j);
        cols.col(i) = frame_[static_cast<size_t>(i)]->value(y);
        P = M * P;
        x = y;
    }
    out.x = x;
    out.J_tau = cols;
    if (with_xi) out.J_xi = P;
    return out;
}

Vec CanonicalChart::inverse(const Vec& x, const Vec* seed) const {
    if (const_frame_) return Vinv_ * (x - base_);
    Vec tau = seed ? *seed : Vec::Zero(n_);
    double scale = std::max(1.0, x.norm());
    for (int it = 0; it < newton_.max_iter; ++it) {
        ForwardJac fj = forward_jac(tau);
        Vec r = fj.x - x;
        if (r.norm() <= newton_.tol * scale) return tau;
        Vec step = fj.J_tau.partialPivLu().solve(r);
        double damp = 1.0;
        Vec cand = tau - step;
        double r0 = r.norm();
        for (int h = 0; h < 25; ++h) {
            cand = tau - damp * step;
            if ((forward(cand) - x).norm() < r0) break;
            damp *= 0.5;
            if (h == 24) throw SolverError("chart inverse: Newton stalled (point outside chart?)");
        }
        tau = cand;
    }
    ForwardJac fj = forward_jac(tau);
    if ((fj.x - x).norm() <= 100 * newton_.tol * scale) return tau;
    throw SolverError("chart inverse: Newton did not converge");
}

Mat CanonicalChart::grad_rows(const Vec& x, Vec* coords_out, const Vec* seed) const {
    if (const_frame_) {
        if (coords_out) *coords_out = Vinv_ * (x - base_);
        return Vinv_;
    }
    Vec tau = inverse(x, seed);
    if (coords_out) *coords_out = tau;
    ForwardJac fj = forward_jac(tau);
    return fj.J_tau.partialPivLu().inverse();
}

void CanonicalChart::size_box(const Box& sys_box, double cond_cap, double probe_cap) {
    // Per-axis probe: largest |tau_k| whose one-axis flow stays inside sys_box.
    for (int k = 0; k < n_; ++k) {
        double lo = 0.0, hi = probe_cap;
        auto ok = [&](double s) {
            for (double sign : {1.0, -1.0}) {
                Vec c = Vec::Zero(n_);
                c[k] = sign * s;
                try {
                    Vec x = forward(c);
                    if (!sys_box.contains(x)) return false;
                } catch (const Error&) {
                    return false;
                }
            }
            return true;
        };
        if (ok(hi)) {
            lo = hi;
        } else {
            for (int it = 0; it < 40 && hi - lo > 1e-3 * probe_cap; ++it) {
                double mid = 0.5 * (lo + hi);
                (ok(mid) ? lo : hi) = mid;
            }
        }
        sigma_[k] = 0.5 * std::max(lo, 1e-6);
    }
    // Corner condition check; shrink all sigma by halves.
    for (int round = 0; round < 24; ++round) {
        bool good = true;
        for (int mask = 0; mask < (1 << n_) && good; ++mask) {
            Vec c(n_);
            for (int k = 0; k < n_; ++k) c[k] = ((mask >> k) & 1) ? sigma_[k] : -sigma_[k];
            try {
                ForwardJac fj = forward_jac(c);
                Eigen::JacobiSVD<Mat> svd(fj.J_tau);
                double cond = svd.singularValues().maxCoeff() /
                              std::max(svd.singularValues().minCoeff(), 1e-300);
                if (cond >= cond_cap || !sys_box.contains(fj.x)) good = false;
            } catch (const Error&) {
                good = false;
            }
        }
        if (good) return;
        sigma_ *= 0.5;
    }
    throw SolverError("chart box sizing failed to satisfy the condition cap");
}

CanonicalReport verify_canonical(const CanonicalChart& chart, const System& sys, int n_samples,
                                 std::mt19937_64& rng) {
    CanonicalReport rep;
    const int n = chart.dim();
    std::uniform_real_distribution<double> unit(-0.5, 0.5);
    for (int s = 0; s < n_samples; ++s) {
        Vec coords(n);
        for (int k = 0; k < n; ++k) coords[k] = unit(rng) * chart.coord_box()[k];
        auto fj = chart.forward_jac(coords);
        Mat grads = fj.J_tau.partialPivLu().inverse();
        for (int k = 0; k <= n - 2; ++k) {
            DistributionSample ds = delta_basis(sys, fj.x, k);
            if (!ds.regular) continue;
            for (int i = 1; i <= n - k - 1; ++i) {
                for (int c = 0; c <= k; ++c) {
                    Vec w = ds.basis.col(c);
                    double r = std::abs(grads.row(i - 1).dot(w)) /
                               (grads.row(i - 1).norm() * std::max(w.norm(), 1e-300));
                    if (r > rep.worst_residual) {
                        rep.worst_residual = r;
                        rep.witness_state = fj.x;
                        rep.witness_i = i;
                        rep.witness_k = k;
                    }
                }
            }
        }
    }
    return rep;
}

TriangularizeReport triangularize(const CanonicalChart& chart, const System& sys,
                                  const std::vector<Vec>& grid) {
    TriangularizeReport rep;
    rep.min_gn = std::numeric_limits<double>::infinity();
    const int n = chart.dim();
    const double h = 1e-4;

    auto rows_at = [&](const Vec& coords) {
        auto fj = chart.forward_jac(coords);
        Mat grads = fj.J_tau.partialPivLu().inverse();
        Vec a = sys.a->value(fj.x);
        Vec rows = grads * a;
        double gn = grads.row(n - 1).dot(sys.b->value(fj.x));
        return std::make_pair(rows, gn);
    };

    for (const auto& coords : grid) {
        auto [rows, gn] = rows_at(coords);
        rep.grid.push_back(coords);
        rep.drift_rows.push_back(rows);
        rep.gn.push_back(gn);
        rep.min_gn = std::min(rep.min_gn, std::abs(gn));
        // Triangularity: rows i must not depend on coords j for j > i+1.
        for (int j = 0; j < n; ++j) {
            Vec cp = coords, cm = coords;
            cp[j] += h;
            cm[j] -= h;
            Vec dp = rows_at(cp).first, dm = rows_at(cm).first;
            for (int i = 0; i < n; ++i) {
                // Row i+1 may depend on zeta_1..zeta_{i+2}; flag beyond that.
                if (j > i + 1) {
                    double d = std::abs(dp[i] - dm[i]) / (2 * h);
                    rep.max_offdiag = std::max(rep.max_offdiag, d);
                }
            }
        }
    }
    return rep;
}

double frame_nesting_residual(const CanonicalChart& chart, const System& sys) {
    const int n = chart.dim();
    double worst = 0.0;
    for (int k = 0; k <= n - 1; ++k) {
        DistributionSample ds = delta_basis(sys, chart.base(), k);
        if (!ds.regular) throw SolverError("frame nesting check needs a regular base point");
        Mat F(n, k + 1);
        for (int j = 0; j <= k; ++j)
            F.col(j) = chart.frame()[static_cast<size_t>(n - 1 - k + j)]->value(chart.base());
        Eigen::JacobiSVD<Mat> svd(F, Eigen::ComputeThinU);
        Mat U = svd.matrixU();
        for (int c = 0; c <= k; ++c) {
            Vec w = ds.basis.col(c);
            Vec resid = w - U * (U.transpose() * w);
            worst = std::max(worst, resid.norm() / std::max(w.norm(), 1e-300));
        }
    }
    return worst;
}

ChartFamily::ChartFamily(CurvePtr z, std::vector<FieldPtr> frame, IntegratorSettings s,
                         NewtonSettings ns)
    : n_(z->dim()), z_(std::move(z)), frame_(std::move(frame)), settings_(s), newton_(ns) {
    if (static_cast<int>(frame_.size()) != n_) throw Error("chart family frame must have n fields");
    const_frame_ = true;
    for (const auto& f : frame_)
        if (!f->is_constant()) const_frame_ = false;
    if (const_frame_) {
        V_.resize(n_, n_);
        Vec any = z_->eval(z_->t_begin());
        for (int j = 0; j < n_; ++j) V_.col(j) = frame_[static_cast<size_t>(j)]->value(any);
        Eigen::FullPivLU<Mat> lu(V_);
        if (!lu.isInvertible()) throw Error("chart family frame is singular");
        Vinv_ = lu.inverse();
    }
}

CanonicalChart ChartFamily::chart_at(double t) const {
    return CanonicalChart(z_->eval(t), frame_, settings_, newton_);
}

ChartFamily::Eval ChartFamily::eval(double t, const Vec& x, Vec* seed_io, bool need_dt) const {
    Eval out;
    if (const_frame_) {
        out.coords = Vinv_ * (x - z_->eval(t));
        out.grads = Vinv_;
        out.J_tau = V_;
        if (need_dt) out.dphi_dt = -(Vinv_ * z_->deriv(t));
        return out;
    }
    CanonicalChart chart(z_->eval(t), frame_, settings_, newton_);
    Vec tau = chart.inverse(x, seed_io);
    if (seed_io) *seed_io = tau;
    auto fj = chart.forward_jac(tau, /*with_xi=*/need_dt);
    out.coords = tau;
    out.J_tau = fj.J_tau;
    out.grads = fj.J_tau.partialPivLu().inverse();
    if (need_dt) out.dphi_dt = -(out.grads * (fj.J_xi * z_->deriv(t)));
    return out;
}

std::vector<FieldPtr> constant_bracket_frame(const System& sys, const Vec& x_star) {
    const int n = sys.n;
    DistributionSample ds = delta_basis(sys, x_star, n - 1);
    if (!ds.regular)
        throw SolverError("constant_bracket_frame: base point is not regular");
    // Gram-Schmidt in bracket order: column j spans the Delta_j increment.
    Mat Q(n, n);
    for (int j = 0; j < n; ++j) {
        Vec v = ds.basis.col(j);
        for (int i = 0; i < j; ++i) v -= Q.col(i).dot(v) * Q.col(i);
        Q.col(j) = v / v.norm();
    }
    std::vector<FieldPtr> frame(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j)
        frame[static_cast<size_t>(n - 1 - j)] = std::make_shared<ConstantField>(Q.col(j), sys.box);
    return frame;
}

std::vector<FieldPtr> frame_for(const System& sys, const Vec& x_star) {
    if (!sys.frame.empty()) return sys.frame;
    return constant_bracket_frame(sys, x_star);
}

}  // namespace gtf
