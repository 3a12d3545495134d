#pragma once

#include <functional>
#include <random>

#include "gtf/ode.hpp"
#include "gtf/system.hpp"

namespace gtf {

// [v,w](x) = (dw/dx) v - (dv/dx) w.
Vec lie_bracket(const VectorField& v, const VectorField& w, const Vec& x);

// ad_a^i b as a vector evaluated at x (i = 0 gives b(x)).
Vec ad_pow(const System& sys, int i, const Vec& x);

// Bracket-generated candidate basis of Delta_k at x.
struct DistributionSample {
    Vec x;
    int k = 0;
    Mat basis;                 // n x (k+1): b, [a,b], ..., ad_a^k b
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    double involutivity_residual = 0.0;
    bool regular = false;      // sigma_min > threshold * sigma_max
};

// Relative rank threshold: flows and duals carry ~1e-9 noise, margin 100x.
constexpr double kRankThreshold = 1e-7;

DistributionSample delta_basis(const System& sys, const Vec& x, int k,
                               bool with_involutivity = false);

struct ConditionEntry {
    std::string condition;
    bool pass = false;
    double worst_residual = 0.0;
    Vec witness;
    std::string note;
};

struct ConditionReport {
    std::vector<ConditionEntry> entries;
    std::vector<Vec> singular_witnesses;  // bracket-basis degeneracies (informational)
    int samples_used = 0;

    bool all_pass() const {
        for (const auto& e : entries)
            if (!e.pass) return false;
        return true;
    }
    std::string to_json() const;
};

// |b(x)| > 0 at all samples plus reach evidence for beta(x, .) over u_grid:
// values below -reach and above +reach must be attained (evidence only).
ConditionEntry check_condition_A(const System& sys, const std::vector<Vec>& samples,
                                 const std::vector<double>& u_grid, double reach);

// Max over sample points and field pairs of the component of [f_i,f_j]
// orthogonal to the frame span, normalized by the frame scale.
ConditionEntry check_involutivity(const std::vector<FieldPtr>& frame,
                                  const std::vector<Vec>& samples);

struct OrbitSampleResult {
    std::vector<Vec> generators;
    int discarded = 0;  // flow left the box
};

// Orbit-generator samples (Phi_v^T)_* a(Phi_v^{-T}(x0)) - a(x0) over random
// sequences of fields valued in Delta_{k-1}.
OrbitSampleResult orbit_generators(const System& sys, const Vec& x0, int k, int budget,
                                   std::mt19937_64& rng, const IntegratorSettings& s);

// Largest residual of the given generators against span(basis).
double span_residual(const Mat& basis, const std::vector<Vec>& gens);

// Draws samples until one is regular at every level; best margin wins.
Vec find_regular_point(const System& sys, const std::function<Vec()>& sampler, int max_draws);

// Assembles the (A)/(B1)/(B2) report on sampled points.
ConditionReport check_conditions(const System& sys, int n_samples, std::mt19937_64& rng,
                                 const IntegratorSettings& s, int orbit_budget = 24);

}  // namespace gtf
