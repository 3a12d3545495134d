#pragma once

#include <functional>
#include <optional>

#include "gtf/field.hpp"

namespace gtf {

struct IntegratorSettings {
    double rtol = 1e-10;
    double atol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    long max_steps = 2000000;
    enum class Method { DP45, RK4Fixed };
    Method method = Method::DP45;
    double fixed_step = 1e-3;  // RK4Fixed only

    IntegratorSettings() = default;

    void validate() const {
        if (!(rtol > 0.0) || !(atol > 0.0)) throw Error("integrator tolerances must be positive");
    }
};

using Rhs = std::function<void(double, const Vec&, Vec&)>;

// Piecewise cubic Hermite record of an integration run; usable for event
// bisection and for evaluating the trajectory at arbitrary interior times.
class DenseOutput {
public:
    struct Node {
        double t;
        Vec x;
        Vec f;
    };

    void clear() { nodes_.clear(); }
    void push(double t, const Vec& x, const Vec& f) { nodes_.push_back({t, x, f}); }
    bool empty() const { return nodes_.empty(); }
    size_t size() const { return nodes_.size(); }
    const Node& node(size_t i) const { return nodes_[i]; }
    double t_front() const { return nodes_.front().t; }
    double t_back() const { return nodes_.back().t; }

    Vec eval(double t) const;
    Vec deriv(double t) const;

private:
    std::pair<const Node*, const Node*> bracket(double t) const;
    std::vector<Node> nodes_;  // ordered in integration direction
};

struct IntegrateResult {
    Vec x;
    double t = 0.0;
    bool stopped_at_event = false;
    long steps = 0;
};

// Event: integration stops when g(t, x) first becomes <= 0 (g must be
// positive at the initial point); the crossing is bisected to 1e-10 in time.
using EventFn = std::function<double(double, const Vec&)>;

IntegrateResult integrate(const Rhs& rhs, double t0, double t1, const Vec& x0,
                          const IntegratorSettings& s, DenseOutput* dense = nullptr,
                          const EventFn* event = nullptr);

// --- Flows of vector fields -------------------------------------------------

struct FlowSegment {
    FieldPtr field;
    double duration;
};
using FlowSequence = std::vector<FlowSegment>;

// Endpoint of the integral curve of v from x0 after time t. Throws BoxExit
// (with the exit time) if the trajectory leaves the field's validity box.
Vec flow(const VectorField& v, const Vec& x0, double t, const IntegratorSettings& s,
         DenseOutput* dense = nullptr);

// Segments applied first-to-last: Phi_{v_N}^{t_N} o ... o Phi_{v_1}^{t_1}.
Vec flow_sequence(const FlowSequence& seq, const Vec& x0, const IntegratorSettings& s);

// Inverse composition: last segment undone first.
Vec inverse_flow_sequence(const FlowSequence& seq, const Vec& x, const IntegratorSettings& s);

// Tangent vector transported by the flow sequence (variational equation
// integrated jointly with the base trajectory).
Vec pushforward(const FlowSequence& seq, const Vec& x, const Vec& xi, const IntegratorSettings& s);

// Endpoint plus full pushforward matrix of a single flow.
std::pair<Vec, Mat> flow_with_jacobian(const VectorField& v, const Vec& x0, double t,
                                       const IntegratorSettings& s);

// Endpoint plus pushforward matrix of a sequence.
std::pair<Vec, Mat> pushforward_matrix(const FlowSequence& seq, const Vec& x,
                                       const IntegratorSettings& s);

// Writes "t,x1,...,xn" rows with 17 significant digits.
void write_trajectory_csv(const std::string& path, const DenseOutput& dense, int n_samples);

}  // namespace gtf
