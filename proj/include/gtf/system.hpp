#pragma once

#include <map>
#include <optional>
#include <string>

#include "gtf/field.hpp"

namespace gtf {

// Control-affine system  xdot = a(x) + beta(x,u) b(x)  with scalar control.
struct System {
    std::string name;
    int n = 0;
    FieldPtr a;
    FieldPtr b;
    std::shared_ptr<const ScalarGain> beta;
    Box box;
    std::vector<std::string> state_names;

    // Optional global nesting frame v_1..v_n with Delta_i = span{v_{n-i}..v_n}.
    std::vector<FieldPtr> frame;

    // Optional explicit triangular right-hand sides f_1..f_n (f_n may use `u`).
    std::vector<ExprPtr> triangular;

    // Auxiliary named fields exposed by registry entries (for tests/tools).
    std::map<std::string, FieldPtr> named_fields;

    Vec rhs(const Vec& x, double u) const {
        return a->value(x) + (*beta)(x, u) * b->value(x);
    }

    // Time-reversed system (negated drift and gain); same distributions.
    System reversed() const;
};

// Parse the documented [system]/[domain]/[triangular]/[frame] config format.
System parse_system_config(const std::string& text);

// Registry lookup or config-file load: `source` is a registry name
// ("integrator2", "integrator3", "ex9-singular", "example31-strip") or a path.
System load_system(const std::string& source);

bool is_registry_name(const std::string& name);
System make_registry_system(const std::string& name);

}  // namespace gtf
