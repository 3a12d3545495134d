#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gtf/dual.hpp"
#include "gtf/errors.hpp"

namespace gtf {

// A memoized scalar function of one variable, pluggable into expressions as an
// opaque call (used by the registry for functions with no closed form).
// Implementations must provide value and first/second derivative.
class Scalar1D {
public:
    virtual ~Scalar1D() = default;
    virtual double value(double x) const = 0;
    virtual double deriv(double x) const = 0;
    virtual double deriv2(double x) const = 0;

    double operator()(double x) const { return value(x); }
    D1 operator()(const D1& x) const { return {value(x.v), x.d * deriv(x.v)}; }
    D2 operator()(const D2& x) const {
        D1 v{value(x.v.v), x.v.d * deriv(x.v.v)};
        D1 d = x.d * D1{deriv(x.v.v), x.v.d * deriv2(x.v.v)};
        return {v, d};
    }
};

enum class Cmp { Le, Lt, Ge, Gt, Eq, Ne };

enum class Builtin { Sin, Cos, Tan, Exp, Ln, Tanh, Abs, Min, Max };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct PiecewiseBranch {
    ExprPtr lhs;
    Cmp cmp;
    ExprPtr rhs;
    ExprPtr value;
};

struct Expr {
    enum class Op {
        Const,     // cval
        Var,       // var (index into environment)
        Add, Sub, Mul, Div,   // kids[0], kids[1]
        Neg,       // kids[0]
        PowInt,    // kids[0] ^ ipow
        Call,      // builtin(kids...)
        Opaque,    // opaque(kids[0])
        Piecewise  // branches..., otherwise
    };

    Op op = Op::Const;
    double cval = 0.0;
    int var = -1;
    std::string var_name;
    int ipow = 0;
    Builtin builtin = Builtin::Sin;
    std::shared_ptr<const Scalar1D> opaque;
    std::string opaque_name;
    std::vector<ExprPtr> kids;
    std::vector<PiecewiseBranch> branches;
    ExprPtr otherwise;
};

// Variable and opaque-function bindings available while parsing.
struct SymbolTable {
    std::vector<std::string> vars;  // index in this vector == environment index
    std::map<std::string, std::shared_ptr<const Scalar1D>> opaque_fns;

    int var_index(const std::string& name) const {
        for (size_t i = 0; i < vars.size(); ++i)
            if (vars[i] == name) return static_cast<int>(i);
        return -1;
    }
};

// Recursive-descent parser. Precedence: ^ > unary - > *,/ > +,-.
// Throws ParseError with line/column on malformed input.
ExprPtr parse_expr(const std::string& src, const SymbolTable& syms);

// Canonical text form; parse_expr(pretty_print(e)) reproduces e.
std::string pretty_print(const Expr& e);

// Set when eval_dual lands exactly on a piecewise guard surface or an abs/min/max kink.
struct EvalFlags {
    bool on_boundary = false;
};

template <class T>
T eval(const Expr& e, std::span<const T> env, EvalFlags* flags = nullptr);

// Convenience wrappers.
double eval(const Expr& e, std::span<const double> env);

struct DualResult {
    double value;
    double deriv;
    bool on_boundary;
};

// Value and directional derivative of e at env along direction dir.
DualResult eval_dual(const Expr& e, std::span<const double> env, std::span<const double> dir);

// True if the expression references no variables (constant fields get exact flows).
bool is_constant_expr(const Expr& e);

// All variable indices referenced by e.
std::vector<int> referenced_vars(const Expr& e);

extern template double eval<double>(const Expr&, std::span<const double>, EvalFlags*);
extern template D1 eval<D1>(const Expr&, std::span<const D1>, EvalFlags*);
extern template D2 eval<D2>(const Expr&, std::span<const D2>, EvalFlags*);

}  // namespace gtf
