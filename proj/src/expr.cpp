#include "gtf/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace gtf {

namespace {

struct Token {
    enum class Kind { Number, Ident, Op, LParen, RParen, Comma, Colon, Cmp, End };
    Kind kind;
    std::string text;
    double num = 0.0;
    int line = 1, col = 1;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }

    Token next() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) bump();
        tok_.line = line_;
        tok_.col = col_;
        if (pos_ >= src_.size()) {
            tok_.kind = Token::Kind::End;
            tok_.text = "<end>";
            return;
        }
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && pos_ + 1 < src_.size() &&
                                                            std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
            size_t start = pos_;
            while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) bump();
            if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
                bump();
                if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) bump();
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) bump();
            }
            tok_.kind = Token::Kind::Number;
            tok_.text = src_.substr(start, pos_ - start);
            tok_.num = std::strtod(tok_.text.c_str(), nullptr);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) bump();
            tok_.kind = Token::Kind::Ident;
            tok_.text = src_.substr(start, pos_ - start);
            return;
        }
        if (c == '<' || c == '>' || c == '=' || c == '!') {
            size_t start = pos_;
            bump();
            if (pos_ < src_.size() && src_[pos_] == '=') bump();
            tok_.kind = Token::Kind::Cmp;
            tok_.text = src_.substr(start, pos_ - start);
            if (tok_.text == "=") {
                throw ParseError("expected comparison operator, got `=`", tok_.line, tok_.col);
            }
            return;
        }
        switch (c) {
            case '(': tok_.kind = Token::Kind::LParen; break;
            case ')': tok_.kind = Token::Kind::RParen; break;
            case ',': tok_.kind = Token::Kind::Comma; break;
            case ':': tok_.kind = Token::Kind::Colon; break;
            case '+': case '-': case '*': case '/': case '^': tok_.kind = Token::Kind::Op; break;
            default:
                throw ParseError(std::string("unexpected character `") + c + "`", line_, col_);
        }
        tok_.text = std::string(1, c);
        bump();
    }

    void bump() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    const std::string& src_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token tok_;
};

class Parser {
public:
    Parser(const std::string& src, const SymbolTable& syms) : lex_(src), syms_(syms) {}

    ExprPtr parse() {
        ExprPtr e = parse_add();
        expect_end();
        return e;
    }

private:
    [[noreturn]] void fail(const Token& t, const std::string& msg) {
        throw ParseError(msg + ", got `" + t.text + "`", t.line, t.col);
    }

    void expect_end() {
        if (lex_.peek().kind != Token::Kind::End) fail(lex_.peek(), "expected end of expression");
    }

    Token expect(Token::Kind k, const char* what) {
        if (lex_.peek().kind != k) fail(lex_.peek(), std::string("expected ") + what);
        return lex_.next();
    }

    ExprPtr parse_add() {
        ExprPtr e = parse_mul();
        while (lex_.peek().kind == Token::Kind::Op &&
               (lex_.peek().text == "+" || lex_.peek().text == "-")) {
            std::string op = lex_.next().text;
            ExprPtr rhs = parse_mul();
            auto node = std::make_shared<Expr>();
            node->op = op == "+" ? Expr::Op::Add : Expr::Op::Sub;
            node->kids = {e, rhs};
            e = node;
        }
        return e;
    }

    ExprPtr parse_mul() {
        ExprPtr e = parse_unary();
        while (lex_.peek().kind == Token::Kind::Op &&
               (lex_.peek().text == "*" || lex_.peek().text == "/")) {
            std::string op = lex_.next().text;
            ExprPtr rhs = parse_unary();
            auto node = std::make_shared<Expr>();
            node->op = op == "*" ? Expr::Op::Mul : Expr::Op::Div;
            node->kids = {e, rhs};
            e = node;
        }
        return e;
    }

    ExprPtr parse_unary() {
        if (lex_.peek().kind == Token::Kind::Op && lex_.peek().text == "-") {
            lex_.next();
            ExprPtr inner = parse_unary();
            auto node = std::make_shared<Expr>();
            node->op = Expr::Op::Neg;
            node->kids = {inner};
            return node;
        }
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_atom();
        if (lex_.peek().kind == Token::Kind::Op && lex_.peek().text == "^") {
            lex_.next();
            int expo = parse_int_exponent();
            auto node = std::make_shared<Expr>();
            node->op = Expr::Op::PowInt;
            node->ipow = expo;
            node->kids = {base};
            return node;
        }
        return base;
    }

    int parse_int_exponent() {
        bool paren = false;
        if (lex_.peek().kind == Token::Kind::LParen) {
            paren = true;
            lex_.next();
        }
        int sign = 1;
        if (lex_.peek().kind == Token::Kind::Op && lex_.peek().text == "-") {
            sign = -1;
            lex_.next();
        }
        Token t = expect(Token::Kind::Number, "integer exponent");
        double v = t.num;
        if (v != std::floor(v) || std::abs(v) > 64)
            throw ParseError("exponent must be a small integer", t.line, t.col);
        if (paren) expect(Token::Kind::RParen, "`)`");
        return sign * static_cast<int>(v);
    }

    ExprPtr parse_atom() {
        const Token& t = lex_.peek();
        if (t.kind == Token::Kind::Number) {
            Token n = lex_.next();
            auto node = std::make_shared<Expr>();
            node->op = Expr::Op::Const;
            node->cval = n.num;
            return node;
        }
        if (t.kind == Token::Kind::LParen) {
            lex_.next();
            ExprPtr e = parse_add();
            expect(Token::Kind::RParen, "`)`");
            return e;
        }
        if (t.kind == Token::Kind::Ident) {
            Token id = lex_.next();
            if (id.text == "piecewise") return parse_piecewise(id);
            if (lex_.peek().kind == Token::Kind::LParen) return parse_call(id);
            int idx = syms_.var_index(id.text);
            if (idx < 0)
                throw ParseError("unknown identifier `" + id.text + "`", id.line, id.col);
            auto node = std::make_shared<Expr>();
            node->op = Expr::Op::Var;
            node->var = idx;
            node->var_name = id.text;
            return node;
        }
        fail(t, "expected expression");
    }

    ExprPtr parse_call(const Token& id) {
        static const std::map<std::string, std::pair<Builtin, int>> table = {
            {"sin", {Builtin::Sin, 1}},   {"cos", {Builtin::Cos, 1}}, {"tan", {Builtin::Tan, 1}},
            {"exp", {Builtin::Exp, 1}},   {"ln", {Builtin::Ln, 1}},   {"tanh", {Builtin::Tanh, 1}},
            {"abs", {Builtin::Abs, 1}},   {"min", {Builtin::Min, 2}}, {"max", {Builtin::Max, 2}},
        };
        expect(Token::Kind::LParen, "`(`");
        std::vector<ExprPtr> args;
        if (lex_.peek().kind != Token::Kind::RParen) {
            args.push_back(parse_add());
            while (lex_.peek().kind == Token::Kind::Comma) {
                lex_.next();
                args.push_back(parse_add());
            }
        }
        expect(Token::Kind::RParen, "`)`");

        auto it = table.find(id.text);
        if (it != table.end()) {
            if (static_cast<int>(args.size()) != it->second.second)
                throw ParseError("`" + id.text + "` expects " + std::to_string(it->second.second) +
                                     " argument(s)",
                                 id.line, id.col);
            auto node = std::make_shared<Expr>();
            node->op = Expr::Op::Call;
            node->builtin = it->second.first;
            node->kids = std::move(args);
            return node;
        }
        auto op = syms_.opaque_fns.find(id.text);
        if (op != syms_.opaque_fns.end()) {
            if (args.size() != 1)
                throw ParseError("`" + id.text + "` expects 1 argument", id.line, id.col);
            auto node = std::make_shared<Expr>();
            node->op = Expr::Op::Opaque;
            node->opaque = op->second;
            node->opaque_name = id.text;
            node->kids = std::move(args);
            return node;
        }
        throw ParseError("unknown function `" + id.text + "`", id.line, id.col);
    }

    // piecewise(cond : expr, cond : expr, ..., else : expr)
    ExprPtr parse_piecewise(const Token& id) {
        expect(Token::Kind::LParen, "`(`");
        auto node = std::make_shared<Expr>();
        node->op = Expr::Op::Piecewise;
        bool saw_else = false;
        while (true) {
            if (lex_.peek().kind == Token::Kind::Ident && lex_.peek().text == "else") {
                lex_.next();
                expect(Token::Kind::Colon, "`:`");
                node->otherwise = parse_add();
                saw_else = true;
                break;
            }
            PiecewiseBranch br;
            br.lhs = parse_add();
            Token c = expect(Token::Kind::Cmp, "comparison");
            if (c.text == "<=") br.cmp = Cmp::Le;
            else if (c.text == "<") br.cmp = Cmp::Lt;
            else if (c.text == ">=") br.cmp = Cmp::Ge;
            else if (c.text == ">") br.cmp = Cmp::Gt;
            else if (c.text == "==") br.cmp = Cmp::Eq;
            else if (c.text == "!=") br.cmp = Cmp::Ne;
            else fail(c, "expected comparison");
            br.rhs = parse_add();
            expect(Token::Kind::Colon, "`:`");
            br.value = parse_add();
            node->branches.push_back(std::move(br));
            if (lex_.peek().kind == Token::Kind::Comma) {
                lex_.next();
                continue;
            }
            break;
        }
        if (!saw_else)
            throw ParseError("piecewise requires a final `else :` branch", id.line, id.col);
        expect(Token::Kind::RParen, "`)`");
        return node;
    }

    Lexer lex_;
    const SymbolTable& syms_;
};

const char* cmp_text(Cmp c) {
    switch (c) {
        case Cmp::Le: return "<=";
        case Cmp::Lt: return "<";
        case Cmp::Ge: return ">=";
        case Cmp::Gt: return ">";
        case Cmp::Eq: return "==";
        case Cmp::Ne: return "!=";
    }
    return "?";
}

const char* builtin_name(Builtin b) {
    switch (b) {
        case Builtin::Sin: return "sin";
        case Builtin::Cos: return "cos";
        case Builtin::Tan: return "tan";
        case Builtin::Exp: return "exp";
        case Builtin::Ln: return "ln";
        case Builtin::Tanh: return "tanh";
        case Builtin::Abs: return "abs";
        case Builtin::Min: return "min";
        case Builtin::Max: return "max";
    }
    return "?";
}

void print_num(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

}  // namespace

ExprPtr parse_expr(const std::string& src, const SymbolTable& syms) {
    if (src.find_first_not_of(" \t\r\n") == std::string::npos)
        throw ParseError("empty expression", 1, 1);
    Parser p(src, syms);
    return p.parse();
}

namespace {

// Pretty printer emits fully parenthesized composite operands, so the
// round-trip through the parser is structure-preserving.
void pp(std::ostream& os, const Expr& e) {
    auto paren = [&](const Expr& k) {
        bool atom = k.op == Expr::Op::Const || k.op == Expr::Op::Var || k.op == Expr::Op::Call ||
                    k.op == Expr::Op::Opaque || k.op == Expr::Op::Piecewise;
        if (atom && k.op == Expr::Op::Const && k.cval < 0) atom = false;
        if (!atom) os << "(";
        pp(os, k);
        if (!atom) os << ")";
    };
    switch (e.op) {
        case Expr::Op::Const:
            print_num(os, e.cval);
            break;
        case Expr::Op::Var:
            os << e.var_name;
            break;
        case Expr::Op::Add: paren(*e.kids[0]); os << " + "; paren(*e.kids[1]); break;
        case Expr::Op::Sub: paren(*e.kids[0]); os << " - "; paren(*e.kids[1]); break;
        case Expr::Op::Mul: paren(*e.kids[0]); os << " * "; paren(*e.kids[1]); break;
        case Expr::Op::Div: paren(*e.kids[0]); os << " / "; paren(*e.kids[1]); break;
        case Expr::Op::Neg: os << "-"; paren(*e.kids[0]); break;
        case Expr::Op::PowInt:
            paren(*e.kids[0]);
            os << "^";
            if (e.ipow < 0) os << "(" << e.ipow << ")";
            else os << e.ipow;
            break;
        case Expr::Op::Call:
            os << builtin_name(e.builtin) << "(";
            for (size_t i = 0; i < e.kids.size(); ++i) {
                if (i) os << ", ";
                pp(os, *e.kids[i]);
            }
            os << ")";
            break;
        case Expr::Op::Opaque:
            os << e.opaque_name << "(";
            pp(os, *e.kids[0]);
            os << ")";
            break;
        case Expr::Op::Piecewise:
            os << "piecewise(";
            for (const auto& br : e.branches) {
                pp(os, *br.lhs);
                os << " " << cmp_text(br.cmp) << " ";
                pp(os, *br.rhs);
                os << " : ";
                pp(os, *br.value);
                os << ", ";
            }
            os << "else : ";
            pp(os, *e.otherwise);
            os << ")";
            break;
    }
}

}  // namespace

std::string pretty_print(const Expr& e) {
    std::ostringstream os;
    pp(os, e);
    return os.str();
}

template <class T>
T eval(const Expr& e, std::span<const T> env, EvalFlags* flags) {
    switch (e.op) {
        case Expr::Op::Const:
            return T(e.cval);
        case Expr::Op::Var:
            return env[static_cast<size_t>(e.var)];
        case Expr::Op::Add:
            return eval(*e.kids[0], env, flags) + eval(*e.kids[1], env, flags);
        case Expr::Op::Sub:
            return eval(*e.kids[0], env, flags) - eval(*e.kids[1], env, flags);
        case Expr::Op::Mul:
            return eval(*e.kids[0], env, flags) * eval(*e.kids[1], env, flags);
        case Expr::Op::Div: {
            T num = eval(*e.kids[0], env, flags);
            T den = eval(*e.kids[1], env, flags);
            if (value_of(den) == 0.0) throw DomainError("division by zero", pretty_print(e));
            return num / den;
        }
        case Expr::Op::Neg:
            return -eval(*e.kids[0], env, flags);
        case Expr::Op::PowInt: {
            T base = eval(*e.kids[0], env, flags);
            if (e.ipow < 0 && value_of(base) == 0.0)
                throw DomainError("zero raised to a negative power", pretty_print(e));
            return powi(base, e.ipow);
        }
        case Expr::Op::Call: {
            T a = eval(*e.kids[0], env, flags);
            switch (e.builtin) {
                case Builtin::Sin: return sin(a);
                case Builtin::Cos: return cos(a);
                case Builtin::Tan: return tan(a);
                case Builtin::Exp: return exp(a);
                case Builtin::Ln:
                    if (value_of(a) <= 0.0) throw DomainError("ln of non-positive value", pretty_print(e));
                    return log(a);
                case Builtin::Tanh: return tanh(a);
                case Builtin::Abs:
                    if (flags && value_of(a) == 0.0) flags->on_boundary = true;
                    return abs(a);
                case Builtin::Min: {
                    T b = eval(*e.kids[1], env, flags);
                    if (flags && value_of(a) == value_of(b)) flags->on_boundary = true;
                    return dmin(a, b);
                }
                case Builtin::Max: {
                    T b = eval(*e.kids[1], env, flags);
                    if (flags && value_of(a) == value_of(b)) flags->on_boundary = true;
                    return dmax(a, b);
                }
            }
            throw Error("unreachable builtin");
        }
        case Expr::Op::Opaque: {
            T a = eval(*e.kids[0], env, flags);
            return (*e.opaque)(a);
        }
        case Expr::Op::Piecewise: {
            for (const auto& br : e.branches) {
                T l = eval(*br.lhs, env, flags);
                T r = eval(*br.rhs, env, flags);
                double lv = value_of(l), rv = value_of(r);
                if (flags && lv == rv &&
                    (br.cmp == Cmp::Le || br.cmp == Cmp::Lt || br.cmp == Cmp::Ge || br.cmp == Cmp::Gt))
                    flags->on_boundary = true;
                bool taken = false;
                switch (br.cmp) {
                    case Cmp::Le: taken = lv <= rv; break;
                    case Cmp::Lt: taken = lv < rv; break;
                    case Cmp::Ge: taken = lv >= rv; break;
                    case Cmp::Gt: taken = lv > rv; break;
                    case Cmp::Eq: taken = lv == rv; break;
                    case Cmp::Ne: taken = lv != rv; break;
                }
                if (taken) return eval(*br.value, env, flags);
            }
            return eval(*e.otherwise, env, flags);
        }
    }
    throw Error("unreachable expression op");
}

template double eval<double>(const Expr&, std::span<const double>, EvalFlags*);
template D1 eval<D1>(const Expr&, std::span<const D1>, EvalFlags*);
template D2 eval<D2>(const Expr&, std::span<const D2>, EvalFlags*);

double eval(const Expr& e, std::span<const double> env) { return eval<double>(e, env, nullptr); }

DualResult eval_dual(const Expr& e, std::span<const double> env, std::span<const double> dir) {
    std::vector<D1> denv(env.size());
    for (size_t i = 0; i < env.size(); ++i) denv[i] = {env[i], dir[i]};
    EvalFlags flags;
    D1 r = eval<D1>(e, denv, &flags);
    return {r.v, r.d, flags.on_boundary};
}

bool is_constant_expr(const Expr& e) {
    if (e.op == Expr::Op::Var) return false;
    for (const auto& k : e.kids)
        if (!is_constant_expr(*k)) return false;
    for (const auto& br : e.branches)
        if (!is_constant_expr(*br.lhs) || !is_constant_expr(*br.rhs) || !is_constant_expr(*br.value))
            return false;
    if (e.otherwise && !is_constant_expr(*e.otherwise)) return false;
    return true;
}

namespace {
void collect_vars(const Expr& e, std::set<int>& out) {
    if (e.op == Expr::Op::Var) out.insert(e.var);
    for (const auto& k : e.kids) collect_vars(*k, out);
    for (const auto& br : e.branches) {
        collect_vars(*br.lhs, out);
        collect_vars(*br.rhs, out);
        collect_vars(*br.value, out);
    }
    if (e.otherwise) collect_vars(*e.otherwise, out);
}
}  // namespace

std::vector<int> referenced_vars(const Expr& e) {
    std::set<int> s;
    collect_vars(e, s);
    return {s.begin(), s.end()};
}

}  // namespace gtf
