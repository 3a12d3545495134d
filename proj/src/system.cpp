#include "gtf/system.hpp"

#include <fstream>
#include <sstream>

namespace gtf {

namespace {

// Negated field wrapper for time reversal.
class NegField : public VectorField {
public:
    explicit NegField(FieldPtr f) : VectorField(f->dim()), f_(std::move(f)) { box = f_->box; }
    void value(const Vec& x, Vec& out) const override {
        f_->value(x, out);
        out = -out;
    }
    void value_d1(const DVec<D1>& x, DVec<D1>& out) const override {
        f_->value_d1(x, out);
        for (auto& o : out) o = -o;
    }
    void value_d2(const DVec<D2>& x, DVec<D2>& out) const override {
        f_->value_d2(x, out);
        for (auto& o : out) o = -o;
    }
    bool is_constant() const override { return f_->is_constant(); }

private:
    FieldPtr f_;
};

struct ConfigLine {
    std::string key;
    std::string value;
    int line_no;
};

// key = value lines grouped by [section]; '#' starts a comment.
std::map<std::string, std::vector<ConfigLine>> parse_sections(const std::string& text) {
    std::map<std::string, std::vector<ConfigLine>> sections;
    std::istringstream is(text);
    std::string line;
    std::string current = "";
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("unterminated section header", line_no, 1);
            current = line.substr(1, line.size() - 2);
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected `key = value`", line_no, 1);
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        auto trim = [](std::string s) {
            auto a = s.find_first_not_of(" \t");
            auto b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        sections[current].push_back({trim(key), trim(val), line_no});
    }
    return sections;
}

// Comma-separated list of quoted strings: "expr1", "expr2", ...
std::vector<std::string> split_quoted(const std::string& value, int line_no) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < value.size()) {
        while (i < value.size() && (value[i] == ' ' || value[i] == '\t' || value[i] == ',')) ++i;
        if (i >= value.size()) break;
        if (value[i] != '"') throw ParseError("expected quoted expression", line_no, static_cast<int>(i + 1));
        size_t close = value.find('"', i + 1);
        if (close == std::string::npos) throw ParseError("unterminated quote", line_no, static_cast<int>(i + 1));
        out.push_back(value.substr(i + 1, close - i - 1));
        i = close + 1;
    }
    return out;
}

std::vector<std::string> split_plain(const std::string& value) {
    std::vector<std::string> out;
    std::istringstream is(value);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        auto a = tok.find_first_not_of(" \t");
        auto b = tok.find_last_not_of(" \t");
        if (a != std::string::npos) out.push_back(tok.substr(a, b - a + 1));
    }
    return out;
}

const ConfigLine* find_key(const std::vector<ConfigLine>& lines, const std::string& key) {
    for (const auto& l : lines)
        if (l.key == key) return &l;
    return nullptr;
}

}  // namespace

System System::reversed() const {
    System r = *this;
    r.name = name + "-reversed";
    r.a = std::make_shared<NegField>(a);
    r.b = std::make_shared<NegField>(b);
    // beta unchanged: reversed channel is (-beta)(-b)... folded as -a - beta*b
    // realized by negating both a and b and keeping beta.
    r.triangular.clear();  // explicit triangular forms do not transfer
    return r;
}

System parse_system_config(const std::string& text) {
    auto sections = parse_sections(text);
    if (!sections.count("system")) throw ParseError("missing [system] section", 1, 1);
    const auto& sys_lines = sections["system"];

    System out;
    if (const auto* l = find_key(sys_lines, "name")) out.name = l->value;

    const auto* dim_line = find_key(sys_lines, "dim");
    if (!dim_line) throw ParseError("missing `dim` in [system]", 1, 1);
    out.n = std::atoi(dim_line->value.c_str());
    if (out.n < 2) throw ParseError("dimension must be at least 2", dim_line->line_no, 1);

    if (const auto* l = find_key(sys_lines, "state")) {
        out.state_names = split_plain(l->value);
        if (static_cast<int>(out.state_names.size()) != out.n)
            throw ParseError("state name count does not match dim", l->line_no, 1);
    } else {
        for (int i = 1; i <= out.n; ++i) out.state_names.push_back("x" + std::to_string(i));
    }

    SymbolTable state_syms;
    state_syms.vars = out.state_names;
    SymbolTable control_syms = state_syms;
    control_syms.vars.push_back("u");

    auto parse_components = [&](const char* key, const SymbolTable& syms) {
        const auto* l = find_key(sys_lines, key);
        if (!l) throw ParseError(std::string("missing `") + key + "` in [system]", 1, 1);
        auto parts = split_quoted(l->value, l->line_no);
        if (static_cast<int>(parts.size()) != out.n)
            throw ParseError(std::string("`") + key + "` needs " + std::to_string(out.n) +
                                 " components",
                             l->line_no, 1);
        std::vector<ExprPtr> exprs;
        for (const auto& p : parts) exprs.push_back(parse_expr(p, syms));
        return exprs;
    };

    // Domain box first so fields can carry it.
    Box box = Box::unbounded(out.n);
    if (sections.count("domain")) {
        for (const auto& l : sections["domain"]) {
            int idx = -1;
            for (int i = 0; i < out.n; ++i)
                if (out.state_names[static_cast<size_t>(i)] == l.key) idx = i;
            if (idx < 0) throw ParseError("unknown state `" + l.key + "` in [domain]", l.line_no, 1);
            auto parts = split_plain(l.value);
            if (parts.size() != 2) throw ParseError("domain bounds need `lo, hi`", l.line_no, 1);
            box.lo[idx] = std::atof(parts[0].c_str());
            box.hi[idx] = std::atof(parts[1].c_str());
            if (!(box.lo[idx] < box.hi[idx]))
                throw ParseError("empty domain interval for `" + l.key + "`", l.line_no, 1);
        }
    }
    out.box = box;

    out.a = std::make_shared<AnalyticField>(parse_components("a", state_syms), box);
    out.b = std::make_shared<AnalyticField>(parse_components("b", state_syms), box);

    const auto* beta_line = find_key(sys_lines, "beta");
    if (!beta_line) throw ParseError("missing `beta` in [system]", 1, 1);
    auto beta_parts = split_quoted(beta_line->value, beta_line->line_no);
    if (beta_parts.size() != 1) throw ParseError("`beta` is a single expression", beta_line->line_no, 1);
    out.beta = std::make_shared<ScalarGain>(parse_expr(beta_parts[0], control_syms), out.n);

    if (sections.count("triangular")) {
        out.triangular.resize(static_cast<size_t>(out.n));
        for (const auto& l : sections["triangular"]) {
            if (l.key.size() < 2 || l.key[0] != 'f')
                throw ParseError("keys in [triangular] are f1..fn", l.line_no, 1);
            int idx = std::atoi(l.key.c_str() + 1);
            if (idx < 1 || idx > out.n) throw ParseError("bad index in [triangular]", l.line_no, 1);
            auto parts = split_quoted(l.value, l.line_no);
            if (parts.size() != 1) throw ParseError("one expression per f_i", l.line_no, 1);
            out.triangular[static_cast<size_t>(idx - 1)] = parse_expr(parts[0], control_syms);
        }
        for (const auto& f : out.triangular)
            if (!f) throw ParseError("[triangular] must define every f_i", 1, 1);
    }

    if (sections.count("frame")) {
        out.frame.resize(static_cast<size_t>(out.n));
        for (const auto& l : sections["frame"]) {
            if (l.key.size() < 2 || l.key[0] != 'v')
                throw ParseError("keys in [frame] are v1..vn", l.line_no, 1);
            int idx = std::atoi(l.key.c_str() + 1);
            if (idx < 1 || idx > out.n) throw ParseError("bad index in [frame]", l.line_no, 1);
            auto parts = split_quoted(l.value, l.line_no);
            if (static_cast<int>(parts.size()) != out.n)
                throw ParseError("frame field needs n components", l.line_no, 1);
            std::vector<ExprPtr> exprs;
            for (const auto& p : parts) exprs.push_back(parse_expr(p, state_syms));
            out.frame[static_cast<size_t>(idx - 1)] = std::make_shared<AnalyticField>(exprs, box);
        }
        for (const auto& v : out.frame)
            if (!v) throw ParseError("[frame] must define every v_i", 1, 1);
    }

    return out;
}

System load_system(const std::string& source) {
    if (is_registry_name(source)) return make_registry_system(source);
    std::ifstream is(source);
    if (!is) throw Error("cannot open system config `" + source + "`");
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_system_config(buf.str());
}

}  // namespace gtf
