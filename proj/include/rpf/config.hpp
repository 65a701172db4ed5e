/**
 * @file config.hpp
 * @brief Run-configuration grammar, potential expressions and validated run settings.
 *
 * Grammar (one statement per line, `#` starts a comment):
 *
 *   line    := key '=' value
 *   value   := number | string | list | table
 *   list    := '[' (scalar (',' scalar)*)? ']'
 *   table   := '{' (key '=' (scalar | list) (',' key '=' (scalar | list))*)? '}'
 *   scalar  := number | string
 *   string  := '"' chars '"'
 *
 * Tables nest one level only. The grammar is a subset of TOML.
 */
#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rpf/errors.hpp"
#include "rpf/maps.hpp"
#include "rpf/moduli.hpp"

namespace rpf::config {

struct Value {
    enum class Kind { number, string, list, table };
    Kind kind = Kind::number;
    double number = 0.0;
    std::string text;
    std::vector<Value> items;                           // list
    std::vector<std::pair<std::string, Value>> fields;  // table, in file order
    int line = 0;

    const Value* find(const std::string& key) const {
        for (const auto& [k, v] : fields)
            if (k == key) return &v;
        return nullptr;
    }
};

struct Entry {
    std::string key;
    Value value;
    int line = 0;
};

inline std::string diagnostic(int line, const std::string& field, const std::string& msg) {
    std::string s = "config";
    if (line > 0) s += " line " + std::to_string(line);
    if (!field.empty()) s += ", field '" + field + "'";
    return s + ": " + msg;
}

[[noreturn]] inline void fail(int line, const std::string& field, const std::string& msg) {
    throw ConfigError(diagnostic(line, field, msg));
}

namespace detail {

class LineParser {
public:
    LineParser(std::string_view s, int line) : s_(s), line_(line) {}

    Entry statement() {
        skip_ws();
        Entry e;
        e.line = line_;
        e.key = key();
        expect('=', e.key);
        e.value = value(e.key, 0);
        skip_ws();
        if (pos_ < s_.size()) fail(line_, e.key, "unexpected trailing text '" + std::string(s_.substr(pos_)) + "'");
        return e;
    }

private:
    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
    }
    bool peek(char c) {
        skip_ws();
        return pos_ < s_.size() && s_[pos_] == c;
    }
    void expect(char c, const std::string& field) {
        if (!peek(c)) fail(line_, field, std::string("expected '") + c + "'");
        ++pos_;
    }
    std::string key() {
        skip_ws();
        std::size_t b = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-'))
            ++pos_;
        if (b == pos_) fail(line_, "", "expected a key");
        return std::string(s_.substr(b, pos_ - b));
    }
    Value value(const std::string& field, int depth) {
        skip_ws();
        if (pos_ >= s_.size()) fail(line_, field, "missing value");
        Value v;
        v.line = line_;
        const char c = s_[pos_];
        if (c == '"') {
            v.kind = Value::Kind::string;
            v.text = quoted(field);
        } else if (c == '[') {
            ++pos_;
            v.kind = Value::Kind::list;
            if (!peek(']')) {
                while (true) {
                    Value item = value(field, 2);
                    if (item.kind == Value::Kind::list || item.kind == Value::Kind::table)
                        fail(line_, field, "lists hold scalars only");
                    v.items.push_back(std::move(item));
                    if (peek(',')) { ++pos_; continue; }
                    break;
                }
            }
            expect(']', field);
        } else if (c == '{') {
            if (depth > 0) fail(line_, field, "tables nest one level only");
            ++pos_;
            v.kind = Value::Kind::table;
            if (!peek('}')) {
                while (true) {
                    std::string k = key();
                    const std::string sub = field + "." + k;
                    if (v.find(k)) fail(line_, sub, "duplicate key");
                    expect('=', sub);
                    v.fields.emplace_back(k, value(sub, 1));
                    if (peek(',')) { ++pos_; continue; }
                    break;
                }
            }
            expect('}', field);
        } else {
            v.kind = Value::Kind::number;
            v.number = number(field);
        }
        return v;
    }
    std::string quoted(const std::string& field) {
        ++pos_;
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
            out += s_[pos_++];
        }
        if (pos_ >= s_.size()) fail(line_, field, "unterminated string");
        ++pos_;
        return out;
    }
    double number(const std::string& field) {
        std::size_t b = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
                                    s_[pos_] == '-' || s_[pos_] == '+' || s_[pos_] == '_'))
            ++pos_;
        std::string tok(s_.substr(b, pos_ - b));
        std::erase(tok, '_');
        const char* first = tok.data();
        if (!tok.empty() && tok[0] == '+') ++first;
        double x = 0.0;
        auto [p, ec] = std::from_chars(first, tok.data() + tok.size(), x);
        if (tok.empty() || ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(x))
            fail(line_, field, "expected a number, got '" + tok + "'");
        return x;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    int line_;
};

inline std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
        if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

}  // namespace detail

inline std::vector<Entry> parse_document(const std::string& text) {
    std::vector<Entry> out;
    int line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        ++line_no;
        std::string line = detail::strip_comment(text.substr(start, end - start));
        bool blank = true;
        for (char c : line)
            if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
        if (!blank) {
            Entry e = detail::LineParser(line, line_no).statement();
            for (const auto& prev : out)
                if (prev.key == e.key) fail(line_no, e.key, "duplicate key (first set on line " + std::to_string(prev.line) + ")");
            out.push_back(std::move(e));
        }
        start = end + 1;
    }
    return out;
}

// ---------------------------------------------------------------- expressions

/// Grammar: expr := term (('+'|'-') term)*; term := unary (('*'|'/') unary)*;
/// unary := '-' unary | primary; primary := number | 'x' | 'pi' | ('cos'|'sin') '(' expr ')' | '(' expr ')'.
class Expression {
public:
    using Fn = std::function<double(double)>;

    static Expression compile(const std::string& src) {
        Expression e;
        e.src_ = src;
        Parser p{src};
        e.fn_ = p.expr();
        p.skip();
        if (p.pos < src.size()) throw ConfigError("expression: unexpected '" + src.substr(p.pos) + "'");
        return e;
    }

    double operator()(double x) const { return fn_(x); }
    const std::string& source() const { return src_; }

private:
    struct Parser {
        const std::string& s;
        std::size_t pos = 0;

        void skip() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        bool eat(char c) {
            skip();
            if (pos < s.size() && s[pos] == c) { ++pos; return true; }
            return false;
        }
        [[noreturn]] void error(const std::string& msg) const {
            throw ConfigError("expression: " + msg + " at offset " + std::to_string(pos) + " in '" + s + "'");
        }
        Fn expr() {
            Fn lhs = term();
            while (true) {
                if (eat('+')) lhs = [a = lhs, b = term()](double x) { return a(x) + b(x); };
                else if (eat('-')) lhs = [a = lhs, b = term()](double x) { return a(x) - b(x); };
                else return lhs;
            }
        }
        Fn term() {
            Fn lhs = unary();
            while (true) {
                if (eat('*')) lhs = [a = lhs, b = unary()](double x) { return a(x) * b(x); };
                else if (eat('/')) lhs = [a = lhs, b = unary()](double x) { return a(x) / b(x); };
                else return lhs;
            }
        }
        Fn unary() {
            if (eat('-')) return [a = unary()](double x) { return -a(x); };
            if (eat('+')) return unary();
            return primary();
        }
        Fn primary() {
            skip();
            if (pos >= s.size()) error("unexpected end");
            if (eat('(')) {
                Fn inner = expr();
                if (!eat(')')) error("expected ')'");
                return inner;
            }
            const char c = s[pos];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                std::size_t b = pos;
                while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.')) ++pos;
                if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
                    ++pos;
                    if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) ++pos;
                    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
                }
                double v = 0.0;
                auto [p, ec] = std::from_chars(s.data() + b, s.data() + pos, v);
                if (ec != std::errc() || p != s.data() + pos) error("bad number");
                return [v](double) { return v; };
            }
            if (std::isalpha(static_cast<unsigned char>(c))) {
                std::size_t b = pos;
                while (pos < s.size() && std::isalnum(static_cast<unsigned char>(s[pos]))) ++pos;
                const std::string id = s.substr(b, pos - b);
                if (id == "x") return [](double x) { return x; };
                if (id == "pi") return [](double) { return std::numbers::pi; };
                if (id == "cos" || id == "sin") {
                    if (!eat('(')) error("expected '(' after " + id);
                    Fn arg = expr();
                    if (!eat(')')) error("expected ')'");
                    if (id == "cos") return [arg](double x) { return std::cos(arg(x)); };
                    return [arg](double x) { return std::sin(arg(x)); };
                }
                pos = b;
                error("unknown identifier '" + id + "'");
            }
            error(std::string("unexpected '") + c + "'");
        }
    };

    Fn fn_;
    std::string src_;
};

// ---------------------------------------------------------------- run config

struct MapSpec {
    std::string family = "mp";
    double s = 0.5;
    int k = 1;
    double A = 1.0;

    CircleMap build() const {
        if (family == "mp") return CircleMap::manneville_pomeau(s);
        return CircleMap::iterated_log(k, A);
    }
};

struct ModulusSpec {
    std::string family = "ab";  // ab | ilog | ilog-pair | legendre
    double alpha = 0.0;
    double beta = 0.0;
    std::vector<double> powers;
    int k = 1;
    std::optional<double> tau;   // legendre only; defaults to the window of omega
    std::size_t grid = 4000;     // legendre only

    bool is_legendre() const { return family == "legendre"; }

    Modulus build() const {
        if (family == "ab") return omega_ab(alpha, beta);
        if (family == "ilog") return ilog_composite(powers);
        if (family == "ilog-pair") return ilog_pair_omega(k);
        throw InvalidParameters("modulus family '" + family + "' is built by a pipeline stage");
    }
};

struct GibbsSpec {
    double r = 0.05;
    std::size_t centers = 100;
    std::size_t n_max = 12;
};

struct RunConfig {
    MapSpec map;
    ModulusSpec omega{.family = "ab", .alpha = 0.75};
    ModulusSpec Omega{.family = "legendre"};
    std::string potential = "0";
    std::size_t grid = 16384;
    double tol = 1e-10;
    std::size_t max_iter = 5000;
    std::vector<double> c_sweep;  // empty: default c of the map
    double x_min = 1e-12;
    std::size_t refine_levels = 0;
    std::size_t cover_n_max = 12;
    GibbsSpec gibbs;
    std::uint64_t seed = 42;
    std::string out = "out";

    Expression potential_expr() const { return Expression::compile(potential); }
};

namespace detail {

inline double as_number(const Value& v, const std::string& field) {
    if (v.kind != Value::Kind::number) fail(v.line, field, "expected a number");
    return v.number;
}

inline std::string as_string(const Value& v, const std::string& field) {
    if (v.kind != Value::Kind::string) fail(v.line, field, "expected a quoted string");
    return v.text;
}

inline std::size_t as_count(const Value& v, const std::string& field, double lo) {
    double x = as_number(v, field);
    if (x != std::floor(x) || x < lo || x > 1e12)
        fail(v.line, field, "expected an integer >= " + std::to_string(static_cast<long long>(lo)));
    return static_cast<std::size_t>(x);
}

inline std::vector<double> as_numbers(const Value& v, const std::string& field) {
    if (v.kind != Value::Kind::list) fail(v.line, field, "expected a list of numbers");
    std::vector<double> out;
    for (const auto& it : v.items) out.push_back(as_number(it, field));
    return out;
}

inline void check_keys(const Value& v, const std::string& field, std::initializer_list<const char*> allowed) {
    if (v.kind != Value::Kind::table) fail(v.line, field, "expected an inline table {...}");
    for (const auto& [k, _] : v.fields) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) fail(v.line, field + "." + k, "unknown field");
    }
}

inline MapSpec parse_map(const Value& v) {
    check_keys(v, "map", {"family", "s", "k", "A"});
    MapSpec m;
    const Value* fam = v.find("family");
    if (!fam) fail(v.line, "map.family", "missing");
    m.family = as_string(*fam, "map.family");
    if (m.family == "mp") {
        if (v.find("k") || v.find("A")) fail(v.line, "map", "family \"mp\" takes only s");
        if (const Value* s = v.find("s")) m.s = as_number(*s, "map.s");
        if (!(m.s > 0.0 && m.s < 1.0)) fail(v.line, "map.s", "need 0 < s < 1");
    } else if (m.family == "ilog") {
        if (v.find("s")) fail(v.line, "map.s", "family \"ilog\" takes k and A");
        if (const Value* k = v.find("k")) m.k = static_cast<int>(as_count(*k, "map.k", 1));
        if (const Value* a = v.find("A")) m.A = as_number(*a, "map.A");
        if (!(m.A > 0.0)) fail(v.line, "map.A", "need A > 0");
    } else {
        fail(fam->line, "map.family", "unknown family \"" + m.family + "\" (expected \"mp\" or \"ilog\")");
    }
    try {
        (void)m.build();
    } catch (const Error& e) {
        fail(v.line, "map", e.what());
    }
    return m;
}

inline ModulusSpec parse_modulus(const Value& v, const std::string& field, bool allow_legendre) {
    ModulusSpec m;
    if (v.kind == Value::Kind::string) {
        if (v.text == "legendre" && allow_legendre) {
            m.family = "legendre";
            return m;
        }
        fail(v.line, field, "unknown modulus \"" + v.text + "\"");
    }
    check_keys(v, field, {"family", "alpha", "beta", "powers", "k", "tau", "grid"});
    const Value* fam = v.find("family");
    if (!fam) fail(v.line, field + ".family", "missing");
    m.family = as_string(*fam, field + ".family");
    auto forbid = [&](std::initializer_list<const char*> keys) {
        for (const char* k : keys)
            if (v.find(k)) fail(v.line, field + "." + k, "not used by family \"" + m.family + "\"");
    };
    if (m.family == "ab") {
        forbid({"powers", "k", "tau", "grid"});
        if (const Value* a = v.find("alpha")) m.alpha = as_number(*a, field + ".alpha");
        if (const Value* b = v.find("beta")) m.beta = as_number(*b, field + ".beta");
        if (!(m.alpha >= 0.0 && m.alpha < 1.0)) fail(v.line, field + ".alpha", "need 0 <= alpha < 1");
        if (!(m.beta >= 0.0)) fail(v.line, field + ".beta", "need beta >= 0");
        if (!(m.alpha + m.beta > 0.0)) fail(v.line, field, "alpha + beta must be positive");
    } else if (m.family == "ilog") {
        forbid({"alpha", "beta", "k", "tau", "grid"});
        const Value* p = v.find("powers");
        if (!p) fail(v.line, field + ".powers", "missing");
        m.powers = as_numbers(*p, field + ".powers");
    } else if (m.family == "ilog-pair") {
        forbid({"alpha", "beta", "powers", "tau", "grid"});
        if (const Value* k = v.find("k")) m.k = static_cast<int>(as_count(*k, field + ".k", 1));
    } else if (m.family == "legendre" && allow_legendre) {
        forbid({"alpha", "beta", "powers", "k"});
        if (const Value* t = v.find("tau")) {
            m.tau = as_number(*t, field + ".tau");
            if (!(*m.tau > 0.0 && *m.tau < 0.5)) fail(v.line, field + ".tau", "need 0 < tau < 1/2");
        }
        if (const Value* g = v.find("grid")) m.grid = as_count(*g, field + ".grid", 1000);
        return m;
    } else {
        fail(fam->line, field + ".family", "unknown family \"" + m.family + "\"");
    }
    try {
        (void)m.build();
    } catch (const Error& e) {
        fail(v.line, field, e.what());
    }
    return m;
}

}  // namespace detail

/// Parses and validates every field before anything is computed.
inline RunConfig parse_run_config(const std::string& text) {
    RunConfig cfg;
    bool have_map = false;
    int omega_line = 0, c_line = 0;
    for (const auto& e : parse_document(text)) {
        const Value& v = e.value;
        const std::string& k = e.key;
        if (k == "map") {
            cfg.map = detail::parse_map(v);
            have_map = true;
        } else if (k == "omega") {
            cfg.omega = detail::parse_modulus(v, k, false);
        } else if (k == "Omega") {
            cfg.Omega = detail::parse_modulus(v, k, true);
            omega_line = e.line;
        } else if (k == "potential") {
            cfg.potential = detail::as_string(v, k);
            try {
                Expression f = cfg.potential_expr();
                const double a = f(0.0), b = f(1.0);
                if (!std::isfinite(a) || std::fabs(a - b) > 1e-9 * (1.0 + std::fabs(a)))
                    fail(e.line, k, "potential is not 1-periodic (f(0) != f(1))");
                for (int i = 0; i < 64; ++i)
                    if (!std::isfinite(f(i / 64.0))) fail(e.line, k, "potential is not finite on [0,1)");
            } catch (const ConfigError& err) {
                const std::string what = err.what();
                if (what.rfind("config", 0) == 0) throw;
                fail(e.line, k, what);
            }
        } else if (k == "grid") {
            cfg.grid = detail::as_count(v, k, 256);
        } else if (k == "tol") {
            cfg.tol = detail::as_number(v, k);
            if (!(cfg.tol > 0.0 && cfg.tol < 1.0)) fail(e.line, k, "need 0 < tol < 1");
        } else if (k == "max_iter") {
            cfg.max_iter = detail::as_count(v, k, 1);
        } else if (k == "c_sweep") {
            cfg.c_sweep = detail::as_numbers(v, k);
            c_line = e.line;
            if (cfg.c_sweep.empty()) fail(e.line, k, "empty list");
            for (double c : cfg.c_sweep)
                if (!(c > 0.0)) fail(e.line, k, "every c must be positive");
        } else if (k == "x_min") {
            cfg.x_min = detail::as_number(v, k);
            if (!(cfg.x_min > 0.0 && cfg.x_min < 1e-3)) fail(e.line, k, "need 0 < x_min < 1e-3");
        } else if (k == "refine_levels") {
            cfg.refine_levels = detail::as_count(v, k, 0);
            if (cfg.refine_levels > 20) fail(e.line, k, "at most 20 levels");
        } else if (k == "cover_n_max") {
            cfg.cover_n_max = detail::as_count(v, k, 1);
            if (cfg.cover_n_max > 20) fail(e.line, k, "at most 20");
        } else if (k == "gibbs") {
            detail::check_keys(v, k, {"r", "centers", "n_max"});
            if (const Value* r = v.find("r")) cfg.gibbs.r = detail::as_number(*r, "gibbs.r");
            if (const Value* c = v.find("centers")) cfg.gibbs.centers = detail::as_count(*c, "gibbs.centers", 1);
            if (const Value* n = v.find("n_max")) cfg.gibbs.n_max = detail::as_count(*n, "gibbs.n_max", 0);
            if (!(cfg.gibbs.r > 0.0 && cfg.gibbs.r < 0.5)) fail(e.line, "gibbs.r", "need 0 < r < 1/2");
            if (cfg.gibbs.n_max > 40) fail(e.line, "gibbs.n_max", "at most 40");
        } else if (k == "seed") {
            double s = detail::as_number(v, k);
            if (s < 0 || s != std::floor(s) || s > 9007199254740992.0) fail(e.line, k, "expected a non-negative integer");
            cfg.seed = static_cast<std::uint64_t>(s);
        } else if (k == "out") {
            cfg.out = detail::as_string(v, k);
            if (cfg.out.empty()) fail(e.line, k, "empty path");
        } else {
            fail(e.line, k, "unknown key");
        }
    }
    if (!have_map) fail(0, "map", "missing required key");
    if (cfg.Omega.is_legendre() && cfg.Omega.tau && *cfg.Omega.tau > cfg.omega.build().window())
        fail(omega_line, "Omega.tau", "tau exceeds the concavity window of omega");
    const double cmax = std::exp2(-(cfg.map.build().sigma() + 2.0));
    for (double c : cfg.c_sweep)
        if (c > cmax * (1.0 + 1e-12)) fail(c_line, "c_sweep", "every c must be <= 2^-(sigma+2) = " + std::to_string(cmax));
    return cfg;
}

}  // namespace rpf::config
