#include "reposim/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <unordered_map>

#include "reposim/errors.hpp"

namespace reposim {

std::string_view value_type_name(ValueType t) {
    switch (t) {
        case ValueType::Number: return "number";
        case ValueType::String: return "string";
        case ValueType::Bool: return "bool";
    }
    return "?";
}

namespace {

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { Number, String, Ident, Sym, End };

struct Token {
    Tok type;
    std::string text;
    double number = 0.0;
    std::size_t pos = 0;
};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Token> lex(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto fail = [&](const std::string& what) {
        throw ExprInvalid("expression syntax error at offset " + std::to_string(i) + ": " + what);
    };
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        Token t{Tok::End, "", 0.0, i};
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
            std::size_t j = i;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            if (j < s.size() && s[j] == '.') {
                ++j;
                while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            }
            if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
                if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
                    while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
                    j = k;
                }
            }
            t.type = Tok::Number;
            t.text = std::string(s.substr(i, j - i));
            auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
            if (ec != std::errc{} || ptr != t.text.data() + t.text.size()) fail("bad number");
            i = j;
        } else if (c == '"') {
            std::string value;
            ++i;
            for (;;) {
                if (i >= s.size()) fail("unterminated string");
                char d = s[i++];
                if (d == '"') break;
                if (d == '\\') {
                    if (i >= s.size()) fail("unterminated escape");
                    d = s[i++];
                    if (d == 'n') d = '\n';
                    else if (d == 't') d = '\t';
                    else if (d != '"' && d != '\\') fail("unknown escape");
                }
                value.push_back(d);
            }
            t.type = Tok::String;
            t.text = std::move(value);
        } else if (is_ident_start(c)) {
            std::size_t j = i;
            while (j < s.size() && is_ident_char(s[j])) ++j;
            t.type = Tok::Ident;
            t.text = std::string(s.substr(i, j - i));
            i = j;
        } else {
            static constexpr std::string_view kTwo[] = {"==", "!=", "<=", ">="};
            t.type = Tok::Sym;
            bool two = false;
            for (auto op : kTwo) {
                if (s.substr(i, 2) == op) {
                    t.text = std::string(op);
                    i += 2;
                    two = true;
                    break;
                }
            }
            if (!two) {
                if (std::string_view("+-*/<>(){},:").find(c) == std::string_view::npos)
                    fail(std::string("unexpected character '") + c + "'");
                t.text = std::string(1, c);
                ++i;
            }
        }
        out.push_back(std::move(t));
    }
    out.push_back(Token{Tok::End, "", 0.0, s.size()});
    return out;
}

// ---------------------------------------------------------------------------
// Parser

using NodePtr = std::unique_ptr<ExprNode>;

NodePtr make(ExprNode::Kind k) {
    auto n = std::make_unique<ExprNode>();
    n->kind = k;
    return n;
}

NodePtr make_binary(std::string op, NodePtr lhs, NodePtr rhs) {
    auto n = make(ExprNode::Kind::Binary);
    n->text = std::move(op);
    n->children.push_back(std::move(lhs));
    n->children.push_back(std::move(rhs));
    return n;
}

bool is_keyword(std::string_view s) {
    return s == "if" || s == "then" || s == "else" || s == "and" || s == "or" || s == "not" ||
           s == "lookup";
}

class Parser {
public:
    explicit Parser(std::string_view src) : toks_(lex(src)) {}

    NodePtr parse() {
        auto e = expr();
        if (peek().type != Tok::End) fail("unexpected trailing input");
        return e;
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;

    const Token& peek() const { return toks_[pos_]; }
    Token take() { return toks_[pos_++]; }

    [[noreturn]] void fail(const std::string& what) const {
        throw ExprInvalid("expression syntax error at offset " + std::to_string(peek().pos) + ": " +
                          what);
    }
    bool at_sym(std::string_view s) const { return peek().type == Tok::Sym && peek().text == s; }
    bool at_word(std::string_view s) const {
        return peek().type == Tok::Ident && peek().text == s;
    }
    void expect_sym(std::string_view s) {
        if (!at_sym(s)) fail("expected '" + std::string(s) + "'");
        ++pos_;
    }
    void expect_word(std::string_view s) {
        if (!at_word(s)) fail("expected '" + std::string(s) + "'");
        ++pos_;
    }

    NodePtr expr() {
        if (at_word("if")) {
            ++pos_;
            auto n = make(ExprNode::Kind::If);
            n->children.push_back(expr());
            expect_word("then");
            n->children.push_back(expr());
            expect_word("else");
            n->children.push_back(expr());
            return n;
        }
        return disjunction();
    }

    NodePtr disjunction() {
        auto lhs = conjunction();
        while (at_word("or")) {
            ++pos_;
            lhs = make_binary("or", std::move(lhs), conjunction());
        }
        return lhs;
    }

    NodePtr conjunction() {
        auto lhs = negation();
        while (at_word("and")) {
            ++pos_;
            lhs = make_binary("and", std::move(lhs), negation());
        }
        return lhs;
    }

    NodePtr negation() {
        if (at_word("not")) {
            ++pos_;
            auto n = make(ExprNode::Kind::Not);
            n->children.push_back(negation());
            return n;
        }
        return comparison();
    }

    NodePtr comparison() {
        auto lhs = sum();
        for (auto op : {"==", "!=", "<=", ">=", "<", ">"}) {
            if (at_sym(op)) {
                ++pos_;
                return make_binary(op, std::move(lhs), sum());
            }
        }
        return lhs;
    }

    NodePtr sum() {
        auto lhs = term();
        while (at_sym("+") || at_sym("-")) {
            auto op = take().text;
            lhs = make_binary(op, std::move(lhs), term());
        }
        return lhs;
    }

    NodePtr term() {
        auto lhs = unary();
        while (at_sym("*") || at_sym("/")) {
            auto op = take().text;
            lhs = make_binary(op, std::move(lhs), unary());
        }
        return lhs;
    }

    NodePtr unary() {
        if (at_sym("-")) {
            ++pos_;
            auto n = make(ExprNode::Kind::Neg);
            n->children.push_back(unary());
            return n;
        }
        return primary();
    }

    ExprValue literal() {
        if (peek().type == Tok::String) return take().text;
        bool neg = false;
        if (at_sym("-")) {
            ++pos_;
            neg = true;
        }
        if (peek().type != Tok::Number) fail("expected a literal map value");
        double v = take().number;
        return neg ? -v : v;
    }

    NodePtr primary() {
        const Token& t = peek();
        if (t.type == Tok::Number) {
            auto n = make(ExprNode::Kind::Number);
            n->number = take().number;
            return n;
        }
        if (t.type == Tok::String) {
            auto n = make(ExprNode::Kind::String);
            n->text = take().text;
            return n;
        }
        if (at_sym("(")) {
            ++pos_;
            auto e = expr();
            expect_sym(")");
            return e;
        }
        if (t.type != Tok::Ident) fail("expected an expression");
        if (t.text == "lookup") {
            ++pos_;
            expect_sym("(");
            auto n = make(ExprNode::Kind::Lookup);
            n->children.push_back(expr());
            expect_sym(",");
            expect_sym("{");
            if (!at_sym("}")) {
                for (;;) {
                    if (peek().type != Tok::String) fail("map keys must be string literals");
                    std::string key = take().text;
                    expect_sym(":");
                    n->entries.emplace_back(std::move(key), literal());
                    if (at_sym(",")) {
                        ++pos_;
                        continue;
                    }
                    break;
                }
            }
            expect_sym("}");
            if (!at_sym(",")) fail("map lookup requires a default value");
            ++pos_;
            n->children.push_back(expr());
            expect_sym(")");
            return n;
        }
        if (is_keyword(t.text)) fail("unexpected keyword '" + t.text + "'");
        std::string name = take().text;
        if (at_sym("(")) {
            ++pos_;
            auto n = make(ExprNode::Kind::Call);
            n->text = std::move(name);
            if (!at_sym(")")) {
                for (;;) {
                    n->children.push_back(expr());
                    if (at_sym(",")) {
                        ++pos_;
                        continue;
                    }
                    break;
                }
            }
            expect_sym(")");
            return n;
        }
        auto n = make(ExprNode::Kind::Ref);
        n->text = std::move(name);
        return n;
    }
};

// ---------------------------------------------------------------------------
// Printer

std::string format_number(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, r.ptr);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        if (c == '\t') {
            out += "\\t";
            continue;
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

int precedence(const ExprNode& n) {
    using K = ExprNode::Kind;
    switch (n.kind) {
        case K::If: return 0;
        case K::Not: return 3;
        case K::Neg: return 7;
        case K::Number: return n.number < 0 ? 7 : 8;
        case K::Binary:
            if (n.text == "or") return 1;
            if (n.text == "and") return 2;
            if (n.text == "+" || n.text == "-") return 5;
            if (n.text == "*" || n.text == "/") return 6;
            return 4;
        default: return 8;
    }
}

std::string print_literal(const ExprValue& v) {
    if (const auto* d = std::get_if<double>(&v)) return format_number(*d);
    if (const auto* s = std::get_if<std::string>(&v)) return quote(*s);
    return std::get<bool>(v) ? "true" : "false";
}

void print(const ExprNode& n, std::string& out);

void print_child(const ExprNode& child, int min_prec, std::string& out) {
    if (precedence(child) < min_prec) {
        out.push_back('(');
        print(child, out);
        out.push_back(')');
    } else {
        print(child, out);
    }
}

void print(const ExprNode& n, std::string& out) {
    using K = ExprNode::Kind;
    switch (n.kind) {
        case K::Number: out += format_number(n.number); break;
        case K::String: out += quote(n.text); break;
        case K::Ref: out += n.text; break;
        case K::Neg:
            out += "-";
            print_child(*n.children[0], 7, out);
            break;
        case K::Not:
            out += "not ";
            print_child(*n.children[0], 3, out);
            break;
        case K::Binary: {
            const int p = precedence(n);
            // Comparisons do not chain; arithmetic/logic associate left.
            print_child(*n.children[0], p == 4 ? 5 : p, out);
            out += " " + n.text + " ";
            print_child(*n.children[1], p + 1, out);
            break;
        }
        case K::If:
            out += "if ";
            print(*n.children[0], out);
            out += " then ";
            print(*n.children[1], out);
            out += " else ";
            print_child(*n.children[2], 0, out);
            break;
        case K::Call:
            out += n.text + "(";
            for (std::size_t i = 0; i < n.children.size(); ++i) {
                if (i) out += ", ";
                print(*n.children[i], out);
            }
            out += ")";
            break;
        case K::Lookup:
            out += "lookup(";
            print(*n.children[0], out);
            out += ", {";
            for (std::size_t i = 0; i < n.entries.size(); ++i) {
                if (i) out += ", ";
                out += quote(n.entries[i].first) + ": " + print_literal(n.entries[i].second);
            }
            out += "}, ";
            print(*n.children[1], out);
            out += ")";
            break;
    }
}

// ---------------------------------------------------------------------------
// Validation

struct FunctionSig {
    std::size_t min_args;
    std::size_t max_args;
};

const std::unordered_map<std::string, FunctionSig>& functions() {
    static const std::unordered_map<std::string, FunctionSig> table = {
        {"exp", {1, 1}},   {"log", {1, 1}},   {"sqrt", {1, 1}},  {"pow", {2, 2}},
        {"abs", {1, 1}},   {"min", {2, 64}},  {"max", {2, 64}},  {"floor", {1, 1}},
        {"clamp", {3, 3}}, {"parse_number", {1, 1}},
    };
    return table;
}

bool is_number_literal(const ExprNode& n, double* value) {
    if (n.kind == ExprNode::Kind::Number) {
        *value = n.number;
        return true;
    }
    if (n.kind == ExprNode::Kind::Neg && n.children[0]->kind == ExprNode::Kind::Number) {
        *value = -n.children[0]->number;
        return true;
    }
    return false;
}

// max(c, ...) with a literal c >= epsilon keeps the argument strictly positive.
bool is_positive_guard(const ExprNode& n) {
    double v = 0.0;
    if (is_number_literal(n, &v)) return v >= kGuardEpsilon;
    if (n.kind != ExprNode::Kind::Call || n.text != "max") return false;
    for (const auto& c : n.children)
        if (is_number_literal(*c, &v) && v >= kGuardEpsilon) return true;
    return false;
}

bool is_nonzero_literal(const ExprNode& n) {
    double v = 0.0;
    return is_number_literal(n, &v) && v != 0.0;
}

class TypeChecker {
public:
    TypeChecker(const std::map<std::string, ValueType>& declared,
                std::vector<std::string>& violations)
        : declared_(declared), violations_(violations) {}

    std::optional<ValueType> infer(const ExprNode& n) {
        using K = ExprNode::Kind;
        switch (n.kind) {
            case K::Number: return ValueType::Number;
            case K::String: return ValueType::String;
            case K::Ref: {
                if (n.text == kErrorName) return ValueType::Number;
                auto it = declared_.find(n.text);
                if (it == declared_.end()) {
                    violations_.push_back("unknown reference \"" + n.text + "\"");
                    return std::nullopt;
                }
                return it->second;
            }
            case K::Neg: return want(*n.children[0], ValueType::Number, "negation");
            case K::Not: {
                want(*n.children[0], ValueType::Bool, "not");
                return ValueType::Bool;
            }
            case K::Binary: return binary(n);
            case K::If: {
                want(*n.children[0], ValueType::Bool, "if condition");
                auto a = infer(*n.children[1]);
                auto b = infer(*n.children[2]);
                if (a && b && *a != *b) {
                    violations_.push_back("if branches have different types (" +
                                          std::string(value_type_name(*a)) + " vs " +
                                          std::string(value_type_name(*b)) + ")");
                    return std::nullopt;
                }
                return a ? a : b;
            }
            case K::Call: return call(n);
            case K::Lookup: return lookup(n);
        }
        return std::nullopt;
    }

    std::optional<ValueType> want(const ExprNode& n, ValueType t, const std::string& ctx) {
        auto got = infer(n);
        if (got && *got != t) {
            violations_.push_back(ctx + " expects " + std::string(value_type_name(t)) + ", got " +
                                  std::string(value_type_name(*got)));
            return std::nullopt;
        }
        return t;
    }

private:
    const std::map<std::string, ValueType>& declared_;
    std::vector<std::string>& violations_;

    std::optional<ValueType> binary(const ExprNode& n) {
        const auto& op = n.text;
        if (op == "and" || op == "or") {
            want(*n.children[0], ValueType::Bool, "'" + op + "'");
            want(*n.children[1], ValueType::Bool, "'" + op + "'");
            return ValueType::Bool;
        }
        if (op == "==" || op == "!=") {
            auto a = infer(*n.children[0]);
            auto b = infer(*n.children[1]);
            if (a && b && *a != *b)
                violations_.push_back("'" + op + "' compares " +
                                      std::string(value_type_name(*a)) + " with " +
                                      std::string(value_type_name(*b)));
            return ValueType::Bool;
        }
        if (op == "<" || op == "<=" || op == ">" || op == ">=") {
            want(*n.children[0], ValueType::Number, "'" + op + "'");
            want(*n.children[1], ValueType::Number, "'" + op + "'");
            return ValueType::Bool;
        }
        want(*n.children[0], ValueType::Number, "'" + op + "'");
        want(*n.children[1], ValueType::Number, "'" + op + "'");
        if (op == "/" && !is_nonzero_literal(*n.children[1]) && !is_positive_guard(*n.children[1]))
            violations_.push_back(
                "unguarded division: divisor must be a nonzero literal or max(epsilon, ...)");
        return ValueType::Number;
    }

    std::optional<ValueType> call(const ExprNode& n) {
        auto it = functions().find(n.text);
        if (it == functions().end()) {
            violations_.push_back("unknown function \"" + n.text + "\"");
            for (const auto& c : n.children) infer(*c);
            return std::nullopt;
        }
        const auto argc = n.children.size();
        if (argc < it->second.min_args || argc > it->second.max_args) {
            violations_.push_back("function \"" + n.text + "\" called with " +
                                  std::to_string(argc) + " arguments");
            return ValueType::Number;
        }
        if (n.text == "parse_number") {
            want(*n.children[0], ValueType::String, "parse_number");
            return ValueType::Number;
        }
        for (const auto& c : n.children) want(*c, ValueType::Number, n.text);
        if ((n.text == "log" || n.text == "sqrt") && !is_positive_guard(*n.children[0]))
            violations_.push_back("unguarded " + n.text +
                                  ": argument must be wrapped in max(epsilon, ...)");
        if (n.text == "pow") {
            double e = 0.0;
            const bool integral_exponent =
                is_number_literal(*n.children[1], &e) && std::floor(e) == e && std::abs(e) <= 16;
            if (!integral_exponent && !is_positive_guard(*n.children[0]))
                violations_.push_back(
                    "unguarded pow: exponent must be a small integer literal or the base "
                    "wrapped in max(epsilon, ...)");
            if (integral_exponent && e < 0 && !is_positive_guard(*n.children[0]))
                violations_.push_back("unguarded pow: negative exponent needs a guarded base");
        }
        return ValueType::Number;
    }

    std::optional<ValueType> lookup(const ExprNode& n) {
        auto key = infer(*n.children[0]);
        if (key && *key != ValueType::String)
            violations_.push_back("lookup key must be a string");
        if (n.children.size() < 2) {
            violations_.push_back("map lookup without default");
            return std::nullopt;
        }
        auto def = infer(*n.children[1]);
        std::optional<ValueType> value_type = def;
        for (const auto& [k, v] : n.entries) {
            ValueType t = std::holds_alternative<double>(v)        ? ValueType::Number
                          : std::holds_alternative<std::string>(v) ? ValueType::String
                                                                   : ValueType::Bool;
            if (value_type && *value_type != t) {
                violations_.push_back("lookup values and default must share one type");
                return std::nullopt;
            }
            value_type = t;
        }
        std::vector<std::string> keys;
        for (const auto& e : n.entries) keys.push_back(e.first);
        std::sort(keys.begin(), keys.end());
        if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
            violations_.push_back("lookup map has duplicate keys");
        return value_type;
    }
};

}  // namespace

std::unique_ptr<ExprNode> parse_expr(std::string_view source) { return Parser(source).parse(); }

std::string print_expr(const ExprNode& node) {
    std::string out;
    print(node, out);
    return out;
}

std::vector<std::string> validate_expr(const ExprNode& node,
                                       const std::map<std::string, ValueType>& declared) {
    std::vector<std::string> violations;
    TypeChecker checker(declared, violations);
    auto t = checker.infer(node);
    if (t && *t != ValueType::Number)
        violations.push_back("expression must produce a number, got " +
                             std::string(value_type_name(*t)));
    return violations;
}

std::vector<std::string> validate_expr(std::string_view source,
                                       const std::map<std::string, ValueType>& declared) {
    try {
        return validate_expr(*parse_expr(source), declared);
    } catch (const ExprInvalid& e) {
        return {e.what()};
    }
}

double parse_number(std::string_view s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) continue;
        std::size_t start = i;
        if (i > 0 && s[i - 1] == '-' &&
            (i == 1 || !std::isalnum(static_cast<unsigned char>(s[i - 2]))))
            start = i - 1;
        std::size_t j = i;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        if (j + 1 < s.size() && s[j] == '.' && std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
            ++j;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        }
        double v = 0.0;
        std::from_chars(s.data() + start, s.data() + j, v);
        return v;
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Compiled evaluation

struct CompiledExpr::Impl {
    struct Node {
        ExprNode::Kind kind;
        std::string op;
        double number = 0.0;
        std::string text;
        int slot = -1;  // -1 means `error`
        std::vector<Node> kids;
        std::unordered_map<std::string, ExprValue> map;
    };
    Node root;

    static Node build(const ExprNode& n, const std::vector<std::string>& slots) {
        Node out;
        out.kind = n.kind;
        out.number = n.number;
        out.text = n.text;
        if (n.kind == ExprNode::Kind::Ref && n.text != kErrorName) {
            auto it = std::find(slots.begin(), slots.end(), n.text);
            if (it == slots.end())
                throw ExprInvalid("unknown reference \"" + n.text + "\" at compile time");
            out.slot = static_cast<int>(it - slots.begin());
        }
        for (const auto& c : n.children) out.kids.push_back(build(*c, slots));
        for (const auto& [k, v] : n.entries) out.map.emplace(k, v);
        return out;
    }

    static double num(const ExprValue& v) {
        if (const auto* d = std::get_if<double>(&v)) return *d;
        throw ExprEvalError("expected a number");
    }
    static bool boolean(const ExprValue& v) {
        if (const auto* b = std::get_if<bool>(&v)) return *b;
        throw ExprEvalError("expected a boolean");
    }
    static double finite(double v, const char* what) {
        if (!std::isfinite(v)) throw ExprEvalError(std::string("non-finite result from ") + what);
        return v;
    }

    ExprValue eval(const Node& n, const std::vector<ExprValue>& slots, double error) const {
        using K = ExprNode::Kind;
        switch (n.kind) {
            case K::Number: return n.number;
            case K::String: return n.text;
            case K::Ref:
                if (n.slot < 0) return error;
                return slots[static_cast<std::size_t>(n.slot)];
            case K::Neg: return -num(eval(n.kids[0], slots, error));
            case K::Not: return !boolean(eval(n.kids[0], slots, error));
            case K::If:
                return boolean(eval(n.kids[0], slots, error)) ? eval(n.kids[1], slots, error)
                                                              : eval(n.kids[2], slots, error);
            case K::Lookup: {
                auto key = eval(n.kids[0], slots, error);
                const auto* s = std::get_if<std::string>(&key);
                if (!s) throw ExprEvalError("lookup key must be a string");
                auto it = n.map.find(*s);
                if (it != n.map.end()) return it->second;
                return eval(n.kids[1], slots, error);
            }
            case K::Binary: return binary(n, slots, error);
            case K::Call: return call(n, slots, error);
        }
        throw ExprEvalError("unreachable");
    }

    ExprValue binary(const Node& n, const std::vector<ExprValue>& slots, double error) const {
        const auto& op = n.text;
        if (op == "and") {
            if (!boolean(eval(n.kids[0], slots, error))) return false;
            return boolean(eval(n.kids[1], slots, error));
        }
        if (op == "or") {
            if (boolean(eval(n.kids[0], slots, error))) return true;
            return boolean(eval(n.kids[1], slots, error));
        }
        auto a = eval(n.kids[0], slots, error);
        auto b = eval(n.kids[1], slots, error);
        if (op == "==") return a == b;
        if (op == "!=") return a != b;
        const double x = num(a);
        const double y = num(b);
        if (op == "<") return x < y;
        if (op == "<=") return x <= y;
        if (op == ">") return x > y;
        if (op == ">=") return x >= y;
        if (op == "+") return finite(x + y, "+");
        if (op == "-") return finite(x - y, "-");
        if (op == "*") return finite(x * y, "*");
        if (op == "/") {
            if (y == 0.0) throw ExprEvalError("division by zero");
            return finite(x / y, "/");
        }
        throw ExprEvalError("unknown operator " + op);
    }

    ExprValue call(const Node& n, const std::vector<ExprValue>& slots, double error) const {
        const auto& f = n.text;
        if (f == "parse_number") {
            auto v = eval(n.kids[0], slots, error);
            const auto* s = std::get_if<std::string>(&v);
            if (!s) throw ExprEvalError("parse_number expects a string");
            return parse_number(*s);
        }
        std::vector<double> args;
        args.reserve(n.kids.size());
        for (const auto& k : n.kids) args.push_back(num(eval(k, slots, error)));
        if (f == "exp") return finite(std::exp(args[0]), "exp");
        if (f == "log") {
            if (args[0] <= 0.0) throw ExprEvalError("log of non-positive value");
            return finite(std::log(args[0]), "log");
        }
        if (f == "sqrt") {
            if (args[0] < 0.0) throw ExprEvalError("sqrt of negative value");
            return std::sqrt(args[0]);
        }
        if (f == "pow") return finite(std::pow(args[0], args[1]), "pow");
        if (f == "abs") return std::abs(args[0]);
        if (f == "floor") return std::floor(args[0]);
        if (f == "min") return *std::min_element(args.begin(), args.end());
        if (f == "max") return *std::max_element(args.begin(), args.end());
        if (f == "clamp") return std::min(std::max(args[0], args[1]), args[2]);
        throw ExprEvalError("unknown function " + f);
    }
};

CompiledExpr::CompiledExpr(const ExprNode& node, const std::vector<std::string>& slot_names)
    : impl_(std::make_unique<Impl>()) {
    impl_->root = Impl::build(node, slot_names);
}

CompiledExpr::CompiledExpr(std::string_view source, const std::vector<std::string>& slot_names)
    : CompiledExpr(*parse_expr(source), slot_names) {}

CompiledExpr::~CompiledExpr() = default;
CompiledExpr::CompiledExpr(CompiledExpr&&) noexcept = default;
CompiledExpr& CompiledExpr::operator=(CompiledExpr&&) noexcept = default;

double CompiledExpr::evaluate(const std::vector<ExprValue>& slots, double error) const {
    auto v = impl_->eval(impl_->root, slots, error);
    return Impl::finite(Impl::num(v), "expression");
}

}  // namespace reposim
