#pragma once

// A small, total expression language for dependent variables.
//
//   expr    := 'if' expr 'then' expr 'else' expr | or
//   or      := and ('or' and)*
//   and     := not ('and' not)*
//   not     := 'not' not | cmp
//   cmp     := sum (('=='|'!='|'<'|'<='|'>'|'>=') sum)?
//   sum     := term (('+'|'-') term)*
//   term    := unary (('*'|'/') unary)*
//   unary   := '-' unary | primary
//   primary := NUMBER | STRING | IDENT | IDENT '(' args ')' | '(' expr ')'
//            | 'lookup' '(' expr ',' '{' STRING ':' literal (',' ...)* '}' ',' expr ')'
//
// Functions: exp log sqrt pow abs min max floor clamp parse_number.
// The identifier `error` is the injected noise term.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace reposim {

enum class ValueType { Number, String, Bool };

std::string_view value_type_name(ValueType t);

using ExprValue = std::variant<double, std::string, bool>;

struct ExprNode {
    enum class Kind {
        Number,
        String,
        Ref,
        Neg,
        Not,
        Binary,  // op in `op`
        If,
        Call,    // function name in `text`
        Lookup,  // children: key, default; entries: the map
    };
    Kind kind = Kind::Number;
    double number = 0.0;
    std::string text;  // literal string, reference name, function name or operator
    std::vector<std::unique_ptr<ExprNode>> children;
    std::vector<std::pair<std::string, ExprValue>> entries;
};

/// Parse errors are reported as ExprInvalid with a character offset.
std::unique_ptr<ExprNode> parse_expr(std::string_view source);

/// Canonical single-line rendering; parse_expr(print_expr(e)) is structurally equal to e.
std::string print_expr(const ExprNode& node);

inline constexpr double kGuardEpsilon = 1e-9;
inline constexpr std::string_view kErrorName = "error";

/// Checks closure over `declared` (plus `error`), arity, typing, domain guards
/// for log/sqrt/division/pow, and that the result is numeric. Returns the list
/// of violations; empty means valid.
std::vector<std::string> validate_expr(const ExprNode& node,
                                       const std::map<std::string, ValueType>& declared);
std::vector<std::string> validate_expr(std::string_view source,
                                       const std::map<std::string, ValueType>& declared);

/// Leading numeric content of a string: the first optionally signed decimal
/// run, e.g. "35°C" -> 35, "pH_4.0" -> 4. Returns 0 when no digit occurs.
double parse_number(std::string_view s);

/// An expression bound to a fixed variable order for repeated evaluation.
class CompiledExpr {
public:
    CompiledExpr(const ExprNode& node, const std::vector<std::string>& slot_names);
    CompiledExpr(std::string_view source, const std::vector<std::string>& slot_names);
    ~CompiledExpr();
    CompiledExpr(CompiledExpr&&) noexcept;
    CompiledExpr& operator=(CompiledExpr&&) noexcept;

    /// `slots` follows the order given at construction; `error` is bound separately.
    /// Throws ExprEvalError on a type error or a non-finite numeric result.
    double evaluate(const std::vector<ExprValue>& slots, double error) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace reposim
