#include "reposim/grader.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <regex>

#include "reposim/errors.hpp"

namespace reposim {

using nlohmann::json;

std::string_view extraction_mode_name(ExtractionMode m) {
    return m == ExtractionMode::StructuredObject ? "structured-object" : "whole-response-fallback";
}

std::string_view grade_rule_name(GradeRule r) {
    switch (r) {
        case GradeRule::Categorical: return "categorical";
        case GradeRule::Integer: return "integer";
        case GradeRule::Continuous: return "continuous";
        case GradeRule::OpenString: return "open-string";
        case GradeRule::Abstention: return "abstention";
    }
    return "abstention";
}

namespace {

// End of the brace-balanced span starting at `open`, skipping string literals.
std::optional<std::size_t> matching_brace(const std::string& s, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) return i;
    }
    return std::nullopt;
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string collapse_ws(const std::string& s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = true;
            continue;
        }
        if (space && !out.empty()) out += ' ';
        space = false;
        out += c;
    }
    return out;
}

std::string truth_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

bool categorical_correct(const std::string& answer, const std::string& truth,
                         const std::vector<std::string>& options) {
    const std::string a = lower(answer);
    const std::string t = lower(truth);
    if (t.empty() || a.find(t) == std::string::npos) return false;
    std::vector<std::size_t> truth_at;
    for (auto p = a.find(t); p != std::string::npos; p = a.find(t, p + 1)) truth_at.push_back(p);
    for (const auto& opt : options) {
        const std::string o = lower(opt);
        if (o == t || o.empty()) continue;
        for (auto p = a.find(o); p != std::string::npos; p = a.find(o, p + 1)) {
            // An option nested inside an occurrence of the answer (json in jsonl) is not a second answer.
            bool covered = false;
            for (auto q : truth_at)
                if (q <= p && p + o.size() <= q + t.size()) covered = true;
            if (!covered) return false;
        }
    }
    return true;
}

}  // namespace

ExtractedAnswer extract_answer(const std::string& response) {
    ExtractedAnswer out;
    out.raw_response = response;
    out.answer_text = response;
    std::optional<json> last;
    std::size_t i = 0;
    while (i < response.size()) {
        if (response[i] != '{') {
            ++i;
            continue;
        }
        const auto end = matching_brace(response, i);
        if (!end) {
            ++i;
            continue;
        }
        const auto parsed = json::parse(response.begin() + static_cast<std::ptrdiff_t>(i),
                                        response.begin() + static_cast<std::ptrdiff_t>(*end) + 1,
                                        nullptr, false);
        if (parsed.is_discarded() || !parsed.is_object()) {
            ++i;
            continue;
        }
        if (parsed.contains("answer")) last = parsed.at("answer");
        i = *end + 1;
    }
    if (last) {
        out.answer_text = truth_text(*last);
        out.mode = ExtractionMode::StructuredObject;
    }
    return out;
}

std::string normalize_answer(const std::string& text) { return lower(trim(text)); }

std::optional<long long> parse_integer_answer(const std::string& text) {
    const std::string t = trim(text);
    const char* b = t.data();
    const char* e = t.data() + t.size();
    if (b != e && *b == '+') ++b;
    long long v = 0;
    auto res = std::from_chars(b, e, v);
    if (b != e && res.ec == std::errc() && res.ptr == e) return v;
    static const std::regex run(R"([-+]?\d+)");
    std::smatch m;
    if (!std::regex_search(t, m, run)) return std::nullopt;
    std::string digits = m.str();
    const char* db = digits.data();
    if (*db == '+') ++db;
    res = std::from_chars(db, digits.data() + digits.size(), v);
    if (res.ec != std::errc()) return std::nullopt;
    return v;
}

std::optional<double> parse_real_answer(const std::string& text) {
    const std::string t = trim(text);
    // Plain decimal only: strtod would also take hex floats, inf and nan.
    if (!t.empty() && t.find_first_not_of("0123456789+-.eE") == std::string::npos) {
        char* end = nullptr;
        const double v = std::strtod(t.c_str(), &end);
        if (end == t.c_str() + t.size() && std::isfinite(v)) return v;
    }
    static const std::regex run(R"([-+]?(?:\d+(?:\.\d*)?|\.\d+))");
    std::smatch m;
    if (!std::regex_search(t, m, run)) return std::nullopt;
    const double v = std::strtod(m.str().c_str(), nullptr);
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

GradeResult grade(const ExtractedAnswer& extracted, const QAItem& item) {
    GradeResult r;
    const std::string norm = normalize_answer(extracted.answer_text);
    const auto& truth = item.ground_truth;
    if (norm == "not possible") {
        r.predicted_not_possible = true;
        r.matched_rule = GradeRule::Abstention;
        r.correct = !truth.possible;
        return r;
    }
    switch (item.answer_kind) {
        case AnswerKind::CategoricalFinite:
        case AnswerKind::ThreeClass: r.matched_rule = GradeRule::Categorical; break;
        case AnswerKind::Integer: r.matched_rule = GradeRule::Integer; break;
        case AnswerKind::Continuous: r.matched_rule = GradeRule::Continuous; break;
        case AnswerKind::OpenString: r.matched_rule = GradeRule::OpenString; break;
    }
    if (!truth.possible) return r;

    switch (item.answer_kind) {
        case AnswerKind::CategoricalFinite:
        case AnswerKind::ThreeClass:
            r.correct = categorical_correct(extracted.answer_text, truth_text(truth.value), item.options);
            break;
        case AnswerKind::Integer: {
            const auto v = parse_integer_answer(extracted.answer_text);
            r.correct = v && truth.value.is_number_integer() && *v == truth.value.get<long long>();
            break;
        }
        case AnswerKind::Continuous: {
            const auto v = parse_real_answer(extracted.answer_text);
            if (!v || !truth.value.is_number()) break;
            const int digits = std::max(1, item.sig_figs - 1);
            r.correct = round_sig(*v, digits) == round_sig(truth.value.get<double>(), digits);
            break;
        }
        case AnswerKind::OpenString: {
            const std::string t = collapse_ws(lower(truth_text(truth.value)));
            r.correct = !t.empty() && collapse_ws(lower(extracted.answer_text)).find(t) != std::string::npos;
            break;
        }
    }
    return r;
}

}  // namespace reposim
