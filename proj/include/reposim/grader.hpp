#pragma once

// Deterministic answer extraction and grading, including the "not possible"
// abstention channel.

#include <optional>
#include <string>

#include "reposim/qaengine.hpp"

namespace reposim {

enum class ExtractionMode { StructuredObject, WholeResponse };
std::string_view extraction_mode_name(ExtractionMode m);

struct ExtractedAnswer {
    std::string raw_response;
    std::string answer_text;
    ExtractionMode mode = ExtractionMode::WholeResponse;
};

/// Last top-level JSON object in the response that has an "answer" key;
/// otherwise the whole response.
ExtractedAnswer extract_answer(const std::string& response);

enum class GradeRule { Categorical, Integer, Continuous, OpenString, Abstention };
std::string_view grade_rule_name(GradeRule r);

struct GradeResult {
    bool correct = false;
    GradeRule matched_rule = GradeRule::Abstention;
    bool predicted_not_possible = false;
};

GradeResult grade(const ExtractedAnswer& extracted, const QAItem& item);

/// Lowercased, trimmed.
std::string normalize_answer(const std::string& text);

/// The numeric parsing steps, exposed for tests: whole-string cast first,
/// then the first maximal signed digit run (with "." for reals).
std::optional<long long> parse_integer_answer(const std::string& text);
std::optional<double> parse_real_answer(const std::string& text);

}  // namespace reposim
