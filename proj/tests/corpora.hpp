#pragma once

// Fixed inputs shared by the unit tests and the acceptance binary: the
// adversarial grading corpus and the golden tool-call list.

#include <string>
#include <vector>

#include "json.hpp"

#include "reposim/qaengine.hpp"
#include "reposim/repospec.hpp"
#include "reposim/seedstream.hpp"

namespace corpora {

using nlohmann::json;

inline reposim::QAItem make_item(reposim::AnswerKind kind, json value, std::vector<std::string> options = {},
                                 int sig_figs = 3) {
    reposim::QAItem item;
    item.id = "t";
    item.answer_kind = kind;
    item.options = std::move(options);
    item.sig_figs = sig_figs;
    item.ground_truth.possible = true;
    item.ground_truth.value = std::move(value);
    return item;
}

inline reposim::QAItem not_possible_item(reposim::AnswerKind kind) {
    auto item = make_item(kind, nullptr);
    item.ground_truth.possible = false;
    item.ground_truth.reason = reposim::NotPossibleReason::EmptyRowSet;
    return item;
}

// Items the corpus is graded against, one per rule.
inline std::vector<reposim::QAItem> grading_items() {
    using reposim::AnswerKind;
    return {
        make_item(AnswerKind::CategoricalFinite, "yes", {"yes", "no"}),
        make_item(AnswerKind::CategoricalFinite, "json", {"csv", "json", "jsonl", "xlsx", "txt", "log"}),
        make_item(AnswerKind::ThreeClass, "no", {"yes", "no", "not possible"}),
        make_item(AnswerKind::Integer, 42),
        make_item(AnswerKind::Integer, -7),
        make_item(AnswerKind::Continuous, 1.23456),
        make_item(AnswerKind::Continuous, -0.000381),
        make_item(AnswerKind::OpenString, "Adaptive Noise in  Neural Codes"),
        not_possible_item(AnswerKind::Continuous),
        not_possible_item(AnswerKind::ThreeClass),
    };
}

inline std::string pick(reposim::RandomStream& s, const std::vector<std::string>& xs) {
    return xs[s.index(xs.size())];
}

// Adversarial responses: wrappers, decoys, nesting, malformed objects.
inline std::string adversarial_response(reposim::RandomStream& s) {
    const std::vector<std::string> bodies = {
        "yes", "no", "Yes.", "YES, definitely", "no, not yes", "json", "jsonl", "the format is json (not jsonl)",
        "42", "+42", "042", "42.0", "about 42 rows", "-7", "- 7", "minus 7", "1.23", "1.235", "1.2", "1.24",
        "1.23456e0", "0x1p0", "inf", "-3.81e-4", "-0.00038", "-.000381", "1,234", "Not Possible",
        "  not   possible ", "not possible.", "NOT POSSIBLE", "adaptive noise in neural codes",
        "ADAPTIVE   NOISE IN\nNEURAL CODES!", "noise", "", "{}", "no answer", "3 or 4", "1e400", ".5",
    };
    const std::string body = pick(s, bodies);
    switch (s.index(9)) {
        case 0: return body;
        case 1: return json{{"answer", body}}.dump();
        case 2: return "Let me think. " + json{{"answer", body}}.dump() + " Done.";
        case 3:
            return json{{"answer", pick(s, bodies)}}.dump() + " then revised: " + json{{"answer", body}}.dump();
        case 4: return "{\"answer\": " + body + "}";  // unquoted, may be valid json for numbers
        case 5: return json{{"meta", {{"answer", "decoy"}}}, {"answer", body}}.dump();
        case 6: return "{\"note\": \"a { brace\", \"answer\": " + json(body).dump() + "} {broken";
        case 7: return "{{\"answer\": " + json(body).dump() + "}";
        default: return "Answer: " + body + " " + json{{"reasoning", "none"}}.dump();
    }
}

// Calls whose envelopes are frozen in tests/golden/toolserver.json. Full
// file reads are stored as digests to keep the fixture small.
inline json golden_calls(const reposim::RepositorySpec& spec) {
    const auto& file = spec.paths.front();
    return json::array({
        {{"tool", "list_directory"}, {"arguments", {{"id", 7}, {"prefix", ""}}}},
        {{"tool", "list_directory"}, {"arguments", {{"id", 7}, {"prefix", ""}, {"depth", 3}}}},
        {{"tool", "list_directory"}, {"arguments", {{"id", "7"}, {"prefix", "/no_such_dir"}}}},
        {{"tool", "read_text_file"}, {"arguments", {{"id", 7}, {"path", file}, {"head", 4}}}},
        {{"tool", "read_text_file"}, {"arguments", {{"id", 7}, {"path", file}, {"tail", 2}}}},
        {{"tool", "read_text_file"}, {"arguments", {{"id", 7}, {"path", "README.md"}}}},
        {{"tool", "read_text_file"}, {"arguments", {{"id", 7}, {"path", file}}}, {"digest", true}},
        {{"tool", "read_binary_file"}, {"arguments", {{"id", 7}, {"path", file}}}, {"digest", true}},
        {{"tool", "read_text_file"}, {"arguments", {{"id", 7}, {"path", "missing.csv"}}}},
        {{"tool", "read_text_file"}, {"arguments", {{"id", -1}, {"path", "x"}}}},
        {{"tool", "list_directory"}, {"arguments", {{"id", 7}, {"prefix", ""}, {"depth", 0}}}},
        {{"tool", "delete_file"}, {"arguments", {{"id", 7}}}},
    });
}

}  // namespace corpora
