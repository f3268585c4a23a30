#include "reposim/qaengine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>

#include "reposim/errors.hpp"
#include "reposim/stats.hpp"

namespace reposim {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Names

namespace {

struct TypeInfo {
    QuestionType type;
    std::string_view id;
    std::string_view category;
    std::string_view label;
};

constexpr TypeInfo kTypes[] = {
    {QuestionType::Readme, "readme", "Repository Metadata", "Readme"},
    {QuestionType::Title, "title", "Repository Metadata", "Title"},
    {QuestionType::Abstract, "abstract", "Repository Metadata", "Abstract"},
    {QuestionType::Extension, "extension", "File Metadata", "Extension"},
    {QuestionType::CountRows, "count_rows", "File Metadata", "Count Rows"},
    {QuestionType::DirPrefix, "dir_prefix", "Directory Traversal", "Prefix"},
    {QuestionType::DirCondition, "dir_condition", "Directory Traversal", "Condition"},
    {QuestionType::UniSingleFile, "uni_single_file", "Univariate Statistics", "Single File"},
    {QuestionType::UniCondition, "uni_condition", "Univariate Statistics", "Condition"},
    {QuestionType::BiStatistic, "bi_statistic", "Bivariate Statistics", "Statistic"},
    {QuestionType::BiHypothesis, "bi_hypothesis", "Bivariate Statistics", "Hypothesis"},
};

const TypeInfo& info(QuestionType t) {
    for (const auto& i : kTypes)
        if (i.type == t) return i;
    throw InternalInconsistency("unknown question type");
}

template <typename E, std::size_t N>
std::string_view enum_name(const std::pair<E, std::string_view> (&table)[N], E v) {
    for (const auto& [e, n] : table)
        if (e == v) return n;
    throw InternalInconsistency("enum value without a name");
}

template <typename E, std::size_t N>
E enum_from(const std::pair<E, std::string_view> (&table)[N], std::string_view name,
            const char* what) {
    for (const auto& [e, n] : table)
        if (n == name) return e;
    throw SchemaError(std::string("unknown ") + what + ": " + std::string(name));
}

constexpr std::pair<AnswerKind, std::string_view> kKinds[] = {
    {AnswerKind::CategoricalFinite, "categorical-finite"},
    {AnswerKind::OpenString, "open-string"},
    {AnswerKind::Integer, "integer"},
    {AnswerKind::Continuous, "continuous"},
    {AnswerKind::ThreeClass, "three-class"},
};

constexpr std::pair<Statistic, std::string_view> kStats[] = {
    {Statistic::None, "none"},         {Statistic::Mean, "mean"},
    {Statistic::Median, "median"},     {Statistic::Variance, "variance"},
    {Statistic::Mode, "mode"},         {Statistic::Pearson, "pearson"},
    {Statistic::ChiSquare, "chi-square"},
};

constexpr std::pair<NotPossibleReason, std::string_view> kReasons[] = {
    {NotPossibleReason::EmptyFileSet, "empty-file-set"},
    {NotPossibleReason::EmptyRowSet, "empty-row-set"},
    {NotPossibleReason::InvalidOperation, "invalid-operation"},
    {NotPossibleReason::ReadmeAbsent, "readme-absent"},
};

constexpr std::pair<RowOp, std::string_view> kOps[] = {
    {RowOp::Equals, "equals"},         {RowOp::OneOf, "one-of"},
    {RowOp::LessThan, "less-than"},    {RowOp::GreaterThan, "greater-than"},
    {RowOp::AtLeast, "at-least"},      {RowOp::AtMost, "at-most"},
    {RowOp::InRange, "in-range"},
};

}  // namespace

const std::vector<QuestionType>& all_question_types() {
    static const std::vector<QuestionType> all = [] {
        std::vector<QuestionType> v;
        for (const auto& i : kTypes) v.push_back(i.type);
        return v;
    }();
    return all;
}

std::string_view question_type_id(QuestionType t) { return info(t).id; }
std::string_view question_category(QuestionType t) { return info(t).category; }
std::string_view question_type_label(QuestionType t) { return info(t).label; }

QuestionType question_type_from_id(std::string_view id) {
    for (const auto& i : kTypes)
        if (i.id == id) return i.type;
    throw SchemaError("unknown question type: " + std::string(id));
}

bool is_stochastic_type(QuestionType t) {
    switch (t) {
        case QuestionType::Readme:
        case QuestionType::Title:
        case QuestionType::Abstract:
        case QuestionType::Extension: return false;
        default: return true;
    }
}

std::string_view answer_kind_name(AnswerKind k) { return enum_name(kKinds, k); }
AnswerKind answer_kind_from_name(std::string_view n) { return enum_from(kKinds, n, "answer kind"); }
std::string_view statistic_name(Statistic s) { return enum_name(kStats, s); }
Statistic statistic_from_name(std::string_view n) { return enum_from(kStats, n, "statistic"); }
std::string_view reason_name(NotPossibleReason r) { return enum_name(kReasons, r); }
NotPossibleReason reason_from_name(std::string_view n) { return enum_from(kReasons, n, "reason"); }
std::string_view row_op_name(RowOp op) { return enum_name(kOps, op); }
RowOp row_op_from_name(std::string_view n) { return enum_from(kOps, n, "row predicate"); }

// ---------------------------------------------------------------------------
// Numbers

double round_sig(double x, int digits) {
    if (x == 0.0 || !std::isfinite(x)) return x;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*e", digits - 1, x);
    return std::strtod(buf, nullptr);
}

std::string format_constant(double x) {
    char buf[512];
    auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed);
    if (res.ec != std::errc()) return format_real(x);
    std::string out(buf, res.ptr);
    if (out == "-0") out = "0";
    return out;
}

namespace {

// Smallest four-significant-figure value strictly above x.
double sig4_above(double x) {
    double r = round_sig(x, 4);
    if (r > x) return r;
    const double mag = (r == 0.0) ? 1e-4 : std::pow(10.0, std::floor(std::log10(std::abs(r))) - 3);
    double up = round_sig(r + mag, 4);
    while (up <= x) up = round_sig(up + mag, 4);
    return up;
}

double sig4_below(double x) { return -sig4_above(-x); }

std::optional<double> numeric_value(const CellValue& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&v)) return *d;
    return std::nullopt;
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

std::string join_phrases(const std::vector<std::string>& parts, const std::string& conj) {
    if (parts.empty()) return "";
    if (parts.size() == 1) return parts[0];
    if (parts.size() == 2) return parts[0] + " " + conj + " " + parts[1];
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += ", ";
        if (i + 1 == parts.size()) out += conj + " ";
        out += parts[i];
    }
    return out;
}

std::string values_phrase(const std::vector<std::string>& values) {
    std::vector<std::string> q;
    for (const auto& v : values) q.push_back(quoted(v));
    if (values.size() == 1) return "is " + q[0];
    return "is one of " + join_phrases(q, "or");
}

std::string path_condition_text(const PathCondition& c) {
    return "the " + quoted(c.name) + " " + values_phrase(c.values);
}

std::string row_condition_text(const RowCondition& c) {
    const std::string head = "the " + quoted(c.name) + " ";
    switch (c.op) {
        case RowOp::Equals:
        case RowOp::OneOf: return head + values_phrase(c.values);
        case RowOp::LessThan: return head + "is less than " + format_constant(c.hi);
        case RowOp::GreaterThan: return head + "is greater than " + format_constant(c.lo);
        case RowOp::AtLeast: return head + "is at least " + format_constant(c.lo);
        case RowOp::AtMost: return head + "is at most " + format_constant(c.hi);
        case RowOp::InRange:
            if (c.lo >= 0.0)
                return head + "is in the range " + format_constant(c.lo) + "-" + format_constant(c.hi);
            return head + "is between " + format_constant(c.lo) + " and " + format_constant(c.hi);
    }
    return head;
}

std::string row_clause(const std::vector<RowCondition>& rows) {
    if (rows.empty()) return "";
    std::vector<std::string> parts;
    for (const auto& c : rows) parts.push_back(row_condition_text(c));
    return "only considering rows where " + join_phrases(parts, "and") + ", ";
}

std::string statistic_question(Statistic s, const std::string& var) {
    switch (s) {
        case Statistic::Mean: return "what is the average value of the " + quoted(var) + " variable?";
        case Statistic::Median: return "what is the median value of the " + quoted(var) + " variable?";
        case Statistic::Variance: return "what is the variance of the " + quoted(var) + " variable?";
        case Statistic::Mode:
            return "what is the most common value of the " + quoted(var) + " variable?";
        default: throw InternalInconsistency("not a univariate statistic");
    }
}

std::string render_template(const QAItem& item) {
    const auto& f = item.filters;
    const auto& t = item.target;
    switch (item.type) {
        case QuestionType::Readme: return "Yes or no, does this repository have a README file?";
        case QuestionType::Title: return "Looking at the README file, what is the project title?";
        case QuestionType::Abstract:
            return "Looking at the README file, what is the project abstract?";
        case QuestionType::Extension:
            return "What is the file extension for the data in this repository?";
        case QuestionType::CountRows:
            return "How many rows of data (excluding headers) are in the file: " + quoted(f.file) + "?";
        case QuestionType::DirPrefix:
            return "How many files in this repository have the prefix: " + quoted(f.prefix) + "?";
        case QuestionType::DirCondition: {
            std::vector<std::string> parts;
            for (const auto& c : f.path_conditions) parts.push_back(path_condition_text(c));
            return "How many files are in this repository where " + join_phrases(parts, "and") + "?";
        }
        case QuestionType::UniSingleFile:
            return "In the file " + quoted(f.file) + ", " + row_clause(f.row_conditions) +
                   statistic_question(t.statistic, t.variables.at(0));
        case QuestionType::UniCondition: {
            std::vector<std::string> parts;
            for (const auto& c : f.path_conditions) parts.push_back(path_condition_text(c));
            std::string out = "Only considering files where " + join_phrases(parts, "and") + ", ";
            if (!f.row_conditions.empty()) out += "and " + row_clause(f.row_conditions);
            return out + statistic_question(t.statistic, t.variables.at(0));
        }
        case QuestionType::BiStatistic:
            return "In the file " + quoted(f.file) + ", " + row_clause(f.row_conditions) +
                   "what is the \"Pearson correlation coefficient\" value between the " +
                   quoted(t.variables.at(0)) + " variable and the " + quoted(t.variables.at(1)) +
                   " variable?";
        case QuestionType::BiHypothesis:
            return "In the file " + quoted(f.file) + ", " + row_clause(f.row_conditions) +
                   "using \"chi-square\" and a p-value of " + format_constant(t.p_threshold) +
                   ", can you reject the null hypothesis (yes/no) that there is no relationship "
                   "between the " +
                   quoted(t.variables.at(0)) + " and " + quoted(t.variables.at(1)) + " variables?";
    }
    throw InternalInconsistency("unhandled question type");
}

bool uses_file(QuestionType t) {
    return t == QuestionType::CountRows || t == QuestionType::UniSingleFile ||
           t == QuestionType::BiStatistic || t == QuestionType::BiHypothesis;
}

}  // namespace

// ---------------------------------------------------------------------------
// Items

std::string QAItem::preamble() const {
    return "If the answer is continuous, use " + std::to_string(sig_figs) + " significant figures.";
}

const std::string& QAItem::variant_text(std::size_t variant) const {
    if (variant == 0) return template_text;
    if (variant > paraphrases.size()) throw InternalInconsistency("no such question variant");
    return paraphrases[variant - 1].text;
}

bool row_condition_holds(const RowCondition& c, const CellValue& v) {
    switch (c.op) {
        case RowOp::Equals:
        case RowOp::OneOf: {
            const auto text = format_cell(v);
            return std::find(c.values.begin(), c.values.end(), text) != c.values.end();
        }
        default: break;
    }
    const auto x = numeric_value(v);
    if (!x) return false;
    switch (c.op) {
        case RowOp::LessThan: return *x < c.hi;
        case RowOp::GreaterThan: return *x > c.lo;
        case RowOp::AtLeast: return *x >= c.lo;
        case RowOp::AtMost: return *x <= c.hi;
        case RowOp::InRange: return *x >= c.lo && *x <= c.hi;
        default: return false;
    }
}

std::shared_ptr<const TableData> TableCache::get(const std::string& path) {
    {
        std::lock_guard lock(mutex_);
        auto it = tables_.find(path);
        if (it != tables_.end()) return it->second;
    }
    auto table = std::make_shared<const TableData>(populate_file(spec_, path));
    std::lock_guard lock(mutex_);
    return tables_.emplace(path, std::move(table)).first->second;
}

// ---------------------------------------------------------------------------
// Ground truth

namespace {

struct Evidence {
    std::vector<bool> path_evaluations;  // empty-file-set
    json files = json::array();          // empty-row-set: per matched file
    std::size_t minimum_rows = 0;
    std::size_t surviving = 0;
    json degenerate;
    std::string invalid_variable;
};

bool path_matches(const RepositorySpec& spec, std::size_t path_index,
                  const std::vector<PathCondition>& conditions,
                  const std::vector<std::size_t>& ph_index) {
    for (std::size_t c = 0; c < conditions.size(); ++c) {
        const auto& value = spec.assignments[path_index][ph_index[c]];
        const auto& vals = conditions[c].values;
        if (std::find(vals.begin(), vals.end(), value) == vals.end()) return false;
    }
    return true;
}

std::vector<std::size_t> placeholder_indices(const RepositorySpec& spec,
                                             const std::vector<PathCondition>& conditions) {
    std::vector<std::size_t> out;
    for (const auto& c : conditions) {
        std::size_t i = 0;
        while (i < spec.placeholders.size() && spec.placeholders[i].name != c.name) ++i;
        if (i == spec.placeholders.size())
            throw InternalInconsistency("question names unknown placeholder " + c.name);
        out.push_back(i);
    }
    return out;
}

const FileVariable& require_variable(const RepositorySpec& spec, const std::string& name) {
    const auto* v = spec.variable(name);
    if (!v) throw InternalInconsistency("question names unknown variable " + name);
    return *v;
}

bool operation_valid(Statistic s, VarKind k) {
    switch (s) {
        case Statistic::Mean:
        case Statistic::Median:
        case Statistic::Variance:
        case Statistic::Pearson: return k != VarKind::Categorical;
        case Statistic::Mode: return k != VarKind::Continuous;
        case Statistic::ChiSquare: return k == VarKind::Categorical;
        case Statistic::None: return true;
    }
    return true;
}

std::size_t minimum_rows(Statistic s) {
    return (s == Statistic::Variance || s == Statistic::Pearson) ? 2 : 1;
}

GroundTruth not_possible(NotPossibleReason r, std::string sub = "") {
    GroundTruth g;
    g.possible = false;
    g.reason = r;
    g.sub_reason = std::move(sub);
    return g;
}

GroundTruth value_truth(json v) {
    GroundTruth g;
    g.value = std::move(v);
    return g;
}

std::shared_ptr<const TableData> table_for(const RepositorySpec& spec, TableCache* cache,
                                           const std::string& path) {
    if (cache) return cache->get(path);
    return std::make_shared<const TableData>(populate_file(spec, path));
}

std::vector<std::size_t> matching_files(const RepositorySpec& spec, const QAItem& item,
                                        Evidence* ev) {
    std::vector<std::size_t> out;
    if (uses_file(item.type)) {
        const auto idx = spec.find_path(item.filters.file);
        if (ev) {
            ev->path_evaluations.assign(spec.paths.size(), false);
            if (idx) ev->path_evaluations[*idx] = true;
        }
        if (idx) out.push_back(*idx);
        return out;
    }
    const auto ph = placeholder_indices(spec, item.filters.path_conditions);
    if (ev) ev->path_evaluations.assign(spec.paths.size(), false);
    for (std::size_t i = 0; i < spec.paths.size(); ++i) {
        if (path_matches(spec, i, item.filters.path_conditions, ph)) {
            out.push_back(i);
            if (ev) ev->path_evaluations[i] = true;
        }
    }
    return out;
}

GroundTruth evaluate(const RepositorySpec& spec, const QAItem& item, TableCache* cache,
                     Evidence* ev) {
    const auto& f = item.filters;
    switch (item.type) {
        case QuestionType::Readme: return value_truth(spec.readme_present ? "yes" : "no");
        case QuestionType::Title:
        case QuestionType::Abstract:
            if (!spec.readme_present) return not_possible(NotPossibleReason::ReadmeAbsent);
            return value_truth(item.type == QuestionType::Title ? spec.project.title
                                                                : spec.project.abstract);
        case QuestionType::Extension: return value_truth(spec.path_template.extension);
        case QuestionType::CountRows: {
            auto files = matching_files(spec, item, ev);
            if (files.empty()) return not_possible(NotPossibleReason::EmptyFileSet);
            return value_truth(static_cast<std::int64_t>(row_count(spec, spec.paths[files[0]])));
        }
        case QuestionType::DirPrefix: {
            if (f.prefix.empty() || f.prefix.back() != '*')
                throw InternalInconsistency("prefix question without trailing wildcard");
            const std::string literal = f.prefix.substr(0, f.prefix.size() - 1);
            std::int64_t n = 0;
            for (const auto& p : spec.paths)
                if (p.compare(0, literal.size(), literal) == 0) ++n;
            if (spec.readme_present && std::string(kReadmeName).compare(0, literal.size(), literal) == 0)
                ++n;
            return value_truth(n);
        }
        case QuestionType::DirCondition:
            return value_truth(static_cast<std::int64_t>(matching_files(spec, item, ev).size()));
        default: break;
    }

    // Statistics over rows.
    const auto& target = item.target;
    std::vector<const FileVariable*> vars;
    for (const auto& name : target.variables) vars.push_back(&require_variable(spec, name));
    for (const auto& rc : f.row_conditions) require_variable(spec, rc.name);
    for (const auto* v : vars) {
        if (!operation_valid(target.statistic, v->kind)) {
            if (ev) ev->invalid_variable = v->name;
            return not_possible(NotPossibleReason::InvalidOperation);
        }
    }

    const auto files = matching_files(spec, item, ev);
    if (files.empty()) return not_possible(NotPossibleReason::EmptyFileSet);

    std::vector<std::vector<CellValue>> picked(vars.size());
    std::size_t surviving = 0;
    for (std::size_t fi : files) {
        const auto table = table_for(spec, cache, spec.paths[fi]);
        std::vector<std::size_t> cond_cols;
        for (const auto& rc : f.row_conditions) cond_cols.push_back(*table->column_index(rc.name));
        std::vector<std::size_t> var_cols;
        for (const auto* v : vars) var_cols.push_back(*table->column_index(v->name));
        std::size_t here = 0;
        for (std::size_t r = 0; r < table->n_rows; ++r) {
            bool keep = true;
            for (std::size_t c = 0; c < cond_cols.size() && keep; ++c)
                keep = row_condition_holds(f.row_conditions[c], table->columns[cond_cols[c]][r]);
            if (!keep) continue;
            ++here;
            for (std::size_t v = 0; v < vars.size(); ++v)
                picked[v].push_back(table->columns[var_cols[v]][r]);
        }
        surviving += here;
        if (ev)
            ev->files.push_back(
                {{"path", spec.paths[fi]}, {"rows", table->n_rows}, {"surviving", here}});
    }
    const std::size_t needed = minimum_rows(target.statistic);
    if (ev) {
        ev->minimum_rows = needed;
        ev->surviving = surviving;
    }
    if (surviving < needed) return not_possible(NotPossibleReason::EmptyRowSet);

    auto as_doubles = [](const std::vector<CellValue>& cells) {
        std::vector<double> out;
        out.reserve(cells.size());
        for (const auto& c : cells) out.push_back(*numeric_value(c));
        return out;
    };
    auto as_strings = [](const std::vector<CellValue>& cells) {
        std::vector<std::string> out;
        out.reserve(cells.size());
        for (const auto& c : cells) out.push_back(format_cell(c));
        return out;
    };

    switch (target.statistic) {
        case Statistic::Mean: return value_truth(mean(as_doubles(picked[0])));
        case Statistic::Median: return value_truth(median(as_doubles(picked[0])));
        case Statistic::Variance: return value_truth(sample_variance(as_doubles(picked[0])));
        case Statistic::Mode:
            if (vars[0]->kind == VarKind::DiscreteInteger) {
                std::vector<std::int64_t> xs;
                for (const auto& c : picked[0]) xs.push_back(std::get<std::int64_t>(c));
                return value_truth(mode(xs));
            }
            return value_truth(mode(as_strings(picked[0])));
        case Statistic::Pearson: {
            const auto xs = as_doubles(picked[0]);
            const auto ys = as_doubles(picked[1]);
            const auto r = pearson(xs, ys);
            if (!r) {
                if (ev)
                    ev->degenerate = {{"statistic", "pearson"},
                                      {"distinct", {std::set<double>(xs.begin(), xs.end()).size(),
                                                    std::set<double>(ys.begin(), ys.end()).size()}}};
                return not_possible(NotPossibleReason::EmptyRowSet, "degenerate");
            }
            return value_truth(*r);
        }
        case Statistic::ChiSquare: {
            const auto table = contingency(as_strings(picked[0]), as_strings(picked[1]));
            const auto decision = chi_square_decision(table, target.p_threshold);
            if (!decision) {
                if (ev)
                    ev->degenerate = {{"statistic", "chi-square"},
                                      {"row_categories", table.row_labels.size()},
                                      {"col_categories", table.col_labels.size()}};
                return not_possible(NotPossibleReason::EmptyRowSet, "degenerate");
            }
            return value_truth(*decision);
        }
        case Statistic::None: break;
    }
    throw InternalInconsistency("statistic question without a statistic");
}

}  // namespace

GroundTruth compute_ground_truth(const RepositorySpec& spec, const QAItem& item, TableCache* cache) {
    return evaluate(spec, item, cache, nullptr);
}

std::optional<std::string> chi_square_decision(const ContingencyTable& table, double p_threshold) {
    const auto res = chi_square_test(table);
    if (!res) return std::nullopt;
    return res->p_value <= p_threshold ? "yes" : "no";
}

json certify_unanswerable(const RepositorySpec& spec, const QAItem& item, TableCache* cache) {
    if (item.ground_truth.possible || !item.ground_truth.reason)
        throw CertificationFailure(item.id + ": item is labelled answerable");
    Evidence ev;
    const auto truth = evaluate(spec, item, cache, &ev);
    const auto reason = *item.ground_truth.reason;
    auto fail = [&](const std::string& why) {
        throw CertificationFailure(item.id + ": " + why);
    };
    if (truth.possible || truth.reason != item.ground_truth.reason ||
        truth.sub_reason != item.ground_truth.sub_reason)
        fail("recomputation disagrees with the stored label");

    json cert = {{"reason", reason_name(reason)}};
    switch (reason) {
        case NotPossibleReason::ReadmeAbsent:
            if (spec.readme_present) fail("README is present");
            cert["readme_present"] = false;
            break;
        case NotPossibleReason::InvalidOperation: {
            const auto& v = require_variable(spec, ev.invalid_variable);
            if (operation_valid(item.target.statistic, v.kind)) fail("operation is valid");
            cert["variable"] = v.name;
            cert["kind"] = kind_name(v.kind);
            cert["operation"] = statistic_name(item.target.statistic);
            break;
        }
        case NotPossibleReason::EmptyFileSet: {
            std::size_t matches = 0;
            for (bool b : ev.path_evaluations) matches += b ? 1 : 0;
            if (matches != 0) fail("predicate matches a file");
            if (uses_file(item.type))
                cert["predicate"] = {{"file", item.filters.file}};
            else {
                json conds = json::array();
                for (const auto& c : item.filters.path_conditions)
                    conds.push_back({{"name", c.name}, {"values", c.values}});
                cert["predicate"] = {{"path_conditions", conds}};
            }
            cert["paths_checked"] = spec.paths.size();
            cert["matches"] = matches;
            cert["evaluations"] = ev.path_evaluations;
            break;
        }
        case NotPossibleReason::EmptyRowSet:
            if (ev.files.empty()) fail("no file was evaluated");
            if (truth.sub_reason.empty() && ev.surviving >= ev.minimum_rows)
                fail("enough rows survive the filters");
            cert["files"] = ev.files;
            cert["minimum_rows"] = ev.minimum_rows;
            cert["total_surviving"] = ev.surviving;
            if (!truth.sub_reason.empty()) {
                if (ev.degenerate.is_null()) fail("degenerate label without evidence");
                cert["sub_reason"] = truth.sub_reason;
                cert["degenerate"] = ev.degenerate;
            }
            break;
    }
    return cert;
}

// ---------------------------------------------------------------------------
// Generation

namespace {

struct Drafter {
    const RepositorySpec& spec;
    RandomStream& s;
    TableCache* cache;

    bool coin(double p) { return s.uniform() < p; }

    template <typename T>
    const T& pick(const std::vector<T>& xs) {
        return xs[s.index(xs.size())];
    }

    std::vector<const FileVariable*> analyzable() const {
        std::vector<const FileVariable*> out;
        for (const auto& v : spec.variables)
            if (v.role == VarRole::Independent || v.role == VarRole::Dependent) out.push_back(&v);
        return out;
    }

    std::vector<const FileVariable*> of_kind(bool categorical) const {
        std::vector<const FileVariable*> out;
        for (const auto* v : analyzable())
            if ((v->kind == VarKind::Categorical) == categorical) out.push_back(v);
        return out;
    }

    std::string random_existing_path() { return pick(spec.paths); }

    std::vector<std::string> random_tuple() {
        std::vector<std::string> t;
        for (const auto& ph : spec.placeholders) t.push_back(pick(ph.values));
        return t;
    }

    std::optional<std::vector<std::string>> missing_tuple() {
        if (spec.cross_product_size <= spec.paths.size()) return std::nullopt;
        for (int i = 0; i < 64; ++i) {
            auto t = random_tuple();
            if (!spec.find_path(render_path(spec.path_template, spec.placeholders, t))) return t;
        }
        return std::nullopt;
    }

    std::optional<std::string> missing_path() {
        auto t = missing_tuple();
        if (!t) return std::nullopt;
        return render_path(spec.path_template, spec.placeholders, *t);
    }

    std::vector<std::size_t> choose_placeholders(std::size_t k) {
        std::vector<std::size_t> idx(spec.placeholders.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + s.index(idx.size() - i)]);
        idx.resize(k);
        std::sort(idx.begin(), idx.end());
        return idx;
    }

    PathCondition condition_from(std::size_t ph, const std::string& anchor, bool allow_one_of) {
        const auto& p = spec.placeholders[ph];
        PathCondition c{p.name, {anchor}};
        if (allow_one_of && p.values.size() > 2 && coin(0.4)) {
            std::set<std::string> chosen{anchor};
            const std::size_t want = 2 + s.index(std::min<std::size_t>(2, p.values.size() - 2));
            while (chosen.size() < want + 1 && chosen.size() < p.values.size()) chosen.insert(pick(p.values));
            c.values.clear();
            for (const auto& v : p.values)
                if (chosen.count(v)) c.values.push_back(v);
        }
        return c;
    }

    std::vector<PathCondition> path_conditions_from(const std::vector<std::string>& tuple,
                                                    bool allow_one_of, std::size_t max_k = 3) {
        const std::size_t cap = std::min<std::size_t>(max_k, spec.placeholders.size());
        const std::size_t k = 1 + s.index(cap);
        std::vector<PathCondition> out;
        for (std::size_t ph : choose_placeholders(k))
            out.push_back(condition_from(ph, tuple[ph], allow_one_of));
        return out;
    }

    // Conditions that no file satisfies, built from a combination absent from the repository.
    std::optional<std::vector<PathCondition>> empty_path_conditions() {
        const auto ph_count = spec.placeholders.size();
        for (int attempt = 0; attempt < 30; ++attempt) {
            auto t = missing_tuple();
            if (!t) return std::nullopt;
            const std::size_t k = std::min<std::size_t>(ph_count, 2 + s.index(2));
            std::vector<PathCondition> conds;
            for (std::size_t ph : choose_placeholders(k)) conds.push_back({spec.placeholders[ph].name, {(*t)[ph]}});
            const auto idx = placeholder_indices(spec, conds);
            bool any = false;
            for (std::size_t i = 0; i < spec.paths.size() && !any; ++i) any = path_matches(spec, i, conds, idx);
            if (!any) return conds;
        }
        return std::nullopt;
    }

    std::vector<std::size_t> files_matching(const std::vector<PathCondition>& conds) {
        const auto idx = placeholder_indices(spec, conds);
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < spec.paths.size(); ++i)
            if (path_matches(spec, i, conds, idx)) out.push_back(i);
        return out;
    }

    // Pooled column values over a few of the given files, used to place thresholds.
    std::vector<CellValue> column_values(const std::vector<std::size_t>& files, const std::string& name) {
        std::vector<CellValue> out;
        const std::size_t cap = 24;
        const std::size_t step = files.size() > cap ? files.size() / cap : 1;
        for (std::size_t i = 0; i < files.size(); i += step) {
            const auto table = table_for(spec, cache, spec.paths[files[i]]);
            const auto& col = table->columns[*table->column_index(name)];
            out.insert(out.end(), col.begin(), col.end());
        }
        return out;
    }

    RowCondition categorical_condition(const FileVariable& v, const std::vector<CellValue>& values) {
        std::vector<std::string> distinct;
        {
            std::set<std::string> seen;
            for (const auto& c : values) seen.insert(format_cell(c));
            distinct.assign(seen.begin(), seen.end());
        }
        const std::string anchor = format_cell(pick(values));
        RowCondition c{v.name, RowOp::Equals, {anchor}, 0.0, 0.0};
        if (distinct.size() > 2 && coin(0.4)) {
            std::set<std::string> chosen{anchor};
            const std::size_t want = 2 + s.index(std::min<std::size_t>(2, distinct.size() - 2));
            while (chosen.size() < want) chosen.insert(pick(distinct));
            c.op = RowOp::OneOf;
            c.values.clear();
            // Declared order for categoricals, numeric order for integers.
            if (v.dist && std::holds_alternative<Categorical>(*v.dist)) {
                for (const auto& d : std::get<Categorical>(*v.dist).values)
                    if (chosen.count(d)) c.values.push_back(d);
            } else {
                std::vector<std::int64_t> ints;
                for (const auto& x : chosen) ints.push_back(std::stoll(x));
                std::sort(ints.begin(), ints.end());
                for (auto x : ints) c.values.push_back(std::to_string(x));
            }
        }
        return c;
    }

    RowCondition numeric_condition(const FileVariable& v, const std::vector<CellValue>& values) {
        std::vector<double> xs;
        for (const auto& c : values) xs.push_back(*numeric_value(c));
        std::sort(xs.begin(), xs.end());
        auto q = [&](double p) { return xs[static_cast<std::size_t>(p * static_cast<double>(xs.size() - 1))]; };
        static const RowOp ops[] = {RowOp::LessThan, RowOp::GreaterThan, RowOp::AtLeast, RowOp::AtMost,
                                    RowOp::InRange};
        RowCondition c{v.name, ops[s.index(5)], {}, 0.0, 0.0};
        const double t = round_sig(q(0.15 + 0.7 * s.uniform()), 4);
        switch (c.op) {
            case RowOp::LessThan:
            case RowOp::AtMost: c.hi = t; break;
            case RowOp::GreaterThan:
            case RowOp::AtLeast: c.lo = t; break;
            default: {
                const double q1 = 0.05 + 0.45 * s.uniform();
                const double q2 = std::min(0.95, q1 + 0.2 + 0.3 * s.uniform());
                c.lo = round_sig(q(q1), 4);
                c.hi = round_sig(q(q2), 4);
                if (c.lo > c.hi) std::swap(c.lo, c.hi);
            }
        }
        return c;
    }

    RowCondition row_condition(const FileVariable& v, const std::vector<std::size_t>& files) {
        const auto values = column_values(files, v.name);
        if (v.kind == VarKind::Categorical) return categorical_condition(v, values);
        if (v.kind == VarKind::DiscreteInteger && coin(0.4)) return categorical_condition(v, values);
        return numeric_condition(v, values);
    }

    // A numeric predicate beyond the observed range of every given file.
    RowCondition impossible_condition(const std::vector<std::size_t>& files,
                                      const std::vector<std::string>& avoid) {
        std::vector<const FileVariable*> numeric;
        for (const auto* v : of_kind(false))
            if (std::find(avoid.begin(), avoid.end(), v->name) == avoid.end()) numeric.push_back(v);
        if (numeric.empty()) numeric = of_kind(false);
        const auto& v = *pick(numeric);
        double lo = INFINITY, hi = -INFINITY;
        for (std::size_t fi : files) {
            const auto table = table_for(spec, cache, spec.paths[fi]);
            for (const auto& cell : table->columns[*table->column_index(v.name)]) {
                const double x = *numeric_value(cell);
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
        }
        if (coin(0.5)) return {v.name, RowOp::GreaterThan, {}, sig4_above(hi), 0.0};
        return {v.name, RowOp::LessThan, {}, 0.0, sig4_below(lo)};
    }

    std::vector<RowCondition> row_conditions(const std::vector<std::size_t>& files,
                                             const std::vector<std::string>& exclude,
                                             std::size_t max_n) {
        static const double weights[] = {0.3, 0.35, 0.25, 0.1};
        double u = s.uniform();
        std::size_t n = 0;
        while (n < 3 && u >= weights[n]) u -= weights[n++];
        n = std::min(n, max_n);
        std::vector<const FileVariable*> pool;
        for (const auto* v : analyzable())
            if (std::find(exclude.begin(), exclude.end(), v->name) == exclude.end()) pool.push_back(v);
        n = std::min(n, pool.size());
        for (std::size_t i = 0; i < n; ++i) std::swap(pool[i], pool[i + s.index(pool.size() - i)]);
        std::vector<RowCondition> out;
        for (std::size_t i = 0; i < n; ++i) out.push_back(row_condition(*pool[i], files));
        return out;
    }
};

enum class Mechanism { Natural, MissingFiles, EmptyRows, InvalidOp };

void choose_target(Drafter& d, QAItem& item, bool invalid) {
    auto& t = item.target;
    const auto cats = d.of_kind(true);
    const auto nums = d.of_kind(false);
    switch (item.type) {
        case QuestionType::UniSingleFile:
        case QuestionType::UniCondition: {
            static const Statistic spread[] = {Statistic::Mean, Statistic::Median, Statistic::Variance};
            if (invalid) {
                std::vector<const FileVariable*> pool = cats;
                for (const auto* v : nums)
                    if (v->kind == VarKind::Continuous) pool.push_back(v);
                const auto* v = d.pick(pool);
                t.variables = {v->name};
                t.statistic = v->kind == VarKind::Categorical ? spread[d.s.index(3)] : Statistic::Mode;
            } else {
                const auto all = d.analyzable();
                const auto* v = d.pick(all);
                t.variables = {v->name};
                if (v->kind == VarKind::Categorical)
                    t.statistic = Statistic::Mode;
                else if (v->kind == VarKind::Continuous)
                    t.statistic = spread[d.s.index(3)];
                else {
                    static const Statistic any[] = {Statistic::Mean, Statistic::Median,
                                                    Statistic::Variance, Statistic::Mode};
                    t.statistic = any[d.s.index(4)];
                }
            }
            break;
        }
        case QuestionType::BiStatistic: {
            t.statistic = Statistic::Pearson;
            if ((invalid || nums.size() < 2) && !cats.empty()) {
                std::string a = d.pick(cats)->name, b = d.pick(nums)->name;
                if (d.coin(0.5)) std::swap(a, b);
                t.variables = {a, b};
            } else {
                auto pool = nums;
                const std::size_t i = d.s.index(pool.size());
                std::swap(pool[0], pool[i]);
                const std::size_t j = pool.size() > 1 ? 1 + d.s.index(pool.size() - 1) : 0;
                t.variables = {pool[0]->name, pool[j]->name};
            }
            break;
        }
        case QuestionType::BiHypothesis: {
            t.statistic = Statistic::ChiSquare;
            t.p_threshold = d.coin(0.5) ? 0.01 : 0.05;
            if (invalid || cats.size() < 2) {
                std::string a = cats.empty() ? d.pick(nums)->name : d.pick(cats)->name;
                std::string b = d.pick(nums)->name;
                if (a == b) b = nums.size() > 1 ? (nums[0]->name == a ? nums[1]->name : nums[0]->name) : b;
                if (d.coin(0.5)) std::swap(a, b);
                t.variables = {a, b};
            } else {
                auto pool = cats;
                const std::size_t i = d.s.index(pool.size());
                std::swap(pool[0], pool[i]);
                const std::size_t j = 1 + d.s.index(pool.size() - 1);
                t.variables = {pool[0]->name, pool[j]->name};
            }
            break;
        }
        default: break;
    }
}

void set_answer_kind(const RepositorySpec& spec, QAItem& item) {
    item.options.clear();
    switch (item.type) {
        case QuestionType::Readme:
            item.answer_kind = AnswerKind::CategoricalFinite;
            item.options = {"yes", "no"};
            return;
        case QuestionType::Title:
        case QuestionType::Abstract: item.answer_kind = AnswerKind::OpenString; return;
        case QuestionType::Extension:
            item.answer_kind = AnswerKind::CategoricalFinite;
            item.options = file_extensions();
            return;
        case QuestionType::CountRows:
        case QuestionType::DirPrefix:
        case QuestionType::DirCondition: item.answer_kind = AnswerKind::Integer; return;
        case QuestionType::BiStatistic: item.answer_kind = AnswerKind::Continuous; return;
        case QuestionType::BiHypothesis:
            item.answer_kind = AnswerKind::ThreeClass;
            item.options = {"yes", "no", "not possible"};
            return;
        default: break;
    }
    const auto* v = spec.variable(item.target.variables.at(0));
    if (item.target.statistic != Statistic::Mode || !v || v->kind == VarKind::Continuous) {
        item.answer_kind = AnswerKind::Continuous;
    } else if (v->kind == VarKind::DiscreteInteger) {
        item.answer_kind = AnswerKind::Integer;
    } else {
        item.answer_kind = AnswerKind::CategoricalFinite;
        if (v->dist && std::holds_alternative<Categorical>(*v->dist))
            item.options = std::get<Categorical>(*v->dist).values;
    }
}

std::vector<Mechanism> unanswerable_mechanisms(Drafter& d, QuestionType type) {
    std::vector<Mechanism> m;
    const bool can_miss = d.spec.cross_product_size > d.spec.paths.size();
    switch (type) {
        case QuestionType::CountRows:
            if (can_miss) m.push_back(Mechanism::MissingFiles);
            break;
        case QuestionType::UniSingleFile:
        case QuestionType::UniCondition:
        case QuestionType::BiStatistic:
        case QuestionType::BiHypothesis:
            if (can_miss) m.push_back(Mechanism::MissingFiles);
            m.push_back(Mechanism::EmptyRows);
            if (type != QuestionType::BiStatistic || !d.of_kind(true).empty())
                m.push_back(Mechanism::InvalidOp);
            break;
        default: break;
    }
    return m;
}

void draft(Drafter& d, QAItem& item, std::optional<bool> want) {
    item.filters = {};
    item.target = {};
    Mechanism mech = Mechanism::Natural;
    if (want && !*want) {
        const auto ms = unanswerable_mechanisms(d, item.type);
        if (!ms.empty()) mech = d.pick(ms);
    }
    auto& f = item.filters;
    switch (item.type) {
        case QuestionType::Readme:
        case QuestionType::Title:
        case QuestionType::Abstract:
        case QuestionType::Extension: return;
        case QuestionType::CountRows: {
            std::optional<std::string> missing;
            if (mech == Mechanism::MissingFiles) missing = d.missing_path();
            f.file = missing ? *missing : d.random_existing_path();
            return;
        }
        case QuestionType::DirPrefix: {
            // Cut a path (from the repository or the wider template space) inside its text.
            std::string base = d.coin(0.8) ? d.random_existing_path()
                                           : render_path(d.spec.path_template, d.spec.placeholders,
                                                         d.random_tuple());
            const std::size_t stem = base.size() - d.spec.path_template.extension.size() - 1;
            const std::size_t cut = 1 + d.s.index(std::max<std::size_t>(1, stem - 1));
            f.prefix = base.substr(0, cut) + "*";
            return;
        }
        case QuestionType::DirCondition: {
            if (d.coin(0.25)) {
                if (auto conds = d.empty_path_conditions()) {
                    f.path_conditions = *conds;
                    return;
                }
            }
            const auto anchor = d.spec.assignments[d.s.index(d.spec.paths.size())];
            f.path_conditions = d.path_conditions_from(anchor, true);
            return;
        }
        default: break;
    }

    choose_target(d, item, mech == Mechanism::InvalidOp);
    std::vector<std::size_t> files;
    if (uses_file(item.type)) {
        std::optional<std::string> missing;
        if (mech == Mechanism::MissingFiles) missing = d.missing_path();
        f.file = missing ? *missing : d.random_existing_path();
        if (auto idx = d.spec.find_path(f.file)) files.push_back(*idx);
    } else {
        std::optional<std::vector<PathCondition>> empty;
        if (mech == Mechanism::MissingFiles) empty = d.empty_path_conditions();
        if (empty) {
            f.path_conditions = *empty;
        } else {
            const auto anchor = d.spec.assignments[d.s.index(d.spec.paths.size())];
            f.path_conditions = d.path_conditions_from(anchor, true);
        }
        files = d.files_matching(f.path_conditions);
    }
    // Thresholds come from the selected files, or from a stand-in file when none match.
    std::vector<std::size_t> source = files;
    if (source.empty()) source.push_back(d.s.index(d.spec.paths.size()));

    std::vector<std::string> exclude;
    std::size_t max_n = 3;
    if (item.type == QuestionType::BiHypothesis) {
        exclude = item.target.variables;
        max_n = 2;
    }
    f.row_conditions = d.row_conditions(source, exclude, max_n);
    if (mech == Mechanism::EmptyRows) {
        auto impossible = d.impossible_condition(source, item.target.variables);
        const std::size_t at = d.s.index(f.row_conditions.size() + 1);
        f.row_conditions.insert(f.row_conditions.begin() + static_cast<std::ptrdiff_t>(at), impossible);
    }
}

}  // namespace

QAItem generate_question(const RepositorySpec& spec, QuestionType type, std::uint64_t question_seed,
                         std::optional<bool> want_answerable, TableCache* cache) {
    std::optional<TableCache> local;
    if (!cache) cache = &local.emplace(spec);

    QAItem item;
    item.id = "r" + std::to_string(spec.master_seed) + "-" + std::string(question_type_id(type));
    item.repo_seed = spec.master_seed;
    item.type = type;
    item.question_seed = question_seed;
    {
        auto sf = RandomStream::for_stage(question_seed, "sig_figs");
        item.sig_figs = 2 + static_cast<int>(sf.index(3));
    }
    constexpr int kMaxDraws = 20;
    for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
        auto s = RandomStream::for_stage(question_seed, "attempt/" + std::to_string(attempt));
        Drafter d{spec, s, cache};
        draft(d, item, want_answerable);
        item.ground_truth = evaluate(spec, item, cache, nullptr);
        if (!want_answerable || item.ground_truth.possible == *want_answerable) break;
    }
    set_answer_kind(spec, item);
    item.template_text = render_template(item);
    item.certificate = nullptr;
    if (!item.ground_truth.possible) item.certificate = certify_unanswerable(spec, item, cache);
    return item;
}

// ---------------------------------------------------------------------------
// Paraphrase

std::string path_masked_text(const QAItem& item) {
    std::string text = item.template_text;
    if (!uses_file(item.type) || item.filters.file.empty()) return text;
    const std::string& path = item.filters.file;
    std::size_t pos = 0;
    while ((pos = text.find(path, pos)) != std::string::npos) {
        text.replace(pos, path.size(), "{path}");
        pos += 6;
    }
    return text;
}

std::string paraphrase_item(const QAItem& item, const RepositorySpec& spec, Generator& generator,
                            const GenerationParams& params, int variant) {
    const std::string masked = path_masked_text(item);
    json variables = json::array();
    for (const auto& ph : spec.placeholders)
        variables.push_back({{"name", ph.name}, {"description", ph.description}});
    for (const auto& v : spec.variables)
        variables.push_back({{"name", v.name}, {"description", v.description}});
    GenerationRequest req;
    req.stage = Stage::Paraphrase;
    req.payload = {{"text", masked},
                   {"project",
                    {{"title", spec.project.title},
                     {"hypothesis", spec.project.hypothesis},
                     {"setup", spec.project.setup_text},
                     {"variables", variables}}}};
    req.seed_tag = {spec.master_seed, "paraphrase/" + item.id + "/" + std::to_string(variant)};
    json resp;
    try {
        resp = generator.generate(req, params);
    } catch (const SchemaViolation& e) {
        throw ParaphraseContract(item.id + ": " + e.what());
    }
    std::string text = resp.at("text").get<std::string>();
    const bool had_token = masked.find("{path}") != std::string::npos;
    if (had_token && text.find("{path}") == std::string::npos)
        throw ParaphraseContract(item.id + ": paraphrase dropped the {path} token");
    if (had_token) {
        std::size_t pos = 0;
        while ((pos = text.find("{path}", pos)) != std::string::npos) {
            text.replace(pos, 6, item.filters.file);
            pos += item.filters.file.size();
        }
    }
    return text;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json truth_json(const GroundTruth& g) {
    if (g.possible) return {{"possible", true}, {"value", g.value}};
    json j = {{"possible", false}, {"reason", reason_name(*g.reason)}};
    if (!g.sub_reason.empty()) j["sub_reason"] = g.sub_reason;
    return j;
}

GroundTruth truth_from(const json& j) {
    GroundTruth g;
    g.possible = j.at("possible").get<bool>();
    if (g.possible) {
        g.value = j.at("value");
    } else {
        g.reason = reason_from_name(j.at("reason").get<std::string>());
        g.sub_reason = j.value("sub_reason", "");
    }
    return g;
}

json row_json(const RowCondition& c) {
    json j = {{"name", c.name}, {"op", row_op_name(c.op)}};
    switch (c.op) {
        case RowOp::Equals:
        case RowOp::OneOf: j["values"] = c.values; break;
        case RowOp::LessThan:
        case RowOp::AtMost: j["hi"] = c.hi; break;
        case RowOp::GreaterThan:
        case RowOp::AtLeast: j["lo"] = c.lo; break;
        case RowOp::InRange:
            j["lo"] = c.lo;
            j["hi"] = c.hi;
            break;
    }
    return j;
}

RowCondition row_from(const json& j) {
    RowCondition c;
    c.name = j.at("name").get<std::string>();
    c.op = row_op_from_name(j.at("op").get<std::string>());
    if (j.contains("values")) c.values = j.at("values").get<std::vector<std::string>>();
    c.lo = j.value("lo", 0.0);
    c.hi = j.value("hi", 0.0);
    return c;
}

}  // namespace

void to_json(json& j, const QAItem& item) {
    json paths = json::array();
    for (const auto& c : item.filters.path_conditions)
        paths.push_back({{"name", c.name}, {"values", c.values}});
    json rows = json::array();
    for (const auto& c : item.filters.row_conditions) rows.push_back(row_json(c));
    json para = json::array();
    for (const auto& p : item.paraphrases) para.push_back({{"model_id", p.model_id}, {"text", p.text}});
    json target = {{"statistic", statistic_name(item.target.statistic)},
                   {"variables", item.target.variables}};
    if (item.type == QuestionType::BiHypothesis) target["p_threshold"] = item.target.p_threshold;
    j = {{"id", item.id},
         {"repo_seed", item.repo_seed},
         {"category", question_category(item.type)},
         {"type", question_type_id(item.type)},
         {"question_seed", item.question_seed},
         {"template_text", item.template_text},
         {"paraphrases", para},
         {"target", target},
         {"filters",
          {{"file", item.filters.file},
           {"prefix", item.filters.prefix},
           {"path_conditions", paths},
           {"row_conditions", rows}}},
         {"answer_kind", answer_kind_name(item.answer_kind)},
         {"options", item.options},
         {"sig_figs", item.sig_figs},
         {"ground_truth", truth_json(item.ground_truth)},
         {"certificate", item.certificate}};
}

void from_json(const json& j, QAItem& item) {
    item.id = j.at("id").get<std::string>();
    item.repo_seed = j.at("repo_seed").get<std::uint64_t>();
    item.type = question_type_from_id(j.at("type").get<std::string>());
    item.question_seed = j.at("question_seed").get<std::uint64_t>();
    item.template_text = j.at("template_text").get<std::string>();
    item.paraphrases.clear();
    for (const auto& p : j.at("paraphrases"))
        item.paraphrases.push_back({p.at("model_id").get<std::string>(), p.at("text").get<std::string>()});
    const auto& t = j.at("target");
    item.target.statistic = statistic_from_name(t.at("statistic").get<std::string>());
    item.target.variables = t.at("variables").get<std::vector<std::string>>();
    item.target.p_threshold = t.value("p_threshold", 0.0);
    const auto& f = j.at("filters");
    item.filters.file = f.value("file", "");
    item.filters.prefix = f.value("prefix", "");
    item.filters.path_conditions.clear();
    for (const auto& c : f.at("path_conditions"))
        item.filters.path_conditions.push_back(
            {c.at("name").get<std::string>(), c.at("values").get<std::vector<std::string>>()});
    item.filters.row_conditions.clear();
    for (const auto& c : f.at("row_conditions")) item.filters.row_conditions.push_back(row_from(c));
    item.answer_kind = answer_kind_from_name(j.at("answer_kind").get<std::string>());
    item.options = j.value("options", std::vector<std::string>{});
    item.sig_figs = j.at("sig_figs").get<int>();
    item.ground_truth = truth_from(j.at("ground_truth"));
    item.certificate = j.value("certificate", json());
}

// ---------------------------------------------------------------------------
// Batches

std::map<QuestionType, int> default_type_counts() {
    return {{QuestionType::Readme, 16},        {QuestionType::Title, 13},
            {QuestionType::Abstract, 16},      {QuestionType::Extension, 14},
            {QuestionType::CountRows, 82},     {QuestionType::DirPrefix, 57},
            {QuestionType::DirCondition, 53},  {QuestionType::UniSingleFile, 55},
            {QuestionType::UniCondition, 61},  {QuestionType::BiStatistic, 64},
            {QuestionType::BiHypothesis, 69}};
}

void to_json(json& j, const BatchConfig& c) {
    json counts = json::object();
    for (const auto& [t, n] : c.type_counts) counts[std::string(question_type_id(t))] = n;
    j = {{"seed_first", c.seed_first},
         {"seed_last", c.seed_last},
         {"per_repo", c.per_repo},
         {"type_counts", counts},
         {"target_answerable", c.target_answerable},
         {"batch_seed", c.batch_seed},
         {"paraphrase_models", c.paraphrase_models}};
}

void from_json(const json& j, BatchConfig& c) {
    c = BatchConfig{};
    c.seed_first = j.value("seed_first", c.seed_first);
    c.seed_last = j.value("seed_last", c.seed_last);
    c.per_repo = j.value("per_repo", c.per_repo);
    c.type_counts.clear();
    if (j.contains("type_counts"))
        for (const auto& [k, v] : j.at("type_counts").items())
            c.type_counts[question_type_from_id(k)] = v.get<int>();
    c.target_answerable = j.value("target_answerable", c.target_answerable);
    c.batch_seed = j.value("batch_seed", c.batch_seed);
    c.paraphrase_models = j.value("paraphrase_models", std::vector<std::string>{});
}

namespace {

struct Slot {
    std::uint64_t seed;
    QuestionType type;
    int k;
    auto key() const { return std::make_tuple(seed, static_cast<int>(type), k); }
};

}  // namespace

QuestionBatch generate_batch(const BatchConfig& config, const SpecProvider& spec_for,
                             const ParaphraseProvider& paraphrase) {
    if (config.seed_last < config.seed_first) throw ConfigError("seed range is empty");
    if (config.per_repo < 1) throw ConfigError("per_repo must be at least 1");
    if (!(config.target_answerable >= 0.0 && config.target_answerable <= 1.0))
        throw ConfigError("target_answerable must lie in [0, 1]");

    std::vector<Slot> slots;
    for (QuestionType t : all_question_types()) {
        std::vector<Slot> candidates;
        const int per = is_stochastic_type(t) ? config.per_repo : 1;
        for (std::uint64_t seed = config.seed_first;; ++seed) {
            for (int k = 0; k < per; ++k) candidates.push_back({seed, t, k});
            if (seed == config.seed_last) break;
        }
        std::size_t take = candidates.size();
        if (!config.type_counts.empty()) {
            auto it = config.type_counts.find(t);
            take = it == config.type_counts.end() ? 0 : static_cast<std::size_t>(std::max(0, it->second));
            take = std::min(take, candidates.size());
            auto s = RandomStream::for_stage(config.batch_seed, "batch/" + std::string(question_type_id(t)));
            for (std::size_t i = 0; i < take; ++i)
                std::swap(candidates[i], candidates[i + s.index(candidates.size() - i)]);
        }
        candidates.resize(take);
        slots.insert(slots.end(), candidates.begin(), candidates.end());
    }
    std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) { return a.key() < b.key(); });

    QuestionBatch batch;
    batch.config = config;
    std::size_t answerable = 0;
    std::shared_ptr<const RepositorySpec> spec;
    std::unique_ptr<TableCache> cache;
    for (const auto& slot : slots) {
        if (!spec || spec->master_seed != slot.seed) {
            spec = spec_for(slot.seed);
            cache = std::make_unique<TableCache>(*spec);
        }
        const std::string label = "question/" + std::string(question_type_id(slot.type)) + "/" +
                                  std::to_string(slot.k);
        const bool want = static_cast<double>(answerable) <
                          config.target_answerable * static_cast<double>(batch.items.size() + 1);
        QAItem item = generate_question(*spec, slot.type, derive_stage_seed(slot.seed, label), want,
                                        cache.get());
        item.id += "-" + std::to_string(slot.k);
        if (paraphrase) {
            for (std::size_t m = 0; m < config.paraphrase_models.size(); ++m) {
                const auto& model = config.paraphrase_models[m];
                item.paraphrases.push_back(
                    {model, paraphrase(item, *spec, model, static_cast<int>(m) + 1)});
            }
        }
        answerable += item.ground_truth.possible ? 1 : 0;
        batch.items.push_back(std::move(item));
    }
    return batch;
}

void write_batch(const QuestionBatch& batch, std::ostream& out) {
    json counts = json::object();
    std::size_t answerable = 0;
    for (const auto& item : batch.items) {
        auto& c = counts[std::string(question_type_id(item.type))];
        c = c.is_null() ? 1 : c.get<int>() + 1;
        answerable += item.ground_truth.possible ? 1 : 0;
    }
    json header = {{"format", "reposim-questions"},
                   {"version", 1},
                   {"config", batch.config},
                   {"total", batch.items.size()},
                   {"answerable", answerable},
                   {"counts", counts}};
    out << header.dump() << "\n";
    for (const auto& item : batch.items) out << json(item).dump() << "\n";
}

QuestionBatch read_batch(std::istream& in) {
    QuestionBatch batch;
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("question batch is empty");
    const auto header = json::parse(line);
    if (header.value("format", "") != "reposim-questions" || header.value("version", 0) != 1)
        throw SchemaError("not a version 1 question batch");
    batch.config = header.at("config").get<BatchConfig>();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        batch.items.push_back(json::parse(line).get<QAItem>());
    }
    return batch;
}

}  // namespace reposim
