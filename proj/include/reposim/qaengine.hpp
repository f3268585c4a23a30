#pragma once

// Question generation with privileged access to the repository spec: the
// eleven templated question types, exact ground truth, certificates for
// unanswerable items and the paraphrase pass.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "reposim/genmodel.hpp"
#include "reposim/materializer.hpp"
#include "reposim/repospec.hpp"
#include "reposim/stats.hpp"

namespace reposim {

enum class QuestionType {
    Readme,
    Title,
    Abstract,
    Extension,
    CountRows,
    DirPrefix,
    DirCondition,
    UniSingleFile,
    UniCondition,
    BiStatistic,
    BiHypothesis,
};

const std::vector<QuestionType>& all_question_types();
/// Stable identifier, e.g. "count_rows".
std::string_view question_type_id(QuestionType t);
QuestionType question_type_from_id(std::string_view id);
/// Display names, e.g. "File Metadata" / "Count Rows".
std::string_view question_category(QuestionType t);
std::string_view question_type_label(QuestionType t);
/// Types whose questions sample a path or filters (several per repository).
bool is_stochastic_type(QuestionType t);

enum class AnswerKind { CategoricalFinite, OpenString, Integer, Continuous, ThreeClass };
std::string_view answer_kind_name(AnswerKind k);
AnswerKind answer_kind_from_name(std::string_view name);

enum class Statistic { None, Mean, Median, Variance, Mode, Pearson, ChiSquare };
std::string_view statistic_name(Statistic s);
Statistic statistic_from_name(std::string_view name);

enum class NotPossibleReason { EmptyFileSet, EmptyRowSet, InvalidOperation, ReadmeAbsent };
std::string_view reason_name(NotPossibleReason r);
NotPossibleReason reason_from_name(std::string_view name);

struct PathCondition {
    std::string name;
    std::vector<std::string> values;  // one value: equals; several: one-of
    bool operator==(const PathCondition&) const = default;
};

enum class RowOp { Equals, OneOf, LessThan, GreaterThan, AtLeast, AtMost, InRange };
std::string_view row_op_name(RowOp op);
RowOp row_op_from_name(std::string_view name);

struct RowCondition {
    std::string name;
    RowOp op = RowOp::Equals;
    std::vector<std::string> values;  // Equals / OneOf, compared as rendered cell text
    double lo = 0.0;                  // LessThan/AtMost use hi; GreaterThan/AtLeast use lo
    double hi = 0.0;
    bool operator==(const RowCondition&) const = default;
};

bool row_condition_holds(const RowCondition& c, const CellValue& v);

struct QueryFilters {
    std::string file;    // single-file types and Count Rows
    std::string prefix;  // Directory Traversal - Prefix, includes the trailing "*"
    std::vector<PathCondition> path_conditions;
    std::vector<RowCondition> row_conditions;
    bool operator==(const QueryFilters&) const = default;
};

struct QueryTarget {
    Statistic statistic = Statistic::None;
    std::vector<std::string> variables;
    double p_threshold = 0.0;  // hypothesis questions only
    bool operator==(const QueryTarget&) const = default;
};

struct GroundTruth {
    bool possible = true;
    nlohmann::json value;  // string, integer or real when possible
    std::optional<NotPossibleReason> reason;
    std::string sub_reason;  // "degenerate" for too-little-variation cases
    bool operator==(const GroundTruth&) const = default;
};

struct Paraphrase {
    std::string model_id;
    std::string text;
    bool operator==(const Paraphrase&) const = default;
};

struct QAItem {
    std::string id;
    std::uint64_t repo_seed = 0;
    QuestionType type = QuestionType::Readme;
    std::uint64_t question_seed = 0;
    std::string template_text;
    std::vector<Paraphrase> paraphrases;
    QueryTarget target;
    QueryFilters filters;
    AnswerKind answer_kind = AnswerKind::OpenString;
    std::vector<std::string> options;  // categorical-finite and three-class
    int sig_figs = 3;
    GroundTruth ground_truth;
    nlohmann::json certificate;  // null for answerable items
    bool operator==(const QAItem&) const = default;

    /// The sig-figs instruction placed before every question.
    std::string preamble() const;
    /// Variant 0 is the template, 1.. are the paraphrases.
    std::size_t variant_count() const { return 1 + paraphrases.size(); }
    const std::string& variant_text(std::size_t variant) const;
};

void to_json(nlohmann::json& j, const QAItem& item);
void from_json(const nlohmann::json& j, QAItem& item);

/// Thread-safe memo of populated files for one repository.
class TableCache {
public:
    explicit TableCache(const RepositorySpec& spec) : spec_(spec) {}
    std::shared_ptr<const TableData> get(const std::string& path);

private:
    const RepositorySpec& spec_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const TableData>> tables_;
};

/// Correctly rounded to `digits` significant figures (ties to even).
double round_sig(double x, int digits);
/// Fixed notation without exponent, shortest round-trip digits.
std::string format_constant(double x);

/// `want_answerable` steers the filter draw (bounded redraws); the recorded
/// label is always the computed one.
QAItem generate_question(const RepositorySpec& spec, QuestionType type, std::uint64_t question_seed,
                         std::optional<bool> want_answerable = std::nullopt,
                         TableCache* cache = nullptr);

/// Throws InternalInconsistency when the item names something absent from the spec.
GroundTruth compute_ground_truth(const RepositorySpec& spec, const QAItem& item,
                                 TableCache* cache = nullptr);

/// "yes" iff p <= threshold; nullopt when the test is undefined.
std::optional<std::string> chi_square_decision(const ContingencyTable& table, double p_threshold);

/// Builds the certificate for an unanswerable item and checks it against the
/// label. Throws CertificationFailure on contradiction.
nlohmann::json certify_unanswerable(const RepositorySpec& spec, const QAItem& item,
                                    TableCache* cache = nullptr);

/// Path-free template text with the file path replaced by "{path}".
std::string path_masked_text(const QAItem& item);

/// One paraphrase through the generator; the file path is masked before the
/// request and restored afterwards. Throws ParaphraseContract.
std::string paraphrase_item(const QAItem& item, const RepositorySpec& spec, Generator& generator,
                            const GenerationParams& params, int variant);

struct BatchConfig {
    std::uint64_t seed_first = 1;
    std::uint64_t seed_last = 100;
    int per_repo = 5;  // questions per (repository, stochastic type)
    /// Number of items per type; empty means every candidate.
    std::map<QuestionType, int> type_counts;
    double target_answerable = 0.72;
    std::uint64_t batch_seed = 0;
    std::vector<std::string> paraphrase_models;  // one paraphrase per model id
};

/// The 500-question plan: per-type counts of the reference evaluation.
std::map<QuestionType, int> default_type_counts();

struct QuestionBatch {
    BatchConfig config;
    std::vector<QAItem> items;
};

/// Builds specs on demand through `spec_for`.
using SpecProvider = std::function<std::shared_ptr<const RepositorySpec>(std::uint64_t)>;
using ParaphraseProvider =
    std::function<std::string(const QAItem&, const RepositorySpec&, const std::string& model_id, int variant)>;

QuestionBatch generate_batch(const BatchConfig& config, const SpecProvider& spec_for,
                             const ParaphraseProvider& paraphrase = nullptr);

/// JSON lines: a header record then one record per item.
void write_batch(const QuestionBatch& batch, std::ostream& out);
QuestionBatch read_batch(std::istream& in);

void to_json(nlohmann::json& j, const BatchConfig& c);
void from_json(const nlohmann::json& j, BatchConfig& c);

}  // namespace reposim
