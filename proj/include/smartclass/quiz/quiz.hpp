#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "smartclass/common/error.hpp"
#include "smartclass/common/generator.hpp"
#include "smartclass/retrieval/retrieval.hpp"

namespace smartclass::quiz {

enum class Errc { InvalidRequest, NoContext, InsufficientMaterial };
const char* to_string(Errc e) noexcept;
using QuizError = Error<Errc>;

inline constexpr std::size_t kDefaultQuestionCount = 5;
inline constexpr const char* kClozeStubId = "cloze-stub";

struct QuizRequest {
    std::string doc_id;
    std::string topic;
    std::size_t num_questions = kDefaultQuestionCount;

    /// Throws QuizError(InvalidRequest) with the offending field name as detail.
    static QuizRequest make(std::string doc_id, std::string topic, std::size_t num_questions);

    bool operator==(const QuizRequest&) const = default;
};

struct Question {
    std::string stem;
    std::array<std::string, 4> options;
    std::size_t correct = 0;
    std::optional<std::size_t> source_chunk;  ///< known for stub output only

    bool operator==(const Question&) const = default;
};

struct Quiz {
    QuizRequest request;
    std::vector<Question> questions;
    std::string generator_id;
};

enum class IssueCode {
    EmptyResponse,
    BadHeader,
    OutOfSequence,
    MissingOption,
    EmptyStem,
    EmptyOption,
    MissingAnswer,
    DuplicateAnswer,
    BadAnswer,
    UnexpectedLine,
    MarkupForbidden,
    DuplicateOption,
    CountMismatch,
};
const char* to_string(IssueCode c) noexcept;

struct Issue {
    std::size_t ordinal = 0;  ///< 1-based question block, 0 for the whole response
    IssueCode code = IssueCode::EmptyResponse;
    std::string detail;

    bool operator==(const Issue&) const = default;
};

struct ParseReport {
    std::vector<Issue> issues;
    bool ok() const noexcept { return issues.empty(); }
    bool has(IssueCode code) const;
    bool has(std::size_t ordinal, IssueCode code) const;
};

/// Characters that may not appear in a stem or option.
inline constexpr std::string_view kMarkupChars = "*#`<>";
bool has_markup(std::string_view s) noexcept;

/// Serializes questions in the quiz grammar:
///   "Qn. stem", "A) .." through "D) ..", "Answer: X", one blank line
///   between blocks, trailing newline.
std::string format_quiz(const std::vector<Question>& questions);

/// Parses the quiz grammar. Blank lines separate blocks; runs of blank lines,
/// surrounding blank lines and CRLF endings are tolerated.
std::variant<std::vector<Question>, ParseReport> parse_quiz_response(std::string_view text);

/// Re-checks a parsed quiz against its request. Idempotent.
ParseReport validate_quiz(const std::vector<Question>& questions, const QuizRequest& request);
inline ParseReport validate_quiz(const Quiz& quiz, const QuizRequest& request) {
    return validate_quiz(quiz.questions, request);
}

struct QuizPassage {
    std::size_t chunk_id = 0;
    std::string text;
};

/// Throws QuizError(NoContext) for no passages.
std::string build_quiz_prompt(std::string_view topic, std::size_t num_questions,
                              const std::vector<QuizPassage>& passages);

/// Words at least 5 bytes long that are not stopwords.
bool is_content_token(std::string_view token);

struct StubQuiz {
    std::string text;  ///< quiz grammar
    std::vector<std::size_t> source_chunks;
};

/// Deterministic cloze questions: the i-th distinct qualifying sentence
/// (passage order) with its longest content token blanked as "____". The
/// three longest other content tokens of the passages are the distractors;
/// options are shuffled with a seed keyed on (doc_version, ordinal).
/// Throws QuizError(InsufficientMaterial).
StubQuiz cloze_stub_generate(const std::vector<QuizPassage>& passages, std::size_t num_questions,
                             std::string_view doc_version);

struct QuizOptions {
    std::size_t top_k = retrieval::kDefaultTopK;
};

/// Retrieves max(top_k, n) passages for the topic, then asks `generator`
/// (null means the cloze stub). A remote answer that fails parsing or
/// validation is retried once with the report appended; after that, or when
/// the remote is unavailable, the stub answers. Throws QuizError(NoContext)
/// when no passage scores above zero.
Quiz generate_quiz(const QuizRequest& request, const retrieval::Document& document, retrieval::IndexCache& cache,
                   const Generator* generator = nullptr, const QuizOptions& options = {});

/// Non-normative: terciles of stem length, by rank.
enum class Difficulty { Easy, Medium, Hard };
const char* to_string(Difficulty d) noexcept;
std::vector<Difficulty> difficulty_tags(const std::vector<Question>& questions);

}  // namespace smartclass::quiz
