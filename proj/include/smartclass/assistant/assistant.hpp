#pragma once

#include <atomic>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smartclass/attendance/evaluation.hpp"
#include "smartclass/common/error.hpp"
#include "smartclass/common/generator.hpp"
#include "smartclass/retrieval/retrieval.hpp"

namespace smartclass::assistant {

enum class Errc { AccessDenied, UnknownSession, UnknownStudent, UnknownDocument, NoContext, InvalidQuery };
const char* to_string(Errc e) noexcept;
using AssistantError = Error<Errc>;

struct ChatQuery {
    std::string student_id;
    std::string session_id;
    std::string doc_id;
    std::string text;
    std::optional<std::size_t> k;
};

struct Passage {
    std::size_t chunk_id;
    std::string text;
    double score;
};

struct AnswerContext {
    std::vector<Passage> passages;  ///< score descending
    std::string prompt;
};

struct Answer {
    std::string text;
    std::vector<std::size_t> citations;  ///< chunk ids, in order of first citation
    std::string generator_id;
};

struct GateDecision {
    bool allowed = false;
    attendance::Status status = attendance::Status::Absent;
    attendance::Reason reason = attendance::Reason::NoRfid;
};

/// Allowed iff the student is Present in the session right now.
/// Throws AssistantError(UnknownStudent).
GateDecision authorize(const attendance::ClassSession& session, const attendance::Registry& registry,
                       std::string_view student_id, const attendance::FraudRules& rules = {});

/// Resolves (student, session) to a gate decision. Implementations throw
/// AssistantError(UnknownSession / UnknownStudent).
class AttendanceGate {
public:
    virtual ~AttendanceGate() = default;
    virtual GateDecision authorize(std::string_view student_id, std::string_view session_id) const = 0;
};

class DocumentSource {
public:
    virtual ~DocumentSource() = default;
    virtual std::optional<retrieval::Document> find(std::string_view doc_id) const = 0;
};

/// Fixed prompt template: instruction header, numbered passages tagged with
/// their chunk ids, then the question. Throws NoContext for no passages.
std::string compose_prompt(std::string_view question, const std::vector<Passage>& passages);

inline constexpr const char* kExtractiveStubId = "extractive-stub";
inline constexpr const char* kAnswerFraming = "From the course material:";

/// Deterministic stand-in for a language model. Parses a prompt made by
/// compose_prompt and returns the sentence of passage [1] sharing the most
/// distinct query tokens (first sentence on ties or no overlap), framed and
/// followed by " [1]".
class ExtractiveGenerator final : public Generator {
public:
    std::string generate(const std::string& prompt) const override;
    std::string id() const override { return kExtractiveStubId; }
};

std::string extractive_generate(const std::string& prompt);

/// Citation markers "[n]" in `answer` that name one of the passages, mapped
/// to chunk ids.
std::vector<std::size_t> extract_citations(std::string_view answer, const std::vector<Passage>& passages);

/// Gated question answering over one document.
class Assistant {
public:
    Assistant(const AttendanceGate& gate, const DocumentSource& documents, retrieval::IndexCache& cache,
              std::size_t default_k = retrieval::kDefaultTopK);

    /// authorize -> index (cached) -> top-k search -> prompt -> generator.
    /// A generator failure falls back to the extractive stub.
    /// Throws AccessDenied, UnknownDocument, InvalidQuery, UnknownSession,
    /// UnknownStudent, and RetrievalError(EmptyIndex).
    Answer answer_query(const ChatQuery& query, const Generator& generator) const;

    /// Retrieval half of the pipeline, without the gate.
    AnswerContext build_context(const retrieval::Document& document, std::string_view question, std::size_t k) const;

    /// How many queries got past the gate into retrieval.
    std::uint64_t pipeline_runs() const noexcept { return pipeline_runs_.load(); }

private:
    const AttendanceGate& gate_;
    const DocumentSource& documents_;
    retrieval::IndexCache& cache_;
    std::size_t default_k_;
    mutable std::atomic<std::uint64_t> pipeline_runs_{0};
};

}  // namespace smartclass::assistant
