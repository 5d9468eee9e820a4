#include "smartclass/assistant/assistant.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "smartclass/common/text.hpp"

namespace smartclass::assistant {

const char* to_string(Errc e) noexcept {
    switch (e) {
        case Errc::AccessDenied: return "AccessDenied";
        case Errc::UnknownSession: return "UnknownSession";
        case Errc::UnknownStudent: return "UnknownStudent";
        case Errc::UnknownDocument: return "UnknownDocument";
        case Errc::NoContext: return "NoContext";
        case Errc::InvalidQuery: return "InvalidQuery";
    }
    return "?";
}

GateDecision authorize(const attendance::ClassSession& session, const attendance::Registry& registry,
                       std::string_view student_id, const attendance::FraudRules& rules) {
    const auto* student = registry.find(student_id);
    if (!student) throw AssistantError(Errc::UnknownStudent, std::string(student_id));
    auto result = attendance::evaluate_for(attendance::view_of(session), registry, *student, rules);
    return {result.status == attendance::Status::Present, result.status, result.reason};
}

namespace {

constexpr std::string_view kPromptHeader =
    "You are a classroom assistant. Answer the student's question using only the numbered passages "
    "below. Cite the passages you use by their number, like [1]. Do not use outside knowledge.";
constexpr std::string_view kQuestionMarker = "\n\nQuestion: ";

struct ParsedPrompt {
    std::vector<std::string_view> passages;
    std::string_view question;
};

// Passage headers look like "[n] (chunk c)" on their own line.
bool is_passage_header(std::string_view line, std::size_t expected) {
    auto prefix = "[" + std::to_string(expected) + "] (chunk ";
    return text::starts_with(line, prefix) && line.ends_with(")");
}

ParsedPrompt parse_prompt(std::string_view prompt) {
    ParsedPrompt out;
    const auto q = prompt.rfind(kQuestionMarker);
    if (q == std::string_view::npos) return out;
    out.question = text::trim(prompt.substr(q + kQuestionMarker.size()));
    const auto body = prompt.substr(0, q);

    std::size_t pos = 0;
    std::size_t expected = 1;
    std::size_t current_start = std::string_view::npos;
    while (pos <= body.size()) {
        auto nl = body.find('\n', pos);
        if (nl == std::string_view::npos) nl = body.size();
        const auto line = body.substr(pos, nl - pos);
        if (is_passage_header(line, expected)) {
            if (current_start != std::string_view::npos) {
                out.passages.push_back(body.substr(current_start, pos - current_start));
            }
            current_start = nl + 1;
            ++expected;
        }
        if (nl == body.size()) break;
        pos = nl + 1;
    }
    if (current_start != std::string_view::npos && current_start <= body.size()) {
        out.passages.push_back(body.substr(current_start));
    }
    for (auto& p : out.passages) p = text::trim(p);
    return out;
}

}  // namespace

std::string compose_prompt(std::string_view question, const std::vector<Passage>& passages) {
    if (passages.empty()) throw AssistantError(Errc::NoContext, "no passages");
    std::string prompt(kPromptHeader);
    prompt += "\n\n";
    for (std::size_t i = 0; i < passages.size(); ++i) {
        prompt += "[" + std::to_string(i + 1) + "] (chunk " + std::to_string(passages[i].chunk_id) + ")\n";
        prompt += passages[i].text;
        prompt += "\n\n";
    }
    prompt.pop_back();
    prompt.pop_back();
    prompt += kQuestionMarker;
    prompt += question;
    prompt += '\n';
    return prompt;
}

std::string extractive_generate(const std::string& prompt) {
    const auto parsed = parse_prompt(prompt);
    if (parsed.passages.empty()) return std::string(kAnswerFraming) + "\nNo matching material was found.";

    const auto sentences = text::split_sentences(parsed.passages.front());
    if (sentences.empty()) return std::string(kAnswerFraming) + "\nNo matching material was found.";

    const auto query_tokens = text::tokenize(parsed.question);
    const std::set<std::string> wanted(query_tokens.begin(), query_tokens.end());

    std::size_t best = 0;
    std::size_t best_overlap = 0;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        const auto tokens = text::tokenize(sentences[i]);
        const std::set<std::string> have(tokens.begin(), tokens.end());
        std::size_t overlap = 0;
        for (const auto& t : have) overlap += wanted.contains(t);
        if (overlap > best_overlap) {
            best_overlap = overlap;
            best = i;
        }
    }
    return std::string(kAnswerFraming) + "\n" + std::string(sentences[best]) + " [1]";
}

std::string ExtractiveGenerator::generate(const std::string& prompt) const { return extractive_generate(prompt); }

std::vector<std::size_t> extract_citations(std::string_view answer, const std::vector<Passage>& passages) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < answer.size(); ++i) {
        if (answer[i] != '[') continue;
        const auto close = answer.find(']', i);
        if (close == std::string_view::npos) break;
        std::size_t n = 0;
        const auto* first = answer.data() + i + 1;
        const auto* last = answer.data() + close;
        auto [ptr, ec] = std::from_chars(first, last, n);
        if (ec == std::errc{} && ptr == last && n >= 1 && n <= passages.size()) {
            const auto id = passages[n - 1].chunk_id;
            if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
        }
    }
    return out;
}

Assistant::Assistant(const AttendanceGate& gate, const DocumentSource& documents, retrieval::IndexCache& cache,
                     std::size_t default_k)
    : gate_(gate), documents_(documents), cache_(cache), default_k_(default_k) {}

AnswerContext Assistant::build_context(const retrieval::Document& document, std::string_view question,
                                       std::size_t k) const {
    auto index = cache_.get_or_build(document);
    auto hits = retrieval::search(*index, {std::string(question), k}, cache_.embedder());
    AnswerContext ctx;
    for (const auto& h : hits) ctx.passages.push_back({h.chunk_id, index->entries[h.chunk_id].chunk.text, h.score});
    ctx.prompt = compose_prompt(question, ctx.passages);
    return ctx;
}

Answer Assistant::answer_query(const ChatQuery& query, const Generator& generator) const {
    if (text::trim(query.text).empty()) throw AssistantError(Errc::InvalidQuery, "question is empty");
    if (query.k && *query.k == 0) throw AssistantError(Errc::InvalidQuery, "k must be at least 1");

    const auto decision = gate_.authorize(query.student_id, query.session_id);
    if (!decision.allowed) {
        throw AssistantError(Errc::AccessDenied, std::string(attendance::to_string(decision.status)) + " (" +
                                                     attendance::to_string(decision.reason) + ")");
    }
    auto document = documents_.find(query.doc_id);
    if (!document) throw AssistantError(Errc::UnknownDocument, query.doc_id);

    ++pipeline_runs_;
    auto ctx = build_context(*document, query.text, query.k.value_or(default_k_));

    Answer answer;
    try {
        answer.text = generator.generate(ctx.prompt);
        answer.generator_id = generator.id();
    } catch (const GeneratorUnavailable&) {
        answer.text = extractive_generate(ctx.prompt);
        answer.generator_id = kExtractiveStubId;
    }
    if (text::trim(answer.text).empty()) {
        answer.text = extractive_generate(ctx.prompt);
        answer.generator_id = kExtractiveStubId;
    }
    answer.citations = extract_citations(answer.text, ctx.passages);
    return answer;
}

}  // namespace smartclass::assistant
