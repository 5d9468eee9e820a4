#include "smartclass/quiz/quiz.hpp"

#include <algorithm>
#include <charconv>
#include <random>
#include <set>
#include <unordered_set>

#include "smartclass/common/text.hpp"

namespace smartclass::quiz {

const char* to_string(Errc e) noexcept {
    switch (e) {
        case Errc::InvalidRequest: return "InvalidRequest";
        case Errc::NoContext: return "NoContext";
        case Errc::InsufficientMaterial: return "InsufficientMaterial";
    }
    return "?";
}

const char* to_string(IssueCode c) noexcept {
    switch (c) {
        case IssueCode::EmptyResponse: return "EmptyResponse";
        case IssueCode::BadHeader: return "BadHeader";
        case IssueCode::OutOfSequence: return "OutOfSequence";
        case IssueCode::MissingOption: return "MissingOption";
        case IssueCode::EmptyStem: return "EmptyStem";
        case IssueCode::EmptyOption: return "EmptyOption";
        case IssueCode::MissingAnswer: return "MissingAnswer";
        case IssueCode::DuplicateAnswer: return "DuplicateAnswer";
        case IssueCode::BadAnswer: return "BadAnswer";
        case IssueCode::UnexpectedLine: return "UnexpectedLine";
        case IssueCode::MarkupForbidden: return "MarkupForbidden";
        case IssueCode::DuplicateOption: return "DuplicateOption";
        case IssueCode::CountMismatch: return "CountMismatch";
    }
    return "?";
}

const char* to_string(Difficulty d) noexcept {
    switch (d) {
        case Difficulty::Easy: return "easy";
        case Difficulty::Medium: return "medium";
        case Difficulty::Hard: return "hard";
    }
    return "?";
}

QuizRequest QuizRequest::make(std::string doc_id, std::string topic, std::size_t num_questions) {
    if (text::trim(doc_id).empty()) throw QuizError(Errc::InvalidRequest, "doc_id");
    if (text::trim(topic).empty()) throw QuizError(Errc::InvalidRequest, "topic");
    if (num_questions < 1) throw QuizError(Errc::InvalidRequest, "num_questions");
    return {std::move(doc_id), std::move(topic), num_questions};
}

bool ParseReport::has(IssueCode code) const {
    return std::any_of(issues.begin(), issues.end(), [&](const Issue& i) { return i.code == code; });
}

bool ParseReport::has(std::size_t ordinal, IssueCode code) const {
    return std::any_of(issues.begin(), issues.end(),
                       [&](const Issue& i) { return i.ordinal == ordinal && i.code == code; });
}

bool has_markup(std::string_view s) noexcept { return s.find_first_of(kMarkupChars) != std::string_view::npos; }

namespace {

constexpr std::array<char, 4> kLabels{'A', 'B', 'C', 'D'};

bool is_single_line(std::string_view s) { return s.find_first_of("\r\n") == std::string_view::npos; }

void check_question(const Question& q, std::size_t ordinal, std::vector<Issue>& out) {
    if (text::trim(q.stem).empty()) out.push_back({ordinal, IssueCode::EmptyStem, ""});
    if (has_markup(q.stem) || !is_single_line(q.stem)) out.push_back({ordinal, IssueCode::MarkupForbidden, "stem"});
    for (std::size_t i = 0; i < 4; ++i) {
        const std::string label(1, kLabels[i]);
        if (text::trim(q.options[i]).empty()) out.push_back({ordinal, IssueCode::EmptyOption, label});
        if (has_markup(q.options[i]) || !is_single_line(q.options[i])) {
            out.push_back({ordinal, IssueCode::MarkupForbidden, label});
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (q.options[i] == q.options[j]) {
                out.push_back({ordinal, IssueCode::DuplicateOption, std::string(1, kLabels[j]) + "=" + label});
            }
        }
    }
    if (q.correct > 3) out.push_back({ordinal, IssueCode::BadAnswer, std::to_string(q.correct)});
}

std::optional<std::size_t> parse_number(std::string_view s) {
    std::size_t n = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return n;
}

void parse_block(const std::vector<std::string_view>& lines, std::size_t ordinal, Question& q,
                 std::vector<Issue>& issues) {
    const auto header = lines.front();
    const auto dot = header.find(". ");
    std::optional<std::size_t> number;
    if (header.size() >= 2 && header[0] == 'Q' && dot != std::string_view::npos) {
        number = parse_number(header.substr(1, dot - 1));
    }
    if (!number) {
        issues.push_back({ordinal, IssueCode::BadHeader, std::string(header)});
    } else {
        if (*number != ordinal) issues.push_back({ordinal, IssueCode::OutOfSequence, "Q" + std::to_string(*number)});
        q.stem = std::string(header.substr(dot + 2));
    }

    std::size_t pos = 1;
    for (std::size_t i = 0; i < 4; ++i) {
        const std::string prefix{kLabels[i], ')', ' '};
        const std::string bare{kLabels[i], ')'};
        if (pos < lines.size() && (text::starts_with(lines[pos], prefix) || lines[pos] == bare)) {
            q.options[i] = lines[pos] == bare ? std::string() : std::string(lines[pos].substr(3));
            ++pos;
        } else {
            issues.push_back({ordinal, IssueCode::MissingOption, std::string(1, kLabels[i])});
        }
    }

    std::size_t answers = 0;
    for (; pos < lines.size(); ++pos) {
        const auto line = lines[pos];
        if (!text::starts_with(line, "Answer:")) {
            issues.push_back({ordinal, IssueCode::UnexpectedLine, std::string(line)});
            continue;
        }
        if (++answers > 1) {
            issues.push_back({ordinal, IssueCode::DuplicateAnswer, std::string(line)});
            continue;
        }
        const auto letter = line.substr(7);
        if (letter.size() == 2 && letter[0] == ' ' && letter[1] >= 'A' && letter[1] <= 'D') {
            q.correct = static_cast<std::size_t>(letter[1] - 'A');
        } else {
            issues.push_back({ordinal, IssueCode::BadAnswer, std::string(line)});
        }
    }
    if (answers == 0) issues.push_back({ordinal, IssueCode::MissingAnswer, ""});
}

}  // namespace

std::string format_quiz(const std::vector<Question>& questions) {
    std::string out;
    for (std::size_t i = 0; i < questions.size(); ++i) {
        const auto& q = questions[i];
        if (i > 0) out += '\n';
        out += "Q" + std::to_string(i + 1) + ". " + q.stem + "\n";
        for (std::size_t o = 0; o < 4; ++o) out += std::string{kLabels[o], ')', ' '} + q.options[o] + "\n";
        out += std::string("Answer: ") + kLabels[q.correct < 4 ? q.correct : 0] + "\n";
    }
    return out;
}

std::variant<std::vector<Question>, ParseReport> parse_quiz_response(std::string_view response) {
    std::vector<std::vector<std::string_view>> blocks;
    bool in_block = false;
    for (auto line : text::split_lines(response)) {
        if (text::trim(line).empty()) {
            in_block = false;
            continue;
        }
        if (!in_block) blocks.emplace_back();
        in_block = true;
        blocks.back().push_back(line);
    }

    ParseReport report;
    if (blocks.empty()) {
        report.issues.push_back({0, IssueCode::EmptyResponse, ""});
        return report;
    }
    std::vector<Question> questions(blocks.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        parse_block(blocks[b], b + 1, questions[b], report.issues);
        check_question(questions[b], b + 1, report.issues);
    }
    if (!report.ok()) return report;
    return questions;
}

ParseReport validate_quiz(const std::vector<Question>& questions, const QuizRequest& request) {
    ParseReport report;
    if (questions.size() != request.num_questions) {
        report.issues.push_back({0, IssueCode::CountMismatch,
                                 std::to_string(questions.size()) + " of " + std::to_string(request.num_questions)});
    }
    for (std::size_t i = 0; i < questions.size(); ++i) check_question(questions[i], i + 1, report.issues);
    return report;
}

std::string build_quiz_prompt(std::string_view topic, std::size_t num_questions,
                              const std::vector<QuizPassage>& passages) {
    if (passages.empty()) throw QuizError(Errc::NoContext, "no passages");
    const auto n = std::to_string(num_questions);
    std::string p;
    p += "You are writing a multiple-choice quiz for a classroom.\n";
    p += "Topic: " + std::string(topic) + "\n";
    p += "Write exactly " + n + (num_questions == 1 ? " question" : " questions") +
         " using only the passages below.\n";
    p += "Each question has exactly 4 options and exactly one correct answer. All options must differ.\n";
    p += "Use plain text only. Do not use the characters * # ` < > anywhere.\n";
    p += "Use exactly this format for every question, with one blank line between questions:\n";
    p += "Q1. question text\nA) option\nB) option\nC) option\nD) option\nAnswer: one of A, B, C, D\n";
    p += "Number the questions Q1 to Q" + n + " in order and write nothing else.\n";
    p += "\nPassages:\n";
    for (std::size_t i = 0; i < passages.size(); ++i) {
        p += "\n[" + std::to_string(i + 1) + "] (chunk " + std::to_string(passages[i].chunk_id) + ")\n";
        p += passages[i].text;
        p += "\n";
    }
    return p;
}

namespace {

const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> words{
        "about",   "above",  "across", "after",   "again",   "against", "along",   "already", "although",
        "always",  "among",  "another", "around", "because", "before",  "behind",  "being",   "below",
        "beneath", "beside", "besides", "between", "beyond", "cannot",  "could",   "doing",   "during",
        "either",  "every",  "further", "having", "herself", "himself", "however", "itself",  "might",
        "myself",  "neither", "often",  "other",   "others", "ought",   "ourselves", "perhaps", "rather",
        "shall",   "should", "since",   "still",   "their",  "theirs",  "themselves", "there",  "therefore",
        "these",   "thing",  "things",  "those",   "though", "through", "throughout", "thus",   "toward",
        "towards", "under",  "unless",  "until",   "upon",   "usually", "various", "whatever", "where",
        "whereas", "whether", "which",  "while",   "whose",  "within",  "without", "would",   "yourself",
        "yourselves"};
    return words;
}

// Sentence text on one line, markup characters removed.
std::string clean_sentence(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (kMarkupChars.find(c) != std::string_view::npos) continue;
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
            space = !out.empty();
            continue;
        }
        if (space) out += ' ';
        space = false;
        out += c;
    }
    return out;
}

struct Candidate {
    std::string sentence;  ///< cleaned
    std::size_t chunk_id;
};

}  // namespace

bool is_content_token(std::string_view token) {
    return token.size() >= 5 && !stopwords().contains(text::to_lower(token));
}

StubQuiz cloze_stub_generate(const std::vector<QuizPassage>& passages, std::size_t num_questions,
                             std::string_view doc_version) {
    // Content tokens of all passages, longest first, ties by first occurrence.
    struct Word {
        std::string text;
        std::string key;
    };
    std::vector<Word> vocabulary;
    std::unordered_set<std::string> seen_words;
    std::vector<Candidate> candidates;
    std::unordered_set<std::string> seen_sentences;
    for (const auto& p : passages) {
        for (auto raw : text::split_sentences(p.text)) {
            auto sentence = clean_sentence(raw);
            bool qualifies = false;
            for (const auto& span : text::token_spans(sentence)) {
                if (!is_content_token(span.token)) continue;
                qualifies = true;
                auto key = text::to_lower(span.token);
                if (seen_words.insert(key).second) vocabulary.push_back({std::string(span.token), key});
            }
            if (qualifies && seen_sentences.insert(sentence).second) candidates.push_back({sentence, p.chunk_id});
        }
    }
    if (candidates.size() < num_questions || num_questions == 0) {
        throw QuizError(Errc::InsufficientMaterial, std::to_string(candidates.size()) + " qualifying sentences for " +
                                                        std::to_string(num_questions) + " questions");
    }
    std::stable_sort(vocabulary.begin(), vocabulary.end(),
                     [](const Word& a, const Word& b) { return a.text.size() > b.text.size(); });

    static constexpr std::array<const char*, 3> kFillers{"none of these", "all of these", "not stated"};

    StubQuiz out;
    std::vector<Question> questions;
    for (std::size_t i = 0; i < num_questions; ++i) {
        const auto& c = candidates[i];
        const text::TokenSpan* answer = nullptr;
        auto spans = text::token_spans(c.sentence);
        for (const auto& span : spans) {
            if (is_content_token(span.token) && (!answer || span.token.size() > answer->token.size())) answer = &span;
        }
        Question q;
        q.stem = c.sentence.substr(0, answer->offset) + "____" +
                 c.sentence.substr(answer->offset + answer->token.size());
        q.source_chunk = c.chunk_id;

        std::array<std::string, 4> options;
        options[0] = std::string(answer->token);
        const auto answer_key = text::to_lower(answer->token);
        std::size_t filled = 1;
        for (const auto& w : vocabulary) {
            if (filled == 4) break;
            if (w.key == answer_key) continue;
            options[filled++] = w.text;
        }
        for (std::size_t f = 0; filled < 4; ++f) options[filled++] = kFillers[f];

        // Fisher-Yates on raw engine output so the order is portable.
        std::mt19937_64 rng(text::fnv1a64(std::string(doc_version) + ":" + std::to_string(i + 1)));
        std::array<std::size_t, 4> order{0, 1, 2, 3};
        for (std::size_t k = 3; k > 0; --k) std::swap(order[k], order[rng() % (k + 1)]);
        for (std::size_t k = 0; k < 4; ++k) {
            q.options[k] = options[order[k]];
            if (order[k] == 0) q.correct = k;
        }
        questions.push_back(std::move(q));
        out.source_chunks.push_back(c.chunk_id);
    }
    out.text = format_quiz(questions);
    return out;
}

namespace {

std::string report_text(const ParseReport& report) {
    std::string out;
    for (const auto& i : report.issues) {
        out += "- ";
        out += i.ordinal == 0 ? std::string("response") : "Q" + std::to_string(i.ordinal);
        out += ": ";
        out += to_string(i.code);
        if (!i.detail.empty()) out += " (" + i.detail + ")";
        out += "\n";
    }
    return out;
}

Quiz stub_quiz(const QuizRequest& request, const retrieval::VectorIndex& index,
               const std::vector<QuizPassage>& passages) {
    std::optional<StubQuiz> stub;
    try {
        stub = cloze_stub_generate(passages, request.num_questions, index.doc_version);
    } catch (const QuizError& e) {
        if (e.code() != Errc::InsufficientMaterial) throw;
        // Widen to the whole document: retrieved passages first, then the rest in order.
        auto widened = passages;
        std::set<std::size_t> used;
        for (const auto& p : passages) used.insert(p.chunk_id);
        for (const auto& e2 : index.entries) {
            if (!used.contains(e2.chunk.chunk_id)) widened.push_back({e2.chunk.chunk_id, e2.chunk.text});
        }
        stub = cloze_stub_generate(widened, request.num_questions, index.doc_version);
    }
    auto parsed = parse_quiz_response(stub->text);
    auto questions = std::get<std::vector<Question>>(std::move(parsed));
    for (std::size_t i = 0; i < questions.size(); ++i) questions[i].source_chunk = stub->source_chunks[i];
    return {request, std::move(questions), kClozeStubId};
}

}  // namespace

Quiz generate_quiz(const QuizRequest& request, const retrieval::Document& document, retrieval::IndexCache& cache,
                   const Generator* generator, const QuizOptions& options) {
    if (request.num_questions < 1) throw QuizError(Errc::InvalidRequest, "num_questions");
    if (text::trim(request.topic).empty()) throw QuizError(Errc::InvalidRequest, "topic");

    auto index = cache.get_or_build(document);
    const auto k = std::max(options.top_k, request.num_questions);
    std::vector<QuizPassage> passages;
    for (const auto& hit : retrieval::search(*index, {request.topic, k}, cache.embedder())) {
        if (hit.score > 0.0) passages.push_back({hit.chunk_id, index->entries[hit.chunk_id].chunk.text});
    }
    if (passages.empty()) throw QuizError(Errc::NoContext, request.topic);

    if (generator && generator->id() != kClozeStubId) {
        const auto prompt = build_quiz_prompt(request.topic, request.num_questions, passages);
        std::string attempt_prompt = prompt;
        try {
            for (int attempt = 0; attempt < 2; ++attempt) {
                auto parsed = parse_quiz_response(generator->generate(attempt_prompt));
                ParseReport report;
                if (auto* qs = std::get_if<std::vector<Question>>(&parsed)) {
                    report = validate_quiz(*qs, request);
                    if (report.ok()) return {request, std::move(*qs), generator->id()};
                } else {
                    report = std::get<ParseReport>(parsed);
                }
                attempt_prompt = prompt + "\nYour previous answer was rejected:\n" + report_text(report) +
                                 "Write the quiz again in the required format.\n";
            }
        } catch (const GeneratorUnavailable&) {
        }
    }
    return stub_quiz(request, *index, passages);
}

std::vector<Difficulty> difficulty_tags(const std::vector<Question>& questions) {
    std::vector<std::size_t> order(questions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return questions[a].stem.size() < questions[b].stem.size();
    });
    std::vector<Difficulty> tags(questions.size(), Difficulty::Easy);
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        tags[order[rank]] = static_cast<Difficulty>(rank * 3 / order.size());
    }
    return tags;
}

}  // namespace smartclass::quiz
