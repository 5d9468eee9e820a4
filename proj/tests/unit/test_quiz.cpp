#include <doctest.h>

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "smartclass/common/text.hpp"
#include "smartclass/quiz/quiz.hpp"

using namespace smartclass;
using namespace smartclass::quiz;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

retrieval::Document course() {
    return retrieval::Document::make("course", "IoT course", read_file(SMARTCLASS_DATA_DIR "/course_iot.txt"));
}

retrieval::IndexCache make_cache() {
    return retrieval::IndexCache({400, 40, {"\n\n", "\n", " ", ""}}, std::make_shared<retrieval::HashingEmbedder>());
}

std::string block(int n, const std::string& stem, const std::string& answer = "Answer: B") {
    return "Q" + std::to_string(n) + ". " + stem + "\nA) alpha\nB) bravo\nC) charlie\nD) delta\n" + answer + "\n";
}

std::string five_blocks() {
    std::string out;
    for (int i = 1; i <= 5; ++i) out += (i > 1 ? "\n" : "") + block(i, "Question " + std::to_string(i) + "?");
    return out;
}

ParseReport report_of(const std::string& text) {
    auto r = parse_quiz_response(text);
    REQUIRE(std::holds_alternative<ParseReport>(r));
    return std::get<ParseReport>(r);
}

std::vector<Question> questions_of(const std::string& text) {
    auto r = parse_quiz_response(text);
    if (auto* rep = std::get_if<ParseReport>(&r)) {
        for (const auto& i : rep->issues) MESSAGE(i.ordinal << " " << to_string(i.code) << " " << i.detail);
    }
    REQUIRE(std::holds_alternative<std::vector<Question>>(r));
    return std::get<std::vector<Question>>(r);
}

struct ScriptedGenerator final : Generator {
    std::vector<std::string> replies;
    mutable std::vector<std::string> prompts;
    std::string generate(const std::string& prompt) const override {
        prompts.push_back(prompt);
        if (prompts.size() > replies.size()) throw GeneratorUnavailable("script exhausted");
        return replies[prompts.size() - 1];
    }
    std::string id() const override { return "scripted"; }
};

}  // namespace

TEST_CASE("QuizRequest::make validates") {
    CHECK(QuizRequest::make("d", "MQTT", 5).num_questions == 5);
    for (auto [topic, n, field] : {std::tuple{"MQTT", 0, "num_questions"}, std::tuple{" ", 3, "topic"}}) {
        try {
            QuizRequest::make("d", topic, n);
            FAIL("expected InvalidRequest");
        } catch (const QuizError& e) {
            CHECK(e.code() == Errc::InvalidRequest);
            CHECK(e.detail() == field);
        }
    }
}

TEST_CASE("build_quiz_prompt") {
    std::vector<QuizPassage> ps{{2, "MQTT uses a broker."}, {0, "Topics route messages."}};
    auto p = build_quiz_prompt("MQTT", 5, ps);
    CHECK(p.find("Topic: MQTT") != std::string::npos);
    CHECK(p.find("exactly 5 questions") != std::string::npos);
    CHECK(p.find("Q1. question text\nA) option\nB) option\nC) option\nD) option\nAnswer:") != std::string::npos);
    CHECK(p.find("[1] (chunk 2)\nMQTT uses a broker.") < p.find("[2] (chunk 0)\nTopics route messages."));
    CHECK(build_quiz_prompt("MQTT", 1, ps).find("exactly 1 question ") != std::string::npos);
    CHECK(build_quiz_prompt("MQTT", 5, ps) == p);
    CHECK_THROWS_AS(build_quiz_prompt("MQTT", 5, {}), QuizError);
}

TEST_CASE("parse_quiz_response accepts the grammar") {
    auto qs = questions_of(five_blocks());
    REQUIRE(qs.size() == 5);
    CHECK(qs[2].stem == "Question 3?");
    CHECK(qs[2].options == std::array<std::string, 4>{"alpha", "bravo", "charlie", "delta"});
    CHECK(qs[2].correct == 1);
    CHECK(format_quiz(qs) == five_blocks());

    std::string crlf;
    for (char c : "\n\n" + five_blocks() + "\n\n") {
        if (c == '\n') crlf += '\r';
        if (c) crlf += c;
    }
    CHECK(questions_of(crlf) == qs);
}

TEST_CASE("parse_quiz_response reports violations") {
    CHECK(report_of("").has(0, IssueCode::EmptyResponse));
    CHECK(report_of(block(1, "Stem", "Answer: B\nAnswer: C")).has(1, IssueCode::DuplicateAnswer));
    CHECK(report_of(block(1, "Stem") + "\n" + block(2, "Stem", "Answer: A\nAnswer: A")).has(2, IssueCode::DuplicateAnswer));
    CHECK(report_of("Q1. Stem\nA) **bold**\nB) b\nC) c\nD) d\nAnswer: A\n").has(1, IssueCode::MarkupForbidden));
    CHECK(report_of(block(1, "Use <b>tags</b>")).has(1, IssueCode::MarkupForbidden));
    CHECK(report_of(block(1, "# Heading")).has(1, IssueCode::MarkupForbidden));
    CHECK(report_of(block(1, "Stem", "Answer: E")).has(1, IssueCode::BadAnswer));
    CHECK(report_of(block(1, "Stem", "")).has(1, IssueCode::MissingAnswer));
    CHECK(report_of(block(2, "Stem")).has(1, IssueCode::OutOfSequence));
    CHECK(report_of("1. Stem\nA) a\nB) b\nC) c\nD) d\nAnswer: A\n").has(1, IssueCode::BadHeader));
    CHECK(report_of("Q1. Stem\nA) a\nB) b\nD) d\nAnswer: A\n").has(1, IssueCode::MissingOption));
    CHECK(report_of("Q1. Stem\nA) a\nB) a\nC) c\nD) d\nAnswer: A\n").has(1, IssueCode::DuplicateOption));
    CHECK(report_of("Q1. Stem\nA)\nB) b\nC) c\nD) d\nAnswer: A\n").has(1, IssueCode::EmptyOption));
    CHECK(report_of("Q1. Stem\nA) a\nB) b\nC) c\nD) d\nE) e\nAnswer: A\n").has(1, IssueCode::UnexpectedLine));
    CHECK(report_of(block(1, "")).has(1, IssueCode::EmptyStem));
}

TEST_CASE("validate_quiz") {
    auto qs = questions_of(five_blocks());
    const auto req5 = QuizRequest::make("d", "t", 5);
    CHECK(validate_quiz(qs, req5).ok());

    auto four = qs;
    four.pop_back();
    auto r = validate_quiz(four, req5);
    CHECK(r.has(0, IssueCode::CountMismatch));
    CHECK(validate_quiz(four, req5).issues == r.issues);

    auto dup = qs;
    dup[3].options[2] = dup[3].options[0];
    CHECK(validate_quiz(dup, req5).has(4, IssueCode::DuplicateOption));

    auto bad = qs;
    bad[0].correct = 4;
    bad[1].stem = "a `code` stem";
    CHECK(validate_quiz(bad, req5).has(1, IssueCode::BadAnswer));
    CHECK(validate_quiz(bad, req5).has(2, IssueCode::MarkupForbidden));
}

TEST_CASE("cloze stub example") {
    std::vector<QuizPassage> ps{{0, "Edge nodes filter telemetry before uplink."}};
    auto stub = cloze_stub_generate(ps, 1, "v1");
    auto qs = questions_of(stub.text);
    REQUIRE(qs.size() == 1);
    CHECK(qs[0].stem == "Edge nodes filter ____ before uplink.");
    CHECK(qs[0].options[qs[0].correct] == "telemetry");
    CHECK(std::set<std::string>(qs[0].options.begin(), qs[0].options.end()) ==
          std::set<std::string>{"telemetry", "filter", "uplink", "nodes"});
    CHECK(stub.source_chunks == std::vector<std::size_t>{0});
    CHECK(cloze_stub_generate(ps, 1, "v1").text == stub.text);

    std::vector<QuizPassage> two{{0, "Brokers buffer messages. Sensors measure humidity. Yes."}};
    try {
        cloze_stub_generate(two, 5, "v1");
        FAIL("expected InsufficientMaterial");
    } catch (const QuizError& e) {
        CHECK(e.code() == Errc::InsufficientMaterial);
    }

    std::vector<QuizPassage> tiny{{0, "Relays switch loads."}};
    auto padded = questions_of(cloze_stub_generate(tiny, 1, "v").text);
    CHECK(padded[0].options[padded[0].correct] == "Relays");
    CHECK(validate_quiz(padded, QuizRequest::make("d", "t", 1)).ok());
}

TEST_CASE("cloze stub round-trip, grounding and validity on random passages") {
    std::mt19937_64 rng(7);
    const std::vector<std::string> vocab{"sensor", "Broker", "telemetry", "gateway", "the", "of", "node",
                                         "firmware", "relay", "latency", "about", "which", "packet", "*bold*",
                                         "<tag>", "#hash", "uplink", "Relay", "`code`", "\n", "edge"};
    int generated = 0;
    for (int round = 0; round < 300; ++round) {
        std::vector<QuizPassage> ps;
        const auto np = 1 + rng() % 4;
        for (std::size_t p = 0; p < np; ++p) {
            std::string t;
            const auto nw = 1 + rng() % 40;
            for (std::size_t w = 0; w < nw; ++w) {
                t += vocab[rng() % vocab.size()];
                t += rng() % 5 == 0 ? ". " : " ";
            }
            ps.push_back({p * 3, t});
        }
        const auto n = 1 + rng() % 6;
        StubQuiz stub;
        try {
            stub = cloze_stub_generate(ps, n, "ver" + std::to_string(round));
        } catch (const QuizError& e) {
            CHECK(e.code() == Errc::InsufficientMaterial);
            continue;
        }
        ++generated;
        auto qs = questions_of(stub.text);
        CHECK(format_quiz(qs) == stub.text);
        CHECK(validate_quiz(qs, QuizRequest::make("d", "t", n)).ok());
        for (std::size_t i = 0; i < qs.size(); ++i) {
            const auto& correct = qs[i].options[qs[i].correct];
            bool grounded = false;
            for (const auto& p : ps) grounded |= p.chunk_id == stub.source_chunks[i] && p.text.find(correct) != std::string::npos;
            CHECK(grounded);
        }
    }
    CHECK(generated > 100);
}

TEST_CASE("generate_quiz over the course document") {
    const auto doc = course();
    auto cache = make_cache();

    SUBCASE("stub by default") {
        auto req = QuizRequest::make("course", "Edge Node Functionality", 5);
        auto quiz = generate_quiz(req, doc, cache);
        CHECK(quiz.generator_id == "cloze-stub");
        CHECK(quiz.questions.size() == 5);
        CHECK(validate_quiz(quiz, req).ok());
        for (const auto& q : quiz.questions) {
            REQUIRE(q.source_chunk);
            CHECK(doc.text.find(q.options[q.correct]) != std::string::npos);
        }
        CHECK(format_quiz(generate_quiz(req, doc, cache).questions) == format_quiz(quiz.questions));
        CHECK(cache.builds() == 1);
        CHECK(difficulty_tags(quiz.questions).size() == 5);
    }
    SUBCASE("malformed remote twice falls back to the stub") {
        ScriptedGenerator remote;
        remote.replies = {"not a quiz", block(1, "Stem", "Answer: A\nAnswer: B")};
        auto req = QuizRequest::make("course", "MQTT", 2);
        auto quiz = generate_quiz(req, doc, cache, &remote);
        CHECK(quiz.generator_id == "cloze-stub");
        REQUIRE(remote.prompts.size() == 2);
        CHECK(remote.prompts[1].find("Q1: DuplicateAnswer") == std::string::npos);
        CHECK(remote.prompts[1].find("BadHeader") != std::string::npos);
        CHECK(validate_quiz(quiz, req).ok());
    }
    SUBCASE("remote corrected on retry is accepted") {
        ScriptedGenerator remote;
        remote.replies = {block(1, "Stem"), block(1, "What routes MQTT messages?") + "\n" + block(2, "Why buffer?")};
        auto req = QuizRequest::make("course", "MQTT", 2);
        auto quiz = generate_quiz(req, doc, cache, &remote);
        CHECK(quiz.generator_id == "scripted");
        CHECK(remote.prompts[1].find("CountMismatch") != std::string::npos);
        CHECK(quiz.questions[0].stem == "What routes MQTT messages?");
    }
    SUBCASE("unavailable remote falls back without retry") {
        ScriptedGenerator remote;
        auto quiz = generate_quiz(QuizRequest::make("course", "MQTT", 3), doc, cache, &remote);
        CHECK(quiz.generator_id == "cloze-stub");
        CHECK(remote.prompts.size() == 1);
    }
    SUBCASE("topic with nothing above zero") {
        try {
            const auto tiny = retrieval::Document::make("tiny", "Tiny", "Relays switch loads.");
            generate_quiz(QuizRequest::make("tiny", "xylophone", 1), tiny, cache);
            FAIL("expected NoContext");
        } catch (const QuizError& e) {
            CHECK(e.code() == Errc::NoContext);
        }
    }
}

TEST_CASE("generate_quiz validity closure over fuzzed topics") {
    const auto doc = course();
    auto cache = make_cache();
    const auto words = text::tokenize(doc.text);
    std::mt19937_64 rng(11);
    int ok = 0;
    for (int i = 0; i < 200; ++i) {
        std::string topic;
        for (std::size_t w = 0, nw = 1 + rng() % 3; w < nw; ++w) topic += words[rng() % words.size()] + " ";
        const auto n = 1 + rng() % 10;
        const auto req = QuizRequest::make("course", topic, n);
        try {
            auto quiz = generate_quiz(req, doc, cache);
            CHECK(validate_quiz(quiz, req).ok());
            ++ok;
        } catch (const QuizError& e) {
            CHECK(e.code() == Errc::NoContext);
        }
    }
    CHECK(ok > 150);
}

TEST_CASE("difficulty tags split stems by length terciles") {
    std::vector<Question> qs(6);
    const std::vector<std::string> stems{"aaaaaa", "a", "aaaaa", "aa", "aaaa", "aaa"};
    for (std::size_t i = 0; i < 6; ++i) qs[i].stem = stems[i];
    CHECK(difficulty_tags(qs) == std::vector<Difficulty>{Difficulty::Hard, Difficulty::Easy, Difficulty::Hard,
                                                         Difficulty::Easy, Difficulty::Medium, Difficulty::Medium});
}
