// quizgen: multiple-choice quizzes from a plain-text document.
//
//   quizgen <document> [--topic T] [-n N] [--config path]
//
// Without --topic, topics are read one per line from standard input until
// end-of-input. Exit codes: 0 success, 1 a quiz could not be produced for
// --topic, 2 bad arguments, 3 ingestion failure.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "smartclass/common/generator.hpp"
#include "smartclass/common/text.hpp"
#include "smartclass/quiz/quiz.hpp"
#include "smartclass/server/config.hpp"

using namespace smartclass;

namespace {

constexpr int kBadArguments = 2;
constexpr int kIngestionFailure = 3;

bool print_quiz(const quiz::QuizRequest& request, const retrieval::Document& doc, retrieval::IndexCache& cache,
                const Generator* generator, const quiz::QuizOptions& options) {
    try {
        auto result = quiz::generate_quiz(request, doc, cache, generator, options);
        std::cout << quiz::format_quiz(result.questions) << std::flush;
        std::cerr << "[" << result.generator_id << "] " << result.questions.size() << " questions on \""
                  << request.topic << "\"\n";
        return true;
    } catch (const quiz::QuizError& e) {
        std::cerr << "quizgen: " << request.topic << ": " << e.what() << '\n';
    } catch (const retrieval::RetrievalError& e) {
        std::cerr << "quizgen: " << request.topic << ": " << e.what() << '\n';
    }
    return false;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generate multiple-choice quizzes from a course document"};
    std::string document_path;
    std::optional<std::string> topic;
    std::optional<std::size_t> count;
    std::optional<std::string> config_path;
    app.add_option("document", document_path, "Plain-text course document")->required();
    app.add_option("-t,--topic", topic, "Topic to quiz on; omit to read topics from stdin");
    app.add_option("-n,--num-questions", count, "Questions per quiz (default 5)")->check(CLI::PositiveNumber);
    app.add_option("-c,--config", config_path, "Platform config (retrieval and generator settings)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kBadArguments;
    }

    server::PlatformConfig config;
    if (config_path) {
        try {
            config = server::load_config(*config_path);
        } catch (const server::ConfigInvalid& e) {
            for (const auto& v : e.violations()) std::cerr << "quizgen: config: " << v << '\n';
            return kBadArguments;
        }
    }
    const std::size_t n = count.value_or(config.num_questions);

    std::ifstream in(document_path, std::ios::binary);
    if (!in) {
        std::cerr << "quizgen: cannot read " << document_path << '\n';
        return kIngestionFailure;
    }
    std::ostringstream text;
    text << in.rdbuf();
    retrieval::Document doc;
    try {
        doc = retrieval::Document::make(document_path, document_path, text.str());
    } catch (const retrieval::RetrievalError& e) {
        std::cerr << "quizgen: " << e.what() << '\n';
        return kIngestionFailure;
    }

    retrieval::IndexCache cache(config.split, std::make_shared<retrieval::HashingEmbedder>(config.embedding_dimension));
    std::unique_ptr<Generator> remote;
    if (config.generator.mode == server::GeneratorMode::Remote) {
        remote = std::make_unique<RemoteGenerator>(config.generator.remote);
    }
    const quiz::QuizOptions options{config.top_k};

    auto request_for = [&](const std::string& t) -> std::optional<quiz::QuizRequest> {
        try {
            return quiz::QuizRequest::make(doc.doc_id, t, n);
        } catch (const quiz::QuizError& e) {
            std::cerr << "quizgen: invalid " << e.detail() << '\n';
            return std::nullopt;
        }
    };

    if (topic) {
        auto request = request_for(*topic);
        if (!request) return kBadArguments;
        return print_quiz(*request, doc, cache, remote.get(), options) ? 0 : 1;
    }

    std::string line;
    bool first = true;
    while (std::getline(std::cin, line)) {
        const std::string t(text::trim(line));
        if (t.empty()) continue;
        auto request = request_for(t);
        if (!request) continue;
        if (!first) std::cout << '\n';
        first = !print_quiz(*request, doc, cache, remote.get(), options) && first;
    }
    return 0;
}
