#include <doctest.h>

#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "retrieval_oracle.hpp"
#include "smartclass/retrieval/retrieval.hpp"

using namespace smartclass::retrieval;

namespace {

SplitParams params(std::size_t size, std::size_t overlap) { return {size, overlap, {"\n\n", "\n", " ", ""}}; }

std::vector<std::string> texts(const std::vector<Chunk>& chunks) {
    std::vector<std::string> out;
    for (const auto& c : chunks) out.push_back(c.text);
    return out;
}

std::string random_text(std::mt19937_64& rng, std::size_t words) {
    static const std::vector<std::string> vocab{
        "sensor", "edge", "node", "mqtt", "broker", "telemetry", "uplink", "gateway", "latency", "packet",
        "firmware", "relay", "student", "quiz", "lecture", "the", "a", "of", "and", "is", "Edge", "NODE"};
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        out += vocab[rng() % vocab.size()];
        const auto r = rng() % 20;
        out += r == 0 ? "\n\n" : r == 1 ? "\n" : r == 2 ? ". " : " ";
    }
    return out;
}

}  // namespace

TEST_CASE("split_text examples") {
    auto one = split_text("abcdefghi", params(10, 3));
    REQUIRE(one.size() == 1);
    CHECK(one[0].text == "abcdefghi");

    auto forced = split_text("abcdefghijklmnop", params(10, 3));
    REQUIRE(forced.size() == 2);
    CHECK(forced[0] == Chunk{0, 0, 10, "abcdefghij"});
    CHECK(forced[1] == Chunk{1, 7, 16, "hijklmnop"});

    auto paras = split_text("para1\n\npara2", params(6, 0));
    REQUIRE(paras.size() == 2);
    CHECK(paras[0] == Chunk{0, 0, 5, "para1"});
    CHECK(paras[1] == Chunk{1, 7, 12, "para2"});

    CHECK_THROWS_AS(split_text("abc", params(3, 3)), RetrievalError);
    CHECK_THROWS_AS(split_text("abc", params(0, 0)), RetrievalError);
}

TEST_CASE("split_text merges small pieces and recurses into large ones") {
    auto chunks = split_text("aa bb cc\n\ndddddddddddd", params(8, 2));
    CHECK(texts(chunks) == std::vector<std::string>{"aa bb cc", "dddddddd", "dddddd"});
    CHECK(chunks[2].start_offset == 16);
}

TEST_CASE("splitter coverage over random texts") {
    std::mt19937_64 rng(3);
    for (int iter = 0; iter < 300; ++iter) {
        const auto text = random_text(rng, 1 + rng() % 300);
        const std::size_t size = 5 + rng() % 200;
        const std::size_t overlap = rng() % size;
        auto chunks = split_text(text, params(size, overlap));
        REQUIRE_FALSE(chunks.empty());
        std::vector<bool> covered(text.size(), false);
        std::size_t prev_start = 0;
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            const auto& c = chunks[i];
            CHECK(c.chunk_id == i);
            CHECK(c.start_offset < c.end_offset);
            CHECK(c.end_offset <= text.size());
            CHECK(c.end_offset - c.start_offset <= size);
            CHECK(c.start_offset >= prev_start);
            CHECK(c.text == text.substr(c.start_offset, c.end_offset - c.start_offset));
            prev_start = c.start_offset;
            for (auto k = c.start_offset; k < c.end_offset; ++k) covered[k] = true;
        }
        // only consumed separator characters may be left out
        for (std::size_t k = 0; k < text.size(); ++k) {
            if (!covered[k]) CHECK((text[k] == ' ' || text[k] == '\n'));
        }
        // rebuilding from offsets reproduces the text
        std::string rebuilt;
        std::size_t pos = 0;
        for (const auto& c : chunks) {
            if (c.start_offset >= pos) {
                rebuilt += text.substr(pos, c.start_offset - pos);
                rebuilt += c.text;
            } else {
                rebuilt += c.text.substr(pos - c.start_offset);
            }
            pos = std::max(pos, c.end_offset);
        }
        rebuilt += text.substr(pos);
        CHECK(rebuilt == text);
    }
}

TEST_CASE("embed") {
    HashingEmbedder e;
    CHECK(e.embed("").is_zero());
    CHECK(e.embed("  ,.;  ").is_zero());
    auto a = e.embed("Edge nodes filter telemetry");
    CHECK(a == e.embed("Edge nodes filter telemetry"));
    CHECK(a.dimension() == 1024);
    CHECK(std::abs(a.norm() - 1.0) < 1e-9);
    CHECK(std::abs(cosine(a, a) - 1.0) < 1e-12);
    CHECK(e.embed("EDGE, nodes!") == e.embed("edge nodes"));

    // disjoint tokens whose buckets (by the independent hash) do not collide
    const std::string x = "broker uplink", y = "quiz lecture";
    auto bx = oracle::signed_counts(x, 1024), by = oracle::signed_counts(y, 1024);
    for (auto [i, _] : bx) REQUIRE_FALSE(by.contains(i));
    CHECK(cosine(e.embed(x), e.embed(y)) == 0.0);
}

TEST_CASE("embedding matches the integer-count oracle") {
    HashingEmbedder e;
    std::mt19937_64 rng(17);
    for (int i = 0; i < 50; ++i) {
        auto a = random_text(rng, 1 + rng() % 40), b = random_text(rng, 1 + rng() % 40);
        CHECK(cosine(e.embed(a), e.embed(b)) ==
              doctest::Approx(oracle::cosine(oracle::signed_counts(a, 1024), oracle::signed_counts(b, 1024)))
                  .epsilon(1e-12));
    }
}

TEST_CASE("build_index and search") {
    HashingEmbedder e;
    auto doc = Document::make("d1", "t", "alpha beta\n\ngamma delta\n\nepsilon zeta alpha");
    auto index = build_index(doc, params(20, 2), e);
    REQUIRE(index.size() == 3);
    for (std::size_t i = 0; i < index.size(); ++i) CHECK(index.entries[i].chunk.chunk_id == i);
    CHECK(index.doc_version == doc.version);

    SUBCASE("self query ranks first with score 1") {
        auto hits = search(index, {"gamma delta", 2}, e);
        CHECK(hits[0].chunk_id == 1);
        CHECK(std::abs(hits[0].score - 1.0) < 1e-9);
    }
    SUBCASE("k larger than the index returns everything sorted") {
        auto hits = search(index, {"alpha", 10}, e);
        REQUIRE(hits.size() == 3);
        CHECK(hits[0].score >= hits[1].score);
        CHECK(hits[1].score >= hits[2].score);
        CHECK(hits[2].chunk_id == 1);
    }
    SUBCASE("zero query scores zero everywhere, ties by chunk id") {
        auto hits = search(index, {"...", 3}, e);
        CHECK(hits == std::vector<Hit>{{0, 0.0}, {1, 0.0}, {2, 0.0}});
    }
    SUBCASE("scores a few ulps apart still tie by chunk id") {
        auto q = e.embed("alpha").values();
        auto nudged = q;
        for (double& x : nudged) x = std::nextafter(std::nextafter(x, 0.0), 0.0);
        VectorIndex tied{"d1", doc.version, {}};
        tied.entries.push_back({index.entries[0].chunk, EmbeddingVector(nudged)});
        tied.entries.push_back({index.entries[1].chunk, EmbeddingVector(q)});
        auto hits = search(tied, {"alpha", 2}, e);
        REQUIRE(hits.size() == 2);
        CHECK(hits[0].score < hits[1].score);
        CHECK(hits[0].chunk_id == 0);
        CHECK(hits[1].chunk_id == 1);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(search(index, {"alpha", 0}, e), RetrievalError);
        VectorIndex empty;
        CHECK_THROWS_AS(search(empty, {"alpha", 1}, e), RetrievalError);
    }
    SUBCASE("rebuild is identical") {
        auto again = build_index(Document::make("d1", "t", doc.text), params(20, 2), e);
        REQUIRE(again.size() == index.size());
        for (std::size_t i = 0; i < index.size(); ++i) {
            CHECK(again.entries[i].chunk == index.entries[i].chunk);
            CHECK(again.entries[i].vector == index.entries[i].vector);
        }
    }
}

TEST_CASE("search equals brute force over random corpora") {
    HashingEmbedder e;
    std::mt19937_64 rng(23);
    for (int iter = 0; iter < 40; ++iter) {
        auto doc = Document::make("d", "", random_text(rng, 20 + rng() % 600));
        auto index = build_index(doc, params(40 + rng() % 60, 10), e);
        std::vector<std::string> chunk_texts;
        for (const auto& en : index.entries) chunk_texts.push_back(en.chunk.text);
        const auto query = random_text(rng, 1 + rng() % 6);
        const std::size_t k = 1 + rng() % 8;
        auto hits = search(index, {query, k}, e);
        auto expected = oracle::brute_force_search(chunk_texts, query, k, 1024);
        REQUIRE(hits.size() == expected.size());
        for (std::size_t i = 0; i < hits.size(); ++i) {
            CHECK(hits[i].chunk_id == expected[i].chunk_id);
            CHECK(std::abs(hits[i].score - expected[i].score) <= 1e-9);
        }
        // duplicating the query does not change the ranking
        auto doubled = search(index, {query + " " + query, k}, e);
        for (std::size_t i = 0; i < hits.size(); ++i) CHECK(doubled[i].chunk_id == hits[i].chunk_id);
    }
}

TEST_CASE("index persistence") {
    HashingEmbedder e;
    auto doc = Document::make("d1", "t", "alpha beta\n\ngamma delta\n\nepsilon zeta alpha");
    auto index = build_index(doc, params(20, 2), e);
    std::stringstream buf;
    save_index(buf, index, e.dimension());
    auto loaded = load_index(buf, doc);
    REQUIRE(loaded.size() == index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        CHECK(loaded.entries[i].chunk == index.entries[i].chunk);
        CHECK(loaded.entries[i].vector == index.entries[i].vector);
    }
    std::stringstream again;
    save_index(again, index, e.dimension());
    CHECK_THROWS_AS(load_index(again, Document::make("d1", "t", "other text")), RetrievalError);
}

TEST_CASE("index cache") {
    auto embedder = std::make_shared<HashingEmbedder>();
    IndexCache cache(params(20, 5), embedder);
    auto a = Document::make("a", "", "first document text here");
    auto b = Document::make("b", "", "second document is different");

    auto ia = cache.get_or_build(a);
    CHECK(cache.builds() == 1);
    CHECK(cache.get_or_build(a) == ia);
    CHECK(cache.builds() == 1);

    cache.get_or_build(b);
    cache.get_or_build(a);
    cache.get_or_build(b);
    CHECK(cache.builds() == 2);
    CHECK(cache.keys().size() == 2);

    auto a2 = Document::make("a", "", "first document text, revised");
    auto ia2 = cache.get_or_build(a2);
    CHECK(cache.builds() == 3);
    CHECK(ia2->doc_version == a2.version);
    CHECK(cache.keys().size() == 2);

    // a hit is entrywise identical to a fresh build
    auto fresh = build_index(a2, cache.params(), *embedder);
    REQUIRE(fresh.size() == ia2->size());
    for (std::size_t i = 0; i < fresh.size(); ++i) CHECK(fresh.entries[i].vector == ia2->entries[i].vector);
}

TEST_CASE("concurrent first requests build once") {
    auto embedder = std::make_shared<HashingEmbedder>();
    IndexCache cache(SplitParams{}, embedder);
    std::mt19937_64 rng(1);
    auto doc = Document::make("big", "", random_text(rng, 20000));
    std::vector<std::thread> threads;
    std::vector<std::shared_ptr<const VectorIndex>> got(8);
    for (int i = 0; i < 8; ++i) threads.emplace_back([&, i] { got[i] = cache.get_or_build(doc); });
    for (auto& t : threads) t.join();
    CHECK(cache.builds() == 1);
    for (const auto& g : got) CHECK(g == got[0]);
}
