#include "smartclass/retrieval/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "smartclass/common/digest.hpp"
#include "smartclass/common/text.hpp"

namespace smartclass::retrieval {

const char* to_string(Errc e) noexcept {
    switch (e) {
        case Errc::InvalidDocument: return "InvalidDocument";
        case Errc::InvalidParams: return "InvalidParams";
        case Errc::EmptyIndex: return "EmptyIndex";
        case Errc::InvalidQuery: return "InvalidQuery";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::BadIndexFile: return "BadIndexFile";
    }
    return "?";
}

Document Document::make(std::string doc_id, std::string title, std::string text) {
    if (doc_id.empty()) throw RetrievalError(Errc::InvalidDocument, "doc_id is empty");
    if (text.empty()) throw RetrievalError(Errc::InvalidDocument, "text is empty");
    auto version = sha256_hex(text);
    return {std::move(doc_id), std::move(title), std::move(text), std::move(version)};
}

bool EmbeddingVector::is_zero() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

double EmbeddingVector::norm() const noexcept {
    double sum = 0;
    for (double v : values_) sum += v * v;
    return std::sqrt(sum);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension()) throw RetrievalError(Errc::DimensionMismatch);
    double dot = 0;
    const auto& x = a.values();
    const auto& y = b.values();
    for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
    return dot;
}

HashingEmbedder::HashingEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw RetrievalError(Errc::InvalidParams, "dimension must be positive");
}

EmbeddingVector HashingEmbedder::embed(std::string_view input) const {
    std::vector<double> v(dimension_, 0.0);
    for (const auto& token : text::tokenize(input)) {
        const auto h = text::fnv1a64(token);
        v[h % dimension_] += (h >> 63) ? -1.0 : 1.0;
    }
    double sum = 0;
    for (double x : v) sum += x * x;
    if (sum > 0) {
        const double n = std::sqrt(sum);
        for (double& x : v) x /= n;
    }
    return EmbeddingVector(std::move(v));
}

VectorIndex build_index(const Document& document, const SplitParams& params, const Embedder& embedder) {
    VectorIndex index{document.doc_id, document.version, {}};
    for (auto& chunk : split_text(document.text, params)) {
        auto vec = embedder.embed(chunk.text);
        index.entries.push_back({std::move(chunk), std::move(vec)});
    }
    return index;
}

std::vector<Hit> search(const VectorIndex& index, const RetrievalQuery& query, const Embedder& embedder) {
    if (index.entries.empty()) throw RetrievalError(Errc::EmptyIndex, index.doc_id);
    if (query.k == 0) throw RetrievalError(Errc::InvalidQuery, "k must be at least 1");

    const auto q = embedder.embed(query.text);
    std::vector<Hit> hits;
    hits.reserve(index.entries.size());
    for (const auto& e : index.entries) hits.push_back({e.chunk.chunk_id, cosine(q, e.vector)});

    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        return a.score != b.score ? a.score > b.score : a.chunk_id < b.chunk_id;
    });
    // Each run of scores within kTieTolerance of its first score is one tie.
    for (auto run = hits.begin(); run != hits.end();) {
        auto end = std::find_if(run, hits.end(), [&](const Hit& h) { return run->score - h.score > kTieTolerance; });
        std::sort(run, end, [](const Hit& a, const Hit& b) { return a.chunk_id < b.chunk_id; });
        run = end;
    }
    hits.resize(std::min(query.k, hits.size()));
    return hits;
}

void save_index(std::ostream& out, const VectorIndex& index, std::size_t dimension) {
    out << "smartclass-index v1\n";
    out << "doc_id " << index.doc_id << '\n';
    out << "doc_version " << index.doc_version << '\n';
    out << "dimension " << dimension << '\n';
    out << "chunks " << index.entries.size() << '\n';
    char buf[64];
    for (const auto& e : index.entries) {
        out << e.chunk.chunk_id << ' ' << e.chunk.start_offset << ' ' << e.chunk.end_offset;
        const auto& v = e.vector.values();
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i] == 0.0) continue;
            std::snprintf(buf, sizeof buf, " %zu:%a", i, v[i]);
            out << buf;
        }
        out << '\n';
    }
}

VectorIndex load_index(std::istream& in, const Document& document) {
    auto fail = [](const std::string& why) { return RetrievalError(Errc::BadIndexFile, why); };
    std::string line;
    auto header = [&](std::string_view key) {
        if (!std::getline(in, line) || !text::starts_with(line, std::string(key) + " ")) {
            throw fail("missing " + std::string(key));
        }
        return line.substr(key.size() + 1);
    };
    if (!std::getline(in, line) || line != "smartclass-index v1") throw fail("bad header");
    VectorIndex index;
    index.doc_id = header("doc_id");
    index.doc_version = header("doc_version");
    if (index.doc_version != document.version) throw fail("index was built from a different document version");
    const auto dimension = std::stoul(header("dimension"));
    const auto count = std::stoul(header("chunks"));
    for (std::size_t n = 0; n < count; ++n) {
        if (!std::getline(in, line)) throw fail("truncated");
        std::istringstream row(line);
        Chunk chunk;
        if (!(row >> chunk.chunk_id >> chunk.start_offset >> chunk.end_offset) ||
            chunk.end_offset > document.text.size() || chunk.start_offset >= chunk.end_offset) {
            throw fail("bad chunk line " + std::to_string(n));
        }
        chunk.text = document.text.substr(chunk.start_offset, chunk.end_offset - chunk.start_offset);
        std::vector<double> v(dimension, 0.0);
        std::string coord;
        while (row >> coord) {
            auto colon = coord.find(':');
            if (colon == std::string::npos) throw fail("bad coordinate");
            const auto i = std::stoul(coord.substr(0, colon));
            if (i >= dimension) throw fail("coordinate out of range");
            v[i] = std::strtod(coord.c_str() + colon + 1, nullptr);
        }
        index.entries.push_back({std::move(chunk), EmbeddingVector(std::move(v))});
    }
    return index;
}

IndexCache::IndexCache(SplitParams params, std::shared_ptr<const Embedder> embedder)
    : params_(std::move(params)), embedder_(std::move(embedder)) {}

std::shared_ptr<const VectorIndex> IndexCache::get_or_build(const Document& document) {
    std::promise<std::shared_ptr<const VectorIndex>> promise;
    Future future;
    bool builder = false;
    {
        std::lock_guard lock(mutex_);
        auto it = slots_.find(document.doc_id);
        if (it != slots_.end() && it->second.version == document.version) {
            future = it->second.index;
        } else {
            future = promise.get_future().share();
            slots_[document.doc_id] = Slot{document.version, future};
            builder = true;
        }
    }
    if (builder) {
        try {
            ++builds_;
            promise.set_value(std::make_shared<const VectorIndex>(build_index(document, params_, *embedder_)));
        } catch (...) {
            promise.set_exception(std::current_exception());
            std::lock_guard lock(mutex_);
            auto it = slots_.find(document.doc_id);
            if (it != slots_.end() && it->second.version == document.version) slots_.erase(it);
        }
    }
    return future.get();
}

std::vector<std::pair<std::string, std::string>> IndexCache::keys() const {
    std::lock_guard lock(mutex_);
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [doc_id, slot] : slots_) {
        if (slot.index.wait_for(std::chrono::seconds(0)) == std::future_status::ready) {
            out.emplace_back(doc_id, slot.version);
        }
    }
    return out;
}

}  // namespace smartclass::retrieval
