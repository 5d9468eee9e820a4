#pragma once

#include <atomic>
#include <cstdint>
#include <future>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "smartclass/common/error.hpp"

namespace smartclass::retrieval {

enum class Errc { InvalidDocument, InvalidParams, EmptyIndex, InvalidQuery, DimensionMismatch, BadIndexFile };
const char* to_string(Errc e) noexcept;
using RetrievalError = Error<Errc>;

struct Document {
    std::string doc_id;
    std::string title;
    std::string text;
    std::string version;  ///< SHA-256 of text

    /// Throws InvalidDocument for an empty id or empty text.
    static Document make(std::string doc_id, std::string title, std::string text);
};

struct Chunk {
    std::size_t chunk_id = 0;
    std::size_t start_offset = 0;
    std::size_t end_offset = 0;
    std::string text;

    bool operator==(const Chunk&) const = default;
};

struct SplitParams {
    std::size_t chunk_size = 1000;
    std::size_t overlap = 200;
    std::vector<std::string> separators{"\n\n", "\n", " ", ""};

    bool operator==(const SplitParams&) const = default;
};

/// Recursive separator-ladder splitter.
///
/// Text that fits in chunk_size is one chunk. Otherwise it is cut on the
/// first separator of the ladder that occurs in it; the pieces are merged
/// greedily while the merged span stays within chunk_size, and a piece that
/// is still too long is split again with the rest of the ladder. Separators
/// at cut points belong to no chunk. The empty separator (and an exhausted
/// ladder) cuts fixed windows of chunk_size, each starting `overlap`
/// characters before the previous one ended.
///
/// Throws InvalidParams unless chunk_size > overlap.
std::vector<Chunk> split_text(std::string_view text, const SplitParams& params = {});

inline constexpr std::size_t kDefaultDimension = 1024;

/// Unit-norm (or all-zero) dense vector.
class EmbeddingVector {
public:
    EmbeddingVector() = default;
    explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {}

    const std::vector<double>& values() const noexcept { return values_; }
    std::size_t dimension() const noexcept { return values_.size(); }
    bool is_zero() const noexcept;
    double norm() const noexcept;

    bool operator==(const EmbeddingVector&) const = default;

private:
    std::vector<double> values_;
};

/// Dot product of two vectors of equal dimension; for unit vectors this is
/// the cosine, and 0 whenever either side is the zero vector.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual EmbeddingVector embed(std::string_view text) const = 0;
    virtual std::size_t dimension() const = 0;
};

/// Signed feature hashing over lowercase alphanumeric tokens.
///
/// Each token's 64-bit FNV-1a hash h picks bucket h mod D and sign
/// (+1 if bit 63 of h is clear, else -1). Signed counts are summed and the
/// result is L2-normalized; text without tokens maps to the zero vector.
class HashingEmbedder final : public Embedder {
public:
    explicit HashingEmbedder(std::size_t dimension = kDefaultDimension);
    EmbeddingVector embed(std::string_view text) const override;
    std::size_t dimension() const override { return dimension_; }

private:
    std::size_t dimension_;
};

struct IndexEntry {
    Chunk chunk;
    EmbeddingVector vector;
};

struct VectorIndex {
    std::string doc_id;
    std::string doc_version;
    std::vector<IndexEntry> entries;

    std::size_t size() const noexcept { return entries.size(); }
};

VectorIndex build_index(const Document& document, const SplitParams& params, const Embedder& embedder);

inline constexpr std::size_t kDefaultTopK = 4;

struct RetrievalQuery {
    std::string text;
    std::size_t k = kDefaultTopK;
};

struct Hit {
    std::size_t chunk_id;
    double score;

    bool operator==(const Hit&) const = default;
};

/// Cosines closer than this rank as equal. Equal cosines can differ in the
/// last bits after normalization.
inline constexpr double kTieTolerance = 1e-12;

/// Exact scan: cosine against every entry, sorted by score descending then
/// chunk_id ascending (scores within kTieTolerance are equal), truncated to k. Throws EmptyIndex, InvalidQuery (k == 0)
/// and DimensionMismatch.
std::vector<Hit> search(const VectorIndex& index, const RetrievalQuery& query, const Embedder& embedder);

/// Text dump of an index: header lines, then one line per chunk with its
/// offsets and the non-zero coordinates as `bucket:value` pairs.
void save_index(std::ostream& out, const VectorIndex& index, std::size_t dimension);
/// Restores an index written by save_index for the same document text.
VectorIndex load_index(std::istream& in, const Document& document);

/// Per-document cache of built indexes keyed by (doc_id, doc_version).
/// Concurrent first requests for a key wait on a single build.
class IndexCache {
public:
    IndexCache(SplitParams params, std::shared_ptr<const Embedder> embedder);

    std::shared_ptr<const VectorIndex> get_or_build(const Document& document);

    /// Number of index builds performed so far.
    std::uint64_t builds() const noexcept { return builds_.load(); }
    /// Completed (doc_id, doc_version) keys, sorted.
    std::vector<std::pair<std::string, std::string>> keys() const;

    const SplitParams& params() const noexcept { return params_; }
    const Embedder& embedder() const noexcept { return *embedder_; }

private:
    using Future = std::shared_future<std::shared_ptr<const VectorIndex>>;
    struct Slot {
        std::string version;
        Future index;
    };

    SplitParams params_;
    std::shared_ptr<const Embedder> embedder_;
    mutable std::mutex mutex_;
    std::map<std::string, Slot> slots_;
    std::atomic<std::uint64_t> builds_{0};
};

}  // namespace smartclass::retrieval
