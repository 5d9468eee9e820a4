#include <optional>

#include "smartclass/retrieval/retrieval.hpp"

namespace smartclass::retrieval {

namespace {

struct Range {
    std::size_t begin;
    std::size_t end;
};

class Splitter {
public:
    Splitter(std::string_view text, const SplitParams& p) : text_(text), p_(p) {}

    std::vector<Range> run() {
        split(0, text_.size(), 0);
        return std::move(out_);
    }

private:
    void windows(std::size_t b, std::size_t e) {
        std::size_t start = b;
        while (true) {
            const std::size_t end = std::min(start + p_.chunk_size, e);
            out_.push_back({start, end});
            if (end == e) break;
            start = end - p_.overlap;
        }
    }

    void split(std::size_t b, std::size_t e, std::size_t level) {
        if (e - b <= p_.chunk_size) {
            out_.push_back({b, e});
            return;
        }
        const auto span = text_.substr(b, e - b);
        while (level < p_.separators.size() && !p_.separators[level].empty() &&
               span.find(p_.separators[level]) == std::string_view::npos) {
            ++level;
        }
        if (level == p_.separators.size() || p_.separators[level].empty()) {
            windows(b, e);
            return;
        }

        const std::string_view sep = p_.separators[level];
        std::optional<Range> current;
        auto flush = [&] {
            if (current) out_.push_back(*current);
            current.reset();
        };

        std::size_t piece_begin = b;
        while (piece_begin <= e) {
            auto hit = text_.find(sep, piece_begin);
            const std::size_t piece_end = (hit == std::string_view::npos || hit + sep.size() > e) ? e : hit;
            if (piece_end > piece_begin) {
                if (piece_end - piece_begin > p_.chunk_size) {
                    flush();
                    split(piece_begin, piece_end, level + 1);
                } else if (current && piece_end - current->begin <= p_.chunk_size) {
                    current->end = piece_end;
                } else {
                    flush();
                    current = Range{piece_begin, piece_end};
                }
            }
            if (piece_end == e) break;
            piece_begin = piece_end + sep.size();
        }
        flush();
    }

    std::string_view text_;
    const SplitParams& p_;
    std::vector<Range> out_;
};

}  // namespace

std::vector<Chunk> split_text(std::string_view text, const SplitParams& params) {
    if (params.chunk_size == 0 || params.chunk_size <= params.overlap) {
        throw RetrievalError(Errc::InvalidParams, "chunk_size must exceed overlap");
    }
    std::vector<Chunk> chunks;
    if (text.empty()) return chunks;
    for (const auto& r : Splitter(text, params).run()) {
        chunks.push_back({chunks.size(), r.begin, r.end, std::string(text.substr(r.begin, r.end - r.begin))});
    }
    return chunks;
}

}  // namespace smartclass::retrieval
