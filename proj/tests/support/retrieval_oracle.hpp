#pragma once

// Brute-force cosine ranking computed from integer term counts. Shares no
// code with the library: tokenizer, hash and cosine are re-derived here.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace oracle {

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::vector<std::string> words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        const bool alnum = std::isalnum(c) || c >= 0x80;
        if (alnum) {
            cur.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

/// bucket -> signed count
inline std::map<std::size_t, long> signed_counts(std::string_view text, std::size_t dim) {
    std::map<std::size_t, long> v;
    for (const auto& w : words(text)) {
        const auto h = fnv1a(w);
        v[h % dim] += (h >> 63) ? -1 : 1;
    }
    return v;
}

inline double cosine(const std::map<std::size_t, long>& a, const std::map<std::size_t, long>& b) {
    long dot = 0, na = 0, nb = 0;
    for (auto [i, x] : a) {
        na += x * x;
        if (auto it = b.find(i); it != b.end()) dot += x * it->second;
    }
    for (auto [i, y] : b) nb += y * y;
    if (na == 0 || nb == 0) return 0.0;
    return static_cast<double>(dot) / std::sqrt(static_cast<double>(na) * static_cast<double>(nb));
}

struct Ranked {
    std::size_t chunk_id;
    double score;
};

inline std::vector<Ranked> brute_force_search(const std::vector<std::string>& chunks, std::string_view query,
                                              std::size_t k, std::size_t dim) {
    const auto q = signed_counts(query, dim);
    std::vector<Ranked> all;
    for (std::size_t i = 0; i < chunks.size(); ++i) all.push_back({i, cosine(q, signed_counts(chunks[i], dim))});
    std::stable_sort(all.begin(), all.end(), [](const Ranked& a, const Ranked& b) { return a.score > b.score; });
    all.resize(std::min(k, all.size()));
    return all;
}

}  // namespace oracle
