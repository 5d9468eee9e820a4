#pragma once

// Stepwise reference for a single hysteresis band plus a scanner for the
// no-chatter property. Written directly from the band predicate.

#include <cstddef>
#include <vector>

namespace oracle {

struct BandSpec {
    double on;
    double off;
    bool rising;
};

inline std::vector<bool> band_states(const std::vector<double>& metric, BandSpec b, bool initial) {
    std::vector<bool> out;
    bool s = initial;
    for (double m : metric) {
        const bool want_on = b.rising ? m >= b.on : m <= b.on;
        const bool want_off = b.rising ? m <= b.off : m >= b.off;
        if (want_on) {
            s = true;
        } else if (want_off) {
            s = false;
        }
        out.push_back(s);
    }
    return out;
}

inline std::size_t count_toggles(const std::vector<bool>& states, bool initial) {
    std::size_t n = 0;
    bool prev = initial;
    for (bool s : states) {
        n += s != prev;
        prev = s;
    }
    return n;
}

/// Every transition happens on a sample that reached the corresponding
/// threshold, and between two transitions the metric crossed the whole band.
inline bool brackets_full_crossings(const std::vector<double>& metric, const std::vector<bool>& states, BandSpec b,
                                    bool initial) {
    bool prev = initial;
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i] == prev) continue;
        const double m = metric[i];
        const bool reached = states[i] ? (b.rising ? m >= b.on : m <= b.on) : (b.rising ? m <= b.off : m >= b.off);
        if (!reached) return false;
        prev = states[i];
    }
    return true;
}

/// Number of full band traversals: a sweep from the off side to the on side
/// or back counts once. The starting side is the one the initial state sits on.
inline std::size_t full_crossings(const std::vector<double>& metric, BandSpec b, bool initial) {
    int side = initial ? 1 : -1;  // -1 off side, +1 on side
    std::size_t n = 0;
    for (double m : metric) {
        int now = 0;
        if (b.rising ? m >= b.on : m <= b.on) now = 1;
        if (b.rising ? m <= b.off : m >= b.off) now = -1;
        if (now != 0 && now != side) ++n;
        if (now != 0) side = now;
    }
    return n;
}

}  // namespace oracle
