#include "smartclass/device/debounce.hpp"

#include <algorithm>

namespace smartclass::device {

const char* to_string(EdgeKind k) noexcept { return k == EdgeKind::Rising ? "Rising" : "Falling"; }

void validate_stream(const ButtonSampleStream& stream) {
    if (stream.sample_period_ms <= 0) throw DeviceError(Errc::InvalidStream, "sample period must be positive");
    for (std::size_t i = 0; i < stream.samples.size(); ++i) {
        const auto& s = stream.samples[i];
        if (s.level != 0 && s.level != 1) {
            throw DeviceError(Errc::InvalidStream, "sample " + std::to_string(i) + " level is not 0 or 1");
        }
        if (i > 0 && s.timestamp != stream.samples[i - 1].timestamp + stream.sample_period_ms) {
            throw DeviceError(Errc::InvalidStream, "sample " + std::to_string(i) + " breaks the sample period");
        }
    }
}

std::vector<Edge> debounce(const ButtonSampleStream& stream, std::size_t stable_samples) {
    if (stable_samples == 0) throw DeviceError(Errc::InvalidStream, "stable sample count must be at least 1");
    validate_stream(stream);
    std::vector<Edge> edges;
    if (stream.samples.empty()) return edges;

    int stable = stream.samples.front().level;
    std::size_t run = 0;
    Millis run_start = 0;
    for (std::size_t i = 1; i < stream.samples.size(); ++i) {
        const auto& s = stream.samples[i];
        if (s.level == stable) {
            run = 0;
            continue;
        }
        if (run == 0) run_start = s.timestamp;
        if (++run == stable_samples) {
            edges.push_back({run_start, s.level == 1 ? EdgeKind::Rising : EdgeKind::Falling});
            stable = s.level;
            run = 0;
        }
    }
    return edges;
}

namespace {

struct StreamBuilder {
    ButtonSampleStream stream;
    Millis next;

    StreamBuilder(Millis start, Millis period) : next(start) { stream.sample_period_ms = period; }
    void hold(int level, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            stream.samples.push_back({next, level});
            next += stream.sample_period_ms;
        }
    }
    // Alternating short runs starting at `level`, ending on the opposite level.
    void bounce(int level, int bounces, std::size_t stable_samples) {
        const std::size_t longest = std::max<std::size_t>(1, stable_samples - 1);
        for (int b = 0; b < bounces; ++b) {
            hold(level, std::min<std::size_t>(longest, 1 + static_cast<std::size_t>(b % 2)));
            hold(1 - level, 1);
        }
    }
};

}  // namespace

ButtonSampleStream synthesize_press(Millis start, Millis hold_ms, int bounces, Millis sample_period_ms,
                                    std::size_t stable_samples) {
    StreamBuilder b(start, sample_period_ms);
    b.hold(0, stable_samples);
    b.bounce(1, bounces, stable_samples);
    b.hold(1, static_cast<std::size_t>(std::max<Millis>(1, hold_ms / sample_period_ms)));
    b.bounce(0, bounces, stable_samples);
    b.hold(0, stable_samples);
    return std::move(b.stream);
}

ButtonSampleStream synthesize_glitch(Millis start, std::size_t width, Millis sample_period_ms,
                                     std::size_t stable_samples) {
    StreamBuilder b(start, sample_period_ms);
    b.hold(0, stable_samples);
    b.hold(1, width);
    b.hold(0, stable_samples);
    return std::move(b.stream);
}

}  // namespace smartclass::device
