#pragma once

#include <cstddef>
#include <vector>

#include "smartclass/device/wire.hpp"

namespace smartclass::device {

inline constexpr Millis kDefaultSamplePeriodMs = 10;
inline constexpr std::size_t kDefaultStableSamples = 5;

struct ButtonSample {
    Millis timestamp = 0;
    int level = 0;  ///< 0 or 1

    bool operator==(const ButtonSample&) const = default;
};

/// Timestamps advance by exactly sample_period_ms.
struct ButtonSampleStream {
    std::vector<ButtonSample> samples;
    Millis sample_period_ms = kDefaultSamplePeriodMs;
};

enum class EdgeKind { Rising, Falling };
const char* to_string(EdgeKind k) noexcept;

struct Edge {
    Millis timestamp = 0;
    EdgeKind kind = EdgeKind::Rising;

    bool operator==(const Edge&) const = default;
};

/// Throws DeviceError(InvalidStream) for a non-positive period, levels other
/// than 0/1 or uneven timestamps.
void validate_stream(const ButtonSampleStream& stream);

/// The first sample sets the baseline. A new level becomes an edge once it
/// has held for stable_samples consecutive samples, stamped with the first
/// sample of that run. Throws InvalidStream, including for stable_samples 0.
std::vector<Edge> debounce(const ButtonSampleStream& stream, std::size_t stable_samples = kDefaultStableSamples);

/// Low for stable_samples, `bounces` short contact bounces, high for
/// hold_ms, mirrored bounces on release, then low for stable_samples.
/// Bounce runs are shorter than stable_samples whenever stable_samples > 1.
ButtonSampleStream synthesize_press(Millis start, Millis hold_ms, int bounces,
                                    Millis sample_period_ms = kDefaultSamplePeriodMs,
                                    std::size_t stable_samples = kDefaultStableSamples);

/// Low for stable_samples, high for `width` samples, low for stable_samples.
ButtonSampleStream synthesize_glitch(Millis start, std::size_t width, Millis sample_period_ms = kDefaultSamplePeriodMs,
                                     std::size_t stable_samples = kDefaultStableSamples);

}  // namespace smartclass::device
