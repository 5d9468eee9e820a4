#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "smartclass/common/error.hpp"

namespace smartclass::ecosmart {

using Millis = std::int64_t;

inline constexpr int kAdcMax = 4095;

enum class Errc { OutOfDomain, InvalidCurve, InvalidBand, RangeViolation, InvalidTrace, InvalidConfig };
const char* to_string(Errc e) noexcept;
using EcoError = Error<Errc>;

enum class Channel { TempHumidity, Light, AirQuality };

/// Monotone piecewise-linear map from ADC counts to physical units.
class CalibrationCurve {
public:
    /// Requires >= 2 points, strictly increasing raw, non-decreasing value,
    /// first.raw <= 0 and last.raw >= 4095. Throws EcoError(InvalidCurve).
    CalibrationCurve(std::vector<std::pair<int, double>> points, std::string unit);

    const std::vector<std::pair<int, double>>& points() const noexcept { return points_; }
    const std::string& unit() const noexcept { return unit_; }

    bool operator==(const CalibrationCurve&) const = default;

private:
    std::vector<std::pair<int, double>> points_;
    std::string unit_;
};

/// Default LDR curve (lux) and MQ2 curve (ppm).
CalibrationCurve default_light_curve();
CalibrationCurve default_air_curve();

/// Linear interpolation between the bracketing control points; exact at
/// control points. Throws OutOfDomain outside [first.raw, last.raw] and
/// InvalidCurve if the channel does not match the curve's unit.
double calibrate(Channel channel, int raw, const CalibrationCurve& curve);

struct Reading {
    double temp_c = 0;
    double humidity_pct = 0;
    double lux = 0;
    double air_ppm = 0;
    Millis timestamp = 0;

    bool operator==(const Reading&) const = default;
};

/// Unvalidated metric values, e.g. one row of a scenario trace after calibration.
struct MetricSample {
    double temp_c = 0;
    double humidity_pct = 0;
    double lux = 0;
    double air_ppm = 0;
    Millis timestamp = 0;
};

/// Range guards: temp in [-40, 80], humidity in [0, 100], lux >= 0, ppm >= 0
/// (closed intervals; NaN fails). Throws EcoError(RangeViolation) whose
/// detail is the offending field name.
Reading validate_reading(const MetricSample& sample);

enum class Direction { RisingActivates, FallingActivates };

class HysteresisBand {
public:
    /// Throws EcoError(InvalidBand) unless the deadband is non-empty and
    /// oriented for the direction.
    HysteresisBand(double on_threshold, double off_threshold, Direction direction);

    double on_threshold() const noexcept { return on_; }
    double off_threshold() const noexcept { return off_; }
    Direction direction() const noexcept { return direction_; }

    bool demands_on(double metric) const noexcept;
    bool demands_off(double metric) const noexcept;
    /// Latch update: On/Off when a threshold is reached, otherwise hold.
    bool next(bool current, double metric) const noexcept;

    bool operator==(const HysteresisBand&) const = default;

private:
    double on_;
    double off_;
    Direction direction_;
};

enum class Actuator { HvacCooling, Lighting, Ventilation };
const char* to_string(Actuator a) noexcept;
std::optional<Actuator> actuator_from_string(std::string_view s) noexcept;
inline constexpr std::array<Actuator, 3> kActuators{Actuator::HvacCooling, Actuator::Lighting, Actuator::Ventilation};

struct ActuatorState {
    bool hvac_cooling = false;
    bool lighting = false;
    bool ventilation = false;

    bool get(Actuator a) const noexcept;
    void set(Actuator a, bool on) noexcept;
    bool operator==(const ActuatorState&) const = default;
};

/// Actuator outputs plus the per-band latches that feed ventilation.
struct ControllerState {
    ActuatorState actuators;
    bool air_demand = false;
    bool humidity_demand = false;

    /// Initial latches follow the actuator: a running fan is attributed to air quality.
    static ControllerState from(const ActuatorState& s) { return {s, s.ventilation, false}; }
    bool operator==(const ControllerState&) const = default;
};

struct ControlConfig {
    HysteresisBand hvac_band{26.0, 24.0, Direction::RisingActivates};
    HysteresisBand lighting_band{300.0, 400.0, Direction::FallingActivates};
    HysteresisBand ventilation_band{600.0, 400.0, Direction::RisingActivates};
    std::optional<HysteresisBand> humidity_vent_band{HysteresisBand{70.0, 60.0, Direction::RisingActivates}};
    Millis poll_period_ms = 1000;

    /// Checks band directions and the poll period. Throws InvalidConfig.
    void validate() const;
};

struct Command {
    Millis timestamp = 0;
    Actuator actuator = Actuator::HvacCooling;
    bool on = false;
    std::string cause;

    bool operator==(const Command&) const = default;
};

struct StepResult {
    ControllerState state;
    std::vector<Command> commands;
};

StepResult control_step(const Reading& reading, const ControllerState& prev, const ControlConfig& config);

struct ScenarioResult {
    std::vector<ControllerState> states;  ///< one per trace sample
    std::vector<Command> commands;
    std::array<std::size_t, 3> toggles{};  ///< indexed like kActuators

    std::size_t toggle_count(Actuator a) const noexcept { return toggles[static_cast<std::size_t>(a)]; }
};

/// Folds control_step over the trace. Throws InvalidTrace for an empty or
/// time-reversed trace, RangeViolation with "[index] field" detail.
ScenarioResult run_scenario(const std::vector<MetricSample>& trace, const ControlConfig& config,
                            const ActuatorState& initial = {});

/// One row of a scenario trace file: timestamp_ms,temp_c,humidity_pct,lux_raw,air_raw
struct TraceRow {
    Millis timestamp = 0;
    double temp_c = 0;
    double humidity_pct = 0;
    int lux_raw = 0;
    int air_raw = 0;
};

struct SensorCalibration {
    CalibrationCurve light = default_light_curve();
    CalibrationCurve air = default_air_curve();

    MetricSample apply(const TraceRow& row) const;
};

/// Comma-separated rows; '#' comments and blank lines skipped.
std::vector<TraceRow> read_trace(std::istream& in);

/// `timestamp_ms,actuator,ON|OFF,cause` per line.
void write_command_log(std::ostream& out, const std::vector<Command>& commands);

}  // namespace smartclass::ecosmart
