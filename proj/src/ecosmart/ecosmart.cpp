#include "smartclass/ecosmart/ecosmart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "smartclass/common/text.hpp"

namespace smartclass::ecosmart {

const char* to_string(Errc e) noexcept {
    switch (e) {
        case Errc::OutOfDomain: return "OutOfDomain";
        case Errc::InvalidCurve: return "InvalidCurve";
        case Errc::InvalidBand: return "InvalidBand";
        case Errc::RangeViolation: return "RangeViolation";
        case Errc::InvalidTrace: return "InvalidTrace";
        case Errc::InvalidConfig: return "InvalidConfig";
    }
    return "?";
}

const char* to_string(Actuator a) noexcept {
    switch (a) {
        case Actuator::HvacCooling: return "hvac";
        case Actuator::Lighting: return "lighting";
        case Actuator::Ventilation: return "ventilation";
    }
    return "?";
}

std::optional<Actuator> actuator_from_string(std::string_view s) noexcept {
    for (auto a : kActuators) {
        if (s == to_string(a)) return a;
    }
    return std::nullopt;
}

CalibrationCurve::CalibrationCurve(std::vector<std::pair<int, double>> points, std::string unit)
    : points_(std::move(points)), unit_(std::move(unit)) {
    if (points_.size() < 2) throw EcoError(Errc::InvalidCurve, "need at least 2 control points");
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (points_[i].first <= points_[i - 1].first) throw EcoError(Errc::InvalidCurve, "raw not strictly increasing");
        if (!(points_[i].second >= points_[i - 1].second)) throw EcoError(Errc::InvalidCurve, "values decrease");
    }
    if (points_.front().first > 0 || points_.back().first < kAdcMax) {
        throw EcoError(Errc::InvalidCurve, "curve must cover raw range [0, 4095]");
    }
}

CalibrationCurve default_light_curve() { return {{{0, 0.0}, {2048, 500.0}, {kAdcMax, 2000.0}}, "lux"}; }
CalibrationCurve default_air_curve() { return {{{0, 0.0}, {kAdcMax, 2000.0}}, "ppm"}; }

double calibrate(Channel channel, int raw, const CalibrationCurve& curve) {
    const char* expected = channel == Channel::Light ? "lux" : channel == Channel::AirQuality ? "ppm" : nullptr;
    if (!expected || curve.unit() != expected) {
        throw EcoError(Errc::InvalidCurve, "curve unit '" + curve.unit() + "' does not fit the channel");
    }
    const auto& pts = curve.points();
    if (raw < pts.front().first || raw > pts.back().first) {
        throw EcoError(Errc::OutOfDomain, "raw " + std::to_string(raw));
    }
    auto hi = std::lower_bound(pts.begin(), pts.end(), raw, [](const auto& p, int r) { return p.first < r; });
    if (hi->first == raw) return hi->second;
    auto lo = std::prev(hi);
    const double f = static_cast<double>(raw - lo->first) / static_cast<double>(hi->first - lo->first);
    return lo->second + f * (hi->second - lo->second);
}

Reading validate_reading(const MetricSample& s) {
    auto check = [](double v, double lo, double hi, const char* field) {
        if (!(v >= lo && v <= hi)) throw EcoError(Errc::RangeViolation, field);
    };
    check(s.temp_c, -40.0, 80.0, "temp_c");
    check(s.humidity_pct, 0.0, 100.0, "humidity_pct");
    check(s.lux, 0.0, HUGE_VAL, "lux");
    check(s.air_ppm, 0.0, HUGE_VAL, "air_ppm");
    return {s.temp_c, s.humidity_pct, s.lux, s.air_ppm, s.timestamp};
}

HysteresisBand::HysteresisBand(double on_threshold, double off_threshold, Direction direction)
    : on_(on_threshold), off_(off_threshold), direction_(direction) {
    const bool ok = direction == Direction::RisingActivates ? off_ < on_ : off_ > on_;
    if (!ok || !std::isfinite(on_) || !std::isfinite(off_)) {
        throw EcoError(Errc::InvalidBand, direction == Direction::RisingActivates ? "rising band needs off < on"
                                                                                   : "falling band needs off > on");
    }
}

bool HysteresisBand::demands_on(double m) const noexcept {
    return direction_ == Direction::RisingActivates ? m >= on_ : m <= on_;
}

bool HysteresisBand::demands_off(double m) const noexcept {
    return direction_ == Direction::RisingActivates ? m <= off_ : m >= off_;
}

bool HysteresisBand::next(bool current, double m) const noexcept {
    if (demands_on(m)) return true;
    if (demands_off(m)) return false;
    return current;
}

bool ActuatorState::get(Actuator a) const noexcept {
    switch (a) {
        case Actuator::HvacCooling: return hvac_cooling;
        case Actuator::Lighting: return lighting;
        case Actuator::Ventilation: return ventilation;
    }
    return false;
}

void ActuatorState::set(Actuator a, bool on) noexcept {
    switch (a) {
        case Actuator::HvacCooling: hvac_cooling = on; break;
        case Actuator::Lighting: lighting = on; break;
        case Actuator::Ventilation: ventilation = on; break;
    }
}

void ControlConfig::validate() const {
    auto expect = [](const HysteresisBand& b, Direction d, const char* name) {
        if (b.direction() != d) throw EcoError(Errc::InvalidConfig, std::string(name) + " has the wrong direction");
    };
    expect(hvac_band, Direction::RisingActivates, "hvac_band");
    expect(lighting_band, Direction::FallingActivates, "lighting_band");
    expect(ventilation_band, Direction::RisingActivates, "ventilation_band");
    if (humidity_vent_band) expect(*humidity_vent_band, Direction::RisingActivates, "humidity_vent_band");
    if (poll_period_ms <= 0) throw EcoError(Errc::InvalidConfig, "poll_period_ms must be positive");
}

namespace {

std::string describe(const char* metric, double value, const char* unit, const HysteresisBand& band, bool on) {
    const bool rising = band.direction() == Direction::RisingActivates;
    const char* op = (on == rising) ? ">=" : "<=";
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s %.1f %s %s %s threshold %.1f", metric, value, unit, op, on ? "on" : "off",
                  on ? band.on_threshold() : band.off_threshold());
    return buf;
}

}  // namespace

StepResult control_step(const Reading& reading, const ControllerState& prev, const ControlConfig& config) {
    StepResult out{prev, {}};
    auto& next = out.state;

    next.actuators.hvac_cooling = config.hvac_band.next(prev.actuators.hvac_cooling, reading.temp_c);
    next.actuators.lighting = config.lighting_band.next(prev.actuators.lighting, reading.lux);
    next.air_demand = config.ventilation_band.next(prev.air_demand, reading.air_ppm);
    next.humidity_demand =
        config.humidity_vent_band ? config.humidity_vent_band->next(prev.humidity_demand, reading.humidity_pct) : false;
    next.actuators.ventilation = next.air_demand || next.humidity_demand;

    const bool hvac = next.actuators.hvac_cooling;
    if (hvac != prev.actuators.hvac_cooling) {
        out.commands.push_back({reading.timestamp, Actuator::HvacCooling, hvac,
                                describe("temperature", reading.temp_c, "C", config.hvac_band, hvac)});
    }
    const bool light = next.actuators.lighting;
    if (light != prev.actuators.lighting) {
        out.commands.push_back({reading.timestamp, Actuator::Lighting, light,
                                describe("light", reading.lux, "lux", config.lighting_band, light)});
    }
    const bool vent = next.actuators.ventilation;
    if (vent != prev.actuators.ventilation) {
        std::string cause;
        // the band(s) whose latch moved in the direction of the change
        if (next.air_demand != prev.air_demand && next.air_demand == vent) {
            cause = describe("air quality", reading.air_ppm, "ppm", config.ventilation_band, vent);
        }
        if (config.humidity_vent_band && next.humidity_demand != prev.humidity_demand && next.humidity_demand == vent) {
            if (!cause.empty()) cause += "; ";
            cause += describe("humidity", reading.humidity_pct, "%", *config.humidity_vent_band, vent);
        }
        if (cause.empty()) cause = vent ? "ventilation demanded" : "no ventilation demand";
        out.commands.push_back({reading.timestamp, Actuator::Ventilation, vent, std::move(cause)});
    }
    return out;
}

ScenarioResult run_scenario(const std::vector<MetricSample>& trace, const ControlConfig& config,
                            const ActuatorState& initial) {
    if (trace.empty()) throw EcoError(Errc::InvalidTrace, "empty trace");
    ScenarioResult result;
    result.states.reserve(trace.size());
    auto state = ControllerState::from(initial);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (i > 0 && trace[i].timestamp < trace[i - 1].timestamp) {
            throw EcoError(Errc::InvalidTrace, "timestamp decreases at index " + std::to_string(i));
        }
        Reading reading;
        try {
            reading = validate_reading(trace[i]);
        } catch (const EcoError& e) {
            throw EcoError(e.code(), "[" + std::to_string(i) + "] " + e.detail());
        }
        auto step = control_step(reading, state, config);
        for (auto& cmd : step.commands) {
            ++result.toggles[static_cast<std::size_t>(cmd.actuator)];
            result.commands.push_back(std::move(cmd));
        }
        state = step.state;
        result.states.push_back(state);
    }
    return result;
}

MetricSample SensorCalibration::apply(const TraceRow& row) const {
    return {row.temp_c, row.humidity_pct, calibrate(Channel::Light, row.lux_raw, light),
            calibrate(Channel::AirQuality, row.air_raw, air), row.timestamp};
}

std::vector<TraceRow> read_trace(std::istream& in) {
    std::vector<TraceRow> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto body = text::trim(line);
        if (body.empty() || body.front() == '#') continue;
        std::string csv(body);
        std::replace(csv.begin(), csv.end(), ',', ' ');
        std::istringstream fields(csv);
        TraceRow row;
        if (!(fields >> row.timestamp >> row.temp_c >> row.humidity_pct >> row.lux_raw >> row.air_raw) ||
            !(fields >> std::ws).eof()) {
            throw EcoError(Errc::InvalidTrace, "line " + std::to_string(line_no) + ": expected 5 numeric fields");
        }
        rows.push_back(row);
    }
    return rows;
}

void write_command_log(std::ostream& out, const std::vector<Command>& commands) {
    for (const auto& c : commands) {
        out << c.timestamp << ',' << to_string(c.actuator) << ',' << (c.on ? "ON" : "OFF") << ',' << c.cause << '\n';
    }
}

}  // namespace smartclass::ecosmart
