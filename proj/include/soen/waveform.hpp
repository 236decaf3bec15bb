#pragma once

#include <utility>
#include <variant>
#include <vector>

namespace soen {

struct DcLevel {
    double level = 0.0;
    bool operator==(const DcLevel&) const = default;
};

/// Trapezoidal pulses: 0 before `start`; each period ramps up over
/// `rise_time`, holds `amplitude` for `high_duration`, ramps down over
/// `fall_time`. `count` pulses in total.
struct SquareTrain {
    double amplitude = 0.0;
    double rise_time = 100e-12;
    double fall_time = 100e-12;
    double high_duration = 1e-9;
    double period = 2e-9;
    double start = 0.0;
    int count = 1;
    bool operator==(const SquareTrain&) const = default;
};

struct PiecewiseLinear {
    std::vector<std::pair<double, double>> points;  // (t, value), t strictly increasing
    bool operator==(const PiecewiseLinear&) const = default;
};

class Waveform {
public:
    using Variant = std::variant<DcLevel, SquareTrain, PiecewiseLinear>;

    Waveform() : v_(DcLevel{}) {}
    static Waveform dc(double level);
    static Waveform square_train(const SquareTrain& s);
    static Waveform piecewise_linear(std::vector<std::pair<double, double>> points);

    double value(double t) const;
    /// Value used to bias the circuit during the pre-roll before t = 0.
    double initial_value() const { return value(0.0); }
    /// Corner times of the waveform (sorted, unique).
    std::vector<double> breakpoints() const;

    const Variant& variant() const { return v_; }
    bool operator==(const Waveform&) const = default;

private:
    explicit Waveform(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

}  // namespace soen
