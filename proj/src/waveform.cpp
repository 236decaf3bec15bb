#include "soen/waveform.hpp"

#include <algorithm>
#include <cmath>

#include "soen/circuit_model.hpp"

namespace soen {

namespace {

double square_value(const SquareTrain& s, double t) {
    if (t < s.start) return 0.0;
    const double rel = t - s.start;
    long k = s.count > 1 ? static_cast<long>(std::floor(rel / s.period)) : 0;
    if (k >= s.count) k = s.count - 1;
    const double local = rel - static_cast<double>(k) * s.period;
    if (local < s.rise_time) return s.amplitude * local / s.rise_time;
    const double high_end = s.rise_time + s.high_duration;
    if (local <= high_end) return s.amplitude;
    if (local < high_end + s.fall_time) return s.amplitude * (1.0 - (local - high_end) / s.fall_time);
    return 0.0;
}

}  // namespace

Waveform Waveform::dc(double level) { return Waveform(DcLevel{level}); }

Waveform Waveform::square_train(const SquareTrain& s) {
    if (!(s.rise_time > 0.0)) throw ValidationError("rise_time", "square_train rise_time must be > 0");
    if (!(s.fall_time > 0.0)) throw ValidationError("fall_time", "square_train fall_time must be > 0");
    if (!(s.high_duration >= 0.0))
        throw ValidationError("high_duration", "square_train high_duration must be >= 0");
    if (s.count < 1) throw ValidationError("count", "square_train count must be >= 1");
    if (s.count > 1 && !(s.period > s.rise_time + s.high_duration + s.fall_time))
        throw ValidationError("period", "square_train period must exceed rise + high + fall");
    return Waveform(s);
}

Waveform Waveform::piecewise_linear(std::vector<std::pair<double, double>> points) {
    if (points.empty()) throw ValidationError("points", "piecewise_linear needs at least one point");
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (!(points[i].first > points[i - 1].first))
            throw ValidationError("points", "piecewise_linear times must be strictly increasing");
    }
    return Waveform(PiecewiseLinear{std::move(points)});
}

double Waveform::value(double t) const {
    return std::visit(
        [t](const auto& w) -> double {
            using T = std::decay_t<decltype(w)>;
            if constexpr (std::is_same_v<T, DcLevel>) {
                return w.level;
            } else if constexpr (std::is_same_v<T, SquareTrain>) {
                return square_value(w, t);
            } else {
                const auto& p = w.points;
                if (t <= p.front().first) return p.front().second;
                if (t >= p.back().first) return p.back().second;
                auto it = std::upper_bound(p.begin(), p.end(), t,
                                           [](double x, const auto& pt) { return x < pt.first; });
                const auto& b = *it;
                const auto& a = *(it - 1);
                return a.second + (b.second - a.second) * (t - a.first) / (b.first - a.first);
            }
        },
        v_);
}

std::vector<double> Waveform::breakpoints() const {
    std::vector<double> out;
    if (const auto* s = std::get_if<SquareTrain>(&v_)) {
        out.reserve(static_cast<std::size_t>(s->count) * 4);
        for (int k = 0; k < s->count; ++k) {
            const double t0 = s->start + k * s->period;
            out.push_back(t0);
            out.push_back(t0 + s->rise_time);
            out.push_back(t0 + s->rise_time + s->high_duration);
            out.push_back(t0 + s->rise_time + s->high_duration + s->fall_time);
        }
    } else if (const auto* p = std::get_if<PiecewiseLinear>(&v_)) {
        for (const auto& pt : p->points) out.push_back(pt.first);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace soen
